// Acceptance run: one PASS/FAIL line per criterion.  `acceptance [k ...]` runs a subset.
#include <chrono>
#include <climits>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "pipeline.hpp"
#include "qck/abelian.hpp"
#include "qck/cohomology.hpp"

using namespace qck;
using fq::u64;
namespace fs = std::filesystem;

namespace {

// tolerances and budgets
constexpr long ZETA_N = 8;                 // Frobenius precision for criterion 1
constexpr long ZETA_MARGIN = 2;            // congruence checked mod p^(N - 2)
constexpr double ZETA_SECONDS = 60;
constexpr long NS_N = 8;                   // and N + 2 for the stability check
constexpr double NS_SECONDS = 600;
constexpr long UPSILON_P = 29, UPSILON_N = 5;
constexpr double GRAPH_SECONDS = 1;
constexpr double GROUP_SECONDS = 120;
constexpr double SIEVE_SECONDS = 1800;
constexpr long ALPHA_PREC = 3;             // alpha_ij compared mod 61^3
constexpr long CAL_P = 3, CAL_PREC = 5;    // constant compared mod 3^5
constexpr long COLEMAN_N = 10, COLEMAN_LOSS = 3;

struct Outcome {
    bool pass = false;
    std::string detail;
};

RatPoly rp(std::initializer_list<long> c) {
    RatPoly r;
    for (long x : c) r.push_back(x);
    return r;
}

mpq_class q(long a, long b = 1) {
    mpq_class x(a, b);
    x.canonicalize();
    return x;
}

const RatPoly X0_107 = rp({1, 2, 5, 2, -2, -4, -3});
const RatPoly C188 = rp({1, -2, 1, 1, -1, 1});

std::vector<RatPoly> e107_basis() {
    return {rp({-1}), rp({0, 1}), RatPoly{0, 0, q(1, 9), q(3, 9), q(3, 9)}, RatPoly{q(1, 18), 0, q(2, 18), q(3, 18)}};
}

std::string rat_matrix_str(const RatMatrix& m) {
    std::string s = "[";
    for (size_t i = 0; i < m.size(); ++i) {
        s += i ? "; " : "";
        for (size_t j = 0; j < m[i].size(); ++j) s += (j ? " " : "") + m[i][j].get_str();
    }
    return s + "]";
}

// Hecke operator and cup product of X0+(107) at 61 in the E:107 basis
struct E107 {
    PadicMatrix A;
    RatMatrix C;
};
E107 e107(long N) {
    auto model = odd_model_padic(X0_107, 61, 4 * N + 40, 30);
    auto fd = frobenius_matrix(OddCurveQp::from_model(model), N);
    auto M = even_forms_in_odd_basis(model, e107_basis(), 4 * N + 40);
    return {hecke_from_frobenius(M.inverse() * fd.F * M, 61), cup_product_matrix(X0_107, e107_basis())};
}

// ---- 1 ----
Outcome zeta_consistency() {
    // monic quintics with small coefficients and good reduction at 5, 7 and 11
    std::vector<RatPoly> curves;
    for (long c0 = 1; curves.size() < 6 && c0 <= 3; ++c0)
        for (long c1 = -2; curves.size() < 6 && c1 <= 2; ++c1)
            for (long c3 = -1; curves.size() < 6 && c3 <= 1; ++c3) {
                RatPoly f = rp({c0, c1, 0, c3, 0, 1});
                if (good_reduction(f, 5) && good_reduction(f, 7) && good_reduction(f, 11)) curves.push_back(f);
            }
    int checks = 0, bad = 0;
    std::string first_bad;
    for (auto& f : curves)
        for (long p : {5L, 7L, 11L}) {
            auto fd = frobenius_matrix(f, p, ZETA_N, false);
            auto L = lpolynomial(reduce_mod(f, p), p);
            bool zeta = zeta_consistent(fd.F, L, ZETA_N - ZETA_MARGIN);
            auto cp = hecke_charpoly(hecke_from_frobenius(fd.F, p), p);
            long long n1 = count_points(reduce_mod(f, p), p);
            bool trace = -cp[3] == mpz_class((long)(2 * (p + 1 - n1)));
            ++checks;
            if (!zeta || !trace) {
                ++bad;
                if (first_bad.empty()) first_bad = " first failure at p = " + std::to_string(p);
            }
        }
    return {bad == 0 && curves.size() >= 5,
            std::to_string(curves.size()) + " curves x {5, 7, 11}, N = " + std::to_string(ZETA_N) + ": " +
                std::to_string(checks - bad) + "/" + std::to_string(checks) + " consistent" + first_bad};
}

// ---- 2 ----
Outcome ns_reproduction() {
    RatMatrix printed{{0, q(2, 3), -2, 4}, {q(-2, 3), 0, 4, 2}, {2, -4, 0, 0}, {-4, -2, 0, 0}};
    auto d = e107(NS_N), d2 = e107(NS_N + 2);
    auto Z = ns_class(d.A, d.C, 2), Z2 = ns_class(d2.A, d2.C, 2);
    bool stable = Z == Z2;
    std::string detail = "Z = " + rat_matrix_str(Z) + (stable ? ", stable under N -> N+2" : ", NOT stable under N -> N+2");
    if (Z != printed) {
        // the relation to the printed matrix, when there is one
        RatMatrix D{{-1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}};
        auto Zf = rat_mul(rat_mul(D, Z), D);
        mpq_class lam = Zf[0][1] / printed[0][1];
        bool prop = true;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) prop &= Zf[i][j] == lam * printed[i][j];
        if (prop) detail += "; with omega_0 -> -omega_0 it is " + lam.get_str() + " x the expected matrix";
    }
    return {stable && Z == printed, detail};
}

// ---- 3 ----
Outcome symplectic() {
    auto C = cup_product_matrix(X0_107, e107_basis());
    RatMatrix J{{0, 0, 1, 0}, {0, 0, 0, 1}, {-1, 0, 0, 0}, {0, -1, 0, 0}};
    return {C == J, "C = " + rat_matrix_str(C)};
}

// ---- 4 ----
Outcome graph_e161() {
    MetricGraph G;
    G.add_edge("v", "v", 2, "e1");
    G.add_edge("v", "v", 2, "e2");
    bool ok = true;
    std::string detail;
    for (long a : {-4L, 1L, 6L}) {
        BDInput in{{{a, 3}, {5, -a}}, {0}};
        auto mu = bd_measure(G, in);
        bool measure = mu.density[0] == RatPoly{q(a, 2)} && mu.density[1] == RatPoly{q(-a, 2)} && mu.mass[0] == 0;
        auto j = solve_laplacian(mu, GraphPoint::at_vertex(0), G);
        mpq_class m1 = j.eval(G, GraphPoint::on_edge(0, 1)), v = j.eval(G, GraphPoint::at_vertex(0)),
                  m2 = j.eval(G, GraphPoint::on_edge(1, 1));
        bool values = m1 == a && v == 0 && m2 == -a;
        ok &= measure && values;
        if (a == -4) {
            detail = std::string("measure (a/2)(e1 - e2): ") + (measure ? "yes" : "no") + "; values at (P6, P1, P8) = (" +
                     m1.get_str() + ", " + v.get_str() + ", " + m2.get_str() + ") for a = -4";
            auto T = local_height_values(j, G, 7, {{"P1", GraphPoint::at_vertex(0)}, {"P6", GraphPoint::on_edge(0, 1)},
                                                   {"P8", GraphPoint::on_edge(1, 1)}},
                                         LogBranch::iwasawa(UPSILON_P, UPSILON_N), UPSILON_N);
            auto l7 = padic_log(PadicNumber::from_int(7, UPSILON_P, UPSILON_N));
            std::vector<PadicNumber> want{l7.mul_int(-4), PadicNumber::zero(UPSILON_P, UPSILON_N), l7.mul_int(4)};
            bool ups = T.upsilon_padic.size() == 3;
            for (auto& w : want) {
                bool hit = false;
                for (auto& u : T.upsilon_padic) hit |= (u - w).with_prec(UPSILON_N).is_zero();
                ups &= hit;
            }
            std::string js;
            for (auto& u : T.upsilon) js += (js.empty() ? "" : ", ") + u.get_str();
            detail += "; Upsilon_7 = {" + js + "} log 7" + (ups ? "" : " (expected {-4, 0, 4} log 7)");
            ok &= ups;
        }
    }
    return {ok, detail};
}

// ---- 5 ----
Outcome graph_h2_188() {
    MetricGraph G;
    G.add_edge("v0", "v2", q(1, 3));
    G.add_edge("v2", "v1", q(1, 3));
    bool ok = true;
    std::string detail;
    for (long t : {1L, -3L, 5L}) {
        auto mu = bd_measure(G, BDInput{{}, {2 * t, 0, -2 * t}});
        bool masses = mu.mass == std::vector<mpq_class>{t, 0, -t};
        auto j = solve_laplacian(mu, GraphPoint::at_vertex(G.vertex("v1")), G);
        mpq_class j0 = j.at_vertex[G.vertex("v0")], j2 = j.at_vertex[G.vertex("v2")], j1 = j.at_vertex[G.vertex("v1")];
        bool ratio = j1 == 0 && j2 != 0 && j0 == 2 * j2;
        ok &= masses && ratio;
        if (t == 1) detail = "t = 1: (v0, v2, v1) = (" + j0.get_str() + ", " + j2.get_str() + ", " + j1.get_str() + ")";
    }
    return {ok, detail + ", ratio 2 : 1 : 0"};
}

// ---- 6 ----
std::string invariants_str(const std::vector<mpz_class>& inv) {
    std::string s;
    for (auto& x : inv) s += (s.empty() ? "Z/" : " x Z/") + x.get_str();
    return s;
}

Outcome group_structures() {
    auto even = [](long q) {
        auto f = reduce_mod(X0_107, q);
        auto r = fq::roots(f, q);
        return JacobianFq(odd_model_fq(f, r.at(0), q).Q, q);
    };
    auto s61 = jacobian_group_structure(even(61));
    auto s229 = jacobian_group_structure(even(229));
    auto s43 = jacobian_group_structure(JacobianFq(reduce_mod(C188, 43), 43));
    bool ok = s61.invariants == std::vector<mpz_class>{4681} && s229.invariants == std::vector<mpz_class>{244, 244} &&
              s43.invariants == std::vector<mpz_class>{54, 54};
    return {ok, "J(F_61) = " + invariants_str(s61.invariants) + ", J(F_229) = " + invariants_str(s229.invariants) +
                    ", C188: J(F_43) = " + invariants_str(s43.invariants)};
}

// ---- 7 ----
Outcome weierstrass_sieve() {
    SieveCurve C;
    C.f = X0_107;
    C.gens = {RatMumford{rp({0, 1, 1}), rp({1})}, RatMumford{rp({1, 0, 1}), rp({-1, 2})}};
    C.base = std::make_pair(mpq_class(0), mpq_class(1));
    SieveInstance I;
    I.r = 2;
    // 2 * 61, extended by #J(F_61) = 31 * 151 so that the disk's reduction at 61 carries information
    I.M = 2 * 61 * 31 * 151;
    I.multiplier = 1;
    for (long v : {41L, 83L, 641L, 1697L, 4057L, 10853L}) I.primes.push_back(prime_sieve_data(C, v, I.M, 1));
    DiskConstraint disk;
    disk.modulus = 1;
    disk.base = {0, 0};
    disk.local.push_back(prime_sieve_data(C, 61, I.M, 1, std::vector<ReducedPoint>{{false, 30, 0}}));
    auto r = sieve_disk(I, disk);
    std::string tr;
    for (auto& [m, n] : r.trace) tr += " " + std::to_string(m) + ":" + std::to_string(n);
    return {r.verdict == Verdict::Empty, std::string(r.verdict == Verdict::Empty ? "EMPTY" : "UNDECIDED") +
                                             " at level " + std::to_string(r.level) + " (trace" + tr + ", M = " +
                                             std::to_string(I.M) + ")"};
}

// ---- 8 ----
Outcome fixtures() {
    fs::path root = fs::path(QCK_SOURCE_DIR) / "data" / "fixtures";
    fs::path h107 = root / "e107" / "heights.txt", h188 = root / "e188" / "heights.txt", ex107 = root / "e107" / "expansions",
             u107 = root / "e107" / "upsilon.txt";
    std::vector<std::string> missing;
    for (auto& p : {h107, h188, u107})
        if (!fs::exists(p)) missing.push_back(fs::relative(p, QCK_SOURCE_DIR).string());
    if (!fs::is_directory(ex107)) missing.push_back(fs::relative(ex107, QCK_SOURCE_DIR).string() + "/");
    if (!missing.empty()) {
        std::string s = "fixtures not present:";
        for (auto& m : missing) s += " " + m;
        return {false, s};
    }
    using namespace qck::pipeline;
    std::string detail;
    bool ok = true;
    // alpha for E:107, mod 61^3
    long p, N;
    auto rows = parse_height_data(read_file(h107), p, N);
    std::vector<HeightDatum> data;
    for (auto& r : rows) data.push_back({r.D, r.E, r.hp});
    auto h = solve_height_pairing(data);
    auto digits = [](long p, std::initializer_list<long> d) {
        // d_{-1} p^{-1} + d_0 + d_1 p + d_2 p^2
        mpq_class x = 0, pw(1, p);
        for (long k : d) {
            x += k * pw;
            pw *= p;
        }
        return PadicNumber::from_rational(x, p, ALPHA_PREC);
    };
    std::vector<PadicNumber> want{digits(61, {58, 19, 2, 43}), digits(61, {43, 48, 44, 41}), digits(61, {49, 13, 55, 2})};
    auto c = h.coefficients();
    bool alpha = c.size() == 3;
    for (size_t k = 0; alpha && k < 3; ++k) alpha &= (c[k] - want[k]).with_prec(ALPHA_PREC).is_zero();
    ok &= alpha;
    detail += std::string("alpha mod 61^3 ") + (alpha ? "matches" : "differs");
    // constant for E:188, mod 3^5
    auto rows188 = parse_height_data(read_file(h188), p, N);
    auto cal = calibrate_away_constants(rows188);
    auto expect = padic_log(PadicNumber::from_int(2, CAL_P, CAL_PREC + 2)) * PadicNumber::from_rational(q(4, 3), CAL_P, CAL_PREC + 2);
    bool constant = cal.constants.size() == 1 && (cal.constants[0] - expect).with_prec(CAL_PREC).is_zero();
    ok &= constant;
    detail += std::string("; E:188 constant ") + (constant ? "= (4/3) log 2" : "differs from (4/3) log 2");
    // qc-run on E:107
    auto spec = parse_curve_file(read_file(fs::path(QCK_SOURCE_DIR) / "data" / "x0_107" / "x0_107.curve"));
    ExpansionFile ex;
    for (auto& e : fs::directory_iterator(ex107)) {
        if (e.path().extension() != ".exp") continue;
        auto f = parse_expansions(read_file(e.path()));
        if (ex.disks.empty()) ex = f;
        else
            for (auto& dk : f.disks) ex.disks.push_back(dk);
    }
    auto run = run_qc(spec, ex, h, parse_padic_list(read_file(u107), 61, ex.N), nullptr);
    long rational = 0, simple = 0;
    for (auto& k : run.candidates) {
        simple += k.root.root.multiplicity == 1;
        rational += k.root.rational_point;
    }
    bool zeros = rational == 6 && simple == 88 && (long)run.candidates.size() == 88;
    ok &= zeros;
    detail += "; qc-run: " + std::to_string(rational) + " rational + " + std::to_string(simple - rational) + " other simple zeros";
    return {ok, detail};
}

// ---- 9 ----
Outcome properties() {
    std::vector<std::string> failed;
    // Cantor law against the full group
    {
        TestRng rng(91);
        long mismatches = 0;
        for (u64 q : {3ULL, 5ULL, 7ULL, 11ULL}) {
            auto f = oracle::random_squarefree_quintic(rng, q);
            JacobianFq J(f, q);
            auto all = oracle::all_divisors(J);
            std::map<std::vector<u64>, size_t> idx;
            for (size_t i = 0; i < all.size(); ++i) idx[J.key(all[i])] = i;
            if (mpz_class((long)all.size()) != lpolynomial(f, q).at_one()) ++mismatches;
            for (size_t i = 0; i < all.size(); ++i) {
                std::vector<char> seen(all.size(), 0);
                for (size_t j = 0; j < all.size(); ++j) {
                    auto s = J.add(all[i], all[j]);
                    auto it = idx.find(J.key(s));
                    if (!J.is_valid(s) || it == idx.end() || seen[it->second] || !(s == J.add(all[j], all[i]))) {
                        ++mismatches;
                        continue;
                    }
                    seen[it->second] = 1;
                    if (!(J.sub(s, all[j]) == all[i])) ++mismatches;
                }
            }
            for (int t = 0; t < 2000; ++t) {
                auto &a = all[rng.below(all.size())], &b = all[rng.below(all.size())], &c = all[rng.below(all.size())];
                if (!(J.add(J.add(a, b), c) == J.add(a, J.add(b, c)))) ++mismatches;
            }
        }
        if (mismatches) failed.push_back("Cantor law: " + std::to_string(mismatches) + " mismatches");
    }
    // Coleman path additivity
    {
        auto fd = frobenius_matrix(rp({1, 0, -2, -1, 2, 1}), 7, COLEMAN_N);
        TestRng rng(92);
        long worst = LONG_MAX;
        for (int t = 0; t < 50; ++t) {
            auto A = oracle::random_point(rng, fd.curve, 30), B = oracle::random_point(rng, fd.curve, 30),
                 C = oracle::random_point(rng, fd.curve, 30);
            auto ab = basis_integrals(fd, A, B), bc = basis_integrals(fd, B, C), ac = basis_integrals(fd, A, C);
            for (size_t i = 0; i < ab.size(); ++i) {
                auto r = ab[i] + bc[i] - ac[i];
                worst = std::min(worst, r.is_zero() ? r.prec() : r.val());
            }
        }
        if (worst < COLEMAN_N - COLEMAN_LOSS) failed.push_back("Coleman additivity: residual valuation " + std::to_string(worst));
    }
    // log homomorphism
    {
        TestRng rng(93);
        long primes[] = {3, 5, 7, 61};
        int bad = 0;
        for (int it = 0; it < 1000; ++it) {
            long p = primes[it % 4], N = 4 + rng.below(8);
            auto u = random_padic(rng, p, N, -2, 3), w = random_padic(rng, p, N, -2, 3);
            if (!(padic_log(u * w) - padic_log(u) - padic_log(w)).is_zero()) ++bad;
        }
        if (bad) failed.push_back("log homomorphism: " + std::to_string(bad) + " failures");
    }
    // Laplacian round trip
    {
        TestRng rng(94);
        int bad = 0, done = 0;
        while (done < 200) {
            auto G = oracle::random_graph(rng, 1 + (int)rng.below(8), (int)rng.below(4));
            if (G.edges.empty()) continue;
            ++done;
            auto mu = oracle::random_zero_measure(rng, G);
            if (!(laplacian(solve_laplacian(mu, GraphPoint::at_vertex(0), G), G) == mu)) ++bad;
        }
        if (bad) failed.push_back("Laplacian round trip: " + std::to_string(bad) + " failures");
    }
    // sieve against the exhaustive oracle
    {
        TestRng rng(95);
        const RatPoly F = rp({1, -1, 0, 0, 0, 1});
        const std::vector<std::pair<long, long>> pts{{0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
        int bad = 0;
        for (int trial = 0; trial < 100; ++trial) {
            int r = (int)rng.range(1, 2);
            long M = rng.range(2, 8), mult = rng.range(1, 2);
            SieveCurve C;
            C.f = F;
            for (int i = 0; i < r; ++i) {
                auto [x, y] = pts[rng.below(pts.size())];
                C.gens.push_back({rp({-x, 1}), rp({y})});
            }
            if (rng.below(2)) {
                auto [x, y] = pts[rng.below(pts.size())];
                C.base = std::make_pair(mpq_class(x), mpq_class(y));
            }
            std::vector<long> primes{3, 5, 7, 11, 13};
            std::shuffle(primes.begin(), primes.end(), rng.eng);
            primes.resize(rng.range(1, 3));
            SieveInstance I;
            I.r = r;
            I.M = M;
            I.multiplier = mult;
            for (long v : primes) I.primes.push_back(prime_sieve_data(C, v, M, mult, std::nullopt, trial + 1));
            I.targets = oracle::all_tuples(M, r);
            auto got = sieve_cosets(I);
            std::sort(got.begin(), got.end());
            std::vector<oracle::BruteForcePrime> bf;
            for (long v : primes) bf.emplace_back(C, v, M, mult, nullptr);
            std::vector<Tuple> expect;
            for (auto& t : I.targets)
                if (std::all_of(bf.begin(), bf.end(), [&](auto& b) { return b.passes(t); })) expect.push_back(t);
            bad += got != expect;
        }
        if (bad) failed.push_back("sieve oracle: " + std::to_string(bad) + " mismatching instances");
    }
    // find_zeros on constructed factorizations
    {
        TestRng rng(96);
        int bad = 0;
        long ps[] = {5, 7, 61};
        for (int trial = 0; trial < 500; ++trial) {
            long p = ps[trial % 3];
            const long N = 20;
            int k = (int)rng.range(1, 4);
            std::vector<mpz_class> roots;
            for (int i = 0; i < k; ++i) roots.push_back(rng.range(0, p * p * p - 1));
            if (k >= 2 && trial % 5 == 0) roots[1] = roots[0];
            auto f = oracle::root_product(roots, rng.range(1, p - 1), p, N);
            auto z = find_zeros(f);
            long total = 0;
            for (auto& s : z) total += s.multiplicity;
            bool ok = total == k;
            for (auto& r : roots) {
                long expect = std::count(roots.begin(), roots.end(), r);
                bool found = false;
                for (auto& s : z)
                    if ((s.t - PadicNumber::from_int(r, p, N)).with_prec(s.t.prec()).is_zero())
                        found = s.multiplicity == expect;
                ok &= found;
            }
            bad += !ok;
        }
        if (bad) failed.push_back("find_zeros: " + std::to_string(bad) + " wrong factorizations");
    }
    std::string detail = "Cantor (q <= 11), Coleman (50 triples), log (1000 pairs), Laplacian (200 graphs), sieve (100), find_zeros (500)";
    for (auto& f : failed) detail += "; " + f;
    return {failed.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
    struct Criterion {
        int id;
        const char* name;
        double budget;  // seconds
        std::function<Outcome()> run;
    };
    std::vector<Criterion> all{
        {1, "zeta / Eichler-Shimura consistency", ZETA_SECONDS, zeta_consistency},
        {2, "Neron-Severi class of X0+(107)", NS_SECONDS, ns_reproduction},
        {3, "symplectic cup product on the E:107 basis", NS_SECONDS, symplectic},
        {4, "graph heights E:161", GRAPH_SECONDS, graph_e161},
        {5, "graph heights E:h2_188", GRAPH_SECONDS, graph_h2_188},
        {6, "Jacobian group structures", GROUP_SECONDS, group_structures},
        {7, "Weierstrass-disk sieve for X0+(107)", SIEVE_SECONDS, weierstrass_sieve},
        {8, "fixture-contingent heights and qc-run", SIEVE_SECONDS, fixtures},
        {9, "property suites", SIEVE_SECONDS, properties},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    int failures = 0;
    for (auto& c : all) {
        if (!only.empty() && !only.count(c.id)) continue;
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool in_time = secs <= c.budget;
        bool pass = o.pass && in_time;
        failures += !pass;
        char timing[64];
        std::snprintf(timing, sizeof timing, "%.2fs of %.0fs", secs, c.budget);
        std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail << " ["
                  << timing << (in_time ? "" : ", over budget") << "]" << std::endl;
    }
    return failures ? 1 : 0;
}
