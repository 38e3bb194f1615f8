#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "doctest.h"
#include "pipeline.hpp"

using namespace qck;
using namespace qck::pipeline;
namespace fs = std::filesystem;

namespace {

const char* E107_CURVE = R"(label = X0+(107)
f = [1, 2, 5, 2, -2, -4, -3]
p = 61
precision = 6
odd_root = 30
generator a = [0, 1, 1], b = [1]
generator a = [1, 0, 1], b = [-1, 2]
point = 0 1
point = -1 -1
base = 0 1
)";

const char* F5_CURVE = R"(label = f5
f = [1, -1, 0, 0, 0, 1]
p = 7
precision = 6
point = 0 1
point = 1 1
)";

fs::path scratch(const std::string& name) {
    auto d = fs::temp_directory_path() / ("qck-test-" + name + "-" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

int run(const std::string& cmd) {
    int st = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

PadicNumber pz(long n, long p = 7, long N = 6) { return PadicNumber::from_int(n, p, N); }

QCLocalExpansion disk(long x, long y, PadicSeries hp) {
    QCLocalExpansion d;
    d.xbar = x;
    d.ybar = y;
    d.hp = hp;
    d.logs = {{pz(0), pz(1)}, {pz(0), pz(0), pz(1)}};
    return d;
}

}  // namespace

TEST_CASE("curve files") {
    auto s = parse_curve_file(E107_CURVE);
    CHECK(s.label == "X0+(107)");
    CHECK(s.f.size() == 7);
    CHECK(s.f[6] == -3);
    CHECK(s.even());
    CHECK(s.genus() == 2);
    REQUIRE(s.odd_root);
    CHECK(*s.odd_root == 30);
    REQUIRE(s.generators.size() == 2);
    CHECK(s.generators[1].a == RatPoly{1, 0, 1});
    CHECK(s.generators[1].b == RatPoly{-1, 2});
    CHECK(s.points.size() == 2);
    CHECK(s.points[1].first == -1);
    CHECK(s.base->second == 1);
    CHECK_THROWS_AS(parse_curve_file("f = [1, 2, 3, 4, 5, 1]\nbogus = 1\n"), UsageError);
    CHECK_THROWS_AS(parse_curve_file("f = [1, 1, 1]\n"), UsageError);
    auto b = parse_basis_file("# forms\n[-1]\n[0, 1]\n[1/18, 0, 2/18]\n");
    REQUIRE(b.size() == 3);
    CHECK(b[2][0] == mpq_class(1, 18));
}

TEST_CASE("config files") {
    auto c = parse_config("curve = c.curve\np = 61\nN = 8\ngraph 7 = g7.graph\ngraph 2 = /abs/g2.graph\n"
                          "sieve = w.sieve @ 30 0\nsieve = i.sieve @ inf\nsieve = plain.sieve\nsign = minus\npin = true\n",
                          "/cfg");
    CHECK(c.p == 61);
    CHECK(c.N == 8);
    CHECK(c.graphs.size() == 2);
    CHECK(c.resolve(c.graphs[7]) == fs::path("/cfg/g7.graph"));
    CHECK(c.resolve(c.graphs[2]) == fs::path("/abs/g2.graph"));
    REQUIRE(c.sieves.size() == 3);
    CHECK(c.sieves[0].disk == "30 0");
    CHECK(c.sieves[1].disk == "inf");
    CHECK(c.sieves[2].disk.empty());
    CHECK(c.sign == ZSign::Minus);
    CHECK(c.pin);
    CHECK_THROWS_AS(parse_config("sign = sideways\n", "."), UsageError);
    CHECK_THROWS_AS(parse_config("colour = blue\n", "."), UsageError);
    // seeds depend on the config text only
    CHECK(parse_config("p = 61\n", "/a").seed() == parse_config("p = 61\n", "/b").seed());
    CHECK(parse_config("p = 61\n", ".").seed() != parse_config("p = 67\n", ".").seed());

    auto d = scratch("config");
    std::ofstream(d / "c.curve") << E107_CURVE;
    auto ok = parse_config("curve = c.curve\np = 61\n", d);
    CHECK(check_config(ok).empty());
    auto bad = parse_config("curve = c.curve\np = 67\nbasis = missing.basis\ngraph 67 = c.curve\n", d);
    auto probs = check_config(bad);
    CHECK(probs.size() == 3);
    fs::remove_all(d);
}

TEST_CASE("cache: checksums, pins, size limit") {
    auto d = scratch("cache").string();
    // empty cache: no-op
    auto r0 = cache_gc(d, 0);
    CHECK(r0.kept.empty());
    CHECK(r0.evicted.empty());
    CHECK(cache_gc(d + "/absent", 0).kept.empty());

    // two runs differing only in N have distinct keys and are both kept
    auto C = OddCurveQp::from_rational(RatPoly{1, -1, 0, 0, 0, 1}, 7, 6);
    auto k6 = frobenius_cache_key(C, 6), k8 = frobenius_cache_key(C, 8);
    CHECK(k6 != k8);
    PadicMatrix M = PadicMatrix::identity(2, 7, 6);
    cache_store_matrix(d, k6, M);
    cache_store_matrix(d, k8, M);
    cache_store_text(d, "notes.txt", "alpha\nbeta\n");
    std::string body;
    REQUIRE(cache_load_text(d, "notes.txt", body));
    CHECK(body == "alpha\nbeta\n");
    auto r1 = cache_gc(d, 1LL << 30);
    CHECK(r1.kept.size() == 3);
    CHECK(r1.evicted.empty());

    // injected corruption: evicted with a warning
    {
        std::fstream f(fs::path(d) / (k8 + ".mat"), std::ios::in | std::ios::out);
        f.seekp(2);
        f << "#";
    }
    PadicMatrix out;
    CHECK_FALSE(cache_load_matrix(d, k8, out));
    auto r2 = cache_gc(d, 1LL << 30);
    REQUIRE(r2.evicted.size() == 1);
    CHECK(r2.evicted[0] == k8 + ".mat");
    REQUIRE(r2.warnings.size() == 1);
    CHECK(r2.warnings[0].find("checksum") != std::string::npos);
    CHECK_FALSE(fs::exists(fs::path(d) / (k8 + ".mat")));

    // size limit: unpinned entries go, pinned ones stay
    cache_pin(d, k6 + ".mat");
    cache_pin(d, k6 + ".mat");
    auto r3 = cache_gc(d, 0);
    CHECK(r3.kept == std::vector<std::string>{k6 + ".mat"});
    CHECK(r3.evicted == std::vector<std::string>{"notes.txt"});
    CHECK(cache_load_matrix(d, k6, out));
    fs::remove_all(d);
}

TEST_CASE("validate: even models need an odd model at p") {
    auto s = parse_curve_file(E107_CURVE);
    bool ok = false;
    auto r = validate_curve_spec(s, 61, ok);
    CHECK(ok);
    CHECK(r["status"] == "ok");
    CHECK(r["simple_roots_mod_p"] == json::array({30}));
    s.odd_root.reset();
    r = validate_curve_spec(s, 61, ok);
    CHECK_FALSE(ok);
    CHECK(r["status"] == "needs-odd-model");
    CHECK(r["message"].get<std::string>().find("odd_root = 30") != std::string::npos);
    s.odd_root = 31;
    validate_curve_spec(s, 61, ok);
    CHECK_FALSE(ok);
    // 107 is the conductor: bad reduction
    s.odd_root.reset();
    CHECK(validate_curve_spec(s, 107, ok)["status"] == "bad-reduction");
    CHECK(validate_curve_spec(parse_curve_file(F5_CURVE), 7, ok)["status"] == "ok");
    CHECK(ok);
}

TEST_CASE("cohomology: explicit basis agrees with the default one") {
    auto s = parse_curve_file(F5_CURVE);
    auto d = run_cohomology(s, 7, 6, nullptr, ZSign::Plus, "");
    std::vector<RatPoly> half{{mpq_class(1, 2)}, {0, mpq_class(1, 2)}, {0, 0, mpq_class(1, 2)}, {0, 0, 0, mpq_class(1, 2)}};
    auto e = run_cohomology(s, 7, 6, &half, ZSign::Plus, "");
    CHECK(d.C == e.C);
    // no real multiplication: T_p does not give a Neron-Severi class
    CHECK(d.Z.empty());
    CHECK_FALSE(d.z_error.empty());
    CHECK(d.charpoly == e.charpoly);
    for (size_t i = 0; i < 4; ++i)
        for (size_t j = 0; j < 4; ++j) CHECK((d.F(i, j) - e.F(i, j)).with_prec(5).is_zero());
    // doubling the basis scales C by 4 and leaves F alone
    std::vector<RatPoly> twice{{1}, {0, 1}, {0, 0, 1}, {0, 0, 0, 1}};
    auto t = run_cohomology(s, 7, 6, &twice, ZSign::Plus, "");
    for (size_t i = 0; i < 4; ++i)
        for (size_t j = 0; j < 4; ++j) {
            CHECK(t.C[i][j] == 4 * d.C[i][j]);
            CHECK((t.F(i, j) - d.F(i, j)).with_prec(5).is_zero());
        }
    // Tr A_p = 2(p + 1 - #X(F_p)) for the Hecke operator in any basis
    long long n1 = count_points(reduce_mod(s.f, 7), 7);
    CHECK(d.charpoly[3] == mpz_class((long)(-2 * (8 - n1))));
    auto even = parse_curve_file(E107_CURVE);
    CHECK_THROWS_AS(run_cohomology(even, 61, 6, nullptr, ZSign::Plus, ""), UsageError);
}

TEST_CASE("coleman stage: path additivity through the file interface") {
    auto s = parse_curve_file(F5_CURVE);
    auto a = coleman_integrals(s, 7, 6, "0,1", "1,1");
    auto b = coleman_integrals(s, 7, 6, "1,1", "-1,1");
    auto c = coleman_integrals(s, 7, 6, "0,1", "-1,1");
    REQUIRE(a.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK((a[i] + b[i] - c[i]).val() >= 3);
    CHECK_THROWS_AS(coleman_integrals(s, 7, 6, "0,1", "2,2"), UsageError);
}

TEST_CASE("pairing and height data files") {
    std::string data = "qck-heights 1\np 7\nN 6\n"
                       "row D = [1, 0] E = [1, 0] h = 3\n"
                       "row D = [0, 1] E = [0, 1] h = 5\n"
                       "row D = [1, 1] E = [1, 0] h = 4\n";
    long p, N;
    auto rows = parse_height_data(data, p, N);
    CHECK(p == 7);
    REQUIRE(rows.size() == 3);
    auto cal = run_pairing(rows);
    cal.pairing.p = p;
    cal.pairing.N = N;
    auto c = cal.pairing.coefficients();
    CHECK(c[0].equals(pz(3)));
    CHECK(c[2].equals(pz(5)));
    // h((1,1),(1,0)) = a00 + a01/2 = 4
    CHECK(c[1].equals(pz(2)));
    auto back = parse_pairing(write_pairing(cal));
    for (int k = 0; k < 3; ++k) CHECK(back.coefficients()[k].equals(c[k]));
    CHECK_THROWS_AS(run_pairing({rows[0], rows[1]}), InsufficientData);
    CHECK_THROWS_AS(parse_height_data("row D = [1] E = [1] h = 1\n", p, N), UsageError);
}

TEST_CASE("qc run: matching, cosets and sieve elimination") {
    auto s = parse_curve_file(F5_CURVE);
    ExpansionFile ex;
    ex.p = 7;
    ex.N = 6;
    ex.g = 2;
    ex.disks = {disk(1, 1, {pz(0), pz(1)}), disk(2, 3, {pz(-7), pz(1)}), disk(0, 1, {pz(-49), pz(1)})};
    HeightPairing h = HeightPairing::from_coefficients(2, {pz(0), pz(0), pz(0)});
    h.p = 7;
    h.N = 6;
    std::vector<LogVector> gens{{pz(1), pz(0)}, {pz(0), pz(1)}};
    auto q = run_qc(s, ex, h, {pz(0)}, &gens);
    REQUIRE(q.candidates.size() == 3);
    CHECK(q.candidates[0].status == "RATIONAL-MATCHED");
    CHECK(q.candidates[1].status == "UNDECIDED");
    // x = 0 is its own Teichmuller lift, so t = 0 is the rational point, not t = 7
    CHECK(q.candidates[2].status == "UNDECIDED");
    REQUIRE(q.unmatched_points.size() == 1);
    CHECK(q.unmatched_points[0] == "(0, 1)");
    // coset: log(x(t)) = (t, t^2) for t = 1*7
    REQUIRE(q.candidates[1].root.coset.size() == 2);
    CHECK(q.candidates[1].root.coset[0].equals(pz(7)));
    CHECK(q.candidates[1].root.coset[1].equals(pz(49)));

    SieveRun diskrun;
    diskrun.has_disk = true;
    diskrun.disk = "2 3";
    diskrun.file = "d.sieve";
    diskrun.verdict.verdict = Verdict::Empty;
    SieveRun cosets;
    cosets.M = 14;
    cosets.survivors = {{1, 0}, {3, 5}};  // mod 7: (1, 0), (3, 5)
    auto q2 = q;
    apply_sieves(q2, {diskrun}, 7);
    CHECK(q2.candidates[0].status == "RATIONAL-MATCHED");
    CHECK(q2.candidates[1].status == "ELIMINATED");
    CHECK(q2.candidates[2].status == "UNDECIDED");
    // coset of disk (0,1): (49, 2401) = (0, 0) mod 7, not among the survivors
    auto q3 = q;
    apply_sieves(q3, {cosets}, 7);
    CHECK(q3.candidates[1].status == "ELIMINATED");
    CHECK(q3.candidates[2].status == "ELIMINATED");
    // modulo 49 the two cosets differ: (7, 0) survives, (0, 0) does not
    cosets.M = 98;
    cosets.survivors = {{7, 0}, {56, 49}};
    auto q4 = q;
    apply_sieves(q4, {cosets}, 7);
    CHECK(q4.candidates[1].status == "UNDECIDED");
    CHECK(q4.candidates[2].status == "ELIMINATED");
    // M prime to p carries no information about the p-adic coset
    cosets.M = 6;
    cosets.survivors.clear();
    auto q5 = q;
    apply_sieves(q5, {cosets}, 7);
    CHECK(q5.candidates[2].status == "UNDECIDED");
}

TEST_CASE("upsilon from several graphs") {
    GraphHeights a, b;
    a.table.upsilon_padic = {pz(0), pz(2)};
    b.table.upsilon_padic = {pz(0), pz(3), pz(-3)};
    auto u = combine_upsilon({a, b}, 7, 6);
    CHECK(u.size() == 6);
    CHECK(combine_upsilon({}, 7, 6).size() == 1);
    b.table.upsilon_padic = {pz(0), pz(2)};
    CHECK(combine_upsilon({a, b}, 7, 6).size() == 3);  // 0, 2, 4
}

TEST_CASE("sieve stage records are deterministic") {
    std::string inst = "qck-sieve 1\nM 6\nr 1\nmultiplier 1\ncurve = [1, -1, 0, 0, 0, 1]\n"
                       "generator = [0, 1] [1]\nprimes = [3, 5, 11]\ntargets all\ncompute\n";
    auto a = run_sieve(inst), b = run_sieve(inst);
    CHECK(sieve_record(a).dump() == sieve_record(b).dump());
    CHECK_FALSE(a.has_disk);
    // the base point is infinity and [(0,1) - inf] is the generator: tuple 1 survives
    CHECK(std::find(a.survivors.begin(), a.survivors.end(), Tuple{1}) != a.survivors.end());
}

TEST_CASE("qck command line: exit codes and artifacts") {
    std::string bin = QCK_BIN;
    auto d = scratch("cli");
    std::ofstream(d / "e.curve") << "label = X0+(107)\nf = [1, 2, 5, 2, -2, -4, -3]\np = 61\nprecision = 6\n";
    std::ofstream(d / "f5.curve") << F5_CURVE;
    // even model: validate asks for the odd-model conversion
    CHECK(run(bin + " validate --curve " + (d / "e.curve").string()) == 1);
    CHECK(run(bin + " validate --curve " + (d / "f5.curve").string()) == 0);
    CHECK(run(bin + " coleman --curve " + (d / "f5.curve").string() + " --from 0,1 --to 1,1") == 0);
    CHECK(run(bin + " coleman --curve " + (d / "f5.curve").string() + " --from 0,1") == 1);

    // report without expansions: only the sieve runs, and the exit code marks a partial run
    std::ofstream(d / "s.sieve") << "qck-sieve 1\nM 6\nr 1\nmultiplier 1\ncurve = [1, -1, 0, 0, 0, 1]\n"
                                    "generator = [0, 1] [1]\nprimes = [3, 5, 11]\ntargets all\ncompute\n";
    std::ofstream(d / "qck.conf") << "curve = f5.curve\np = 7\nN = 6\nexpansions = exp\nsieve = s.sieve\noutput = out\n";
    std::string conf = " --config " + (d / "qck.conf").string() + " --quiet";
    CHECK(run(bin + " report" + conf) == 4);
    REQUIRE(fs::exists(d / "out" / "report.jsonl"));
    std::string first;
    {
        std::ifstream in(d / "out" / "report.jsonl");
        std::ostringstream s;
        s << in.rdbuf();
        first = s.str();
    }
    CHECK(first.find("\"partial\":true") != std::string::npos);
    // identical config: byte-identical records
    CHECK(run(bin + " report" + conf) == 4);
    {
        std::ifstream in(d / "out" / "report.jsonl");
        std::ostringstream s;
        s << in.rdbuf();
        CHECK(s.str() == first);
    }
    // a later stage does not touch an earlier stage's artifacts
    CHECK(run(bin + " sieve" + conf) == 0);
    auto t = fs::last_write_time(d / "out" / "sieve.jsonl");
    CHECK(run(bin + " report" + conf) == 4);
    CHECK(fs::last_write_time(d / "out" / "sieve.jsonl") == t);

    // qc-run with expansions but no pairing names the stage to run first
    fs::create_directories(d / "exp");
    std::ofstream(d / "exp" / "a.exp") << "qck-expansions 1\np 7\nN 6\ng 2\ndisk 1 1\nhp = [0, 1]\nlog1 = [0, 1]\nlog2 = [0, 0, 1]\n";
    std::ofstream(d / "qck2.conf") << "curve = f5.curve\np = 7\nN = 6\nexpansions = exp\npairing = pairing.txt\nupsilon = u.txt\n";
    std::string conf2 = " --config " + (d / "qck2.conf").string() + " --quiet";
    CHECK(run(bin + " qc-run" + conf2) == 1);
    std::ofstream(d / "pairing.txt") << "qck-pairing 1\np 7\nN 6\ng 2\nalpha = [0, 0, 0]\n";
    std::ofstream(d / "u.txt") << "upsilon = [0]\n";
    CHECK(run(bin + " qc-run" + conf2) == 0);  // the only root is the rational point (1, 1)
    std::ofstream(d / "u.txt") << "upsilon = [0, 7]\n";
    CHECK(run(bin + " qc-run" + conf2) == 2);
    // constant term known to no digits: the root cannot be isolated, precision failure
    std::ofstream(d / "exp" / "a.exp") << "qck-expansions 1\np 7\nN 6\ng 2\ndisk 1 1\nhp = [v:inf u:0 mod p^0, 1]\nlog1 = [0, 1]\nlog2 = [0, 0, 1]\n";
    std::ofstream(d / "u.txt") << "upsilon = [0]\n";
    int rc = run(bin + " qc-run" + conf2);
    CHECK(rc == 3);
    fs::remove_all(d);
}
