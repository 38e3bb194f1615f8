#include "qck/mwsieve.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "qck/abelian.hpp"

namespace qck {

namespace {

struct TupleHash {
    size_t operator()(const Tuple& t) const {
        size_t h = 1469598103934665603ULL;
        for (long x : t) h = (h ^ (size_t)x) * 1099511628211ULL;
        return h;
    }
};
using TupleSet = std::unordered_set<Tuple, TupleHash>;

long modp(long a, long m) {
    long r = a % m;
    return r < 0 ? r + m : r;
}

mpz_class to_fq(const mpq_class& c, long v) {
    mpz_class d = c.get_den(), inv;
    if (mpz_invert(inv.get_mpz_t(), d.get_mpz_t(), mpz_class(v).get_mpz_t()) == 0)
        throw CurveError(CurveError::BadReduction, "denominator divisible by " + std::to_string(v));
    mpz_class r = c.get_num() * inv % v;
    if (r < 0) r += v;
    return r;
}

fq::Poly reduce_poly(const RatPoly& a, long v) {
    fq::Poly out;
    for (auto& c : a) out.push_back(to_fq(c, v).get_ui());
    fq::trim(out);
    return out;
}

// coordinates of the projection to J/LJ, one per modulus
struct QuotientMap {
    const JacobianFq* J;
    std::unique_ptr<JacobianGroup> G;
    std::vector<std::pair<size_t, std::vector<long>>> parts;  // sylow index, modulus per invariant
    std::vector<long> moduli;
    Tuple coords(const MumfordDivisor& x) const {
        Tuple t;
        for (auto& [k, mods] : parts) {
            auto c = G->sylow_coords(k, x);
            for (size_t i = 0; i < mods.size(); ++i) t.push_back(mpz_class(c[i] % mods[i]).get_si());
        }
        return t;
    }
};

QuotientMap quotient_map(const JacobianFq& J, const mpz_class& order, long M, double queries, uint64_t seed) {
    QuotientMap Q{&J, nullptr, {}, {}};
    std::vector<mpz_class> ells;
    for (auto& [ell, e] : factor_trial(mpz_class(M)))
        if (order % ell == 0) ells.push_back(ell);
    if (ells.empty()) return Q;
    Q.G = std::make_unique<JacobianGroup>(J, order, seed, queries, ells);
    auto& parts = Q.G->sylow();
    for (size_t k = 0; k < parts.size(); ++k) {
        long lk = 1;
        for (long m = M; m % parts[k].ell.get_si() == 0; m /= parts[k].ell.get_si()) lk *= parts[k].ell.get_si();
        std::vector<long> mods;
        for (auto& d : parts[k].invariants) {
            mpz_class g = gcd(d, mpz_class(lk));
            mods.push_back(g.get_si());
        }
        Q.parts.push_back({k, mods});
        for (long m : mods) Q.moduli.push_back(m);
    }
    return Q;
}

// the projection of a PrimeSieveData to level L | M
struct Level {
    std::vector<long> mods;
    std::vector<Tuple> gens;
    TupleSet image;
    bool trivial = true;
};

Level at_level(const PrimeSieveData& d, long L) {
    Level lv;
    for (long m : d.moduli) {
        long g = std::gcd(m, L);
        lv.mods.push_back(g);
        if (g > 1) lv.trivial = false;
    }
    auto red = [&](const Tuple& t) {
        Tuple s(t.size());
        for (size_t k = 0; k < t.size(); ++k) s[k] = modp(t[k], lv.mods[k]);
        return s;
    };
    for (auto& g : d.gens) lv.gens.push_back(red(g));
    for (auto& x : d.image) lv.image.insert(red(x));
    return lv;
}

bool level_passes(const Level& lv, const Tuple& a) {
    if (lv.trivial) return true;
    Tuple s(lv.mods.size(), 0);
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t k = 0; k < s.size(); ++k) s[k] = (s[k] + (a[i] % lv.mods[k]) * lv.gens[i][k]) % lv.mods[k];
    return lv.image.count(s) > 0;
}

void check_data(const PrimeSieveData& d, int r) {
    if ((int)d.gens.size() != r) throw SieveError("prime " + std::to_string(d.v) + ": need one image per generator");
    auto ok = [&](const Tuple& t) {
        if (t.size() != d.moduli.size()) return false;
        for (size_t k = 0; k < t.size(); ++k)
            if (t[k] < 0 || t[k] >= d.moduli[k]) return false;
        return true;
    };
    for (long m : d.moduli)
        if (m < 1 || (d.order != 0 && d.order % m != 0))
            throw SieveError("prime " + std::to_string(d.v) + ": modulus " + std::to_string(m) +
                             " inconsistent with the group order");
    for (auto& g : d.gens)
        if (!ok(g)) throw SieveError("prime " + std::to_string(d.v) + ": generator image outside the group");
    for (auto& x : d.image)
        if (!ok(x)) throw SieveError("prime " + std::to_string(d.v) + ": curve image outside the group");
}

}  // namespace

std::vector<MumfordDivisor> abel_jacobi_image(const JacobianFq& J, const MumfordDivisor& base) {
    std::vector<MumfordDivisor> out;
    std::set<std::vector<fq::u64>> seen;
    auto push = [&](const MumfordDivisor& x) {
        if (seen.insert(J.key(x)).second) out.push_back(x);
    };
    push(J.neg(base));
    for (auto& [x, y] : J.affine_points()) push(J.sub(J.point(x, y), base));
    return out;
}

PrimeSieveData prime_sieve_data(const SieveCurve& C, long v, long M, long multiplier,
                                const std::optional<std::vector<ReducedPoint>>& only, uint64_t seed) {
    if (!good_reduction(C.f, v)) throw CurveError(CurveError::BadReduction, "bad reduction at " + std::to_string(v));
    fq::Poly fe = reduce_poly(C.f, v);
    const fq::u64 q = v;
    std::optional<OddModelFq> om;
    fq::Poly Q = fe;
    if (C.even()) {
        fq::u64 r = 0;
        while (r < q && fq::eval(fe, r, q) != 0) ++r;
        if (r == q) throw SieveError("no F_" + std::to_string(v) + "-rational Weierstrass point for an odd model");
        om = odd_model_fq(fe, r, q);
        Q = om->Q;
    }
    JacobianFq J(Q, q);
    // [P - W] on the odd model, W its point at infinity
    auto to_odd = [&](const ReducedPoint& P) -> MumfordDivisor {
        if (!om) return P.infinite ? J.zero() : J.point(P.x, P.y);
        if (P.infinite) {
            auto [U, V] = om->map_infinity(P.y);
            return J.point(U, V);
        }
        if ((fq::u64)P.x == om->r) return J.zero();
        auto [U, V] = om->map_point(P.x, P.y);
        return J.point(U, V);
    };
    MumfordDivisor base = J.zero();
    if (C.base) base = to_odd({false, to_fq(C.base->first, v).get_si(), to_fq(C.base->second, v).get_si()});
    else if (om) throw SieveError("even models need an affine base point");

    std::vector<ReducedPoint> pts;
    if (only) pts = *only;
    else {
        auto st = fq::sqrt_table(q);
        for (fq::u64 x = 0; x < q; ++x) {
            fq::u64 y2 = fq::eval(fe, x, q);
            if (st[y2] == UINT32_MAX) continue;
            pts.push_back({false, (long)x, (long)st[y2]});
            if (y2) pts.push_back({false, (long)x, (long)(q - st[y2])});
        }
        if (om) {
            fq::u64 lc = fe.back();
            if (st[lc] != UINT32_MAX) {
                pts.push_back({true, 0, (long)st[lc]});
                pts.push_back({true, 0, (long)(q - st[lc])});
            }
        } else {
            pts.push_back({true, 0, 0});
        }
    }

    PrimeSieveData d;
    d.v = v;
    d.order = lpolynomial(Q, q).at_one();
    QuotientMap qm = quotient_map(J, d.order, M, (double)pts.size() + C.gens.size(), seed);
    d.moduli = qm.moduli;
    for (auto& g : C.gens) {
        MumfordDivisor D = om ? map_mumford_to_odd(*om, reduce_poly(g.a, v), reduce_poly(g.b, v))
                              : MumfordDivisor{reduce_poly(g.a, v), reduce_poly(g.b, v)};
        if (!J.is_valid(D)) throw SieveError("generator does not reduce to a divisor at " + std::to_string(v));
        d.gens.push_back(qm.G ? qm.coords(D) : Tuple{});
    }
    TupleSet seen;
    for (auto& P : pts) {
        MumfordDivisor x = J.mul(J.sub(to_odd(P), base), (long long)multiplier);
        Tuple t = qm.G ? qm.coords(x) : Tuple{};
        if (seen.insert(t).second) d.image.push_back(t);
    }
    std::sort(d.image.begin(), d.image.end());
    return d;
}

std::vector<size_t> sieve_order(const SieveInstance& I) {
    std::vector<size_t> idx(I.primes.size());
    std::iota(idx.begin(), idx.end(), 0);
    auto info = [&](size_t k) {
        auto& d = I.primes[k];
        if (d.order != 0) return mpz_class(gcd(d.order, mpz_class(I.M))).get_si();
        long s = 1;
        for (long m : d.moduli) s *= std::gcd(m, I.M);
        return s;
    };
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        long ia = info(a), ib = info(b);
        if (ia != ib) return ia > ib;
        return I.primes[a].v < I.primes[b].v;
    });
    return idx;
}

bool passes(const PrimeSieveData& d, const Tuple& a, long L) { return level_passes(at_level(d, L), a); }

std::vector<Tuple> sieve_cosets(const SieveInstance& I) {
    if (I.M < 1) throw SieveError("modulus must be positive");
    for (auto& d : I.primes) check_data(d, I.r);
    std::vector<Tuple> alive;
    for (auto& t : I.targets) {
        if ((int)t.size() != I.r) throw SieveError("target of wrong length");
        Tuple s;
        for (long x : t) s.push_back(modp(x, I.M));
        alive.push_back(s);
    }
    for (size_t k : sieve_order(I)) {
        Level lv = at_level(I.primes[k], I.M);
        std::vector<Tuple> next;
        for (auto& t : alive)
            if (level_passes(lv, t)) next.push_back(t);
        alive.swap(next);
        if (alive.empty()) break;
    }
    return alive;
}

// ---- disk constraints ----

DiskConstraint padic_disk_constraint(const std::vector<LogVector>& gen_logs, const LogVector& center_log,
                                     const std::vector<long>& e, long multiplier, long p) {
    size_t g = center_log.size();
    if (gen_logs.size() != g || e.size() != g) throw std::invalid_argument("need g generator logs and bounds");
    // K = G D^{-1}, w = m L_c D^{-1}
    std::vector<std::vector<PadicNumber>> K(g, std::vector<PadicNumber>(g));
    std::vector<PadicNumber> w(g);
    for (size_t j = 0; j < g; ++j) {
        for (size_t i = 0; i < g; ++i) K[i][j] = gen_logs[i][j].shift(-e[j]);
        w[j] = center_log[j].mul_int(multiplier).shift(-e[j]);
    }
    long top = 1;
    for (auto& row : K)
        for (auto& x : row) top = std::max(top, x.prec());
    // R K C = S with R, C unimodular; track R (rows) and C (applied to w)
    std::vector<std::vector<PadicNumber>> R(g, std::vector<PadicNumber>(g));
    for (size_t i = 0; i < g; ++i)
        for (size_t j = 0; j < g; ++j) R[i][j] = PadicNumber::from_int(i == j ? 1 : 0, p, top);
    for (size_t k = 0; k < g; ++k) {
        size_t bi = g, bj = g;
        long bv = PadicNumber::INF_VAL;
        for (size_t i = k; i < g; ++i)
            for (size_t j = k; j < g; ++j)
                if (!K[i][j].is_zero() && K[i][j].val() < bv) bv = K[i][j].val(), bi = i, bj = j;
        if (bi == g) throw SieveError("generator logarithms are dependent to the working precision");
        std::swap(K[k], K[bi]);
        std::swap(R[k], R[bi]);
        for (auto& row : K) std::swap(row[k], row[bj]);
        std::swap(w[k], w[bj]);
        for (size_t i = k + 1; i < g; ++i) {
            if (K[i][k].is_zero()) continue;
            PadicNumber f = K[i][k] / K[k][k];
            for (size_t j = k; j < g; ++j) K[i][j] -= f * K[k][j];
            for (size_t j = 0; j < g; ++j) R[i][j] -= f * R[k][j];
        }
        for (size_t j = k + 1; j < g; ++j) {
            if (K[k][j].is_zero()) continue;
            PadicNumber f = K[k][j] / K[k][k];
            for (size_t i = k; i < g; ++i) K[i][j] -= f * K[i][k];
            w[j] -= f * w[k];
        }
    }
    // b_i S_ii - w_i integral, a = b R
    DiskConstraint c;
    c.modulus = p;
    std::vector<long> beta(g, 0);
    std::vector<bool> free(g, false);
    for (size_t i = 0; i < g; ++i) {
        long s = K[i][i].val();
        if (s >= 0) {
            free[i] = true;
            if (!w[i].is_zero() && w[i].val() < 0) c.empty = true;
        } else {
            PadicNumber b = w[i] / K[i][i];
            if (!b.is_zero() && b.val() < 0) c.empty = true;
            else if (!b.is_zero() && b.val() == 0) beta[i] = mpz_class(b.unit() % p).get_si();
            if (b.prec() < 1) throw PrecisionError("disk constraint: insufficient precision");
        }
    }
    auto red = [&](const PadicNumber& x) -> long {
        if (x.is_zero()) return 0;
        if (x.val() < 0) throw SieveError("non-integral reduction matrix");
        if (x.val() > 0) return 0;
        return modp(mpz_class(x.unit() % p).get_si(), p);
    };
    c.base.assign(g, 0);
    for (size_t i = 0; i < g; ++i)
        for (size_t j = 0; j < g; ++j) c.base[j] = modp(c.base[j] + beta[i] * red(R[i][j]), p);
    for (size_t i = 0; i < g; ++i)
        if (free[i]) {
            Tuple t(g);
            for (size_t j = 0; j < g; ++j) t[j] = red(R[i][j]);
            c.gens.push_back(t);
        }
    return c;
}

namespace {

// elements of base + <gens> in (Z/m)^r
TupleSet coset_elements(const DiskConstraint& c, int r) {
    TupleSet out;
    Tuple b = c.base.empty() ? Tuple(r, 0) : c.base;
    for (auto& x : b) x = modp(x, c.modulus);
    std::vector<Tuple> frontier{b};
    out.insert(b);
    while (!frontier.empty()) {
        std::vector<Tuple> next;
        for (auto& t : frontier)
            for (auto& g : c.gens) {
                Tuple s(r);
                for (int i = 0; i < r; ++i) s[i] = modp(t[i] + g[i], c.modulus);
                if (out.insert(s).second) next.push_back(s);
            }
        frontier.swap(next);
        if (out.size() > 50000000) throw SieveError("disk constraint coset too large to enumerate");
    }
    return out;
}

}  // namespace

DiskVerdict sieve_disk(const SieveInstance& I, const DiskConstraint& c, size_t max_witnesses) {
    if (I.M % c.modulus) throw SieveError("constraint modulus must divide M");
    for (auto& d : I.primes) check_data(d, I.r);
    for (auto& d : c.local) check_data(d, I.r);
    DiskVerdict out;
    if (c.empty) {
        out.verdict = Verdict::Empty;
        return out;
    }
    std::vector<const PrimeSieveData*> all;
    for (size_t k : sieve_order(I)) all.push_back(&I.primes[k]);
    for (auto& d : c.local) all.push_back(&d);
    // Only the prime factors of M that some prime carries information about are lifted.  By
    // CRT the constraint coset splits into prime-power parts, and the part at an uninformative
    // prime is satisfiable on its own, so only the informative part mi of the modulus is kept.
    auto informative = [&](long ell) {
        for (auto* d : all)
            for (long m : d->moduli)
                if (m % ell == 0) return true;
        return false;
    };
    long mi = 1;
    std::vector<long> steps;
    for (auto& [ell, e] : factor_trial(mpz_class(c.modulus)))
        if (informative(ell.get_si()))
            for (int k = 0; k < e; ++k) steps.push_back(ell.get_si()), mi *= ell.get_si();
    long rest = I.M / c.modulus;
    for (auto& [ell, e] : factor_trial(mpz_class(rest)))
        if (informative(ell.get_si()))
            for (int k = 0; k < e; ++k) steps.push_back(ell.get_si());
    TupleSet coset;
    if (mi > 1) {
        DiskConstraint ci = c;
        ci.modulus = mi;
        coset = coset_elements(ci, I.r);
    }

    std::vector<Tuple> alive{Tuple(I.r, 0)};
    long L = 1;
    for (long ell : steps) {
        long L2 = L * ell;
        std::vector<Tuple> next;
        // lift: a + L * (0..ell-1)^r
        for (auto& t : alive) {
            Tuple s = t;
            std::function<void(int)> rec = [&](int i) {
                if (i == I.r) {
                    next.push_back(s);
                    return;
                }
                for (long k = 0; k < ell; ++k) {
                    s[i] = t[i] + k * L;
                    rec(i + 1);
                }
            };
            rec(0);
        }
        if (mi > 1 && L2 == mi) {
            std::vector<Tuple> kept;
            for (auto& t : next)
                if (coset.count(t)) kept.push_back(t);
            next.swap(kept);
        }
        for (auto* d : all) {
            Level lv = at_level(*d, L2);
            if (lv.trivial) continue;
            std::vector<Tuple> kept;
            for (auto& t : next)
                if (level_passes(lv, t)) kept.push_back(t);
            next.swap(kept);
            if (next.empty()) break;
        }
        alive.swap(next);
        L = L2;
        out.trace.push_back({L, alive.size()});
        out.level = L;
        if (alive.empty()) break;
    }
    if (alive.empty()) {
        out.verdict = Verdict::Empty;
        return out;
    }
    out.verdict = Verdict::Undecided;
    std::sort(alive.begin(), alive.end());
    for (size_t k = 0; k < alive.size() && k < max_witnesses; ++k) out.witnesses.push_back(alive[k]);
    return out;
}

// ---- files ----

namespace {

std::vector<std::string> split_list(std::string s) {
    // "[a, b, [c]]" top-level items
    auto l = s.find('['), r = s.rfind(']');
    if (l == std::string::npos || r == std::string::npos || r < l) throw SieveError("expected a bracketed list: " + s);
    s = s.substr(l + 1, r - l - 1);
    std::vector<std::string> out;
    int depth = 0;
    std::string cur;
    for (char ch : s) {
        if (ch == '[') ++depth;
        if (ch == ']') --depth;
        if (ch == ',' && depth == 0) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    auto trim = [](std::string x) {
        size_t a = x.find_first_not_of(" \t"), b = x.find_last_not_of(" \t");
        return a == std::string::npos ? std::string() : x.substr(a, b - a + 1);
    };
    for (auto& x : out) x = trim(x);
    cur = trim(cur);
    if (!cur.empty() || !out.empty()) out.push_back(cur);
    return out;
}

Tuple parse_tuple(const std::string& s) {
    Tuple t;
    for (auto& x : split_list(s)) t.push_back(std::stol(x));
    return t;
}

RatPoly parse_ratpoly(const std::string& s) {
    RatPoly p;
    for (auto& x : split_list(s)) {
        mpq_class q(x);
        q.canonicalize();
        p.push_back(q);
    }
    return p;
}

std::string tuple_str(const Tuple& t) {
    std::string s = "[";
    for (size_t i = 0; i < t.size(); ++i) s += (i ? ", " : "") + std::to_string(t[i]);
    return s + "]";
}

// all tuples in (Z/M)^r
std::vector<Tuple> all_tuples(long M, int r) {
    std::vector<Tuple> out{Tuple()};
    for (int i = 0; i < r; ++i) {
        std::vector<Tuple> next;
        for (auto& t : out)
            for (long k = 0; k < M; ++k) {
                Tuple s = t;
                s.push_back(k);
                next.push_back(s);
            }
        out.swap(next);
    }
    return out;
}

}  // namespace

SieveInstance parse_sieve_instance(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    SieveInstance I;
    bool header = false, all = false, compute = false;
    SieveCurve C;
    std::vector<long> primes;
    PrimeSieveData* cur = nullptr;
    std::vector<PrimeSieveData> local;
    std::vector<std::pair<long, std::vector<ReducedPoint>>> disk_primes;
    DiskConstraint disk;
    bool has_disk = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line = line.substr(0, h);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        std::string rest;
        std::getline(ls, rest);
        if (auto eq = rest.find('='); eq != std::string::npos && rest.substr(0, eq).find_first_not_of(" ") == std::string::npos)
            rest = rest.substr(eq + 1);
        auto fail = [&](const std::string& m) {
            throw SieveError("sieve instance line " + std::to_string(lineno) + ": " + m);
        };
        try {
            if (!header) {
                if (key != "qck-sieve" || std::stoi(rest) != 1) fail("expected header 'qck-sieve 1'");
                header = true;
            } else if (key == "M") {
                I.M = std::stol(rest);
            } else if (key == "r") {
                I.r = std::stoi(rest);
            } else if (key == "multiplier") {
                I.multiplier = std::stol(rest);
            } else if (key == "prime" || key == "local") {
                auto& list = key == "prime" ? I.primes : local;
                list.push_back({});
                cur = &list.back();
                cur->v = std::stol(rest);
                has_disk |= key == "local";
            } else if (key == "order" || key == "moduli" || key == "gen" || key == "image") {
                if (!cur) fail(key + " outside a prime block");
                if (key == "order") cur->order = mpz_class(rest.substr(rest.find_first_not_of(" ")));
                if (key == "moduli") cur->moduli = parse_tuple(rest);
                if (key == "gen") cur->gens.push_back(parse_tuple(rest));
                if (key == "image") cur->image.push_back(parse_tuple(rest));
            } else if (key == "targets") {
                if (rest.find("all") != std::string::npos) all = true;
                else
                    for (auto& t : split_list(rest)) I.targets.push_back(parse_tuple(t));
            } else if (key == "curve") {
                C.f = parse_ratpoly(rest);
            } else if (key == "generator") {
                auto mid = rest.find(']');
                if (mid == std::string::npos) fail("generator needs two lists");
                RatMumford D;
                D.a = parse_ratpoly(rest.substr(0, mid + 1));
                D.b = parse_ratpoly(rest.substr(mid + 1));
                C.gens.push_back(D);
            } else if (key == "base") {
                std::istringstream bs(rest);
                std::string x, y;
                bs >> x >> y;
                C.base = std::make_pair(mpq_class(x), mpq_class(y));
                C.base->first.canonicalize();
                C.base->second.canonicalize();
            } else if (key == "primes") {
                for (long v : parse_tuple(rest)) primes.push_back(v);
            } else if (key == "disk_modulus") {
                disk.modulus = std::stol(rest);
                has_disk = true;
            } else if (key == "disk_base") {
                disk.base = parse_tuple(rest);
                has_disk = true;
            } else if (key == "disk_gen") {
                disk.gens.push_back(parse_tuple(rest));
                has_disk = true;
            } else if (key == "disk_prime") {
                disk_primes.push_back({std::stol(rest), {}});
                has_disk = true;
            } else if (key == "disk_point") {
                if (disk_primes.empty()) fail("disk_point before disk_prime");
                std::istringstream ps(rest);
                std::string x, y;
                ps >> x >> y;
                ReducedPoint P;
                if (x == "inf") P.infinite = true, P.y = std::stol(y);
                else P.x = std::stol(x), P.y = std::stol(y);
                disk_primes.back().second.push_back(P);
            } else if (key == "compute") {
                compute = true;
            } else {
                fail("unknown key '" + key + "'");
            }
        } catch (const SieveError&) {
            throw;
        } catch (const std::exception& e) {
            fail(e.what());
        }
    }
    if (!header) throw SieveError("sieve instance: missing header");
    if (I.M < 1) throw SieveError("sieve instance: M must be positive");
    if (compute) {
        if (C.f.empty()) throw SieveError("sieve instance: compute needs a curve");
        if (I.r == 0) I.r = (int)C.gens.size();
        for (long v : primes) I.primes.push_back(prime_sieve_data(C, v, I.M, I.multiplier));
        for (auto& [v, pts] : disk_primes) local.push_back(prime_sieve_data(C, v, I.M, I.multiplier, pts));
    } else if (!disk_primes.empty()) {
        throw SieveError("sieve instance: disk_prime needs compute");
    }
    if (has_disk) {
        for (auto& d : local) check_data(d, I.r);
        if (disk.base.empty()) disk.base.assign(I.r, 0);
        if ((int)disk.base.size() != I.r) throw SieveError("sieve instance: disk_base of wrong length");
        if (I.M % disk.modulus) throw SieveError("sieve instance: disk_modulus must divide M");
        disk.local = std::move(local);
        I.disk = std::move(disk);
    }
    if (all) I.targets = all_tuples(I.M, I.r);
    for (auto& d : I.primes) check_data(d, I.r);
    return I;
}

std::string write_sieve_instance(const SieveInstance& I) {
    std::ostringstream o;
    o << "qck-sieve 1\nM " << I.M << "\nr " << I.r << "\nmultiplier " << I.multiplier << "\n";
    for (auto& d : I.primes) {
        o << "prime " << d.v << "\norder " << d.order << "\nmoduli = " << tuple_str(d.moduli) << "\n";
        for (auto& g : d.gens) o << "gen = " << tuple_str(g) << "\n";
        for (auto& x : d.image) o << "image = " << tuple_str(x) << "\n";
    }
    if (I.disk) {
        for (auto& d : I.disk->local) {
            o << "local " << d.v << "\norder " << d.order << "\nmoduli = " << tuple_str(d.moduli) << "\n";
            for (auto& g : d.gens) o << "gen = " << tuple_str(g) << "\n";
            for (auto& x : d.image) o << "image = " << tuple_str(x) << "\n";
        }
        o << "disk_modulus " << I.disk->modulus << "\ndisk_base = " << tuple_str(I.disk->base) << "\n";
        for (auto& g : I.disk->gens) o << "disk_gen = " << tuple_str(g) << "\n";
    }
    o << "targets = [";
    for (size_t k = 0; k < I.targets.size(); ++k) o << (k ? ", " : "") << tuple_str(I.targets[k]);
    o << "]\n";
    return o.str();
}

}  // namespace qck
