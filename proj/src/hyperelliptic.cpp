#include "qck/hyperelliptic.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace qck {

using fq::u64;

void trim(RatPoly& a) {
    while (!a.empty() && a.back() == 0) a.pop_back();
}

RatPoly rat_deriv(const RatPoly& a) {
    RatPoly r;
    for (size_t i = 1; i < a.size(); ++i) r.push_back(a[i] * (long)i);
    trim(r);
    return r;
}

RatPoly rat_gcd(RatPoly a, RatPoly b) {
    trim(a);
    trim(b);
    while (!b.empty()) {
        RatPoly r = a;
        while (r.size() >= b.size() && !r.empty()) {
            mpq_class c = r.back() / b.back();
            size_t sh = r.size() - b.size();
            for (size_t i = 0; i < b.size(); ++i) r[sh + i] -= c * b[i];
            r.pop_back();
            trim(r);
        }
        a = b;
        b = r;
    }
    if (!a.empty()) {
        mpq_class l = a.back();
        for (auto& c : a) c /= l;
    }
    return a;
}

mpq_class rat_eval(const RatPoly& a, const mpq_class& x) {
    mpq_class r = 0;
    for (size_t i = a.size(); i-- > 0;) r = r * x + a[i];
    return r;
}

HyperellipticCurve curve_over_Q(const RatPoly& f0, const std::string& label) {
    RatPoly f = f0;
    trim(f);
    int d = (int)f.size() - 1;
    if (d < 5) throw CurveError(CurveError::DegreeTooSmall, "degree " + std::to_string(d) + " < 5: genus below 2");
    if (rat_gcd(f, rat_deriv(f)).size() > 1)
        throw CurveError(CurveError::NotSquarefree, "f is not squarefree (discriminant vanishes)");
    HyperellipticCurve c;
    c.f = f;
    c.genus = (d - 1) / 2;
    c.base = BaseRing::Q;
    c.label = label;
    return c;
}

fq::Poly reduce_mod(const RatPoly& f, u64 q) {
    fq::Poly r(f.size());
    for (size_t i = 0; i < f.size(); ++i) {
        mpz_class num = f[i].get_num() % (long)q, den = f[i].get_den() % (long)q;
        if (den == 0) throw CurveError(CurveError::NotIntegral, "coefficient not integral at " + std::to_string(q));
        r[i] = fq::mul(fq::reduce(num.get_si(), q), fq::inv(fq::reduce(den.get_si(), q), q), q);
    }
    fq::trim(r);
    return r;
}

bool good_reduction(const RatPoly& f, u64 q) {
    fq::Poly r;
    try {
        r = reduce_mod(f, q);
    } catch (const CurveError&) {
        return false;
    }
    if ((int)r.size() != (int)f.size()) return false;
    fq::Poly s, t;
    return fq::xgcd(r, fq::deriv(r, q), s, t, q).size() == 1;
}

HyperellipticCurve validate_curve(const RatPoly& f0, long p) {
    RatPoly f = f0;
    trim(f);
    int d = (int)f.size() - 1;
    if (d % 2 == 0)
        throw CurveError(CurveError::EvenDegree,
                         "even degree " + std::to_string(d) +
                             ": move a Q_p-rational Weierstrass root to infinity (odd-model helper) first");
    if (d < 5) throw CurveError(CurveError::DegreeTooSmall, "degree " + std::to_string(d) + " < 5: genus below 2");
    if (f.back() != 1) throw CurveError(CurveError::NotMonic, "f is not monic");
    if (p < 3 || !is_prime(p)) throw std::invalid_argument("p must be an odd prime");
    for (auto& c : f)
        if (c.get_den() % p == 0)
            throw CurveError(CurveError::NotIntegral, "coefficient " + c.get_str() + " is not p-integral");
    if (rat_gcd(f, rat_deriv(f)).size() > 1)
        throw CurveError(CurveError::NotSquarefree, "f is not squarefree (discriminant vanishes)");
    if (!good_reduction(f, p))
        throw CurveError(CurveError::BadReduction, "bad reduction at p = " + std::to_string(p) + " (disc(f) = 0 mod p)");
    HyperellipticCurve c;
    c.f = f;
    c.genus = (d - 1) / 2;
    c.base = BaseRing::Qp;
    c.p = p;
    return c;
}

// ---- odd models ----

// Taylor coefficients of f at r: f(r + u) = sum t_k u^k
static fq::Poly taylor_shift(const fq::Poly& f, u64 r, u64 q) {
    fq::Poly t = f;
    int n = (int)t.size();
    for (int i = 0; i < n; ++i)
        for (int j = n - 2; j >= i; --j) t[j] = fq::add(t[j], fq::mul(r, t[j + 1], q), q);
    return t;
}

OddModelFq odd_model_fq(const fq::Poly& f, u64 r, u64 q) {
    int d = fq::deg(f);
    if (d % 2) throw std::invalid_argument("odd_model_fq expects an even-degree model");
    if (fq::eval(f, r, q) != 0) throw std::invalid_argument("r is not a root");
    fq::Poly t = taylor_shift(f, r, q);
    u64 c = t[1];
    if (c == 0) throw std::invalid_argument("r is a multiple root");
    OddModelFq m;
    m.q = q, m.r = r, m.c = c, m.f = f, m.genus = (d - 2) / 2;
    m.Q.assign(d, 0);
    u64 ci = fq::inv(c, q);
    for (int k = 1; k <= d; ++k) {
        // t_k c^{k-2}
        u64 s = k >= 2 ? fq::pow(c, k - 2, q) : ci;
        m.Q[d - k] = fq::mul(t[k], s, q);
    }
    fq::trim(m.Q);
    return m;
}

std::pair<u64, u64> OddModelFq::map_point(u64 x, u64 y) const {
    u64 U = fq::mul(c, fq::inv(fq::sub(x, r, q), q), q);
    u64 V = fq::mul(fq::mul(y, fq::pow(U, genus + 1, q), q), fq::inv(c, q), q);
    return {U, V};
}

std::pair<u64, u64> OddModelFq::map_infinity(u64 s) const { return {0, fq::mul(s, fq::pow(c, genus, q), q)}; }

PadicNumber hensel_root(const RatPoly& f, long p, long N, long r0) {
    std::vector<PadicNumber> fp;
    for (auto& c : f) fp.push_back(PadicNumber::from_rational(c, p, N + 5));
    auto ev = [&](const PadicNumber& x, bool der) {
        PadicNumber s = PadicNumber::zero(p, N + 5);
        for (size_t i = fp.size(); i-- > (der ? 1 : 0);) s = s * x + (der ? fp[i].mul_int((long)i) : fp[i]);
        return s;
    };
    PadicNumber x = PadicNumber::from_int(r0, p, N + 5);
    if (!ev(x, false).is_zero() && ev(x, false).val() < 1) throw std::invalid_argument("not a root mod p");
    if (ev(x, true).val() != 0) throw std::invalid_argument("root is not simple mod p");
    for (long k = 0; k < 2 * N + 10; ++k) {
        PadicNumber fx = ev(x, false);
        if (fx.is_zero()) break;
        x = x - fx / ev(x, true);
    }
    return x.with_prec(N);
}

OddModelQp odd_model_padic(const RatPoly& f0, long p, long N, long r0) {
    RatPoly f = f0;
    trim(f);
    int d = (int)f.size() - 1;
    if (d % 2) throw std::invalid_argument("odd_model_padic expects an even-degree model");
    OddModelQp m;
    m.p = p;
    m.genus = (d - 2) / 2;
    m.r = hensel_root(f, p, N, r0);
    // Taylor coefficients t_k = f^{(k)}(r)/k!
    std::vector<PadicNumber> t;
    for (auto& c : f) t.push_back(PadicNumber::from_rational(c, p, N));
    for (int i = 0; i <= d; ++i)
        for (int j = d - 1; j >= i; --j) t[j] = t[j] + m.r * t[j + 1];
    m.c = t[1];
    if (m.c.val() != 0) throw std::invalid_argument("f'(r) is not a unit");
    m.Q.resize(d);
    for (int k = 1; k <= d; ++k) m.Q[d - k] = t[k] * m.c.pow(k - 2);
    m.Q[d - 1] = PadicNumber::from_int(1, p, N);
    return m;
}

std::pair<PadicNumber, PadicNumber> OddModelQp::map_point(const PadicNumber& x, const PadicNumber& y) const {
    PadicNumber U = c / (x - r);
    PadicNumber V = y * U.pow(genus + 1) / c;
    return {U, V};
}

std::pair<PadicNumber, PadicNumber> OddModelQp::unmap_point(const PadicNumber& U, const PadicNumber& V) const {
    PadicNumber x = r + c / U;
    PadicNumber y = V * c / U.pow(genus + 1);
    return {x, y};
}

// ---- counting ----

long long count_points(const fq::Poly& f, u64 q) {
    std::vector<int8_t> chi(q, -1);
    chi[0] = 0;
    for (u64 y = 1; y < q; ++y) chi[y * y % q] = 1;
    long long n = 0;
    for (u64 x = 0; x < q; ++x) n += 1 + chi[fq::eval(f, x, q)];
    if (fq::deg(f) % 2)
        n += 1;
    else
        n += 1 + chi[f.back()];
    return n;
}

long long count_points_q2(const fq::Poly& f, u64 q, long long budget) {
    if ((long double)q * (long double)q > (long double)budget)
        throw BudgetExceeded("counting over F_{q^2} with q = " + std::to_string(q) + " exceeds the budget " +
                             std::to_string(budget));
    std::vector<int8_t> chi(q, -1);
    chi[0] = 0;
    for (u64 y = 1; y < q; ++y) chi[y * y % q] = 1;
    u64 n = 2;
    while (chi[n % q] != -1) ++n;
    n %= q;
    int d = fq::deg(f);
    int D = 2 * d;
    unsigned nth = std::max(1u, std::thread::hardware_concurrency());
    std::vector<long long> part(nth, 0);
    auto work = [&](unsigned id) {
        long long acc = 0;
        std::vector<u64> diff(D + 1);
        for (u64 b = id; b < q; b += nth) {
            // f(a + b t) = A(a) + B(a) t, t^2 = n
            fq::Poly A, B;
            for (int k = d; k >= 0; --k) {
                // (A + B t)(a + b t) = (A a + n b B) + (A b + B a) t
                fq::Poly Aa(A.size() + 1, 0), Ba(B.size() + 1, 0);
                for (size_t i = 0; i < A.size(); ++i) Aa[i + 1] = A[i];
                for (size_t i = 0; i < B.size(); ++i) Ba[i + 1] = B[i];
                fq::Poly nA = fq::padd(Aa, fq::pscale(B, fq::mul(n, b, q), q), q);
                fq::Poly nB = fq::padd(fq::pscale(A, b, q), Ba, q);
                nA = fq::padd(nA, fq::Poly{f[k]}, q);
                A = nA, B = nB;
            }
            fq::Poly Nm = fq::psub(fq::pmul(A, A, q), fq::pscale(fq::pmul(B, B, q), n, q), q);
            // forward differences
            for (int i = 0; i <= D; ++i) diff[i] = fq::eval(Nm, (u64)i % q, q);
            for (int k = 1; k <= D; ++k)
                for (int i = D; i >= k; --i) diff[i] = fq::sub(diff[i], diff[i - 1], q);
            for (u64 a = 0; a < q; ++a) {
                acc += chi[diff[0]];
                for (int i = 0; i < D; ++i) {
                    u64 s = diff[i] + diff[i + 1];
                    diff[i] = s >= q ? s - q : s;
                }
            }
        }
        part[id] = acc + (long long)q * ((q - id + nth - 1) / nth);
    };
    std::vector<std::thread> th;
    for (unsigned i = 0; i < nth; ++i) th.emplace_back(work, i);
    for (auto& t : th) t.join();
    long long total = 0;
    for (auto v : part) total += v;
    total += (d % 2) ? 1 : 2;
    return total;
}

mpz_class LPolynomial::at_one() const {
    mpz_class s = 0;
    for (auto& x : c) s += x;
    return s;
}

LPolynomial lpolynomial_genus2(long long N1, long long N2, long long q) {
    mpz_class Q = (long)q;
    mpz_class c1 = mpz_class((long)N1) - Q - 1;
    mpz_class c2 = (mpz_class((long)N2) - Q * Q - 1 + c1 * c1) / 2;
    return LPolynomial{{1, c1, c2, Q * c1, Q * Q}};
}

LPolynomial lpolynomial(const fq::Poly& f, u64 q, long long budget) {
    int g = (fq::deg(f) - 1) / 2;
    long long N1 = count_points(f, q);
    if (g == 1) {
        mpz_class c1 = mpz_class((long)N1) - (long)q - 1;
        return LPolynomial{{1, c1, mpz_class((long)q)}};
    }
    if (g != 2) throw std::invalid_argument("L-polynomial from counts implemented for genus <= 2");
    return lpolynomial_genus2(N1, count_points_q2(f, q, budget), (long long)q);
}

bool weil_bounds_ok(const LPolynomial& L, long long q) {
    if (L.c.size() != 5) return true;
    mpz_class c1 = L.c[1], c2 = L.c[2], Q = (long)q;
    if (c1 * c1 > 16 * Q) return false;
    if (4 * c2 > c1 * c1 + 8 * Q) return false;
    mpz_class lhs = c2 + 2 * Q;
    if (lhs < 0) return false;
    return lhs * lhs >= 4 * Q * c1 * c1;
}

// ---- Jacobian ----

JacobianFq::JacobianFq(fq::Poly f, u64 q) : f_(std::move(f)), q_(q) {
    fq::trim(f_);
    if (fq::deg(f_) % 2 == 0) throw std::invalid_argument("Cantor arithmetic needs an odd-degree model");
    if (f_.back() != 1) f_ = fq::monic(f_, q_);
    g_ = (fq::deg(f_) - 1) / 2;
}

MumfordDivisor JacobianFq::neg(const MumfordDivisor& x) const { return {x.a, fq::pneg(x.b, q_)}; }

MumfordDivisor JacobianFq::add(const MumfordDivisor& x, const MumfordDivisor& y) const {
    const u64 q = q_;
    if (x.is_identity()) return y;
    if (y.is_identity()) return x;
    fq::Poly e1, e2, c1, c2;
    fq::Poly d1 = fq::xgcd(x.a, y.a, e1, e2, q);
    fq::Poly bsum = fq::padd(x.b, y.b, q);
    fq::Poly d, s1, s2, s3;
    if (d1.size() == 1) {
        d = d1, s1 = e1, s2 = e2, s3 = {};
    } else {
        d = fq::xgcd(d1, bsum, c1, c2, q);
        s1 = fq::pmul(c1, e1, q);
        s2 = fq::pmul(c1, e2, q);
        s3 = c2;
    }
    fq::Poly a = fq::pmul(x.a, y.a, q);
    fq::Poly b;
    if (d.size() > 1) a = fq::pdiv(a, fq::pmul(d, d, q), q);
    b = fq::padd(fq::pmul(fq::pmul(s1, x.a, q), y.b, q), fq::pmul(fq::pmul(s2, y.a, q), x.b, q), q);
    if (!s3.empty()) b = fq::padd(b, fq::pmul(s3, fq::padd(fq::pmul(x.b, y.b, q), f_, q), q), q);
    if (d.size() > 1) b = fq::pdiv(b, d, q);
    b = fq::pmod(b, a, q);
    while (fq::deg(a) > g_) {
        fq::Poly na = fq::pdiv(fq::psub(f_, fq::pmul(b, b, q), q), a, q);
        na = fq::monic(na, q);
        b = fq::pmod(fq::pneg(b, q), na, q);
        a = na;
    }
    a = fq::monic(a, q);
    b = fq::pmod(b, a, q);
    return {a, b};
}

MumfordDivisor JacobianFq::mul(const MumfordDivisor& x, mpz_class n) const {
    MumfordDivisor base = x, r = zero();
    if (n < 0) {
        base = neg(x);
        n = -n;
    }
    size_t bits = mpz_sizeinbase(n.get_mpz_t(), 2);
    for (size_t i = bits; i-- > 0;) {
        r = add(r, r);
        if (mpz_tstbit(n.get_mpz_t(), i)) r = add(r, base);
    }
    return r;
}

MumfordDivisor JacobianFq::point(u64 x, u64 y) const {
    MumfordDivisor d;
    d.a = {x ? q_ - x : 0, 1};
    d.b = {y % q_};
    fq::trim(d.b);
    return d;
}

bool JacobianFq::is_valid(const MumfordDivisor& d) const {
    if (d.a.empty() || d.a.back() != 1 || fq::deg(d.a) > g_) return false;
    if (fq::deg(d.b) >= fq::deg(d.a)) return false;
    return fq::pmod(fq::psub(fq::pmul(d.b, d.b, q_), f_, q_), d.a, q_).empty();
}

std::vector<u64> JacobianFq::key(const MumfordDivisor& d) const {
    std::vector<u64> k(2 * g_ + 1, 0);
    k[0] = d.a.size();
    for (size_t i = 0; i + 1 < d.a.size(); ++i) k[1 + i] = d.a[i];
    for (size_t i = 0; i < d.b.size(); ++i) k[1 + g_ + i] = d.b[i];
    return k;
}

std::vector<std::pair<u64, u64>> JacobianFq::affine_points() const {
    auto st = fq::sqrt_table(q_);
    std::vector<std::pair<u64, u64>> pts;
    for (u64 x = 0; x < q_; ++x) {
        u64 v = fq::eval(f_, x, q_);
        if (st[v] == UINT32_MAX) continue;
        pts.push_back({x, st[v]});
        if (v) pts.push_back({x, q_ - st[v]});
    }
    return pts;
}

static uint64_t splitmix(uint64_t& s) {
    uint64_t z = (s += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

MumfordDivisor JacobianFq::random_element(uint64_t& state) const {
    MumfordDivisor d = zero();
    for (int i = 0; i < g_ + 1; ++i) {
        for (;;) {
            u64 x = splitmix(state) % q_;
            u64 v = fq::eval(f_, x, q_);
            if (fq::legendre(v, q_) < 0) continue;
            // square root by exponent search is fine at desk scale
            u64 y = 0;
            if (v) {
                if (q_ % 4 == 3)
                    y = fq::pow(v, (q_ + 1) / 4, q_);
                else
                    for (y = 1; y * y % q_ != v; ++y) {
                    }
            }
            if (splitmix(state) & 1) y = (q_ - y) % q_;
            d = add(d, mul(point(x, y), mpz_class((unsigned long)(splitmix(state) % (q_ * q_)) + 1)));
            break;
        }
    }
    return d;
}

MumfordDivisor map_mumford_to_odd(const OddModelFq& m, const fq::Poly& a0, const fq::Poly& b0) {
    const u64 q = m.q;
    fq::Poly a = a0, b = b0;
    fq::trim(a);
    fq::trim(b);
    if (fq::deg(a) == 0) return {};
    if (fq::deg(a) != 2) throw std::invalid_argument("map_mumford_to_odd expects deg a = 2");
    // sum_j coef_j (r U + c)^j U^{k-j}
    auto hom = [&](const fq::Poly& p, int k) {
        fq::Poly res;
        fq::Poly lin{m.c, m.r};  // c + r U
        fq::Poly pw{1};
        for (int j = 0; j <= k; ++j) {
            if (j < (int)p.size() && p[j]) {
                fq::Poly t = fq::pscale(pw, p[j], q);
                fq::Poly sh(k - j, 0);
                sh.insert(sh.end(), t.begin(), t.end());
                fq::trim(sh);
                res = fq::padd(res, sh, q);
            }
            pw = fq::pmul(pw, lin, q);
        }
        return res;
    };
    fq::Poly na = hom(a, 2);
    if (na.size() <= 1) return {};
    na = fq::monic(na, q);
    fq::Poly nb = fq::pscale(hom(b, m.genus + 1), fq::inv(m.c, q), q);
    nb = fq::pmod(nb, na, q);
    return {na, nb};
}

}  // namespace qck
