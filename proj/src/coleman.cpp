#include "qck/coleman.hpp"

#include "kedlaya.hpp"

#include <exception>
#include <thread>

namespace qck {

namespace {

using Ser = std::vector<PadicNumber>;

long ilog(long p, long n) {  // floor(log_p n), n >= 1
    long k = 0;
    for (long q = p; q <= n; q *= p) ++k;
    return k;
}

PadicNumber pint(long n, long p, long N) { return PadicNumber::from_int(n, p, N); }

// binom(alpha, k) for alpha = num/2, exactly
mpq_class half_binom(long num, long k) {
    mpq_class r = 1;
    for (long i = 0; i < k; ++i) r *= mpq_class(num - 2 * i, 2 * (i + 1));
    r.canonicalize();
    return r;
}

Ser ser_mul(const Ser& a, const Ser& b, size_t M) {
    long p = a[0].prime();
    Ser c(M, PadicNumber::zero(p, LONG_MAX / 8));
    for (size_t i = 0; i < a.size() && i < M; ++i) {
        if (a[i].is_zero() && a[i].prec() > LONG_MAX / 16) continue;
        for (size_t j = 0; j < b.size() && i + j < M; ++j) c[i + j] += a[i] * b[j];
    }
    return c;
}

// (1 + z)^{num/2}, z(0) = 0
Ser ser_half_power(const Ser& z, long num, size_t M, long N) {
    long p = z[0].prime();
    Ser res(M, PadicNumber::zero(p, N)), zk(M, PadicNumber::zero(p, N));
    zk[0] = pint(1, p, N);
    for (size_t k = 0; k < M; ++k) {
        PadicNumber b = PadicNumber::from_rational(half_binom(num, (long)k), p, N);
        for (size_t m = k; m < M; ++m) res[m] += b * zk[m];
        if (k + 1 < M) zk = ser_mul(zk, z, M);
    }
    return res;
}

// 1/a, a(0) a unit
Ser ser_inverse(const Ser& a, size_t M) {
    PadicNumber a0i = a[0].inverse();
    Ser r(M);
    r[0] = a0i;
    for (size_t n = 1; n < M; ++n) {
        PadicNumber s = PadicNumber::zero(a0i.prime(), LONG_MAX / 8);
        for (size_t k = 1; k <= n && k < a.size(); ++k) s += a[k] * r[n - k];
        r[n] = -(s * a0i);
    }
    return r;
}

// Taylor coefficients of a polynomial at c
Ser taylor(PadicPoly t, const PadicNumber& c) {
    int d = (int)t.size() - 1;
    for (int i = 0; i <= d; ++i)
        for (int j = d - 1; j >= i; --j) t[j] = t[j] + c * t[j + 1];
    return t;
}

Ser pad(Ser a, size_t M, long p, long N) {
    a.resize(M, PadicNumber::zero(p, N));
    return a;
}

// integral of sum s_m u^m du from 0 to u, truncation error folded into the precision
PadicNumber integrate(const Ser& s, const PadicNumber& u, long cap) {
    long p = u.prime();
    PadicNumber sum = PadicNumber::zero(p, cap), up = u;
    for (size_t m = 0; m < s.size(); ++m) {
        sum += (s[m] * up).div_int((long)m + 1);
        up = up * u;
    }
    return sum.with_prec(cap);
}

// local data at a good point R: series in u = x - x_R
struct Local {
    long p = 0, N = 0;
    size_t M = 0;
    PadicNumber u;  // parameter of the far endpoint
    long cap = 0;
    Ser y, inv_y;
};

Local local_at(const OddCurveQp& C, const PointQp& R, const PadicNumber& xS, long N, long terms, bool need_y) {
    Local L;
    L.p = C.p;
    L.N = N;
    L.u = xS - R.x;
    if (L.u.is_zero()) return L;
    long vu = L.u.val();
    if (vu < 1) throw ColemanError(ColemanError::DifferentDisks, "points are not in one residue disk");
    long M = terms;
    if (M <= 0) {
        M = 1;
        while ((M + 1) * vu - ilog(L.p, M + 1) < N) ++M;
    }
    L.M = (size_t)M;
    L.cap = (M + 1) * vu - ilog(L.p, M + 1);
    Ser t = taylor(curve_poly(C, N + 4), R.x);
    PadicNumber y2i = (R.y * R.y).inverse();
    Ser z(t.size());
    z[0] = PadicNumber::zero(L.p, N + 4);
    for (size_t k = 1; k < t.size(); ++k) z[k] = t[k] * y2i;
    z = pad(z, L.M, L.p, N + 4);
    PadicNumber yi = R.y.inverse();
    L.inv_y = ser_half_power(z, -1, L.M, N + 4);
    for (auto& c : L.inv_y) c = c * yi;
    if (need_y) {
        L.y = ser_half_power(z, 1, L.M, N + 4);
        for (auto& c : L.y) c = c * R.y;
    }
    return L;
}

// ---- rational polynomials ----
RatPoly padd(RatPoly a, const RatPoly& b, const mpq_class& s = 1) {
    if (a.size() < b.size()) a.resize(b.size());
    for (size_t i = 0; i < b.size(); ++i) a[i] += s * b[i];
    trim(a);
    return a;
}

RatPoly pmul(const RatPoly& a, const RatPoly& b) {
    if (a.empty() || b.empty()) return {};
    RatPoly c(a.size() + b.size() - 1);
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    trim(c);
    return c;
}

void pdivmod(RatPoly a, const RatPoly& b, RatPoly& q, RatPoly& r) {
    trim(a);
    q.clear();
    if (a.size() >= b.size()) {
        q.assign(a.size() - b.size() + 1, 0);
        for (size_t k = a.size(); k >= b.size(); --k) {
            size_t sh = k - b.size();
            mpq_class c = a[k - 1] / b.back();
            q[sh] = c;
            for (size_t l = 0; l < b.size(); ++l) a[sh + l] -= c * b[l];
        }
    }
    trim(q);
    trim(a);
    r = a;
}

RatPoly pmod(const RatPoly& a, const RatPoly& b) {
    RatPoly q, r;
    pdivmod(a, b, q, r);
    return r;
}

RatPoly pdiv(const RatPoly& a, const RatPoly& b) {
    RatPoly q, r;
    pdivmod(a, b, q, r);
    return q;
}

RatPoly pmonic(RatPoly a) {
    trim(a);
    if (a.empty()) return a;
    mpq_class l = a.back();
    for (auto& c : a) c /= l;
    return a;
}

// g = gcd(a, b) monic, g = s a + t b
RatPoly pxgcd(RatPoly a, RatPoly b, RatPoly& s, RatPoly& t) {
    RatPoly s0{1}, s1, t0, t1{1};
    trim(a);
    trim(b);
    while (!b.empty()) {
        RatPoly q, r;
        pdivmod(a, b, q, r);
        a = b;
        b = r;
        RatPoly s2 = padd(s0, pmul(q, s1), -1), t2 = padd(t0, pmul(q, t1), -1);
        s0 = s1, s1 = s2, t0 = t1, t1 = t2;
    }
    mpq_class l = a.back();
    for (auto& c : s0) c /= l;
    for (auto& c : t0) c /= l;
    s = s0;
    t = t0;
    return pmonic(a);
}

}  // namespace

// ---- points and disks ----

ResidueDisk residue_disk(const PointQp& P) {
    ResidueDisk d;
    if (P.x.val() < 0 || P.y.val() < 0) {
        d.infinite = true;
        return d;
    }
    long p = P.x.prime();
    d.x = P.x.is_zero() ? 0 : mpz_class(P.x.with_prec(1).lift() % p).get_si();
    d.y = P.y.is_zero() ? 0 : mpz_class(P.y.with_prec(1).lift() % p).get_si();
    return d;
}

void require_good_point(const PointQp& P) {
    ResidueDisk d = residue_disk(P);
    if (d.infinite) throw ColemanError(ColemanError::InfiniteDisk, "point in the infinite residue disk");
    if (d.weierstrass()) throw ColemanError(ColemanError::WeierstrassDisk, "point in a Weierstrass residue disk");
}

PadicPoly curve_poly(const OddCurveQp& C, long N) {
    if (C.rational.empty()) return C.Q;
    PadicPoly Q;
    for (auto& c : C.rational) Q.push_back(PadicNumber::from_rational(c, C.p, N));
    return Q;
}

bool lift_point(const OddCurveQp& C, const PadicNumber& x, long y0, PointQp& out) {
    long p = C.p;
    PadicNumber v = poly_eval(curve_poly(C, x.prec()), x);
    if (v.is_zero() || v.val() % 2) return false;
    mpz_class u = v.unit() % p;
    if (mpz_legendre(u.get_mpz_t(), mpz_class(p).get_mpz_t()) != 1) return false;
    PadicNumber y = v.sqrt();
    if (y0 % p != 0 && (y - pint(y0, p, y.prec())).val() < 1) y = -y;
    if (y0 % p != 0 && (y - pint(y0, p, y.prec())).val() < 1) return false;
    out = {x, y};
    return true;
}

namespace {

PointQp branch_near(const OddCurveQp& C, const PadicNumber& x, const PadicNumber& yref) {
    PadicNumber v = poly_eval(curve_poly(C, x.prec()), x);
    PadicNumber y = v.sqrt();
    if ((y - yref).val() < 1) y = -y;
    return {x, y};
}

}  // namespace

PointQp frobenius_point(const OddCurveQp& C, const PointQp& P) {
    require_good_point(P);
    return branch_near(C, P.x.pow(C.p), P.y);
}

// ---- integrals of the basis ----

std::vector<PadicNumber> tiny_integrals(const OddCurveQp& C, const PointQp& P, const PointQp& Q, long N, long terms) {
    require_good_point(P);
    require_good_point(Q);
    if (!(residue_disk(P) == residue_disk(Q)))
        throw ColemanError(ColemanError::DifferentDisks, "tiny integral between different residue disks");
    int n = 2 * C.g;
    Local L = local_at(C, P, Q.x, N, terms, false);
    if (L.u.is_zero()) {
        if (!(P.y - Q.y).with_prec(1).is_zero() && (P.y - Q.y).val() < 1)
            throw ColemanError(ColemanError::DifferentDisks, "points are not in one residue disk");
        return std::vector<PadicNumber>(n, PadicNumber::zero(C.p, N));
    }
    std::vector<PadicNumber> out;
    // x^i/(2y) = (x_P + u)^i inv_y / 2
    Ser xi(L.M, PadicNumber::zero(C.p, N + 4));
    xi[0] = pint(1, C.p, N + 4);
    Ser xu{P.x, pint(1, C.p, N + 4)};
    for (int i = 0; i < n; ++i) {
        Ser s = ser_mul(xi, L.inv_y, L.M);
        out.push_back(integrate(s, L.u, L.cap).div_int(2));
        xi = ser_mul(xi, xu, L.M);
    }
    return out;
}

std::vector<PadicNumber> basis_integrals(const FrobeniusData& fd, const PointQp& P, const PointQp& Q) {
    require_good_point(P);
    require_good_point(Q);
    const OddCurveQp& C = fd.curve;
    int n = 2 * C.g;
    long N = fd.working;
    PointQp fP = frobenius_point(C, P), fQ = frobenius_point(C, Q);
    auto t1 = tiny_integrals(C, fP, P, N), t2 = tiny_integrals(C, Q, fQ, N);
    PadicMatrix rhs(n, 1, C.p, N);
    for (int i = 0; i < n; ++i) rhs(i, 0) = t1[i] + t2[i] - (fd.eval_h(i, Q.x, Q.y) - fd.eval_h(i, P.x, P.y));
    PadicMatrix A = fd.F.transpose() - PadicMatrix::identity(n, C.p, fd.F.min_prec() + 8);
    PadicMatrix v;
    try {
        v = padic_linear_solve(A, rhs);
    } catch (const PrecisionError&) {
        throw ColemanError(ColemanError::Singular, "F^T - I is singular");
    }
    std::vector<PadicNumber> out;
    for (int i = 0; i < n; ++i) out.push_back(v(i, 0));
    return out;
}

PadicMatrix cup_product_padic(const OddCurveQp& C, long N) {
    int g = C.g, n = 2 * g;
    long p = C.p;
    PadicPoly Q = curve_poly(C, N + 8);
    size_t L = 4 * g + 2;
    // 1/w, w^2 = 1 + sum Q_{2g+1-m} t^{2m}
    Ser z(L + 1, PadicNumber::zero(p, N + 8));
    for (int m = 1; m <= 2 * g + 1 && (size_t)(2 * m) <= L; ++m) z[2 * m] = Q[2 * g + 1 - m];
    Ser iw = ser_half_power(z, -1, L + 1, N + 8);
    PadicMatrix Cm(n, n, p, N);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            // eta_k = -t^{2g-2-2k} iw dt
            PadicNumber s = PadicNumber::zero(p, N + 8);
            long tot = 2L * i + 2L * j - 4L * g + 2;
            for (long m1 = 0; m1 <= tot; ++m1) {
                long m2 = tot - m1;
                if ((size_t)m1 > L || (size_t)m2 > L) continue;
                if (m1 % 2 || m2 % 2) continue;
                s += (iw[m1] * iw[m2]).div_int(2L * g - 1 - 2L * i + m1);
            }
            Cm(i, j) = s;
        }
    return Cm;
}

// ---- divisors ----

RatMumford cantor_add_rational(const RatPoly& f, const RatMumford& D1, const RatMumford& D2) {
    RatPoly e1, e2, c1, c2;
    RatPoly d0 = pxgcd(D1.a, D2.a, e1, e2);
    RatPoly d = pxgcd(d0, padd(D1.b, D2.b), c1, c2);
    RatPoly s1 = pmul(c1, e1), s2 = pmul(c1, e2), s3 = c2;
    RatPoly a = pdiv(pmul(D1.a, D2.a), pmul(d, d));
    RatPoly num = padd(padd(pmul(pmul(s1, D1.a), D2.b), pmul(pmul(s2, D2.a), D1.b)),
                       pmul(s3, padd(pmul(D1.b, D2.b), f)));
    RatPoly b = pmod(pdiv(num, d), a);
    int g = ((int)f.size() - 2) / 2;
    while ((int)a.size() - 1 > g) {
        RatPoly a2 = pmonic(pdiv(padd(f, pmul(b, b), -1), a));
        b = pmod(padd({}, b, -1), a2);
        a = a2;
    }
    return {pmonic(a), b};
}

RatMumford cantor_mul_rational(const RatPoly& f, const RatMumford& D, long n) {
    RatMumford r, base = D;
    if (n < 0) {
        base.b = padd({}, base.b, -1);
        n = -n;
    }
    for (; n; n >>= 1) {
        if (n & 1) r = cantor_add_rational(f, r, base);
        if (n > 1) base = cantor_add_rational(f, base, base);
    }
    return r;
}

namespace {

std::vector<PadicNumber> split_roots(const RatPoly& a, long p, long N) {
    for (auto& c : a)
        if (valuation(c.get_den(), p) > 0) throw ColemanError(ColemanError::NotSplit, "divisor not p-integral");
    int d = (int)a.size() - 1;
    std::vector<PadicNumber> xs;
    auto red = [&](const mpq_class& c) {
        mpz_class n = c.get_num() % p, dd = c.get_den() % p, inv;
        mpz_invert(inv.get_mpz_t(), dd.get_mpz_t(), mpz_class(p).get_mpz_t());
        return mpz_class((n * inv % p + p) % p).get_si();
    };
    std::vector<long> ar;
    for (auto& c : a) ar.push_back(red(c));
    for (long r = 0; r < p && (int)xs.size() < d; ++r) {
        long v = 0;
        for (size_t i = ar.size(); i-- > 0;) v = (v * r + ar[i]) % p;
        if (v) continue;
        try {
            xs.push_back(hensel_root(a, p, N, r));
        } catch (const std::invalid_argument&) {
            throw ColemanError(ColemanError::NotSplit, "divisor support not separated mod p");
        }
    }
    if ((int)xs.size() < d) throw ColemanError(ColemanError::NotSplit, "divisor does not split over Q_p");
    return xs;
}

PadicNumber rat_poly_eval(const RatPoly& b, const PadicNumber& x) {
    PadicPoly bp;
    for (auto& c : b) bp.push_back(PadicNumber::from_rational(c, x.prime(), x.prec() + 8));
    if (bp.empty()) return PadicNumber::zero(x.prime(), x.prec());
    return poly_eval(bp, x);
}

}  // namespace

SplitDivisor split_mumford(const RatPoly& f, const RatMumford& D, long p, long N) {
    SplitDivisor out;
    if (D.a.size() <= 1) return out;
    for (auto& x : split_roots(D.a, p, N)) out.push_back({{x, rat_poly_eval(D.b, x)}, 1});
    (void)f;
    return out;
}

SplitDivisor split_mumford_even(const OddModelQp& m, const RatPoly& f, const RatMumford& D, long N) {
    SplitDivisor out;
    (void)f;
    if (D.a.size() <= 1) return out;
    for (auto& x : split_roots(D.a, m.p, N)) {
        if ((x - m.r).val() > 0)
            throw ColemanError(ColemanError::InfiniteDisk, "support meets the disk sent to infinity");
        auto [U, V] = m.map_point(x, rat_poly_eval(D.b, x));
        out.push_back({{U, V}, 1});
    }
    return out;
}

LogVector abelian_log(const FrobeniusData& fd, const SplitDivisor& D) {
    int g = fd.curve.g;
    LogVector out(g, PadicNumber::zero(fd.curve.p, fd.working));
    for (auto& [P, n] : D) {
        require_good_point(P);
        // infinity is fixed by the involution, which negates holomorphic forms
        auto I = basis_integrals(fd, P.involution(), P);
        for (int i = 0; i < g; ++i) out[i] += I[i].mul_int(n).div_int(2);
    }
    return out;
}

// ---- third kind ----

ThirdKindData third_kind_data(const FrobeniusData& fd, const PointQp& P) {
    using namespace kedlaya;
    require_good_point(P);
    const OddCurveQp& C = fd.curve;
    long p = C.p;
    Setup s = make_setup(C, fd.working);
    s.precQ = std::min({s.precQ, P.x.prec(), P.y.prec()});
    mpz_class xP = lift_int(s, P.x), yP = lift_int(s, P.y);
    // phi(x) = x_P + (x - x_P)^p
    Zpoly phi(p + 1);
    for (long k = 0; k <= p; ++k) {
        mpz_class b, pw;
        mpz_bin_uiui(b.get_mpz_t(), p, k);
        mpz_class mx = -xP;
        red(mx, s.P);
        mpz_powm_ui(pw.get_mpz_t(), mx.get_mpz_t(), p - k, s.P.get_mpz_t());
        phi[k] = b * pw % s.P;
    }
    phi[0] = (phi[0] + xP) % s.P;
    auto Tk = lift_series(s, phi);
    // Q(x) = Q(x_P) + (x - x_P) D(x)
    auto divide = [&](const Zpoly& a, Zpoly& q) {
        q.assign(a.size() > 1 ? a.size() - 1 : 0, 0);
        mpz_class r = 0;
        for (size_t k = a.size(); k-- > 0;) {
            r = (r * xP + a[k]) % s.P;
            if (k > 0) q[k - 1] = r;
        }
        return r;
    };
    Zpoly D;
    divide(s.Q, D);
    mpz_class yinv2 = inv_mod(yP * yP % s.P, s.P), pyP = p * yP % s.P;
    std::map<long, Zpoly> num;
    std::vector<mpz_class> e(s.K);
    for (long k = 0; k < s.K; ++k) {
        Zpoly G;
        e[k] = divide(Tk[k], G);
        for (auto& c : G) c = c * pyP % s.P;
        num[s.level(k)] = std::move(G);
    }
    // dx/((x-x_P) y^{2j+1}) = y_P^{-2} [dx/((x-x_P) y^{2j-1}) - D dx/y^{2j+1}]
    mpz_class a = 0;
    long kk = s.K - 1;
    for (long j = s.level(s.K - 1); j >= 1; --j) {
        if (kk >= 0 && j == s.level(kk)) a = (a + pyP * e[kk--]) % s.P;
        a = a * yinv2 % s.P;
        Zpoly& t = num[j];
        if (t.size() < D.size()) t.resize(D.size());
        for (size_t l = 0; l < D.size(); ++l) {
            mpz_submul(t[l].get_mpz_t(), a.get_mpz_t(), D[l].get_mpz_t());
            red(t[l], s.P);
        }
    }
    // the residue forces a_0 = p y_P
    mpz_class chk = a - pyP;
    red(chk, s.P);
    if (chk != 0 && valuation(chk, p) < std::min(s.T, s.precQ) - 1)
        throw std::logic_error("third-kind Frobenius residue check failed");
    Reduced R = reduce_forms(s, std::move(num));
    return {P, std::move(R.coords), std::move(R.h)};
}

PadicNumber tiny_third_kind(const OddCurveQp& C, const PointQp& P, const PointQp& A, const PointQp& B, long N) {
    require_good_point(A);
    require_good_point(B);
    if (residue_disk(A) == residue_disk(P))
        throw ColemanError(ColemanError::OverlappingDisks, "endpoint in the disk of the pole");
    long p = C.p;
    if (!(residue_disk(A) == residue_disk(B)))
        throw ColemanError(ColemanError::DifferentDisks, "tiny integral between different residue disks");
    Local L = local_at(C, A, B.x, N, 0, true);
    if (L.u.is_zero()) return PadicNumber::zero(p, N);
    PadicNumber dx = A.x - P.x;
    Ser s;
    if (dx.val() == 0) {
        // (1/(x - x_P)) (1 + y_P/y) / 2
        Ser inv(L.M);
        PadicNumber ci = dx.inverse(), pw = ci;
        for (size_t m = 0; m < L.M; ++m, pw = -(pw * ci)) inv[m] = pw;
        Ser t = L.inv_y;
        for (auto& c : t) c = c * P.y;
        t[0] += pint(1, p, N + 4);
        s = ser_mul(inv, t, L.M);
    } else {
        // disk of wP: D(x) / (y (y - y_P)) / 2 with D = (Q(x) - Q(x_P))/(x - x_P)
        PadicPoly Q = curve_poly(C, N + 4), Dp(Q.size() - 1);
        PadicNumber r = PadicNumber::zero(p, N + 4);
        for (size_t k = Q.size(); k-- > 1;) {
            r = r * P.x + Q[k];
            Dp[k - 1] = r;
        }
        Ser Dt = pad(taylor(Dp, A.x), L.M, p, N + 4);
        Ser ym = L.y;
        ym[0] -= P.y;
        s = ser_mul(ser_mul(Dt, L.inv_y, L.M), ser_inverse(ym, L.M), L.M);
    }
    return integrate(s, L.u, L.cap).div_int(2);
}

namespace {

PointQp point_lift_image(const OddCurveQp& C, const PointQp& P, const PointQp& R) {
    return branch_near(C, P.x + (R.x - P.x).pow(C.p), R.y);
}

}  // namespace

PadicNumber third_kind_integral(const FrobeniusData& fd, const ThirdKindData& T, const PointQp& R, const PointQp& S) {
    require_good_point(R);
    require_good_point(S);
    ResidueDisk dP = residue_disk(T.P);
    if (residue_disk(R) == dP || residue_disk(S) == dP)
        throw ColemanError(ColemanError::OverlappingDisks, "endpoint in the disk of the pole");
    const OddCurveQp& C = fd.curve;
    long N = fd.working;
    auto I = basis_integrals(fd, R, S);
    PointQp fR = point_lift_image(C, T.P, R), fS = point_lift_image(C, T.P, S);
    PadicNumber rhs = kedlaya::eval_exact(T.h, S.x, S.y) - kedlaya::eval_exact(T.h, R.x, R.y);
    for (size_t i = 0; i < I.size(); ++i) rhs += T.c[i] * I[i];
    rhs -= tiny_third_kind(C, T.P, fR, R, N) + tiny_third_kind(C, T.P, S, fS, N);
    return rhs.div_int(1 - C.p);
}

PadicNumber cg_height_p(const FrobeniusData& fd, const UnitRootSplitting& s, const SplitDivisor& D1,
                        const SplitDivisor& D2) {
    const OddCurveQp& C = fd.curve;
    long p = C.p, N = fd.working;
    int g = C.g, n = 2 * g;
    long deg1 = 0, deg2 = 0;
    for (auto& [P, m] : D1) require_good_point(P), deg1 += m;
    for (auto& [Q, m] : D2) require_good_point(Q), deg2 += m;
    if (deg1 || deg2) throw std::invalid_argument("height needs degree-zero divisors");
    if (D1.empty() || D2.empty()) return PadicNumber::zero(p, N);
    for (auto& [P, m] : D1)
        for (auto& [Q, k] : D2)
            if (residue_disk(P) == residue_disk(Q))
                throw ColemanError(ColemanError::OverlappingDisks, "divisors share a residue disk");

    // class of omega_0 = sum n_k omega_{P_k}: <Psi(omega_0), eta_j> = -sum_A Res_A(omega_0 int eta_j)
    PadicPoly Q = curve_poly(C, N + 8);
    size_t L = 4 * g + 2;
    Ser z(L + 1, PadicNumber::zero(p, N + 8));
    for (int m = 1; m <= 2 * g + 1 && (size_t)(2 * m) <= L; ++m) z[2 * m] = Q[2 * g + 1 - m];
    Ser iw = ser_half_power(z, -1, L + 1, N + 8);
    // omega_0 = sum_a W[a+1] t^a dt near infinity (x = t^-2, y = t^-(2g+1) w)
    Ser W(L + 2, PadicNumber::zero(p, N + 8));
    for (auto& [P, m] : D1) {
        Ser geo(L + 1, PadicNumber::zero(p, N + 8));
        PadicNumber xp = pint(1, p, N + 8);
        for (size_t k = 0; 2 * k <= L; ++k, xp = xp * P.x) geo[2 * k] = xp;
        Ser nu = ser_mul(iw, geo, L + 1);
        for (size_t a = 0; a + 1 < W.size(); ++a) W[a] -= geo[a].mul_int(m);  // exponent a - 1
        for (size_t a = 0; (long)a + 2 * g + 1 < (long)W.size(); ++a) W[a + 2 * g + 1] -= (nu[a] * P.y).mul_int(m);
    }
    const PointQp& P0 = D1[0].first;
    std::vector<std::vector<PadicNumber>> I1;
    for (auto& [P, m] : D1) I1.push_back(basis_integrals(fd, P0, P));
    PadicMatrix v(n, 1, p, N);
    for (int j = 0; j < n; ++j) {
        PadicNumber acc = PadicNumber::zero(p, N + 8);
        for (size_t k = 0; k < D1.size(); ++k) acc += I1[k][j].mul_int(D1[k].second);
        // int eta_j = -sum iw_m t^{e+m}/(e+m), e = 2g-1-2j; residue pairs t^{a} with t^{-1-a}
        long e = 2L * g - 1 - 2L * j;
        for (long a = -1; a + 1 < (long)W.size(); ++a) {
            long m = -1 - a - e;
            if (m < 0 || m > (long)L || m % 2) continue;
            acc -= (W[a + 1] * iw[m]).div_int(e + m);
        }
        v(j, 0) = -acc;
    }
    PadicMatrix Cp = cup_product_padic(C, N);
    PadicMatrix cvec = padic_linear_solve(Cp.transpose(), v);
    PadicMatrix b = s.s2 * cvec;

    std::vector<ThirdKindData> T(D1.size());
    std::vector<std::exception_ptr> errs(D1.size());
    {
        std::vector<std::thread> pool;
        for (size_t k = 0; k < D1.size(); ++k)
            pool.emplace_back([&, k] {
                try {
                    T[k] = third_kind_data(fd, D1[k].first);
                } catch (...) {
                    errs[k] = std::current_exception();
                }
            });
        for (auto& t : pool) t.join();
    }
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);

    const PointQp& Q0 = D2[0].first;
    PadicNumber h = PadicNumber::zero(p, N);
    for (auto& [Qm, nm] : D2) {
        auto I = basis_integrals(fd, Q0, Qm);
        PadicNumber term = PadicNumber::zero(p, N);
        for (size_t k = 0; k < D1.size(); ++k) term += third_kind_integral(fd, T[k], Q0, Qm).mul_int(D1[k].second);
        for (int i = 0; i < n; ++i) term -= b(i, 0) * I[i];
        h += term.mul_int(nm);
    }
    return h;
}

}  // namespace qck
