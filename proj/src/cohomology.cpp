#include "qck/cohomology.hpp"

#include "kedlaya.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

namespace qck {

namespace kedlaya {

void red(mpz_class& a, const mpz_class& P) { mpz_mod(a.get_mpz_t(), a.get_mpz_t(), P.get_mpz_t()); }

mpz_class inv_mod(const mpz_class& a, const mpz_class& P) {
    mpz_class r;
    if (!mpz_invert(r.get_mpz_t(), a.get_mpz_t(), P.get_mpz_t())) throw std::domain_error("not invertible");
    return r;
}

Zpoly zmul(const Zpoly& a, const Zpoly& b, const mpz_class& P) {
    if (a.empty() || b.empty()) return {};
    Zpoly c(a.size() + b.size() - 1);
    for (size_t i = 0; i < a.size(); ++i) {
        if (mpz_sgn(a[i].get_mpz_t()) == 0) continue;
        for (size_t j = 0; j < b.size(); ++j)
            mpz_addmul(c[i + j].get_mpz_t(), a[i].get_mpz_t(), b[j].get_mpz_t());
    }
    for (auto& x : c) red(x, P);
    return c;
}

Zpoly zcompose(const Zpoly& f, const Zpoly& g, const mpz_class& P) {
    Zpoly r;
    for (size_t i = f.size(); i-- > 0;) {
        r = zmul(r, g, P);
        if (r.empty()) r.push_back(0);
        r[0] += f[i];
        red(r[0], P);
    }
    return r;
}

long val_small(long n, long p) {
    long v = 0;
    while (n % p == 0) n /= p, ++v;
    return v;
}

namespace {

long ceil_log(long p, double x) {
    long k = 0;
    double q = 1;
    while (q < x) q *= p, ++k;
    return k;
}

}  // namespace

Setup make_setup(const OddCurveQp& C, long Wf) {
    Setup s;
    s.p = C.p;
    s.g = C.g;
    s.d = 2 * C.g + 1;
    long p = s.p;
    long dpb = 2L * s.g * p + s.d;
    // truncation: term k is divisible by p^{k+1}; its reduction loses at most the log terms below
    long K = Wf;
    for (;;) {
        long T = K + 1 - ceil_log(p, (double)p * (2 * K + 1) + 1) - ceil_log(p, 2.0 * dpb + 2 * s.g + 2);
        if (T >= Wf) {
            s.T = T;
            break;
        }
        ++K;
    }
    s.K = K;
    long jmax = s.level(K - 1);
    long ebound = 0;
    for (long j = 1; j <= jmax; ++j) ebound += val_small(2 * j - 1, p);
    for (long k = 0; k <= dpb; ++k) ebound += val_small(2 * k + 2 * s.g + 1, p);
    s.ME = Wf + ebound + 1;
    s.P = mpz_pow(p, s.ME);

    s.Q.resize(s.d + 1);
    if (!C.rational.empty()) {
        s.precQ = s.ME;
        for (int i = 0; i <= s.d; ++i) s.Q[i] = PadicNumber::from_rational(C.rational[i], p, s.ME).lift();
    } else {
        s.precQ = C.prec();
        for (int i = 0; i <= s.d; ++i) s.Q[i] = C.Q[i].with_prec(std::min(C.Q[i].prec(), s.ME)).lift();
    }
    for (auto& x : s.Q) red(x, s.P);
    s.dQ.resize(s.d);
    for (int i = 1; i <= s.d; ++i) s.dQ[i - 1] = s.Q[i] * i % s.P;

    // Bezout a Q + b Q' = 1 from the Sylvester system
    int n = 4 * s.g + 1;
    PadicMatrix S(n, n, p, s.ME), rhs(n, 1, p, s.ME);
    for (int i = 0; i < 2 * s.g; ++i)
        for (int k = 0; k <= s.d; ++k) S(i + k, i) = PadicNumber::from_int(s.Q[k], p, s.ME);
    for (int i = 0; i <= 2 * s.g; ++i)
        for (int k = 0; k < s.d; ++k) S(i + k, 2 * s.g + i) = PadicNumber::from_int(s.dQ[k], p, s.ME);
    rhs(0, 0) = PadicNumber::from_int(1, p, s.ME);
    PadicMatrix sol = padic_linear_solve(S, rhs);
    s.b.resize(2 * s.g + 1);
    for (int i = 0; i <= 2 * s.g; ++i) {
        auto c = sol(2 * s.g + i, 0);
        if (c.val() < 0) throw CurveError(CurveError::BadReduction, "discriminant not a unit at p");
        s.b[i] = c.is_zero() ? mpz_class(0) : c.lift();
    }
    return s;
}

std::vector<Zpoly> lift_series(const Setup& s, const Zpoly& phi) {
    long p = s.p;
    Zpoly Qp{1};
    for (long i = 0; i < p; ++i) Qp = zmul(Qp, s.Q, s.P);
    Zpoly Qphi = zcompose(s.Q, phi, s.P);
    Zpoly E(std::max(Qp.size(), Qphi.size()));
    for (size_t i = 0; i < E.size(); ++i) {
        if (i < Qphi.size()) E[i] += Qphi[i];
        if (i < Qp.size()) E[i] -= Qp[i];
        red(E[i], s.P);
    }
    std::vector<Zpoly> out;
    Zpoly Ek{1};
    mpz_class inv4 = inv_mod(4, s.P);
    for (long k = 0; k < s.K; ++k) {
        // binom(-1/2, k) = (-1)^k binom(2k, k) / 4^k
        mpz_class c, q4;
        mpz_bin_uiui(c.get_mpz_t(), 2 * k, k);
        mpz_powm_ui(q4.get_mpz_t(), inv4.get_mpz_t(), k, s.P.get_mpz_t());
        c *= q4;
        if (k % 2) c = -c;
        red(c, s.P);
        Zpoly t = Ek;
        for (auto& x : t) {
            x *= c;
            red(x, s.P);
        }
        out.push_back(std::move(t));
        if (k + 1 < s.K) Ek = zmul(Ek, E, s.P);
    }
    return out;
}

mpz_class lift_int(const Setup& s, const PadicNumber& a) {
    if (a.is_zero()) return 0;
    if (a.val() < 0) throw std::domain_error("expected a p-integral value");
    mpz_class r = a.lift();
    red(r, s.P);
    return r;
}

namespace {

PadicNumber scaled(const mpz_class& a, long e, const Setup& s) {
    return PadicNumber::from_int(a, s.p, s.prec_out()).shift(-e);
}

void add_to(std::map<long, PadicPoly>& h, long key, size_t idx, const PadicNumber& c) {
    auto& poly = h[key];
    if (poly.size() <= idx) poly.resize(idx + 1, PadicNumber::zero(c.prime(), c.prec()));
    poly[idx] = poly[idx] + c;
}

}  // namespace

Reduced reduce_forms(const Setup& s, std::map<long, Zpoly> num) {
    const long p = s.p;
    const int d = s.d;
    Reduced out;
    Zpoly acc;
    long e = 0;
    long jtop = num.empty() ? 0 : num.rbegin()->first;
    Zpoly q1, r1(d), S, R;
    for (long j = jtop; j >= 1; --j) {
        auto it = num.find(j);
        if (it != num.end()) {
            const Zpoly& t = it->second;
            if (acc.size() < t.size()) acc.resize(t.size());
            mpz_class pe = mpz_pow(p, e);
            for (size_t l = 0; l < t.size(); ++l) mpz_addmul(acc[l].get_mpz_t(), t[l].get_mpz_t(), pe.get_mpz_t());
        }
        if (acc.empty()) continue;
        // acc = q1 Q + r1
        size_t n = acc.size();
        q1.assign(n > (size_t)d ? n - d : 0, 0);
        for (size_t k = n; k-- > (size_t)d;) {
            red(acc[k], s.P);
            const mpz_class& c = acc[k];
            q1[k - d] = c;
            if (mpz_sgn(c.get_mpz_t()) == 0) continue;
            for (int l = 0; l < d; ++l) mpz_submul(acc[k - d + l].get_mpz_t(), c.get_mpz_t(), s.Q[l].get_mpz_t());
        }
        for (int l = 0; l < d; ++l) {
            r1[l] = l < (int)n ? acc[l] : mpz_class(0);
            red(r1[l], s.P);
        }
        // S = b r1 mod Q
        Zpoly br = zmul(s.b, r1, s.P);
        for (size_t k = br.size(); k-- > (size_t)d;) {
            const mpz_class c = br[k];
            for (int l = 0; l < d; ++l) mpz_submul(br[k - d + l].get_mpz_t(), c.get_mpz_t(), s.Q[l].get_mpz_t());
            br[k] = 0;
        }
        S.assign(d, 0);
        for (int l = 0; l < d && l < (int)br.size(); ++l) {
            S[l] = br[l];
            red(S[l], s.P);
        }
        // S Q' = q2 Q + r1; R = q1 - q2
        Zpoly sq = zmul(S, s.dQ, s.P);
        R = q1;
        if (sq.size() > (size_t)d) {
            if (R.size() < sq.size() - d) R.resize(sq.size() - d);
            for (size_t k = sq.size(); k-- > (size_t)d;) {
                red(sq[k], s.P);
                const mpz_class c = sq[k];
                R[k - d] -= c;
                for (int l = 0; l < d; ++l) mpz_submul(sq[k - d + l].get_mpz_t(), c.get_mpz_t(), s.Q[l].get_mpz_t());
            }
        }
        // P dx/(2y^{2j+1}) = (R + 2S'/(2j-1)) dx/(2y^{2j-1}) - d(S/((2j-1) y^{2j-1}))
        long m = 2 * j - 1, v = val_small(m, p), u = m;
        for (long t = 0; t < v; ++t) u /= p;
        for (int l = 0; l < d; ++l)
            if (mpz_sgn(S[l].get_mpz_t())) add_to(out.h, -m, l, -scaled(S[l], e, s).div_int(m));
        mpz_class pv = mpz_pow(p, v), twoinv = 2 * inv_mod(u, s.P);
        acc.assign(std::max(R.size(), (size_t)d - 1), 0);
        for (size_t k = 0; k < R.size(); ++k) acc[k] = R[k] * pv;
        for (int l = 1; l < d; ++l) mpz_addmul(acc[l - 1].get_mpz_t(), S[l].get_mpz_t(), mpz_class(twoinv * l).get_mpz_t());
        for (auto& x : acc) red(x, s.P);
        while (!acc.empty() && mpz_sgn(acc.back().get_mpz_t()) == 0) acc.pop_back();
        e += v;
    }
    if (auto it = num.find(0); it != num.end()) {
        const Zpoly& t = it->second;
        if (acc.size() < t.size()) acc.resize(t.size());
        mpz_class pe = mpz_pow(p, e);
        for (size_t l = 0; l < t.size(); ++l) mpz_addmul(acc[l].get_mpz_t(), t[l].get_mpz_t(), pe.get_mpz_t());
    }
    // polynomial part: d(x^k y) = (2k x^{k-1} Q + x^k Q') dx/(2y)
    for (auto& x : acc) red(x, s.P);
    for (long D = (long)acc.size() - 1; D >= 2 * s.g; --D) {
        mpz_class a = acc[D];
        red(a, s.P);
        if (a == 0) continue;
        long k = D - 2 * s.g, m = 2 * k + 2 * s.g + 1, v = val_small(m, p), u = m;
        for (long t = 0; t < v; ++t) u /= p;
        add_to(out.h, 1, (size_t)k, scaled(a, e, s).div_int(m));
        if (v > 0) {
            mpz_class pv = mpz_pow(p, v);
            for (long t = 0; t <= D; ++t) {
                acc[t] *= pv;
                red(acc[t], s.P);
            }
            e += v;
        }
        mpz_class c = a * inv_mod(u, s.P) % s.P;
        if (k > 0)
            for (int l = 0; l <= d; ++l) mpz_submul(acc[k - 1 + l].get_mpz_t(), c.get_mpz_t(), mpz_class(s.Q[l] * (2 * k)).get_mpz_t());
        for (int l = 0; l < d; ++l) mpz_submul(acc[k + l].get_mpz_t(), c.get_mpz_t(), s.dQ[l].get_mpz_t());
        for (long t = std::max(0L, k - 1); t <= D; ++t) red(acc[t], s.P);
        if (acc[D] != 0) throw std::logic_error("polynomial reduction failed to cancel");
    }
    long prec = std::min(s.prec_out() - e, s.T);
    for (int l = 0; l < 2 * s.g; ++l) {
        mpz_class a = l < (long)acc.size() ? acc[l] : mpz_class(0);
        out.coords.push_back(scaled(a, e, s).with_prec(prec));
    }
    for (auto& [key, poly] : out.h)
        for (auto& c : poly) c = c.with_prec(std::min(c.prec(), s.T));
    return out;
}

PadicNumber eval_exact(const std::map<long, PadicPoly>& h, const PadicNumber& x, const PadicNumber& y) {
    PadicNumber sum = PadicNumber::zero(x.prime(), std::min(x.prec(), y.prec()) + 64);
    if (h.empty()) return sum;
    long lowest = h.begin()->first;
    std::vector<PadicNumber> pw;  // y^{-1}, y^{-3}, ...
    if (lowest < 0) {
        PadicNumber yi = y.inverse(), yi2 = yi * yi, cur = yi;
        for (long e = -1; e >= lowest; e -= 2) {
            pw.push_back(cur);
            cur = cur * yi2;
        }
    }
    for (auto& [e, poly] : h) {
        PadicNumber v = poly_eval(poly, x);
        sum = sum + (e > 0 ? v * y.pow(e) : v * pw[(size_t)(-e - 1) / 2]);
    }
    return sum;
}

}  // namespace kedlaya

namespace {

using namespace kedlaya;

FrobeniusData run_frobenius(const OddCurveQp& C, long Wf) {
    Setup s = make_setup(C, Wf);
    long p = s.p;
    Zpoly phi(p + 1);
    phi[p] = 1;
    auto Tk = lift_series(s, phi);
    int n = 2 * C.g;
    std::vector<Reduced> cols(n);
    std::vector<std::exception_ptr> errs(n);
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i)
        pool.emplace_back([&, i] {
            try {
                // phi^*(x^i dx/(2y)) = sum_k binom(-1/2,k) p x^{p(i+1)-1} E^k dx/(2 y^{p(2k+1)})
                std::map<long, Zpoly> num;
                size_t shift = (size_t)(p * (i + 1) - 1);
                for (long k = 0; k < s.K; ++k) {
                    Zpoly t(Tk[k].size() + shift);
                    for (size_t l = 0; l < Tk[k].size(); ++l) t[l + shift] = Tk[k][l] * p;
                    num[s.level(k)] = std::move(t);
                }
                cols[i] = reduce_forms(s, std::move(num));
            } catch (...) {
                errs[i] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    FrobeniusData fd;
    fd.curve = C;
    fd.working = Wf;
    fd.terms = s.K;
    fd.F = PadicMatrix(n, n, C.p, Wf);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) fd.F(j, i) = cols[i].coords[j];
        fd.h.push_back(std::move(cols[i].h));
    }
    return fd;
}

}  // namespace

PadicNumber poly_eval(const PadicPoly& a, const PadicNumber& x) {
    if (a.empty()) return PadicNumber::zero(x.prime(), x.prec());
    PadicNumber r = a.back();
    for (size_t i = a.size() - 1; i-- > 0;) r = r * x + a[i];
    return r;
}

OddCurveQp OddCurveQp::from_rational(const RatPoly& f0, long p, long N) {
    RatPoly f = f0;
    trim(f);
    validate_curve(f, p);
    OddCurveQp C;
    C.p = p;
    C.g = ((int)f.size() - 2) / 2;
    C.rational = f;
    for (auto& c : f) C.Q.push_back(PadicNumber::from_rational(c, p, N));
    return C;
}

OddCurveQp OddCurveQp::from_model(const OddModelQp& m) {
    OddCurveQp C;
    C.p = m.p;
    C.g = m.genus;
    C.Q = m.Q;
    return C;
}

fq::Poly OddCurveQp::reduce() const {
    fq::Poly r;
    for (auto& c : Q) r.push_back((fq::u64)mpz_class(c.with_prec(1).lift() % p).get_ui());
    fq::trim(r);
    return r;
}

long OddCurveQp::prec() const {
    long n = PadicNumber::INF_VAL;
    for (auto& c : Q) n = std::min(n, c.prec());
    return n;
}

PadicNumber FrobeniusData::eval_h(int i, const PadicNumber& x, const PadicNumber& y) const {
    return kedlaya::eval_exact(h[i], x, y);
}

bool zeta_consistent(const PadicMatrix& F, const LPolynomial& L, long prec) {
    auto cp = F.charpoly();
    size_t n = F.rows();
    if (L.c.size() != n + 1) return false;
    long p = F.prime();
    for (size_t k = 0; k <= n; ++k) {
        PadicNumber diff = (cp[n - k] - PadicNumber::from_int(L.c[k], p, prec + 8)).with_prec(prec);
        if (!diff.is_zero()) return false;
    }
    return true;
}

FrobeniusData frobenius_matrix(const OddCurveQp& C, long N, bool certify) {
    if (C.p < 3 || !is_prime(C.p)) throw std::invalid_argument("p must be an odd prime");
    long p = C.p;
    long deg = 2 * C.g + 1;
    long Wf = N + C.g + ceil_log(p, 2.0 * N * deg);
    std::optional<LPolynomial> L;
    for (int attempt = 0; attempt < 4; ++attempt, Wf += 2) {
        FrobeniusData fd = run_frobenius(C, Wf);
        fd.N = N;
        if (fd.F.min_prec() < N) {
            if (C.rational.empty())
                throw PrecisionBudgetError("raise N: curve coefficients known to p^" + std::to_string(C.prec()) + " only",
                                           C.prec() + N - fd.F.min_prec());
            continue;
        }
        if (certify && C.g <= 2) {
            if (!L) L = lpolynomial(C.reduce(), (fq::u64)p);
            if (!zeta_consistent(fd.F, *L, std::min(N, fd.F.min_prec()))) continue;
        }
        return fd;
    }
    throw PrecisionBudgetError("raise N: Frobenius not certified at working precision " + std::to_string(Wf - 2), Wf);
}

FrobeniusData frobenius_matrix(const RatPoly& f, long p, long N, bool certify) {
    return frobenius_matrix(OddCurveQp::from_rational(f, p, N), N, certify);
}

PadicMatrix hecke_from_frobenius(const PadicMatrix& F, long p) {
    PadicNumber pp = PadicNumber::from_int(p, p, F.min_prec() + 64);
    return F + F.inverse() * pp;
}

std::vector<mpz_class> hecke_charpoly(const PadicMatrix& A, long p) {
    auto cp = A.charpoly();
    size_t n = A.rows();
    std::vector<mpz_class> out;
    double bound = 2 * std::sqrt((double)p);
    for (size_t k = 0; k <= n; ++k) {
        if (cp[k].val() < 0) throw PrecisionError("Hecke charpoly not integral: raise N");
        mpq_class q = cp[k].to_rational_approx();
        if (q.get_den() != 1) throw PrecisionError("Hecke charpoly not integral: raise N");
        mpz_class bin;
        mpz_bin_uiui(bin.get_mpz_t(), n, k);
        double lim = bin.get_d() * std::pow(bound, (double)(n - k)) + 0.5;
        if (std::abs(q.get_d()) > lim) throw PrecisionError("Hecke charpoly outside Weil bounds: raise N");
        out.push_back(q.get_num());
    }
    return out;
}

// ---- cup product ----

namespace {

struct Laurent {
    long val = 0;
    std::vector<mpq_class> c;
    mpq_class at(long n) const {
        long i = n - val;
        return (i >= 0 && i < (long)c.size()) ? c[i] : mpq_class(0);
    }
};

// s^{-1/2} for a power series with s_0 = 1, first M terms
std::vector<mpq_class> inv_sqrt_series(const std::vector<mpq_class>& s, size_t M) {
    std::vector<mpq_class> a(M);
    a[0] = 1;
    mpq_class alpha(-1, 2);
    for (size_t n = 1; n < M; ++n) {
        mpq_class acc = 0;
        for (size_t k = 1; k <= n && k < s.size(); ++k) acc += ((alpha + 1) * (long)k - (long)n) * s[k] * a[n - k];
        a[n] = acc / (long)n;
    }
    return a;
}

}  // namespace

RatMatrix cup_product_matrix(const RatPoly& f0, const std::vector<RatPoly>& forms, int extra_terms) {
    RatPoly f = f0;
    trim(f);
    int deg = (int)f.size() - 1;
    if (deg < 3) throw std::invalid_argument("curve degree too small");
    bool odd = deg % 2;
    int g = odd ? (deg - 1) / 2 : (deg - 2) / 2;
    mpq_class a = f.back();
    long D = 0;
    for (auto& h : forms) D = std::max(D, (long)h.size());
    size_t M = (size_t)(4 * D + 12 + extra_terms);
    // w^2 as a series in t
    std::vector<mpq_class> s(M);
    for (int k = 0; k <= deg; ++k) {
        long e = odd ? 2L * (deg - k) : (long)(deg - k);
        if (e < (long)M) s[e] += f[k] / a;
    }
    auto iw = inv_sqrt_series(s, M);
    // local expansions of the forms
    std::vector<Laurent> tw;
    for (auto h : forms) {
        trim(h);
        Laurent L;
        long hd = std::max(0L, (long)h.size() - 1);
        if (odd)
            L.val = 2L * g - 2 - 2 * hd;
        else
            L.val = (long)g - 1 - hd;
        L.c.assign(M, 0);
        for (long k = 0; k < (long)h.size(); ++k) {
            long ex = odd ? 2L * g - 2 - 2 * k : (long)g - 1 - k;
            long off = ex - L.val;
            mpq_class coef = odd ? mpq_class(-2 * h[k]) : mpq_class(-h[k]);
            for (size_t n = 0; n + off < M; ++n) L.c[n + off] += coef * iw[n];
        }
        tw.push_back(std::move(L));
    }
    size_t n = forms.size();
    RatMatrix C(n, std::vector<mpq_class>(n));
    mpq_class scale = odd ? mpq_class(1) / a : mpq_class(2) / a;
    for (size_t i = 0; i < n; ++i) {
        // primitive of omega_i
        Laurent I;
        I.val = tw[i].val + 1;
        I.c.resize(tw[i].c.size());
        for (size_t k = 0; k < tw[i].c.size(); ++k) {
            long ex = tw[i].val + (long)k;
            if (ex == -1) {
                if (tw[i].c[k] != 0) throw std::invalid_argument("form is not of the second kind (nonzero residue)");
                continue;
            }
            I.c[k] = tw[i].c[k] / (ex + 1);
        }
        for (size_t j = 0; j < n; ++j) {
            mpq_class res = 0;
            for (size_t k = 0; k < tw[j].c.size(); ++k) {
                long ex = tw[j].val + (long)k;
                res += tw[j].c[k] * I.at(-1 - ex);
            }
            C[i][j] = res * scale;
        }
    }
    return C;
}

std::vector<RatPoly> default_basis(int g) {
    std::vector<RatPoly> b;
    for (int i = 0; i < 2 * g; ++i) {
        RatPoly h(i + 1, 0);
        h[i] = mpq_class(1, 2);
        b.push_back(h);
    }
    return b;
}

std::vector<PadicNumber> reduce_polynomial_form(const OddCurveQp& C, PadicPoly P) {
    int g = C.g, d = 2 * g + 1;
    long p = C.p;
    long N = C.prec();
    for (auto& c : P) N = std::min(N, c.prec());
    PadicPoly dQ;
    for (int i = 1; i <= d; ++i) dQ.push_back(C.Q[i].mul_int(i));
    for (long D = (long)P.size() - 1; D >= 2 * g; --D) {
        PadicNumber a = P[D];
        if (a.is_zero()) continue;
        long k = D - 2 * g;
        PadicNumber c = a.div_int(2 * k + 2 * g + 1);
        if (k > 0)
            for (int l = 0; l <= d; ++l) P[k - 1 + l] = P[k - 1 + l] - c * C.Q[l].mul_int(2 * k);
        for (int l = 0; l < d; ++l) P[k + l] = P[k + l] - c * dQ[l];
        P[D] = PadicNumber::zero(p, P[D].prec());
    }
    std::vector<PadicNumber> out;
    for (int i = 0; i < 2 * g; ++i) out.push_back(i < (int)P.size() ? P[i] : PadicNumber::zero(p, N));
    return out;
}

PadicMatrix even_forms_in_odd_basis(const OddModelQp& m, const std::vector<RatPoly>& forms, long N) {
    long p = m.p;
    int g = m.genus, d = 2 * g + 1;
    OddCurveQp C = OddCurveQp::from_model(m);
    PadicMatrix out(2 * g, forms.size(), p, N);
    for (size_t col = 0; col < forms.size(); ++col) {
        RatPoly h = forms[col];
        trim(h);
        long hd = std::max(0L, (long)h.size() - 1);
        long off = std::max(0L, hd - g + 1);
        // L[n] = coefficient of U^{n - off} in -2 h(r + c/U) U^{g-1}
        std::vector<PadicNumber> L(off + d + g + 2, PadicNumber::zero(p, N));
        for (long k = 0; k < (long)h.size(); ++k) {
            PadicNumber hk = PadicNumber::from_rational(h[k], p, N).mul_int(-2);
            for (long i = 0; i <= k; ++i) {
                mpz_class bin;
                mpz_bin_uiui(bin.get_mpz_t(), k, i);
                PadicNumber t = hk.mul_int(bin) * m.r.pow(k - i) * m.c.pow(i);
                L[g - 1 - i + off] = L[g - 1 - i + off] + t;
            }
        }
        // kill U^{-(m+1)} with d(V/U^mm) = (Q' U - 2 mm Q) U^{-(mm+1)} dU/(2V)
        for (long mm = off - 1; mm >= 1; --mm) {
            PadicNumber a = L[off - (mm + 1)];
            if (a.is_zero()) continue;
            PadicNumber c = a / m.Q[0].mul_int(-2 * mm);
            for (int l = 0; l <= d; ++l) {
                // Q' U term: coefficient of U^l is l Q_l
                PadicNumber coef = m.Q[l].mul_int(l - 2 * mm);
                long ex = l - (mm + 1);
                L[ex + off] = L[ex + off] - c * coef;
            }
        }
        if (off >= 1 && !L[off - 1].is_zero()) throw std::invalid_argument("form is not of the second kind (residue at U = 0)");
        PadicPoly P(L.begin() + off, L.end());
        auto v = reduce_polynomial_form(C, P);
        for (int i = 0; i < 2 * g; ++i) out(i, col) = v[i];
    }
    return out;
}

// ---- Neron-Severi classes ----

namespace {

PadicNumber trace(const PadicMatrix& B) {
    PadicNumber t = B(0, 0);
    for (size_t i = 1; i < B.rows(); ++i) t = t + B(i, i);
    return t;
}

// rank of the list of flattened matrices (minimal-valuation pivoting)
size_t padic_rank(std::vector<std::vector<PadicNumber>> rows) {
    size_t rank = 0;
    size_t ncols = rows.empty() ? 0 : rows[0].size();
    for (size_t c = 0; c < ncols && rank < rows.size(); ++c) {
        size_t best = rows.size();
        long bv = PadicNumber::INF_VAL;
        for (size_t r = rank; r < rows.size(); ++r)
            if (!rows[r][c].is_zero() && rows[r][c].val() < bv) bv = rows[r][c].val(), best = r;
        if (best == rows.size()) continue;
        std::swap(rows[rank], rows[best]);
        for (size_t r = rank + 1; r < rows.size(); ++r) {
            if (rows[r][c].is_zero()) continue;
            PadicNumber f = rows[r][c] / rows[rank][c];
            for (size_t k = c; k < ncols; ++k) rows[r][k] = rows[r][k] - f * rows[rank][k];
        }
        ++rank;
    }
    return rank;
}

}  // namespace

PadicMatrix ns_class_padic(const PadicMatrix& B, const PadicMatrix& Cinv, int g, ZSign sign) {
    size_t n = B.rows();
    if (n != (size_t)(2 * g)) throw std::invalid_argument("matrix size does not match genus");
    long p = B.prime();
    std::vector<std::vector<PadicNumber>> pows;
    PadicMatrix Bk = PadicMatrix::identity(n, p, B.min_prec() + 64);
    for (int k = 0; k < g; ++k) {
        std::vector<PadicNumber> flat;
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j) flat.push_back(Bk(i, j));
        pows.push_back(flat);
        Bk = Bk * B;
    }
    if (padic_rank(pows) < (size_t)g)
        throw std::domain_error("A_p does not generate the endomorphism algebra (minimal polynomial of degree < g); try another p or power");
    PadicMatrix M = PadicMatrix::identity(n, p, B.min_prec() + 64) * trace(B) - B * PadicNumber::from_int(2 * g, p, B.min_prec() + 64);
    PadicMatrix Z = M * Cinv;
    if (sign == ZSign::Minus) Z = Z * PadicNumber::from_int(-1, p, Z.min_prec() + 64);
    if (Z.is_zero()) throw std::domain_error("trivial Neron-Severi class (Z = 0)");
    return Z;
}

RatMatrix ns_class(const PadicMatrix& B, const RatMatrix& C, int g, ZSign sign) {
    long p = B.prime();
    long N = B.min_prec();
    PadicMatrix Cinv = PadicMatrix::from_rational(rat_inverse(C), p, N + 64);
    PadicMatrix Z = ns_class_padic(B, Cinv, g, sign);
    long Nz = Z.min_prec();
    if (Nz < 1) throw PrecisionError("raise N: no precision left in Z");
    mpz_class m = mpz_pow(p, Nz), H;
    mpz_sqrt(H.get_mpz_t(), mpz_class((m - 1) / 2).get_mpz_t());
    if (2 * H * H >= m) --H;
    RatMatrix out(Z.rows(), std::vector<mpq_class>(Z.cols()));
    for (size_t i = 0; i < Z.rows(); ++i)
        for (size_t j = 0; j < Z.cols(); ++j)
            if (!try_rational_reconstruct(Z(i, j), H, out[i][j]))
                throw PrecisionError("raise N: entry of Z not recognizably rational");
    return out;
}

UnitRootSplitting unit_root_splitting(const PadicMatrix& F, int g) {
    size_t n = F.rows();
    long p = F.prime();
    long N = F.min_prec();
    auto cp = F.charpoly();
    if (cp[g].val() != 0) throw std::domain_error("reduction is not ordinary at p; choose another p");
    PadicMatrix Fn = F;
    long pw = 1;
    while (pw < N + g + 2) Fn = Fn * Fn, pw *= 2;
    // g independent columns of F^n
    std::vector<size_t> chosen;
    std::vector<std::vector<PadicNumber>> work(n, std::vector<PadicNumber>(n));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) work[j][i] = Fn(i, j);  // work[col] = column
    std::vector<std::vector<PadicNumber>> basis;
    std::vector<size_t> pivrow;
    for (size_t c = 0; c < n && chosen.size() < (size_t)g; ++c) {
        auto v = work[c];
        for (size_t b = 0; b < basis.size(); ++b) {
            if (v[pivrow[b]].is_zero()) continue;
            PadicNumber f = v[pivrow[b]] / basis[b][pivrow[b]];
            for (size_t k = 0; k < n; ++k) v[k] = v[k] - f * basis[b][k];
        }
        size_t pr = n;
        for (size_t k = 0; k < n; ++k)
            if (!v[k].is_zero() && v[k].val() == 0) {
                pr = k;
                break;
            }
        if (pr == n) continue;
        chosen.push_back(c);
        basis.push_back(v);
        pivrow.push_back(pr);
    }
    if (chosen.size() < (size_t)g) throw std::domain_error("unit-root subspace has rank < g; choose another p");
    UnitRootSplitting out;
    out.W = PadicMatrix(n, g, p, N);
    PadicMatrix B = PadicMatrix::identity(n, p, N);
    for (int k = 0; k < g; ++k)
        for (size_t i = 0; i < n; ++i) {
            out.W(i, k) = Fn(i, chosen[k]).with_prec(N);
            B(i, g + k) = out.W(i, k);
        }
    PadicMatrix D(n, n, p, N);
    for (int k = 0; k < g; ++k) D(k, k) = PadicNumber::from_int(1, p, N + 64);
    out.s2 = (B * D * B.inverse()).with_prec(N);
    out.s1 = (PadicMatrix::identity(n, p, N) - out.s2).with_prec(N);
    return out;
}

// ---- rational matrices ----

RatMatrix rat_inverse(const RatMatrix& A0) {
    size_t n = A0.size();
    RatMatrix A = A0, I(n, std::vector<mpq_class>(n));
    for (size_t i = 0; i < n; ++i) I[i][i] = 1;
    for (size_t c = 0; c < n; ++c) {
        size_t piv = c;
        while (piv < n && A[piv][c] == 0) ++piv;
        if (piv == n) throw std::domain_error("singular rational matrix");
        std::swap(A[c], A[piv]);
        std::swap(I[c], I[piv]);
        mpq_class inv = 1 / A[c][c];
        for (size_t k = 0; k < n; ++k) A[c][k] *= inv, I[c][k] *= inv;
        for (size_t r = 0; r < n; ++r) {
            if (r == c || A[r][c] == 0) continue;
            mpq_class f = A[r][c];
            for (size_t k = 0; k < n; ++k) A[r][k] -= f * A[c][k], I[r][k] -= f * I[c][k];
        }
    }
    return I;
}

RatMatrix rat_mul(const RatMatrix& A, const RatMatrix& B) {
    size_t n = A.size(), m = B.empty() ? 0 : B[0].size(), k = B.size();
    RatMatrix C(n, std::vector<mpq_class>(m));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < m; ++j)
            for (size_t l = 0; l < k; ++l) C[i][j] += A[i][l] * B[l][j];
    return C;
}

RatMatrix rat_transpose(const RatMatrix& A) {
    if (A.empty()) return {};
    RatMatrix T(A[0].size(), std::vector<mpq_class>(A.size()));
    for (size_t i = 0; i < A.size(); ++i)
        for (size_t j = 0; j < A[0].size(); ++j) T[j][i] = A[i][j];
    return T;
}

// ---- cache ----

namespace {

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
    return h;
}

std::string hex(uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)x);
    return buf;
}

}  // namespace

std::string frobenius_cache_key(const OddCurveQp& C, long N) {
    std::ostringstream os;
    os << C.p << ";" << N << ";";
    if (!C.rational.empty())
        for (auto& c : C.rational) os << c.get_str() << ",";
    else
        for (auto& c : C.Q) os << c.serialize() << ",";
    return "frob-p" + std::to_string(C.p) + "-N" + std::to_string(N) + "-" + hex(fnv1a(os.str()));
}

bool cache_load_matrix(const std::string& dir, const std::string& key, PadicMatrix& out) {
    std::ifstream in(std::filesystem::path(dir) / (key + ".mat"));
    if (!in) return false;
    std::string header, line, body;
    if (!std::getline(in, header)) return false;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    if (lines.empty() || lines.back().rfind("checksum ", 0) != 0) return false;
    std::string sum = lines.back().substr(9);
    lines.pop_back();
    body = header + "\n";
    for (auto& l : lines) body += l + "\n";
    if (hex(fnv1a(body)) != sum) return false;
    long p, r, c;
    std::istringstream hs(header);
    std::string tag;
    hs >> tag >> p >> r >> c;
    if (tag != "padic-matrix" || (long)lines.size() != r * c) return false;
    PadicMatrix M(r, c, p, 1);
    for (long i = 0; i < r; ++i)
        for (long j = 0; j < c; ++j) M(i, j) = PadicNumber::parse(lines[i * c + j], p);
    out = M;
    return true;
}

void cache_store_matrix(const std::string& dir, const std::string& key, const PadicMatrix& M) {
    std::filesystem::create_directories(dir);
    std::ostringstream body;
    body << "padic-matrix " << M.prime() << " " << M.rows() << " " << M.cols() << "\n";
    for (size_t i = 0; i < M.rows(); ++i)
        for (size_t j = 0; j < M.cols(); ++j) body << M(i, j).serialize() << "\n";
    std::string b = body.str();
    auto path = std::filesystem::path(dir) / (key + ".mat");
    auto tmp = path;
    tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    {
        std::ofstream out(tmp);
        out << b << "checksum " << hex(fnv1a(b)) << "\n";
        if (!out) throw std::runtime_error("cannot write cache file " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace qck
