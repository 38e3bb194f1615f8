#include "qck/padic.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace qck {

namespace {
constexpr long kExactPrec = 1L << 40;
}

bool is_prime(long n) {
    if (n < 2) return false;
    for (long d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

mpz_class mpz_pow(long p, long e) {
    mpz_class r;
    mpz_ui_pow_ui(r.get_mpz_t(), (unsigned long)p, (unsigned long)e);
    return r;
}

long valuation(const mpz_class& n, long p) {
    if (n == 0) return PadicNumber::INF_VAL;
    mpz_class t = n;
    long v = 0;
    while (mpz_divisible_ui_p(t.get_mpz_t(), p)) {
        mpz_divexact_ui(t.get_mpz_t(), t.get_mpz_t(), p);
        ++v;
    }
    return v;
}

static mpz_class mod_pos(const mpz_class& a, const mpz_class& m) {
    mpz_class r;
    mpz_mod(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t());
    return r;
}

static mpz_class inv_mod(const mpz_class& a, const mpz_class& m) {
    mpz_class r;
    if (!mpz_invert(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t()))
        throw PrecisionError("inverse of non-unit");
    return r;
}

PadicNumber PadicNumber::zero(long p, long N) {
    PadicNumber z;
    z.p_ = p;
    z.v_ = INF_VAL;
    z.N_ = N;
    z.u_ = 0;
    return z;
}

PadicNumber PadicNumber::make(long p, long v, const mpz_class& u, long N) {
    if (u == 0 || v >= N) return zero(p, N);
    mpz_class t = u;
    while (mpz_divisible_ui_p(t.get_mpz_t(), p)) {
        mpz_divexact_ui(t.get_mpz_t(), t.get_mpz_t(), p);
        ++v;
        if (v >= N) return zero(p, N);
    }
    PadicNumber x;
    x.p_ = p;
    x.v_ = v;
    x.N_ = N;
    x.u_ = mod_pos(t, mpz_pow(p, N - v));
    if (x.u_ == 0) return zero(p, N);
    return x;
}

PadicNumber PadicNumber::from_int(const mpz_class& n, long p, long N) {
    if (p < 3 || !is_prime(p)) throw std::invalid_argument("p must be an odd prime");
    return make(p, 0, n, N);
}

PadicNumber PadicNumber::from_rational(const mpq_class& q, long p, long N) {
    if (p < 2 || !is_prime(p)) throw std::invalid_argument("p not prime: " + std::to_string(p));
    if (N < 1) throw std::invalid_argument("precision N must be >= 1");
    if (q == 0) return zero(p, N);
    mpz_class num = q.get_num(), den = q.get_den();
    long vn = valuation(num, p), vd = valuation(den, p);
    num /= mpz_pow(p, vn);
    den /= mpz_pow(p, vd);
    long v = vn - vd;
    if (v >= N) return zero(p, N);
    mpz_class m = mpz_pow(p, N - v);
    return make(p, v, num * inv_mod(den, m), N);
}

PadicNumber PadicNumber::operator-() const {
    if (is_zero()) return *this;
    return make(p_, v_, -u_, N_);
}

PadicNumber PadicNumber::operator+(const PadicNumber& o) const {
    long N = std::min(N_, o.N_);
    if (is_zero()) return o.with_prec(N);
    if (o.is_zero()) return with_prec(N);
    long m = std::min(v_, o.v_);
    if (m >= N) return zero(p_, N);
    mpz_class X = u_ * mpz_pow(p_, v_ - m) + o.u_ * mpz_pow(p_, o.v_ - m);
    return make(p_, m, X, N);
}

PadicNumber PadicNumber::operator-(const PadicNumber& o) const { return *this + (-o); }

PadicNumber PadicNumber::operator*(const PadicNumber& o) const {
    if (is_zero() && o.is_zero()) return zero(p_, N_ + o.N_);
    if (is_zero()) return zero(p_, N_ + o.v_);
    if (o.is_zero()) return zero(p_, o.N_ + v_);
    long N = std::min(N_ + o.v_, o.N_ + v_);
    long v = v_ + o.v_;
    PadicNumber x;
    x.p_ = p_;
    x.v_ = v;
    x.N_ = N;
    x.u_ = mod_pos(u_ * o.u_, mpz_pow(p_, N - v));
    return x;
}

PadicNumber PadicNumber::operator/(const PadicNumber& o) const {
    if (o.is_zero()) throw PrecisionError("division by p-adic zero");
    if (is_zero()) return zero(p_, N_ - o.v_);
    long v = v_ - o.v_;
    long N = std::min(N_ - o.v_, o.N_ + v_ - 2 * o.v_);
    mpz_class m = mpz_pow(p_, N - v);
    PadicNumber x;
    x.p_ = p_;
    x.v_ = v;
    x.N_ = N;
    x.u_ = mod_pos(u_ * inv_mod(o.u_, m), m);
    return x;
}

PadicNumber PadicNumber::mul_int(const mpz_class& k) const {
    if (k == 0) return zero(p_, kExactPrec);
    long vk = valuation(k, p_);
    mpz_class kk = k / mpz_pow(p_, vk);
    if (is_zero()) return zero(p_, N_ + vk);
    return make(p_, v_ + vk, u_ * kk, N_ + vk);
}

PadicNumber PadicNumber::div_int(const mpz_class& k) const {
    if (k == 0) throw PrecisionError("division by zero integer");
    long vk = valuation(k, p_);
    mpz_class kk = k / mpz_pow(p_, vk);
    if (is_zero()) return zero(p_, N_ - vk);
    long v = v_ - vk, N = N_ - vk;
    return make(p_, v, u_ * inv_mod(kk, mpz_pow(p_, N - v)), N);
}

PadicNumber PadicNumber::inverse() const {
    if (is_zero()) throw PrecisionError("inverse of p-adic zero");
    long v = -v_, N = N_ - 2 * v_;
    PadicNumber x;
    x.p_ = p_;
    x.v_ = v;
    x.N_ = N;
    x.u_ = inv_mod(u_, mpz_pow(p_, N - v));
    return x;
}

PadicNumber PadicNumber::pow(long e) const {
    if (e < 0) return inverse().pow(-e);
    if (e == 0) return make(p_, 0, 1, is_zero() ? N_ : std::max(1L, N_ - v_));
    PadicNumber r, b = *this;
    bool have = false;
    while (e) {
        if (e & 1) {
            r = have ? r * b : b;
            have = true;
        }
        e >>= 1;
        if (e) b = b * b;
    }
    return r;
}

PadicNumber PadicNumber::with_prec(long N) const {
    if (N >= N_) return *this;
    if (is_zero()) return zero(p_, N);
    return make(p_, v_, u_, N);
}

PadicNumber PadicNumber::shift(long k) const {
    PadicNumber x = *this;
    x.N_ += k;
    if (!is_zero()) x.v_ += k;
    return x;
}

// square root of a mod p (p odd prime, a a nonzero square)
static mpz_class sqrt_mod_p(const mpz_class& a, long p) {
    mpz_class P = p, am = mod_pos(a, P);
    if (mpz_legendre(am.get_mpz_t(), P.get_mpz_t()) != 1) throw std::domain_error("not a square mod p");
    if (p % 4 == 3) {
        mpz_class r;
        mpz_powm_ui(r.get_mpz_t(), am.get_mpz_t(), (p + 1) / 4, P.get_mpz_t());
        return r;
    }
    long q = p - 1, s = 0;
    while (q % 2 == 0) q /= 2, ++s;
    mpz_class z = 2;
    while (mpz_legendre(z.get_mpz_t(), P.get_mpz_t()) != -1) ++z;
    mpz_class c, r, t, b;
    mpz_powm_ui(c.get_mpz_t(), z.get_mpz_t(), q, P.get_mpz_t());
    mpz_powm_ui(r.get_mpz_t(), am.get_mpz_t(), (q + 1) / 2, P.get_mpz_t());
    mpz_powm_ui(t.get_mpz_t(), am.get_mpz_t(), q, P.get_mpz_t());
    long m = s;
    while (t != 1) {
        long i = 0;
        mpz_class tt = t;
        while (tt != 1) tt = tt * tt % P, ++i;
        b = c;
        for (long j = 0; j < m - i - 1; ++j) b = b * b % P;
        r = r * b % P;
        c = b * b % P;
        t = t * c % P;
        m = i;
    }
    return r;
}

PadicNumber PadicNumber::sqrt() const {
    if (is_zero()) return zero(p_, N_ / 2);
    if (v_ % 2) throw std::domain_error("odd valuation has no square root");
    long rel = N_ - v_;
    mpz_class mod = mpz_pow(p_, rel);
    mpz_class r = sqrt_mod_p(u_, p_);
    // Newton: r <- r - (r^2 - u)/(2r)
    for (long k = 1; k < rel; k *= 2) {
        long kk = std::min(2 * k, rel);
        mpz_class m = mpz_pow(p_, kk);
        r = mod_pos(r - (r * r - u_) * inv_mod(2 * r, m), m);
    }
    return make(p_, v_ / 2, mod_pos(r, mod), v_ / 2 + rel);
}

PadicNumber PadicNumber::teichmuller() const {
    if (v_ != 0) throw std::domain_error("Teichmuller lift of non-unit");
    mpz_class m = mpz_pow(p_, N_), t = u_;
    for (long k = 0; k < N_; ++k) mpz_powm_ui(t.get_mpz_t(), t.get_mpz_t(), p_, m.get_mpz_t());
    return make(p_, 0, t, N_);
}

mpz_class PadicNumber::lift() const {
    if (is_zero()) return 0;
    if (v_ < 0) throw std::domain_error("lift of non-integral p-adic");
    return u_ * mpz_pow(p_, v_);
}

mpq_class PadicNumber::to_rational_approx() const {
    if (is_zero()) return 0;
    mpz_class m = mpz_pow(p_, N_ - v_), u = u_;
    if (2 * u > m) u -= m;
    mpq_class q(u);
    if (v_ >= 0)
        q *= mpz_pow(p_, v_);
    else
        q /= mpz_pow(p_, -v_);
    q.canonicalize();
    return q;
}

std::vector<long> PadicNumber::digits(long count) const {
    std::vector<long> d;
    mpz_class t = u_;
    for (long i = 0; i < count; ++i) {
        d.push_back(mpz_fdiv_ui(t.get_mpz_t(), p_));
        mpz_fdiv_q_ui(t.get_mpz_t(), t.get_mpz_t(), p_);
    }
    return d;
}

std::string PadicNumber::serialize() const {
    std::ostringstream os;
    if (is_zero())
        os << "v:inf u:0 mod p^" << N_;
    else
        os << "v:" << v_ << " u:" << u_.get_str() << " mod p^" << N_;
    return os.str();
}

PadicNumber PadicNumber::parse(const std::string& s, long p) {
    std::string vs, us;
    long N = 0;
    auto a = s.find("v:"), b = s.find("u:"), c = s.find("mod p^");
    if (a == std::string::npos || b == std::string::npos || c == std::string::npos)
        throw std::invalid_argument("malformed p-adic: " + s);
    vs = s.substr(a + 2, b - a - 2);
    us = s.substr(b + 2, c - b - 2);
    N = std::stol(s.substr(c + 6));
    auto trim = [](std::string& x) {
        x.erase(0, x.find_first_not_of(' '));
        x.erase(x.find_last_not_of(' ') + 1);
    };
    trim(vs);
    trim(us);
    if (vs == "inf") return zero(p, N);
    return make(p, std::stol(vs), mpz_class(us), N);
}

std::ostream& operator<<(std::ostream& os, const PadicNumber& x) { return os << x.serialize(); }

// log(1+z) for v(z) >= 1
static PadicNumber log_one_unit(const PadicNumber& w) {
    long p = w.prime();
    PadicNumber z = w - PadicNumber::from_int(1, p, w.prec());
    if (z.is_zero()) return PadicNumber::zero(p, z.prec());
    if (z.val() < 1) throw std::domain_error("log series needs a 1-unit");
    long N = z.prec();
    PadicNumber sum = PadicNumber::zero(p, N), term = z;
    for (long k = 1;; ++k) {
        if (k * z.val() - (long)(std::log((double)k) / std::log((double)p) + 1e-9) >= N) break;
        PadicNumber t = term.div_int(k);
        sum = (k % 2) ? sum + t : sum - t;
        term = term * z;
    }
    return sum.with_prec(N);
}

PadicNumber padic_log(const PadicNumber& u, const LogBranch& branch) {
    if (u.is_zero()) throw std::domain_error("log of zero");
    long p = u.prime();
    // unit part to its relative precision
    PadicNumber unit = PadicNumber::make(p, 0, u.unit(), u.rel_prec());
    PadicNumber l = log_one_unit(unit.pow(p - 1)).div_int(p - 1);
    if (u.val() != 0) l = l + branch.log_p.mul_int(u.val());
    return l;
}

PadicNumber padic_log(const PadicNumber& u) { return padic_log(u, LogBranch::iwasawa(u.prime(), kExactPrec)); }

PadicNumber padic_exp(const PadicNumber& x) {
    long p = x.prime();
    if (x.is_zero()) return PadicNumber::from_int(1, p, x.prec());
    if (x.val() < 1) throw std::domain_error("exp needs v(x) >= 1");
    long N = x.prec();
    PadicNumber sum = PadicNumber::from_int(1, p, N), term = PadicNumber::from_int(1, p, N + 1);
    long vfact = 0;
    for (long k = 1;; ++k) {
        term = (term * x).div_int(k);
        vfact += valuation(mpz_class(k), p);
        sum = sum + term;
        if ((k + 1) * x.val() - (vfact + (k + 1) / (p - 1)) >= N + 1 && k > 2) break;
    }
    return sum.with_prec(N);
}

bool try_rational_reconstruct(const PadicNumber& x, const mpz_class& H, mpq_class& out) {
    if (x.is_zero()) {
        out = 0;
        return true;
    }
    long p = x.prime();
    long v = x.val();
    mpz_class m = mpz_pow(p, x.prec() - std::min(v, 0L));
    if (2 * H * H >= m) throw PrecisionError("precision too low for rational reconstruction with this bound");
    // reconstruct y = p^{-min(v,0)} x, integral
    mpz_class r = v >= 0 ? x.lift() : x.unit();
    mpz_class r0 = m, r1 = mod_pos(r, m), t0 = 0, t1 = 1;
    while (abs(r1) > H) {
        mpz_class q = r0 / r1;
        mpz_class r2 = r0 - q * r1, t2 = t0 - q * t1;
        r0 = r1, r1 = r2, t0 = t1, t1 = t2;
    }
    if (t1 == 0 || abs(t1) > H) return false;
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), t1.get_mpz_t(), mpz_class(p).get_mpz_t());
    if (g != 1) return false;
    if (mod_pos(r1 - t1 * r, m) != 0) return false;
    mpq_class q(r1, t1);
    q.canonicalize();
    if (v < 0) q /= mpz_pow(p, -v);
    out = q;
    return true;
}

mpq_class rational_reconstruct(const PadicNumber& x, const mpz_class& H) {
    mpq_class q;
    if (!try_rational_reconstruct(x, H, q)) throw PrecisionError("not recognizably rational");
    return q;
}

// ---- matrices ----

PadicMatrix::PadicMatrix(size_t r, size_t c, long p, long N) : r_(r), c_(c), p_(p), a_(r * c, PadicNumber::zero(p, N)) {}

PadicMatrix PadicMatrix::identity(size_t n, long p, long N) {
    PadicMatrix m(n, n, p, N);
    for (size_t i = 0; i < n; ++i) m(i, i) = PadicNumber::from_int(1, p, N);
    return m;
}

PadicMatrix PadicMatrix::from_rational(const std::vector<std::vector<mpq_class>>& m, long p, long N) {
    PadicMatrix A(m.size(), m.empty() ? 0 : m[0].size(), p, N);
    for (size_t i = 0; i < A.r_; ++i)
        for (size_t j = 0; j < A.c_; ++j) A(i, j) = PadicNumber::from_rational(m[i][j], p, N);
    return A;
}

PadicMatrix PadicMatrix::operator+(const PadicMatrix& o) const {
    PadicMatrix m = *this;
    for (size_t k = 0; k < a_.size(); ++k) m.a_[k] = a_[k] + o.a_[k];
    return m;
}

PadicMatrix PadicMatrix::operator-(const PadicMatrix& o) const {
    PadicMatrix m = *this;
    for (size_t k = 0; k < a_.size(); ++k) m.a_[k] = a_[k] - o.a_[k];
    return m;
}

PadicMatrix PadicMatrix::operator*(const PadicMatrix& o) const {
    if (c_ != o.r_) throw std::invalid_argument("matrix dimension mismatch");
    PadicMatrix m(r_, o.c_, p_, 0);
    for (size_t i = 0; i < r_; ++i)
        for (size_t j = 0; j < o.c_; ++j) {
            PadicNumber s = (*this)(i, 0) * o(0, j);
            for (size_t k = 1; k < c_; ++k) s += (*this)(i, k) * o(k, j);
            m(i, j) = s;
        }
    return m;
}

PadicMatrix PadicMatrix::operator*(const PadicNumber& s) const {
    PadicMatrix m = *this;
    for (auto& x : m.a_) x = x * s;
    return m;
}

PadicMatrix PadicMatrix::transpose() const {
    PadicMatrix m(c_, r_, p_, 0);
    for (size_t i = 0; i < r_; ++i)
        for (size_t j = 0; j < c_; ++j) m(j, i) = (*this)(i, j);
    return m;
}

PadicMatrix PadicMatrix::block(size_t r0, size_t c0, size_t nr, size_t nc) const {
    PadicMatrix m(nr, nc, p_, 0);
    for (size_t i = 0; i < nr; ++i)
        for (size_t j = 0; j < nc; ++j) m(i, j) = (*this)(r0 + i, c0 + j);
    return m;
}

long PadicMatrix::min_prec() const {
    long m = PadicNumber::INF_VAL;
    for (auto& x : a_) m = std::min(m, x.prec());
    return m;
}

long PadicMatrix::min_val() const {
    long m = PadicNumber::INF_VAL;
    for (auto& x : a_) m = std::min(m, x.val());
    return m;
}

bool PadicMatrix::is_zero() const {
    return std::all_of(a_.begin(), a_.end(), [](const PadicNumber& x) { return x.is_zero(); });
}

PadicMatrix PadicMatrix::with_prec(long N) const {
    PadicMatrix m = *this;
    for (auto& x : m.a_) x = x.with_prec(N);
    return m;
}

PadicMatrix padic_linear_solve(const PadicMatrix& A, const PadicMatrix& B) {
    size_t n = A.rows();
    if (A.cols() != n || B.rows() != n) throw std::invalid_argument("linear solve: shape mismatch");
    size_t m = B.cols();
    long p = A.prime();
    std::vector<std::vector<PadicNumber>> a(n, std::vector<PadicNumber>(n + m));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) a[i][j] = A(i, j);
        for (size_t j = 0; j < m; ++j) a[i][n + j] = B(i, j);
    }
    std::vector<size_t> colperm(n);
    for (size_t j = 0; j < n; ++j) colperm[j] = j;
    for (size_t k = 0; k < n; ++k) {
        size_t bi = n, bj = n;
        long bv = PadicNumber::INF_VAL;
        for (size_t i = k; i < n; ++i)
            for (size_t j = k; j < n; ++j)
                if (!a[i][j].is_zero() && a[i][j].val() < bv) bv = a[i][j].val(), bi = i, bj = j;
        if (bi == n) throw PrecisionError("matrix singular to working precision");
        std::swap(a[k], a[bi]);
        if (bj != k) {
            for (size_t i = 0; i < n; ++i) std::swap(a[i][k], a[i][bj]);
            std::swap(colperm[k], colperm[bj]);
        }
        PadicNumber piv = a[k][k];
        for (size_t i = k + 1; i < n; ++i) {
            if (a[i][k].is_zero()) continue;
            PadicNumber f = a[i][k] / piv;
            for (size_t j = k + 1; j < n + m; ++j) a[i][j] -= f * a[k][j];
            a[i][k] = PadicNumber::zero(p, a[i][k].prec());
        }
    }
    PadicMatrix X(n, m, p, 0);
    for (size_t c = 0; c < m; ++c) {
        std::vector<PadicNumber> x(n);
        for (size_t k = n; k-- > 0;) {
            PadicNumber s = a[k][n + c];
            for (size_t j = k + 1; j < n; ++j) s -= a[k][j] * x[j];
            x[k] = s / a[k][k];
        }
        for (size_t k = 0; k < n; ++k) X(colperm[k], c) = x[k];
    }
    return X;
}

PadicMatrix PadicMatrix::inverse() const {
    long N = min_prec();
    return padic_linear_solve(*this, identity(r_, p_, N + std::max(0L, -min_val()) + 64));
}

PadicNumber PadicMatrix::det() const {
    auto cp = charpoly();
    return (r_ % 2) ? -cp[0] : cp[0];
}

// Berkowitz: division free
std::vector<PadicNumber> PadicMatrix::charpoly() const {
    size_t n = r_;
    if (n != c_) throw std::invalid_argument("charpoly of non-square matrix");
    long big = min_prec() + 64;
    auto one = PadicNumber::from_int(1, p_, big + (long)n * 64);
    // vect holds coefficients from leading: C[0]=1, C[1], ...
    std::vector<PadicNumber> vect{one};
    if (n == 0) return vect;
    vect = {one, -(*this)(0, 0)};
    for (size_t r = 1; r < n; ++r) {
        // S = A[r][0..r-1], Cc = A[0..r-1][r], Asub = A[0..r-1][0..r-1]
        std::vector<PadicNumber> S(r), Cc(r);
        for (size_t j = 0; j < r; ++j) S[j] = (*this)(r, j), Cc[j] = (*this)(j, r);
        PadicNumber arr = (*this)(r, r);
        // Q: Toeplitz column: q0=1, q1=-arr, q_{k+2} = -S Asub^k Cc
        std::vector<PadicNumber> q(r + 2);
        q[0] = one;
        q[1] = -arr;
        std::vector<PadicNumber> w = Cc;
        for (size_t k = 0; k < r; ++k) {
            PadicNumber s = S[0] * w[0];
            for (size_t j = 1; j < r; ++j) s += S[j] * w[j];
            q[k + 2] = -s;
            if (k + 1 < r) {
                std::vector<PadicNumber> nw(r);
                for (size_t i = 0; i < r; ++i) {
                    PadicNumber t = (*this)(i, 0) * w[0];
                    for (size_t j = 1; j < r; ++j) t += (*this)(i, j) * w[j];
                    nw[i] = t;
                }
                w = nw;
            }
        }
        std::vector<PadicNumber> nv(r + 2, PadicNumber::zero(p_, big + (long)n * 64));
        for (size_t i = 0; i < r + 2; ++i)
            for (size_t j = 0; j <= std::min(i, r); ++j)
                if (i - j < q.size()) nv[i] += q[i - j] * vect[j];
        vect = nv;
    }
    // vect[k] is coefficient of T^{n-k}
    std::vector<PadicNumber> c(n + 1);
    for (size_t k = 0; k <= n; ++k) c[n - k] = vect[k];
    return c;
}

std::string PadicMatrix::serialize() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < r_; ++i) {
        os << (i ? ", [" : "[");
        for (size_t j = 0; j < c_; ++j) os << (j ? ", \"" : "\"") << (*this)(i, j).serialize() << "\"";
        os << "]";
    }
    os << "]";
    return os.str();
}

}  // namespace qck
