// Capped absolute-precision p-adic numbers and matrices.
#pragma once

#include <gmpxx.h>

#include <climits>
#include <stdexcept>
#include <string>
#include <vector>

namespace qck {

struct PrecisionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

bool is_prime(long n);
mpz_class mpz_pow(long p, long e);
// v_p of a nonzero integer
long valuation(const mpz_class& n, long p);

// x = p^v * u + O(p^N).  Zero has v = INF_VAL.
class PadicNumber {
public:
    static constexpr long INF_VAL = LONG_MAX / 4;

    PadicNumber() = default;
    // zero to precision N
    static PadicNumber zero(long p, long N);
    static PadicNumber from_int(const mpz_class& n, long p, long N);
    static PadicNumber from_int(long n, long p, long N) { return from_int(mpz_class(n), p, N); }
    static PadicNumber from_rational(const mpq_class& q, long p, long N);
    // p^v * u mod p^N, normalizing u if p | u
    static PadicNumber make(long p, long v, const mpz_class& u, long N);

    long prime() const { return p_; }
    long val() const { return v_; }
    long prec() const { return N_; }
    long rel_prec() const { return v_ == INF_VAL ? 0 : N_ - v_; }
    const mpz_class& unit() const { return u_; }
    bool is_zero() const { return v_ == INF_VAL; }
    bool is_unit() const { return v_ == 0; }

    PadicNumber operator-() const;
    PadicNumber operator+(const PadicNumber& o) const;
    PadicNumber operator-(const PadicNumber& o) const;
    PadicNumber operator*(const PadicNumber& o) const;
    PadicNumber operator/(const PadicNumber& o) const;
    PadicNumber& operator+=(const PadicNumber& o) { return *this = *this + o; }
    PadicNumber& operator-=(const PadicNumber& o) { return *this = *this - o; }
    PadicNumber& operator*=(const PadicNumber& o) { return *this = *this * o; }
    PadicNumber& operator/=(const PadicNumber& o) { return *this = *this / o; }

    // exact integer scalars (precision shifts by v_p(k))
    PadicNumber mul_int(const mpz_class& k) const;
    PadicNumber div_int(const mpz_class& k) const;
    PadicNumber inverse() const;
    PadicNumber pow(long e) const;
    PadicNumber with_prec(long N) const;  // lowers precision only
    PadicNumber shift(long k) const;      // multiply by p^k
    PadicNumber sqrt() const;             // root of a square unit times even power
    PadicNumber teichmuller() const;

    // integer representative in [0, p^N) (v >= 0 required)
    mpz_class lift() const;
    // symmetric representative of p^{-min(v,0)} x
    mpq_class to_rational_approx() const;
    // digit sequence from p^v upward (v >= 0 required)
    std::vector<long> digits(long count) const;

    // zero to the common precision
    bool equals(const PadicNumber& o) const { return (*this - o).is_zero(); }

    std::string serialize() const;
    static PadicNumber parse(const std::string& s, long p);

private:
    long p_ = 0;
    long v_ = INF_VAL;
    long N_ = 0;
    mpz_class u_;
};

std::ostream& operator<<(std::ostream& os, const PadicNumber& x);

struct LogBranch {
    long p;
    PadicNumber log_p;  // value assigned to log p
    static LogBranch iwasawa(long p, long N) { return {p, PadicNumber::zero(p, N)}; }
};

PadicNumber padic_log(const PadicNumber& u, const LogBranch& branch);
PadicNumber padic_log(const PadicNumber& u);  // Iwasawa branch
PadicNumber padic_exp(const PadicNumber& x);  // v(x) >= 1

// a/b with |a|,|b| <= H and a/b = x mod p^N; throws if none
mpq_class rational_reconstruct(const PadicNumber& x, const mpz_class& H);
bool try_rational_reconstruct(const PadicNumber& x, const mpz_class& H, mpq_class& out);

class PadicMatrix {
public:
    PadicMatrix() = default;
    PadicMatrix(size_t r, size_t c, long p, long N);
    static PadicMatrix identity(size_t n, long p, long N);
    static PadicMatrix from_rational(const std::vector<std::vector<mpq_class>>& m, long p, long N);

    size_t rows() const { return r_; }
    size_t cols() const { return c_; }
    long prime() const { return p_; }
    PadicNumber& operator()(size_t i, size_t j) { return a_[i * c_ + j]; }
    const PadicNumber& operator()(size_t i, size_t j) const { return a_[i * c_ + j]; }

    PadicMatrix operator+(const PadicMatrix& o) const;
    PadicMatrix operator-(const PadicMatrix& o) const;
    PadicMatrix operator*(const PadicMatrix& o) const;
    PadicMatrix operator*(const PadicNumber& s) const;
    PadicMatrix transpose() const;
    PadicMatrix block(size_t r0, size_t c0, size_t nr, size_t nc) const;

    long min_prec() const;
    long min_val() const;
    bool is_zero() const;
    PadicMatrix with_prec(long N) const;

    PadicMatrix inverse() const;
    PadicNumber det() const;
    // coefficients c_0..c_n of det(T I - A), monic
    std::vector<PadicNumber> charpoly() const;

    std::string serialize() const;

private:
    size_t r_ = 0, c_ = 0;
    long p_ = 0;
    std::vector<PadicNumber> a_;
};

// X with A X = B; minimal-valuation pivoting
PadicMatrix padic_linear_solve(const PadicMatrix& A, const PadicMatrix& B);

}  // namespace qck
