// Hyperelliptic curves y^2 = f(x): models, point counts, Jacobian arithmetic over F_q.
#pragma once

#include <gmpxx.h>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qck/padic.hpp"
#include "qck/polyfp.hpp"

namespace qck {

struct CurveError : std::runtime_error {
    enum Kind { EvenDegree, DegreeTooSmall, NotMonic, NotIntegral, NotSquarefree, BadReduction };
    Kind kind;
    CurveError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

struct BudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class BaseRing { Q, Qp, Fq };

struct HyperellipticCurve {
    std::vector<mpq_class> f;  // c0 .. cd
    int genus = 0;
    BaseRing base = BaseRing::Q;
    long p = 0;
    std::string label;
    int degree() const { return (int)f.size() - 1; }
};

using RatPoly = std::vector<mpq_class>;

void trim(RatPoly& a);
RatPoly rat_deriv(const RatPoly& a);
RatPoly rat_gcd(RatPoly a, RatPoly b);
mpq_class rat_eval(const RatPoly& a, const mpq_class& x);

// Odd degree >= 5, monic, p-integral, good reduction at p.
HyperellipticCurve validate_curve(const RatPoly& f, long p);
// Squarefree curve over Q of any degree >= 5 (used for even models before conversion).
HyperellipticCurve curve_over_Q(const RatPoly& f, const std::string& label = "");

fq::Poly reduce_mod(const RatPoly& f, fq::u64 q);
bool good_reduction(const RatPoly& f, fq::u64 q);

// ---- Mobius transformation to an odd model ----
// For a simple root r of a degree 2g+2 polynomial f and c = f'(r):
//   x = r + c/U, y = V c / U^{g+1} gives V^2 = Q(U), Q monic of degree 2g+1.
struct OddModelFq {
    fq::u64 q = 0, r = 0, c = 0;
    int genus = 0;
    fq::Poly f;  // original even model
    fq::Poly Q;  // odd model
    // affine point of the even model (x not r) -> odd model point
    std::pair<fq::u64, fq::u64> map_point(fq::u64 x, fq::u64 y) const;
    // a point at infinity of the even model with y/x^{g+1} -> s
    std::pair<fq::u64, fq::u64> map_infinity(fq::u64 s) const;
};
OddModelFq odd_model_fq(const fq::Poly& f, fq::u64 r, fq::u64 q);

struct OddModelQp {
    long p = 0;
    int genus = 0;
    PadicNumber r, c;
    std::vector<PadicNumber> Q;  // monic odd model coefficients
    std::pair<PadicNumber, PadicNumber> map_point(const PadicNumber& x, const PadicNumber& y) const;
    std::pair<PadicNumber, PadicNumber> unmap_point(const PadicNumber& U, const PadicNumber& V) const;
};
// r0: a simple root of f mod p, Hensel lifted to precision N
OddModelQp odd_model_padic(const RatPoly& f, long p, long N, long r0);
PadicNumber hensel_root(const RatPoly& f, long p, long N, long r0);

// ---- counting ----
long long count_points(const fq::Poly& f, fq::u64 q);
// #X(F_{q^2}); throws BudgetExceeded when q^2 exceeds the budget
long long count_points_q2(const fq::Poly& f, fq::u64 q, long long budget = 400000000LL);

// L(T) = 1 + c1 T + ... + q^g T^{2g}
struct LPolynomial {
    std::vector<mpz_class> c;
    mpz_class at_one() const;
};
LPolynomial lpolynomial_genus2(long long N1, long long N2, long long q);
// exhaustive counts over F_q and F_{q^2}
LPolynomial lpolynomial(const fq::Poly& f, fq::u64 q, long long budget = 400000000LL);
bool weil_bounds_ok(const LPolynomial& L, long long q);

// ---- Jacobian arithmetic over F_q (odd degree, Cantor) ----
struct MumfordDivisor {
    fq::Poly a{1}, b{};
    bool operator==(const MumfordDivisor& o) const { return a == o.a && b == o.b; }
    bool is_identity() const { return a.size() == 1; }
};

class JacobianFq {
public:
    JacobianFq(fq::Poly f, fq::u64 q);
    fq::u64 q() const { return q_; }
    int genus() const { return g_; }
    const fq::Poly& f() const { return f_; }

    MumfordDivisor zero() const { return {}; }
    MumfordDivisor add(const MumfordDivisor& x, const MumfordDivisor& y) const;
    MumfordDivisor neg(const MumfordDivisor& x) const;
    MumfordDivisor sub(const MumfordDivisor& x, const MumfordDivisor& y) const { return add(x, neg(y)); }
    MumfordDivisor mul(const MumfordDivisor& x, mpz_class n) const;
    MumfordDivisor mul(const MumfordDivisor& x, long long n) const { return mul(x, mpz_class((long)n)); }
    // [P - infinity]; point given as affine (x, y)
    MumfordDivisor point(fq::u64 x, fq::u64 y) const;
    bool is_valid(const MumfordDivisor& d) const;
    // canonical key for hashing
    std::vector<fq::u64> key(const MumfordDivisor& d) const;

    // all affine points
    std::vector<std::pair<fq::u64, fq::u64>> affine_points() const;
    MumfordDivisor random_element(uint64_t& state) const;

private:
    fq::Poly f_;
    fq::u64 q_;
    int g_;
};

// Mumford representation on an even model y^2 = f(x) (class [D - D_inf]) carried to the odd model
MumfordDivisor map_mumford_to_odd(const OddModelFq& m, const fq::Poly& a, const fq::Poly& b);

}  // namespace qck
