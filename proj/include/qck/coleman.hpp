// Coleman integration on odd models y^2 = Q(x): tiny and global integrals of the basis
// x^i dx/(2y), third-kind differentials, the abelian logarithm and the local height at p.
#pragma once

#include <gmpxx.h>

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qck/cohomology.hpp"

namespace qck {

struct ColemanError : std::runtime_error {
    enum Kind { DifferentDisks, WeierstrassDisk, InfiniteDisk, NotSplit, Singular, OverlappingDisks, NonOrdinary };
    Kind kind;
    ColemanError(Kind k, const std::string& m) : std::runtime_error(m), kind(k) {}
};

struct PointQp {
    PadicNumber x, y;
    PointQp involution() const { return {x, -y}; }
};

// Residue disk of a point over F_p: (x mod p, y mod p), or infinite.
struct ResidueDisk {
    bool infinite = false;
    long x = 0, y = 0;
    bool weierstrass() const { return !infinite && y == 0; }
    bool operator==(const ResidueDisk& o) const { return infinite == o.infinite && x == o.x && y == o.y; }
};
ResidueDisk residue_disk(const PointQp& P);
// throws unless P lies in an affine non-Weierstrass disk
void require_good_point(const PointQp& P);

// coefficients of Q to precision N (exact lift when the curve is rational)
PadicPoly curve_poly(const OddCurveQp& C, long N);
// the point with this x and y = sqrt(Q(x)) congruent to y0 mod p (any root if y0 = 0); false if none
bool lift_point(const OddCurveQp& C, const PadicNumber& x, long y0, PointQp& out);
// image under the lift x -> x^p, y -> y^p (1 + E/y^{2p})^{1/2}
PointQp frobenius_point(const OddCurveQp& C, const PointQp& P);

using LogVector = std::vector<PadicNumber>;

// int_P^Q x^i dx/(2y), i < 2g, for P, Q in one good residue disk.  terms = 0 picks the
// truncation from N; the result carries the truncation error in its precision.
std::vector<PadicNumber> tiny_integrals(const OddCurveQp& C, const PointQp& P, const PointQp& Q, long N,
                                        long terms = 0);
// int_P^Q x^i dx/(2y) for good points in any disks
std::vector<PadicNumber> basis_integrals(const FrobeniusData& fd, const PointQp& P, const PointQp& Q);

// cup product <x^i dx/(2y), x^j dx/(2y)> on the odd model, p-adically
PadicMatrix cup_product_padic(const OddCurveQp& C, long N);

// ---- divisors ----
struct RatMumford {
    RatPoly a{mpq_class(1)}, b;  // a monic, deg b < deg a, a | b^2 - f
};
// Cantor's algorithm over Q on an odd monic model
RatMumford cantor_add_rational(const RatPoly& f, const RatMumford& D1, const RatMumford& D2);
RatMumford cantor_mul_rational(const RatPoly& f, const RatMumford& D, long n);

// points with multiplicity; on odd models the class is sum n_k (P_k - infinity)
using SplitDivisor = std::vector<std::pair<PointQp, long>>;
// support of D over Q_p (a must split into simple roots mod p)
SplitDivisor split_mumford(const RatPoly& f, const RatMumford& D, long p, long N);
// even model f: support of D carried to the odd model m.  The class D - (deg a/2)(inf+ + inf-)
// differs from the returned divisor by a multiple of the image of inf+ + inf-.
SplitDivisor split_mumford_even(const OddModelQp& m, const RatPoly& f, const RatMumford& D, long N);

// int_{infinity}^{D} x^i dx/(2y), i < g
LogVector abelian_log(const FrobeniusData& fd, const SplitDivisor& D);

// ---- third kind ----
// omega_P = (y + y_P)/(x - x_P) dx/(2y), residue divisor P - infinity.  Under the lift
// x -> x_P + (x - x_P)^p (which fixes P), phi^* omega_P = p omega_P + sum c_i x^i dx/(2y) + dh.
struct ThirdKindData {
    PointQp P;
    std::vector<PadicNumber> c;
    std::map<long, PadicPoly> h;
};
ThirdKindData third_kind_data(const FrobeniusData& fd, const PointQp& P);
// int_R^S omega_P, R and S outside the disk of P
PadicNumber third_kind_integral(const FrobeniusData& fd, const ThirdKindData& T, const PointQp& R, const PointQp& S);

// int_A^B omega_P for A, B in one good disk other than that of P
PadicNumber tiny_third_kind(const OddCurveQp& C, const PointQp& P, const PointQp& A, const PointQp& B, long N);

// local height at p, c_p = 1: int_{D2} omega_{D1} with omega_{D1} normalised so that its
// class lies in the unit-root subspace.  Supports must lie in good disks, pairwise distinct
// between D1 and D2; both divisors of degree zero.
PadicNumber cg_height_p(const FrobeniusData& fd, const UnitRootSplitting& s, const SplitDivisor& D1,
                        const SplitDivisor& D2);

}  // namespace qck
