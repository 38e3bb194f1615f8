// p-adic cohomology of odd hyperelliptic curves: Frobenius (Kedlaya-style reduction),
// cup product, Hecke operator, Neron-Severi classes and the unit-root splitting.
#pragma once

#include <gmpxx.h>

#include <map>
#include <string>
#include <vector>

#include "qck/hyperelliptic.hpp"
#include "qck/padic.hpp"

namespace qck {

using PadicPoly = std::vector<PadicNumber>;
using RatMatrix = std::vector<std::vector<mpq_class>>;

PadicNumber poly_eval(const PadicPoly& a, const PadicNumber& x);

// y^2 = Q(x), Q monic of odd degree 2g+1 with p-integral coefficients, good reduction at p
struct OddCurveQp {
    long p = 0;
    int g = 0;
    PadicPoly Q;
    RatPoly rational;  // exact coefficients when known (lets Frobenius lift Q to any precision)
    static OddCurveQp from_rational(const RatPoly& f, long p, long N);
    static OddCurveQp from_model(const OddModelQp& m);
    fq::Poly reduce() const;
    long prec() const;
};

struct FrobeniusData {
    OddCurveQp curve;
    long N = 0;               // requested precision
    long working = 0;         // working precision used
    long terms = 0;           // series terms in the Frobenius lift
    PadicMatrix F;            // column i = image of x^i dx/(2y)
    // phi^* omega_i = d h_i + sum_j F_ji omega_j with h_i = sum_e H_e(x) y^e (e odd)
    std::vector<std::map<long, PadicPoly>> h;
    PadicNumber eval_h(int i, const PadicNumber& x, const PadicNumber& y) const;
};

struct PrecisionBudgetError : std::runtime_error {
    long required;
    PrecisionBudgetError(const std::string& m, long r) : std::runtime_error(m), required(r) {}
};

// Frobenius on the basis x^i dx/(2y), i < 2g.  Escalates working precision until every
// entry is known to absolute precision N; with certify, also checks the zeta congruence
// against exhaustive point counts (genus <= 2).
FrobeniusData frobenius_matrix(const OddCurveQp& C, long N, bool certify = true);
FrobeniusData frobenius_matrix(const RatPoly& f, long p, long N, bool certify = true);

// reverse characteristic polynomial of F agrees with L mod p^prec
bool zeta_consistent(const PadicMatrix& F, const LPolynomial& L, long prec);

// A = F + p F^{-1}
PadicMatrix hecke_from_frobenius(const PadicMatrix& F, long p);
// integer characteristic polynomial of A (c0..c_{2g}), checked against Weil bounds
std::vector<mpz_class> hecke_charpoly(const PadicMatrix& A, long p);

// Cup product matrix C[i][j] = <omega_i, omega_j> for omega_k = h_k(x) dx / y on y^2 = f(x)
// (odd monic model or even model), by residues at infinity.
RatMatrix cup_product_matrix(const RatPoly& f, const std::vector<RatPoly>& forms, int extra_terms = 0);
// x^i dx/(2y), i < 2g, as h_i = x^i / 2
std::vector<RatPoly> default_basis(int g);

// classes of h_k(x) dx / y on an even model, in the basis U^j dU/(2V) of the odd model
PadicMatrix even_forms_in_odd_basis(const OddModelQp& m, const std::vector<RatPoly>& forms, long N);
// classes of P(x) dx/(2y), P a polynomial, in the basis x^i dx/(2y)
std::vector<PadicNumber> reduce_polynomial_form(const OddCurveQp& C, PadicPoly P);

enum class ZSign { Plus, Minus };
// Z = +-(Tr(B) I - 2g B) C^{-1}, entries rationally reconstructed.  B = A_p or a power of it.
RatMatrix ns_class(const PadicMatrix& B, const RatMatrix& C, int g, ZSign sign = ZSign::Plus);
// Raw p-adic version (no reconstruction)
PadicMatrix ns_class_padic(const PadicMatrix& B, const PadicMatrix& Cinv, int g, ZSign sign = ZSign::Plus);

struct UnitRootSplitting {
    PadicMatrix W;   // 2g x g, columns span the unit-root subspace
    PadicMatrix s1;  // projection onto W along Fil^0
    PadicMatrix s2;  // projection onto Fil^0 along W
};
UnitRootSplitting unit_root_splitting(const PadicMatrix& F, int g);

// rational matrix helpers
RatMatrix rat_inverse(const RatMatrix& A);
RatMatrix rat_mul(const RatMatrix& A, const RatMatrix& B);
RatMatrix rat_transpose(const RatMatrix& A);

// on-disk cache of Frobenius matrices, keyed by (curve, p, N)
std::string frobenius_cache_key(const OddCurveQp& C, long N);
bool cache_load_matrix(const std::string& dir, const std::string& key, PadicMatrix& out);
void cache_store_matrix(const std::string& dir, const std::string& key, const PadicMatrix& M);

}  // namespace qck
