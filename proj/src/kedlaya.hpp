// Shared machinery for reducing p-adic forms N(x) dx/(2y^{2j+1}) on odd models to the basis
// x^i dx/(2y) plus an exact part.  Arithmetic is over Z/p^M with a tracked p-power scale.
#pragma once

#include <gmpxx.h>

#include <map>
#include <vector>

#include "qck/cohomology.hpp"

namespace qck::kedlaya {

using Zpoly = std::vector<mpz_class>;

void red(mpz_class& a, const mpz_class& P);
mpz_class inv_mod(const mpz_class& a, const mpz_class& P);
Zpoly zmul(const Zpoly& a, const Zpoly& b, const mpz_class& P);
Zpoly zcompose(const Zpoly& f, const Zpoly& g, const mpz_class& P);  // f(g(x))
long val_small(long n, long p);

struct Setup {
    long p = 0;
    int g = 0, d = 0;
    long ME = 0, precQ = 0, K = 0, T = 0;
    mpz_class P;
    Zpoly Q, dQ, b;  // b Q' = 1 mod Q
    long level(long k) const { return (p * (2 * k + 1) - 1) / 2; }
    long prec_out() const { return std::min(ME, precQ); }
};

// working precision Wf: series length K, modulus p^ME
Setup make_setup(const OddCurveQp& C, long Wf);
// binom(-1/2, k) E^k for k < K, E = Q(phi(x)) - Q(x)^p, phi a lift of x -> x^p
std::vector<Zpoly> lift_series(const Setup& s, const Zpoly& phi);
// integer representative of a p-integral p-adic number mod p^ME
mpz_class lift_int(const Setup& s, const PadicNumber& a);

struct Reduced {
    std::vector<PadicNumber> coords;    // on x^i dx/(2y)
    std::map<long, PadicPoly> h;        // exact part, sum H_e(x) y^e
};
// reduce sum_j N_j(x) dx/(2 y^{2j+1}) (N_j integral, keyed by j >= 0)
Reduced reduce_forms(const Setup& s, std::map<long, Zpoly> num);

PadicNumber eval_exact(const std::map<long, PadicPoly>& h, const PadicNumber& x, const PadicNumber& y);

}  // namespace qck::kedlaya
