// Mordell-Weil sieve: tuples (a_1..a_r) mod M with m[P - b] = sum a_i P_i are tested against
// the images of X(F_v) in J(F_v)/M J(F_v).
#pragma once

#include <gmpxx.h>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qck/coleman.hpp"
#include "qck/hyperelliptic.hpp"

namespace qck {

using Tuple = std::vector<long>;

struct SieveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// J(F_v)/M J(F_v) as a product of cyclic groups Z/moduli[k]; generator and curve images in
// those coordinates.
struct PrimeSieveData {
    long v = 0;
    mpz_class order = 0;                     // #J(F_v)
    std::vector<long> moduli;                // each a prime power dividing M
    std::vector<Tuple> gens;                 // one per generator
    std::vector<Tuple> image;                // deduplicated images of X(F_v) (times the multiplier)
};

// a coset base + <gens> in (Z/modulus)^r with modulus | M, plus primes whose image is restricted
// to the reduction of the disk
struct DiskConstraint {
    long modulus = 1;
    Tuple base;
    std::vector<Tuple> gens;
    std::vector<PrimeSieveData> local;
    bool empty = false;  // the congruence has no solutions at all
};

struct SieveInstance {
    int r = 0;
    long M = 1;
    long multiplier = 1;  // the tuples describe multiplier * [P - b] (index of <P_i> in J(Q))
    std::vector<PrimeSieveData> primes;
    std::vector<Tuple> targets;
    std::optional<DiskConstraint> disk;  // instance files may describe one residue disk
};

// ---- curve side ----
struct ReducedPoint {
    bool infinite = false;
    long x = 0, y = 0;  // affine point, or y = sqrt(leading coefficient) at infinity on even models
};

struct SieveCurve {
    RatPoly f;                      // monic odd model, or an even model
    std::vector<RatMumford> gens;   // on the given model; even models: deg a = 2, class [D - D_inf]
    std::optional<std::pair<mpq_class, mpq_class>> base;  // none: the point at infinity (odd models)
    bool even() const { return (f.size() - 1) % 2 == 0; }
};

// {[P - infinity] - base : P in X(F_v)} on an odd model, deduplicated
std::vector<MumfordDivisor> abel_jacobi_image(const JacobianFq& J, const MumfordDivisor& base);

// group structure, generator images and the image of X(F_v) (or only of the listed points)
PrimeSieveData prime_sieve_data(const SieveCurve& C, long v, long M, long multiplier = 1,
                                const std::optional<std::vector<ReducedPoint>>& only = std::nullopt,
                                uint64_t seed = 1);

// ---- sieving ----
// primes by decreasing gcd(#J(F_v), M), ties by size
std::vector<size_t> sieve_order(const SieveInstance& I);
// is sum a_i gens_i in the image modulo L J(F_v), L | M
bool passes(const PrimeSieveData& d, const Tuple& a, long L);
std::vector<Tuple> sieve_cosets(const SieveInstance& I);

// tuples a with a.G - m L_c in prod p^{e_i} Z_p, reduced mod p.  G: logs of the generators
// (rows), L_c: log of [center - b], e_i: valuation bound of the tiny integrals in the disk.
DiskConstraint padic_disk_constraint(const std::vector<LogVector>& gen_logs, const LogVector& center_log,
                                     const std::vector<long>& e, long multiplier, long p);

enum class Verdict { Empty, Undecided };
struct DiskVerdict {
    Verdict verdict = Verdict::Undecided;
    long level = 1;                // survivors are tuples mod level (the informative part of M)
    std::vector<Tuple> witnesses;  // survivors mod level (capped)
    std::vector<std::pair<long, size_t>> trace;  // (modulus level, survivors)
};
// lifts the constraint through the prime factors of M, sieving at every level
DiskVerdict sieve_disk(const SieveInstance& I, const DiskConstraint& c, size_t max_witnesses = 20);

// ---- instance files ----
//   qck-sieve 1
//   M 122
//   r 2
//   multiplier 1
//   prime 41
//   order 1364
//   moduli = [2, 2]
//   gen = [1, 0]
//   image = [0, 1]
//   ...
//   targets = [[0, 1], [1, 1]]      (or: targets all)
//   local 61                        (a prime block for the disk: image of its reduction only)
//   disk_modulus 61
//   disk_base = [59, 0]
//   disk_gen = [8, 1]
// or, in place of the prime blocks:
//   curve = [c0, c1, ...]
//   generator = [a0, a1, a2] [b0, b1]
//   base = x y                      (omitted: infinity)
//   primes = [41, 83]
//   disk_prime 61                   (with disk_point = x y, repeatable)
//   compute
SieveInstance parse_sieve_instance(const std::string& text);
std::string write_sieve_instance(const SieveInstance& I);

}  // namespace qck
