// Structure of J(F_q) as an abstract abelian group: Sylow staircases, mixed-radix
// baby-step giant-step discrete logs and Smith normal form.
#pragma once

#include <gmpxx.h>

#include <memory>
#include <unordered_map>
#include <vector>

#include "qck/hyperelliptic.hpp"

namespace qck {

std::vector<std::pair<mpz_class, int>> factor_trial(mpz_class n);

// Smith normal form D = U A V (U not tracked).  Returns diag entries (>= 0),
// fills V and V^{-1}.
std::vector<mpz_class> smith_normal_form(std::vector<std::vector<mpz_class>> A, std::vector<std::vector<mpz_class>>& V,
                                         std::vector<std::vector<mpz_class>>& Vinv);

struct KeyHash {
    size_t operator()(const std::vector<fq::u64>& k) const {
        size_t h = 1469598103934665603ULL;
        for (auto x : k) h = (h ^ x) * 1099511628211ULL;
        return h;
    }
};

// Subgroup H of an l-group given by a staircase g_0..g_{m-1}: every element is
// uniquely sum c_j g_j with 0 <= c_j < h_j.
class StaircaseLog {
public:
    StaircaseLog(const JacobianFq& J, std::vector<MumfordDivisor> gens, std::vector<mpz_class> radix, double table_size);
    // coordinates of x, or false if x is not in H
    bool log(const MumfordDivisor& x, std::vector<mpz_class>& c) const;

private:
    const JacobianFq* J_;
    std::vector<MumfordDivisor> g_;
    std::vector<mpz_class> h_;
    size_t k_ = 0;  // table covers digits < k_ and digit k_ below r_
    mpz_class r_ = 1;
    std::unordered_map<std::vector<fq::u64>, std::vector<mpz_class>, KeyHash> table_;
};

struct SylowPart {
    mpz_class ell;
    int e = 0;
    std::vector<MumfordDivisor> stair;
    std::vector<mpz_class> radix;         // relative orders
    std::vector<mpz_class> invariants;    // nontrivial, ascending
    std::vector<MumfordDivisor> gens;     // one per invariant
    std::vector<std::vector<mpz_class>> V;  // staircase coords -> invariant coords (column per invariant)
    std::shared_ptr<StaircaseLog> dlog;
};

class JacobianGroup {
public:
    // ells: restrict to these primes (empty: all primes dividing the order)
    JacobianGroup(const JacobianFq& J, const mpz_class& order, uint64_t seed, double expected_queries = 1,
                  const std::vector<mpz_class>& ells = {});
    const mpz_class& order() const { return n_; }
    // invariant factors d_1 | d_2 | ... (all > 1) of the computed primary parts
    std::vector<mpz_class> invariants() const;
    std::vector<MumfordDivisor> generators() const;
    const std::vector<SylowPart>& sylow() const { return parts_; }
    // coordinates of the l-primary component of x against the l-part generators
    std::vector<mpz_class> sylow_coords(size_t part, const MumfordDivisor& x) const;

private:
    const JacobianFq* J_;
    mpz_class n_;
    std::vector<SylowPart> parts_;
};

struct AbelianGroupStructure {
    mpz_class order;
    std::vector<mpz_class> invariants;
    std::vector<MumfordDivisor> generators;
};
AbelianGroupStructure jacobian_group_structure(const JacobianFq& J, uint64_t seed = 1);

}  // namespace qck
