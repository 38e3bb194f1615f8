// Dense polynomials over a prime field F_q, q < 2^31.  Coefficients low degree first;
// the zero polynomial is the empty vector.
#pragma once

#include <cstdint>
#include <vector>

namespace qck::fq {

using u64 = uint64_t;
using Poly = std::vector<u64>;

inline u64 add(u64 a, u64 b, u64 q) { u64 s = a + b; return s >= q ? s - q : s; }
inline u64 sub(u64 a, u64 b, u64 q) { return a >= b ? a - b : a + q - b; }
inline u64 mul(u64 a, u64 b, u64 q) { return a * b % q; }
u64 pow(u64 a, u64 e, u64 q);
u64 inv(u64 a, u64 q);
u64 reduce(long long a, u64 q);
// quadratic character, 0 on 0
int legendre(u64 a, u64 q);

void trim(Poly& a);
inline int deg(const Poly& a) { return (int)a.size() - 1; }
Poly padd(const Poly& a, const Poly& b, u64 q);
Poly psub(const Poly& a, const Poly& b, u64 q);
Poly pneg(const Poly& a, u64 q);
Poly pmul(const Poly& a, const Poly& b, u64 q);
Poly pscale(const Poly& a, u64 c, u64 q);
void pdivmod(const Poly& a, const Poly& b, Poly& quo, Poly& rem, u64 q);
Poly pmod(const Poly& a, const Poly& b, u64 q);
Poly pdiv(const Poly& a, const Poly& b, u64 q);
Poly monic(const Poly& a, u64 q);
// g = s a + t b, g monic
Poly xgcd(const Poly& a, const Poly& b, Poly& s, Poly& t, u64 q);
u64 eval(const Poly& a, u64 x, u64 q);
Poly deriv(const Poly& a, u64 q);
std::vector<u64> roots(const Poly& a, u64 q);  // by exhaustive search (desk scale)

// sqrt table: r[v] a square root of v or -1 (as u64 max)
std::vector<uint32_t> sqrt_table(u64 q);

}  // namespace qck::fq
