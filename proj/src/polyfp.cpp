#include "qck/polyfp.hpp"

#include <stdexcept>

namespace qck::fq {

u64 pow(u64 a, u64 e, u64 q) {
    u64 r = 1 % q;
    a %= q;
    while (e) {
        if (e & 1) r = r * a % q;
        a = a * a % q;
        e >>= 1;
    }
    return r;
}

u64 inv(u64 a, u64 q) {
    if (a % q == 0) throw std::domain_error("inverse of zero in F_q");
    long long t = 0, nt = 1, r = (long long)q, nr = (long long)(a % q);
    while (nr) {
        long long k = r / nr;
        long long x = t - k * nt; t = nt; nt = x;
        x = r - k * nr; r = nr; nr = x;
    }
    return reduce(t, q);
}

u64 reduce(long long a, u64 q) {
    long long r = a % (long long)q;
    return (u64)(r < 0 ? r + (long long)q : r);
}

int legendre(u64 a, u64 q) {
    a %= q;
    if (!a) return 0;
    return pow(a, (q - 1) / 2, q) == 1 ? 1 : -1;
}

void trim(Poly& a) {
    while (!a.empty() && a.back() == 0) a.pop_back();
}

Poly padd(const Poly& a, const Poly& b, u64 q) {
    Poly r(std::max(a.size(), b.size()), 0);
    for (size_t i = 0; i < a.size(); ++i) r[i] = a[i];
    for (size_t i = 0; i < b.size(); ++i) r[i] = add(r[i], b[i], q);
    trim(r);
    return r;
}

Poly psub(const Poly& a, const Poly& b, u64 q) {
    Poly r(std::max(a.size(), b.size()), 0);
    for (size_t i = 0; i < a.size(); ++i) r[i] = a[i];
    for (size_t i = 0; i < b.size(); ++i) r[i] = sub(r[i], b[i], q);
    trim(r);
    return r;
}

Poly pneg(const Poly& a, u64 q) {
    Poly r(a.size());
    for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] ? q - a[i] : 0;
    return r;
}

Poly pmul(const Poly& a, const Poly& b, u64 q) {
    if (a.empty() || b.empty()) return {};
    Poly r(a.size() + b.size() - 1, 0);
    for (size_t i = 0; i < a.size(); ++i) {
        if (!a[i]) continue;
        for (size_t j = 0; j < b.size(); ++j) r[i + j] = (r[i + j] + a[i] * b[j]) % q;
    }
    trim(r);
    return r;
}

Poly pscale(const Poly& a, u64 c, u64 q) {
    Poly r(a.size());
    for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] * c % q;
    trim(r);
    return r;
}

void pdivmod(const Poly& a, const Poly& b, Poly& quo, Poly& rem, u64 q) {
    if (b.empty()) throw std::domain_error("polynomial division by zero");
    rem = a;
    trim(rem);
    int db = deg(b);
    if (deg(rem) < db) {
        quo.clear();
        return;
    }
    quo.assign(rem.size() - b.size() + 1, 0);
    u64 il = inv(b.back(), q);
    for (int k = deg(rem); k >= db; --k) {
        u64 c = rem[k] * il % q;
        quo[k - db] = c;
        if (!c) continue;
        for (int j = 0; j <= db; ++j) rem[k - db + j] = sub(rem[k - db + j], c * b[j] % q, q);
    }
    trim(rem);
    trim(quo);
}

Poly pmod(const Poly& a, const Poly& b, u64 q) {
    Poly qq, r;
    pdivmod(a, b, qq, r, q);
    return r;
}

Poly pdiv(const Poly& a, const Poly& b, u64 q) {
    Poly qq, r;
    pdivmod(a, b, qq, r, q);
    return qq;
}

Poly monic(const Poly& a, u64 q) {
    if (a.empty()) return a;
    return pscale(a, inv(a.back(), q), q);
}

Poly xgcd(const Poly& a, const Poly& b, Poly& s, Poly& t, u64 q) {
    Poly r0 = a, r1 = b, s0{1}, s1{}, t0{}, t1{1};
    trim(r0);
    trim(r1);
    while (!r1.empty()) {
        Poly qq, r;
        pdivmod(r0, r1, qq, r, q);
        Poly s2 = psub(s0, pmul(qq, s1, q), q), t2 = psub(t0, pmul(qq, t1, q), q);
        r0 = r1, r1 = r, s0 = s1, s1 = s2, t0 = t1, t1 = t2;
    }
    if (r0.empty()) {
        s = {};
        t = {};
        return r0;
    }
    u64 il = inv(r0.back(), q);
    s = pscale(s0, il, q);
    t = pscale(t0, il, q);
    return pscale(r0, il, q);
}

u64 eval(const Poly& a, u64 x, u64 q) {
    u64 r = 0;
    for (size_t i = a.size(); i-- > 0;) r = (r * x + a[i]) % q;
    return r;
}

Poly deriv(const Poly& a, u64 q) {
    if (a.size() <= 1) return {};
    Poly r(a.size() - 1);
    for (size_t i = 1; i < a.size(); ++i) r[i - 1] = a[i] * (i % q) % q;
    trim(r);
    return r;
}

std::vector<u64> roots(const Poly& a, u64 q) {
    std::vector<u64> r;
    for (u64 x = 0; x < q; ++x)
        if (eval(a, x, q) == 0) r.push_back(x);
    return r;
}

std::vector<uint32_t> sqrt_table(u64 q) {
    std::vector<uint32_t> t(q, UINT32_MAX);
    for (u64 y = 0; y < q; ++y) {
        u64 s = y * y % q;
        if (t[s] == UINT32_MAX) t[s] = (uint32_t)y;
    }
    return t;
}

}  // namespace qck::fq
