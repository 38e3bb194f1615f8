#include "qck/abelian.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace qck {

std::vector<std::pair<mpz_class, int>> factor_trial(mpz_class n) {
    std::vector<std::pair<mpz_class, int>> r;
    if (n < 0) n = -n;
    for (mpz_class d = 2; d * d <= n; d += (d == 2 ? 1 : 2)) {
        int e = 0;
        while (n % d == 0) n /= d, ++e;
        if (e) r.push_back({d, e});
    }
    if (n > 1) r.push_back({n, 1});
    return r;
}

using Mat = std::vector<std::vector<mpz_class>>;

static mpz_class fdiv(const mpz_class& a, const mpz_class& b) {
    mpz_class q;
    mpz_fdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return q;
}

std::vector<mpz_class> smith_normal_form(Mat A, Mat& V, Mat& Vinv) {
    size_t m = A.size(), n = m ? A[0].size() : 0;
    V.assign(n, std::vector<mpz_class>(n, 0));
    Vinv = V;
    for (size_t i = 0; i < n; ++i) V[i][i] = Vinv[i][i] = 1;
    auto col_sub = [&](size_t j, size_t t, const mpz_class& q) {  // col_j -= q col_t
        for (size_t i = 0; i < m; ++i) A[i][j] -= q * A[i][t];
        for (size_t i = 0; i < n; ++i) V[i][j] -= q * V[i][t];
        for (size_t i = 0; i < n; ++i) Vinv[t][i] += q * Vinv[j][i];
    };
    auto col_swap = [&](size_t a, size_t b) {
        if (a == b) return;
        for (size_t i = 0; i < m; ++i) std::swap(A[i][a], A[i][b]);
        for (size_t i = 0; i < n; ++i) std::swap(V[i][a], V[i][b]);
        std::swap(Vinv[a], Vinv[b]);
    };
    std::vector<mpz_class> d;
    for (size_t t = 0; t < std::min(m, n); ++t) {
        for (;;) {
            size_t bi = m, bj = n;
            for (size_t i = t; i < m; ++i)
                for (size_t j = t; j < n; ++j)
                    if (A[i][j] != 0 && (bi == m || abs(A[i][j]) < abs(A[bi][bj]))) bi = i, bj = j;
            if (bi == m) goto done;
            std::swap(A[t], A[bi]);
            col_swap(t, bj);
            bool clean = true;
            for (size_t i = t + 1; i < m; ++i) {
                mpz_class q = fdiv(A[i][t], A[t][t]);
                if (q != 0)
                    for (size_t j = t; j < n; ++j) A[i][j] -= q * A[t][j];
                if (A[i][t] != 0) clean = false;
            }
            for (size_t j = t + 1; j < n; ++j) {
                mpz_class q = fdiv(A[t][j], A[t][t]);
                if (q != 0) col_sub(j, t, q);
                if (A[t][j] != 0) clean = false;
            }
            if (!clean) continue;
            for (size_t i = t + 1; i < m && clean; ++i)
                for (size_t j = t + 1; j < n; ++j)
                    if (A[i][j] % A[t][t] != 0) {
                        for (size_t jj = t; jj < n; ++jj) A[t][jj] += A[i][jj];
                        clean = false;
                        break;
                    }
            if (clean) break;
        }
        d.push_back(abs(A[t][t]));
    }
done:
    while (d.size() < n) d.push_back(0);
    return d;
}

// ---- staircase discrete log ----

StaircaseLog::StaircaseLog(const JacobianFq& J, std::vector<MumfordDivisor> gens, std::vector<mpz_class> radix,
                           double table_size)
    : J_(&J), g_(std::move(gens)), h_(std::move(radix)) {
    size_t m = g_.size();
    mpz_class S = (long)std::max(1.0, std::min(table_size, 4e6));
    mpz_class P = 1;
    k_ = 0;
    while (k_ < m && P * h_[k_] <= S) P *= h_[k_++];
    r_ = k_ < m ? std::max(mpz_class(1), mpz_class(S / P)) : mpz_class(1);
    if (k_ < m && r_ > h_[k_]) r_ = h_[k_];
    size_t digits = k_ < m ? k_ + 1 : k_;
    std::vector<mpz_class> lim(digits);
    for (size_t j = 0; j < k_; ++j) lim[j] = h_[j];
    if (k_ < m) lim[k_] = r_;
    // odometer over baby digits
    std::vector<mpz_class> c(digits, 0);
    MumfordDivisor cur = J.zero();
    for (;;) {
        std::vector<mpz_class> full(m, 0);
        for (size_t j = 0; j < digits; ++j) full[j] = c[j];
        table_.emplace(J.key(cur), full);
        size_t j = 0;
        while (j < digits) {
            c[j] += 1;
            cur = J.add(cur, g_[j]);
            if (c[j] < lim[j]) break;
            cur = J.sub(cur, J.mul(g_[j], lim[j]));
            c[j] = 0;
            ++j;
        }
        if (j == digits) break;
    }
}

bool StaircaseLog::log(const MumfordDivisor& x, std::vector<mpz_class>& out) const {
    const JacobianFq& J = *J_;
    size_t m = g_.size();
    if (k_ == m) {
        auto it = table_.find(J.key(x));
        if (it == table_.end()) return false;
        out = it->second;
        return true;
    }
    // giant digits: digit k_ in steps of r_, digits > k_ fully
    std::vector<mpz_class> lim, cnt;
    std::vector<MumfordDivisor> step;
    lim.push_back((h_[k_] + r_ - 1) / r_);
    step.push_back(J.mul(g_[k_], r_));
    for (size_t j = k_ + 1; j < m; ++j) lim.push_back(h_[j]), step.push_back(g_[j]);
    cnt.assign(lim.size(), 0);
    MumfordDivisor cur = x;
    for (;;) {
        auto it = table_.find(J.key(cur));
        if (it != table_.end()) {
            out = it->second;
            out[k_] += cnt[0] * r_;
            for (size_t j = 1; j < cnt.size(); ++j) out[k_ + j] = cnt[j];
            return true;
        }
        size_t j = 0;
        while (j < cnt.size()) {
            cnt[j] += 1;
            cur = J.sub(cur, step[j]);
            if (cnt[j] < lim[j]) break;
            cur = J.add(cur, J.mul(step[j], lim[j]));
            cnt[j] = 0;
            ++j;
        }
        if (j == cnt.size()) return false;
    }
}

// ---- Sylow parts ----

JacobianGroup::JacobianGroup(const JacobianFq& J, const mpz_class& order, uint64_t seed, double expected_queries,
                             const std::vector<mpz_class>& ells)
    : J_(&J), n_(order) {
    uint64_t st = seed * 0x9E3779B97F4A7C15ULL + 12345;
    for (auto& [ell, e] : factor_trial(order)) {
        if (!ells.empty() && std::find(ells.begin(), ells.end(), ell) == ells.end()) continue;
        SylowPart P;
        P.ell = ell;
        P.e = e;
        mpz_class le;
        mpz_pow_ui(le.get_mpz_t(), ell.get_mpz_t(), e);
        mpz_class cof = order / le;
        int have = 0;
        int stale = 0;
        while (have < e) {
            double hs = std::sqrt(std::pow(ell.get_d(), have));
            StaircaseLog H(J, P.stair, P.radix, hs);
            MumfordDivisor y = J.mul(J.random_element(st), cof);
            std::vector<mpz_class> c;
            int k = 0;
            MumfordDivisor z = y;
            while (!H.log(z, c)) {
                if (++k > e) throw std::runtime_error("group structure: element order exceeds the given order");
                z = J.mul(z, ell);
            }
            if (k == 0) {
                if (++stale > 200) throw std::runtime_error("group structure: order does not match the Jacobian");
                continue;
            }
            if (have + k > e) throw std::runtime_error("group structure: element order exceeds the given order");
            mpz_class rk;
            mpz_pow_ui(rk.get_mpz_t(), ell.get_mpz_t(), k);
            // relation: rk*y = sum c_i g_i; store as row later
            P.stair.push_back(y);
            P.radix.push_back(rk);
            P.V.push_back(c);  // temporarily the relation tail
            have += k;
        }
        size_t m = P.stair.size();
        Mat R(m, std::vector<mpz_class>(m, 0));
        for (size_t j = 0; j < m; ++j) {
            R[j][j] = P.radix[j];
            for (size_t i = 0; i < j; ++i) R[j][i] = -P.V[j][i];
        }
        Mat V, Vinv;
        auto d = smith_normal_form(R, V, Vinv);
        P.V.assign(m, {});
        for (size_t i = 0; i < m; ++i) {
            if (d[i] == 1) continue;
            P.invariants.push_back(d[i]);
            MumfordDivisor G = J.zero();
            for (size_t j = 0; j < m; ++j) {
                mpz_class cc = Vinv[i][j] % le;
                if (cc < 0) cc += le;
                G = J.add(G, J.mul(P.stair[j], cc));
            }
            P.gens.push_back(G);
            for (size_t j = 0; j < m; ++j) P.V[j].push_back(V[j][i]);
        }
        // ascending
        std::vector<size_t> idx(P.invariants.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return P.invariants[a] < P.invariants[b]; });
        SylowPart Q = P;
        for (size_t i = 0; i < idx.size(); ++i) {
            Q.invariants[i] = P.invariants[idx[i]];
            Q.gens[i] = P.gens[idx[i]];
            for (size_t j = 0; j < m; ++j) Q.V[j][i] = P.V[j][idx[i]];
        }
        double ts = std::sqrt(le.get_d() * std::max(1.0, expected_queries));
        Q.dlog = std::make_shared<StaircaseLog>(J, Q.stair, Q.radix, ts);
        parts_.push_back(std::move(Q));
    }
}

std::vector<mpz_class> JacobianGroup::sylow_coords(size_t part, const MumfordDivisor& x) const {
    const SylowPart& P = parts_[part];
    mpz_class le;
    mpz_pow_ui(le.get_mpz_t(), P.ell.get_mpz_t(), P.e);
    mpz_class cof = n_ / le;
    std::vector<mpz_class> c;
    if (!P.dlog->log(J_->mul(x, cof), c)) throw std::logic_error("sylow_coords: element outside the group");
    mpz_class ci;
    mpz_invert(ci.get_mpz_t(), cof.get_mpz_t(), le.get_mpz_t());
    std::vector<mpz_class> out(P.invariants.size(), 0);
    for (size_t i = 0; i < out.size(); ++i) {
        mpz_class s = 0;
        for (size_t j = 0; j < c.size(); ++j) s += c[j] * P.V[j][i];
        s = s * ci % P.invariants[i];
        if (s < 0) s += P.invariants[i];
        out[i] = s;
    }
    return out;
}

std::vector<mpz_class> JacobianGroup::invariants() const {
    size_t r = 0;
    for (auto& P : parts_) r = std::max(r, P.invariants.size());
    std::vector<mpz_class> d(r, 1);
    for (auto& P : parts_) {
        size_t off = r - P.invariants.size();
        for (size_t i = 0; i < P.invariants.size(); ++i) d[off + i] *= P.invariants[i];
    }
    return d;
}

std::vector<MumfordDivisor> JacobianGroup::generators() const {
    size_t r = 0;
    for (auto& P : parts_) r = std::max(r, P.invariants.size());
    std::vector<MumfordDivisor> g(r, J_->zero());
    for (auto& P : parts_) {
        size_t off = r - P.invariants.size();
        for (size_t i = 0; i < P.gens.size(); ++i) g[off + i] = J_->add(g[off + i], P.gens[i]);
    }
    return g;
}

AbelianGroupStructure jacobian_group_structure(const JacobianFq& J, uint64_t seed) {
    AbelianGroupStructure S;
    S.order = lpolynomial(J.f(), J.q()).at_one();
    JacobianGroup G(J, S.order, seed);
    S.invariants = G.invariants();
    S.generators = G.generators();
    return S;
}

}  // namespace qck
