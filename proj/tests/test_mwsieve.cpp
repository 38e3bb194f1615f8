#include <algorithm>
#include <set>

#include "doctest.h"
#include "qck/abelian.hpp"
#include "qck/mwsieve.hpp"
#include "oracles.hpp"
#include "testgen.hpp"

using namespace qck;
using fq::u64;
using oracle::all_divisors;
using oracle::all_tuples;
using oracle::BruteForcePrime;
using oracle::red;

namespace {

RatPoly rp(std::initializer_list<long> c) {
    RatPoly p;
    for (long x : c) p.push_back(x);
    return p;
}

// y^2 = x^5 - x + 1, rational points (0,+-1), (1,+-1), (-1,+-1)
const RatPoly F = rp({1, -1, 0, 0, 0, 1});
const std::vector<std::pair<long, long>> PTS{{0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};

RatMumford point_divisor(long x, long y) { return {rp({-x, 1}), rp({y})}; }

SieveCurve random_curve_data(TestRng& rng, int r) {
    SieveCurve C;
    C.f = F;
    for (int i = 0; i < r; ++i) {
        auto [x, y] = PTS[rng.below(PTS.size())];
        C.gens.push_back(point_divisor(x, y));
    }
    if (rng.below(2)) {
        auto [x, y] = PTS[rng.below(PTS.size())];
        C.base = std::make_pair(mpq_class(x), mpq_class(y));
    }
    return C;
}

const std::vector<long> SMALL_PRIMES{3, 5, 7, 11, 13};

}  // namespace

TEST_CASE("abel_jacobi_image") {
    JacobianFq J(reduce_mod(F, 11), 11);
    MumfordDivisor b = J.point(0, 1);
    auto img = abel_jacobi_image(J, b);
    // the base point goes to the identity
    CHECK(std::find(img.begin(), img.end(), J.zero()) != img.end());
    // injective in genus 2: one element per point of X(F_11)
    CHECK(img.size() == J.affine_points().size() + 1);
    for (auto& x : img) CHECK(J.is_valid(x));
}

TEST_CASE("abel_jacobi_image: C188 over F_43 inside (Z/54)^2") {
    SieveCurve C;
    C.f = rp({1, -2, 1, 1, -1, 1});
    C.gens = {point_divisor(0, 1), point_divisor(1, 1)};
    PrimeSieveData d = prime_sieve_data(C, 43, 54);
    CHECK(d.order == 54 * 54);
    CHECK(d.moduli == std::vector<long>{2, 2, 27, 27});
    JacobianFq J(reduce_mod(C.f, 43), 43);
    auto pts = J.affine_points();
    CHECK(d.image.size() == pts.size() + 1);
    // J/54J = J, so Abel-Jacobi stays injective in the quotient
    std::set<Tuple> distinct(d.image.begin(), d.image.end());
    CHECK(distinct.size() == d.image.size());
    // membership against the exhaustive divisor-class oracle
    BruteForcePrime bf(C, 43, 54, 1, nullptr);
    TestRng rng(31);
    for (int t = 0; t < 200; ++t) {
        Tuple a{rng.below(54), rng.below(54)};
        CHECK(passes(d, a, 54) == bf.passes(a));
    }
}

TEST_CASE("sieve_cosets: trivial modulus and known points") {
    SieveCurve C;
    C.f = F;
    C.gens = {point_divisor(1, 1), point_divisor(-1, 1)};
    SieveInstance I;
    I.r = 2;
    I.M = 1;
    for (long v : SMALL_PRIMES) I.primes.push_back(prime_sieve_data(C, v, 1));
    I.targets = {{0, 0}, {3, 4}};
    CHECK(sieve_cosets(I).size() == 2);

    // soundness: [R - infinity] for R = (1,1), (-1,1), infinity have tuples e_1, e_2, 0
    I.M = 12;
    I.primes.clear();
    for (long v : SMALL_PRIMES) I.primes.push_back(prime_sieve_data(C, v, 12));
    I.targets = all_tuples(12, 2);
    auto s = sieve_cosets(I);
    CHECK(s.size() < 144);
    for (Tuple t : {Tuple{1, 0}, Tuple{0, 1}, Tuple{0, 0}}) CHECK(std::find(s.begin(), s.end(), t) != s.end());
}

TEST_CASE("sieve_cosets equals the exhaustive oracle on random small instances") {
    TestRng rng(32);
    int nonempty = 0, eliminated = 0;
    for (int trial = 0; trial < 100; ++trial) {
        int r = (int)rng.range(1, 2);
        long M = rng.range(2, 8);
        long mult = rng.range(1, 2);
        SieveCurve C = random_curve_data(rng, r);
        std::vector<long> primes = SMALL_PRIMES;
        std::shuffle(primes.begin(), primes.end(), rng.eng);
        primes.resize(rng.range(1, 3));
        SieveInstance I;
        I.r = r;
        I.M = M;
        I.multiplier = mult;
        for (long v : primes) I.primes.push_back(prime_sieve_data(C, v, M, mult, std::nullopt, trial + 1));
        I.targets = all_tuples(M, r);
        auto got = sieve_cosets(I);
        std::vector<BruteForcePrime> bf;
        for (long v : primes) bf.emplace_back(C, v, M, mult, nullptr);
        std::vector<Tuple> expect;
        for (auto& t : I.targets)
            if (std::all_of(bf.begin(), bf.end(), [&](auto& b) { return b.passes(t); })) expect.push_back(t);
        std::sort(got.begin(), got.end());
        CHECK(got == expect);
        nonempty += !got.empty();
        eliminated += got.size() < I.targets.size();
    }
    // the generator exercises both outcomes
    CHECK(nonempty > 10);
    CHECK(eliminated > 10);
}

TEST_CASE("sieve_cosets: adding a prime never increases the survivors") {
    TestRng rng(33);
    for (int trial = 0; trial < 30; ++trial) {
        SieveCurve C = random_curve_data(rng, 2);
        long M = rng.range(2, 12);
        SieveInstance I;
        I.r = 2;
        I.M = M;
        I.targets = all_tuples(M, 2);
        size_t prev = I.targets.size();
        for (long v : SMALL_PRIMES) {
            I.primes.push_back(prime_sieve_data(C, v, M));
            auto s = sieve_cosets(I);
            CHECK(s.size() <= prev);
            prev = s.size();
        }
    }
}

TEST_CASE("sieve_order prefers primes with more information") {
    SieveInstance I;
    I.r = 1;
    I.M = 12;
    I.primes = {{5, 8, {2}, {{1}}, {{0}}}, {7, 24, {4, 3}, {{1, 1}}, {{0, 0}}}, {3, 6, {2, 3}, {{1, 1}}, {{0, 0}}}};
    auto o = sieve_order(I);
    CHECK(o == std::vector<size_t>{1, 2, 0});  // gcd(#J, 12) = 4, 12, 6
}

TEST_CASE("sieve data consistency is checked") {
    SieveInstance I;
    I.r = 1;
    I.M = 4;
    I.targets = {{1}};
    I.primes = {{5, 6, {4}, {{1}}, {{0}}}};  // 4 does not divide #J = 6
    CHECK_THROWS_AS(sieve_cosets(I), SieveError);
    I.primes = {{5, 8, {4}, {{5}}, {{0}}}};
    CHECK_THROWS_AS(sieve_cosets(I), SieveError);
    I.primes = {{5, 8, {4}, {{1}, {2}}, {{0}}}};
    CHECK_THROWS_AS(sieve_cosets(I), SieveError);
}

TEST_CASE("sieve_disk agrees with the exhaustive oracle") {
    TestRng rng(34);
    int empties = 0;
    for (int trial = 0; trial < 60; ++trial) {
        int r = 2;
        long M = std::vector<long>{2, 4, 6, 8, 12}[rng.below(5)];
        SieveCurve C = random_curve_data(rng, r);
        std::vector<long> primes = SMALL_PRIMES;
        std::shuffle(primes.begin(), primes.end(), rng.eng);
        long local_v = primes.back();
        primes.resize(rng.range(1, 3));
        SieveInstance I;
        I.r = r;
        I.M = M;
        for (long v : primes) I.primes.push_back(prime_sieve_data(C, v, M));
        // a disk: one point mod local_v, plus a random congruence coset mod m | M
        auto [x, y] = PTS[rng.below(PTS.size())];
        std::vector<std::pair<long, long>> only{{x, y}};
        DiskConstraint c;
        c.local.push_back(prime_sieve_data(C, local_v, M, 1, std::vector<ReducedPoint>{{false, (long)red(x, local_v), (long)red(y, local_v)}}));
        std::vector<long> divs;
        for (long m = 1; m <= M; ++m)
            if (M % m == 0) divs.push_back(m);
        c.modulus = divs[rng.below(divs.size())];
        c.base = {rng.below(c.modulus), rng.below(c.modulus)};
        if (rng.below(2)) c.gens.push_back({rng.below(c.modulus), rng.below(c.modulus)});
        auto got = sieve_disk(I, c, 1000000);

        std::vector<BruteForcePrime> bf;
        for (long v : primes) bf.emplace_back(C, v, M, 1, nullptr);
        bf.emplace_back(C, local_v, M, 1, &only);
        std::set<Tuple> coset;
        for (long k = 0; k < c.modulus; ++k) {
            long g0 = c.gens.empty() ? 0 : c.gens[0][0], g1 = c.gens.empty() ? 0 : c.gens[0][1];
            coset.insert({(c.base[0] + k * g0) % c.modulus, (c.base[1] + k * g1) % c.modulus});
        }
        std::set<Tuple> expect;
        for (auto& t : all_tuples(M, r)) {
            Tuple s{t[0] % c.modulus, t[1] % c.modulus};
            if (!coset.count(s)) continue;
            if (std::all_of(bf.begin(), bf.end(), [&](auto& b) { return b.passes(t); }))
                expect.insert({t[0] % got.level, t[1] % got.level});
        }
        CHECK((got.verdict == Verdict::Empty) == expect.empty());
        std::set<Tuple> have(got.witnesses.begin(), got.witnesses.end());
        CHECK(have == expect);
        empties += got.verdict == Verdict::Empty;
    }
    CHECK(empties > 0);
}

TEST_CASE("sieve_disk: the base point's disk is undecided with witness 0") {
    SieveCurve C;
    C.f = F;
    C.gens = {point_divisor(1, 1), point_divisor(-1, -1)};
    C.base = std::make_pair(mpq_class(0), mpq_class(1));
    SieveInstance I;
    I.r = 2;
    I.M = 6;
    for (long v : {5, 11, 13}) I.primes.push_back(prime_sieve_data(C, v, 6));
    DiskConstraint c;
    c.modulus = 3;
    c.base = {0, 0};
    c.local.push_back(prime_sieve_data(C, 7, 6, 1, std::vector<ReducedPoint>{{false, 0, 1}}));
    auto v = sieve_disk(I, c);
    CHECK(v.verdict == Verdict::Undecided);
    CHECK(std::find(v.witnesses.begin(), v.witnesses.end(), Tuple(v.witnesses[0].size(), 0)) != v.witnesses.end());
    c.empty = true;
    CHECK(sieve_disk(I, c).verdict == Verdict::Empty);
}

TEST_CASE("padic_disk_constraint on synthetic logarithms") {
    const long p = 7, N = 10;
    auto P = [&](long x) { return PadicNumber::from_int(x, p, N); };
    LogVector zero{P(0), P(0)};
    // G = p I: a p in p Z_p, every tuple allowed
    auto c = padic_disk_constraint({{P(7), P(0)}, {P(0), P(7)}}, zero, {1, 1}, 1, p);
    CHECK(!c.empty);
    CHECK(c.gens.size() == 2);
    // G = I: a in p Z_p
    c = padic_disk_constraint({{P(1), P(0)}, {P(0), P(1)}}, zero, {1, 1}, 1, p);
    CHECK(c.gens.empty());
    CHECK(c.base == Tuple{0, 0});
    // G = I with center log (3, 5): a = (3, 5) mod p
    c = padic_disk_constraint({{P(1), P(0)}, {P(0), P(1)}}, {P(3), P(5)}, {1, 1}, 1, p);
    CHECK(c.base == Tuple{3, 5});
    // multiplier scales the center
    c = padic_disk_constraint({{P(1), P(0)}, {P(0), P(1)}}, {P(3), P(5)}, {1, 1}, 2, p);
    CHECK(c.base == Tuple{6, 3});
    // G = diag(1, p), bounds (1, 1): a_0 = 0, a_1 free
    c = padic_disk_constraint({{P(1), P(0)}, {P(0), P(7)}}, zero, {1, 1}, 1, p);
    REQUIRE(c.gens.size() == 1);
    CHECK(c.gens[0][0] == 0);
    CHECK(c.gens[0][1] != 0);
    // a center log of negative valuation relative to the bounds has no solution
    c = padic_disk_constraint({{P(7), P(0)}, {P(0), P(7)}}, {P(1), P(0)}, {1, 1}, 1, p);
    CHECK(c.empty);
    CHECK_THROWS_AS(padic_disk_constraint({{P(1), P(1)}, {P(1), P(1)}}, zero, {1, 1}, 1, p), SieveError);
}

TEST_CASE("padic_disk_constraint contains the tuples of rational points") {
    // random integer combinations: L(R) = a.G + (small tiny integral) must satisfy the constraint
    TestRng rng(35);
    const long p = 11, N = 12;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<LogVector> G(2, LogVector(2));
        for (auto& row : G)
            for (auto& x : row) x = random_padic(rng, p, N, 1, 2);
        Tuple a{rng.range(-50, 50), rng.range(-50, 50)};
        std::vector<long> e{rng.range(1, 3), 1};
        LogVector tiny{random_padic(rng, p, N, e[0], e[0] + 2), random_padic(rng, p, N, e[1], e[1] + 2)};
        long m = rng.range(1, 2);
        // m L_c = a.G - m * tiny
        LogVector Lc(2);
        for (int j = 0; j < 2; ++j) Lc[j] = (G[0][j].mul_int(a[0]) + G[1][j].mul_int(a[1])).div_int(m) - tiny[j];
        DiskConstraint c;
        try {
            c = padic_disk_constraint(G, Lc, e, m, p);
        } catch (const SieveError&) {
            continue;
        }
        REQUIRE(!c.empty);
        // a mod p lies in base + span(gens)
        bool found = false;
        long g0 = c.gens.size() > 0, g1 = c.gens.size() > 1;
        for (long s = 0; s < (g0 ? p : 1) && !found; ++s)
            for (long t = 0; t < (g1 ? p : 1) && !found; ++t) {
                bool ok = true;
                for (int i = 0; i < 2; ++i) {
                    long v = c.base[i] + (g0 ? s * c.gens[0][i] : 0) + (g1 ? t * c.gens[1][i] : 0);
                    ok &= ((v - a[i]) % p + p) % p == 0;
                }
                found = ok;
            }
        CHECK(found);
    }
}

TEST_CASE("sieve instance files") {
    SieveCurve C;
    C.f = F;
    C.gens = {point_divisor(1, 1), point_divisor(-1, 1)};
    SieveInstance I;
    I.r = 2;
    I.M = 6;
    for (long v : {5, 7}) I.primes.push_back(prime_sieve_data(C, v, 6));
    I.targets = {{0, 0}, {1, 2}};
    auto J = parse_sieve_instance(write_sieve_instance(I));
    CHECK(J.M == 6);
    REQUIRE(J.primes.size() == 2);
    CHECK(J.primes[1].image == I.primes[1].image);
    CHECK(J.primes[0].order == I.primes[0].order);
    CHECK(sieve_cosets(J) == sieve_cosets(I));

    auto K = parse_sieve_instance("qck-sieve 1\nM 6\nmultiplier 1\ncurve = [1, -1, 0, 0, 0, 1]\n"
                                  "generator = [-1, 1] [1]\ngenerator = [1, 1] [1]\nprimes = [5, 7]\ncompute\n"
                                  "targets all\n");
    CHECK(K.r == 2);
    CHECK(K.targets.size() == 36);
    CHECK(sieve_cosets(K) == sieve_cosets([&] {
              SieveInstance L = I;
              L.targets = K.targets;
              return L;
          }()));
    // a disk: computed local prime and a congruence, written out explicitly and read back
    auto D = parse_sieve_instance("qck-sieve 1\nM 6\ncurve = [1, -1, 0, 0, 0, 1]\n"
                                  "generator = [-1, 1] [1]\ngenerator = [1, 1] [1]\nprimes = [5, 7]\n"
                                  "disk_prime 11\ndisk_point = 0 1\ndisk_modulus 3\ndisk_gen = [1, 2]\ncompute\n");
    REQUIRE(D.disk);
    CHECK(D.disk->local.size() == 1);
    CHECK(D.disk->local[0].image.size() == 1);
    CHECK(D.disk->base == Tuple{0, 0});
    auto D2 = parse_sieve_instance(write_sieve_instance(D));
    REQUIRE(D2.disk);
    auto v1 = sieve_disk(D, *D.disk, 100), v2 = sieve_disk(D2, *D2.disk, 100);
    CHECK(v1.verdict == v2.verdict);
    CHECK(v1.witnesses == v2.witnesses);
    CHECK_THROWS_AS(parse_sieve_instance("qck-sieve 1\nM 6\ndisk_modulus 4\n"), SieveError);
    CHECK_THROWS_AS(parse_sieve_instance("M 6\n"), SieveError);
    CHECK_THROWS_AS(parse_sieve_instance("qck-sieve 1\nM 6\nbogus 3\n"), SieveError);
    CHECK_THROWS_AS(parse_sieve_instance("qck-sieve 1\nM 6\nr 1\ngen = [1]\n"), SieveError);
}
