#include "doctest.h"
#include "qck/padic.hpp"
#include "testgen.hpp"

using namespace qck;

TEST_CASE("from_rational examples") {
    auto z = PadicNumber::from_rational(0, 61, 5);
    CHECK(z.is_zero());
    CHECK(z.val() == PadicNumber::INF_VAL);

    auto t = PadicNumber::from_rational(mpq_class(2, 3), 5, 3);
    // oracle: 3^{-1} mod 125 by extended Euclid is 42; 2*42 = 84 = 4 + 1*5 + 3*25
    mpz_class inv3;
    mpz_invert(inv3.get_mpz_t(), mpz_class(3).get_mpz_t(), mpz_class(125).get_mpz_t());
    CHECK(inv3 == 42);
    CHECK(t.lift() == (2 * inv3) % 125);
    auto d = t.digits(3);
    CHECK(d == std::vector<long>{4, 1, 3});

    // E:107 alpha_00 = 58/61 + 19 + 2*61 + 43*61^2
    mpq_class a00 = mpq_class(58, 61) + 19 + 2 * 61 + 43 * 61 * 61;
    auto x = PadicNumber::from_rational(a00, 61, 3);
    CHECK(x.val() == -1);
    CHECK(x.digits(4) == std::vector<long>{58, 19, 2, 43});
    CHECK(PadicNumber::parse(x.serialize(), 61).serialize() == x.serialize());

    CHECK_THROWS(PadicNumber::from_rational(1, 15, 3));
    CHECK_THROWS(PadicNumber::from_rational(1, 7, 0));
}

TEST_CASE("precision bookkeeping") {
    long p = 7;
    auto a = PadicNumber::from_int(7 * 3, p, 10);  // v=1
    auto b = PadicNumber::from_int(5, p, 6);
    CHECK((a + b).prec() == 6);
    CHECK((a * b).prec() == std::min(10 + 0, 6 + 1));
    CHECK(a.inverse().prec() == 10 - 2);
    CHECK(a.inverse().val() == -1);
    auto prod = a * a.inverse();
    CHECK(prod.equals(PadicNumber::from_int(1, p, 8)));
}

TEST_CASE("log examples") {
    long p = 61, N = 6;
    CHECK(padic_log(PadicNumber::from_int(1, p, N)).is_zero());
    // oracle: log(2) = log(2^60)/60, series summed directly on the one-unit
    mpz_class m = mpz_pow(p, N), z = (mpz_pow(2, 60) - 1) % m;
    mpq_class s = 0;
    mpz_class zk = z;
    for (long k = 1; k < 20; ++k) {
        s += mpq_class((k % 2 ? 1 : -1) * zk, k);
        zk = zk * z % (m * m);
    }
    auto oracle = PadicNumber::from_rational(s / 60, p, N);
    auto l2 = padic_log(PadicNumber::from_int(2, p, N));
    CHECK(l2.equals(oracle));
    CHECK(l2.val() >= 1);

    auto br = LogBranch{p, PadicNumber::from_int(5, p, N)};
    auto l61 = padic_log(PadicNumber::from_int(61 * 2, p, N), br);
    CHECK(l61.equals(l2 + PadicNumber::from_int(5, p, N)));
}

TEST_CASE("property: log is a homomorphism on 1000 pairs") {
    TestRng rng(11);
    long primes[] = {3, 5, 7, 61};
    int bad = 0;
    for (int it = 0; it < 1000; ++it) {
        long p = primes[it % 4], N = 4 + rng.below(8);
        auto u = random_padic(rng, p, N, -2, 3);
        auto w = random_padic(rng, p, N, -2, 3);
        if (u.is_zero() || w.is_zero()) continue;
        auto r = padic_log(u * w) - padic_log(u) - padic_log(w);
        if (!r.is_zero()) ++bad;
        auto sq = padic_log(u * u) - padic_log(u).mul_int(2);
        if (!sq.is_zero()) ++bad;
    }
    CHECK(bad == 0);
}

TEST_CASE("exp and log are inverse on p Z_p") {
    long p = 7;
    auto x = PadicNumber::from_int(7 * 12, p, 12);
    CHECK(padic_log(padic_exp(x)).equals(x));
}

TEST_CASE("sqrt and teichmuller") {
    long p = 13, N = 10;
    auto a = PadicNumber::from_int(10, p, N);  // 10 = 6^2 mod 13
    auto r = a.sqrt();
    CHECK((r * r).equals(a));
    auto t = PadicNumber::from_int(5, p, N).teichmuller();
    CHECK(t.pow(p - 1).equals(PadicNumber::from_int(1, p, N)));
    CHECK(mpz_class(t.lift() % p) == 5);
}

TEST_CASE("linear solve examples") {
    long p = 5, N = 8;
    auto I = PadicMatrix::identity(3, p, N);
    PadicMatrix B(3, 2, p, N);
    for (size_t i = 0; i < 3; ++i)
        for (size_t j = 0; j < 2; ++j) B(i, j) = PadicNumber::from_int(long(i * 7 + j + 1), p, N);
    auto X = padic_linear_solve(I, B);
    CHECK((X - B).is_zero());

    PadicMatrix D(2, 2, p, N);
    D(0, 0) = PadicNumber::from_int(p, p, N + 1);  // relative precision N
    D(1, 1) = PadicNumber::from_int(1, p, N);
    auto Dinv = padic_linear_solve(D, PadicMatrix::identity(2, p, N));
    CHECK(Dinv(0, 0).prec() == N - 1);
    CHECK(Dinv(0, 0).val() == -1);
    CHECK(Dinv(1, 1).prec() == N);

    PadicMatrix S(2, 2, p, N);
    S(0, 0) = PadicNumber::from_int(p, p, N);
    S(0, 1) = PadicNumber::from_int(p, p, N);
    S(1, 0) = PadicNumber::from_int(p, p, N);
    S(1, 1) = PadicNumber::from_int(p, p, N);
    CHECK_THROWS_AS(padic_linear_solve(S, I.block(0, 0, 2, 2)), PrecisionError);
}

TEST_CASE("linear solve against exact rational inverse") {
    TestRng rng(5);
    long p = 61, N = 10;
    for (int it = 0; it < 20; ++it) {
        std::vector<std::vector<mpq_class>> A;
        mpq_class det;
        do {
            A = random_int_matrix(rng, 4, 9);
            det = rational_det(A);
        } while (det == 0 || mpz_class(det.get_num() % p) == 0);
        auto Ainv = rational_inverse(A);
        auto P = PadicMatrix::from_rational(A, p, N);
        auto X = P.inverse();
        auto E = PadicMatrix::from_rational(Ainv, p, N);
        CHECK((X - E).is_zero());
        CHECK((X * P - PadicMatrix::identity(4, p, N)).is_zero());
        CHECK(X.min_prec() >= N);
        auto cp = P.charpoly();
        auto ecp = rational_charpoly(A);
        for (size_t k = 0; k < 5; ++k) CHECK(cp[k].equals(PadicNumber::from_rational(ecp[k], p, N)));
        CHECK(P.det().equals(PadicNumber::from_rational(det, p, N)));
    }
}

TEST_CASE("rational reconstruction") {
    auto x = PadicNumber::from_rational(mpq_class(2, 3), 61, 5);
    CHECK(rational_reconstruct(x, 100) == mpq_class(2, 3));
    auto y = PadicNumber::from_rational(-4, 29, 4);
    CHECK(rational_reconstruct(y, 10) == -4);
    auto z = PadicNumber::from_rational(mpq_class(999983, 1000003), 61, 5);
    CHECK_THROWS_AS(rational_reconstruct(z, 10), PrecisionError);
    auto w = PadicNumber::from_rational(mpq_class(-7, 61 * 5), 61, 5);
    CHECK(rational_reconstruct(w, 100) == mpq_class(-7, 305));
}

TEST_CASE("property: rational round trip") {
    TestRng rng(3);
    for (int it = 0; it < 300; ++it) {
        long p = (it % 2) ? 61 : 7, N = 12;
        mpz_class H = 200;
        mpz_class a = rng.range(-200, 200), b = rng.range(1, 200);
        if (b % p == 0) continue;
        mpq_class q(a, b);
        q.canonicalize();
        CHECK(rational_reconstruct(PadicNumber::from_rational(q, p, N), H) == q);
    }
}
