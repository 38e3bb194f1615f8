#include "doctest.h"
#include "qck/graphheights.hpp"
#include "oracles.hpp"
#include "testgen.hpp"

using namespace qck;
using oracle::frac;
using oracle::random_graph;
using oracle::random_zero_measure;

namespace {

// symbolic oracle for the single-edge Laplacian of x^2
MetricGraph single_edge(const mpq_class& L) {
    MetricGraph G;
    G.add_edge("a", "b", L);
    return G;
}

}  // namespace

TEST_CASE("laplacian examples") {
    mpq_class L(5, 2);
    auto G = single_edge(L);
    PiecewisePoly c{{{3}}, {3, 3}};
    auto mu0 = laplacian(c, G);
    CHECK(mu0.total(G) == 0);
    CHECK(mu0.mass == std::vector<mpq_class>{0, 0});
    CHECK(mu0.density[0].empty());

    PiecewisePoly lin{{{0, 1}}, {0, L}};
    auto mu1 = laplacian(lin, G);
    CHECK(mu1.mass == std::vector<mpq_class>{-1, 1});
    CHECK(mu1.density[0].empty());

    PiecewisePoly sq{{{0, 0, 1}}, {0, L * L}};
    auto mu2 = laplacian(sq, G);
    CHECK(mu2.density[0] == RatPoly{-2});
    // d/dx x^2 = 2x: 0 at the source, 2L at the far endpoint
    CHECK(mu2.mass == std::vector<mpq_class>{0, 2 * L});
    CHECK(mu2.total(G) == 0);

    PiecewisePoly bad{{{0, 1}}, {0, 7}};
    CHECK_THROWS_AS(laplacian(bad, G), GraphError);
}

TEST_CASE("homology projection") {
    MetricGraph T;
    T.add_edge("a", "b", 1);
    T.add_edge("b", "c", 2);
    auto HT = homology_projection(T);
    CHECK(HT.cycles.empty());
    for (auto& row : HT.P)
        for (auto& x : row) CHECK(x == 0);

    MetricGraph L;
    L.add_edge("v", "v", 3);
    auto HL = homology_projection(L);
    CHECK(HL.P[0][0] == 1);

    // two loops at one vertex, both of length 2
    MetricGraph G;
    G.add_edge("v", "v", 2, "e1");
    G.add_edge("v", "v", 2, "e2");
    auto H = homology_projection(G);
    CHECK(H.P[0][0] == 1);
    CHECK(H.P[1][1] == 1);
    CHECK(H.P[0][1] == 0);
    CHECK(H.P[1][0] == 0);
}

TEST_CASE("two loops of length 2: trace-zero action") {
    MetricGraph G;
    G.add_edge("v", "v", 2, "e1");
    G.add_edge("v", "v", 2, "e2");
    mpq_class a = -4, b = 3, c = 5;
    BDInput in{{{a, b}, {c, -a}}, {0}};
    auto mu = bd_measure(G, in);
    CHECK(mu.density[0] == RatPoly{a / 2});
    CHECK(mu.density[1] == RatPoly{-a / 2});
    CHECK(mu.mass[0] == 0);
    auto j = solve_laplacian(mu, GraphPoint::at_vertex(0), G);
    mpq_class m1 = j.eval(G, GraphPoint::on_edge(0, 1)), m2 = j.eval(G, GraphPoint::on_edge(1, 1));
    CHECK(j.eval(G, GraphPoint::at_vertex(0)) == 0);
    // values at the two midpoints are opposite; with density d on a loop of length L the
    // midpoint value is d L^2 / 8
    CHECK(m1 == -m2);
    CHECK(m1 == a / 2 * 4 / 8);
    CHECK(laplacian(j, G) == mu);

    // the full table: labels on the middle vertex and the two midpoints
    auto T = local_height_values(j, G, 7, {{"P1", GraphPoint::at_vertex(0)}, {"P6", GraphPoint::on_edge(0, 1)},
                                            {"P8", GraphPoint::on_edge(1, 1)}},
                                 LogBranch{29, PadicNumber::zero(29, 6)}, 6);
    CHECK(T.upsilon.size() == 3);
    CHECK(T.upsilon[1] == 0);
    CHECK(T.upsilon[0] == -T.upsilon[2]);
    auto l7 = padic_log(PadicNumber::from_int(7, 29, 6));
    CHECK(T.height.at("P6").equals(PadicNumber::from_rational(m1, 29, 6) * l7));
}

TEST_CASE("path of two edges of length 1/3 with end masses (t, -t)") {
    MetricGraph G;
    G.add_edge("v0", "v2", mpq_class(1, 3));
    G.add_edge("v2", "v1", mpq_class(1, 3));
    for (long t : {1L, -3L, 7L}) {
        BDInput in{{}, {2 * t, 0, -2 * t}};  // vertex order v0, v2, v1
        auto mu = bd_measure(G, in);
        CHECK(mu.mass == std::vector<mpq_class>{t, 0, -t});
        auto j = solve_laplacian(mu, GraphPoint::at_vertex(G.vertex("v1")), G);
        mpq_class j0 = j.at_vertex[G.vertex("v0")], j2 = j.at_vertex[G.vertex("v2")], j1 = j.at_vertex[G.vertex("v1")];
        CHECK(j1 == 0);
        CHECK(j0 == 2 * j2);
        CHECK(j0 == frac(2 * t, 3));
    }
}

TEST_CASE("trivial graph gives trivial heights") {
    MetricGraph G;
    G.add_vertex("v");
    GraphMeasure mu{{}, {0}};
    auto j = solve_laplacian(mu, GraphPoint::at_vertex(0), G);
    auto T = local_height_values(j, G, 5, {{"P", GraphPoint::at_vertex(0)}}, LogBranch{61, PadicNumber::zero(61, 5)}, 5);
    CHECK(T.upsilon == std::vector<mpq_class>{0});
    CHECK(T.height.at("P").is_zero());
}

TEST_CASE("errors") {
    MetricGraph G;
    G.add_edge("a", "b", 1);
    G.add_vertex("c");
    GraphMeasure mu{{{}}, {0, 0, 0}};
    CHECK_THROWS_AS(solve_laplacian(mu, GraphPoint::at_vertex(0), G), GraphError);
    MetricGraph H;
    H.add_edge("a", "b", 1);
    GraphMeasure nz{{{}}, {1, 0}};
    CHECK_THROWS_AS(solve_laplacian(nz, GraphPoint::at_vertex(0), H), GraphError);
    CHECK_THROWS_AS(bd_measure(H, BDInput{{}, {1, 0}}), GraphError);
    CHECK_THROWS_AS(G.add_edge("a", "b", 0), GraphError);
    PiecewisePoly z{{{0}}, {0, 0}};
    CHECK_THROWS_AS(z.eval(H, GraphPoint::on_edge(0, 2)), GraphError);
}

TEST_CASE("property: round trip, uniqueness and kernel on random graphs") {
    TestRng rng(41);
    for (int it = 0; it < 150; ++it) {
        int nv = 1 + (int)rng.below(8);
        auto G = random_graph(rng, nv, (int)rng.below(4));
        if (G.edges.empty()) continue;
        auto mu = random_zero_measure(rng, G);
        auto j = solve_laplacian(mu, GraphPoint::at_vertex(0), G);
        CHECK(laplacian(j, G) == mu);
        CHECK(j.at_vertex[0] == 0);
        // another basepoint: differs by a constant
        GraphPoint b2 = GraphPoint::on_edge(0, G.edges[0].length / 2);
        auto j2 = solve_laplacian(mu, b2, G);
        mpq_class c = j.at_vertex[0] - j2.at_vertex[0];
        for (int v = 0; v < nv; ++v) CHECK(j.at_vertex[v] - j2.at_vertex[v] == c);
        CHECK(j2.eval(G, b2) == 0);
        // kernel: zero measure solves to zero
        GraphMeasure zero{std::vector<RatPoly>(G.edges.size()), std::vector<mpq_class>(nv, 0)};
        auto j0 = solve_laplacian(zero, GraphPoint::at_vertex(nv - 1), G);
        for (auto& x : j0.at_vertex) CHECK(x == 0);
        for (auto& p : j0.on_edge) CHECK(p.empty());
    }
}

TEST_CASE("property: projection is orthogonal and idempotent") {
    TestRng rng(43);
    for (int it = 0; it < 60; ++it) {
        auto G = random_graph(rng, 1 + (int)rng.below(6), 1 + (int)rng.below(4));
        auto H = homology_projection(G);
        size_t ne = G.edges.size();
        for (size_t e = 0; e < ne; ++e) {
            // pi fixes cycles
            for (auto& cyc : H.cycles) {
                mpq_class dot = 0;
                for (size_t k = 0; k < ne; ++k) dot += ((k == e ? 1 : 0) - H.P[k][e]) * G.edges[k].length * cyc[k];
                CHECK(dot == 0);
            }
        }
        for (auto& cyc : H.cycles)
            for (size_t k = 0; k < ne; ++k) {
                mpq_class s = 0;
                for (size_t e = 0; e < ne; ++e) s += H.P[k][e] * cyc[e];
                CHECK(s == cyc[k]);
            }
    }
}

TEST_CASE("property: flipping an edge leaves j unchanged") {
    TestRng rng(47);
    for (int it = 0; it < 40; ++it) {
        auto G = random_graph(rng, 2 + (int)rng.below(5), (int)rng.below(3));
        auto mu = random_zero_measure(rng, G);
        auto j = solve_laplacian(mu, GraphPoint::at_vertex(0), G);
        MetricGraph F = G;
        std::swap(F.edges[0].s, F.edges[0].t);
        // constant densities are unchanged by x -> L - x
        auto jf = solve_laplacian(mu, GraphPoint::at_vertex(0), F);
        CHECK(j.at_vertex == jf.at_vertex);
        mpq_class L = G.edges[0].length, x(1, 3);
        x *= L;
        CHECK(j.eval(G, GraphPoint::on_edge(0, x)) == jf.eval(F, GraphPoint::on_edge(0, L - x)));
    }
}

TEST_CASE("unit parameter mode") {
    MetricGraph G;
    G.add_edge("v", "v", 2, "e1");
    G.add_edge("v", "v", 2, "e2");
    G.unit_parameter = true;
    BDInput in{{{1, 0}, {0, -1}}, {0}};
    auto mu = bd_measure(G, in);
    auto j = solve_laplacian(mu, GraphPoint::at_vertex(0), G);
    CHECK(j.eval(G, GraphPoint::on_edge(0, mpq_class(1, 2))) == mpq_class(1, 16));
    CHECK(laplacian(j, G) == mu);
}

TEST_CASE("graph file") {
    std::string text =
        "# C161 at 7\n"
        "e1: v -> v length 2\n"
        "e2: v -> v length 2\n"
        "faction -4 1\n"
        "faction 3 4\n"
        "trace v 0\n"
        "basepoint v\n"
        "reduction P1 v\n"
        "reduction P6 e1 1\n";
    auto f = parse_graph_file(text);
    CHECK(f.graph.edges.size() == 2);
    CHECK(f.input.F[0][0] == -4);
    CHECK(f.reduction.size() == 2);
    CHECK(f.reduction[1].second.edge == 0);
    auto mu = bd_measure(f.graph, f.input);
    auto j = solve_laplacian(mu, f.basepoint, f.graph);
    CHECK(j.eval(f.graph, f.reduction[1].second) == -1);
    CHECK_THROWS_AS(parse_graph_file("bogus line\n"), GraphError);
}
