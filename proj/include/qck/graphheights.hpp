// Rationally metrised graphs, piecewise polynomial potentials and local heights away from p.
#pragma once

#include <gmpxx.h>

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qck/hyperelliptic.hpp"
#include "qck/padic.hpp"

namespace qck {

struct GraphError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MetricGraph {
    struct Edge {
        int s = 0, t = 0;
        mpq_class length;
        std::string name;
    };
    std::vector<std::string> vertices;
    std::vector<Edge> edges;
    // Edge coordinates run over [0, length] by default.  With unit_parameter the
    // coordinate runs over [0, 1] and the Laplacian reads g'(1) literally.
    bool unit_parameter = false;

    int num_vertices() const { return (int)vertices.size(); }
    int add_vertex(const std::string& name);
    int vertex(const std::string& name) const;  // -1 if absent
    int edge(const std::string& name) const;
    void add_edge(const std::string& s, const std::string& t, const mpq_class& len, const std::string& name = "");
    mpq_class param_length(int e) const { return unit_parameter ? mpq_class(1) : edges[e].length; }
    bool connected() const;
};

// A point of Gamma_Q: a vertex, or (edge, offset) with offset in [0, param_length]
struct GraphPoint {
    int vertex = -1;
    int edge = -1;
    mpq_class offset = 0;
    static GraphPoint at_vertex(int v) { return GraphPoint{v, -1, 0}; }
    static GraphPoint on_edge(int e, const mpq_class& x) { return GraphPoint{-1, e, x}; }
};

struct PiecewisePoly {
    std::vector<RatPoly> on_edge;       // polynomial in the edge coordinate
    std::vector<mpq_class> at_vertex;   // vertex values (needed for isolated vertices)
    mpq_class eval(const MetricGraph& G, const GraphPoint& P) const;
};

struct GraphMeasure {
    std::vector<RatPoly> density;  // per edge
    std::vector<mpq_class> mass;   // per vertex
    mpq_class total(const MetricGraph& G) const;
    bool operator==(const GraphMeasure& o) const;
};

struct BDInput {
    std::vector<std::vector<mpq_class>> F;  // action on H_1 in the cycle basis; column j = image of cycle j
    std::vector<mpq_class> traces;          // Tr(F | V_p(X_v)) per vertex
};

struct HomologyProjection {
    std::vector<std::vector<mpq_class>> cycles;  // cycle basis as edge vectors
    std::vector<std::vector<mpq_class>> P;       // |E| x |E| projector, column e = pi(e)
    std::vector<std::vector<mpq_class>> coords;  // r x |E|, column e = pi(e) in the cycle basis
};

HomologyProjection homology_projection(const MetricGraph& G);
GraphMeasure laplacian(const PiecewisePoly& g, const MetricGraph& G);
GraphMeasure bd_measure(const MetricGraph& G, const BDInput& in);
PiecewisePoly solve_laplacian(const GraphMeasure& mu, const GraphPoint& base, const MetricGraph& G);

struct LocalHeightTable {
    std::map<std::string, mpq_class> j;           // j_Gamma at the reduction of each label
    std::map<std::string, PadicNumber> height;    // j * log_p(ell)
    std::vector<mpq_class> upsilon;               // distinct j values
    std::vector<PadicNumber> upsilon_padic;
};
LocalHeightTable local_height_values(const PiecewisePoly& j, const MetricGraph& G, long ell,
                                     const std::vector<std::pair<std::string, GraphPoint>>& reduction,
                                     const LogBranch& branch, long N);

// Graph file: lines
//   vertex v
//   e1: v0 -> v1 length 1/3
//   faction 1 0          (one row per line)
//   trace v0 1/2
//   basepoint v0 | basepoint e1 1/2
//   reduction P v0 | reduction P e1 1
//   parameter unit
struct GraphFile {
    MetricGraph graph;
    BDInput input;
    GraphPoint basepoint;
    std::vector<std::pair<std::string, GraphPoint>> reduction;
};
GraphFile parse_graph_file(const std::string& text);

// Exact rational solve of a square system (throws GraphError if singular)
std::vector<mpq_class> rational_solve(std::vector<std::vector<mpq_class>> A, std::vector<mpq_class> b);

}  // namespace qck
