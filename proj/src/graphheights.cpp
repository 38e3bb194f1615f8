#include "qck/graphheights.hpp"

#include <algorithm>
#include <queue>
#include <sstream>

namespace qck {

int MetricGraph::add_vertex(const std::string& name) {
    int v = vertex(name);
    if (v >= 0) return v;
    vertices.push_back(name);
    return (int)vertices.size() - 1;
}

int MetricGraph::vertex(const std::string& name) const {
    for (size_t i = 0; i < vertices.size(); ++i)
        if (vertices[i] == name) return (int)i;
    return -1;
}

int MetricGraph::edge(const std::string& name) const {
    for (size_t i = 0; i < edges.size(); ++i)
        if (edges[i].name == name) return (int)i;
    return -1;
}

void MetricGraph::add_edge(const std::string& s, const std::string& t, const mpq_class& len, const std::string& name) {
    if (len <= 0) throw GraphError("edge length must be positive");
    Edge e;
    e.s = add_vertex(s);
    e.t = add_vertex(t);
    e.length = len;
    e.name = name.empty() ? "e" + std::to_string(edges.size() + 1) : name;
    edges.push_back(e);
}

bool MetricGraph::connected() const {
    if (vertices.empty()) return true;
    std::vector<std::vector<int>> adj(vertices.size());
    for (auto& e : edges) adj[e.s].push_back(e.t), adj[e.t].push_back(e.s);
    std::vector<bool> seen(vertices.size(), false);
    std::queue<int> q;
    q.push(0);
    seen[0] = true;
    size_t n = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int w : adj[u])
            if (!seen[w]) seen[w] = true, ++n, q.push(w);
    }
    return n == vertices.size();
}

static RatPoly poly_deriv(const RatPoly& a) { return rat_deriv(a); }

mpq_class PiecewisePoly::eval(const MetricGraph& G, const GraphPoint& P) const {
    if (P.vertex >= 0) {
        if (P.vertex >= G.num_vertices()) throw GraphError("point off graph");
        return at_vertex[P.vertex];
    }
    if (P.edge < 0 || P.edge >= (int)G.edges.size() || P.offset < 0 || P.offset > G.param_length(P.edge))
        throw GraphError("point off graph");
    return rat_eval(on_edge[P.edge], P.offset);
}

mpq_class GraphMeasure::total(const MetricGraph& G) const {
    mpq_class s = 0;
    for (auto& m : mass) s += m;
    for (size_t e = 0; e < density.size(); ++e) {
        mpq_class L = G.param_length((int)e), Lk = L;
        for (size_t k = 0; k < density[e].size(); ++k) {
            s += density[e][k] * Lk / (long)(k + 1);
            Lk *= L;
        }
    }
    return s;
}

bool GraphMeasure::operator==(const GraphMeasure& o) const {
    if (density.size() != o.density.size() || mass != o.mass) return false;
    for (size_t e = 0; e < density.size(); ++e) {
        RatPoly a = density[e], b = o.density[e];
        trim(a);
        trim(b);
        if (a != b) return false;
    }
    return true;
}

std::vector<mpq_class> rational_solve(std::vector<std::vector<mpq_class>> A, std::vector<mpq_class> b) {
    size_t n = A.size();
    for (size_t c = 0; c < n; ++c) {
        size_t piv = c;
        while (piv < n && A[piv][c] == 0) ++piv;
        if (piv == n) throw GraphError("singular linear system");
        std::swap(A[c], A[piv]);
        std::swap(b[c], b[piv]);
        for (size_t r = 0; r < n; ++r) {
            if (r == c || A[r][c] == 0) continue;
            mpq_class f = A[r][c] / A[c][c];
            for (size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
            b[r] -= f * b[c];
        }
    }
    for (size_t i = 0; i < n; ++i) b[i] /= A[i][i];
    return b;
}

HomologyProjection homology_projection(const MetricGraph& G) {
    if (!G.connected()) throw GraphError("graph is not connected");
    size_t nv = G.vertices.size(), ne = G.edges.size();
    // BFS spanning tree; path[v] = edge vector of the tree path v -> root
    std::vector<int> parent_edge(nv, -1);
    std::vector<bool> seen(nv, false), tree(ne, false);
    std::vector<std::vector<mpq_class>> path(nv, std::vector<mpq_class>(ne, 0));
    std::queue<int> q;
    if (nv) q.push(0), seen[0] = true;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (size_t e = 0; e < ne; ++e) {
            auto& E = G.edges[e];
            int w = -1;
            int sign = 0;
            if (E.s == u && !seen[E.t]) w = E.t, sign = -1;  // w -> u traverses e backwards
            else if (E.t == u && !seen[E.s]) w = E.s, sign = 1;
            if (w < 0) continue;
            seen[w] = true;
            tree[e] = true;
            parent_edge[w] = (int)e;
            path[w] = path[u];
            path[w][e] += sign;
            q.push(w);
        }
    }
    HomologyProjection H;
    for (size_t e = 0; e < ne; ++e) {
        if (tree[e]) continue;
        auto& E = G.edges[e];
        std::vector<mpq_class> c(ne, 0);
        c[e] = 1;
        for (size_t k = 0; k < ne; ++k) c[k] += path[E.t][k] - path[E.s][k];
        H.cycles.push_back(c);
    }
    size_t r = H.cycles.size();
    // M = C^T W C, coords = M^{-1} C^T W
    std::vector<std::vector<mpq_class>> M(r, std::vector<mpq_class>(r, 0));
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < r; ++j)
            for (size_t k = 0; k < ne; ++k) M[i][j] += H.cycles[i][k] * G.edges[k].length * H.cycles[j][k];
    H.coords.assign(r, std::vector<mpq_class>(ne, 0));
    for (size_t e = 0; e < ne; ++e) {
        std::vector<mpq_class> rhs(r);
        for (size_t i = 0; i < r; ++i) rhs[i] = H.cycles[i][e] * G.edges[e].length;
        auto x = r ? rational_solve(M, rhs) : std::vector<mpq_class>{};
        for (size_t i = 0; i < r; ++i) H.coords[i][e] = x[i];
    }
    H.P.assign(ne, std::vector<mpq_class>(ne, 0));
    for (size_t e = 0; e < ne; ++e)
        for (size_t i = 0; i < r; ++i)
            for (size_t k = 0; k < ne; ++k) H.P[k][e] += H.cycles[i][k] * H.coords[i][e];
    return H;
}

GraphMeasure laplacian(const PiecewisePoly& g, const MetricGraph& G) {
    size_t nv = G.vertices.size(), ne = G.edges.size();
    if (g.on_edge.size() != ne || g.at_vertex.size() != nv) throw GraphError("piecewise polynomial has wrong shape");
    GraphMeasure mu;
    mu.density.resize(ne);
    mu.mass.assign(nv, 0);
    for (size_t e = 0; e < ne; ++e) {
        auto& E = G.edges[e];
        mpq_class L = G.param_length((int)e);
        const RatPoly& p = g.on_edge[e];
        if (rat_eval(p, 0) != g.at_vertex[E.s] || rat_eval(p, L) != g.at_vertex[E.t])
            throw GraphError("discontinuous at the endpoints of edge " + E.name);
        RatPoly d1 = poly_deriv(p), d2 = poly_deriv(d1);
        for (auto& c : d2) c = -c;
        mu.density[e] = d2;
        // outgoing derivatives: -g'(0) at the source, +g'(L) at the target
        mu.mass[E.s] -= rat_eval(d1, 0);
        mu.mass[E.t] += rat_eval(d1, L);
    }
    return mu;
}

GraphMeasure bd_measure(const MetricGraph& G, const BDInput& in) {
    auto H = homology_projection(G);
    size_t r = H.cycles.size(), ne = G.edges.size(), nv = G.vertices.size();
    if (in.F.size() != r || (r && in.F[0].size() != r))
        throw GraphError("F-action has size " + std::to_string(in.F.size()) + ", rank H_1 is " + std::to_string(r));
    if (in.traces.size() != nv) throw GraphError("need one trace per vertex");
    GraphMeasure mu;
    mu.density.resize(ne);
    mu.mass.resize(nv);
    for (size_t e = 0; e < ne; ++e) {
        std::vector<mpq_class> Fc(r, 0);
        for (size_t i = 0; i < r; ++i)
            for (size_t j = 0; j < r; ++j) Fc[i] += in.F[i][j] * H.coords[j][e];
        mpq_class coef = 0;
        for (size_t i = 0; i < r; ++i) coef += H.cycles[i][e] * Fc[i];
        coef /= G.edges[e].length;
        if (coef != 0) mu.density[e] = {coef};
    }
    for (size_t v = 0; v < nv; ++v) mu.mass[v] = in.traces[v] / 2;
    mpq_class t = mu.total(G);
    if (t != 0) throw GraphError("measure has total mass " + t.get_str() + " != 0: no potential exists");
    return mu;
}

PiecewisePoly solve_laplacian(const GraphMeasure& mu, const GraphPoint& base, const MetricGraph& G) {
    if (!G.connected()) throw GraphError("graph is not connected");
    size_t nv = G.vertices.size(), ne = G.edges.size();
    if (mu.density.size() != ne || mu.mass.size() != nv) throw GraphError("measure has wrong shape");
    mpq_class t = mu.total(G);
    if (t != 0) throw GraphError("measure has total mass " + t.get_str() + " != 0");
    // g_e = Gp_e(x) + alpha_e x + phi_s with Gp'' = -density, Gp(0) = Gp'(0) = 0
    std::vector<RatPoly> Gp(ne);
    for (size_t e = 0; e < ne; ++e) {
        const RatPoly& d = mu.density[e];
        RatPoly P(d.size() + 2, 0);
        for (size_t k = 0; k < d.size(); ++k) P[k + 2] = -d[k] / (long)((k + 1) * (k + 2));
        trim(P);
        Gp[e] = P;
    }
    std::vector<std::vector<mpq_class>> A(nv, std::vector<mpq_class>(nv, 0));
    // balance at v: sum_{s(e)=v} g_e'(0) - sum_{t(e)=v} g_e'(L) = -mass_v
    std::vector<mpq_class> rhs(nv);
    for (size_t v = 0; v < nv; ++v) rhs[v] = -mu.mass[v];
    for (size_t e = 0; e < ne; ++e) {
        auto& E = G.edges[e];
        mpq_class L = G.param_length((int)e), w = 1 / L;
        mpq_class GL = rat_eval(Gp[e], L), dGL = rat_eval(rat_deriv(Gp[e]), L);
        A[E.s][E.t] += w, A[E.s][E.s] -= w;
        rhs[E.s] += GL * w;
        A[E.t][E.t] -= w, A[E.t][E.s] += w;
        rhs[E.t] -= GL * w - dGL;
    }
    int pin = base.vertex >= 0 ? base.vertex : G.edges.at(base.edge).s;
    if (nv) {
        std::fill(A[pin].begin(), A[pin].end(), 0);
        A[pin][pin] = 1;
        rhs[pin] = 0;
    }
    auto phi = nv ? rational_solve(A, rhs) : std::vector<mpq_class>{};
    PiecewisePoly g;
    g.at_vertex = phi;
    g.on_edge.resize(ne);
    for (size_t e = 0; e < ne; ++e) {
        auto& E = G.edges[e];
        mpq_class L = G.param_length((int)e);
        mpq_class alpha = (phi[E.t] - phi[E.s] - rat_eval(Gp[e], L)) / L;
        RatPoly p = Gp[e];
        if (p.size() < 2) p.resize(2, 0);
        p[0] += phi[E.s];
        p[1] += alpha;
        trim(p);
        g.on_edge[e] = p;
    }
    mpq_class c = g.eval(G, base);
    if (c != 0) {
        for (auto& v : g.at_vertex) v -= c;
        for (auto& p : g.on_edge) {
            if (p.empty()) p.push_back(0);
            p[0] -= c;
            trim(p);
        }
    }
    return g;
}

LocalHeightTable local_height_values(const PiecewisePoly& j, const MetricGraph& G, long ell,
                                     const std::vector<std::pair<std::string, GraphPoint>>& reduction,
                                     const LogBranch& branch, long N) {
    long p = branch.p;
    PadicNumber lg = padic_log(PadicNumber::from_int(ell, p, N), branch);
    LocalHeightTable T;
    for (auto& [label, P] : reduction) {
        mpq_class v = j.eval(G, P);
        T.j[label] = v;
        T.height.emplace(label, PadicNumber::from_rational(v, p, N) * lg);
        if (std::find(T.upsilon.begin(), T.upsilon.end(), v) == T.upsilon.end()) T.upsilon.push_back(v);
    }
    if (reduction.empty()) T.upsilon.push_back(0);
    std::sort(T.upsilon.begin(), T.upsilon.end());
    for (auto& v : T.upsilon) T.upsilon_padic.push_back(PadicNumber::from_rational(v, p, N) * lg);
    return T;
}

static GraphPoint parse_point(const MetricGraph& G, std::istringstream& ss) {
    std::string a, off;
    ss >> a;
    if (ss >> off) {
        int e = G.edge(a);
        if (e < 0) throw GraphError("unknown edge " + a);
        return GraphPoint::on_edge(e, mpq_class(off));
    }
    int v = G.vertex(a);
    if (v < 0) throw GraphError("unknown vertex " + a);
    return GraphPoint::at_vertex(v);
}

GraphFile parse_graph_file(const std::string& text) {
    GraphFile out;
    std::istringstream in(text);
    std::string line;
    std::vector<std::pair<std::string, mpq_class>> traces;
    std::vector<std::string> deferred;
    while (std::getline(in, line)) {
        auto h = line.find('#');
        if (h != std::string::npos) line.resize(h);
        std::istringstream ss(line);
        std::string w;
        if (!(ss >> w)) continue;
        if (line.find("->") != std::string::npos) {
            // name: s -> t length a/b
            std::string name = w, s, arrow, t, kw, len;
            if (!name.empty() && name.back() == ':') name.pop_back();
            ss >> s >> arrow >> t >> kw >> len;
            if (arrow != "->" || kw != "length") throw GraphError("malformed edge line: " + line);
            mpq_class L(len);
            L.canonicalize();
            out.graph.add_edge(s, t, L, name);
        } else if (w == "vertex") {
            std::string v;
            ss >> v;
            out.graph.add_vertex(v);
        } else if (w == "faction") {
            std::vector<mpq_class> row;
            std::string x;
            while (ss >> x) {
                mpq_class q(x);
                q.canonicalize();
                row.push_back(q);
            }
            out.input.F.push_back(row);
        } else if (w == "trace") {
            std::string v, x;
            ss >> v >> x;
            mpq_class q(x);
            q.canonicalize();
            traces.push_back({v, q});
        } else if (w == "parameter") {
            std::string m;
            ss >> m;
            out.graph.unit_parameter = (m == "unit");
        } else if (w == "basepoint" || w == "reduction") {
            deferred.push_back(line);
        } else {
            throw GraphError("unknown graph file line: " + line);
        }
    }
    out.input.traces.assign(out.graph.vertices.size(), 0);
    for (auto& [v, x] : traces) {
        int i = out.graph.vertex(v);
        if (i < 0) throw GraphError("trace for unknown vertex " + v);
        out.input.traces[i] = x;
    }
    out.basepoint = GraphPoint::at_vertex(0);
    for (auto& l : deferred) {
        std::istringstream ss(l);
        std::string w;
        ss >> w;
        if (w == "basepoint") {
            out.basepoint = parse_point(out.graph, ss);
        } else {
            std::string label;
            ss >> label;
            out.reduction.push_back({label, parse_point(out.graph, ss)});
        }
    }
    return out;
}

}  // namespace qck
