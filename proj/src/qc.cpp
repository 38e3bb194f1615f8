#include "qck/qc.hpp"

#include <algorithm>
#include <sstream>

namespace qck {

namespace {

struct Solved {
    std::vector<PadicNumber> x;
    long rank = 0;
    std::vector<PadicNumber> null_direction;
};

// A x = b for an m x k system (m >= k), full pivoting by valuation.  Uses the first k
// independent rows; reports the kernel when the rank is short.
Solved solve_rows(std::vector<std::vector<PadicNumber>> A, std::vector<PadicNumber> b, long p) {
    size_t m = A.size(), k = A.empty() ? 0 : A[0].size();
    std::vector<size_t> col(k);
    for (size_t j = 0; j < k; ++j) col[j] = j;
    size_t r = 0;
    for (; r < k && r < m; ++r) {
        size_t bi = m, bj = k;
        long bv = PadicNumber::INF_VAL;
        for (size_t i = r; i < m; ++i)
            for (size_t j = r; j < k; ++j)
                if (!A[i][j].is_zero() && A[i][j].val() < bv) bv = A[i][j].val(), bi = i, bj = j;
        if (bi == m) break;
        std::swap(A[r], A[bi]);
        std::swap(b[r], b[bi]);
        if (bj != r) {
            for (auto& row : A) std::swap(row[r], row[bj]);
            std::swap(col[r], col[bj]);
        }
        for (size_t i = r + 1; i < m; ++i) {
            if (A[i][r].is_zero()) continue;
            PadicNumber f = A[i][r] / A[r][r];
            for (size_t j = r; j < k; ++j) A[i][j] -= f * A[r][j];
            b[i] -= f * b[r];
        }
    }
    Solved s;
    s.rank = (long)r;
    auto back = [&](std::vector<PadicNumber> rhs, std::vector<PadicNumber>& y) {
        for (size_t i = r; i-- > 0;) {
            PadicNumber t = rhs[i];
            for (size_t j = i + 1; j < r; ++j) t -= A[i][j] * y[j];
            y[i] = t / A[i][i];
        }
    };
    if (r < k) {
        // kernel vector: first free variable = 1
        long top = 1;
        for (auto& row : A)
            for (auto& a : row) top = std::max(top, a.prec());
        std::vector<PadicNumber> y(k, PadicNumber::zero(p, top)), rhs(r);
        y[r] = PadicNumber::from_int(1, p, top);
        for (size_t i = 0; i < r; ++i) rhs[i] = -A[i][r];
        back(rhs, y);
        s.null_direction.assign(k, PadicNumber());
        for (size_t j = 0; j < k; ++j) s.null_direction[col[j]] = y[j];
        return s;
    }
    std::vector<PadicNumber> y(k);
    back(std::vector<PadicNumber>(b.begin(), b.begin() + k), y);
    s.x.assign(k, PadicNumber());
    for (size_t j = 0; j < k; ++j) s.x[col[j]] = y[j];
    return s;
}

std::vector<PadicNumber> g_row(const LogVec& D, const LogVec& E) {
    size_t g = D.size();
    std::vector<PadicNumber> row;
    for (size_t i = 0; i < g; ++i)
        for (size_t j = i; j < g; ++j) row.push_back(i == j ? D[i] * E[i] : (D[i] * E[j] + D[j] * E[i]).div_int(2));
    return row;
}

std::string describe(const std::vector<PadicNumber>& v) {
    std::string s = "[";
    for (size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i].serialize();
    return s + "]";
}

}  // namespace

PadicNumber HeightPairing::eval(const LogVec& D, const LogVec& E) const {
    auto row = g_row(D, E);
    auto c = coefficients();
    PadicNumber s = PadicNumber::zero(p, N);
    for (size_t k = 0; k < c.size(); ++k) s += c[k] * row[k];
    return s;
}

std::vector<PadicNumber> HeightPairing::coefficients() const {
    std::vector<PadicNumber> c;
    for (int i = 0; i < g; ++i)
        for (int j = i; j < g; ++j) c.push_back(alpha[i][j]);
    return c;
}

HeightPairing HeightPairing::from_coefficients(int g, const std::vector<PadicNumber>& c) {
    HeightPairing h;
    h.g = g;
    h.p = c.at(0).prime();
    h.N = PadicNumber::INF_VAL;
    h.alpha.assign(g, std::vector<PadicNumber>(g));
    size_t k = 0;
    for (int i = 0; i < g; ++i)
        for (int j = i; j < g; ++j) {
            h.alpha[i][j] = h.alpha[j][i] = c[k++];
            h.N = std::min(h.N, c[k - 1].prec());
        }
    return h;
}

HeightPairing solve_height_pairing(const std::vector<HeightDatum>& data, std::vector<PadicNumber>* residuals) {
    if (data.empty()) throw InsufficientData("insufficiently independent data: no rows", {}, 0);
    int g = (int)data[0].D.size();
    long p = data[0].value.prime();
    size_t k = (size_t)g * (g + 1) / 2;
    std::vector<std::vector<PadicNumber>> A;
    std::vector<PadicNumber> b;
    for (auto& d : data) {
        if ((int)d.D.size() != g || (int)d.E.size() != g) throw std::invalid_argument("log vectors of mixed length");
        A.push_back(g_row(d.D, d.E));
        b.push_back(d.value);
    }
    if (A.size() < k)
        throw InsufficientData("insufficiently independent data: need " + std::to_string(k) + " rows", {}, (long)(k - A.size()));
    Solved s = solve_rows(A, b, p);
    if (s.rank < (long)k)
        throw InsufficientData("insufficiently independent data; null direction " + describe(s.null_direction),
                               s.null_direction, (long)k - s.rank);
    HeightPairing h = HeightPairing::from_coefficients(g, s.x);
    if (residuals) {
        residuals->clear();
        for (auto& d : data) residuals->push_back(h.eval(d.D, d.E) - d.value);
    }
    return h;
}

Calibration calibrate_away_constants(const std::vector<CalibrationDatum>& data) {
    if (data.empty()) throw InsufficientData("no calibration data", {}, 0);
    int g = (int)data[0].D.size();
    size_t nc = data[0].m.size();
    long p = data[0].hp.prime(), N = data[0].hp.prec();
    size_t k = (size_t)g * (g + 1) / 2;
    std::vector<std::vector<PadicNumber>> A;
    std::vector<PadicNumber> b;
    for (auto& d : data) {
        if (d.m.size() != nc) throw std::invalid_argument("constant patterns of mixed length");
        auto row = g_row(d.D, d.E);
        for (auto& m : d.m) row.push_back(-PadicNumber::from_rational(m, p, N + 8));
        A.push_back(row);
        b.push_back(d.hp);
    }
    if (A.size() < k + nc)
        throw InsufficientData("calibration under-determined: affine solution space of dimension " +
                                   std::to_string(k + nc - A.size()) + " or more",
                               {}, (long)(k + nc - A.size()));
    Solved s = solve_rows(A, b, p);
    if (s.rank < (long)(k + nc))
        throw InsufficientData("calibration not unique: affine solution space of dimension " +
                                   std::to_string(k + nc - s.rank) + ", direction " + describe(s.null_direction),
                               s.null_direction, (long)(k + nc) - s.rank);
    Calibration c;
    c.pairing = HeightPairing::from_coefficients(g, std::vector<PadicNumber>(s.x.begin(), s.x.begin() + k));
    c.constants.assign(s.x.begin() + k, s.x.end());
    return c;
}

// ---- expansion files ----

std::vector<PadicNumber> parse_padic_list(const std::string& text, long p, long N) {
    auto a = text.find('['), b = text.rfind(']');
    if (a == std::string::npos || b == std::string::npos || b < a) throw std::invalid_argument("expected [ ... ]");
    std::string body = text.substr(a + 1, b - a - 1);
    std::vector<PadicNumber> out;
    std::stringstream ss(body);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok.erase(0, tok.find_first_not_of(" \t"));
        tok.erase(tok.find_last_not_of(" \t") + 1);
        if (tok.empty()) continue;
        if (tok.find("v:") != std::string::npos)
            out.push_back(PadicNumber::parse(tok, p));
        else
            out.push_back(PadicNumber::from_rational(mpq_class(tok), p, N));
    }
    return out;
}

ExpansionFile parse_expansions(const std::string& text) {
    ExpansionFile f;
    std::stringstream in(text);
    std::string line;
    int lineno = 0;
    bool header = false;
    auto fail = [&](const std::string& m) {
        throw std::invalid_argument("expansions line " + std::to_string(lineno) + ": " + m);
    };
    while (std::getline(in, line)) {
        ++lineno;
        auto h = line.find('#');
        if (h != std::string::npos) line = line.substr(0, h);
        std::stringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        if (key == "qck-expansions") {
            int v = 0;
            ls >> v;
            if (v != 1) fail("unsupported version");
            header = true;
        } else if (!header) {
            fail("missing qck-expansions header");
        } else if (key == "p") {
            ls >> f.p;
        } else if (key == "N") {
            ls >> f.N;
        } else if (key == "g") {
            ls >> f.g;
        } else if (key == "disk") {
            QCLocalExpansion d;
            std::string a;
            ls >> a;
            if (a == "inf")
                d.infinite = true;
            else {
                d.xbar = std::stol(a);
                if (!(ls >> d.ybar)) fail("disk needs xbar ybar");
            }
            d.logs.resize(f.g);
            f.disks.push_back(d);
        } else {
            if (f.disks.empty()) fail("data before the first disk");
            if (f.p == 0 || f.N == 0) fail("p and N must precede data");
            auto& d = f.disks.back();
            if (key == "provenance") {
                ls >> d.provenance;
            } else if (key == "hp") {
                d.hp = parse_padic_list(line, f.p, f.N);
            } else if (key.rfind("log", 0) == 0) {
                int i = std::stoi(key.substr(3));
                if (i < 1 || i > f.g) fail("log index out of range");
                d.logs[i - 1] = parse_padic_list(line, f.p, f.N);
            } else {
                fail("unknown key " + key);
            }
        }
    }
    if (!header) throw std::invalid_argument("expansions: empty file");
    return f;
}

std::string write_expansions(const ExpansionFile& f) {
    std::ostringstream os;
    auto list = [&](const PadicSeries& s) {
        os << "[";
        for (size_t i = 0; i < s.size(); ++i) os << (i ? ", " : "") << s[i].serialize();
        os << "]\n";
    };
    os << "qck-expansions 1\np " << f.p << "\nN " << f.N << "\ng " << f.g << "\n";
    for (auto& d : f.disks) {
        if (d.infinite)
            os << "disk inf\n";
        else
            os << "disk " << d.xbar << " " << d.ybar << "\n";
        os << "provenance " << d.provenance << "\nhp = ";
        list(d.hp);
        for (size_t i = 0; i < d.logs.size(); ++i) {
            os << "log" << i + 1 << " = ";
            list(d.logs[i]);
        }
    }
    return os.str();
}

// ---- rho ----

std::vector<RhoSeries> assemble_rho(const HeightPairing& h, const std::vector<QCLocalExpansion>& disks,
                                    const std::vector<PadicNumber>& upsilon) {
    std::vector<RhoSeries> out;
    int g = h.g;
    for (size_t k = 0; k < disks.size(); ++k) {
        auto& d = disks[k];
        if ((int)d.logs.size() != g) throw std::invalid_argument("disk " + std::to_string(k) + ": missing log series");
        size_t L = d.hp.size();
        for (auto& a : d.logs)
            for (auto& b : d.logs)
                if (!a.empty() && !b.empty()) L = std::max(L, a.size() + b.size() - 1);
        if (L == 0) throw std::invalid_argument("disk " + std::to_string(k) + ": no expansion data");
        long p = h.p;
        PadicSeries base(L, PadicNumber::zero(p, h.N));
        // h(x) = sum_{i<=j} alpha_ij log_i log_j
        for (int i = 0; i < g; ++i)
            for (int j = i; j < g; ++j) {
                auto& a = d.logs[i];
                auto& b = d.logs[j];
                for (size_t u = 0; u < a.size(); ++u)
                    for (size_t v = 0; v < b.size() && u + v < L; ++v) base[u + v] += h.alpha[i][j] * a[u] * b[v];
            }
        for (size_t u = 0; u < d.hp.size(); ++u) base[u] -= d.hp[u];
        for (auto& y : upsilon) {
            RhoSeries r{k, y, base};
            r.rho[0] -= y;
            out.push_back(std::move(r));
        }
    }
    return out;
}

// ---- roots ----

PadicSeries series_shift(const PadicSeries& f, const PadicNumber& r, long scale) {
    PadicSeries t = f;
    int d = (int)t.size() - 1;
    for (int i = 0; i <= d; ++i)
        for (int j = d - 1; j >= i; --j) t[j] = t[j] + r * t[j + 1];
    for (int k = 1; k <= d; ++k) t[k] = t[k].shift(scale * k);
    return t;
}

PadicNumber series_eval(const PadicSeries& f, const PadicNumber& t) {
    if (f.empty()) return PadicNumber::zero(t.prime(), t.prec());
    PadicNumber s = f.back();
    for (size_t i = f.size() - 1; i-- > 0;) s = s * t + f[i];
    return s;
}

long weierstrass_degree(const PadicSeries& f) {
    long vmin = PadicNumber::INF_VAL, d = -1;
    for (size_t i = 0; i < f.size(); ++i)
        if (!f[i].is_zero() && f[i].val() <= vmin) vmin = f[i].val(), d = (long)i;
    return d;
}

namespace {

void subdivide(const PadicSeries& g, const mpz_class& center, long depth, int dparent, long p,
               std::vector<SeriesRoot>& out) {
    long vmin = PadicNumber::INF_VAL, d = -1;
    for (size_t i = 0; i < g.size(); ++i)
        if (!g[i].is_zero() && g[i].val() <= vmin) vmin = g[i].val(), d = (long)i;
    bool exhausted = d < 0;
    for (size_t i = 0; i < g.size(); ++i)
        if (g[i].is_zero() && g[i].prec() <= vmin) exhausted = true;
    if (exhausted) {
        if (depth == 0) throw PrecisionError("insufficient precision: series vanishes to working precision");
        out.push_back({PadicNumber::from_int(center, p, depth), d >= 1 ? (int)d : dparent});
        return;
    }
    if (d == 0) return;
    mpz_class step = mpz_pow(p, depth);
    long top = 1;
    for (auto& c : g) top = std::max(top, c.prec());
    for (long r = 0; r < p; ++r) {
        PadicSeries child = series_shift(g, PadicNumber::from_int(r, p, top), 1);
        subdivide(child, center + r * step, depth + 1, (int)d, p, out);
    }
}

}  // namespace

std::vector<SeriesRoot> find_zeros(const PadicSeries& f) {
    if (f.empty()) throw PrecisionError("insufficient precision: empty series");
    std::vector<SeriesRoot> out;
    subdivide(f, 0, 0, 0, f[0].prime(), out);
    return out;
}

std::vector<PadicNumber> zeros_to_cosets(const LogVec& point_log, const std::vector<LogVec>& gen_logs) {
    size_t g = point_log.size();
    if (gen_logs.size() != g) throw std::invalid_argument("need g generator logarithms");
    long p = point_log[0].prime();
    PadicMatrix G(g, g, p, 0), L(g, 1, p, 0);
    for (size_t i = 0; i < g; ++i) {
        L(i, 0) = point_log[i];
        for (size_t k = 0; k < g; ++k) G(i, k) = gen_logs[k][i];
    }
    PadicMatrix a;
    try {
        a = padic_linear_solve(G, L);
    } catch (const PrecisionError&) {
        throw std::runtime_error("bad prime for sieving: generator logarithms are dependent to working precision");
    }
    std::vector<PadicNumber> out;
    for (size_t i = 0; i < g; ++i) out.push_back(a(i, 0));
    return out;
}

}  // namespace qck
