#include "pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace qck::pipeline {

namespace fs = std::filesystem;

namespace {

std::string trim_ws(const std::string& x) {
    size_t a = x.find_first_not_of(" \t\r"), b = x.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : x.substr(a, b - a + 1);
}

// "key rest = value" -> (key, rest, value); comments start with '#'
bool split_kv(std::string line, std::string& key, std::string& extra, std::string& value) {
    if (auto h = line.find('#'); h != std::string::npos) line = line.substr(0, h);
    line = trim_ws(line);
    if (line.empty()) return false;
    auto eq = line.find('=');
    std::string lhs = eq == std::string::npos ? line : line.substr(0, eq);
    value = eq == std::string::npos ? "" : trim_ws(line.substr(eq + 1));
    std::istringstream ls(lhs);
    ls >> key;
    std::getline(ls, extra);
    extra = trim_ws(extra);
    if (eq == std::string::npos) std::swap(extra, value);  // "key value"
    return true;
}

mpq_class rat(const std::string& s) {
    mpq_class q(trim_ws(s));
    q.canonicalize();
    return q;
}

std::pair<mpq_class, mpq_class> rat_pair(const std::string& s) {
    std::string t = s;
    std::replace(t.begin(), t.end(), ',', ' ');
    std::istringstream in(t);
    std::string x, y;
    if (!(in >> x >> y)) throw UsageError("expected a point 'x y', got '" + s + "'");
    return {rat(x), rat(y)};
}

std::string rat_str(const mpq_class& q) { return q.get_str(); }

json rat_matrix_json(const RatMatrix& m) {
    json a = json::array();
    for (auto& row : m) {
        json r = json::array();
        for (auto& x : row) r.push_back(rat_str(x));
        a.push_back(r);
    }
    return a;
}

json padic_matrix_json(const PadicMatrix& m) {
    json a = json::array();
    for (size_t i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (size_t j = 0; j < m.cols(); ++j) r.push_back(m(i, j).serialize());
        a.push_back(r);
    }
    return a;
}

json padic_list_json(const std::vector<PadicNumber>& v) {
    json a = json::array();
    for (auto& x : v) a.push_back(x.serialize());
    return a;
}

std::string padic_list_str(const std::vector<PadicNumber>& v) {
    std::string s = "[";
    for (size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i].serialize();
    return s + "]";
}

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
    return h;
}

}  // namespace

std::string fnv_hex(const std::string& s) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)fnv1a(s));
    return buf;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw UsageError("cannot read " + p.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const fs::path& p, const std::string& s) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << s;
    if (!out) throw std::runtime_error("cannot write " + p.string());
}

RatPoly parse_rat_list(const std::string& text) {
    auto l = text.find('['), r = text.rfind(']');
    if (l == std::string::npos || r == std::string::npos || r < l) throw UsageError("expected [ ... ], got '" + text + "'");
    RatPoly out;
    std::stringstream ss(text.substr(l + 1, r - l - 1));
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!trim_ws(tok).empty()) out.push_back(rat(tok));
    return out;
}

// ---- curve and basis files ----

CurveSpec parse_curve_file(const std::string& text) {
    CurveSpec s;
    std::istringstream in(text);
    std::string line, key, extra, value;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!split_kv(line, key, extra, value)) continue;
        try {
            if (key == "label") s.label = value;
            else if (key == "f") s.f = parse_rat_list(value);
            else if (key == "p") s.p = std::stol(value);
            else if (key == "precision") s.precision = std::stol(value);
            else if (key == "odd_root") s.odd_root = std::stol(value);
            else if (key == "point") s.points.push_back(rat_pair(value));
            else if (key == "base") s.base = rat_pair(value);
            else if (key == "generator") {
                // generator a = [...], b = [...]: the text after the key holds both lists
                std::string all = trim_ws(line.substr(line.find("generator") + 9));
                auto pa = all.find("a"), pb = all.find("b");
                if (pa == std::string::npos || pb == std::string::npos) throw UsageError("generator needs a = [...], b = [...]");
                RatMumford D;
                D.a = parse_rat_list(all.substr(pa, pb - pa));
                D.b = parse_rat_list(all.substr(pb));
                trim(D.b);
                s.generators.push_back(D);
            } else
                throw UsageError("unknown key '" + key + "'");
        } catch (const UsageError& e) {
            throw UsageError("curve file line " + std::to_string(lineno) + ": " + e.what());
        } catch (const std::exception& e) {
            throw UsageError("curve file line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    trim(s.f);
    if (s.f.size() < 6) throw UsageError("curve file: f = [...] of degree >= 5 required");
    return s;
}

std::vector<RatPoly> parse_basis_file(const std::string& text) {
    std::vector<RatPoly> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (auto h = line.find('#'); h != std::string::npos) line = line.substr(0, h);
        if (trim_ws(line).empty()) continue;
        out.push_back(parse_rat_list(line));
    }
    if (out.empty()) throw UsageError("basis file lists no forms");
    return out;
}

// ---- config ----

fs::path PipelineConfig::resolve(const std::string& rel) const {
    fs::path p(rel);
    return p.is_absolute() ? p : dir / p;
}

uint64_t PipelineConfig::seed() const { return fnv1a(text); }

PipelineConfig parse_config(const std::string& text, const fs::path& dir) {
    PipelineConfig c;
    c.dir = dir.empty() ? fs::path(".") : dir;
    c.text = text;
    std::istringstream in(text);
    std::string line, key, extra, value;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!split_kv(line, key, extra, value)) continue;
        auto fail = [&](const std::string& m) { throw UsageError("config line " + std::to_string(lineno) + ": " + m); };
        try {
            if (key == "curve") c.curve = value;
            else if (key == "p") c.p = std::stol(value);
            else if (key == "N") c.N = std::stol(value);
            else if (key == "basis") c.basis = value;
            else if (key == "graph") c.graphs[std::stol(extra)] = value;
            else if (key == "expansions") c.expansions = value;
            else if (key == "heights") c.heights = value;
            else if (key == "pairing") c.pairing = value;
            else if (key == "upsilon") c.upsilon = value;
            else if (key == "gen_logs") c.gen_logs = value;
            else if (key == "coset_sieve") c.coset_sieve = value;
            else if (key == "output") c.output = value;
            else if (key == "pin") c.pin = value == "true" || value == "1" || value == "yes";
            else if (key == "cache_max_bytes") c.cache_max_bytes = std::stoll(value);
            else if (key == "sign") {
                if (value != "plus" && value != "minus") fail("sign must be plus or minus");
                c.sign = value == "plus" ? ZSign::Plus : ZSign::Minus;
            } else if (key == "sieve") {
                SieveRef r;
                auto at = value.find('@');
                r.file = trim_ws(value.substr(0, at));
                if (at != std::string::npos) {
                    std::istringstream ds(value.substr(at + 1));
                    std::string a, b;
                    ds >> a;
                    if (a == "inf") r.disk = "inf";
                    else if (ds >> b) r.disk = disk_key(false, std::stol(a), std::stol(b));
                    else fail("sieve disk needs 'xbar ybar' or 'inf'");
                }
                c.sieves.push_back(r);
            } else
                fail("unknown key '" + key + "'");
        } catch (const UsageError&) {
            throw;
        } catch (const std::exception& e) {
            fail(e.what());
        }
    }
    return c;
}

std::vector<std::string> check_config(const PipelineConfig& c) {
    std::vector<std::string> problems;
    auto need = [&](const std::string& what, const std::string& f) {
        if (!f.empty() && !fs::exists(c.resolve(f))) problems.push_back(what + " file " + c.resolve(f).string() + " does not exist");
    };
    if (c.curve.empty()) problems.push_back("config has no curve");
    need("curve", c.curve);
    need("basis", c.basis);
    need("heights", c.heights);
    need("upsilon", c.upsilon);
    need("gen_logs", c.gen_logs);
    need("coset_sieve", c.coset_sieve);
    if (c.pairing != "solve") need("pairing", c.pairing);
    for (auto& [ell, g] : c.graphs) need("graph", g);
    for (auto& s : c.sieves) need("sieve", s.file);
    if (!c.curve.empty() && fs::exists(c.resolve(c.curve))) {
        try {
            auto s = parse_curve_file(read_file(c.resolve(c.curve)));
            if (s.p && c.p && s.p != c.p)
                problems.push_back("p = " + std::to_string(c.p) + " but the curve file says p = " + std::to_string(s.p));
        } catch (const std::exception& e) {
            problems.push_back(e.what());
        }
    }
    if (!c.expansions.empty() && fs::is_directory(c.resolve(c.expansions)))
        for (auto& e : fs::directory_iterator(c.resolve(c.expansions))) {
            if (e.path().extension() != ".exp") continue;
            try {
                auto ex = parse_expansions(read_file(e.path()));
                if (c.p && ex.p != c.p)
                    problems.push_back(e.path().string() + " is for p = " + std::to_string(ex.p));
            } catch (const std::exception& err) {
                problems.push_back(e.path().string() + ": " + err.what());
            }
        }
    for (auto& [ell, g] : c.graphs)
        if (ell == c.p) problems.push_back("graph given for the working prime " + std::to_string(ell));
    return problems;
}

// ---- cache ----

std::string cache_dir() {
    const char* e = std::getenv("QCK_CACHE");
    return e && *e ? e : ".qck-cache";
}

void cache_store_text(const std::string& dir, const std::string& name, const std::string& body) {
    fs::create_directories(dir);
    auto path = fs::path(dir) / name;
    auto tmp = path;
    tmp += ".tmp";
    write_file(tmp, body + "checksum " + fnv_hex(body) + "\n");
    fs::rename(tmp, path);
}

namespace {

// body without the checksum line, if the checksum matches
bool checked_body(const fs::path& path, std::string& body) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::ostringstream s;
    s << in.rdbuf();
    std::string all = s.str();
    if (all.empty() || all.back() != '\n') return false;
    auto pos = all.rfind('\n', all.size() - 2);
    size_t start = pos == std::string::npos ? 0 : pos + 1;
    std::string last = all.substr(start, all.size() - 1 - start);
    if (last.rfind("checksum ", 0) != 0) return false;
    body = all.substr(0, start);
    return fnv_hex(body) == last.substr(9);
}

std::set<std::string> read_pins(const std::string& dir) {
    std::set<std::string> pins;
    std::ifstream in(fs::path(dir) / "pins");
    std::string l;
    while (std::getline(in, l))
        if (!trim_ws(l).empty()) pins.insert(trim_ws(l));
    return pins;
}

}  // namespace

bool cache_load_text(const std::string& dir, const std::string& name, std::string& body) {
    return checked_body(fs::path(dir) / name, body);
}

void cache_pin(const std::string& dir, const std::string& name) {
    auto pins = read_pins(dir);
    if (pins.count(name)) return;
    fs::create_directories(dir);
    std::ofstream out(fs::path(dir) / "pins", std::ios::app);
    out << name << "\n";
}

CacheGcReport cache_gc(const std::string& dir, long long max_bytes) {
    CacheGcReport rep;
    if (!fs::is_directory(dir)) return rep;
    auto pins = read_pins(dir);
    struct Entry {
        fs::path path;
        std::string name;
        long long bytes;
        fs::file_time_type mtime;
    };
    std::vector<Entry> live;
    std::vector<fs::path> files;
    for (auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() != "pins") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (auto& p : files) {
        std::string name = p.filename().string(), body;
        if (p.extension() == ".tmp") {
            fs::remove(p);
            rep.evicted.push_back(name);
            rep.warnings.push_back(name + ": stale temporary file removed");
            continue;
        }
        if (!checked_body(p, body)) {
            fs::remove(p);
            rep.evicted.push_back(name);
            rep.warnings.push_back(name + ": checksum mismatch, evicted");
            continue;
        }
        live.push_back({p, name, (long long)fs::file_size(p), fs::last_write_time(p)});
    }
    long long total = 0;
    for (auto& e : live) total += e.bytes;
    // oldest first, name as tie-break for determinism
    std::sort(live.begin(), live.end(), [](const Entry& a, const Entry& b) {
        return a.mtime != b.mtime ? a.mtime < b.mtime : a.name < b.name;
    });
    for (auto& e : live) {
        bool pinned = pins.count(e.name) > 0;
        if (total > max_bytes && !pinned) {
            fs::remove(e.path);
            total -= e.bytes;
            rep.evicted.push_back(e.name);
        } else {
            rep.kept.push_back(e.name);
        }
    }
    if (total > max_bytes) rep.warnings.push_back("pinned entries alone exceed the size limit");
    std::sort(rep.kept.begin(), rep.kept.end());
    return rep;
}

// ---- curve side ----

OddSide odd_side(const CurveSpec& s, long p, long N) {
    OddSide o;
    if (!s.even()) {
        o.C = OddCurveQp::from_rational(s.f, p, N);
        return o;
    }
    if (!s.odd_root)
        throw UsageError("even-degree model: set odd_root to a simple root of f mod " + std::to_string(p) +
                         " to work on an odd model (see `qck validate`)");
    o.model = odd_model_padic(s.f, p, 4 * N + 40, *s.odd_root);
    o.C = OddCurveQp::from_model(*o.model);
    return o;
}

json validate_curve_spec(const CurveSpec& s, long p, bool& ok) {
    json r;
    r["stage"] = "validate";
    r["label"] = s.label;
    r["p"] = p;
    r["degree"] = (int)s.f.size() - 1;
    r["genus"] = s.genus();
    ok = false;
    try {
        if (!s.even()) {
            validate_curve(s.f, p);
            r["model"] = "odd";
            r["status"] = "ok";
            ok = true;
            return r;
        }
        curve_over_Q(s.f, s.label);
        r["model"] = "even";
        if (!good_reduction(s.f, p)) {
            r["status"] = "bad-reduction";
            r["message"] = "bad reduction at " + std::to_string(p);
            return r;
        }
        auto fb = reduce_mod(s.f, p);
        std::vector<long> simple;
        auto df = fq::deriv(fb, p);
        for (auto x : fq::roots(fb, p))
            if (fq::eval(df, x, p) != 0) simple.push_back((long)x);
        r["simple_roots_mod_p"] = simple;
        if (!s.odd_root) {
            r["status"] = "needs-odd-model";
            std::string msg = "even-degree model: Frobenius and Coleman integration need an odd-degree model over Q_" +
                              std::to_string(p) + "; ";
            if (simple.empty())
                msg += "f has no root mod p, so no odd model over Q_p exists at this prime";
            else
                msg += "add `odd_root = " + std::to_string(simple[0]) + "` to the curve file to send that root to infinity";
            r["message"] = msg;
            return r;
        }
        if (std::find(simple.begin(), simple.end(), ((*s.odd_root % p) + p) % p) == simple.end()) {
            r["status"] = "bad-odd-root";
            r["message"] = "odd_root is not a simple root of f mod p";
            return r;
        }
        auto m = odd_model_padic(s.f, p, std::max<long>(s.precision, 4), *s.odd_root);
        r["odd_model"] = padic_list_json(m.Q);
        r["status"] = "ok";
        ok = true;
    } catch (const CurveError& e) {
        r["status"] = "invalid";
        r["message"] = e.what();
    }
    return r;
}

// ---- cohomology ----

CohomologyResult run_cohomology(const CurveSpec& s, long p, long N, const std::vector<RatPoly>* basis, ZSign sign,
                                const std::string& cache) {
    if (s.even() && !basis) throw UsageError("even-degree model: a basis file of forms h dx/y is required");
    auto o = odd_side(s, p, N);
    int g = o.C.g;
    std::vector<RatPoly> forms = basis ? *basis : default_basis(g);
    if ((int)forms.size() != 2 * g) throw UsageError("basis must have 2g = " + std::to_string(2 * g) + " forms");

    CohomologyResult r;
    r.cache_key = frobenius_cache_key(o.C, N);
    PadicMatrix F;
    if (!cache.empty() && cache_load_matrix(cache, r.cache_key, F)) {
        r.cached = true;
    } else {
        F = frobenius_matrix(o.C, N).F;
        if (!cache.empty()) cache_store_matrix(cache, r.cache_key, F);
    }
    // change of basis: columns are the chosen forms in the basis x^i dx/(2y)
    PadicMatrix M;
    if (o.model) {
        M = even_forms_in_odd_basis(*o.model, forms, 4 * N + 40);
    } else if (basis) {
        M = PadicMatrix(2 * g, 2 * g, p, N + 20);
        auto Cw = OddCurveQp::from_rational(s.f, p, N + 20);
        for (int k = 0; k < 2 * g; ++k) {
            PadicPoly P;
            for (auto& c : forms[k]) P.push_back(PadicNumber::from_rational(2 * c, p, N + 20));
            auto col = reduce_polynomial_form(Cw, P);
            for (int i = 0; i < 2 * g; ++i) M(i, k) = col[i];
        }
    } else {
        M = PadicMatrix::identity(2 * g, p, N + 20);
    }
    r.F = M.inverse() * F * M;
    r.A = hecke_from_frobenius(r.F, p);
    r.C = cup_product_matrix(s.f, forms);
    r.charpoly = hecke_charpoly(r.A, p);
    try {
        r.Z = ns_class(r.A, r.C, g, sign);
    } catch (const std::exception& e) {
        r.z_error = e.what();
    }
    if (!cache.empty()) {
        std::ostringstream body;
        body << "cup-and-ns " << 2 * g << (sign == ZSign::Plus ? " plus" : " minus") << "\n";
        for (auto* m : {&r.C, &r.Z}) {
            for (auto& row : *m) {
                for (size_t j = 0; j < row.size(); ++j) body << (j ? " " : "") << row[j].get_str();
                body << "\n";
            }
        }
        std::string tag;
        for (auto& h : forms)
            for (auto& c : h) tag += c.get_str() + ",";
        cache_store_text(cache, r.cache_key + "-" + fnv_hex(tag + (sign == ZSign::Plus ? "+" : "-")) + ".cz", body.str());
    }
    return r;
}

json cohomology_record(const CohomologyResult& r) {
    json j;
    j["stage"] = "cohomology";
    j["cache_key"] = r.cache_key;
    j["cached"] = r.cached;
    j["frobenius"] = padic_matrix_json(r.F);
    j["hecke"] = padic_matrix_json(r.A);
    json cp = json::array();
    for (auto& c : r.charpoly) cp.push_back(c.get_str());
    j["hecke_charpoly"] = cp;
    j["cup_product"] = rat_matrix_json(r.C);
    if (r.Z.empty()) j["ns_class_error"] = r.z_error;
    else j["ns_class"] = rat_matrix_json(r.Z);
    return j;
}

// ---- coleman ----

PointQp parse_point(const CurveSpec& s, const OddSide& o, const std::string& text, long N) {
    auto [x, y] = rat_pair(text);
    if (rat_eval(s.f, x) != y * y) throw UsageError("point (" + text + ") is not on the curve");
    long p = o.C.p;
    if (!o.model) return {PadicNumber::from_rational(x, p, N), PadicNumber::from_rational(y, p, N)};
    long W = 4 * N + 40;
    auto [U, V] = o.model->map_point(PadicNumber::from_rational(x, p, W), PadicNumber::from_rational(y, p, W));
    return {U.with_prec(std::min(U.prec(), N)), V.with_prec(std::min(V.prec(), N))};
}

std::vector<PadicNumber> coleman_integrals(const CurveSpec& s, long p, long N, const std::string& from,
                                           const std::string& to) {
    auto o = odd_side(s, p, N);
    auto P = parse_point(s, o, from, N), Q = parse_point(s, o, to, N);
    require_good_point(P);
    require_good_point(Q);
    auto fd = frobenius_matrix(o.C, N);
    return basis_integrals(fd, P, Q);
}

// ---- graph heights ----

GraphHeights run_graph_heights(const std::string& graph_text, long ell, long p, long N) {
    auto gf = parse_graph_file(graph_text);
    auto mu = bd_measure(gf.graph, gf.input);
    auto j = solve_laplacian(mu, gf.basepoint, gf.graph);
    GraphHeights out;
    out.ell = ell;
    out.table = local_height_values(j, gf.graph, ell, gf.reduction, LogBranch::iwasawa(p, N), N);
    return out;
}

json graph_record(const GraphHeights& g) {
    json j;
    j["stage"] = "graph-heights";
    j["ell"] = g.ell;
    json vals = json::object();
    for (auto& [label, v] : g.table.j) vals[label] = rat_str(v);
    j["j"] = vals;
    json hs = json::object();
    for (auto& [label, v] : g.table.height) hs[label] = v.serialize();
    j["height"] = hs;
    json ups = json::array();
    for (auto& u : g.table.upsilon) ups.push_back(rat_str(u));
    j["upsilon_j"] = ups;
    j["upsilon"] = padic_list_json(g.table.upsilon_padic);
    return j;
}

std::vector<PadicNumber> combine_upsilon(const std::vector<GraphHeights>& tables, long p, long N) {
    std::vector<PadicNumber> acc{PadicNumber::zero(p, N)};
    for (auto& t : tables) {
        std::vector<PadicNumber> next;
        for (auto& a : acc)
            for (auto& u : t.table.upsilon_padic) {
                auto s = a + u;
                bool dup = false;
                for (auto& x : next) dup |= x.equals(s);
                if (!dup) next.push_back(s);
            }
        acc.swap(next);
    }
    return acc;
}

// ---- pairing ----

std::vector<CalibrationDatum> parse_height_data(const std::string& text, long& p, long& N) {
    std::istringstream in(text);
    std::string line;
    std::vector<CalibrationDatum> rows;
    bool header = false;
    p = N = 0;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line = line.substr(0, h);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        auto fail = [&](const std::string& m) { throw UsageError("height data line " + std::to_string(lineno) + ": " + m); };
        if (!header) {
            if (key != "qck-heights") fail("expected header 'qck-heights 1'");
            header = true;
        } else if (key == "p") {
            ls >> p;
        } else if (key == "N") {
            ls >> N;
        } else if (key == "row") {
            if (!p || !N) fail("p and N must precede the rows");
            auto field = [&](const std::string& name) -> std::string {
                auto k = line.find(" " + name + " =");
                if (k == std::string::npos) return "";
                auto start = line.find('=', k) + 1;
                if (name == "h") {
                    auto end = line.find(" m =", start);
                    return trim_ws(line.substr(start, end == std::string::npos ? std::string::npos : end - start));
                }
                auto a = line.find('[', start), b = line.find(']', a);
                return line.substr(a, b - a + 1);
            };
            CalibrationDatum d;
            auto Ds = field("D"), Es = field("E"), hs = field("h"), ms = field("m");
            if (Ds.empty() || Es.empty() || hs.empty()) fail("row needs D = [...] E = [...] h = <value>");
            d.D = parse_padic_list(Ds, p, N);
            d.E = parse_padic_list(Es, p, N);
            d.hp = hs.find("v:") != std::string::npos ? PadicNumber::parse(hs, p) : PadicNumber::from_rational(rat(hs), p, N);
            if (!ms.empty()) d.m = parse_rat_list(ms);
            rows.push_back(d);
        } else {
            fail("unknown key '" + key + "'");
        }
    }
    if (!header) throw UsageError("height data: missing header");
    return rows;
}

Calibration run_pairing(const std::vector<CalibrationDatum>& rows) { return calibrate_away_constants(rows); }

std::string write_pairing(const Calibration& c) {
    const auto& h = c.pairing;
    std::ostringstream o;
    o << "qck-pairing 1\np " << h.p << "\nN " << h.N << "\ng " << h.g << "\n";
    o << "alpha = " << padic_list_str(h.coefficients()) << "\n";
    o << "constants = " << padic_list_str(c.constants) << "\n";
    return o.str();
}

HeightPairing parse_pairing(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    long p = 0, N = 0;
    int g = 0;
    bool header = false;
    std::vector<PadicNumber> alpha;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        if (!header) {
            if (key != "qck-pairing") throw UsageError("pairing file: expected header 'qck-pairing 1'");
            header = true;
        } else if (key == "p") ls >> p;
        else if (key == "N") ls >> N;
        else if (key == "g") ls >> g;
        else if (key == "alpha") alpha = parse_padic_list(line, p, N);
        else if (key == "constants") continue;
        else throw UsageError("pairing file: unknown key '" + key + "'");
    }
    if (!p || !g || (int)alpha.size() != g * (g + 1) / 2) throw UsageError("pairing file: incomplete");
    auto h = HeightPairing::from_coefficients(g, alpha);
    h.p = p;
    h.N = N;
    return h;
}

// ---- quadratic Chabauty ----

std::vector<LogVector> parse_gen_logs(const std::string& text, long p, long N) {
    std::vector<LogVector> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (auto h = line.find('#'); h != std::string::npos) line = line.substr(0, h);
        if (trim_ws(line).empty()) continue;
        out.push_back(parse_padic_list(line, p, N));
    }
    return out;
}

std::string disk_key(bool infinite, long xbar, long ybar) {
    return infinite ? "inf" : std::to_string(xbar) + " " + std::to_string(ybar);
}

QcRun run_qc(const CurveSpec& s, const ExpansionFile& ex, const HeightPairing& h, const std::vector<PadicNumber>& upsilon,
             const std::vector<LogVector>* gen_logs) {
    QcRun out;
    long p = ex.p;
    auto mod = [p](const mpq_class& q) {
        auto x = PadicNumber::from_rational(q, p, 1);
        return x.is_zero() ? 0L : mpz_class(x.lift()).get_si();
    };
    std::vector<bool> found(s.points.size(), false);
    auto rho = assemble_rho(h, ex.disks, upsilon);
    for (auto& r : rho) {
        const auto& disk = ex.disks[r.disk];
        auto zeros = find_zeros(r.rho);
        for (auto& z : zeros) {
            Candidate c;
            c.root.disk = r.disk;
            c.root.upsilon = r.upsilon;
            c.root.root = z;
            c.infinite_disk = disk.infinite;
            c.xbar = disk.xbar;
            c.ybar = disk.ybar;
            if (!disk.infinite) {
                long prec = z.t.prec();
                auto xt = disk.xbar % p == 0 ? PadicNumber::zero(p, prec + 1)
                                             : PadicNumber::from_int(disk.xbar, p, prec + 1).teichmuller();
                for (size_t k = 0; k < s.points.size(); ++k) {
                    auto& [x, y] = s.points[k];
                    if (x.get_den() % p == 0 || mod(x) != disk.xbar || mod(y) != disk.ybar) continue;
                    auto tP = (PadicNumber::from_rational(x, p, prec + 1) - xt).div_int(p);
                    if ((tP - z.t).with_prec(prec).is_zero()) {
                        c.root.rational_point = true;
                        c.note = "(" + x.get_str() + ", " + y.get_str() + ")";
                        found[k] = true;
                    }
                }
            }
            if (gen_logs && !gen_logs->empty()) {
                LogVec pl;
                for (auto& L : disk.logs) pl.push_back(series_eval(L, z.t));
                try {
                    c.root.coset = zeros_to_cosets(pl, *gen_logs);
                } catch (const std::exception& e) {
                    c.note += (c.note.empty() ? "" : "; ") + std::string("no coset: ") + e.what();
                }
            }
            c.status = c.root.rational_point ? "RATIONAL-MATCHED" : "UNDECIDED";
            out.candidates.push_back(c);
        }
    }
    for (size_t k = 0; k < s.points.size(); ++k) {
        if (found[k]) continue;
        auto& [x, y] = s.points[k];
        bool covered = false;
        if (x.get_den() % p != 0)
            for (auto& d : ex.disks) covered |= !d.infinite && d.xbar == mod(x) && d.ybar == mod(y);
        if (covered) out.unmatched_points.push_back("(" + x.get_str() + ", " + y.get_str() + ")");
    }
    return out;
}

json candidate_record(const Candidate& c) {
    json j;
    j["stage"] = "qc-run";
    j["disk"] = disk_key(c.infinite_disk, c.xbar, c.ybar);
    j["upsilon"] = c.root.upsilon.serialize();
    j["t"] = c.root.root.t.serialize();
    j["multiplicity"] = c.root.root.multiplicity;
    j["rational_point"] = c.root.rational_point;
    j["coset"] = padic_list_json(c.root.coset);
    j["status"] = c.status;
    if (!c.note.empty()) j["note"] = c.note;
    return j;
}

// ---- sieve ----

SieveRun run_sieve(const std::string& text, size_t max_witnesses) {
    auto I = parse_sieve_instance(text);
    SieveRun r;
    r.M = I.M;
    r.multiplier = I.multiplier;
    if (I.disk) {
        r.has_disk = true;
        r.verdict = sieve_disk(I, *I.disk, max_witnesses);
    } else {
        r.survivors = sieve_cosets(I);
        r.verdict.verdict = r.survivors.empty() ? Verdict::Empty : Verdict::Undecided;
        r.verdict.level = I.M;
    }
    return r;
}

json sieve_record(const SieveRun& r) {
    json j;
    j["stage"] = "sieve";
    j["instance"] = r.file;
    if (!r.disk.empty()) j["disk"] = r.disk;
    j["M"] = r.M;
    j["multiplier"] = r.multiplier;
    j["verdict"] = r.verdict.verdict == Verdict::Empty ? "EMPTY" : "UNDECIDED";
    if (r.has_disk) {
        j["level"] = r.verdict.level;
        json tr = json::array();
        for (auto& [m, n] : r.verdict.trace) tr.push_back(json::array({m, n}));
        j["trace"] = tr;
        j["witnesses"] = r.verdict.witnesses;
    } else {
        j["survivors"] = r.survivors;
    }
    return j;
}

void apply_sieves(QcRun& q, const std::vector<SieveRun>& sieves, long p) {
    for (auto& c : q.candidates) {
        if (c.status != "UNDECIDED") continue;
        std::string key = disk_key(c.infinite_disk, c.xbar, c.ybar);
        for (auto& s : sieves) {
            if (s.has_disk) {
                if (s.disk == key && s.verdict.verdict == Verdict::Empty) {
                    c.status = "ELIMINATED";
                    c.note = "disk sieve " + s.file + " is EMPTY";
                }
                continue;
            }
            // the p-part of M pins the coset modulo p^v; a rational point here must survive there
            long v = 0, pv = 1;
            for (long m = s.M; m % p == 0; m /= p) ++v, pv *= p;
            if (v == 0 || c.root.coset.empty()) continue;
            Tuple a;
            bool usable = true;
            for (auto& x : c.root.coset) {
                if (x.val() < 0 || x.prec() < v) {
                    usable = false;
                    break;
                }
                a.push_back(mpz_class(mpz_class(x.with_prec(v).lift() * s.multiplier) % pv).get_si());
            }
            if (!usable) continue;
            bool hit = false;
            for (auto& t : s.survivors) {
                bool same = t.size() == a.size();
                for (size_t i = 0; same && i < a.size(); ++i) same = ((t[i] % pv) + pv) % pv == a[i];
                hit |= same;
            }
            if (!hit) {
                c.status = "ELIMINATED";
                c.note = "coset excluded by sieve " + s.file;
            }
        }
    }
}

}  // namespace qck::pipeline
