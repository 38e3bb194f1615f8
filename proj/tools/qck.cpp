// qck: command-line driver for the quadratic Chabauty pipeline.
#include <algorithm>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "pipeline.hpp"

using namespace qck;
using namespace qck::pipeline;
namespace fs = std::filesystem;

namespace {

enum Exit { Complete = 0, Failure = 1, Undecided = 2, Precision = 3, Partial = 4 };

struct Options {
    std::string config, curve, basis, sign, from, to, graph, expansions, pairing, upsilon, instance, heights, output;
    long p = 0, N = 0, ell = 0;
    int jobs = 1;
    long long max_bytes = -1;
    bool quiet = false;
};

// human log on stdout (and <output>/<stage>.log), records in <output>/<stage>.jsonl
class Reporter {
public:
    Reporter(std::string stage, std::string dir, bool quiet) : stage_(std::move(stage)), dir_(std::move(dir)), quiet_(quiet) {}
    ~Reporter() { flush(); }
    void log(const std::string& s) {
        if (!quiet_) std::cout << s << "\n";
        log_ += s + "\n";
    }
    void record(const json& j) { jsonl_ += j.dump() + "\n"; }
    void artifact(const std::string& name, const std::string& body) {
        if (!dir_.empty()) write_file(fs::path(dir_) / name, body);
    }
    void flush() {
        if (dir_.empty() || flushed_) return;
        flushed_ = true;
        write_file(fs::path(dir_) / (stage_ + ".jsonl"), jsonl_);
        write_file(fs::path(dir_) / (stage_ + ".log"), log_);
    }

private:
    std::string stage_, dir_, log_, jsonl_;
    bool quiet_, flushed_ = false;
};

struct Context {
    Options o;
    std::optional<PipelineConfig> cfg;

    std::string path(const std::string& flag, const std::string& from_cfg) const {
        if (!flag.empty()) return flag;
        if (cfg && !from_cfg.empty()) return cfg->resolve(from_cfg).string();
        return "";
    }
    std::string output() const {
        if (!o.output.empty()) return o.output;
        return cfg ? cfg->resolve(cfg->output).string() : "";
    }
    CurveSpec curve() const {
        auto f = path(o.curve, cfg ? cfg->curve : "");
        if (f.empty()) throw UsageError("no curve: pass --curve or --config");
        return parse_curve_file(read_file(f));
    }
    long prime(const CurveSpec* s = nullptr) const {
        long p = o.p ? o.p : cfg && cfg->p ? cfg->p : s ? s->p : 0;
        if (!p) throw UsageError("no prime: pass -p, or set p in the config or curve file");
        if (s && s->p && s->p != p) throw UsageError("p = " + std::to_string(p) + " disagrees with the curve file");
        return p;
    }
    long prec(const CurveSpec* s = nullptr) const {
        long N = o.N ? o.N : cfg && cfg->N ? cfg->N : s ? s->precision : 0;
        if (N <= 0) throw UsageError("no precision: pass -N, or set N in the config or precision in the curve file");
        return N;
    }
    ZSign sign() const {
        if (o.sign.empty()) return cfg ? cfg->sign : ZSign::Plus;
        if (o.sign == "plus") return ZSign::Plus;
        if (o.sign == "minus") return ZSign::Minus;
        throw UsageError("--sign must be plus or minus");
    }
};

std::string matrix_text(const RatMatrix& m) {
    std::ostringstream s;
    for (auto& row : m) {
        s << "  [";
        for (size_t j = 0; j < row.size(); ++j) s << (j ? ", " : "") << row[j].get_str();
        s << "]\n";
    }
    return s.str();
}

int stage_validate(Context& c) {
    Reporter rep("validate", c.output(), c.o.quiet);
    auto s = c.curve();
    long p = c.prime(&s);
    bool ok = false;
    auto r = validate_curve_spec(s, p, ok);
    rep.record(r);
    rep.log("curve " + (s.label.empty() ? std::string("(unlabelled)") : s.label) + ", genus " + std::to_string(s.genus()) +
            ", p = " + std::to_string(p) + ": " + r["status"].get<std::string>());
    if (r.contains("message")) rep.log(r["message"].get<std::string>());
    if (c.cfg) {
        for (auto& prob : check_config(*c.cfg)) {
            rep.log("config: " + prob);
            rep.record(json{{"stage", "validate"}, {"config_problem", prob}});
            ok = false;
        }
    }
    return ok ? Complete : Failure;
}

int stage_cohomology(Context& c, bool ns_only) {
    Reporter rep(ns_only ? "nsclass" : "cohomology", c.output(), c.o.quiet);
    auto s = c.curve();
    long p = c.prime(&s), N = c.prec(&s);
    std::vector<RatPoly> basis;
    auto bf = c.path(c.o.basis, c.cfg ? c.cfg->basis : "");
    if (!bf.empty()) basis = parse_basis_file(read_file(bf));
    auto cache = cache_dir();
    auto r = run_cohomology(s, p, N, bf.empty() ? nullptr : &basis, c.sign(), cache);
    if (c.cfg && c.cfg->pin) cache_pin(cache, r.cache_key + ".mat");
    if (ns_only && r.Z.empty()) throw std::runtime_error("no Neron-Severi class from T_" + std::to_string(p) + ": " + r.z_error);
    auto rec = cohomology_record(r);
    if (ns_only) rec = json{{"stage", "nsclass"}, {"cache_key", r.cache_key}, {"ns_class", rec["ns_class"]}};
    rep.record(rec);
    if (!ns_only) {
        rep.log("Frobenius (" + std::string(r.cached ? "cached " : "") + r.cache_key + "):");
        for (size_t i = 0; i < r.F.rows(); ++i) {
            std::string row = "  ";
            for (size_t j = 0; j < r.F.cols(); ++j) row += (j ? "  " : "") + r.F(i, j).serialize();
            rep.log(row);
        }
        std::string cp = "Hecke charpoly coefficients:";
        for (auto& x : r.charpoly) cp += " " + x.get_str();
        rep.log(cp);
        rep.log("cup product:\n" + matrix_text(r.C));
    }
    if (r.Z.empty()) rep.log("no Neron-Severi class: " + r.z_error);
    else rep.log("Neron-Severi class Z:\n" + matrix_text(r.Z));
    return Complete;
}

int stage_coleman(Context& c) {
    Reporter rep("coleman", c.output(), c.o.quiet);
    if (c.o.from.empty() || c.o.to.empty()) throw UsageError("coleman needs --from \"x,y\" and --to \"x,y\"");
    auto s = c.curve();
    long p = c.prime(&s), N = c.prec(&s);
    auto I = coleman_integrals(s, p, N, c.o.from, c.o.to);
    json vals = json::array();
    for (auto& x : I) {
        vals.push_back(x.serialize());
        rep.log(x.serialize());
    }
    rep.record(json{{"stage", "coleman"}, {"from", c.o.from}, {"to", c.o.to}, {"integrals", vals}});
    return Complete;
}

std::vector<GraphHeights> all_graph_heights(Context& c, long p, long N, Reporter* rep) {
    std::vector<std::pair<long, std::string>> graphs;
    if (!c.o.graph.empty()) {
        if (!c.o.ell) throw UsageError("--graph needs --ell");
        graphs.push_back({c.o.ell, c.o.graph});
    } else if (c.cfg) {
        for (auto& [ell, g] : c.cfg->graphs) graphs.push_back({ell, c.cfg->resolve(g).string()});
    }
    std::vector<GraphHeights> out;
    for (auto& [ell, file] : graphs) {
        out.push_back(run_graph_heights(read_file(file), ell, p, N));
        if (rep) {
            auto r = graph_record(out.back());
            rep->record(r);
            std::string line = "ell = " + std::to_string(ell) + ": j values";
            for (auto& u : out.back().table.upsilon) line += " " + u.get_str();
            rep->log(line);
            for (auto& [label, h] : out.back().table.height) rep->log("  " + label + ": " + h.serialize());
        }
    }
    return out;
}

std::string upsilon_text(const std::vector<PadicNumber>& u) {
    std::string s = "upsilon = [";
    for (size_t i = 0; i < u.size(); ++i) s += (i ? ", " : "") + u[i].serialize();
    return s + "]\n";
}

int stage_graph_heights(Context& c) {
    Reporter rep("graph-heights", c.output(), c.o.quiet);
    long p = c.o.p ? c.o.p : c.cfg ? c.cfg->p : 0;
    if (!p) throw UsageError("graph-heights needs -p");
    long N = c.o.N ? c.o.N : c.cfg && c.cfg->N ? c.cfg->N : 10;
    auto tabs = all_graph_heights(c, p, N, &rep);
    if (tabs.empty()) throw UsageError("no graphs: pass --graph and --ell, or list graphs in the config");
    auto u = combine_upsilon(tabs, p, N);
    rep.record(json{{"stage", "graph-heights"}, {"upsilon_total", [&] {
                        json a = json::array();
                        for (auto& x : u) a.push_back(x.serialize());
                        return a;
                    }()}});
    rep.artifact("upsilon.txt", upsilon_text(u));
    rep.log("Upsilon has " + std::to_string(u.size()) + " element(s)");
    return Complete;
}

Calibration solve_pairing(Context& c, Reporter& rep) {
    auto hf = c.path(c.o.heights, c.cfg ? c.cfg->heights : "");
    if (hf.empty()) throw UsageError("pairing needs height data: pass --heights or set heights in the config");
    long p = 0, N = 0;
    auto rows = parse_height_data(read_file(hf), p, N);
    auto cal = run_pairing(rows);
    cal.pairing.p = p;
    cal.pairing.N = N;
    json rec{{"stage", "pairing"}, {"rows", rows.size()}};
    json a = json::array(), k = json::array();
    for (auto& x : cal.pairing.coefficients()) a.push_back(x.serialize());
    for (auto& x : cal.constants) k.push_back(x.serialize());
    rec["alpha"] = a;
    rec["constants"] = k;
    rep.record(rec);
    return cal;
}

int stage_pairing(Context& c) {
    Reporter rep("pairing", c.output(), c.o.quiet);
    auto cal = solve_pairing(c, rep);
    auto text = write_pairing(cal);
    rep.artifact("pairing.txt", text);
    rep.log(text);
    return Complete;
}

HeightPairing load_pairing(Context& c, Reporter& rep) {
    std::string spec = !c.o.pairing.empty() ? c.o.pairing : c.cfg ? c.cfg->pairing : "solve";
    if (spec == "solve") {
        if (c.path(c.o.heights, c.cfg ? c.cfg->heights : "").empty())
            throw MissingPrerequisite("no height pairing: pairing = solve but no height data", "pairing");
        return solve_pairing(c, rep).pairing;
    }
    auto f = c.o.pairing.empty() ? c.cfg->resolve(spec).string() : spec;
    if (!fs::exists(f)) throw MissingPrerequisite("pairing file " + f + " not found", "pairing");
    return parse_pairing(read_file(f));
}

std::vector<PadicNumber> load_upsilon(Context& c, long p, long N) {
    auto f = c.path(c.o.upsilon, c.cfg ? c.cfg->upsilon : "");
    if (!f.empty()) {
        if (!fs::exists(f)) throw MissingPrerequisite("upsilon file " + f + " not found", "graph-heights");
        return parse_padic_list(read_file(f), p, N);
    }
    if (c.cfg && !c.cfg->graphs.empty()) return combine_upsilon(all_graph_heights(c, p, N, nullptr), p, N);
    if (!c.output().empty() && fs::exists(fs::path(c.output()) / "upsilon.txt"))
        return parse_padic_list(read_file(fs::path(c.output()) / "upsilon.txt"), p, N);
    throw MissingPrerequisite("no upsilon set: pass --upsilon or list graphs in the config", "graph-heights");
}

// expansion files (*.exp) in a directory, merged
std::optional<ExpansionFile> load_expansions(const std::string& dir) {
    if (dir.empty() || !fs::is_directory(dir)) return std::nullopt;
    std::vector<fs::path> files;
    for (auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".exp") files.push_back(e.path());
    if (files.empty()) return std::nullopt;
    std::sort(files.begin(), files.end());
    std::optional<ExpansionFile> all;
    for (auto& f : files) {
        auto ex = parse_expansions(read_file(f));
        if (!all) {
            all = ex;
            continue;
        }
        if (ex.p != all->p || ex.g != all->g) throw UsageError(f.string() + ": p or g differs from the other expansion files");
        all->N = std::min(all->N, ex.N);
        for (auto& d : ex.disks) all->disks.push_back(d);
    }
    return all;
}

std::optional<std::vector<LogVector>> load_gen_logs(Context& c, const CurveSpec& s, long p, long N, Reporter& rep) {
    auto f = c.cfg && !c.cfg->gen_logs.empty() ? c.cfg->resolve(c.cfg->gen_logs).string() : "";
    if (!f.empty()) return parse_gen_logs(read_file(f), p, N);
    if (s.even() || s.generators.empty()) return std::nullopt;
    try {
        auto fd = frobenius_matrix(OddCurveQp::from_rational(s.f, p, N), N);
        std::vector<LogVector> logs;
        for (auto& D : s.generators) logs.push_back(abelian_log(fd, split_mumford(s.f, D, p, N)));
        return logs;
    } catch (const std::exception& e) {
        rep.log(std::string("generator logarithms unavailable (") + e.what() + "); cosets omitted");
        return std::nullopt;
    }
}

std::string candidate_line(const Candidate& k) {
    std::ostringstream s;
    s << "disk " << disk_key(k.infinite_disk, k.xbar, k.ybar) << "  t = " << k.root.root.t.serialize()
      << "  mult " << k.root.root.multiplicity << "  " << k.status;
    if (!k.note.empty()) s << "  " << k.note;
    return s.str();
}

int summarize(const QcRun& q, Reporter& rep, const std::string& stage) {
    long matched = 0, eliminated = 0, undecided = 0;
    for (auto& k : q.candidates) {
        auto r = candidate_record(k);
        r["stage"] = stage;
        rep.record(r);
        rep.log(candidate_line(k));
        matched += k.status == "RATIONAL-MATCHED";
        eliminated += k.status == "ELIMINATED";
        undecided += k.status == "UNDECIDED";
    }
    for (auto& pt : q.unmatched_points) {
        rep.log("warning: known point " + pt + " lies in an expanded disk but matches no root");
        rep.record(json{{"stage", stage}, {"warning", "unmatched known point"}, {"point", pt}});
    }
    rep.log(std::to_string(q.candidates.size()) + " root(s): " + std::to_string(matched) + " rational, " +
            std::to_string(eliminated) + " eliminated, " + std::to_string(undecided) + " undecided");
    return undecided ? Undecided : Complete;
}

QcRun compute_qc(Context& c, Reporter& rep, const ExpansionFile& ex) {
    auto s = c.curve();
    long p = c.prime(&s);
    if (ex.p != p) throw UsageError("expansions are for p = " + std::to_string(ex.p));
    auto h = load_pairing(c, rep);
    if (h.p != p) throw UsageError("pairing is for p = " + std::to_string(h.p));
    auto u = load_upsilon(c, p, ex.N);
    auto logs = load_gen_logs(c, s, p, ex.N, rep);
    return run_qc(s, ex, h, u, logs ? &*logs : nullptr);
}

int stage_qc_run(Context& c) {
    Reporter rep("qc-run", c.output(), c.o.quiet);
    auto dir = c.path(c.o.expansions, c.cfg ? c.cfg->expansions : "");
    auto ex = load_expansions(dir);
    if (!ex) throw UsageError("no expansion files (*.exp) in '" + dir + "'");
    auto q = compute_qc(c, rep, *ex);
    return summarize(q, rep, "qc-run");
}

std::vector<SieveRun> run_sieves(Context& c, Reporter& rep) {
    std::vector<SieveRef> refs;
    if (!c.o.instance.empty()) refs.push_back({c.o.instance, ""});
    else if (c.cfg) {
        for (auto r : c.cfg->sieves) {
            r.file = c.cfg->resolve(r.file).string();
            refs.push_back(r);
        }
        if (!c.cfg->coset_sieve.empty()) refs.push_back({c.cfg->resolve(c.cfg->coset_sieve).string(), ""});
    }
    std::vector<SieveRun> out;
    for (auto& r : refs) {
        auto s = run_sieve(read_file(r.file));
        s.file = fs::path(r.file).filename().string();
        s.disk = r.disk;
        rep.record(sieve_record(s));
        std::string line = s.file + ": ";
        if (s.has_disk) {
            line += s.verdict.verdict == Verdict::Empty ? "EMPTY" : "UNDECIDED";
            for (auto& [m, n] : s.verdict.trace) line += "  " + std::to_string(m) + ":" + std::to_string(n);
        } else if (s.survivors.empty()) {
            line += "EMPTY";
        } else {
            line += std::to_string(s.survivors.size()) + " survivor(s) mod " + std::to_string(s.M);
            for (size_t k = 0; k < std::min<size_t>(s.survivors.size(), 20); ++k) {
                line += k ? ", [" : "  [";
                for (size_t i = 0; i < s.survivors[k].size(); ++i) line += (i ? ", " : "") + std::to_string(s.survivors[k][i]);
                line += "]";
            }
        }
        rep.log(line);
        out.push_back(std::move(s));
    }
    return out;
}

int stage_sieve(Context& c) {
    Reporter rep("sieve", c.output(), c.o.quiet);
    auto runs = run_sieves(c, rep);
    if (runs.empty()) throw UsageError("no sieve instance: pass --instance or list sieves in the config");
    for (auto& r : runs)
        if (r.has_disk && r.verdict.verdict == Verdict::Undecided) return Undecided;
    return Complete;
}

int stage_report(Context& c) {
    if (!c.cfg) throw UsageError("report needs --config");
    Reporter rep("report", c.output(), c.o.quiet);
    auto s = c.curve();
    long p = c.prime(&s);
    bool ok = false;
    auto v = validate_curve_spec(s, p, ok);
    rep.record(v);
    if (!ok && !(s.even() && s.odd_root)) rep.log("validate: " + v["status"].get<std::string>());
    auto sieves = run_sieves(c, rep);
    auto ex = load_expansions(c.path(c.o.expansions, c.cfg->expansions));
    if (!ex) {
        rep.log("no expansion files: the quadratic Chabauty stages were skipped (partial run)");
        rep.record(json{{"stage", "report"}, {"partial", true}});
        return Partial;
    }
    auto q = compute_qc(c, rep, *ex);
    apply_sieves(q, sieves, p);
    rep.log("candidate table:");
    int rc = summarize(q, rep, "report");
    rep.record(json{{"stage", "report"}, {"partial", false}, {"seed", c.cfg->seed()}, {"exit", rc}});
    return rc;
}

int stage_cache_gc(Context& c) {
    Reporter rep("cache-gc", c.output(), c.o.quiet);
    long long max = c.o.max_bytes >= 0 ? c.o.max_bytes : c.cfg ? c.cfg->cache_max_bytes : 1LL << 30;
    auto dir = cache_dir();
    auto r = cache_gc(dir, max);
    for (auto& w : r.warnings) {
        rep.log("warning: " + w);
    }
    for (auto& k : r.kept) rep.log("kept " + k);
    for (auto& e : r.evicted) rep.log("evicted " + e);
    rep.record(json{{"stage", "cache-gc"}, {"dir", dir}, {"kept", r.kept}, {"evicted", r.evicted}, {"warnings", r.warnings}});
    return Complete;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qck: quadratic Chabauty for hyperelliptic curves"};
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* s) {
        s->add_option("--config", o.config, "pipeline config file");
        s->add_option("-p", o.p, "working prime");
        s->add_option("-N", o.N, "p-adic precision");
        s->add_option("--jobs", o.jobs, "worker threads (accepted for compatibility; stages run sequentially)");
        s->add_option("--output", o.output, "directory for artifacts and records");
        s->add_flag("--quiet", o.quiet, "no human-readable log on stdout");
    };
    struct Stage {
        const char* name;
        const char* help;
    };
    std::map<std::string, CLI::App*> sub;
    for (auto st : {Stage{"validate", "check the curve and config"}, Stage{"cohomology", "Frobenius, Hecke, cup product"},
                    Stage{"nsclass", "Neron-Severi class Z"}, Stage{"coleman", "Coleman integrals between two points"},
                    Stage{"graph-heights", "local heights away from p from reduction graphs"},
                    Stage{"pairing", "solve for the global height pairing"}, Stage{"qc-run", "roots of the QC functions"},
                    Stage{"sieve", "Mordell-Weil sieve"}, Stage{"report", "candidate table"},
                    Stage{"cache-gc", "prune the artifact cache"}}) {
        sub[st.name] = app.add_subcommand(st.name, st.help);
        common(sub[st.name]);
    }
    sub["graph-height"] = app.add_subcommand("graph-height", "alias of graph-heights");
    common(sub["graph-height"]);
    for (auto n : {"validate", "cohomology", "nsclass", "coleman", "qc-run", "report"})
        sub[n]->add_option("--curve", o.curve, "curve file");
    for (auto n : {"cohomology", "nsclass"}) {
        sub[n]->add_option("--basis", o.basis, "basis file");
        sub[n]->add_option("--sign", o.sign, "plus or minus");
    }
    sub["coleman"]->add_option("--from", o.from, "\"x,y\"");
    sub["coleman"]->add_option("--to", o.to, "\"x,y\"");
    for (auto n : {"graph-heights", "graph-height"}) {
        sub[n]->add_option("--graph", o.graph, "graph file");
        sub[n]->add_option("--ell", o.ell, "bad prime");
    }
    sub["pairing"]->add_option("--heights", o.heights, "height data file");
    sub["qc-run"]->add_option("--expansions", o.expansions, "directory of expansion files");
    sub["qc-run"]->add_option("--pairing", o.pairing, "pairing file or 'solve'");
    sub["qc-run"]->add_option("--upsilon", o.upsilon, "upsilon file");
    sub["qc-run"]->add_option("--heights", o.heights, "height data (with --pairing solve)");
    sub["sieve"]->add_option("--instance", o.instance, "sieve instance file");
    sub["cache-gc"]->add_option("--max-bytes", o.max_bytes, "size limit");

    CLI11_PARSE(app, argc, argv);

    Context c;
    c.o = o;
    try {
        if (!o.config.empty()) {
            fs::path cp(o.config);
            c.cfg = parse_config(read_file(cp), cp.parent_path());
        }
        std::string stage = app.get_subcommands()[0]->get_name();
        if (stage == "validate") return stage_validate(c);
        if (stage == "cohomology") return stage_cohomology(c, false);
        if (stage == "nsclass") return stage_cohomology(c, true);
        if (stage == "coleman") return stage_coleman(c);
        if (stage == "graph-heights" || stage == "graph-height") return stage_graph_heights(c);
        if (stage == "pairing") return stage_pairing(c);
        if (stage == "qc-run") return stage_qc_run(c);
        if (stage == "sieve") return stage_sieve(c);
        if (stage == "report") return stage_report(c);
        if (stage == "cache-gc") return stage_cache_gc(c);
    } catch (const PrecisionBudgetError& e) {
        std::cerr << "precision failure: " << e.what() << " (needs working precision " << e.required << "; raise N)\n";
        return Precision;
    } catch (const PrecisionError& e) {
        std::cerr << "precision failure: " << e.what() << " (raise N)\n";
        return Precision;
    } catch (const MissingPrerequisite& e) {
        std::cerr << "error: " << e.what() << "\n";
        return Failure;
    } catch (const InsufficientData& e) {
        std::cerr << "error: " << e.what() << "\n";
        return Failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return Failure;
    }
    return Failure;
}
