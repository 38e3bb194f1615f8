// Files, configuration and stage drivers shared by the qck command line and the acceptance run.
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qck/cohomology.hpp"
#include "qck/coleman.hpp"
#include "qck/graphheights.hpp"
#include "qck/mwsieve.hpp"
#include "qck/qc.hpp"

namespace qck::pipeline {

using json = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// a stage needs the artifact of an earlier one
struct MissingPrerequisite : std::runtime_error {
    std::string stage;
    MissingPrerequisite(const std::string& what, const std::string& s)
        : std::runtime_error(what + "; run `qck " + s + "` first"), stage(s) {}
};

// Curve file:
//   label = X0+(107)
//   f = [1, 2, 5, 2, -2, -4, -3]
//   p = 61
//   precision = 6
//   odd_root = 30                 (even models: simple root of f mod p sent to infinity)
//   generator a = [0, 1, 1], b = [1]
//   point = 0 1                   (known rational points, repeatable)
//   base = 0 1
struct CurveSpec {
    std::string label;
    RatPoly f;
    long p = 0;
    long precision = 0;
    std::optional<long> odd_root;
    std::vector<RatMumford> generators;
    std::vector<std::pair<mpq_class, mpq_class>> points;
    std::optional<std::pair<mpq_class, mpq_class>> base;
    bool even() const { return (f.size() - 1) % 2 == 0; }
    int genus() const { return (int)(f.size() - 2) / 2; }
};
CurveSpec parse_curve_file(const std::string& text);
// one form per line, [c0, c1, ...] = h for h(x) dx/y
std::vector<RatPoly> parse_basis_file(const std::string& text);
RatPoly parse_rat_list(const std::string& text);
std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& s);

// Config file (key = value, paths relative to the config file):
//   curve = x0_107.curve
//   p = 61
//   N = 6
//   basis = e107.basis
//   graph 7 = g7.graph             (one per bad prime)
//   expansions = expansions        (directory of *.exp files)
//   heights = heights.txt          (input of the pairing stage)
//   pairing = solve | pairing.txt
//   upsilon = upsilon.txt          (else combined from the graphs)
//   gen_logs = logs.txt            (else computed from the generators on odd models)
//   sieve = w.sieve @ 30 0         (repeatable; "@ xbar ybar" ties a disk instance to a residue disk)
//   coset_sieve = cosets.sieve
//   output = out
//   sign = plus | minus
//   pin = true
//   cache_max_bytes = 100000000
struct SieveRef {
    std::string file;
    std::string disk;  // "xbar ybar", "inf" or empty
};
struct PipelineConfig {
    std::filesystem::path dir = ".";
    std::string text;
    std::string curve, basis, expansions, heights, pairing = "solve", upsilon, gen_logs, coset_sieve;
    std::string output = "qck-out";
    long p = 0, N = 0;
    ZSign sign = ZSign::Plus;
    std::map<long, std::string> graphs;
    std::vector<SieveRef> sieves;
    bool pin = false;
    long long cache_max_bytes = 1LL << 30;
    std::filesystem::path resolve(const std::string& rel) const;
    uint64_t seed() const;  // FNV hash of the config text
};
PipelineConfig parse_config(const std::string& text, const std::filesystem::path& dir);
// checks that referenced files exist and that p agrees across curve, expansions and graphs
std::vector<std::string> check_config(const PipelineConfig& c);

std::string fnv_hex(const std::string& s);

// ---- cache ----
// $QCK_CACHE, else .qck-cache in the working directory
std::string cache_dir();
// every cache file ends with "checksum <fnv of the preceding bytes>"
void cache_store_text(const std::string& dir, const std::string& name, const std::string& body);
bool cache_load_text(const std::string& dir, const std::string& name, std::string& body);
struct CacheGcReport {
    std::vector<std::string> kept, evicted, warnings;
};
// evicts corrupted entries, then the oldest unpinned ones until the cache fits in max_bytes
CacheGcReport cache_gc(const std::string& dir, long long max_bytes);
void cache_pin(const std::string& dir, const std::string& name);

// ---- stages ----
struct OddSide {
    OddCurveQp C;
    std::optional<OddModelQp> model;  // set for even input
};
OddSide odd_side(const CurveSpec& s, long p, long N);

json validate_curve_spec(const CurveSpec& s, long p, bool& ok);

struct CohomologyResult {
    PadicMatrix F, A;  // in the chosen basis
    RatMatrix C, Z;           // Z empty if T_p yields no Neron-Severi class (see z_error)
    std::string z_error;
    std::vector<mpz_class> charpoly;
    std::string cache_key;
    bool cached = false;
};
// basis: forms h dx/y; null means x^i dx/(2y) (odd models only)
CohomologyResult run_cohomology(const CurveSpec& s, long p, long N, const std::vector<RatPoly>* basis, ZSign sign,
                                const std::string& cache);
json cohomology_record(const CohomologyResult& r);

// "x,y" with rational entries; even-model points are moved to the odd model
PointQp parse_point(const CurveSpec& s, const OddSide& o, const std::string& text, long N);
std::vector<PadicNumber> coleman_integrals(const CurveSpec& s, long p, long N, const std::string& from,
                                           const std::string& to);

struct GraphHeights {
    long ell = 0;
    LocalHeightTable table;
};
GraphHeights run_graph_heights(const std::string& graph_text, long ell, long p, long N);
json graph_record(const GraphHeights& g);
// {sum of one value from each table}
std::vector<PadicNumber> combine_upsilon(const std::vector<GraphHeights>& tables, long p, long N);

// height data:
//   qck-heights 1
//   p 61
//   N 6
//   row D = [...] E = [...] h = <value> m = [...]     (m optional: multiplicities of unknown constants)
std::vector<CalibrationDatum> parse_height_data(const std::string& text, long& p, long& N);
Calibration run_pairing(const std::vector<CalibrationDatum>& rows);
// pairing file:  qck-pairing 1 / p / N / g / alpha = [...] / constants = [...]
std::string write_pairing(const Calibration& c);
HeightPairing parse_pairing(const std::string& text);

struct Candidate {
    RootReport root;
    bool infinite_disk = false;
    long xbar = 0, ybar = 0;
    std::string status;  // RATIONAL-MATCHED, ELIMINATED, UNDECIDED
    std::string note;
};
struct QcRun {
    std::vector<Candidate> candidates;
    std::vector<std::string> unmatched_points;  // known points with no root
};
std::vector<LogVector> parse_gen_logs(const std::string& text, long p, long N);
QcRun run_qc(const CurveSpec& s, const ExpansionFile& ex, const HeightPairing& h, const std::vector<PadicNumber>& upsilon,
             const std::vector<LogVector>* gen_logs);
json candidate_record(const Candidate& c);

struct SieveRun {
    std::string file, disk;
    bool has_disk = false;
    long multiplier = 1;
    DiskVerdict verdict;
    std::vector<Tuple> survivors;  // coset instances
    long M = 1;
};
SieveRun run_sieve(const std::string& text, size_t max_witnesses = 20);
std::string disk_key(bool infinite, long xbar, long ybar);
json sieve_record(const SieveRun& r);

// marks candidates eliminated by the sieve results
void apply_sieves(QcRun& q, const std::vector<SieveRun>& sieves, long p);

}  // namespace qck::pipeline
