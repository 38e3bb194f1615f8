// Quadratic Chabauty: the global height pairing in the basis g_ij, calibration of unknown
// constants away from p, the functions rho = h - h_p per residue disk, p-adic roots of
// power series and their Mordell-Weil coordinates.
#pragma once

#include <gmpxx.h>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qck/padic.hpp"

namespace qck {

using PadicSeries = std::vector<PadicNumber>;
using LogVec = std::vector<PadicNumber>;

// h = sum_{i<=j} alpha_ij g_ij,  g_ij(D,E) = (D_i E_j + D_j E_i)/2 for i < j, g_ii = D_i E_i
struct HeightPairing {
    int g = 0;
    long p = 0;
    long N = 0;
    std::vector<std::vector<PadicNumber>> alpha;  // symmetric; alpha[i][j] for i <= j is the coefficient
    PadicNumber eval(const LogVec& D, const LogVec& E) const;
    // coefficients in the order (0,0), (0,1), ..., (0,g-1), (1,1), ...
    std::vector<PadicNumber> coefficients() const;
    static HeightPairing from_coefficients(int g, const std::vector<PadicNumber>& c);
};

struct InsufficientData : std::runtime_error {
    std::vector<PadicNumber> null_direction;
    long kernel_dim;
    InsufficientData(const std::string& m, std::vector<PadicNumber> v, long k)
        : std::runtime_error(m), null_direction(std::move(v)), kernel_dim(k) {}
};

struct HeightDatum {
    LogVec D, E;
    PadicNumber value;  // total height h(D, E) = h_p + sum_l h_l
};

// residuals[k] = h(D_k, E_k) - value_k for every row (zero on the rows used for the solve)
HeightPairing solve_height_pairing(const std::vector<HeightDatum>& data, std::vector<PadicNumber>* residuals = nullptr);

struct CalibrationDatum {
    std::vector<mpq_class> m;  // multiplicity of each unknown constant in the height away from p
    LogVec D, E;
    PadicNumber hp;            // h_p plus the known local heights
};
struct Calibration {
    HeightPairing pairing;
    std::vector<PadicNumber> constants;
};
// solve h(D,E) = hp + sum_c m_c const_c jointly for alpha and the constants
Calibration calibrate_away_constants(const std::vector<CalibrationDatum>& data);

// per residue disk: h_p(x(t)) and the g logarithm coordinates of [x(t) - b], x = teichmuller(xbar) + p t
struct QCLocalExpansion {
    long xbar = 0, ybar = 0;
    bool infinite = false;
    std::string provenance = "ingested";
    PadicSeries hp;
    std::vector<PadicSeries> logs;
};
struct ExpansionFile {
    long p = 0, N = 0;
    int g = 0;
    std::vector<QCLocalExpansion> disks;
};
// text format:
//   qck-expansions 1
//   p 61
//   N 10
//   g 2
//   disk <xbar> <ybar>        (or: disk inf)
//   provenance ingested
//   hp = [c0, c1, ...]        entries serialized p-adics or rationals
//   log1 = [...]
//   log2 = [...]
ExpansionFile parse_expansions(const std::string& text);
std::string write_expansions(const ExpansionFile& f);
std::vector<PadicNumber> parse_padic_list(const std::string& text, long p, long N);

struct RhoSeries {
    size_t disk = 0;
    PadicNumber upsilon;
    PadicSeries rho;
};
// rho(t) - upsilon for every disk and every element of upsilon
std::vector<RhoSeries> assemble_rho(const HeightPairing& h, const std::vector<QCLocalExpansion>& disks,
                                    const std::vector<PadicNumber>& upsilon);

struct SeriesRoot {
    PadicNumber t;  // known modulo p^{t.prec()}
    int multiplicity = 1;
};
// roots in Z_p of a power series with coefficients known mod p^N, by recursive subdivision
std::vector<SeriesRoot> find_zeros(const PadicSeries& f);
PadicSeries series_shift(const PadicSeries& f, const PadicNumber& r, long scale);  // f(r + p^scale s)
PadicNumber series_eval(const PadicSeries& f, const PadicNumber& t);
// number of zeros in the closed unit disk (largest index of minimal valuation)
long weierstrass_degree(const PadicSeries& f);

struct RootReport {
    size_t disk = 0;
    PadicNumber upsilon;
    SeriesRoot root;
    bool rational_point = false;
    std::vector<PadicNumber> coset;
};
// coordinates a with log([P - b]) = sum a_i log(P_i); throws if the generators are dependent
std::vector<PadicNumber> zeros_to_cosets(const LogVec& point_log, const std::vector<LogVec>& gen_logs);

}  // namespace qck
