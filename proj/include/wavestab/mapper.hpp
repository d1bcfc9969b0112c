#pragma once

// Parameter-plane sweeps. Grids are either (c1, tau) or (c0, c); every cell
// carries its (c1, tau) image since that is what the analyzers consume.

#include "wavestab/ctcr.hpp"
#include "wavestab/model.hpp"
#include "wavestab/sdp.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace wavestab {

struct Axis {
    double lo = 0.0;
    double hi = 0.0;
    int count = 0;

    double at(int i) const { return lo + (hi - lo) * static_cast<double>(i) / (count - 1); }
    double step() const { return (hi - lo) / (count - 1); }
};

enum class CoordMode { C1Tau, C0C };

struct MethodSet {
    bool ctcr = false;
    bool smallgain = false;
    bool sim = false;
    std::vector<int> qs_orders;  ///< ascending, unique

    bool empty() const { return !ctcr && !smallgain && !sim && qs_orders.empty(); }
};

struct GridSpec {
    CoordMode mode = CoordMode::C1Tau;
    Axis x;  ///< c1 or c0
    Axis y;  ///< tau or c
    MethodSet methods;

    /// Throws DomainError unless lo < hi, count >= 2 and lo > 0 on both axes.
    void validate() const;
    std::size_t cell_count() const { return static_cast<std::size_t>(x.count) * static_cast<std::size_t>(y.count); }
};

struct MethodResult {
    std::string method;  ///< ctcr, smallgain, qs, sim
    int order = -1;      ///< QS order, -1 otherwise
    std::string verdict;
    std::string detail;
};

struct MapCell {
    int ix = 0;
    int iy = 0;
    double c1 = 0.0;
    double tau = 0.0;
    double c0 = 0.0;  ///< set in (c0, c) mode
    double c = 0.0;
    std::vector<MethodResult> results;
    /// Smallest QS order proving stability, -1 when none did.
    int qs_min_order = -1;
    /// A CTCR crossing delay falls inside the cell's tau extent.
    bool boundary = false;
    bool computed = true;

    const MethodResult* find(const std::string& method, int order = -1) const;
    /// True when `method` (and order) returned its positive verdict.
    bool stable_by(const std::string& method, int order = -1) const;
};

struct MapTable {
    GridSpec grid;
    std::vector<MapCell> cells;  ///< row-major: index = ix * y.count + iy

    const MapCell& at(int ix, int iy) const { return cells[static_cast<std::size_t>(ix) * grid.y.count + iy]; }
    /// The cell or one of its 8 neighbours is a CTCR boundary cell or disagrees with it on CTCR.
    bool near_boundary(int ix, int iy) const;
};

struct SweepOptions {
    const SdpBackend* backend = nullptr;  ///< required when QS orders are requested
    int sim_steps_per_tau = 20;
    /// Cells flagged true are skipped (left with computed = false).
    std::vector<bool> skip;
    std::function<void(std::size_t done, std::size_t total)> progress;
    int jobs = 0;  ///< 0 = OpenMP default
};

/// Reference implementation: one cell after the other.
MapTable sweep_serial(const LtiPlant& plant, const GridSpec& grid, const SweepOptions& opts = {});
/// OpenMP-parallel sweep; output identical to sweep_serial bit for bit.
MapTable sweep(const LtiPlant& plant, const GridSpec& grid, const SweepOptions& opts = {});

/// Sentinel for c_min when no cell of a column qualifies.
inline constexpr double kAboveRange = std::numeric_limits<double>::infinity();

struct CminSample {
    double c0;
    double c_min;  ///< kAboveRange when the top cell of the column is not stable
};

/// Per c0 column, smallest grid c such that every sampled c' >= c is stable by `method`.
/// Requires a (c0, c) table.
std::vector<CminSample> cmin_extraction(const MapTable& table, const std::string& method, int order = -1);

void write_csv(std::ostream& os, const MapTable& table);
void write_csv_rows(std::ostream& os, const MapCell& cell);
void write_json(std::ostream& os, const MapTable& table);
/// Gnuplot "nonuniform matrix" of one method: 1 stable, 0 not, NaN missing.
/// For method "qs" the value is the smallest proving order, -1 when none.
void write_gnuplot_matrix(std::ostream& os, const MapTable& table, const std::string& method, int order = -1);

/// Full-precision decimal rendering used in every data file.
std::string format_number(double v);

struct Violation {
    int ix;
    int iy;
    double c1;
    double tau;
    std::string what;
};

struct ValidationReport {
    std::size_t cells_checked = 0;
    std::size_t sim_samples = 0;
    std::size_t sim_agree = 0;
    std::size_t sim_inconclusive = 0;
    std::size_t sim_skipped_boundary = 0;
    std::vector<Violation> violations;
    std::vector<std::string> warnings;

    bool passed() const { return violations.empty(); }
};

struct ValidationOptions {
    std::size_t samples = 50;
    std::uint64_t seed = 0;
    int sim_steps_per_tau = 20;
    /// Test mode: corrupt one verdict before checking, so the harness must fail.
    bool inject_fault = false;
};

/// Containment chain (smallgain, qs(N) within qs(N+1) within ctcr) on every non-boundary
/// cell, and simulator agreement on a sample stratified over CTCR-stable and -unstable cells.
ValidationReport validate_table(const LtiPlant& plant, MapTable table, const ValidationOptions& opts);

}  // namespace wavestab
