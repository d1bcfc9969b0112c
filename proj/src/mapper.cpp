#include "wavestab/mapper.hpp"

#include "wavestab/errors.hpp"
#include "wavestab/ndde_sim.hpp"
#include "wavestab/qs.hpp"
#include "wavestab/smallgain.hpp"
#include "wavestab/transfer.hpp"

#include <json.hpp>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <tuple>
#include <variant>

namespace wavestab {

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void GridSpec::validate() const {
    auto check = [](const Axis& a, const char* name) {
        if (!(std::isfinite(a.lo) && std::isfinite(a.hi)) || !(a.lo < a.hi))
            throw DomainError(std::string("grid: ") + name + " needs lo < hi");
        if (a.count < 2) throw DomainError(std::string("grid: ") + name + " needs at least 2 points");
        if (!(a.lo > 0.0)) throw DomainError(std::string("grid: ") + name + " must be positive");
    };
    const bool c1tau = mode == CoordMode::C1Tau;
    check(x, c1tau ? "c1" : "c0");
    check(y, c1tau ? "tau" : "c");
    for (std::size_t i = 0; i < methods.qs_orders.size(); ++i) {
        if (methods.qs_orders[i] < 0) throw DomainError("grid: QS orders must be nonnegative");
        if (i > 0 && methods.qs_orders[i] <= methods.qs_orders[i - 1])
            throw DomainError("grid: QS orders must be ascending and unique");
    }
}

const MethodResult* MapCell::find(const std::string& method, int order) const {
    for (const auto& r : results)
        if (r.method == method && r.order == order) return &r;
    return nullptr;
}

bool MapCell::stable_by(const std::string& method, int order) const {
    const MethodResult* r = find(method, order);
    if (!r) return false;
    return r->verdict == (method == "sim" ? "decaying" : "stable");
}

bool MapTable::near_boundary(int ix, int iy) const {
    const MapCell& self = at(ix, iy);
    if (self.boundary) return true;
    const bool mine = self.stable_by("ctcr");
    for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
            const int jx = ix + dx, jy = iy + dy;
            if ((dx == 0 && dy == 0) || jx < 0 || jy < 0 || jx >= grid.x.count || jy >= grid.y.count) continue;
            const MapCell& other = at(jx, jy);
            if (other.boundary || other.stable_by("ctcr") != mine) return true;
        }
    }
    return false;
}

namespace {

/// Everything shared by the cells of one sweep.
struct SweepContext {
    const LtiPlant& plant;
    const GridSpec& grid;
    const SweepOptions& opts;
    RationalTf reduced;
    double hinf = std::numeric_limits<double>::quiet_NaN();
    std::string hinf_error;
};

using ColumnAccount = std::variant<StabilityAccount, std::string>;

ColumnAccount ctcr_account(const RationalTf& reduced, double c1, double tau_max) {
    try {
        return stable_intervals(reduced, c1, tau_max);
    } catch (const std::exception& e) {
        return std::string(e.what());
    }
}

MethodResult ctcr_result(const ColumnAccount& acc, double tau, double tau_lo, double tau_hi, bool& boundary) {
    if (const auto* err = std::get_if<std::string>(&acc)) return {"ctcr", -1, "error", *err};
    const auto& a = std::get<StabilityAccount>(acc);
    const int count = a.unstable_count_at(tau);
    std::string detail = "unstable_roots=" + std::to_string(count);
    for (double d : a.crossing_delays()) {
        if (d > tau_lo && d <= tau_hi) {
            boundary = true;
            detail += ";boundary";
            break;
        }
    }
    return {"ctcr", -1, count == 0 ? "stable" : "unstable", detail};
}

MapCell compute_cell(const SweepContext& ctx, const std::vector<ColumnAccount>& columns, int ix, int iy) {
    const GridSpec& g = ctx.grid;
    MapCell cell;
    cell.ix = ix;
    cell.iy = iy;
    double tau_lo, tau_hi;
    if (g.mode == CoordMode::C1Tau) {
        cell.c1 = g.x.at(ix);
        cell.tau = g.y.at(iy);
        tau_lo = cell.tau - 0.5 * g.y.step();
        tau_hi = cell.tau + 0.5 * g.y.step();
    } else {
        cell.c0 = g.x.at(ix);
        cell.c = g.y.at(iy);
        cell.c1 = cell.c0 * cell.c;
        cell.tau = 1.0 / cell.c;
        tau_lo = 1.0 / (cell.c + 0.5 * g.y.step());
        const double c_lo = cell.c - 0.5 * g.y.step();
        tau_hi = c_lo > 0.0 ? 1.0 / c_lo : 2.0 * cell.tau;
    }
    const MethodSet& m = g.methods;
    if (m.ctcr) {
        if (g.mode == CoordMode::C1Tau) {
            cell.results.push_back(ctcr_result(columns[static_cast<std::size_t>(ix)], cell.tau, tau_lo, tau_hi, cell.boundary));
        } else {
            const ColumnAccount acc = ctcr_account(ctx.reduced, cell.c1, tau_hi);
            cell.results.push_back(ctcr_result(acc, cell.tau, tau_lo, tau_hi, cell.boundary));
        }
    }
    const WaveChannel ch = g.mode == CoordMode::C1Tau ? channel_from_c1_tau(cell.c1, cell.tau)
                                                       : make_channel(cell.c, cell.c0);
    if (m.smallgain) {
        if (!ctx.hinf_error.empty() && std::isnan(ctx.hinf)) {
            cell.results.push_back({"smallgain", -1, "error", ctx.hinf_error});
        } else {
            const SmallGainReport rep = small_gain_verdict(ctx.hinf, ch);
            cell.results.push_back({"smallgain", -1, to_string(rep.verdict), "hinf=" + format_number(ctx.hinf)});
        }
    }
    for (int order : m.qs_orders) {
        MethodResult r{"qs", order, "unknown", ""};
        try {
            const QsReport rep = qs_feasible(order, ctx.plant, ch, *ctx.opts.backend);
            r.verdict = to_string(rep.verdict);
            r.detail = rep.status;
            if (rep.verdict == QsVerdict::Stable && cell.qs_min_order < 0) cell.qs_min_order = order;
        } catch (const GateRefused& e) {
            r.verdict = "refused";
            r.detail = e.what();
        } catch (const std::exception& e) {
            r.verdict = "error";
            r.detail = e.what();
        }
        cell.results.push_back(std::move(r));
    }
    if (m.sim) {
        MethodResult r{"sim", -1, "", ""};
        try {
            SimConfig cfg;
            cfg.steps_per_tau = ctx.opts.sim_steps_per_tau;
            cfg.t_end = std::max(50.0 * ch.tau, 150.0);
            cfg.x0 = Vector::Ones(ctx.plant.n());
            const Trajectory traj = simulate(CoupledSystem{ctx.plant, ch}, cfg);
            r.verdict = to_string(classify_trajectory(traj));
            r.detail = traj.diverged ? "diverged" : "slope=" + format_number(tail_log_slope(traj));
        } catch (const GateRefused& e) {
            r.verdict = "refused";
            r.detail = e.what();
        } catch (const std::exception& e) {
            r.verdict = "error";
            r.detail = e.what();
        }
        cell.results.push_back(std::move(r));
    }
    return cell;
}

SweepContext make_context(const LtiPlant& plant, const GridSpec& grid, const SweepOptions& opts) {
    grid.validate();
    if (!grid.methods.qs_orders.empty() && !opts.backend) throw DomainError("sweep: QS requested without an SDP backend");
    if (!opts.skip.empty() && opts.skip.size() != grid.cell_count())
        throw DomainError("sweep: skip mask does not match the grid");
    SweepContext ctx{plant, grid, opts, reduced_plant_tf(plant), std::numeric_limits<double>::quiet_NaN(), ""};
    if (grid.methods.smallgain) {
        try {
            ctx.hinf = hinf_norm(plant).norm;
        } catch (const NotHurwitz&) {
            // NaN tells small_gain_verdict that the gate failed.
        } catch (const std::exception& e) {
            ctx.hinf_error = e.what();
        }
    }
    return ctx;
}

bool skipped(const SweepOptions& opts, std::size_t idx) { return !opts.skip.empty() && opts.skip[idx]; }

MapCell placeholder(const GridSpec& g, int ix, int iy) {
    MapCell cell;
    cell.ix = ix;
    cell.iy = iy;
    if (g.mode == CoordMode::C1Tau) {
        cell.c1 = g.x.at(ix);
        cell.tau = g.y.at(iy);
    } else {
        cell.c0 = g.x.at(ix);
        cell.c = g.y.at(iy);
        cell.c1 = cell.c0 * cell.c;
        cell.tau = 1.0 / cell.c;
    }
    cell.computed = false;
    return cell;
}

double column_tau_max(const GridSpec& g) { return g.y.hi + 0.5 * g.y.step(); }

}  // namespace

MapTable sweep_serial(const LtiPlant& plant, const GridSpec& grid, const SweepOptions& opts) {
    const SweepContext ctx = make_context(plant, grid, opts);
    std::vector<ColumnAccount> columns;
    if (grid.methods.ctcr && grid.mode == CoordMode::C1Tau)
        for (int ix = 0; ix < grid.x.count; ++ix)
            columns.push_back(ctcr_account(ctx.reduced, grid.x.at(ix), column_tau_max(grid)));
    MapTable table{grid, {}};
    const std::size_t total = grid.cell_count();
    table.cells.reserve(total);
    for (int ix = 0; ix < grid.x.count; ++ix) {
        for (int iy = 0; iy < grid.y.count; ++iy) {
            const std::size_t idx = table.cells.size();
            table.cells.push_back(skipped(opts, idx) ? placeholder(grid, ix, iy) : compute_cell(ctx, columns, ix, iy));
            if (opts.progress) opts.progress(idx + 1, total);
        }
    }
    return table;
}

MapTable sweep(const LtiPlant& plant, const GridSpec& grid, const SweepOptions& opts) {
    const SweepContext ctx = make_context(plant, grid, opts);
    const int threads = opts.jobs > 0 ? opts.jobs : omp_get_max_threads();
    std::vector<ColumnAccount> columns;
    if (grid.methods.ctcr && grid.mode == CoordMode::C1Tau) {
        columns.assign(static_cast<std::size_t>(grid.x.count), ColumnAccount{std::string()});
#pragma omp parallel for schedule(dynamic) num_threads(threads)
        for (int ix = 0; ix < grid.x.count; ++ix)
            columns[static_cast<std::size_t>(ix)] = ctcr_account(ctx.reduced, grid.x.at(ix), column_tau_max(grid));
    }
    MapTable table{grid, std::vector<MapCell>(grid.cell_count())};
    const long total = static_cast<long>(grid.cell_count());
    std::size_t done = 0;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (long idx = 0; idx < total; ++idx) {
        const int ix = static_cast<int>(idx / grid.y.count), iy = static_cast<int>(idx % grid.y.count);
        const auto u = static_cast<std::size_t>(idx);
        table.cells[u] = skipped(opts, u) ? placeholder(grid, ix, iy) : compute_cell(ctx, columns, ix, iy);
        if (opts.progress) {
#pragma omp critical(wavestab_progress)
            opts.progress(++done, grid.cell_count());
        }
    }
    return table;
}

std::vector<CminSample> cmin_extraction(const MapTable& table, const std::string& method, int order) {
    if (table.grid.mode != CoordMode::C0C) throw DomainError("cmin: the table must be on a (c0, c) grid");
    std::vector<CminSample> out;
    const Axis& x = table.grid.x;
    const Axis& y = table.grid.y;
    for (int ix = 0; ix < x.count; ++ix) {
        double c_min = kAboveRange;
        for (int iy = y.count - 1; iy >= 0; --iy) {
            if (!table.at(ix, iy).stable_by(method, order)) break;
            c_min = y.at(iy);
        }
        out.push_back({x.at(ix), c_min});
    }
    return out;
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch == '\n' ? ' ' : ch;
    }
    return q + "\"";
}

const char* coords_name(CoordMode m) { return m == CoordMode::C1Tau ? "c1tau" : "c0c"; }

}  // namespace

void write_csv_rows(std::ostream& os, const MapCell& cell) {
    const std::string prefix = format_number(cell.c1) + "," + format_number(cell.tau) + ",";
    for (const auto& r : cell.results) {
        os << prefix << r.method << ',' << (r.order >= 0 ? std::to_string(r.order) : std::string()) << ','
           << r.verdict << ',' << csv_field(r.detail) << '\n';
    }
}

void write_csv(std::ostream& os, const MapTable& table) {
    os << "c1,tau,method,order,verdict,detail\n";
    for (const auto& cell : table.cells) write_csv_rows(os, cell);
}

void write_json(std::ostream& os, const MapTable& table) {
    using nlohmann::json;
    const GridSpec& g = table.grid;
    auto axis = [](const Axis& a) { return json{{"lo", a.lo}, {"hi", a.hi}, {"count", a.count}}; };
    json doc;
    doc["grid"] = {{"coords", coords_name(g.mode)}, {"x", axis(g.x)}, {"y", axis(g.y)}};
    json cells = json::array();
    json methods = json::object();
    for (std::size_t i = 0; i < table.cells.size(); ++i) {
        const MapCell& c = table.cells[i];
        json jc{{"index", i}, {"c1", c.c1}, {"tau", c.tau}, {"boundary", c.boundary}};
        if (g.mode == CoordMode::C0C) {
            jc["c0"] = c.c0;
            jc["c"] = c.c;
        }
        if (!g.methods.qs_orders.empty())
            jc["qs_min_order"] = c.qs_min_order >= 0 ? json(c.qs_min_order) : json(nullptr);
        cells.push_back(std::move(jc));
        for (const auto& r : c.results) {
            json entry{{"index", i}, {"c1", c.c1}, {"tau", c.tau}, {"verdict", r.verdict}, {"detail", r.detail}};
            if (r.method == "qs")
                methods["qs"][std::to_string(r.order)].push_back(std::move(entry));
            else
                methods[r.method].push_back(std::move(entry));
        }
    }
    doc["cells"] = std::move(cells);
    doc["methods"] = std::move(methods);
    os << doc.dump(2) << '\n';
}

void write_gnuplot_matrix(std::ostream& os, const MapTable& table, const std::string& method, int order) {
    const Axis& x = table.grid.x;
    const Axis& y = table.grid.y;
    // nonuniform matrix: first row holds the column coordinates (x), first column the row ones (y).
    os << y.count;
    for (int ix = 0; ix < x.count; ++ix) os << ' ' << format_number(x.at(ix));
    os << '\n';
    for (int iy = 0; iy < y.count; ++iy) {
        os << format_number(y.at(iy));
        for (int ix = 0; ix < x.count; ++ix) {
            const MapCell& c = table.at(ix, iy);
            double v;
            if (method == "qs" && order < 0) {
                v = c.qs_min_order;
            } else {
                const MethodResult* r = c.find(method, order);
                v = !r || r->verdict == "error" ? std::nan("") : (c.stable_by(method, order) ? 1.0 : 0.0);
            }
            os << ' ' << format_number(v);
        }
        os << '\n';
    }
}

ValidationReport validate_table(const LtiPlant& plant, MapTable table, const ValidationOptions& opts) {
    const GridSpec& g = table.grid;
    if (!g.methods.ctcr) throw DomainError("validate: the table must contain CTCR verdicts");
    ValidationReport rep;
    auto fail = [&](const MapCell& c, std::string what) {
        rep.violations.push_back({c.ix, c.iy, c.c1, c.tau, std::move(what)});
    };

    if (opts.inject_fault) {
        for (auto& c : table.cells) {
            if (c.computed && !c.boundary && c.find("ctcr") && c.find("ctcr")->verdict == "unstable") {
                if (MethodResult* r = const_cast<MethodResult*>(c.find("smallgain")))
                    r->verdict = "stable";
                else
                    c.results.push_back({"smallgain", -1, "stable", "injected fault"});
                rep.warnings.push_back("fault injected at cell (" + std::to_string(c.ix) + ", " + std::to_string(c.iy) + ")");
                break;
            }
        }
    }

    std::vector<std::size_t> stable_cells, unstable_cells;
    for (std::size_t i = 0; i < table.cells.size(); ++i) {
        const MapCell& c = table.cells[i];
        if (!c.computed) continue;
        const MethodResult* ct = c.find("ctcr");
        if (!ct || ct->verdict == "error") {
            rep.warnings.push_back("cell (" + std::to_string(c.ix) + ", " + std::to_string(c.iy) + ") has no CTCR verdict");
            continue;
        }
        ++rep.cells_checked;
        const bool ctcr_stable = ct->verdict == "stable";
        if (!c.boundary) {
            if (c.stable_by("smallgain") && !ctcr_stable) fail(c, "smallgain stable but CTCR unstable");
            const auto& orders = g.methods.qs_orders;
            for (std::size_t k = 0; k < orders.size(); ++k) {
                if (!c.stable_by("qs", orders[k])) continue;
                if (!ctcr_stable) fail(c, "qs order " + std::to_string(orders[k]) + " stable but CTCR unstable");
                for (std::size_t l = k + 1; l < orders.size(); ++l)
                    if (!c.stable_by("qs", orders[l]))
                        fail(c, "qs order " + std::to_string(orders[k]) + " stable but order " +
                                    std::to_string(orders[l]) + " is not");
            }
        }
        if (!table.near_boundary(c.ix, c.iy))
            (ctcr_stable ? stable_cells : unstable_cells).push_back(i);
        else
            ++rep.sim_skipped_boundary;
    }

    // Stratified sample: half from each CTCR class, evenly spread over the index range.
    std::vector<std::size_t> sample;
    if (opts.samples == 0) {
        rep.warnings.push_back("zero simulation samples requested; the agreement check is vacuous");
    } else {
        std::size_t want_stable = std::min(stable_cells.size(), (opts.samples + 1) / 2);
        const std::size_t want_unstable = std::min(unstable_cells.size(), opts.samples - want_stable);
        want_stable = std::min(stable_cells.size(), opts.samples - want_unstable);
        auto pick = [&](const std::vector<std::size_t>& pool, std::size_t count) {
            for (std::size_t k = 0; k < count; ++k)
                sample.push_back(pool[(2 * k + 1) * pool.size() / (2 * count)]);
        };
        pick(stable_cells, want_stable);
        pick(unstable_cells, want_unstable);
        if (sample.size() < opts.samples)
            rep.warnings.push_back("only " + std::to_string(sample.size()) + " cells away from stability boundaries");
    }
    std::mt19937_64 rng(opts.seed);
    std::shuffle(sample.begin(), sample.end(), rng);

    std::vector<int> outcome(sample.size(), 0);  // 1 agree, 0 inconclusive, -1 contradiction
    std::vector<std::string> note(sample.size());
#pragma omp parallel for schedule(dynamic)
    for (long k = 0; k < static_cast<long>(sample.size()); ++k) {
        const auto u = static_cast<std::size_t>(k);
        const MapCell& c = table.cells[sample[u]];
        const WaveChannel ch = g.mode == CoordMode::C1Tau ? channel_from_c1_tau(c.c1, c.tau) : make_channel(c.c, c.c0);
        SimConfig cfg;
        cfg.steps_per_tau = opts.sim_steps_per_tau;
        cfg.t_end = std::max(50.0 * ch.tau, 150.0);
        cfg.x0 = Vector::Ones(plant.n());
        try {
            const Trajectory traj = simulate(CoupledSystem{plant, ch}, cfg);
            const TrajectoryClass cls = classify_trajectory(traj);
            if (cls != TrajectoryClass::Inconclusive) {
                const bool decaying = cls == TrajectoryClass::Decaying;
                outcome[u] = decaying == c.stable_by("ctcr") ? 1 : -1;
                note[u] = "simulation " + to_string(cls) + " but CTCR " + c.find("ctcr")->verdict;
            }
        } catch (const std::exception& e) {
            note[u] = e.what();
        }
    }
    rep.sim_samples = sample.size();
    for (std::size_t k = 0; k < sample.size(); ++k) {
        if (outcome[k] == 1) ++rep.sim_agree;
        else if (outcome[k] == 0) ++rep.sim_inconclusive;
        else fail(table.cells[sample[k]], note[k]);
    }
    std::sort(rep.violations.begin(), rep.violations.end(), [](const Violation& a, const Violation& b) {
        return std::tie(a.ix, a.iy, a.what) < std::tie(b.ix, b.iy, b.what);
    });
    return rep;
}

}  // namespace wavestab
