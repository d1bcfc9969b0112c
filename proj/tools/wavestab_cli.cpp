// wavestab: stability analysis of an LTI plant coupled with a damped string.

#include "wavestab/ctcr.hpp"
#include "wavestab/errors.hpp"
#include "wavestab/io.hpp"
#include "wavestab/mapper.hpp"
#include "wavestab/ndde_sim.hpp"
#include "wavestab/qs.hpp"
#include "wavestab/sdp.hpp"
#include "wavestab/smallgain.hpp"
#include "wavestab/transfer.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

using namespace wavestab;
using nlohmann::json;

namespace {

constexpr int kExitViolation = 1;
constexpr int kExitInput = 2;
constexpr int kExitSolver = 3;

struct Options {
    std::string system;
    double c = NAN, c0 = NAN, c1 = NAN, tau = NAN;
    std::string methods;
    std::string orders = "0";
    std::string grid;
    std::string coords = "c1tau";
    std::string out;
    std::string format;
    int jobs = 0;
    double tau_max = NAN;
    bool resume = false;
    std::string gnuplot;
    std::string gnuplot_method = "ctcr";
    std::string cmin;
    std::size_t samples = 50;
    std::uint64_t seed = 0;
    bool inject_fault = false;
    double t_end = NAN;
    int steps_per_tau = 40;
    std::string x0;
    int order = 0;
};

/// Human-readable numbers: 6 significant digits.
std::string h6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void require_system(const Options& o) {
    if (o.system.empty()) throw InputError("--system is required");
}

WaveChannel channel_from(const Options& o) {
    const bool phys = !std::isnan(o.c) || !std::isnan(o.c0);
    const bool delay = !std::isnan(o.c1) || !std::isnan(o.tau);
    if (phys && delay) throw InputError("give either --c/--c0 or --c1/--tau, not both");
    try {
        if (phys) {
            if (std::isnan(o.c) || std::isnan(o.c0)) throw InputError("--c and --c0 must be given together");
            return make_channel(o.c, o.c0);
        }
        if (std::isnan(o.c1) || std::isnan(o.tau)) throw InputError("a channel is required: --c and --c0, or --c1 and --tau");
        if (!(o.c1 >= 0.0) || !(o.tau > 0.0)) throw InputError("--c1 must be nonnegative and --tau positive");
        return channel_from_c1_tau(o.c1, o.tau);
    } catch (const DomainError& e) {
        throw InputError(e.what());
    }
}

json channel_json(const WaveChannel& ch) {
    return {{"c", ch.c}, {"c0", ch.c0}, {"tau", ch.tau}, {"alpha", ch.alpha}, {"c1", ch.c1}, {"gamma", ch.gamma}};
}

void emit(const Options& o, const json& doc, const std::string& human) {
    if (!o.out.empty()) {
        std::ofstream f(o.out);
        if (!f) throw InputError("cannot write " + o.out);
        f << doc.dump(2) << '\n';
    }
    if (o.format == "json")
        std::cout << doc.dump(2) << '\n';
    else
        std::cout << human;
}

int cmd_hinf(const Options& o) {
    require_system(o);
    const NamedSystem sys = load_system(o.system);
    const HinfResult h = hinf_norm(sys.plant);
    json doc = to_json(h);
    doc["system"] = sys.name;
    emit(o, doc, "||H||_inf = " + h6(h.norm) + " at omega = " + h6(h.peak_frequency) + "\n");
    return 0;
}

int cmd_ctcr(const Options& o) {
    require_system(o);
    const NamedSystem sys = load_system(o.system);
    double c1 = o.c1;
    if (!std::isnan(o.c) || !std::isnan(o.c0)) c1 = channel_from(o).c1;
    if (std::isnan(c1) || c1 < 0.0) throw InputError("--c1 (or --c with --c0) is required");
    const double tau_max = std::isnan(o.tau_max) ? 5.0 : o.tau_max;
    if (!(tau_max > 0.0)) throw InputError("--tau-max must be positive");
    const StabilityAccount acc = stable_intervals(sys.plant, c1, tau_max);
    json doc = to_json(acc);
    doc["system"] = sys.name;
    std::ostringstream hs;
    hs << "c1 = " << h6(c1) << ", unstable roots at tau = 0+: " << acc.nu_at_zero << "\n";
    for (const auto& e : acc.events)
        hs << "  crossing omega = " << h6(e.omega) << " (" << to_string(e.tendency) << "), " << e.delays.size()
           << " delays in range\n";
    for (const auto& iv : acc.intervals)
        hs << "  (" << h6(iv.lo) << ", " << h6(iv.hi) << "]  unstable roots: " << iv.unstable_count
           << (iv.unstable_count == 0 ? "  stable" : "") << "\n";
    emit(o, doc, hs.str());
    return 0;
}

SimConfig sim_config(const Options& o, const LtiPlant& plant, const WaveChannel& ch) {
    SimConfig cfg;
    cfg.steps_per_tau = o.steps_per_tau;
    cfg.t_end = std::isnan(o.t_end) ? std::max(50.0 * ch.tau, 150.0) : o.t_end;
    if (o.x0.empty()) {
        cfg.x0 = Vector::Ones(plant.n());
    } else {
        const json v = json::parse(o.x0, nullptr, false);
        if (!v.is_array() || static_cast<int>(v.size()) != plant.n())
            throw InputError("--x0 must be a JSON array with " + std::to_string(plant.n()) + " numbers");
        cfg.x0.resize(plant.n());
        for (int i = 0; i < plant.n(); ++i) {
            if (!v[static_cast<std::size_t>(i)].is_number()) throw InputError("--x0 entries must be numbers");
            cfg.x0(i) = v[static_cast<std::size_t>(i)].get<double>();
        }
    }
    return cfg;
}

int cmd_simulate(const Options& o) {
    require_system(o);
    const NamedSystem sys = load_system(o.system);
    const WaveChannel ch = channel_from(o);
    const SimConfig cfg = sim_config(o, sys.plant, ch);
    const Trajectory traj = simulate(CoupledSystem{sys.plant, ch}, cfg);
    const TrajectoryClass cls = classify_trajectory(traj);
    if (!o.out.empty()) {
        std::ofstream f(o.out);
        if (!f) throw InputError("cannot write " + o.out);
        write_trajectory_csv(f, traj);
    }
    const json doc{{"system", sys.name},          {"channel", channel_json(ch)},
                   {"steps", traj.times.size()}, {"diverged", traj.diverged},
                   {"tail_log_slope", tail_log_slope(traj)}, {"classification", to_string(cls)}};
    if (o.format == "json")
        std::cout << doc.dump(2) << '\n';
    else
        std::cout << "trajectory " << to_string(cls) << " (tail log-slope " << h6(tail_log_slope(traj)) << ", "
                  << traj.times.size() << " samples" << (traj.diverged ? ", diverged" : "") << ")\n";
    return 0;
}

int cmd_analyze(const Options& o) {
    require_system(o);
    const NamedSystem sys = load_system(o.system);
    const WaveChannel ch = channel_from(o);
    const MethodSet m = parse_methods(o.methods.empty() ? "ctcr,smallgain,qs,sim" : o.methods, o.orders);
    const CoupledSystem cs{sys.plant, ch};
    const SystemClass cls = classify(ch);
    json doc{{"system", sys.name}, {"channel", channel_json(ch)}};
    doc["classification"] = {{"kind", to_string(cls.kind)}, {"small_tau_stabilizable", cls.small_tau_stabilizable}};
    const bool unique_zero = std::holds_alternative<UniqueZero>(equilibria(sys.plant));
    doc["equilibrium"] = unique_zero ? "unique" : "subspace";
    std::ostringstream hs;
    hs << sys.name << ": c = " << h6(ch.c) << ", c0 = " << h6(ch.c0) << ", tau = " << h6(ch.tau)
       << ", alpha = " << h6(ch.alpha) << " (" << to_string(cls.kind)
       << (cls.small_tau_stabilizable ? "" : ", not small-delay stabilizable") << ")\n";

    if (m.ctcr) {
        json j;
        try {
            const double tau_max = std::max(std::isnan(o.tau_max) ? ch.tau : o.tau_max, ch.tau);
            const StabilityAccount acc = stable_intervals(sys.plant, ch.c1, tau_max);
            const int count = acc.unstable_count_at(ch.tau);
            j = to_json(acc);
            j["verdict"] = count == 0 ? "stable" : "unstable";
            j["unstable_roots"] = count;
            hs << "  ctcr:      " << (count == 0 ? "stable" : "unstable") << " (" << count << " unstable roots, "
               << acc.events.size() << " crossing frequencies)\n";
        } catch (const Error& e) {
            j = {{"verdict", "error"}, {"message", e.what()}};
            hs << "  ctcr:      error: " << e.what() << "\n";
        }
        doc["methods"]["ctcr"] = j;
    }
    if (m.smallgain) {
        const SmallGainReport r = small_gain_verdict(cs);
        doc["methods"]["smallgain"] = to_json(r);
        hs << "  smallgain: " << to_string(r.verdict) << " (||H||_inf = " << h6(r.hinf) << "; " << r.reason << ")\n";
    }
    if (!m.qs_orders.empty()) {
        const auto backend = backend_from_env();
        json arr = json::array();
        for (int order : m.qs_orders) {
            try {
                const QsReport r = qs_feasible(order, sys.plant, ch, *backend);
                arr.push_back(to_json(r));
                hs << "  qs(N=" << order << "):   " << to_string(r.verdict) << " (" << r.status << ")\n";
                for (const auto& w : r.warnings) hs << "    warning: " << w << "\n";
            } catch (const GateRefused& e) {
                arr.push_back({{"order", order}, {"verdict", "refused"}, {"status", e.what()}});
                hs << "  qs(N=" << order << "):   refused: " << e.what() << "\n";
            }
        }
        doc["methods"]["qs"] = arr;
    }
    if (m.sim) {
        try {
            const Trajectory traj = simulate(cs, sim_config(o, sys.plant, ch));
            const TrajectoryClass c = classify_trajectory(traj);
            doc["methods"]["sim"] = {{"classification", to_string(c)},
                                     {"tail_log_slope", tail_log_slope(traj)},
                                     {"diverged", traj.diverged}};
            hs << "  sim:       " << to_string(c) << " (tail log-slope " << h6(tail_log_slope(traj)) << ")\n";
        } catch (const GateRefused& e) {
            doc["methods"]["sim"] = {{"classification", "refused"}, {"message", e.what()}};
            hs << "  sim:       refused: " << e.what() << "\n";
        }
    }
    emit(o, doc, hs.str());
    return 0;
}

GridSpec grid_from(const Options& o, const char* default_methods) {
    GridSpec g;
    if (o.coords == "c1tau") g.mode = CoordMode::C1Tau;
    else if (o.coords == "c0c") g.mode = CoordMode::C0C;
    else throw InputError("--coords must be c1tau or c0c");
    if (o.grid.empty()) throw InputError("--grid is required");
    parse_grid(o.grid, g);
    g.methods = parse_methods(o.methods.empty() ? default_methods : o.methods, o.orders);
    return g;
}

std::string cell_key(double c1, double tau) { return format_number(c1) + "," + format_number(tau); }

/// Rows of a previous CSV run grouped by cell; used by --resume.
std::map<std::string, std::vector<std::string>> read_previous(const std::string& path) {
    std::map<std::string, std::vector<std::string>> rows;
    std::ifstream in(path);
    if (!in) return rows;
    std::string line;
    std::getline(in, line);
    if (line != "c1,tau,method,order,verdict,detail") throw InputError("--resume: " + path + " is not a map CSV");
    while (std::getline(in, line)) {
        const std::size_t a = line.find(','), b = a == std::string::npos ? a : line.find(',', a + 1);
        if (b == std::string::npos) throw InputError("--resume: malformed row in " + path);
        rows[line.substr(0, b)].push_back(line);
    }
    return rows;
}

std::size_t expected_rows(const MethodSet& m) {
    return (m.ctcr ? 1 : 0) + (m.smallgain ? 1 : 0) + (m.sim ? 1 : 0) + m.qs_orders.size();
}

int cmd_map(const Options& o) {
    require_system(o);
    const NamedSystem sys = load_system(o.system);
    const GridSpec g = grid_from(o, "ctcr");
    const std::string format = o.format.empty() ? "csv" : o.format;
    if (format != "csv" && format != "json") throw InputError("--format must be csv or json");
    if (o.resume && (format != "csv" || o.out.empty())) throw InputError("--resume needs --out with --format csv");

    std::unique_ptr<SdpBackend> backend;
    if (!g.methods.qs_orders.empty()) backend = backend_from_env();
    SweepOptions opts;
    opts.backend = backend.get();
    opts.jobs = o.jobs;
    std::map<std::string, std::vector<std::string>> previous;
    if (o.resume) {
        previous = read_previous(o.out);
        opts.skip.assign(g.cell_count(), false);
        const std::size_t want = expected_rows(g.methods);
        for (int ix = 0; ix < g.x.count; ++ix) {
            for (int iy = 0; iy < g.y.count; ++iy) {
                const double x = g.x.at(ix), y = g.y.at(iy);
                const double c1 = g.mode == CoordMode::C1Tau ? x : x * y;
                const double tau = g.mode == CoordMode::C1Tau ? y : 1.0 / y;
                const auto it = previous.find(cell_key(c1, tau));
                opts.skip[static_cast<std::size_t>(ix) * g.y.count + iy] = it != previous.end() && it->second.size() == want;
            }
        }
    }
    std::size_t last_decile = 0;
    opts.progress = [&](std::size_t done, std::size_t total) {
        const std::size_t decile = 10 * done / total;
        if (decile != last_decile) {
            last_decile = decile;
            std::cerr << "map: " << done << "/" << total << " cells\n";
        }
    };
    const MapTable table = sweep(sys.plant, g, opts);

    std::ofstream file;
    if (!o.out.empty()) {
        file.open(o.out);
        if (!file) throw InputError("cannot write " + o.out);
    }
    std::ostream& os = o.out.empty() ? std::cout : file;
    std::size_t reused = 0;
    if (format == "json") {
        write_json(os, table);
    } else {
        os << "c1,tau,method,order,verdict,detail\n";
        for (const auto& cell : table.cells) {
            if (cell.computed) {
                write_csv_rows(os, cell);
            } else {
                ++reused;
                for (const auto& line : previous.at(cell_key(cell.c1, cell.tau))) os << line << '\n';
            }
        }
    }
    if (o.resume) std::cerr << "map: reused " << reused << " cells from " << o.out << "\n";
    if (!o.gnuplot.empty()) {
        std::ofstream gp(o.gnuplot);
        if (!gp) throw InputError("cannot write " + o.gnuplot);
        const std::size_t colon = o.gnuplot_method.find(':');
        const std::string method = o.gnuplot_method.substr(0, colon);
        const int order = colon == std::string::npos ? -1 : std::stoi(o.gnuplot_method.substr(colon + 1));
        write_gnuplot_matrix(gp, table, method, order);
    }
    if (!o.cmin.empty()) {
        if (g.mode != CoordMode::C0C) throw InputError("--cmin needs --coords c0c");
        std::ofstream cm(o.cmin);
        if (!cm) throw InputError("cannot write " + o.cmin);
        cm << "method,order,c0,c_min\n";
        auto curve = [&](const std::string& method, int order) {
            for (const auto& p : cmin_extraction(table, method, order))
                cm << method << ',' << (order >= 0 ? std::to_string(order) : "") << ',' << format_number(p.c0) << ','
                   << (p.c_min == kAboveRange ? std::string("above-range") : format_number(p.c_min)) << '\n';
        };
        if (g.methods.ctcr) curve("ctcr", -1);
        if (g.methods.smallgain) curve("smallgain", -1);
        for (int order : g.methods.qs_orders) curve("qs", order);
        if (g.methods.sim) curve("sim", -1);
    }
    return 0;
}

int cmd_validate(const Options& o) {
    require_system(o);
    const NamedSystem sys = load_system(o.system);
    const GridSpec g = grid_from(o, "ctcr,smallgain,qs");
    if (!g.methods.ctcr) throw InputError("validate needs ctcr among --methods");
    std::unique_ptr<SdpBackend> backend;
    if (!g.methods.qs_orders.empty()) backend = backend_from_env();
    SweepOptions sopts;
    sopts.backend = backend.get();
    sopts.jobs = o.jobs;
    const MapTable table = sweep(sys.plant, g, sopts);
    ValidationOptions vopts;
    vopts.samples = o.samples;
    vopts.seed = o.seed;
    vopts.inject_fault = o.inject_fault;
    const ValidationReport rep = validate_table(sys.plant, table, vopts);

    json doc{{"system", sys.name},
             {"cells_checked", rep.cells_checked},
             {"sim_samples", rep.sim_samples},
             {"sim_agree", rep.sim_agree},
             {"sim_inconclusive", rep.sim_inconclusive},
             {"passed", rep.passed()},
             {"warnings", rep.warnings}};
    json viol = json::array();
    for (const auto& v : rep.violations)
        viol.push_back({{"ix", v.ix}, {"iy", v.iy}, {"c1", v.c1}, {"tau", v.tau}, {"what", v.what}});
    doc["violations"] = viol;
    std::ostringstream hs;
    hs << "validate " << sys.name << ": " << rep.cells_checked << " cells, " << rep.sim_samples
       << " simulations (" << rep.sim_agree << " agree, " << rep.sim_inconclusive << " inconclusive)\n";
    for (const auto& w : rep.warnings) hs << "  warning: " << w << "\n";
    for (const auto& v : rep.violations)
        hs << "  VIOLATION at c1 = " << h6(v.c1) << ", tau = " << h6(v.tau) << ": " << v.what << "\n";
    hs << (rep.passed() ? "PASS\n" : "FAIL\n");
    emit(o, doc, hs.str());
    return rep.passed() ? 0 : kExitViolation;
}

int cmd_export_sdp(const Options& o) {
    require_system(o);
    const NamedSystem sys = load_system(o.system);
    const WaveChannel ch = channel_from(o);
    if (o.order < 0) throw InputError("--order must be nonnegative");
    const QsProblem qp = assemble_problem(o.order, sys.plant, ch);
    const LmiProblem pb = qs_lmi(qp, ch);
    const std::string comment = sys.name + " QS order " + std::to_string(o.order) + " c1=" + format_number(ch.c1) +
                                " tau=" + format_number(ch.tau) + "; stable iff max t > 0";
    if (o.out.empty()) {
        write_sdpa(std::cout, pb, comment);
    } else {
        std::ofstream f(o.out);
        if (!f) throw InputError("cannot write " + o.out);
        write_sdpa(f, pb, comment);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stability analysis of an LTI plant coupled with a damped string"};
    app.set_config("--config", "", "TOML/INI file; flags given on the command line take precedence");
    app.require_subcommand(1);
    Options o;

    auto add_system = [&](CLI::App* s) { s->add_option("--system", o.system, "System JSON file (A, B, K)"); };
    auto add_channel = [&](CLI::App* s) {
        s->add_option("--c", o.c, "Wave speed");
        s->add_option("--c0", o.c0, "Boundary damping");
        s->add_option("--c1", o.c1, "Product c * c0");
        s->add_option("--tau", o.tau, "Delay 1 / c");
    };
    auto add_out = [&](CLI::App* s) {
        s->add_option("--out", o.out, "Output file");
        s->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    };
    auto add_grid = [&](CLI::App* s) {
        s->add_option("--grid", o.grid, "c1=lo:hi:n,tau=lo:hi:n (or c0=..,c=.. with --coords c0c)");
        s->add_option("--coords", o.coords, "c1tau or c0c")->check(CLI::IsMember({"c1tau", "c0c"}));
        s->add_option("--methods", o.methods, "Comma list of ctcr, smallgain, qs, sim");
        s->add_option("--orders", o.orders, "Comma list of QS orders");
        s->add_option("--jobs", o.jobs, "Worker threads (default: all)")->check(CLI::NonNegativeNumber);
    };

    auto* analyze = app.add_subcommand("analyze", "Verdicts of every method at one channel point");
    add_system(analyze);
    add_channel(analyze);
    add_out(analyze);
    analyze->add_option("--methods", o.methods, "Comma list of ctcr, smallgain, qs, sim");
    analyze->add_option("--orders", o.orders, "Comma list of QS orders");
    analyze->add_option("--tau-max", o.tau_max, "Report CTCR intervals up to this delay");

    auto* map = app.add_subcommand("map", "Sweep a parameter grid");
    add_system(map);
    add_grid(map);
    add_out(map);
    map->add_flag("--resume", o.resume, "Reuse completed cells of an existing --out CSV");
    map->add_option("--gnuplot", o.gnuplot, "Also write a gnuplot nonuniform matrix");
    map->add_option("--gnuplot-method", o.gnuplot_method, "Method for --gnuplot: ctcr, smallgain, sim, qs or qs:N");
    map->add_option("--cmin", o.cmin, "Write c_min(c0) curves (c0c grids)");

    auto* hinf = app.add_subcommand("hinf", "H-infinity norm of K (sI - A)^-1 B");
    add_system(hinf);
    add_out(hinf);

    auto* ctcr = app.add_subcommand("ctcr-intervals", "Exact stability intervals in tau at fixed c1");
    add_system(ctcr);
    add_channel(ctcr);
    add_out(ctcr);
    ctcr->add_option("--tau-max", o.tau_max, "Largest delay (default 5)");

    auto* sim = app.add_subcommand("simulate", "Integrate the delay equation and classify the trajectory");
    add_system(sim);
    add_channel(sim);
    add_out(sim);
    sim->add_option("--t-end", o.t_end, "Horizon (default max(50 tau, 150))");
    sim->add_option("--steps-per-tau", o.steps_per_tau, "Integration steps per delay (>= 20)");
    sim->add_option("--x0", o.x0, "Initial state as a JSON array (default all ones)");

    auto* validate = app.add_subcommand("validate", "Containment and simulator cross-checks on a grid");
    add_system(validate);
    add_grid(validate);
    add_out(validate);
    validate->add_option("--samples", o.samples, "Simulated cells");
    validate->add_option("--seed", o.seed, "Shuffles the simulation order only");
    validate->add_flag("--inject-fault", o.inject_fault, "Test mode: corrupt one verdict");

    auto* exp = app.add_subcommand("export-sdp", "Write the QS feasibility problem in SDPA sparse format");
    add_system(exp);
    add_channel(exp);
    exp->add_option("--order", o.order, "QS order N");
    exp->add_option("--out", o.out, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInput;
    }

    try {
        if (*analyze) return cmd_analyze(o);
        if (*map) return cmd_map(o);
        if (*hinf) return cmd_hinf(o);
        if (*ctcr) return cmd_ctcr(o);
        if (*sim) return cmd_simulate(o);
        if (*validate) return cmd_validate(o);
        if (*exp) return cmd_export_sdp(o);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const SolverUnavailable& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
