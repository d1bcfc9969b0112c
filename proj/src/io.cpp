#include "wavestab/io.hpp"

#include "wavestab/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace wavestab {

using nlohmann::json;

namespace {

double number_at(const json& v, const std::string& where) {
    if (!v.is_number()) throw InputError(where + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw InputError(where + ": not finite");
    return d;
}

Matrix matrix_field(const json& doc, const std::string& key) {
    if (!doc.contains(key)) throw InputError("system: missing field \"" + key + "\"");
    const json& v = doc.at(key);
    if (!v.is_array() || v.empty()) throw InputError("system: field \"" + key + "\" must be a nonempty array");
    // A flat array is a vector; B reads it as a column, K as a row.
    if (!v.front().is_array()) {
        Matrix m(static_cast<Eigen::Index>(v.size()), 1);
        for (std::size_t i = 0; i < v.size(); ++i)
            m(static_cast<Eigen::Index>(i), 0) = number_at(v[i], key + "[" + std::to_string(i) + "]");
        return m;
    }
    const std::size_t cols = v.front().size();
    Matrix m(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < v.size(); ++i) {
        const json& row = v[i];
        const std::string where = key + "[" + std::to_string(i) + "]";
        if (!row.is_array()) throw InputError("system: " + where + " must be an array");
        if (row.size() != cols || cols == 0)
            throw InputError("system: " + where + " has " + std::to_string(row.size()) + " entries, expected " +
                             std::to_string(cols) + " (ragged matrix)");
        for (std::size_t j = 0; j < cols; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                number_at(row[j], where + "[" + std::to_string(j) + "]");
    }
    return m;
}

}  // namespace

NamedSystem parse_system(const json& doc) {
    if (!doc.is_object()) throw InputError("system: top level must be an object");
    std::string name = "system";
    if (doc.contains("name")) {
        if (!doc["name"].is_string()) throw InputError("system: field \"name\" must be a string");
        name = doc["name"].get<std::string>();
    }
    const Matrix a = matrix_field(doc, "A");
    const Matrix b = matrix_field(doc, "B");
    const Matrix k = matrix_field(doc, "K");
    const Eigen::Index n = a.rows();
    if (a.cols() != n) throw InputError("system: field \"A\" must be square");
    Vector bv;
    if (b.cols() == 1 && b.rows() == n) bv = b.col(0);
    else if (b.rows() == 1 && b.cols() == n) bv = b.row(0).transpose();
    else throw InputError("system: field \"B\" must have " + std::to_string(n) + " entries (one input)");
    RowVector kv;
    if (k.rows() == 1 && k.cols() == n) kv = k.row(0);
    else if (k.cols() == 1 && k.rows() == n) kv = k.col(0).transpose();
    else throw InputError("system: field \"K\" must have " + std::to_string(n) + " entries (one output)");
    return {name, LtiPlant(a, bv, kv)};
}

NamedSystem parse_system_text(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("system: malformed JSON: ") + e.what());
    }
    return parse_system(doc);
}

NamedSystem load_system(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("system: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_system_text(ss.str());
}

namespace {

double parse_double(std::string_view s, const std::string& where) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v))
        throw InputError(where + ": \"" + std::string(s) + "\" is not a number");
    return v;
}

int parse_int(std::string_view s, const std::string& where) {
    int v = 0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) throw InputError(where + ": \"" + std::string(s) + "\" is not an integer");
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        out.push_back(s.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace

void parse_grid(std::string_view text, GridSpec& grid) {
    const bool c1tau = grid.mode == CoordMode::C1Tau;
    const std::string xname = c1tau ? "c1" : "c0", yname = c1tau ? "tau" : "c";
    bool have_x = false, have_y = false;
    for (std::string_view part : split(text, ',')) {
        const std::size_t eq = part.find('=');
        if (eq == std::string_view::npos) throw InputError("grid: expected key=lo:hi:n, got \"" + std::string(part) + "\"");
        const std::string key(part.substr(0, eq));
        const auto fields = split(part.substr(eq + 1), ':');
        if (fields.size() != 3) throw InputError("grid: " + key + " needs lo:hi:n");
        Axis axis{parse_double(fields[0], "grid " + key), parse_double(fields[1], "grid " + key),
                  parse_int(fields[2], "grid " + key)};
        if (key == xname) {
            grid.x = axis;
            have_x = true;
        } else if (key == yname) {
            grid.y = axis;
            have_y = true;
        } else {
            throw InputError("grid: unknown axis \"" + key + "\" (expected " + xname + " and " + yname + ")");
        }
    }
    if (!have_x || !have_y) throw InputError("grid: both " + xname + " and " + yname + " are required");
    try {
        grid.validate();
    } catch (const DomainError& e) {
        throw InputError(e.what());
    }
}

MethodSet parse_methods(std::string_view methods, std::string_view orders) {
    MethodSet m;
    bool qs = false;
    if (!methods.empty()) {
        for (std::string_view name : split(methods, ',')) {
            if (name == "ctcr") m.ctcr = true;
            else if (name == "smallgain") m.smallgain = true;
            else if (name == "sim") m.sim = true;
            else if (name == "qs") qs = true;
            else if (!name.empty()) throw InputError("methods: unknown method \"" + std::string(name) + "\"");
        }
    }
    if (qs) {
        if (orders.empty()) {
            m.qs_orders = {0};
        } else {
            for (std::string_view o : split(orders, ',')) {
                const int v = parse_int(o, "orders");
                if (v < 0) throw InputError("orders: must be nonnegative");
                m.qs_orders.push_back(v);
            }
            std::sort(m.qs_orders.begin(), m.qs_orders.end());
            m.qs_orders.erase(std::unique(m.qs_orders.begin(), m.qs_orders.end()), m.qs_orders.end());
        }
    }
    return m;
}

json to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json to_json(const StabilityAccount& acc) {
    json events = json::array();
    for (const auto& e : acc.events)
        events.push_back({{"omega", e.omega}, {"T", e.T}, {"tendency", to_string(e.tendency)}, {"delays", e.delays}});
    json intervals = json::array();
    for (const auto& iv : acc.intervals)
        intervals.push_back({{"lo", iv.lo}, {"hi", iv.hi}, {"unstable_count", iv.unstable_count}});
    json stable = json::array();
    for (const auto& iv : acc.stable_intervals()) stable.push_back({iv.lo, iv.hi});
    json cancelled = json::array();
    for (const auto& r : acc.cancelled) cancelled.push_back({r.real(), r.imag()});
    return {{"c1", acc.c1},           {"tau_max", acc.tau_max},    {"unstable_at_zero", acc.nu_at_zero},
            {"crossings", events},    {"intervals", intervals},    {"stable_intervals", stable},
            {"cancelled_roots", cancelled}};
}

json to_json(const HinfResult& h) {
    return {{"norm", h.norm}, {"lower_bound", h.lower_bound}, {"peak_frequency", h.peak_frequency},
            {"iterations", h.iterations}};
}

json to_json(const SmallGainReport& r) {
    json out{{"verdict", to_string(r.verdict)}, {"reason", r.reason}};
    out["hinf"] = std::isnan(r.hinf) ? json(nullptr) : json(r.hinf);
    return out;
}

json to_json(const QsReport& r) {
    json out{{"order", r.order}, {"verdict", to_string(r.verdict)}, {"status", r.status},
             {"newton_steps", r.newton_steps}, {"warnings", r.warnings}};
    if (r.verdict == QsVerdict::Stable) {
        out["witness"] = {{"P", to_json(r.witness.P)},
                          {"Q", r.witness.Q},
                          {"R", r.witness.R},
                          {"S", r.witness.S},
                          {"eigen_margins", r.eigen_margins}};
    }
    return out;
}

}  // namespace wavestab
