#include "wavestab/ndde_sim.hpp"

#include "wavestab/errors.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace wavestab {

namespace {

/// State stored on the half-step grid t_j = j h / 2, j = -4m .. 2K, shifted by 4m.
/// Grid points keep both one-sided derivatives.
class History {
public:
    History(int offset, std::size_t reserve) : offset_(offset) {
        x_.reserve(reserve);
        left_.reserve(reserve);
        right_.reserve(reserve);
    }
    void push(const Vector& x, const Vector& left, const Vector& right) {
        x_.push_back(x);
        left_.push_back(left);
        right_.push_back(right);
    }
    const Vector& x(int j) const { return x_[static_cast<std::size_t>(j + offset_)]; }
    const Vector& dx(int j, bool right) const {
        return right ? right_[static_cast<std::size_t>(j + offset_)] : left_[static_cast<std::size_t>(j + offset_)];
    }

private:
    int offset_;
    std::vector<Vector> x_, left_, right_;
};

}  // namespace

Trajectory simulate(const CoupledSystem& sys, const SimConfig& cfg) {
    const WaveChannel& ch = sys.channel;
    if (!(std::abs(ch.alpha) < 1.0))
        throw GateRefused("simulate: |alpha| = 1, the difference operator is not stable");
    if (cfg.steps_per_tau < 20) throw DomainError("simulate: steps_per_tau must be at least 20");
    if (!(cfg.t_end > 0.0) || !std::isfinite(cfg.t_end)) throw DomainError("simulate: t_end must be positive");
    const LtiPlant& p = sys.plant;
    const int n = p.n();
    if (!cfg.history && cfg.x0.size() != n)
        throw DomainError("simulate: x0 must have " + std::to_string(n) + " entries");

    const int m = cfg.steps_per_tau;
    const double tau = ch.tau, h = tau / m, a = ch.alpha;
    const double beta = 2.0 / (1.0 + ch.c1);
    const long steps = static_cast<long>(std::ceil(cfg.t_end / h - 1e-9));
    const Matrix& A = p.A();
    const Vector& B = p.B();
    const Matrix BK = beta * B * p.K();
    const Matrix aA = a * A;
    auto input = [&](double t) { return cfg.input ? cfg.input(t) : 0.0; };

    const int offset = 4 * m;
    History hist(offset, static_cast<std::size_t>(offset + 2 * steps + 1));
    const Vector zero = Vector::Zero(n);
    for (int j = -offset; j < 0; ++j) {
        const double t = 0.5 * h * j;
        if (cfg.history) {
            const Vector x = cfg.history(t);
            const Vector d = cfg.history_derivative ? cfg.history_derivative(t) : zero;
            hist.push(x, d, d);
        } else {
            hist.push(cfg.x0, zero, zero);
        }
    }

    // Forcing from the past only; j is the half-step index of the evaluation time.
    auto forcing = [&](int j, bool right) -> Vector {
        const double t = 0.5 * h * j;
        Vector g = BK * hist.x(j - 2 * m) + aA * hist.x(j - 4 * m) - a * hist.dx(j - 4 * m, right);
        const double r = input(t) + a * input(t - tau);
        if (r != 0.0) g += r * B;
        return g;
    };

    Trajectory traj;
    traj.h = h;
    traj.tau = tau;
    traj.times.reserve(static_cast<std::size_t>(steps + 1));
    traj.states.reserve(static_cast<std::size_t>(steps + 1));
    traj.derivs.reserve(static_cast<std::size_t>(steps + 1));
    traj.norm_series.reserve(static_cast<std::size_t>(steps + 1));

    Vector x = cfg.history ? cfg.history(0.0) : cfg.x0;
    const Vector left0 = cfg.history && cfg.history_derivative ? cfg.history_derivative(0.0) : zero;
    Vector g_right = forcing(0, true);
    Vector dx_right = A * x + g_right;
    hist.push(x, left0, dx_right);
    auto record = [&](double t, const Vector& xs, const Vector& ds) {
        traj.times.push_back(t);
        traj.states.push_back(xs);
        traj.derivs.push_back(ds);
        traj.norm_series.push_back(xs.norm());
    };
    record(0.0, x, dx_right);

    for (long k = 0; k < steps; ++k) {
        const int j = static_cast<int>(2 * k);
        const Vector g_mid = forcing(j + 1, true);
        const Vector g_end = forcing(j + 2, false);
        const Vector k1 = dx_right;
        const Vector k2 = A * (x + 0.5 * h * k1) + g_mid;
        const Vector k3 = A * (x + 0.5 * h * k2) + g_mid;
        const Vector k4 = A * (x + h * k3) + g_end;
        const Vector x_next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const Vector dx_left = A * x_next + g_end;

        // Cubic Hermite midpoint; its derivative comes from the equation itself.
        const Vector x_mid = 0.5 * (x + x_next) + (h / 8.0) * (dx_right - dx_left);
        const Vector dx_mid = A * x_mid + g_mid;
        hist.push(x_mid, dx_mid, dx_mid);

        dx_right = A * x_next + forcing(j + 2, true);
        hist.push(x_next, dx_left, dx_right);
        x = x_next;
        record(h * static_cast<double>(k + 1), x, dx_right);
        if (!std::isfinite(traj.norm_series.back()) || traj.norm_series.back() > kDivergenceCap) {
            traj.diverged = true;
            break;
        }
    }
    return traj;
}

double tail_log_slope(const Trajectory& traj, double tail_fraction) {
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw DomainError("classify: tail_fraction must lie in (0, 1]");
    const std::size_t count = traj.times.size();
    if (count < 2) return 0.0;
    const double t_last = traj.times.back();
    const double t_start = t_last * (1.0 - tail_fraction);
    double st = 0, sy = 0, stt = 0, sty = 0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < count; ++i) {
        if (traj.times[i] < t_start) continue;
        const double t = traj.times[i];
        const double y = std::log(std::max(traj.norm_series[i], kNormFloor));
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        ++used;
    }
    if (used < 2) return 0.0;
    const double u = static_cast<double>(used);
    const double den = u * stt - st * st;
    return den > 0.0 ? (u * sty - st * sy) / den : 0.0;
}

TrajectoryClass classify_trajectory(const Trajectory& traj, double tail_fraction, double tol_rate) {
    if (traj.diverged) return TrajectoryClass::Growing;
    if (tol_rate <= 0.0) tol_rate = 1e-3 / traj.tau;
    const std::size_t count = traj.times.size();
    const double t_start = count ? traj.times.back() * (1.0 - tail_fraction) : 0.0;
    double tail_max = 0.0;
    for (std::size_t i = 0; i < count; ++i)
        if (traj.times[i] >= t_start) tail_max = std::max(tail_max, traj.norm_series[i]);
    // Everything below the floor: the state has converged (or was zero to begin with).
    if (tail_max <= kNormFloor) return TrajectoryClass::Decaying;
    const double slope = tail_log_slope(traj, tail_fraction);
    if (slope < -tol_rate) return TrajectoryClass::Decaying;
    if (slope > tol_rate) return TrajectoryClass::Growing;
    return TrajectoryClass::Inconclusive;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    const std::size_t n = traj.states.empty() ? 0 : static_cast<std::size_t>(traj.states.front().size());
    os << "t";
    for (std::size_t i = 1; i <= n; ++i) os << ",x" << i;
    os << ",norm\n";
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf;
    };
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        put(traj.times[k]);
        for (std::size_t i = 0; i < n; ++i) {
            os << ',';
            put(traj.states[k](static_cast<Eigen::Index>(i)));
        }
        os << ',';
        put(traj.norm_series[k]);
        os << '\n';
    }
}

std::string to_string(TrajectoryClass c) {
    switch (c) {
        case TrajectoryClass::Decaying: return "decaying";
        case TrajectoryClass::Growing: return "growing";
        case TrajectoryClass::Inconclusive: return "inconclusive";
    }
    return "?";
}

}  // namespace wavestab
