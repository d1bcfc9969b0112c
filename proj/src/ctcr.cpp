#include "wavestab/ctcr.hpp"

#include "wavestab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace wavestab {

namespace {

constexpr double kPi = std::numbers::pi;

/// R(w, T) = sum_m p[m](w) T^m and I(w, T) / omega = sum_m q[m](w) T^m, with w = omega^2.
struct AxisSplit {
    std::array<Poly, 3> p;
    std::array<Poly, 3> q;

    double real_part(double w, double T) const { return p[0](w) + T * (p[1](w) + T * p[2](w)); }
    double imag_part(double w, double T) const { return q[0](w) + T * (q[1](w) + T * q[2](w)); }
};

AxisSplit split_on_axis(const TransformedPoly& tp) {
    std::array<std::vector<double>, 3> p, q;
    const int deg = tp.degree();
    for (auto& v : p) v.assign(static_cast<std::size_t>(deg / 2 + 1), 0.0);
    for (auto& v : q) v.assign(static_cast<std::size_t>(deg / 2 + 1), 0.0);
    for (int k = 0; k <= deg; ++k) {
        const int j = k / 2;
        const double sign = (j % 2 == 0) ? 1.0 : -1.0;
        for (int m = 0; m < 3; ++m) {
            if (k % 2 == 0)
                p[m][j] += sign * tp.beta[k][m];
            else
                q[m][j] += sign * tp.beta[k][m];
        }
    }
    AxisSplit out;
    double pmax = 0.0, qmax = 0.0;
    for (int m = 0; m < 3; ++m) {
        out.p[m] = Poly(p[m]);
        out.q[m] = Poly(q[m]);
        pmax = std::max(pmax, out.p[m].max_abs_coeff());
        qmax = std::max(qmax, out.q[m].max_abs_coeff());
    }
    for (int m = 0; m < 3; ++m) {
        if (pmax > 0.0) out.p[m] *= 1.0 / pmax;
        if (qmax > 0.0) out.q[m] *= 1.0 / qmax;
    }
    return out;
}

Poly trim_relative(const Poly& poly, double rel) {
    std::vector<double> c = poly.coeffs();
    const double m = poly.max_abs_coeff();
    while (!c.empty() && std::abs(c.back()) <= rel * m) c.pop_back();
    return Poly(std::move(c));
}

double residual(const TransformedPoly& tp, double omega, double T) {
    const cplx s(0.0, omega);
    double scale = 0.0;
    double wk = 1.0;
    for (int k = 0; k <= tp.degree(); ++k) {
        const auto& b = tp.beta[k];
        scale += std::abs(b[0] + T * (b[1] + T * b[2])) * wk;
        wk *= omega;
    }
    if (scale == 0.0) return 0.0;
    return std::abs(tp(s, T)) / scale;
}

/// Newton on (R, I / omega) = 0 in (omega, T).
void refine(const AxisSplit& sp, double& omega, double& T) {
    std::array<Poly, 3> dp, dq;
    for (int m = 0; m < 3; ++m) {
        dp[m] = sp.p[m].derivative();
        dq[m] = sp.q[m].derivative();
    }
    for (int it = 0; it < 30; ++it) {
        const double w = omega * omega;
        const double f1 = sp.real_part(w, T);
        const double f2 = sp.imag_part(w, T);
        const double a11 = 2.0 * omega * (dp[0](w) + T * (dp[1](w) + T * dp[2](w)));
        const double a12 = sp.p[1](w) + 2.0 * T * sp.p[2](w);
        const double a21 = 2.0 * omega * (dq[0](w) + T * (dq[1](w) + T * dq[2](w)));
        const double a22 = sp.q[1](w) + 2.0 * T * sp.q[2](w);
        const double det = a11 * a22 - a12 * a21;
        if (det == 0.0 || !std::isfinite(det)) return;
        const double dw = (f1 * a22 - f2 * a12) / det;
        const double dT = (a11 * f2 - a21 * f1) / det;
        if (!std::isfinite(dw) || !std::isfinite(dT)) return;
        if (std::abs(dw) > 0.05 * omega || std::abs(dT) > 0.05 * (1.0 + std::abs(T))) return;
        omega -= dw;
        T -= dT;
        if (std::abs(dw) <= 1e-15 * omega && std::abs(dT) <= 1e-15 * (1.0 + std::abs(T))) return;
    }
}

/// Real roots of a T-quadratic c0 + c1 T + c2 T^2.
std::vector<double> real_quadratic_roots(double c0, double c1, double c2) {
    const double scale = std::max({std::abs(c0), std::abs(c1), std::abs(c2)});
    if (scale == 0.0) return {};
    if (std::abs(c2) <= 1e-12 * scale) {
        if (std::abs(c1) <= 1e-12 * scale) return {};
        return {-c0 / c1};
    }
    const double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc < -1e-10 * c1 * c1 - 1e-14 * scale * scale) return {};
    const double sq = std::sqrt(std::max(0.0, disc));
    const double qv = -0.5 * (c1 + std::copysign(sq, c1));
    std::vector<double> out;
    if (qv != 0.0) out.push_back(c0 / qv);
    out.push_back(qv / c2);
    return out;
}

double rekasius_phase(double omega, double T) { return std::isinf(T) ? kPi / 2.0 : std::atan(omega * T); }

bool same_crossing(const Crossing& a, const Crossing& b) {
    const double tol = kRootMergeTolerance * std::max(1.0, std::abs(a.omega));
    if (std::abs(a.omega - b.omega) > tol) return false;
    return std::abs(rekasius_phase(a.omega, a.T) - rekasius_phase(b.omega, b.T)) <= kRootMergeTolerance;
}

}  // namespace

cplx TransformedPoly::operator()(cplx s, double T) const {
    cplx acc = 0.0;
    for (auto it = beta.rbegin(); it != beta.rend(); ++it) acc = acc * s + ((*it)[0] + T * ((*it)[1] + T * (*it)[2]));
    return acc;
}

Poly TransformedPoly::at(double T) const {
    std::vector<double> c(beta.size());
    for (std::size_t k = 0; k < beta.size(); ++k) c[k] = beta[k][0] + T * (beta[k][1] + T * beta[k][2]);
    return Poly(std::move(c));
}

TransformedPoly transformed_poly(const RationalTf& reduced, double c1) {
    if (!(c1 > 0.0) || !std::isfinite(c1)) throw DomainError("ctcr: c1 must be finite and positive");
    const int n = reduced.den.degree();
    TransformedPoly tp;
    tp.c1 = c1;
    tp.beta.assign(static_cast<std::size_t>(n + 3), {0.0, 0.0, 0.0});
    for (int k = 0; k <= n + 2; ++k) {
        const double d0 = reduced.den.coeff(k), n0 = reduced.num.coeff(k);
        tp.beta[k][0] = d0 - n0;
        tp.beta[k][1] = 2.0 * c1 * reduced.den.coeff(k - 1);
        tp.beta[k][2] = reduced.den.coeff(k - 2) + reduced.num.coeff(k - 2);
    }
    return tp;
}

TransformedPoly transformed_poly(const LtiPlant& plant, double c1) {
    return transformed_poly(reduced_plant_tf(plant), c1);
}

std::vector<Crossing> crossing_set(const RationalTf& reduced, double c1) {
    const TransformedPoly tp = transformed_poly(reduced, c1);
    const AxisSplit sp = split_on_axis(tp);
    const auto& p = sp.p;
    const auto& q = sp.q;

    // Sylvester resultant of two quadratics in T.
    const Poly u = p[2] * q[0] - p[0] * q[2];
    const Poly v = p[2] * q[1] - p[1] * q[2];
    const Poly x = p[1] * q[0] - p[0] * q[1];
    const Poly res = u * u - v * x;
    double mag = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) mag = std::max(mag, (p[i] * q[j]).max_abs_coeff());
    if (res.max_abs_coeff() <= 1e-12 * std::max(mag * mag, 1e-300))
        throw DegenerateFamily("ctcr: resultant vanishes identically at c1 = " + std::to_string(c1));

    std::vector<Crossing> out;
    auto push_unique = [&out](const Crossing& cr) {
        for (const auto& e : out)
            if (same_crossing(e, cr)) return;
        out.push_back(cr);
    };

    for (const cplx& root : trim_relative(res, 1e-14).roots()) {
        const double w = root.real();
        if (!(w > 0.0) || std::abs(root.imag()) > 1e-4 * std::max(1.0, std::abs(root))) continue;
        const double omega0 = std::sqrt(w);

        std::vector<double> candidates;
        const double a = q[2](w) * p[1](w) - p[2](w) * q[1](w);
        const double b = q[2](w) * p[0](w) - p[2](w) * q[0](w);
        const double a_scale = std::abs(q[2](w) * p[1](w)) + std::abs(p[2](w) * q[1](w));
        if (std::abs(a) > 1e-8 * std::max(a_scale, 1e-300)) {
            candidates.push_back(-b / a);
        } else {
            // Proportional quadratics: every real root of either is a candidate.
            for (double T : real_quadratic_roots(p[0](w), p[1](w), p[2](w))) candidates.push_back(T);
            for (double T : real_quadratic_roots(q[0](w), q[1](w), q[2](w))) candidates.push_back(T);
        }
        for (double T0 : candidates) {
            if (!std::isfinite(T0)) continue;
            double omega = omega0, T = T0;
            refine(sp, omega, T);
            if (residual(tp, omega, T) > kCrossingResidualTolerance) {
                omega = omega0;
                T = T0;
                if (residual(tp, omega, T) > kCrossingResidualTolerance) continue;
            }
            push_unique({omega, T});
        }
    }

    // T = inf: e^{-i omega tau} = -1, where the transformed polynomial loses its T^2 term.
    const Poly sum = reduced.den + reduced.num;
    for (const cplx& r : sum.roots()) {
        if (r.imag() <= 0.0) continue;
        if (std::abs(r.real()) > kImagAxisTolerance * std::max(1.0, std::abs(r))) continue;
        push_unique({r.imag(), std::numeric_limits<double>::infinity()});
    }

    std::sort(out.begin(), out.end(), [](const Crossing& l, const Crossing& r) {
        if (l.omega != r.omega) return l.omega < r.omega;
        return rekasius_phase(l.omega, l.T) < rekasius_phase(r.omega, r.T);
    });
    return out;
}

std::vector<Crossing> crossing_set(const LtiPlant& plant, double c1) { return crossing_set(reduced_plant_tf(plant), c1); }

std::vector<double> first_delays(double omega, double T, int count) {
    if (!(omega > 0.0)) throw DomainError("delays: omega must be positive");
    const double phi = rekasius_phase(omega, T);
    std::vector<double> out;
    int ell = phi > 0.0 ? 0 : 1;
    for (int i = 0; i < count; ++i, ++ell) out.push_back(2.0 * (phi + ell * kPi) / omega);
    return out;
}

std::vector<double> delays_for_crossing(double omega, double T, double tau_max) {
    if (!(omega > 0.0)) throw DomainError("delays: omega must be positive");
    if (!(tau_max > 0.0)) throw DomainError("delays: tau_max must be positive");
    const double phi = rekasius_phase(omega, T);
    std::vector<double> out;
    for (int ell = phi > 0.0 ? 0 : 1;; ++ell) {
        const double tau = 2.0 * (phi + ell * kPi) / omega;
        if (tau > tau_max * (1.0 + 1e-12)) break;
        out.push_back(tau);
    }
    return out;
}

Tendency root_tendency(const QuasiPolynomial& ceq, double omega, double T) {
    const cplx s(0.0, omega);
    Tendency first = Tendency::Degenerate;
    const auto delays = first_delays(omega, T, 3);
    for (std::size_t i = 0; i < delays.size(); ++i) {
        const cplx slope = -ceq.dtau(s, delays[i]) / ceq.ds(s, delays[i]);
        const double mag = std::abs(slope);
        if (!std::isfinite(mag) || std::abs(slope.real()) < kTendencyTolerance * mag) {
            if (i == 0) return Tendency::Degenerate;
            continue;
        }
        const Tendency t = slope.real() > 0.0 ? Tendency::Destabilizing : Tendency::Stabilizing;
        if (i == 0)
            first = t;
        else if (t != first)
            throw Error("ctcr: root tendency changes between delays of the crossing at omega = " +
                        std::to_string(omega));
    }
    return first;
}

Tendency root_tendency(const LtiPlant& plant, double c1, double omega, double T) {
    return root_tendency(build_ceq(reduced_plant_tf(plant), c1, 1.0), omega, T);
}

int count_unstable_at_zero(const RationalTf& reduced) {
    const Poly delay_free = reduced.den - reduced.num;
    int count = 0;
    for (const cplx& r : delay_free.roots()) {
        if (std::abs(r.real()) <= kImagAxisTolerance)
            throw MarginalAtZero("ctcr: delay-free characteristic root on the imaginary axis");
        if (r.real() > 0.0) ++count;
    }
    return count;
}

int count_unstable_at_zero(const LtiPlant& plant) { return count_unstable_at_zero(reduced_plant_tf(plant)); }

StabilityAccount stable_intervals(const RationalTf& reduced, double c1, double tau_max) {
    if (!(tau_max > 0.0) || !std::isfinite(tau_max)) throw DomainError("ctcr: tau_max must be finite and positive");
    StabilityAccount acc;
    acc.c1 = c1;
    acc.tau_max = tau_max;
    acc.cancelled = reduced.cancelled;
    acc.nu_at_zero = count_unstable_at_zero(reduced);
    // A cancelled pole-zero pair is a root of the quasipolynomial for every delay.
    for (const cplx& r : reduced.cancelled) {
        if (std::abs(r.real()) <= kImagAxisTolerance)
            throw MarginalAtZero("ctcr: cancelled plant mode on the imaginary axis");
        if (r.real() > 0.0) ++acc.nu_at_zero;
    }

    const QuasiPolynomial ceq = build_ceq(reduced, c1, 1.0);
    struct Change {
        double tau;
        int delta;
    };
    std::vector<Change> changes;
    for (const Crossing& cr : crossing_set(reduced, c1)) {
        CrossingEvent ev{cr.omega, cr.T, Tendency::Degenerate, delays_for_crossing(cr.omega, cr.T, tau_max)};
        ev.tendency = root_tendency(ceq, cr.omega, cr.T);
        if (ev.tendency == Tendency::Degenerate && !ev.delays.empty())
            throw DegenerateTendency("ctcr: degenerate root tendency at omega = " + std::to_string(cr.omega));
        for (double tau : ev.delays) changes.push_back({tau, 2 * static_cast<int>(ev.tendency)});
        acc.events.push_back(std::move(ev));
    }
    std::sort(changes.begin(), changes.end(), [](const Change& a, const Change& b) {
        return a.tau != b.tau ? a.tau < b.tau : a.delta < b.delta;
    });

    int count = acc.nu_at_zero;
    double prev = 0.0;
    for (std::size_t i = 0; i < changes.size();) {
        const double tau = changes[i].tau;
        int delta = 0;
        // Crossings at numerically the same delay move together.
        while (i < changes.size() && changes[i].tau <= tau * (1.0 + 1e-12)) delta += changes[i++].delta;
        if (tau > prev) acc.intervals.push_back({prev, tau, count});
        count += delta;
        if (count < 0)
            throw Error("ctcr: unstable-root count became negative at tau = " + std::to_string(tau));
        prev = tau;
    }
    if (prev < tau_max) acc.intervals.push_back({prev, tau_max, count});
    return acc;
}

StabilityAccount stable_intervals(const LtiPlant& plant, double c1, double tau_max) {
    return stable_intervals(reduced_plant_tf(plant), c1, tau_max);
}

int StabilityAccount::unstable_count_at(double tau) const {
    if (!(tau > 0.0) || tau > tau_max * (1.0 + 1e-12)) throw DomainError("ctcr: delay outside (0, tau_max]");
    for (const auto& iv : intervals)
        if (tau > iv.lo && tau <= iv.hi) return iv.unstable_count;
    return intervals.empty() ? nu_at_zero : intervals.back().unstable_count;
}

std::vector<DelayInterval> StabilityAccount::stable_intervals() const {
    std::vector<DelayInterval> out;
    for (const auto& iv : intervals) {
        if (iv.unstable_count != 0) continue;
        if (!out.empty() && out.back().hi == iv.lo)
            out.back().hi = iv.hi;
        else
            out.push_back(iv);
    }
    return out;
}

std::vector<double> StabilityAccount::crossing_delays() const {
    std::vector<double> out;
    for (const auto& ev : events) out.insert(out.end(), ev.delays.begin(), ev.delays.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::string to_string(Tendency t) {
    switch (t) {
        case Tendency::Stabilizing: return "stabilizing";
        case Tendency::Destabilizing: return "destabilizing";
        default: return "degenerate";
    }
}

}  // namespace wavestab
