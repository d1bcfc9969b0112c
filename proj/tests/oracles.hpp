#pragma once

// Independent reference computations for the delay analysis, deliberately
// built without the Rekasius substitution or resultants.

#include "wavestab/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

namespace oracles {

using wavestab::cplx;
using wavestab::QuasiPolynomial;

inline constexpr double kPi = 3.14159265358979323846;

/// prod_j (|z_j|^2 - 1) over the roots z_j of a2 z^2 + a1 z + a0 = 0 at s = i w.
/// Sign changes mark frequencies where some e^{-i w tau} solves the characteristic equation.
inline double unit_circle_indicator(const QuasiPolynomial& q, double w, std::vector<cplx>* roots = nullptr) {
    const cplx s(0.0, w);
    const cplx a0 = q.a0(s), a1 = q.a1(s), a2 = q.a2(s);
    std::vector<cplx> z;
    if (q.a2.is_zero()) {
        z.push_back(-a0 / a1);
    } else {
        const cplx disc = std::sqrt(a1 * a1 - 4.0 * a2 * a0);
        z.push_back((-a1 + disc) / (2.0 * a2));
        z.push_back((-a1 - disc) / (2.0 * a2));
    }
    double prod = 1.0;
    for (const cplx& r : z) prod *= std::norm(r) - 1.0;
    if (roots) *roots = z;
    return prod;
}

/// Crossing delays in (0, tau_max] from a dense frequency sweep with bisection refinement.
inline std::vector<double> sweep_crossing_delays(const QuasiPolynomial& q, double tau_max, double w_max = 60.0,
                                                 double dw = 2e-4) {
    std::vector<double> delays;
    double prev_w = dw, prev = unit_circle_indicator(q, prev_w);
    for (double w = 2 * dw; w <= w_max; w += dw) {
        const double cur = unit_circle_indicator(q, w);
        if ((prev < 0) != (cur < 0)) {
            double lo = prev_w, hi = w, flo = prev;
            for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = unit_circle_indicator(q, mid);
                if ((fm < 0) == (flo < 0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            const double wc = 0.5 * (lo + hi);
            std::vector<cplx> z;
            unit_circle_indicator(q, wc, &z);
            const cplx on = *std::min_element(z.begin(), z.end(), [](cplx a, cplx b) {
                return std::abs(std::abs(a) - 1.0) < std::abs(std::abs(b) - 1.0);
            });
            double base = -std::arg(on) / wc;  // e^{-i w tau} = z
            while (base <= 0.0) base += 2.0 * kPi / wc;
            for (double tau = base; tau <= tau_max; tau += 2.0 * kPi / wc) delays.push_back(tau);
        }
        prev = cur;
        prev_w = w;
    }
    std::sort(delays.begin(), delays.end());
    return delays;
}

/// Zeros of c_eq(., tau) in the open right half-plane by the argument principle on a
/// half-disc of radius r. The contour must not pass through a zero.
inline int rhp_root_count(const QuasiPolynomial& q, double tau, double r = 40.0) {
    const double step = std::min(1e-3, 0.02 / std::max(tau, 1e-3));
    double total = 0.0;
    cplx prev = q.eval(cplx(0.0, -r), tau);
    auto advance = [&](cplx s) {
        const cplx cur = q.eval(s, tau);
        total += std::arg(cur / prev);
        prev = cur;
    };
    const int arc = static_cast<int>(std::ceil(kPi * r / step));
    for (int i = 1; i <= arc; ++i) {
        const double th = -kPi / 2 + kPi * i / arc;
        advance(cplx(r * std::cos(th), r * std::sin(th)));
    }
    const int axis = static_cast<int>(std::ceil(2.0 * r / step));
    for (int i = 1; i <= axis; ++i) advance(cplx(0.0, r - 2.0 * r * i / axis));
    return static_cast<int>(std::lround(total / (2.0 * kPi)));
}

/// Re(ds/dtau) at a crossing by tracking the root with Newton steps at tau +- h.
inline double tracked_real_velocity(const QuasiPolynomial& q, cplx s0, double tau, double h = 1e-6) {
    auto track = [&](double t) {
        cplx s = s0;
        for (int it = 0; it < 50; ++it) {
            const cplx ds = q.eval(s, t) / q.ds(s, t);
            s -= ds;
            if (std::abs(ds) < 1e-15) break;
        }
        return s;
    };
    return (track(tau + h).real() - track(tau - h).real()) / (2 * h);
}

}  // namespace oracles
