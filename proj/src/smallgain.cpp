#include "wavestab/smallgain.hpp"

#include "wavestab/errors.hpp"
#include "wavestab/transfer.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace wavestab {

bool is_hurwitz(const Matrix& a) {
    Eigen::EigenSolver<Matrix> es(a, false);
    for (int i = 0; i < a.rows(); ++i)
        if (es.eigenvalues()[i].real() >= -kHurwitzMargin) return false;
    return true;
}

bool hamiltonian_has_axis_eigenvalue(const LtiPlant& plant, double gamma, std::vector<double>* freqs) {
    const int n = plant.n();
    Matrix ham(2 * n, 2 * n);
    ham.topLeftCorner(n, n) = plant.A();
    ham.topRightCorner(n, n) = plant.B() * plant.B().transpose() / gamma;
    ham.bottomLeftCorner(n, n) = -plant.K().transpose() * plant.K() / gamma;
    ham.bottomRightCorner(n, n) = -plant.A().transpose();
    const double scale = ham.norm();
    Eigen::EigenSolver<Matrix> es(ham, false);
    bool found = false;
    for (int i = 0; i < 2 * n; ++i) {
        const cplx lambda = es.eigenvalues()[i];
        if (std::abs(lambda.real()) <= kHamiltonianAxisTolerance * scale) {
            found = true;
            if (freqs) freqs->push_back(lambda.imag());
        }
    }
    return found;
}

HinfResult hinf_norm(const LtiPlant& plant, double rtol) {
    if (!(rtol > 0.0)) throw DomainError("hinf: rtol must be positive");
    if (!is_hurwitz(plant.A())) throw NotHurwitz("hinf: A is not Hurwitz");

    HinfResult out;
    // Log-spaced sweep seeds the bracket and the peak estimate.
    Eigen::EigenSolver<Matrix> es(plant.A(), false);
    double wmax = 1.0, wmin = 1.0;
    for (int i = 0; i < plant.n(); ++i) {
        const double m = std::abs(es.eigenvalues()[i]);
        wmax = std::max(wmax, m);
        if (m > 0.0) wmin = std::min(wmin, m);
    }
    const double lo_exp = std::log10(wmin) - 3.0, hi_exp = std::log10(wmax) + 3.0;
    constexpr int kSweep = 2000;
    double lower = std::abs(plant_response(plant, cplx(0.0, 0.0)));
    double peak = 0.0;
    for (int i = 0; i < kSweep; ++i) {
        const double w = std::pow(10.0, lo_exp + (hi_exp - lo_exp) * i / (kSweep - 1));
        const double g = std::abs(plant_response(plant, cplx(0.0, w)));
        if (g > lower) {
            lower = g;
            peak = w;
        }
    }
    if (lower == 0.0) {
        // Either K (sI - A)^{-1} B vanishes identically (all Markov parameters zero) or the sweep missed a spike.
        Vector v = plant.B();
        bool zero = true;
        for (int k = 0; k < plant.n() && zero; ++k, v = plant.A() * v) zero = plant.K().dot(v) == 0.0;
        if (zero) return out;
        lower = std::numeric_limits<double>::min();
    }

    double upper = 2.0 * lower;
    while (hamiltonian_has_axis_eigenvalue(plant, upper)) {
        lower = upper;
        upper *= 2.0;
        ++out.iterations;
    }
    while (upper - lower > rtol * upper) {
        const double mid = 0.5 * (lower + upper);
        std::vector<double> freqs;
        if (hamiltonian_has_axis_eigenvalue(plant, mid, &freqs)) {
            lower = mid;
            // Midpoints between consecutive axis crossings bracket the local maxima.
            std::sort(freqs.begin(), freqs.end());
            for (std::size_t i = 0; i + 1 < freqs.size(); ++i) {
                const double w = std::abs(0.5 * (freqs[i] + freqs[i + 1]));
                const double g = std::abs(plant_response(plant, cplx(0.0, w)));
                if (g >= lower) {
                    lower = std::max(lower, g);
                    peak = w;
                }
            }
        } else {
            upper = mid;
        }
        ++out.iterations;
    }
    out.norm = upper;
    out.lower_bound = lower;
    out.peak_frequency = peak;
    return out;
}

SmallGainReport small_gain_verdict(double hinf, const WaveChannel& channel) {
    SmallGainReport r{SmallGainVerdict::Inapplicable, hinf, {}};
    if (std::isnan(hinf)) {
        r.reason = "A is not Hurwitz";
    } else if (hinf >= 1.0) {
        r.reason = "||H||_inf >= 1";
    } else if (!(channel.c0 > 0.0)) {
        r.reason = "c0 = 0: the channel is not stable";
    } else if (hinf < channel.c * channel.c0) {
        r.verdict = SmallGainVerdict::Stable;
        r.reason = "||H||_inf < c c0";
    } else {
        r.verdict = SmallGainVerdict::Inconclusive;
        r.reason = "||H||_inf >= c c0";
    }
    return r;
}

SmallGainReport small_gain_verdict(const CoupledSystem& sys) {
    if (!is_hurwitz(sys.plant.A())) return small_gain_verdict(std::numeric_limits<double>::quiet_NaN(), sys.channel);
    return small_gain_verdict(hinf_norm(sys.plant).norm, sys.channel);
}

std::vector<CminPoint> cmin_curve(const LtiPlant& plant, const std::vector<double>& c0_list) {
    if (!is_hurwitz(plant.A())) throw GateRefused("cmin: A is not Hurwitz");
    const double h = hinf_norm(plant).norm;
    if (h >= 1.0) throw GateRefused("cmin: ||H||_inf >= 1");
    std::vector<CminPoint> out;
    out.reserve(c0_list.size());
    for (double c0 : c0_list) {
        if (!(c0 > 0.0)) throw DomainError("cmin: c0 must be positive");
        out.push_back({c0, h / c0});
    }
    return out;
}

std::string to_string(SmallGainVerdict v) {
    switch (v) {
        case SmallGainVerdict::Stable: return "stable";
        case SmallGainVerdict::Inconclusive: return "inconclusive";
        default: return "inapplicable";
    }
}

}  // namespace wavestab
