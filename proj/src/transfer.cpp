#include "wavestab/transfer.hpp"

#include "wavestab/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wavestab {

namespace {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

std::vector<cplx> eigenvalues(const Matrix& a) {
    Eigen::EigenSolver<Matrix> es(a, false);
    std::vector<cplx> out(static_cast<std::size_t>(a.rows()));
    for (int i = 0; i < a.rows(); ++i) out[i] = es.eigenvalues()[i];
    return out;
}

cplx product_form(const std::vector<cplx>& roots, cplx s) {
    cplx acc = 1.0;
    for (const cplx& r : roots) acc *= (s - r);
    return acc;
}

}  // namespace

cplx plant_response(const LtiPlant& plant, cplx s) {
    CMatrix m = -plant.A().cast<cplx>();
    m.diagonal().array() += s;
    const CVector x = m.partialPivLu().solve(plant.B().cast<cplx>());
    return (plant.K().cast<cplx>() * x)(0);
}

RationalTf plant_tf(const LtiPlant& plant) {
    const int n = plant.n();
    const std::vector<cplx> eig = eigenvalues(plant.A());
    RationalTf tf;
    tf.den = Poly::from_roots(eig);

    double radius = 0.0;
    for (const cplx& e : eig) radius = std::max(radius, std::abs(e));
    const double rho = 1.0 + radius;

    // Chebyshev nodes on [-rho, rho]; rotate the node set until it keeps clear of the spectrum.
    std::vector<double> nodes(static_cast<std::size_t>(n));
    for (int attempt = 0;; ++attempt) {
        const double shift = 0.37 * attempt;
        bool clear = true;
        for (int j = 0; j < n; ++j) {
            nodes[j] = std::cos(std::numbers::pi * (2.0 * j + 1.0 + shift) / (2.0 * n + shift));
            for (const cplx& e : eig)
                if (std::abs(rho * nodes[j] - e) < 1e-3 * rho) clear = false;
        }
        if (clear || attempt > 50) break;
    }

    // g(s) = D(s) H(s) has degree < n; fit it in the scaled variable t = s / rho.
    Matrix vander(n, n);
    Vector rhs(n);
    for (int j = 0; j < n; ++j) {
        const cplx s(rho * nodes[j], 0.0);
        rhs(j) = (product_form(eig, s) * plant_response(plant, s)).real();
        double p = 1.0;
        for (int k = 0; k < n; ++k) {
            vander(j, k) = p;
            p *= nodes[j];
        }
    }
    const Vector scaled = vander.colPivHouseholderQr().solve(rhs);
    std::vector<double> num(static_cast<std::size_t>(n));
    double scale = 1.0;
    for (int k = 0; k < n; ++k) {
        num[k] = scaled(k) / scale;
        scale *= rho;
    }
    // Interpolation noise on structurally zero coefficients.
    const double mag = std::max(1e-300, std::abs(plant.K().norm() * plant.B().norm()) *
                                            std::pow(std::max(1.0, rho), n - 1));
    for (double& v : num)
        if (std::abs(v) < 1e-13 * mag) v = 0.0;
    tf.num = Poly(std::move(num));
    return tf;
}

RationalTf cancel_common_roots(const RationalTf& tf) {
    if (tf.num.degree() < 1) return tf;
    std::vector<cplx> zeros = tf.num.roots();
    std::vector<cplx> poles = tf.den.roots();
    std::vector<bool> pole_used(poles.size(), false);
    std::vector<cplx> kept_zeros;
    RationalTf out;
    for (const cplx& z : zeros) {
        int best = -1;
        double best_dist = kCancellationTolerance;
        for (std::size_t i = 0; i < poles.size(); ++i) {
            if (pole_used[i]) continue;
            const double d = std::abs(poles[i] - z);
            if (d <= best_dist) {
                best = static_cast<int>(i);
                best_dist = d;
            }
        }
        if (best >= 0) {
            pole_used[best] = true;
            out.cancelled.push_back(poles[best]);
        } else {
            kept_zeros.push_back(z);
        }
    }
    if (out.cancelled.empty()) {
        out.num = tf.num;
        out.den = tf.den;
        return out;
    }
    std::vector<cplx> kept_poles;
    for (std::size_t i = 0; i < poles.size(); ++i)
        if (!pole_used[i]) kept_poles.push_back(poles[i]);
    out.num = Poly::from_roots(kept_zeros, tf.num.lead());
    out.den = Poly::from_roots(kept_poles, tf.den.lead());
    out.cancelled.insert(out.cancelled.begin(), tf.cancelled.begin(), tf.cancelled.end());
    return out;
}

RationalTf reduced_plant_tf(const LtiPlant& plant) { return cancel_common_roots(plant_tf(plant)); }

cplx wave_tf(double x, cplx s, const WaveChannel& channel) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("wave_tf: position must lie in [0, 1]");
    const double alpha = channel.alpha;
    const cplx den = 1.0 + alpha * std::exp(-2.0 * s / channel.c);
    if (std::abs(den) < kWavePoleTolerance) throw PoleEvaluationError(s);
    const cplx num = std::exp(-(s / channel.c) * x) + alpha * std::exp((s / channel.c) * (x - 2.0));
    return num / den;
}

double wave_pole_abscissa(const WaveChannel& channel) {
    if (channel.alpha == 0.0) throw NoChannelPoles();
    return 0.5 * channel.c * std::log(std::abs(channel.alpha));
}

double wave_hinf_norm(const WaveChannel& channel) {
    if (channel.c0 <= 0.0) return std::numeric_limits<double>::infinity();
    return std::max(1.0 / channel.c1, 1.0);
}

cplx QuasiPolynomial::eval(cplx s, double delay) const {
    const cplx e = std::exp(-delay * s);
    return a0(s) + a1(s) * e + a2(s) * e * e;
}

cplx QuasiPolynomial::ds(cplx s, double delay) const {
    const cplx e = std::exp(-delay * s);
    return a0.derivative()(s) + (a1.derivative()(s) - delay * a1(s)) * e +
           (a2.derivative()(s) - 2.0 * delay * a2(s)) * e * e;
}

cplx QuasiPolynomial::dtau(cplx s, double delay) const {
    const cplx e = std::exp(-delay * s);
    return -s * (a1(s) * e + 2.0 * a2(s) * e * e);
}

QuasiPolynomial build_ceq(const RationalTf& reduced, double c1, double tau) {
    QuasiPolynomial q;
    q.a0 = reduced.den * (1.0 + c1);
    q.a1 = reduced.num * -2.0;
    q.a2 = std::abs(c1 - 1.0) <= kRetardedTolerance ? Poly{} : reduced.den * (1.0 - c1);
    q.tau = tau;
    return q;
}

QuasiPolynomial build_ceq(const LtiPlant& plant, const WaveChannel& channel) {
    return build_ceq(reduced_plant_tf(plant), channel.c1, channel.tau);
}

}  // namespace wavestab
