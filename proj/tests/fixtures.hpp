#pragma once

#include "wavestab/model.hpp"

#include <complex>
#include <vector>

namespace fixtures {

using wavestab::LtiPlant;
using wavestab::Matrix;
using wavestab::RowVector;
using wavestab::Vector;

/// A and A + BK Hurwitz, ||H||_inf = 20/21; (s + 2) cancels.
inline LtiPlant first_order() {
    Matrix a(2, 2);
    a << -2, 1, 0, -1;
    Vector b(2);
    b << 1, 1;
    RowVector k(2);
    k << 0, -20.0 / 21.0;
    return LtiPlant(a, b, k);
}

/// Open-loop unstable oscillator; unstable at tau = 0 for c1 = 1.
inline LtiPlant oscillator() {
    Matrix a(2, 2);
    a << 0, 1, -2, 0.1;
    Vector b(2);
    b << 0, 1;
    RowVector k(2);
    k << 1, 0;
    return LtiPlant(a, b, k);
}

/// Two coupled masses; stability pockets along tau at c1 = 1.
inline LtiPlant two_mass() {
    Matrix a(4, 4);
    a << 0, 0, 1, 0, 0, 0, 0, 1, -11, 10, 0, 0, 5, -15, 0, -0.25;
    Vector b(4);
    b << 0, 0, 1, 0;
    RowVector k(4);
    k << 1, 0, 0, 0;
    return LtiPlant(a, b, k);
}

inline std::vector<LtiPlant> all() { return {first_order(), oscillator(), two_mass()}; }

/// Characteristic polynomial of m by Faddeev-LeVerrier, ascending coefficients.
inline std::vector<double> leverrier(const Matrix& m) {
    const int n = static_cast<int>(m.rows());
    std::vector<double> c(n + 1, 0.0);
    c[n] = 1.0;
    Matrix mk = Matrix::Zero(n, n);
    for (int k = 1; k <= n; ++k) {
        mk = m * mk + c[n - k + 1] * Matrix::Identity(n, n);
        c[n - k] = -(m * mk).trace() / k;
    }
    return c;
}

inline std::complex<double> horner(const std::vector<double>& c, std::complex<double> s) {
    std::complex<double> acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * s + *it;
    return acc;
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton on P_n.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < n; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5)), dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
}

}  // namespace fixtures
