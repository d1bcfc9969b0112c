#include "wavestab/polynomial.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace wavestab {

Poly Poly::monomial(int degree, double coeff) {
    std::vector<double> c(static_cast<std::size_t>(degree) + 1, 0.0);
    c.back() = coeff;
    return Poly(std::move(c));
}

Poly Poly::from_roots(const std::vector<cplx>& roots, double lead) {
    std::vector<cplx> c{cplx(lead)};
    for (const cplx& r : roots) {
        std::vector<cplx> next(c.size() + 1, cplx(0.0));
        for (std::size_t k = 0; k < c.size(); ++k) {
            next[k + 1] += c[k];
            next[k] -= r * c[k];
        }
        c = std::move(next);
    }
    std::vector<double> re(c.size());
    std::transform(c.begin(), c.end(), re.begin(), [](cplx z) { return z.real(); });
    return Poly(std::move(re));
}

void Poly::trim() {
    while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
}

double Poly::max_abs_coeff() const {
    double m = 0.0;
    for (double v : c_) m = std::max(m, std::abs(v));
    return m;
}

double Poly::operator()(double x) const {
    double acc = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
    return acc;
}

cplx Poly::operator()(cplx s) const {
    cplx acc = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + *it;
    return acc;
}

Poly Poly::derivative() const {
    if (c_.size() <= 1) return {};
    std::vector<double> d(c_.size() - 1);
    for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
    return Poly(std::move(d));
}

Poly Poly::normalized() const {
    const double m = max_abs_coeff();
    if (m == 0.0) return {};
    return *this * (1.0 / m);
}

std::vector<cplx> Poly::roots() const {
    const int n = degree();
    if (n < 1) return {};
    // Exact zero roots are split off so the companion matrix stays nonsingular.
    int zeros = 0;
    while (zeros < n && c_[zeros] == 0.0) ++zeros;
    std::vector<cplx> out(static_cast<std::size_t>(zeros), cplx(0.0));
    const int m = n - zeros;
    if (m == 0) return out;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(m, m);
    const double lead = c_.back();
    for (int i = 1; i < m; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < m; ++i) companion(i, m - 1) = -c_[zeros + i] / lead;
    Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
    for (int i = 0; i < m; ++i) out.push_back(es.eigenvalues()[i]);
    return out;
}

Poly& Poly::operator+=(const Poly& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), 0.0);
    for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] += o.c_[k];
    trim();
    return *this;
}

Poly& Poly::operator-=(const Poly& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), 0.0);
    for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] -= o.c_[k];
    trim();
    return *this;
}

Poly& Poly::operator*=(double k) {
    for (double& v : c_) v *= k;
    trim();
    return *this;
}

Poly operator*(const Poly& a, const Poly& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<double> c(a.c_.size() + b.c_.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
        for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
    return Poly(std::move(c));
}

}  // namespace wavestab
