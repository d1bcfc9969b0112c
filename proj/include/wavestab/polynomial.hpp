#pragma once

// Dense real polynomials with ascending-degree coefficient storage:
// coeffs[k] multiplies s^k. This ordering is used everywhere in the library.

#include <complex>
#include <initializer_list>
#include <vector>

namespace wavestab {

using cplx = std::complex<double>;

class Poly {
public:
    Poly() = default;
    Poly(std::initializer_list<double> c) : c_(c) { trim(); }
    explicit Poly(std::vector<double> c) : c_(std::move(c)) { trim(); }

    static Poly constant(double v) { return Poly(std::vector<double>{v}); }
    static Poly monomial(int degree, double coeff = 1.0);
    /// Monic-times-lead polynomial whose roots are `roots`; conjugate pairs give real coefficients.
    static Poly from_roots(const std::vector<cplx>& roots, double lead = 1.0);

    /// Degree, with the zero polynomial reported as -1.
    int degree() const { return static_cast<int>(c_.size()) - 1; }
    bool is_zero() const { return c_.empty(); }
    const std::vector<double>& coeffs() const { return c_; }
    double coeff(int k) const { return (k >= 0 && k < static_cast<int>(c_.size())) ? c_[k] : 0.0; }
    double lead() const { return c_.empty() ? 0.0 : c_.back(); }
    double max_abs_coeff() const;

    double operator()(double x) const;
    cplx operator()(cplx s) const;

    Poly derivative() const;
    /// Coefficients rescaled so the largest magnitude is one (zero stays zero).
    Poly normalized() const;
    /// Roots via eigenvalues of the companion matrix. Leading zeros must already be trimmed.
    std::vector<cplx> roots() const;

    Poly& operator+=(const Poly& o);
    Poly& operator-=(const Poly& o);
    Poly& operator*=(double k);

    friend Poly operator+(Poly a, const Poly& b) { return a += b; }
    friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
    friend Poly operator*(Poly a, double k) { return a *= k; }
    friend Poly operator*(double k, Poly a) { return a *= k; }
    friend Poly operator*(const Poly& a, const Poly& b);

private:
    void trim();
    std::vector<double> c_;
};

}  // namespace wavestab
