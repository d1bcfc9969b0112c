#pragma once

// Interconnection of an LTI plant with a damped string acting as a
// transmission channel:
//
//   dX/dt     = A X + B (u(1, t) + r(t))
//   u_tt      = c^2 u_xx,        x in [0, 1]
//   u(0, t)   = K X(t)
//   u_x(1, t) = -c0 u_t(1, t)

#include <Eigen/Dense>

#include <string>
#include <variant>

namespace wavestab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Finite-dimensional subsystem (A, B, K) with a scalar input and a scalar output.
class LtiPlant {
public:
    /// Throws DomainError on shape mismatch or non-finite entries.
    LtiPlant(Matrix a, Vector b, RowVector k);

    const Matrix& A() const { return a_; }
    const Vector& B() const { return b_; }
    const RowVector& K() const { return k_; }
    int n() const { return static_cast<int>(a_.rows()); }

    /// A + B K, the delay-free closed loop.
    Matrix closed_loop() const { return a_ + b_ * k_; }

private:
    Matrix a_;
    Vector b_;
    RowVector k_;
};

/// Wave speed and boundary damping plus the derived channel constants.
struct WaveChannel {
    double c;      ///< wave speed, 1 / delay
    double c0;     ///< boundary damping
    double tau;    ///< one-way travel time 1 / c
    double alpha;  ///< reflection coefficient (1 - c c0) / (1 + c c0)
    double c1;     ///< c * c0 = c0 / tau
    double gamma;  ///< (1 + alpha) / (1 - alpha^2); +inf when alpha == 1
};

/// Throws DomainError unless c > 0 and c0 >= 0, both finite.
WaveChannel make_channel(double c, double c0);

/// Channel addressed in the (c1, tau) coordinates used by the delay analysis.
WaveChannel channel_from_c1_tau(double c1, double tau);

struct CoupledSystem {
    LtiPlant plant;
    WaveChannel channel;
};

enum class SystemKind { Retarded, Neutral };

struct SystemClass {
    SystemKind kind;
    bool small_tau_stabilizable;
};

inline constexpr double kRetardedTolerance = 1e-12;
inline constexpr double kRankTolerance = 1e-10;

SystemClass classify(const WaveChannel& channel);
inline SystemClass classify(const CoupledSystem& sys) { return classify(sys.channel); }

struct UniqueZero {};
struct EquilibriumSubspace {
    Matrix basis;  ///< orthonormal columns spanning ker(A + B K)
};
using Equilibria = std::variant<UniqueZero, EquilibriumSubspace>;

Equilibria equilibria(const LtiPlant& plant);
inline Equilibria equilibria(const CoupledSystem& sys) { return equilibria(sys.plant); }

std::string to_string(SystemKind kind);

}  // namespace wavestab
