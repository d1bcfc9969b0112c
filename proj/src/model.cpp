#include "wavestab/model.hpp"

#include "wavestab/errors.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace wavestab {

LtiPlant::LtiPlant(Matrix a, Vector b, RowVector k) : a_(std::move(a)), b_(std::move(b)), k_(std::move(k)) {
    const auto n = a_.rows();
    if (n < 1) throw DomainError("plant: A must be at least 1x1");
    if (a_.cols() != n) throw DomainError("plant: A must be square");
    if (b_.size() != n) throw DomainError("plant: B must have " + std::to_string(n) + " rows");
    if (k_.size() != n) throw DomainError("plant: K must have " + std::to_string(n) + " columns");
    if (!a_.allFinite() || !b_.allFinite() || !k_.allFinite())
        throw DomainError("plant: all entries must be finite");
}

WaveChannel make_channel(double c, double c0) {
    if (!std::isfinite(c) || c <= 0.0) throw DomainError("channel: wave speed c must be finite and positive");
    if (!std::isfinite(c0) || c0 < 0.0) throw DomainError("channel: damping c0 must be finite and nonnegative");
    WaveChannel ch{};
    ch.c = c;
    ch.c0 = c0;
    ch.tau = 1.0 / c;
    ch.c1 = c * c0;
    ch.alpha = (1.0 - ch.c1) / (1.0 + ch.c1);
    // (1 + a) / (1 - a^2) = 1 / (1 - a) = (1 + c1) / (2 c1)
    ch.gamma = ch.c1 > 0.0 ? (1.0 + ch.c1) / (2.0 * ch.c1) : std::numeric_limits<double>::infinity();
    return ch;
}

WaveChannel channel_from_c1_tau(double c1, double tau) {
    if (!std::isfinite(tau) || tau <= 0.0) throw DomainError("channel: delay tau must be finite and positive");
    if (!std::isfinite(c1) || c1 < 0.0) throw DomainError("channel: c1 must be finite and nonnegative");
    WaveChannel ch = make_channel(1.0 / tau, c1 * tau);
    // Keep the coordinates the caller asked for instead of their round-tripped images.
    ch.tau = tau;
    ch.c1 = c1;
    ch.alpha = (1.0 - c1) / (1.0 + c1);
    ch.gamma = c1 > 0.0 ? (1.0 + c1) / (2.0 * c1) : std::numeric_limits<double>::infinity();
    return ch;
}

SystemClass classify(const WaveChannel& channel) {
    SystemClass out{};
    out.kind = std::abs(channel.c1 - 1.0) <= kRetardedTolerance ? SystemKind::Retarded : SystemKind::Neutral;
    out.small_tau_stabilizable = channel.c0 > 0.0 && std::abs(channel.alpha) < 1.0;
    return out;
}

Equilibria equilibria(const LtiPlant& plant) {
    const Matrix m = plant.closed_loop();
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    const double thresh = kRankTolerance * smax;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > thresh) ++rank;
    if (smax > 0.0 && rank == m.cols()) return UniqueZero{};
    const int nullity = static_cast<int>(m.cols()) - rank;
    return EquilibriumSubspace{svd.matrixV().rightCols(nullity)};
}

std::string to_string(SystemKind kind) { return kind == SystemKind::Retarded ? "retarded" : "neutral"; }

}  // namespace wavestab
