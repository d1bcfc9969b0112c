#pragma once

// Linear matrix inequality problems and the solver interface.
//
//   maximize    objective' x
//   subject to  F_b(x) = F_b0 + sum_i x_i F_bi  >= 0   (PSD, every block b)
//               G x = h

#include "wavestab/model.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wavestab {

struct LmiBlock {
    int size = 0;
    Matrix constant;
    std::vector<std::pair<int, Matrix>> terms;  ///< (variable index, symmetric coefficient)

    Matrix eval(const Vector& x) const;
};

struct LmiProblem {
    int num_vars = 0;
    Vector objective;
    std::vector<LmiBlock> blocks;
    Matrix eq_matrix;  ///< p x num_vars, may have zero rows
    Vector eq_rhs;
    /// Strictly feasible starting point; required by the barrier backend.
    Vector start;
    /// Feasibility threshold on the objective: stop as soon as it is exceeded
    /// (Feasible) or certified out of reach (Infeasible).
    std::optional<double> target;
};

enum class SdpStatus { Feasible, Infeasible, Unknown };

struct SdpResult {
    SdpStatus status = SdpStatus::Unknown;
    Vector x;
    double objective = 0.0;
    double upper_bound = 0.0;
    int newton_steps = 0;
    std::string message;
};

/// Solvers must be reentrant: one instance may be called from several threads.
class SdpBackend {
public:
    virtual ~SdpBackend() = default;
    virtual std::string name() const = 0;
    virtual SdpResult solve(const LmiProblem& problem) const = 0;
};

struct BarrierOptions {
    double mu0 = 1.0;
    double mu_factor = 10.0;
    int max_outer = 40;
    int max_newton = 60;
    double gap_tolerance = 1e-9;
};

/// Primal log-det barrier path-following method with Newton centering.
class BarrierSdpSolver final : public SdpBackend {
public:
    explicit BarrierSdpSolver(BarrierOptions opts = {}) : opts_(opts) {}
    std::string name() const override { return "barrier"; }
    SdpResult solve(const LmiProblem& problem) const override;

private:
    BarrierOptions opts_;
};

class SolverUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Known names: "barrier". Throws SolverUnavailable otherwise.
std::unique_ptr<SdpBackend> make_backend(std::string_view name);
/// Backend named by WAVESTAB_SOLVER, "barrier" when unset.
std::unique_ptr<SdpBackend> backend_from_env();

/// Smallest eigenvalue of every block at x, computed independently of any solver.
std::vector<double> block_min_eigenvalues(const LmiProblem& problem, const Vector& x);

/// Sparse SDPA text format ("dat-s"). Equalities become pairs of diagonal entries.
void write_sdpa(std::ostream& os, const LmiProblem& problem, std::string_view comment = "wavestab LMI");

std::string to_string(SdpStatus s);

}  // namespace wavestab
