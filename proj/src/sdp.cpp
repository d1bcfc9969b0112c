#include "wavestab/sdp.hpp"

#include "wavestab/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <ostream>

namespace wavestab {

Matrix LmiBlock::eval(const Vector& x) const {
    Matrix f = constant;
    for (const auto& [var, coeff] : terms) f.noalias() += x(var) * coeff;
    return f;
}

namespace {

struct BarrierState {
    double value = 0.0;  ///< -sum log det F_b(x)
    Vector grad;
    Matrix hess;
};

/// log-det barrier; returns false when some block is not positive definite.
bool barrier_value(const LmiProblem& pb, const Vector& x, double& value) {
    value = 0.0;
    for (const auto& blk : pb.blocks) {
        Eigen::LLT<Matrix> llt(blk.eval(x));
        if (llt.info() != Eigen::Success) return false;
        const auto diag = llt.matrixLLT().diagonal();
        for (int i = 0; i < diag.size(); ++i) {
            if (!(diag(i) > 0.0)) return false;
            value -= 2.0 * std::log(diag(i));
        }
    }
    return std::isfinite(value);
}

bool barrier_derivatives(const LmiProblem& pb, const Vector& x, BarrierState& st) {
    const int m = pb.num_vars;
    st.grad = Vector::Zero(m);
    st.hess = Matrix::Zero(m, m);
    st.value = 0.0;
    std::vector<Matrix> scaled;
    for (const auto& blk : pb.blocks) {
        Eigen::LLT<Matrix> llt(blk.eval(x));
        if (llt.info() != Eigen::Success) return false;
        const Matrix l = llt.matrixL();
        for (int i = 0; i < l.rows(); ++i) {
            if (!(l(i, i) > 0.0)) return false;
            st.value -= 2.0 * std::log(l(i, i));
        }
        const auto tri = l.triangularView<Eigen::Lower>();
        scaled.resize(blk.terms.size());
        for (std::size_t t = 0; t < blk.terms.size(); ++t) {
            // L^{-1} F_i L^{-T}
            const Matrix half = tri.solve(blk.terms[t].second);
            scaled[t] = tri.solve(half.transpose());
            st.grad(blk.terms[t].first) -= scaled[t].trace();
        }
        for (std::size_t a = 0; a < blk.terms.size(); ++a) {
            const int va = blk.terms[a].first;
            for (std::size_t b = a; b < blk.terms.size(); ++b) {
                const int vb = blk.terms[b].first;
                const double h = scaled[a].cwiseProduct(scaled[b]).sum();
                st.hess(va, vb) += h;
                if (a != b) st.hess(vb, va) += h;
            }
        }
    }
    return std::isfinite(st.value);
}

int barrier_degree(const LmiProblem& pb) {
    int theta = 0;
    for (const auto& blk : pb.blocks) theta += blk.size;
    return theta;
}

}  // namespace

SdpResult BarrierSdpSolver::solve(const LmiProblem& pb) const {
    SdpResult res;
    const int m = pb.num_vars;
    if (pb.start.size() != m) {
        res.message = "no starting point supplied";
        return res;
    }
    Vector x = pb.start;

    // Parametrize the affine set {G x = h} as x0 + Z y.
    Matrix basis;
    if (pb.eq_matrix.rows() > 0) {
        const Matrix& g = pb.eq_matrix;
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(g);
        x += cod.solve(pb.eq_rhs - g * x);
        Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullV);
        const int rank = static_cast<int>((svd.singularValues().array() > 1e-12 * svd.singularValues()(0)).count());
        basis = svd.matrixV().rightCols(m - rank);
    } else {
        basis = Matrix::Identity(m, m);
    }

    double phi = 0.0;
    if (!barrier_value(pb, x, phi)) {
        res.message = "starting point is not strictly feasible";
        res.x = x;
        return res;
    }

    const double theta = barrier_degree(pb);
    double mu = opts_.mu0;
    BarrierState st;
    auto objective = [&](const Vector& v) { return pb.objective.dot(v); };
    auto finish = [&](SdpStatus status, std::string msg) {
        res.status = status;
        res.x = x;
        res.objective = objective(x);
        res.message = std::move(msg);
        return res;
    };
    if (pb.target && objective(x) > *pb.target) return finish(SdpStatus::Feasible, "start exceeds target");

    for (int outer = 0; outer < opts_.max_outer; ++outer) {
        double decrement = std::numeric_limits<double>::infinity();
        for (int it = 0; it < opts_.max_newton; ++it) {
            if (!barrier_derivatives(pb, x, st)) return finish(SdpStatus::Unknown, "lost strict feasibility");
            ++res.newton_steps;
            const Vector g = basis.transpose() * (st.grad - mu * pb.objective);
            const Matrix h = basis.transpose() * st.hess * basis;
            Eigen::LDLT<Matrix> ldlt(h);
            Vector dy = -ldlt.solve(g);
            if (ldlt.info() != Eigen::Success || !dy.allFinite()) {
                Matrix reg = h;
                reg.diagonal().array() += 1e-12 * (1.0 + h.diagonal().cwiseAbs().maxCoeff());
                dy = -reg.ldlt().solve(g);
                if (!dy.allFinite()) return finish(SdpStatus::Unknown, "singular Newton system");
            }
            decrement = -g.dot(dy);
            if (decrement < 0.0) decrement = 0.0;
            if (0.5 * decrement < 1e-10) break;

            const Vector dx = basis * dy;
            const double f0 = -mu * objective(x) + st.value;
            const double slope = -decrement;
            double step = 1.0;
            bool accepted = false;
            for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
                const Vector trial = x + step * dx;
                double trial_phi = 0.0;
                if (!barrier_value(pb, trial, trial_phi)) continue;
                if (-mu * objective(trial) + trial_phi <= f0 + 0.25 * step * slope) {
                    x = trial;
                    accepted = true;
                    break;
                }
            }
            if (!accepted) break;
            if (pb.target && objective(x) > *pb.target) return finish(SdpStatus::Feasible, "objective exceeded target");
        }
        // Central-path duality gap theta / mu, inflated for inexact centering.
        const double gap = (theta + std::sqrt(theta * std::max(decrement, 0.0))) / mu;
        res.upper_bound = objective(x) + gap;
        if (pb.target && res.upper_bound < *pb.target)
            return finish(SdpStatus::Infeasible, "objective bound below target");
        if (gap < opts_.gap_tolerance * (1.0 + std::abs(objective(x)))) {
            if (pb.target) return finish(SdpStatus::Unknown, "optimum within tolerance of target");
            return finish(SdpStatus::Feasible, "converged");
        }
        mu *= opts_.mu_factor;
    }
    return finish(SdpStatus::Unknown, "iteration limit");
}

std::unique_ptr<SdpBackend> make_backend(std::string_view name) {
    if (name.empty() || name == "barrier") return std::make_unique<BarrierSdpSolver>();
    throw SolverUnavailable("unknown SDP backend '" + std::string(name) + "' (available: barrier)");
}

std::unique_ptr<SdpBackend> backend_from_env() {
    const char* env = std::getenv("WAVESTAB_SOLVER");
    return make_backend(env ? std::string_view(env) : std::string_view());
}

std::vector<double> block_min_eigenvalues(const LmiProblem& pb, const Vector& x) {
    std::vector<double> out;
    for (const auto& blk : pb.blocks) {
        const Matrix f = blk.eval(x);
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (f + f.transpose()), Eigen::EigenvaluesOnly);
        out.push_back(es.eigenvalues()(0));
    }
    return out;
}

void write_sdpa(std::ostream& os, const LmiProblem& pb, std::string_view comment) {
    auto fmt = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    // Matrix blocks first (in problem order), then one diagonal block holding all
    // 1x1 blocks followed by the equality rows as +/- pairs.
    std::vector<int> matrix_blocks, scalar_blocks;
    for (std::size_t b = 0; b < pb.blocks.size(); ++b)
        (pb.blocks[b].size == 1 ? scalar_blocks : matrix_blocks).push_back(static_cast<int>(b));
    const int eq_rows = static_cast<int>(pb.eq_matrix.rows());
    const int diag_size = static_cast<int>(scalar_blocks.size()) + 2 * eq_rows;
    const int nblocks = static_cast<int>(matrix_blocks.size()) + (diag_size > 0 ? 1 : 0);

    os << '"' << comment << "\"\n";
    os << pb.num_vars << "\n" << nblocks << "\n";
    for (std::size_t i = 0; i < matrix_blocks.size(); ++i)
        os << (i ? " " : "") << pb.blocks[matrix_blocks[i]].size;
    if (diag_size > 0) os << (matrix_blocks.empty() ? "" : " ") << -diag_size;
    os << "\n";
    // SDPA minimizes c'x, so the objective is negated.
    for (int i = 0; i < pb.num_vars; ++i) os << (i ? " " : "") << fmt(pb.objective(i) == 0.0 ? 0.0 : -pb.objective(i));
    os << "\n";

    auto emit = [&](int matno, int blkno, int i, int j, double v) {
        if (v != 0.0) os << matno << ' ' << blkno << ' ' << i + 1 << ' ' << j + 1 << ' ' << fmt(v) << "\n";
    };
    auto emit_upper = [&](int matno, int blkno, const Matrix& f, double sign) {
        for (int i = 0; i < f.rows(); ++i)
            for (int j = i; j < f.cols(); ++j) emit(matno, blkno, i, j, sign * f(i, j));
    };
    // Block constant F_b0 enters as -F_0 in SDPA's  sum F_i x_i - F_0 >= 0.
    for (std::size_t bi = 0; bi < matrix_blocks.size(); ++bi) {
        const auto& blk = pb.blocks[matrix_blocks[bi]];
        emit_upper(0, static_cast<int>(bi) + 1, blk.constant, -1.0);
    }
    const int diag_blkno = static_cast<int>(matrix_blocks.size()) + 1;
    for (std::size_t si = 0; si < scalar_blocks.size(); ++si)
        emit(0, diag_blkno, static_cast<int>(si), static_cast<int>(si), -pb.blocks[scalar_blocks[si]].constant(0, 0));
    const int eq_offset = static_cast<int>(scalar_blocks.size());
    for (int r = 0; r < eq_rows; ++r) {
        emit(0, diag_blkno, eq_offset + 2 * r, eq_offset + 2 * r, pb.eq_rhs(r));
        emit(0, diag_blkno, eq_offset + 2 * r + 1, eq_offset + 2 * r + 1, -pb.eq_rhs(r));
    }
    for (int var = 0; var < pb.num_vars; ++var) {
        for (std::size_t bi = 0; bi < matrix_blocks.size(); ++bi)
            for (const auto& [v, coeff] : pb.blocks[matrix_blocks[bi]].terms)
                if (v == var) emit_upper(var + 1, static_cast<int>(bi) + 1, coeff, 1.0);
        for (std::size_t si = 0; si < scalar_blocks.size(); ++si)
            for (const auto& [v, coeff] : pb.blocks[scalar_blocks[si]].terms)
                if (v == var) emit(var + 1, diag_blkno, static_cast<int>(si), static_cast<int>(si), coeff(0, 0));
        for (int r = 0; r < eq_rows; ++r) {
            emit(var + 1, diag_blkno, eq_offset + 2 * r, eq_offset + 2 * r, pb.eq_matrix(r, var));
            emit(var + 1, diag_blkno, eq_offset + 2 * r + 1, eq_offset + 2 * r + 1, -pb.eq_matrix(r, var));
        }
    }
}

std::string to_string(SdpStatus s) {
    switch (s) {
        case SdpStatus::Feasible: return "feasible";
        case SdpStatus::Infeasible: return "infeasible";
        default: return "unknown";
    }
}

}  // namespace wavestab
