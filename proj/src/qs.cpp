#include "wavestab/qs.hpp"

#include "wavestab/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <numbers>

namespace wavestab {

LegendreBundle legendre_bundle(int order, const WaveChannel& channel) {
    if (order < 0) throw DomainError("legendre: order must be nonnegative");
    LegendreBundle lb;
    lb.order = order;
    lb.c = 1.0 / channel.tau;
    lb.deriv = Matrix::Zero(order + 1, order + 1);
    lb.ones.resize(order + 1);
    lb.itilde.resize(order + 1);
    for (int i = 0; i <= order; ++i) {
        lb.ones(i) = (i % 2 == 0) ? 1.0 : -1.0;
        lb.itilde(i) = 1.0 / std::sqrt(2.0 * i + 1.0);
        for (int k = 0; k < i; ++k)
            lb.deriv(i, k) = ((k + i) % 2 == 0) ? 0.0 : 2.0 * (2.0 * k + 1.0) * lb.c;
    }
    return lb;
}

double shifted_legendre(int k, double theta, double tau) {
    const double x = 1.0 + 2.0 * theta / tau;
    double p0 = 1.0, p1 = x;
    if (k == 0) return p0;
    for (int j = 1; j < k; ++j) {
        const double p2 = ((2.0 * j + 1.0) * x * p1 - j * p0) / (j + 1.0);
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

double shifted_legendre_derivative(int k, double theta, double tau) {
    // P_k' = sum over j < k with k - j odd of (2j + 1) P_j, chain rule factor 2 / tau.
    double acc = 0.0;
    for (int j = k - 1; j >= 0; j -= 2) acc += (2.0 * j + 1.0) * shifted_legendre(j, theta, tau);
    return 2.0 * acc / tau;
}

namespace {

/// Modified spherical Bessel function i_k(z) by its power series; used where |z| <= k + 1.
cplx spherical_bessel_i_series(int k, cplx z) {
    cplx lead = 1.0;
    for (int j = 1; j <= k; ++j) lead *= z / (2.0 * j + 1.0);
    const cplx half_z2 = 0.5 * z * z;
    cplx term = 1.0, sum = 1.0;
    for (int j = 1; j < 200; ++j) {
        term *= half_z2 / (j * (2.0 * k + 2.0 * j + 1.0));
        sum += term;
        if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
    }
    return lead * sum;
}

}  // namespace

CVector delta_n(cplx s, double tau, int order) {
    if (order < 0) throw DomainError("delta_n: order must be nonnegative");
    if (!(tau > 0.0)) throw DomainError("delta_n: tau must be positive");
    // y_k = int_{-tau}^0 e^{theta s} L_k(theta) dtheta = tau e^{-z} i_k(z), z = s tau / 2.
    // Large |z|: integration-by-parts recurrence s y_k = 1 - (-1)^k e^{-tau s} - sum_i l_ki y_i.
    const cplx z = 0.5 * s * tau;
    const cplx e = std::exp(-tau * s);
    const cplx ez = std::exp(-z);
    CVector y(order + 1);
    for (int k = 0; k <= order; ++k) {
        if (std::abs(z) > k + 1.0) {
            cplx acc = 1.0 - ((k % 2 == 0) ? 1.0 : -1.0) * e;
            for (int i = k - 1; i >= 0; i -= 2) acc -= 2.0 * (2.0 * i + 1.0) / tau * y(i);
            y(k) = acc / s;
        } else {
            y(k) = tau * ez * spherical_bessel_i_series(k, z);
        }
    }
    for (int k = 0; k <= order; ++k) y(k) *= std::sqrt(2.0 * k + 1.0);
    return y;
}

cplx channel_delta(cplx s, const WaveChannel& channel) {
    return (1.0 + channel.alpha) / (1.0 + channel.alpha * std::exp(-2.0 * channel.tau * s));
}

QsProblem assemble_problem(int order, const LtiPlant& plant, const WaveChannel& channel) {
    if (order < 0) throw DomainError("qs: order must be nonnegative");
    if (!(std::abs(channel.alpha) < 1.0)) throw GateRefused("qs: |alpha| = 1, the channel is not damped");
    const int n = plant.n(), N = order;
    const LegendreBundle lb = legendre_bundle(N, channel);
    QsProblem qp;
    qp.order = N;
    qp.n = n;
    qp.z_dim = n + N + 3;
    qp.omega_dim = n + 2 * N + 3;
    const int rows = n + 2 * N + 4;

    // z = [X', Xi_N', KX, KX(t - tau), K X']'
    // omega = [X, Xi_N, KX(t - tau), u(1, t), V_N]
    Matrix& e = qp.E;
    e = Matrix::Zero(rows, qp.z_dim);
    e.topLeftCorner(n + N, n + N).setIdentity();
    e(n + N, n + N) = 1.0;
    e(n + N + 1, n + N + 1) = 1.0;
    e.block(n + N + 2, 0, 1, n) = -plant.K();
    e(n + N + 2, n + N + 2) = 1.0;
    e.block(n + N + 3, n + N, N + 1, 1).setOnes();
    e.block(n + N + 3, n + N + 1, N + 1, 1) = -lb.ones;

    Matrix& a = qp.A;
    a = Matrix::Zero(rows, qp.omega_dim);
    a.topLeftCorner(n, n) = plant.A();
    a.block(0, n + N + 1, n, 1) = plant.B();
    for (int k = 0; k < N; ++k) a(n + k, n + N + 2 + k) = lb.itilde(k);
    a.block(n + N, 0, 1, n) = plant.K();
    a(n + N + 1, n + N) = 1.0;
    a.block(n + N + 3, n, N + 1, N) = lb.deriv.leftCols(N);
    for (int k = 0; k <= N; ++k) a(n + N + 3 + k, n + N + 2 + k) = lb.itilde(k);

    Eigen::JacobiSVD<Matrix> esvd(e);
    const auto& esv = esvd.singularValues();
    if (esv(esv.size() - 1) <= kRankTolerance * esv(0)) throw AssemblyError("qs: E_N is not full column rank");

    Matrix stacked(rows, qp.z_dim + qp.omega_dim);
    stacked << e, -a;
    Eigen::JacobiSVD<Matrix> svd(stacked, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > kRankTolerance * sv(0)) ++rank;
    qp.V = svd.matrixV().rightCols(stacked.cols() - rank);
    qp.nullspace_residual = (stacked * qp.V).cwiseAbs().maxCoeff();
    return qp;
}

Matrix assemble_separator(int order, int n, const WaveChannel& channel, const SeparatorParams& p) {
    const int N = order, nn = n + N;
    if (p.P.rows() != nn || p.P.cols() != nn)
        throw DomainError("qs: P must be " + std::to_string(nn) + "x" + std::to_string(nn));
    const int zd = n + N + 3, wd = n + 2 * N + 3;
    const double a = channel.alpha, g = channel.gamma, tau = channel.tau;
    Matrix theta = Matrix::Zero(zd + wd, zd + wd);
    // Theta_{N,1}
    theta(nn, nn) = -p.Q;
    theta(nn + 1, nn + 1) = p.R * (1.0 - a * a) * g * g;
    theta(nn + 2, nn + 2) = -tau * tau * p.S;
    // Theta_{N,2} and its transpose
    theta.block(0, zd, nn, nn) = -p.P;
    theta.block(zd, 0, nn, nn) = -p.P.transpose();
    theta(nn + 1, zd + nn + 1) = -p.R * g;
    theta(zd + nn + 1, nn + 1) = -p.R * g;
    // Theta_{N,3}
    theta(zd + nn, zd + nn) = p.Q;
    theta(zd + nn + 1, zd + nn + 1) = p.R;
    for (int k = 0; k <= N; ++k) theta(zd + nn + 2 + k, zd + nn + 2 + k) = p.S;
    return theta;
}

CMatrix uncertainty_operator(cplx s, int order, int n, const WaveChannel& channel) {
    const int N = order, nn = n + N;
    CMatrix nabla = CMatrix::Zero(n + 2 * N + 3, n + N + 3);
    for (int i = 0; i < nn; ++i) nabla(i, i) = 1.0 / s;
    nabla(nn, nn) = std::exp(-channel.tau * s);
    nabla(nn + 1, nn + 1) = channel_delta(s, channel);
    nabla.block(nn + 2, nn + 2, N + 1, 1) = delta_n(s, channel.tau, N);
    return nabla;
}

SeparatorCheck separator_negativity_check(int order, int n, const WaveChannel& channel,
                                          const SeparatorParams& params, int sample_count) {
    const Matrix theta = assemble_separator(order, n, channel, params);
    const CMatrix ctheta = theta.cast<cplx>();
    const int zd = n + order + 3;
    const double scale = std::max(1.0, theta.cwiseAbs().maxCoeff());
    SeparatorCheck out;
    out.worst = -std::numeric_limits<double>::infinity();
    // sample_count points on the axis, then a quarter as many slightly inside the right half-plane.
    const int axis = std::max(1, sample_count);
    const int inner = std::max(1, sample_count / 4);
    for (int i = 0; i < axis + inner; ++i) {
        const int j = i < axis ? i : i - axis;
        const int count = i < axis ? axis : inner;
        const double w = std::pow(10.0, -3.0 + 6.0 * (count > 1 ? double(j) / (count - 1) : 0.5)) / channel.tau;
        const double sigma = i < axis ? 0.0 : 1e-3 / channel.tau;
        const cplx s(sigma, w);
        CMatrix stack(theta.rows(), zd);
        stack.topRows(zd).setIdentity();
        stack.bottomRows(theta.rows() - zd) = uncertainty_operator(s, order, n, channel);
        const CMatrix form = stack.adjoint() * ctheta * stack;
        Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (form + form.adjoint()), Eigen::EigenvaluesOnly);
        const double top = es.eigenvalues().maxCoeff();
        out.worst = std::max(out.worst, top);
        if (top > 1e-8 * scale) out.passed = false;
        ++out.samples;
    }
    return out;
}

namespace {

struct VarLayout {
    int nn;
    int p_count;
    int q, r, s, t;
    int total;
};

VarLayout layout(const QsProblem& qp) {
    VarLayout l{};
    l.nn = qp.n + qp.order;
    l.p_count = l.nn * (l.nn + 1) / 2;
    l.q = l.p_count;
    l.r = l.q + 1;
    l.s = l.r + 1;
    l.t = l.s + 1;
    l.total = l.t + 1;
    return l;
}

/// Sparse entries of Theta's derivative with respect to one decision variable.
struct Entry {
    int row, col;
    double value;
};

Matrix project(const Matrix& v, const std::vector<Entry>& entries) {
    Matrix m = Matrix::Zero(v.cols(), v.cols());
    for (const auto& en : entries) m.noalias() += en.value * v.row(en.row).transpose() * v.row(en.col);
    return 0.5 * (m + m.transpose());
}

}  // namespace

LmiProblem qs_lmi(const QsProblem& qp, const WaveChannel& channel) {
    const VarLayout l = layout(qp);
    const int zd = qp.z_dim, N = qp.order, nn = l.nn;
    const int k = static_cast<int>(qp.V.cols());
    const double a = channel.alpha, g = channel.gamma, tau = channel.tau;

    LmiProblem pb;
    pb.num_vars = l.total;
    pb.objective = Vector::Zero(l.total);
    pb.objective(l.t) = 1.0;
    pb.target = kQsStrictMargin;

    LmiBlock main{k, Matrix::Zero(k, k), {}};
    LmiBlock pblock{nn, -kQsPositivityMargin * Matrix::Identity(nn, nn), {}};
    int idx = 0;
    for (int j = 0; j < nn; ++j) {
        for (int i = j; i < nn; ++i, ++idx) {
            std::vector<Entry> en{{i, zd + j, -1.0}, {zd + j, i, -1.0}};
            Matrix pe = Matrix::Zero(nn, nn);
            pe(i, j) = 1.0;
            if (i != j) {
                en.push_back({j, zd + i, -1.0});
                en.push_back({zd + i, j, -1.0});
                pe(j, i) = 1.0;
            }
            main.terms.emplace_back(idx, project(qp.V, en));
            pblock.terms.emplace_back(idx, pe);
        }
    }
    main.terms.emplace_back(l.q, project(qp.V, {{nn, nn, -1.0}, {zd + nn, zd + nn, 1.0}}));
    main.terms.emplace_back(l.r, project(qp.V, {{nn + 1, nn + 1, (1.0 - a * a) * g * g},
                                                {nn + 1, zd + nn + 1, -g},
                                                {zd + nn + 1, nn + 1, -g},
                                                {zd + nn + 1, zd + nn + 1, 1.0}}));
    std::vector<Entry> s_entries{{nn + 2, nn + 2, -tau * tau}};
    for (int kk = 0; kk <= N; ++kk) s_entries.push_back({zd + nn + 2 + kk, zd + nn + 2 + kk, 1.0});
    main.terms.emplace_back(l.s, project(qp.V, s_entries));
    main.terms.emplace_back(l.t, -Matrix::Identity(k, k));

    pb.blocks.push_back(std::move(main));
    pb.blocks.push_back(std::move(pblock));
    for (int var : {l.q, l.r, l.s}) pb.blocks.push_back(LmiBlock{1, Matrix::Zero(1, 1), {{var, Matrix::Ones(1, 1)}}});

    // trace(P) + Q + R + S = 1 removes the scaling freedom of the homogeneous LMI.
    pb.eq_matrix = Matrix::Zero(1, l.total);
    idx = 0;
    for (int j = 0; j < nn; ++j)
        for (int i = j; i < nn; ++i, ++idx)
            if (i == j) pb.eq_matrix(0, idx) = 1.0;
    pb.eq_matrix(0, l.q) = pb.eq_matrix(0, l.r) = pb.eq_matrix(0, l.s) = 1.0;
    pb.eq_rhs = Vector::Ones(1);

    pb.start = Vector::Zero(l.total);
    idx = 0;
    for (int j = 0; j < nn; ++j)
        for (int i = j; i < nn; ++i, ++idx)
            if (i == j) pb.start(idx) = 0.25 / nn;
    pb.start(l.q) = pb.start(l.r) = pb.start(l.s) = 0.25;
    const Matrix m0 = pb.blocks[0].eval(pb.start);
    Eigen::SelfAdjointEigenSolver<Matrix> es(m0, Eigen::EigenvaluesOnly);
    pb.start(l.t) = es.eigenvalues()(0) - 1.0;
    return pb;
}

SeparatorParams unpack_witness(const QsProblem& qp, const Vector& x) {
    const VarLayout l = layout(qp);
    SeparatorParams p;
    p.P = Matrix::Zero(l.nn, l.nn);
    int idx = 0;
    for (int j = 0; j < l.nn; ++j)
        for (int i = j; i < l.nn; ++i, ++idx) p.P(i, j) = p.P(j, i) = x(idx);
    p.Q = x(l.q);
    p.R = x(l.r);
    p.S = x(l.s);
    return p;
}

QsReport qs_feasible(int order, const LtiPlant& plant, const WaveChannel& channel, const SdpBackend& backend) {
    if (!(std::abs(channel.alpha) < 1.0)) throw GateRefused("qs: |alpha| = 1, the channel is not damped");
    QsReport rep;
    rep.order = order;
    if (std::abs(channel.alpha) > 0.5)
        rep.warnings.push_back("|alpha| > 0.5: the disk bound on the neutral block is loose; expect weak results");
    const QsProblem qp = assemble_problem(order, plant, channel);
    const LmiProblem pb = qs_lmi(qp, channel);
    const SdpResult sol = backend.solve(pb);
    rep.newton_steps = sol.newton_steps;
    rep.status = backend.name() + ": " + to_string(sol.status) + " (" + sol.message + ")";
    if (sol.status != SdpStatus::Feasible) return rep;

    // Re-verify from scratch: rebuild Theta from the witness and project it.
    rep.witness = unpack_witness(qp, sol.x);
    const Matrix theta = assemble_separator(order, plant.n(), channel, rep.witness);
    const Matrix projected = qp.V.transpose() * theta * qp.V;
    Eigen::SelfAdjointEigenSolver<Matrix> es_m(0.5 * (projected + projected.transpose()), Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Matrix> es_p(rep.witness.P, Eigen::EigenvaluesOnly);
    rep.eigen_margins = {es_m.eigenvalues()(0), es_p.eigenvalues()(0)};
    const bool nonneg = rep.witness.Q >= -kQsWitnessTolerance && rep.witness.R >= -kQsWitnessTolerance &&
                        rep.witness.S >= -kQsWitnessTolerance;
    if (rep.eigen_margins[0] >= -kQsWitnessTolerance && rep.eigen_margins[1] >= -kQsWitnessTolerance && nonneg) {
        rep.verdict = QsVerdict::Stable;
    } else {
        rep.status += "; witness failed re-verification";
    }
    return rep;
}

std::string to_string(QsVerdict v) { return v == QsVerdict::Stable ? "stable" : "unknown"; }

}  // namespace wavestab
