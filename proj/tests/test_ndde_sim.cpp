#include "fixtures.hpp"
#include "wavestab/errors.hpp"
#include "wavestab/ndde_sim.hpp"

#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <sstream>

using namespace wavestab;

namespace {

Vector final_state(const CoupledSystem& sys, int m, double t_end, const Vector& x0) {
    SimConfig cfg;
    cfg.steps_per_tau = m;
    cfg.t_end = t_end;
    cfg.x0 = x0;
    return simulate(sys, cfg).states.back();
}

}  // namespace

TEST_SUITE("ndde_sim") {
    TEST_CASE("no coupling reduces to the matrix exponential") {
        const LtiPlant osc = fixtures::oscillator();
        const LtiPlant p(osc.A(), Vector::Zero(2), osc.K());
        const CoupledSystem sys{p, channel_from_c1_tau(0.6, 0.5)};
        Vector x0(2);
        x0 << 1.0, -0.5;
        SimConfig cfg;
        cfg.steps_per_tau = 40;
        cfg.t_end = 6.0;
        // A history that already solves X' = A X keeps the neutral terms consistent.
        cfg.history = [&](double th) -> Vector { return (p.A() * th).exp() * x0; };
        cfg.history_derivative = [&](double th) -> Vector { return p.A() * (p.A() * th).exp() * x0; };
        const Trajectory tr = simulate(sys, cfg);
        for (std::size_t i = 0; i < tr.times.size(); i += 17) {
            const Vector ref = (p.A() * tr.times[i]).exp() * x0;
            CHECK((tr.states[i] - ref).norm() < 1e-6 * std::max(1.0, ref.norm()));
        }
    }

    TEST_CASE("first delay interval matches the affine closed form") {
        // On [0, tau) the delayed terms are the constant history, so
        // X' = A X + v with v = (2 / (1 + c1)) B K x0 + alpha A x0.
        const LtiPlant p = fixtures::oscillator();
        const double c1 = 0.7, tau = 0.8;
        const WaveChannel ch = channel_from_c1_tau(c1, tau);
        Vector x0(2);
        x0 << 0.3, 1.0;
        SimConfig cfg;
        cfg.steps_per_tau = 160;
        cfg.t_end = tau;
        cfg.x0 = x0;
        const Trajectory tr = simulate(CoupledSystem{p, ch}, cfg);
        const Vector v = 2.0 / (1.0 + c1) * p.B() * (p.K() * x0) + ch.alpha * p.A() * x0;
        const Matrix ainv = p.A().inverse();
        for (std::size_t i = 0; i < tr.times.size(); ++i) {
            const double t = tr.times[i];
            if (t >= tau - 1e-12) break;
            const Matrix e = (p.A() * t).exp();
            const Vector ref = e * x0 + ainv * (e - Matrix::Identity(2, 2)) * v;
            CHECK((tr.states[i] - ref).norm() < 1e-9);
        }
    }

    TEST_CASE("fourth-order convergence under step halving") {
        const CoupledSystem sys{fixtures::oscillator(), channel_from_c1_tau(1.3, 0.7)};
        const Vector x0 = Vector::Ones(2);
        const double t_end = 7.0;
        const Vector a = final_state(sys, 20, t_end, x0);
        const Vector b = final_state(sys, 40, t_end, x0);
        const Vector c = final_state(sys, 80, t_end, x0);
        const double rate = std::log2((a - b).norm() / (b - c).norm());
        INFO("observed order " << rate);
        CHECK(rate >= 3.5);
    }

    TEST_CASE("superposition") {
        const CoupledSystem sys{fixtures::two_mass(), channel_from_c1_tau(0.8, 0.9)};
        Vector u(4), v(4);
        u << 1, 0, -1, 2;
        v << 0.5, 3, 0, -1;
        const Vector xu = final_state(sys, 20, 10.0, u);
        const Vector xv = final_state(sys, 20, 10.0, v);
        const Vector xs = final_state(sys, 20, 10.0, 2.0 * u - v);
        CHECK((xs - (2.0 * xu - xv)).norm() <= 1e-10 * std::max(1.0, xs.norm()));
    }

    TEST_CASE("classification of reference points") {
        auto run = [](const LtiPlant& p, const WaveChannel& ch) {
            SimConfig cfg;
            cfg.steps_per_tau = 20;
            cfg.t_end = std::max(50.0 * ch.tau, 150.0);
            cfg.x0 = Vector::Ones(p.n());
            return classify_trajectory(simulate(CoupledSystem{p, ch}, cfg));
        };
        CHECK(run(fixtures::oscillator(), channel_from_c1_tau(1.0, 0.05)) == TrajectoryClass::Growing);
        CHECK(run(fixtures::first_order(), make_channel(2.0, 1.0)) == TrajectoryClass::Decaying);
        CHECK(run(fixtures::two_mass(), channel_from_c1_tau(1.0, 3.3)) == TrajectoryClass::Decaying);
        CHECK(run(fixtures::two_mass(), channel_from_c1_tau(1.0, 2.0)) == TrajectoryClass::Growing);
    }

    TEST_CASE("divergence cap stops the run") {
        SimConfig cfg;
        cfg.t_end = 1e4;
        cfg.x0 = Vector::Ones(2);
        const Trajectory tr = simulate(CoupledSystem{fixtures::oscillator(), channel_from_c1_tau(1.0, 0.05)}, cfg);
        CHECK(tr.diverged);
        CHECK(tr.times.back() < cfg.t_end);
        CHECK(classify_trajectory(tr) == TrajectoryClass::Growing);
    }

    TEST_CASE("gate and configuration errors") {
        SimConfig cfg;
        cfg.x0 = Vector::Ones(2);
        CHECK_THROWS_AS(simulate(CoupledSystem{fixtures::first_order(), make_channel(1.0, 0.0)}, cfg), GateRefused);
        cfg.steps_per_tau = 10;
        CHECK_THROWS_AS(simulate(CoupledSystem{fixtures::first_order(), make_channel(1.0, 1.0)}, cfg), DomainError);
        cfg.steps_per_tau = 20;
        cfg.x0 = Vector::Ones(3);
        CHECK_THROWS_AS(simulate(CoupledSystem{fixtures::first_order(), make_channel(1.0, 1.0)}, cfg), DomainError);
    }

    TEST_CASE("trajectory CSV") {
        SimConfig cfg;
        cfg.t_end = 1.0;
        cfg.x0 = Vector::Ones(2);
        const Trajectory tr = simulate(CoupledSystem{fixtures::first_order(), make_channel(2.0, 1.0)}, cfg);
        std::ostringstream os;
        write_trajectory_csv(os, tr);
        std::istringstream is(os.str());
        std::string line;
        std::getline(is, line);
        CHECK(line == "t,x1,x2,norm");
        std::size_t rows = 0;
        while (std::getline(is, line)) ++rows;
        CHECK(rows == tr.times.size());
    }
}
