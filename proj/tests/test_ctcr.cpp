#include "fixtures.hpp"
#include "oracles.hpp"
#include "wavestab/ctcr.hpp"
#include "wavestab/errors.hpp"

#include <doctest.h>

using namespace wavestab;

TEST_SUITE("ctcr") {
    TEST_CASE("transformed polynomial equals c_eq on the axis under the Rekasius map") {
        const LtiPlant p = fixtures::two_mass();
        const double c1 = 0.7;
        const TransformedPoly tp = transformed_poly(p, c1);
        const QuasiPolynomial q = build_ceq(reduced_plant_tf(p), c1, 1.0);
        for (double w : {0.4, 1.3, 2.9}) {
            for (double T : {-0.8, 0.3, 2.0}) {
                // e^{-tau s} = (1 - T s) / (1 + T s) on s = i w for tau = 2 atan(w T) / w (mod 2 pi / w).
                double tau = 2.0 * std::atan(w * T) / w;
                if (tau <= 0) tau += 2.0 * oracles::kPi / w;
                const cplx s(0.0, w);
                const cplx lhs = tp(s, T);
                const cplx rhs = 0.5 * q.eval(s, tau) * (1.0 + T * s) * (1.0 + T * s);
                CHECK(std::abs(lhs - rhs) < 1e-9 * std::max(1.0, std::abs(rhs)));
            }
        }
    }

    TEST_CASE("retarded crossings match the quadratic oracle") {
        // c1 = 1: |D(i w)| = |N(i w)| with D = s^2 - 0.1 s + 2, N = 1 gives
        // w^4 - 3.99 w^2 + 3 = 0.
        const auto set = crossing_set(fixtures::oscillator(), 1.0);
        REQUIRE(set.size() == 2);
        std::vector<double> w2{set[0].omega * set[0].omega, set[1].omega * set[1].omega};
        std::sort(w2.begin(), w2.end());
        const double disc = std::sqrt(3.99 * 3.99 - 12.0);
        CHECK(w2[0] == doctest::Approx((3.99 - disc) / 2).epsilon(1e-10));
        CHECK(w2[1] == doctest::Approx((3.99 + disc) / 2).epsilon(1e-10));
        CHECK(count_unstable_at_zero(fixtures::oscillator()) == 2);
    }

    TEST_CASE("delays follow tau = 2 (atan(w T) + l pi) / w") {
        const auto d = delays_for_crossing(2.0, 0.5, 10.0);
        REQUIRE(d.size() >= 3);
        CHECK(d[0] == doctest::Approx(std::atan(1.0)));
        CHECK(d[1] - d[0] == doctest::Approx(oracles::kPi));
        const auto neg = delays_for_crossing(2.0, -0.5, 10.0);
        CHECK(neg[0] == doctest::Approx(std::atan(-1.0) + oracles::kPi));
    }

    TEST_CASE("crossing delays agree with a dense frequency sweep") {
        struct Case {
            LtiPlant plant;
            double c1;
        };
        const std::vector<Case> cases{{fixtures::two_mass(), 1.0}, {fixtures::two_mass(), 0.6},
                                      {fixtures::oscillator(), 1.0}, {fixtures::oscillator(), 1.8},
                                      {fixtures::oscillator(), 0.4}, {fixtures::first_order(), 0.3}};
        for (const auto& c : cases) {
            const StabilityAccount acc = stable_intervals(c.plant, c.c1, 6.0);
            const auto mine = acc.crossing_delays();
            const auto ref = oracles::sweep_crossing_delays(build_ceq(reduced_plant_tf(c.plant), c.c1, 1.0), 6.0);
            INFO("c1 = " << c.c1);
            REQUIRE(mine.size() == ref.size());
            for (std::size_t i = 0; i < ref.size(); ++i) CHECK(mine[i] == doctest::Approx(ref[i]).epsilon(1e-8));
        }
    }

    TEST_CASE("root tendency matches root tracking") {
        const LtiPlant p = fixtures::two_mass();
        for (double c1 : {1.0, 0.6, 1.7}) {
            const QuasiPolynomial q = build_ceq(reduced_plant_tf(p), c1, 1.0);
            for (const Crossing& cr : crossing_set(p, c1)) {
                const Tendency t = root_tendency(q, cr.omega, cr.T);
                for (double tau : first_delays(cr.omega, cr.T, 2)) {
                    const double v = oracles::tracked_real_velocity(q, cplx(0.0, cr.omega), tau);
                    CHECK((v > 0) == (t == Tendency::Destabilizing));
                }
            }
        }
    }

    TEST_CASE("interval counts agree with the argument principle") {
        struct Case {
            LtiPlant plant;
            double c1;
        };
        const std::vector<Case> cases{{fixtures::oscillator(), 1.0}, {fixtures::two_mass(), 1.0},
                                      {fixtures::oscillator(), 0.7}, {fixtures::two_mass(), 1.4}};
        for (const auto& c : cases) {
            const StabilityAccount acc = stable_intervals(c.plant, c.c1, 5.0);
            const QuasiPolynomial q = build_ceq(reduced_plant_tf(c.plant), c.c1, 1.0);
            for (const auto& iv : acc.intervals) {
                const double mid = 0.5 * (iv.lo + iv.hi);
                INFO("c1 = " << c.c1 << " tau = " << mid);
                CHECK(oracles::rhp_root_count(q, mid) == iv.unstable_count);
            }
        }
    }

    TEST_CASE("oscillator at c1 = 1: stabilized between two crossings") {
        const StabilityAccount acc = stable_intervals(fixtures::oscillator(), 1.0, 5.0);
        CHECK(acc.nu_at_zero == 2);
        const auto st = acc.stable_intervals();
        REQUIRE(st.size() == 1);
        CHECK(st[0].lo == doctest::Approx(0.100168).epsilon(1e-5));
        CHECK(st[0].hi == doctest::Approx(1.71786).epsilon(1e-5));
        CHECK_FALSE(acc.stable_at(0.05));
        CHECK(acc.stable_at(1.0));
    }

    TEST_CASE("two-mass system has pockets at c1 = 1") {
        const StabilityAccount acc = stable_intervals(fixtures::two_mass(), 1.0, 5.0);
        CHECK(acc.stable_intervals().size() >= 2);
    }

    TEST_CASE("unstable cancelled mode keeps every delay unstable") {
        Matrix a(2, 2);
        a << 1, 0, 0, -1;
        Vector b(2);
        b << 1, 1;
        RowVector k(2);
        k << 0, 0.5;
        const StabilityAccount acc = stable_intervals(LtiPlant(a, b, k), 1.0, 3.0);
        CHECK(acc.nu_at_zero >= 1);
        for (double tau : {0.1, 1.0, 2.9}) CHECK_FALSE(acc.stable_at(tau));
    }

    TEST_CASE("marginal delay-free root is reported") {
        // D - N = s^2 + 1: roots on the axis at tau = 0.
        Matrix a(2, 2);
        a << 0, 1, -2, 0;
        Vector b(2);
        b << 0, 1;
        RowVector k(2);
        k << 1, 0;
        CHECK_THROWS_AS(stable_intervals(LtiPlant(a, b, k), 1.0, 2.0), MarginalAtZero);
    }

    TEST_CASE("delay outside the analysed range") {
        const StabilityAccount acc = stable_intervals(fixtures::oscillator(), 1.0, 2.0);
        CHECK_THROWS_AS(acc.unstable_count_at(2.5), DomainError);
        CHECK_THROWS_AS(acc.unstable_count_at(0.0), DomainError);
    }
}
