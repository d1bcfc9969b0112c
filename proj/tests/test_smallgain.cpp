#include "fixtures.hpp"
#include "wavestab/errors.hpp"
#include "wavestab/smallgain.hpp"
#include "wavestab/transfer.hpp"

#include <doctest.h>

using namespace wavestab;

namespace {

/// max |H(i w)| on a log grid refined by golden-section search around the best sample.
double sweep_peak(const LtiPlant& p, double* where = nullptr) {
    double best = std::abs(plant_response(p, 0.0)), wbest = 0.0;
    for (int i = 0; i <= 20000; ++i) {
        const double w = std::pow(10.0, -4.0 + 8.0 * i / 20000.0);
        const double v = std::abs(plant_response(p, cplx(0.0, w)));
        if (v > best) {
            best = v;
            wbest = w;
        }
    }
    if (wbest > 0.0) {
        double a = wbest * 0.99, b = wbest * 1.01;
        const double g = (std::sqrt(5.0) - 1.0) / 2.0;
        for (int it = 0; it < 200; ++it) {
            const double c = b - g * (b - a), d = a + g * (b - a);
            if (std::abs(plant_response(p, cplx(0.0, c))) > std::abs(plant_response(p, cplx(0.0, d))))
                b = d;
            else
                a = c;
        }
        const double w = 0.5 * (a + b);
        best = std::max(best, std::abs(plant_response(p, cplx(0.0, w))));
        wbest = w;
    }
    if (where) *where = wbest;
    return best;
}

LtiPlant resonant() {
    Matrix a(2, 2);
    a << 0, 1, -4, -0.2;
    Vector b(2);
    b << 0, 1;
    RowVector k(2);
    k << 1.5, 0;
    return LtiPlant(a, b, k);
}

}  // namespace

TEST_SUITE("smallgain") {
    TEST_CASE("first-order plant: 20/21 at zero frequency") {
        const HinfResult h = hinf_norm(fixtures::first_order());
        CHECK(h.norm == doctest::Approx(20.0 / 21.0).epsilon(1e-6));
        CHECK(hinf_norm(fixtures::first_order(), 1e-11).norm == doctest::Approx(20.0 / 21.0).epsilon(1e-10));
        CHECK(std::abs(h.peak_frequency) < 1e-4);
        CHECK(h.norm - h.lower_bound <= 1e-6 * h.norm);
    }

    TEST_CASE("resonant plant against a frequency sweep") {
        double w_ref = 0.0;
        const double ref = sweep_peak(resonant(), &w_ref);
        const HinfResult h = hinf_norm(resonant());
        CHECK(h.norm == doctest::Approx(ref).epsilon(2e-6));
        CHECK(h.peak_frequency == doctest::Approx(w_ref).epsilon(1e-3));
        for (int i = 0; i < 1000; ++i) {
            const double w = std::pow(10.0, -3.0 + 6.0 * i / 999.0);
            CHECK(h.norm >= std::abs(plant_response(resonant(), cplx(0.0, w))) * (1.0 - 1e-12));
        }
    }

    TEST_CASE("Hamiltonian test brackets the norm") {
        const LtiPlant p = resonant();
        const double ref = sweep_peak(p);
        CHECK(hamiltonian_has_axis_eigenvalue(p, 0.99 * ref));
        CHECK_FALSE(hamiltonian_has_axis_eigenvalue(p, 1.01 * ref));
    }

    TEST_CASE("zero output map has zero norm") {
        const LtiPlant p(fixtures::first_order().A(), fixtures::first_order().B(), RowVector::Zero(2));
        CHECK(hinf_norm(p).norm < 1e-12);
    }

    TEST_CASE("unstable A is rejected") {
        CHECK_THROWS_AS(hinf_norm(fixtures::oscillator()), NotHurwitz);
        CHECK_FALSE(is_hurwitz(fixtures::oscillator().A()));
        CHECK(is_hurwitz(fixtures::first_order().A()));
    }

    TEST_CASE("verdicts") {
        const LtiPlant p = fixtures::first_order();
        CHECK(small_gain_verdict({p, make_channel(2.0, 1.0)}).verdict == SmallGainVerdict::Stable);
        CHECK(small_gain_verdict({p, make_channel(0.5, 1.0)}).verdict == SmallGainVerdict::Inconclusive);
        CHECK(small_gain_verdict({fixtures::oscillator(), make_channel(2.0, 1.0)}).verdict ==
              SmallGainVerdict::Inapplicable);
    }

    TEST_CASE("c_min bound scales as 1 / c0") {
        const auto curve = cmin_curve(fixtures::first_order(), {1.0, 2.0, 1e6});
        CHECK(curve[0].c_min_bound == doctest::Approx(20.0 / 21.0).epsilon(1e-6));
        CHECK(curve[1].c_min_bound == doctest::Approx(curve[0].c_min_bound / 2.0));
        CHECK(curve[2].c_min_bound == doctest::Approx(20.0 / 21.0 * 1e-6).epsilon(1e-6));
        CHECK_THROWS_AS(cmin_curve(fixtures::oscillator(), {1.0}), GateRefused);
    }
}
