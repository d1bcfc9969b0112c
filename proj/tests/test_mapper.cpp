#include "fixtures.hpp"
#include "wavestab/errors.hpp"
#include "wavestab/mapper.hpp"

#include <doctest.h>
#include <json.hpp>

#include <sstream>

using namespace wavestab;

namespace {

// The first-order fixture has ||H||_inf = H(0) = 20/21, attained at zero frequency.
constexpr double kFirstOrderGain = 20.0 / 21.0;

std::string csv(const MapTable& t) {
    std::ostringstream os;
    write_csv(os, t);
    return os.str();
}

GridSpec oscillator_grid(int nx, int ny) {
    GridSpec g;
    g.x = {0.5, 1.5, nx};
    g.y = {0.05, 3.0, ny};
    g.methods.ctcr = true;
    g.methods.smallgain = true;
    g.methods.sim = true;
    g.methods.qs_orders = {0, 2};
    return g;
}

GridSpec first_order_c0c(int nx, int ny) {
    GridSpec g;
    g.mode = CoordMode::C0C;
    g.x = {0.5, 5.0, nx};
    g.y = {0.2, 4.0, ny};
    g.methods.smallgain = true;
    return g;
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_SUITE("mapper") {
    TEST_CASE("parallel sweep is identical to the serial one") {
        BarrierSdpSolver solver;
        SweepOptions opts;
        opts.backend = &solver;
        const GridSpec g = oscillator_grid(4, 5);
        const MapTable a = sweep_serial(fixtures::oscillator(), g, opts);
        const MapTable b = sweep(fixtures::oscillator(), g, opts);
        opts.jobs = 3;
        const MapTable c = sweep(fixtures::oscillator(), g, opts);
        CHECK(csv(a) == csv(b));
        CHECK(csv(a) == csv(c));
        for (std::size_t i = 0; i < a.cells.size(); ++i) {
            CHECK(a.cells[i].boundary == b.cells[i].boundary);
            CHECK(a.cells[i].qs_min_order == b.cells[i].qs_min_order);
        }
    }

    TEST_CASE("grid validation") {
        GridSpec g = oscillator_grid(3, 3);
        CHECK_THROWS_AS(sweep(fixtures::oscillator(), g), DomainError);  // QS without a backend
        g.methods.qs_orders.clear();
        g.x.count = 1;
        CHECK_THROWS_AS(sweep(fixtures::oscillator(), g), DomainError);
        g.x = {1.0, 0.5, 3};
        CHECK_THROWS_AS(sweep(fixtures::oscillator(), g), DomainError);
        g.x = {0.5, 1.0, 3};
        SweepOptions opts;
        opts.skip.assign(4, false);
        CHECK_THROWS_AS(sweep(fixtures::oscillator(), g, opts), DomainError);
    }

    TEST_CASE("no methods yields empty rows") {
        GridSpec g;
        g.x = {0.5, 1.0, 3};
        g.y = {0.1, 1.0, 3};
        const MapTable t = sweep(fixtures::two_mass(), g);
        CHECK(t.cells.size() == 9);
        for (const auto& c : t.cells) CHECK(c.results.empty());
        CHECK(csv(t) == "c1,tau,method,order,verdict,detail\n");
    }

    TEST_CASE("small-gain region follows c c0 > ||H||_inf") {
        const MapTable t = sweep(fixtures::first_order(), first_order_c0c(7, 9));
        for (const auto& c : t.cells) {
            const double prod = c.c * c.c0;
            if (std::abs(prod - kFirstOrderGain) < 1e-9) continue;
            INFO("c0 = " << c.c0 << " c = " << c.c);
            CHECK(c.stable_by("smallgain") == (prod > kFirstOrderGain));
            CHECK(c.c1 == doctest::Approx(prod));
            CHECK(c.tau == doctest::Approx(1.0 / c.c));
        }
    }

    TEST_CASE("c_min per column") {
        const GridSpec g = first_order_c0c(10, 20);
        const MapTable t = sweep(fixtures::first_order(), g);
        const auto cm = cmin_extraction(t, "smallgain");
        REQUIRE(cm.size() == 10);
        for (int ix = 0; ix < g.x.count; ++ix) {
            const double c0 = g.x.at(ix);
            double expect = kAboveRange;
            for (int iy = g.y.count - 1; iy >= 0 && g.y.at(iy) * c0 > kFirstOrderGain; --iy) expect = g.y.at(iy);
            CHECK(cm[static_cast<std::size_t>(ix)].c0 == c0);
            CHECK(cm[static_cast<std::size_t>(ix)].c_min == expect);
            if (expect != kAboveRange) CHECK(expect - kFirstOrderGain / c0 <= g.y.step() + 1e-12);
        }
        GridSpec above = g;
        above.x = {0.01, 0.02, 2};
        const auto none = cmin_extraction(sweep(fixtures::first_order(), above), "smallgain");
        for (const auto& s : none) CHECK(s.c_min == kAboveRange);
        GridSpec plane = g;
        plane.mode = CoordMode::C1Tau;
        CHECK_THROWS_AS(cmin_extraction(sweep(fixtures::first_order(), plane), "smallgain"), DomainError);
    }

    TEST_CASE("stability pockets along tau") {
        GridSpec g;
        g.x = {1.0, 1.5, 2};
        g.y = {0.2, 3.8, 37};  // step 0.1
        g.methods.ctcr = true;
        const MapTable t = sweep(fixtures::two_mass(), g);
        auto verdict_at = [&](double tau) {
            const int iy = static_cast<int>(std::lround((tau - 0.2) / 0.1));
            return t.at(0, iy).stable_by("ctcr");
        };
        CHECK(verdict_at(1.0));
        CHECK_FALSE(verdict_at(2.0));
        CHECK(verdict_at(3.3));
        // Crossings near 1.4247 and 2.6722 fall in the cells centred at 1.4 and 2.7.
        CHECK(t.at(0, 12).boundary);
        CHECK(t.at(0, 25).boundary);
        CHECK_FALSE(t.at(0, 8).boundary);
        CHECK_FALSE(t.at(0, 31).boundary);
    }

    TEST_CASE("skip mask leaves cells untouched") {
        GridSpec g = oscillator_grid(3, 4);
        g.methods.qs_orders.clear();
        g.methods.sim = false;
        SweepOptions opts;
        opts.skip.assign(g.cell_count(), false);
        opts.skip[1] = opts.skip[6] = true;
        const MapTable full = sweep(fixtures::oscillator(), g);
        const MapTable part = sweep(fixtures::oscillator(), g, opts);
        for (std::size_t i = 0; i < full.cells.size(); ++i) {
            if (opts.skip[i]) {
                CHECK_FALSE(part.cells[i].computed);
                CHECK(part.cells[i].results.empty());
            } else {
                std::ostringstream x, y;
                write_csv_rows(x, full.cells[i]);
                write_csv_rows(y, part.cells[i]);
                CHECK(x.str() == y.str());
            }
        }
    }

    TEST_CASE("CSV layout and quoting") {
        CHECK(format_number(0.1) == "0.10000000000000001");
        CHECK(format_number(2.0) == "2");
        MapCell cell;
        cell.c1 = 0.5;
        cell.tau = 1.0;
        cell.results.push_back({"qs", 3, "unknown", "barrier: infeasible (a, \"b\")"});
        cell.results.push_back({"ctcr", -1, "stable", "unstable_roots=0"});
        std::ostringstream os;
        write_csv_rows(os, cell);
        CHECK(os.str() ==
              "0.5,1,qs,3,unknown,\"barrier: infeasible (a, \"\"b\"\")\"\n"
              "0.5,1,ctcr,,stable,unstable_roots=0\n");

        BarrierSdpSolver solver;
        SweepOptions opts;
        opts.backend = &solver;
        const MapTable t = sweep(fixtures::oscillator(), oscillator_grid(2, 3), opts);
        const std::string text = csv(t);
        CHECK(line_count(text) == 1 + 6 * 5);  // ctcr, smallgain, qs 0, qs 2, sim
    }

    TEST_CASE("JSON and gnuplot exports") {
        BarrierSdpSolver solver;
        SweepOptions opts;
        opts.backend = &solver;
        const MapTable t = sweep(fixtures::oscillator(), oscillator_grid(2, 3), opts);
        std::ostringstream js;
        write_json(js, t);
        const auto doc = nlohmann::json::parse(js.str());
        CHECK(doc["grid"]["coords"] == "c1tau");
        CHECK(doc["cells"].size() == 6);
        CHECK(doc["methods"]["ctcr"].size() == 6);
        CHECK(doc["methods"]["qs"]["0"].size() == 6);
        CHECK(doc["methods"]["qs"]["2"].size() == 6);

        std::ostringstream gp;
        write_gnuplot_matrix(gp, t, "ctcr");
        std::istringstream is(gp.str());
        std::string first;
        std::getline(is, first);
        CHECK(first == "3 0.5 1.5");
        CHECK(line_count(gp.str()) == 4);
    }

    TEST_CASE("near_boundary covers the neighbourhood") {
        GridSpec g;
        g.x = {1.0, 1.2, 3};
        g.y = {0.2, 3.8, 37};
        g.methods.ctcr = true;
        const MapTable t = sweep(fixtures::two_mass(), g);
        for (int iy = 0; iy < g.y.count; ++iy) {
            if (!t.at(1, iy).boundary) continue;
            CHECK(t.near_boundary(1, iy));
            CHECK(t.near_boundary(0, iy));
            if (iy > 0) CHECK(t.near_boundary(1, iy - 1));
        }
        CHECK_FALSE(t.near_boundary(1, 5));
    }

    TEST_CASE("validation passes and catches an injected fault") {
        BarrierSdpSolver solver;
        SweepOptions opts;
        opts.backend = &solver;
        GridSpec g = oscillator_grid(6, 8);
        g.methods.sim = false;
        g.methods.qs_orders = {0, 1};
        const MapTable t = sweep(fixtures::oscillator(), g, opts);
        ValidationOptions vo;
        vo.samples = 8;
        vo.seed = 11;
        const ValidationReport ok = validate_table(fixtures::oscillator(), t, vo);
        CHECK(ok.passed());
        CHECK(ok.cells_checked == t.cells.size());
        CHECK(ok.sim_samples == 8);
        CHECK(ok.sim_agree + ok.sim_inconclusive == 8);

        vo.inject_fault = true;
        const ValidationReport bad = validate_table(fixtures::oscillator(), t, vo);
        CHECK_FALSE(bad.passed());

        GridSpec no_ctcr = g;
        no_ctcr.methods.ctcr = false;
        MapTable stripped = t;
        stripped.grid = no_ctcr;
        CHECK_THROWS_AS(validate_table(fixtures::oscillator(), stripped, vo), DomainError);
    }
}
