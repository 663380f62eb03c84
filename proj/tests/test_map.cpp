#include <catch2/catch_amalgamated.hpp>

#include "thermoscope/map.hpp"
#include "oracles.hpp"

#include <random>

using namespace thermoscope;
using Catch::Approx;

namespace {
const MapParams mp1(1.0);
}

TEST_CASE("branch point solves x(1+x^alpha) = 1") {
    CHECK(mp1.x1 == Approx(0.6180339887498949).epsilon(1e-12));
    CHECK(std::fabs(mp1.x1 * (1.0 + mp1.x1) - 1.0) < mp1.solver_tol);
    for (double a : {0.5, 2.0, 3.7}) {
        MapParams mp(a);
        CHECK(std::fabs(mp.x1 * (1.0 + std::pow(mp.x1, a)) - 1.0) < mp.solver_tol);
    }
}

TEST_CASE("map_forward fixed points and left branch value") {
    CHECK(map_forward(0.0, mp1) == 0.0);
    CHECK(map_forward(1.0, mp1) == Approx(1.0).margin(1e-15));
    CHECK(map_forward(0.5, mp1) == Approx(0.75).margin(1e-15)); // 0.5 * 1.5 <= 1
    CHECK_THROWS_AS(map_forward(-0.1, mp1), std::domain_error);
    CHECK_THROWS_AS(map_forward(1.1, mp1), std::domain_error);
}

TEST_CASE("map_derivative matches finite differences and is expanding") {
    CHECK(map_derivative(0.0, mp1) == 1.0);
    CHECK(map_derivative(1.0, mp1) == Approx(3.0));
    double x1 = oracles::mp_g0(1.0, 1.0);
    CHECK(map_derivative(x1, mp1) == Approx(std::sqrt(5.0)).epsilon(1e-12));
    // finite differences of the forward map away from the branch point
    for (double x : {0.1, 0.3, 0.55, 0.7, 0.9}) {
        double h = 1e-7;
        double fd = (oracles::mp_forward(x + h, 1.0) - oracles::mp_forward(x - h, 1.0)) / (2.0 * h);
        CHECK(map_derivative(x, mp1) == Approx(fd).epsilon(1e-5));
    }
    for (double x = 1e-8; x <= 1.0; x += 0.01) CHECK(map_derivative(x, mp1) > 1.0);
}

TEST_CASE("inverse branches against bisection oracles") {
    CHECK(inverse_branch(0.0, 0, mp1) == 0.0);
    CHECK(inverse_branch(1.0, 0, mp1) == Approx(oracles::mp_g0(1.0, 1.0)).epsilon(1e-12));
    double x1 = mp1.x1;
    CHECK(inverse_branch(x1, 1, mp1) == Approx(0.8667603991738621).epsilon(1e-10));
    CHECK(inverse_branch(x1, 1, mp1) == Approx(oracles::mp_g1(x1, 1.0)).epsilon(1e-12));
    CHECK_THROWS_AS(inverse_branch(0.0, 1, mp1), std::domain_error);
    CHECK_THROWS_AS(inverse_branch(-0.2, 0, mp1), std::domain_error);
    // monotone in target
    double prev = 0.0;
    for (double t = 0.05; t <= 1.0; t += 0.05) {
        double g = inverse_branch(t, 0, mp1);
        CHECK(g > prev);
        prev = g;
    }
}

TEST_CASE("marked orbit basics") {
    MarkedOrbit ob0 = build_marked_orbit(mp1, 0);
    REQUIRE(ob0.xs.size() == 1);
    CHECK(ob0.xs[0] == 1.0);

    MarkedOrbit ob = build_marked_orbit(mp1, 64);
    // x2 by two nested bisections, independent route
    double x2 = oracles::mp_g0(oracles::mp_g0(1.0, 1.0), 1.0);
    CHECK(ob.x(2) == Approx(x2).epsilon(1e-12));
    CHECK(ob.x(2) == Approx(0.4316834165905793).epsilon(1e-12));
    CHECK(ob.y(1) == 1.0);
    CHECK(ob.y(2) == Approx(0.8667603991738621).epsilon(1e-10));
    CHECK(ob.y(3) == Approx(0.7967973691331191).epsilon(1e-10));
    // strict decrease and residuals
    for (std::size_t j = 1; j <= 64; ++j) {
        CHECK(ob.x(j) < ob.x(j - 1));
        CHECK(std::fabs(map_forward(ob.x(j), mp1) - ob.x(j - 1)) < 10.0 * mp1.solver_tol);
    }
    for (std::size_t n = 2; n <= 64; ++n) {
        CHECK(ob.y(n) > mp1.x1);
        CHECK(ob.y(n) < ob.y(n - 1));
        CHECK(std::fabs(map_forward(ob.y(n), mp1) - ob.x(n - 1)) < 10.0 * mp1.solver_tol);
    }
}

TEST_CASE("marked point asymptotics n x_n^alpha -> 1/alpha") {
    MarkedOrbit ob = build_marked_orbit(mp1, 10000);
    CHECK(std::fabs(1e4 * ob.x(10000) - 1.0) <= 0.01);
    for (double a : {0.5, 2.0}) {
        MapParams mp(a);
        MarkedOrbit obn = build_marked_orbit(mp, 3000);
        double v = 3000.0 * std::pow(obn.x(3000), a);
        CHECK(std::fabs(v - 1.0 / a) <= 0.05 / a);
    }
}

TEST_CASE("cylinders from words") {
    Cylinder c0 = cylinder_from_word("0", mp1);
    CHECK(c0.lo == 0.0);
    CHECK(c0.hi == Approx(mp1.x1).epsilon(1e-12));
    CHECK(c0.closed_left);

    MarkedOrbit ob = build_marked_orbit(mp1, 8);
    for (int n = 1; n <= 8; ++n) {
        Cylinder c = cylinder_from_word(std::string(n, '0'), mp1);
        CHECK(c.lo == 0.0);
        CHECK(c.hi == Approx(ob.x(n)).epsilon(1e-12));
    }

    Cylinder c10 = cylinder_from_word("10", mp1);
    CHECK_FALSE(c10.closed_left);
    CHECK(c10.lo == Approx(mp1.x1).epsilon(1e-12));
    CHECK(c10.hi == Approx(0.8667603991738621).epsilon(1e-10));
    // both endpoints' two-step itineraries start as the word says (right
    // endpoint is inside; the open left endpoint is approached from above)
    CHECK(itinerary(c10.hi, 2, mp1) == "10");
    CHECK(itinerary(0.5 * (c10.lo + c10.hi), 2, mp1) == "10");
}

TEST_CASE("itineraries") {
    CHECK(itinerary(0.0, 5, mp1) == "00000");
    CHECK(itinerary(1.0, 5, mp1) == "11111");
    CHECK(itinerary(0.5, 2, mp1) == "01");
}

TEST_CASE("derivative products") {
    CHECK(derivative_along(1.0, 3, mp1) == Approx(27.0).epsilon(1e-12));
    for (double x : {0.2, 0.5, 0.9})
        CHECK(derivative_along(x, 1, mp1) == Approx(map_derivative(x, mp1)));
    // log-scale variant agrees and survives deep products
    MarkedOrbit ob = build_marked_orbit(mp1, 4000);
    double ld = log_derivative_along(ob.x(4000), 4000, mp1);
    CHECK(ld > 0.0);
    CHECK(std::isfinite(ld));
}

TEST_CASE("branch consistency: inverse of forward returns the point") {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        double x = u(oracles::rng());
        int branch = itinerary(x, 1, mp1)[0] - '0';
        double y = map_forward(x, mp1);
        if (branch == 1 && y == 0.0) continue; // x = 1 maps to the branch seam
        double back = inverse_branch(y, branch, mp1);
        CHECK(std::fabs(back - x) < 10.0 * mp1.solver_tol);
    }
}

TEST_CASE("depth-n cylinders tile (0,1]") {
    for (int n : {6, 10, 14}) {
        std::vector<Cylinder> cs;
        for (int w = 0; w < (1 << n); ++w) {
            std::string word;
            for (int k = n - 1; k >= 0; --k) word.push_back((w >> k) & 1 ? '1' : '0');
            cs.push_back(cylinder_from_word(word, mp1));
        }
        std::sort(cs.begin(), cs.end(), [](const Cylinder& a, const Cylinder& b) { return a.lo < b.lo; });
        double total = 0.0;
        for (std::size_t i = 0; i < cs.size(); ++i) {
            total += cs[i].length();
            if (i + 1 < cs.size())
                CHECK(std::fabs(cs[i].hi - cs[i + 1].lo) < 1e-10);
        }
        CHECK(std::fabs(total - 1.0) < 1e-9);
        CHECK(cs.front().lo == 0.0);
        CHECK(cs.back().hi == Approx(1.0).margin(1e-12));
    }
}
