#include <catch2/catch_amalgamated.hpp>

#include "thermoscope/potential.hpp"
#include "thermoscope/potential_io.hpp"
#include "oracles.hpp"

#include <random>

using namespace thermoscope;
using Catch::Approx;

namespace {
const MapParams mp1(1.0);
}

TEST_CASE("pointwise evaluation of the built-ins") {
    CHECK(evaluate(make_omega(2.0), 0.5) == Approx(-0.25));
    CHECK(evaluate(make_geometric(mp1), 0.0) == 0.0);
    for (double a : {0.5, 1.0, 2.0}) {
        Potential hat = make_hat(MapParams(a));
        CHECK(evaluate(hat, 1.0) == Approx(hat.phi0).margin(1e-15)); // hat(1) = hat(0)
    }
    Potential t = make_tilde(0.5);
    CHECK(evaluate(t, 0.0) == 0.0);
    CHECK(evaluate(t, 1.0) == Approx(-1.0)); // 1 / (-1 + log 1)
    CHECK_THROWS_AS(evaluate(t, 1.5), std::domain_error);
}

TEST_CASE("normal form reproduces direct evaluation") {
    std::vector<Potential> pots{make_omega(0.5), make_omega(1.0), make_omega(2.0),
                                make_geometric(mp1), make_hat(mp1), make_psi(mp1),
                                make_tilde(0.5), make_tilde(1.0)};
    for (const auto& phi : pots) {
        for (int i = 1; i <= 1000; ++i) {
            double x = double(i) / 1000.0;
            double via_form = phi.phi0 + (phi.c + eval_h(phi, x)) * std::pow(x, phi.gamma);
            REQUIRE(via_form == Approx(phi(x)).margin(1e-10));
        }
        // h -> 0 and x h'(x) -> 0 along a geometric grid
        double h_at_floor = 0.0, xhp_at_floor = 0.0;
        for (double x = 0.5; x >= 1e-8; x *= 0.5) {
            h_at_floor = eval_h(phi, x);
            xhp_at_floor = eval_xhprime(phi, x);
        }
        CHECK(std::fabs(h_at_floor) < 0.06); // tilde decays only like 1/log x
        CHECK(std::fabs(xhp_at_floor) < 0.06);
        CHECK(std::fabs(h_at_floor) <= std::fabs(eval_h(phi, 1e-4)) + 1e-12);
    }
}

TEST_CASE("leading coefficients match the closed forms") {
    for (double g : {0.5, 1.0, 2.0}) {
        auto lc = leading_coefficient(make_omega(g));
        CHECK(lc.converged);
        CHECK(lc.c == Approx(-1.0).margin(1e-9));
    }
    for (double a : {0.5, 1.0, 2.0}) {
        MapParams mp(a);
        auto lc = leading_coefficient(make_geometric(mp));
        CHECK(lc.converged);
        CHECK(lc.c == Approx(-(a + 1.0)).margin(1e-6));
        auto lh = leading_coefficient(make_hat(mp));
        CHECK(lh.c == Approx(-1.0).margin(1e-8));
    }
    auto lp = leading_coefficient(make_psi(mp1));
    CHECK(lp.c == Approx(-mp1.x1 * mp1.x1).margin(1e-8));
    // tilde converges only logarithmically; the diagnostic must say so
    auto lt = leading_coefficient(make_tilde(0.5));
    CHECK_FALSE(lt.converged);
    CHECK(std::fabs(lt.c) < 0.05);
}

TEST_CASE("a gamma mismatch is flagged instead of guessed") {
    Potential wrong = make_omega(0.5);
    wrong.gamma = 1.0; // claims gamma = 1; the ratio diverges at 0+
    auto lc = leading_coefficient(wrong.deriv, 1.0);
    CHECK_FALSE(lc.converged);
}

TEST_CASE("norm bounds") {
    Potential om = make_omega(1.5);
    CHECK(om.norms.sup_lo == 1.0);
    CHECK(om.norms.semi_hi == 1.0);

    Potential geo = make_geometric(mp1);
    CHECK(geo.norms.sup_lo <= std::log(3.0) + 1e-12);
    CHECK(geo.norms.sup_hi >= std::log(3.0) - 1e-12);
    CHECK(geo.norms.sup_hi <= std::log(3.0) + 1e-3);
    CHECK(geo.norms.semi_lo <= 2.0 + 1e-9);
    CHECK(geo.norms.semi_hi >= 2.0 - 1e-9);
    CHECK(geo.norms.semi_hi <= 2.0 + 0.05);

    // dense-grid oracle for the hat sup norm at two exponents
    for (double a : {1.0, 2.0}) {
        Potential hat = make_hat(MapParams(a));
        double oracle = oracles::grid_sup_abs([a](double x) { return -std::pow(x, a) * (1.0 - x); });
        CHECK(hat.norms.sup_lo <= oracle + 1e-9);
        CHECK(hat.norms.sup_hi >= oracle - 1e-9);
        CHECK(hat.norms.sup_hi <= oracle + 1e-3);
    }
    CHECK(make_hat(MapParams(2.0)).norms.sup_hi == Approx(4.0 / 27.0).margin(1e-3));
    CHECK(make_hat(mp1).norms.sup_hi == Approx(0.25).margin(1e-3));
}

TEST_CASE("Birkhoff sums") {
    Potential geo = make_geometric(mp1);
    for (double v : {0.0, 1.0})
        CHECK(birkhoff_sum(geo, v, 7, mp1) == Approx(7.0 * geo(v)).margin(1e-12));
    CHECK(birkhoff_sum(geo, 0.5, 2, mp1) == Approx(-std::log(5.0)).epsilon(1e-12));

    // cocycle additivity at random points
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> steps(1, 50);
    for (int i = 0; i < 40; ++i) {
        double x = u(oracles::rng());
        int m = steps(oracles::rng()), n = steps(oracles::rng());
        double lhs = birkhoff_sum(geo, x, m + n, mp1);
        double z = x;
        for (int k = 0; k < m; ++k) z = map_forward(z, mp1);
        double rhs = birkhoff_sum(geo, x, m, mp1) + birkhoff_sum(geo, z, n, mp1);
        CHECK(lhs == Approx(rhs).margin(1e-9));
    }
}

TEST_CASE("Holder sanity of the built-ins") {
    std::vector<Potential> pots{make_omega(0.5), make_geometric(mp1), make_hat(mp1),
                                make_psi(mp1), make_tilde(0.5)};
    for (const auto& phi : pots) {
        double e = std::min(1.0, phi.gamma);
        double worst = 0.0;
        for (int i = 0; i <= 400; ++i)
            for (int j = i + 1; j <= 400; j += 7) {
                double x = i / 400.0, y = j / 400.0;
                worst = std::max(worst, std::fabs(phi(x) - phi(y)) / std::pow(y - x, e));
            }
        CHECK(std::isfinite(worst));
        CHECK(worst < 50.0);
    }
}

TEST_CASE("interval sup/inf bounds bracket dense-grid values") {
    Potential psi = make_psi(mp1);
    for (auto [u, v] : std::vector<std::pair<double, double>>{{0.0, 0.3}, {0.2, 0.9}, {0.55, 0.72}}) {
        double grid_max = -1e9, grid_min = 1e9;
        for (int i = 0; i <= 20000; ++i) {
            double x = u + (v - u) * i / 20000.0;
            grid_max = std::max(grid_max, psi(x));
            grid_min = std::min(grid_min, psi(x));
        }
        auto s = certified_sup(psi.value, u, v, psi.gamma, psi.norms.semi_hi, 1e-9, 240);
        auto in = certified_inf(psi.value, u, v, psi.gamma, psi.norms.semi_hi, 1e-9, 240);
        CHECK(s.hi >= grid_max - 1e-12);
        CHECK(s.lo <= grid_max + 1e-12);
        CHECK(in.lo <= grid_min + 1e-12);
        CHECK(in.hi >= grid_min - 1e-12);
        CHECK(s.hi - grid_max < 1e-3);
        CHECK(grid_min - in.lo < 1e-3);
    }
}

TEST_CASE("potential spec files over the expression grammar") {
    nlohmann::json j = {{"name", "shifted-omega"}, {"gamma", 1.0}, {"phi0", 0.25},
                        {"c", -1.0},              {"h", "x/(1+x) - x^2/4"}};
    Potential p = potential_from_json(j);
    CHECK(p(0.0) == 0.25);
    for (int i = 1; i <= 50; ++i) {
        double x = double(i) / 50.0;
        double direct = 0.25 - x + (x / (1.0 + x) - 0.25 * x * x) * x;
        CHECK(p(x) == Approx(direct).margin(1e-13));
        double h = 1e-6;
        double fd = (p(std::min(1.0, x + h)) - p(std::max(0.0, x - h))) /
                    (std::min(1.0, x + h) - std::max(0.0, x - h));
        CHECK(p.deriv(x) == Approx(fd).margin(1e-5));
    }
    auto lc = leading_coefficient(p);
    CHECK(lc.c == Approx(-1.0).margin(1e-6));

    CHECK_THROWS(parse_expression("x +* 2"));
    CHECK_THROWS(parse_expression("sin(x)"));
    CHECK(expr_eval(parse_expression("exp(log(x)) * 2 - x"), 0.7) == Approx(0.7));
}

TEST_CASE("scaling and shifting") {
    Potential geo = make_geometric(mp1);
    Potential g2 = scaled(geo, 2.5);
    CHECK(g2(0.4) == Approx(2.5 * geo(0.4)));
    CHECK(g2.c == Approx(2.5 * geo.c));
    CHECK(g2.norms.semi_hi == Approx(2.5 * geo.norms.semi_hi));
    Potential gs = shifted(geo, 0.7);
    CHECK(gs(0.4) == Approx(geo(0.4) + 0.7));
    CHECK(gs.phi0 == Approx(0.7));
}
