#include <catch2/catch_amalgamated.hpp>

#include "thermoscope/induced.hpp"
#include "thermoscope/two_variable.hpp"
#include "oracles.hpp"

#include <memory>

using namespace thermoscope;
using Catch::Approx;

namespace {
const MapParams mp1(1.0);

std::shared_ptr<const MarkedOrbit> orbit1(std::size_t n = 2500) {
    static auto ob = std::make_shared<const MarkedOrbit>(mp1, 2500);
    if (n <= 2500) return ob;
    return std::make_shared<const MarkedOrbit>(mp1, n);
}
} // namespace

TEST_CASE("return times locate the I_n / J_n levels") {
    auto ob = orbit1();
    CHECK(return_time(1.0, *ob) == 1);
    CHECK(return_time(0.9, *ob) == 1);  // y_2 = 0.86676 < 0.9
    CHECK(return_time(0.7, *ob) == 6);  // y_7 = 0.69608 < 0.7 <= y_6 = 0.70964
    CHECK(return_time(0.75, *ob) == 4);
    // below the branch point: J_n levels
    CHECK(return_time(0.5, *ob) == 1);  // x_2 = 0.43168 < 0.5 <= x_1
    CHECK(return_time(ob->x(7), *ob) == 7);
    CHECK_THROWS_AS(return_time(0.0, *ob), std::domain_error);
    // consistency with the dynamical definition: first entry of the orbit
    // of f(x) into J0 after m-1 more steps
    for (double x : {0.97, 0.81, 0.66, 0.63, 0.3, 0.1, 0.05}) {
        int m = return_time(x, *ob);
        double z = x;
        for (int k = 0; k < m; ++k) z = map_forward(z, mp1);
        CHECK(z > mp1.x1);
        if (x > mp1.x1) { // for x in J0 no earlier step may land in J0
            double w = map_forward(x, mp1);
            for (int k = 1; k < m; ++k) {
                CHECK(w <= mp1.x1);
                w = map_forward(w, mp1);
            }
        }
    }
}

TEST_CASE("return preimages sit on the fiber and decrease in n") {
    CHECK(return_preimage(1.0, 1, mp1) == Approx(1.0).margin(1e-12));
    CHECK(return_preimage(1.0, 2, mp1) == Approx(0.8667603991738621).epsilon(1e-10));
    CHECK(return_preimage(1.0, 3, mp1) == Approx(0.7967973691331191).epsilon(1e-10));
    // f^3 of the n=3 preimage returns to 1 (distances mod 1: the float
    // orbit through the seam f(x1) = 1 may wrap to 0+)
    auto circle_dist = [](double a, double b) {
        double d = std::fabs(a - b);
        return std::min(d, 1.0 - d);
    };
    double x3 = return_preimage(1.0, 3, mp1);
    double z = x3;
    for (int k = 0; k < 3; ++k) z = map_forward(z, mp1);
    CHECK(circle_dist(z, 1.0) < 1e-11);

    for (double y : {0.7, 0.9, 1.0}) {
        double prev = 2.0;
        for (int n = 1; n <= 200; ++n) {
            double x = return_preimage(y, n, mp1);
            CHECK(x < prev);
            CHECK(x > mp1.x1);
            double w = x;
            for (int k = 0; k < n; ++k) w = map_forward(w, mp1);
            CHECK(circle_dist(w, y) < 1e-10);
            prev = x;
        }
    }
}

TEST_CASE("transfer operator at the zero potential is a geometric series") {
    auto ob = orbit1();
    InducedSystem sys(make_zero(), ob, 600);
    for (double p : {0.2, 0.7, std::log(2.0), 1.5}) {
        auto tv = transfer_apply(sys, p, 1.0);
        REQUIRE_FALSE(tv.divergent);
        double exact = 1.0 / (std::exp(p) - 1.0);
        CHECK(tv.value <= exact + 1e-12);
        CHECK(tv.value + tv.tail_bound >= exact - 1e-12);
        CHECK(tv.value + tv.tail_bound <= exact * (1.0 + 1e-9) + 1e-12);
    }
    auto tv = transfer_apply(sys, std::log(2.0), 1.0);
    CHECK(tv.value == Approx(1.0).margin(1e-9));
}

TEST_CASE("transfer operator at the geometric potential and p = 0") {
    auto ob = orbit1();
    Potential geo = make_geometric(mp1);
    InducedSystem sys(geo, ob, 2000);
    auto tv = transfer_apply(sys, 0.0, 1.0);
    REQUIRE_FALSE(tv.divergent);
    // sum over the fiber of 1/Df^n is the total I_n mass over |J0| up to
    // distortion, which is 1
    INFO("value " << tv.value << " tail " << tv.tail_bound);
    CHECK(tv.value > 0.5);
    CHECK(tv.value < 2.0);
    CHECK(tv.tail_bound < 0.2);
}

TEST_CASE("Z_l at the zero potential has closed form") {
    auto ob = orbit1();
    InducedSystem sys(make_zero(), ob, 800);
    for (double p : {0.3, std::log(2.0), 1.0}) {
        double z1 = 1.0 / (std::exp(p) - 1.0);
        for (int ell : {1, 2, 3}) {
            auto zb = z_partition(sys, 1.0, p, ell);
            REQUIRE_FALSE(zb.divergent);
            double exact = ell * std::log(z1); // Z_l = (e^p - 1)^{-l}
            INFO("p=" << p << " ell=" << ell << " bracket [" << zb.bracket.lo * ell << ","
                      << zb.bracket.hi * ell << "] exact " << exact);
            CHECK(zb.bracket.lo * ell <= exact + 1e-9);
            CHECK(zb.bracket.hi * ell >= exact - 1e-9);
            CHECK(zb.bracket.hi * ell - exact <= 1e-6);
        }
    }
}

TEST_CASE("omega_2 at alpha = 1 diverges with a nonvanishing-terms witness") {
    auto ob = orbit1();
    InducedSystem sys(make_omega(2.0), ob, 400);
    auto w = sys.certify_divergence(0.0);
    REQUIRE(w.has_value());
    CHECK(w->find("nonvanishing") != std::string::npos);
    auto zb = z_partition(sys, 1.0, 0.0, 1);
    CHECK(zb.divergent);
    auto tv = transfer_apply(sys, 0.0, 1.0);
    CHECK(tv.divergent);
}

TEST_CASE("submultiplicativity and sandwich consistency of Z") {
    auto ob = orbit1();
    Potential geo = make_geometric(mp1);
    InducedSystem sys(geo, ob, 800);
    double p = 0.1;
    auto z1 = z_partition(sys, 1.0, p, 1);
    auto z2 = z_partition(sys, 1.0, p, 2);
    auto z3 = z_partition(sys, 1.0, p, 3);
    // upper bounds multiply: log Z_{k+l} <= log Z_k + log Z_l
    CHECK(z2.log_z_hi <= 2.0 * z1.log_z_hi + 1e-9);
    CHECK(z3.log_z_hi <= z1.log_z_hi + z2.log_z_hi + 1e-9);
    // brackets for P(phi, p) at different depths intersect
    CHECK(z1.bracket.lo <= z2.bracket.hi + 1e-12);
    CHECK(z2.bracket.lo <= z1.bracket.hi + 1e-12);
    CHECK(z2.bracket.lo <= z3.bracket.hi + 1e-12);
    CHECK(z3.bracket.lo <= z2.bracket.hi + 1e-12);
}

TEST_CASE("two-variable pressure at the zero potential") {
    auto ob = orbit1();
    TwoVarOptions opt;
    opt.n_max = 800;
    opt.ell_max = 2;
    TwoVarEvaluator ev(make_zero(), ob, opt);
    auto at_log2 = ev.eval(1.0, std::log(2.0));
    INFO("bracket [" << at_log2.bracket.lo << "," << at_log2.bracket.hi << "]");
    CHECK(at_log2.bracket.contains(0.0));
    CHECK(at_log2.bracket.width() < 1e-6);
    auto at_one = ev.eval(1.0, 1.0);
    double exact = -std::log(std::exp(1.0) - 1.0);
    CHECK(at_one.bracket.contains(exact));
    CHECK(at_one.bracket.width() < 1e-6);
}

TEST_CASE("two-variable pressure of the geometric potential vanishes at p = 0") {
    auto ob = std::make_shared<const MarkedOrbit>(mp1, 10001);
    Potential geo = make_geometric(mp1);
    TwoVarOptions opt;
    opt.n_max = 10000;
    opt.ell_max = 3;
    TwoVarEvaluator ev(geo, ob, opt);
    auto pt = ev.eval(1.0, 0.0);
    INFO("bracket [" << pt.bracket.lo << "," << pt.bracket.hi << "] width " << pt.bracket.width());
    CHECK(pt.bracket.contains(0.0));
    CHECK(pt.bracket.width() <= 0.05);
}

TEST_CASE("two-variable pressure decreases in p") {
    auto ob = orbit1();
    Potential geo = make_geometric(mp1);
    TwoVarOptions opt;
    opt.n_max = 1500;
    opt.ell_max = 2;
    TwoVarEvaluator ev(geo, ob, opt);
    double prev_lo = std::numeric_limits<double>::infinity();
    for (double p : {-0.05, 0.0, 0.1, 0.3}) {
        auto pt = ev.eval(1.0, p);
        CHECK(pt.bracket.lo <= prev_lo + 1e-12);
        prev_lo = pt.bracket.lo;
    }
}

TEST_CASE("fiber preimages match the letter cylinders") {
    auto ob = orbit1();
    // the I_n cylinder endpoints are the marked y points
    for (int n = 1; n <= 40; ++n) {
        double x = return_preimage(1.0, n, mp1);
        CHECK(x <= ob->y(n) + 1e-12);
        CHECK(x > ob->y(n + 1) - 1e-12);
    }
}
