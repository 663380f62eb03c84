#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "thermoscope/roots.hpp"

namespace thermoscope {

// Interval map x -> x(1 + x^alpha) mod 1 on [0,1].  The indifferent fixed
// point sits at 0; the branch point x1 solves x(1 + x^alpha) = 1.
struct MapParams {
    double alpha = 1.0;
    double solver_tol = 1e-14;
    double x1 = 0.0; // branch point, cached at construction

    explicit MapParams(double alpha_, double solver_tol_ = 1e-14)
        : alpha(alpha_), solver_tol(solver_tol_) {
        if (!(alpha > 0.0)) throw std::domain_error("MapParams: alpha must be positive");
        if (!(solver_tol > 0.0)) throw std::domain_error("MapParams: solver_tol must be positive");
        auto f = [this](double x) { return x * (1.0 + std::pow(x, alpha)) - 1.0; };
        auto df = [this](double x) { return 1.0 + (1.0 + alpha) * std::pow(x, alpha); };
        x1 = solve_increasing(f, df, 0.0, 1.0, solver_tol).x;
    }
};

inline void check_unit_interval(double x, const char* who) {
    if (!(x >= 0.0 && x <= 1.0))
        throw std::domain_error(std::string(who) + ": point outside [0,1]");
}

inline double map_forward(double x, const MapParams& p) {
    check_unit_interval(x, "map_forward");
    double v = x * (1.0 + std::pow(x, p.alpha));
    if (v <= 1.0) return v;
    v -= 1.0;
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
    return v;
}

// Df(x) = 1 + (1+alpha) x^alpha on both branches.
inline double map_derivative(double x, const MapParams& p) {
    check_unit_interval(x, "map_derivative");
    return 1.0 + (1.0 + p.alpha) * std::pow(x, p.alpha);
}

// Branch 0 inverts x(1+x^alpha) on [0, x1], branch 1 inverts
// x(1+x^alpha) - 1 on (x1, 1].  Residual of the returned root is at most
// solver_tol (or the double-precision floor when that is unreachable).
inline double inverse_branch(double target, int branch, const MapParams& p) {
    const double a = p.alpha;
    auto df = [a](double x) { return 1.0 + (1.0 + a) * std::pow(x, a); };
    if (branch == 0) {
        if (!(target >= 0.0 && target <= 1.0))
            throw std::domain_error("inverse_branch: branch 0 needs target in [0,1]");
        if (target == 0.0) return 0.0;
        auto f = [a, target](double x) { return x * (1.0 + std::pow(x, a)) - target; };
        return solve_increasing(f, df, 0.0, p.x1, p.solver_tol).x;
    }
    if (branch == 1) {
        if (!(target > 0.0 && target <= 1.0))
            throw std::domain_error("inverse_branch: branch 1 needs target in (0,1]");
        auto f = [a, target](double x) { return x * (1.0 + std::pow(x, a)) - 1.0 - target; };
        return solve_increasing(f, df, p.x1, 1.0, p.solver_tol).x;
    }
    throw std::domain_error("inverse_branch: branch must be 0 or 1");
}

// Backward orbit of the branch point along the left branch (x_n) together
// with the right-branch markers y_n with f(y_n) = x_{n-1}.  Each x_{n+1}
// is re-solved against the stored x_n, so no floating error accumulates
// through composition.
struct MarkedOrbit {
    MapParams params;
    std::vector<double> xs; // xs[j] = x_j, xs[0] = 1
    std::vector<double> ys; // ys[n-1] = y_n, ys[0] = y_1 = 1
    std::size_t max_index = 0;

    MarkedOrbit(const MapParams& p, std::size_t n) : params(p) {
        xs.reserve(n + 1);
        xs.push_back(1.0);
        for (std::size_t j = 0; j < n; ++j)
            xs.push_back(inverse_branch(xs.back(), 0, params));
        ys.reserve(n);
        for (std::size_t k = 1; k <= n; ++k)
            ys.push_back(k == 1 ? 1.0 : inverse_branch(xs[k - 1], 1, params));
        max_index = n;
    }

    double x(std::size_t j) const {
        if (j >= xs.size()) throw std::out_of_range("MarkedOrbit: x index beyond cache");
        return xs[j];
    }
    double y(std::size_t n) const {
        if (n == 0 || n > ys.size()) throw std::out_of_range("MarkedOrbit: y index beyond cache");
        return ys[n - 1];
    }
};

inline MarkedOrbit build_marked_orbit(const MapParams& p, std::size_t n) {
    return MarkedOrbit(p, n); // n = 0 gives just x_0 = 1
}

// Cylinder of a finite binary itinerary.  Left endpoint is closed only for
// the all-zeros word; the right endpoint is always closed.
struct Cylinder {
    std::string word;
    double lo = 0.0;
    double hi = 1.0;
    bool closed_left = true;

    double length() const { return hi - lo; }
};

inline Cylinder cylinder_from_word(const std::string& word, const MapParams& p) {
    if (word.empty()) throw std::domain_error("cylinder_from_word: empty word");
    Cylinder c;
    c.word = word;
    c.lo = 0.0;
    c.hi = 1.0;
    c.closed_left = true;
    for (std::size_t i = word.size(); i-- > 0;) {
        char d = word[i];
        if (d == '0') {
            c.lo = (c.lo == 0.0) ? 0.0 : inverse_branch(c.lo, 0, p);
            c.hi = inverse_branch(c.hi, 0, p);
        } else if (d == '1') {
            // g1 extends continuously to 0 with value x1; that endpoint is open
            c.lo = (c.lo == 0.0) ? p.x1 : inverse_branch(c.lo, 1, p);
            c.hi = inverse_branch(c.hi, 1, p);
            c.closed_left = false;
        } else {
            throw std::domain_error("cylinder_from_word: word must be over {0,1}");
        }
    }
    return c;
}

inline std::string itinerary(double x, std::size_t n, const MapParams& p) {
    check_unit_interval(x, "itinerary");
    if (n < 1) throw std::domain_error("itinerary: n >= 1 required");
    std::string s;
    s.reserve(n);
    double z = x;
    for (std::size_t k = 0; k < n; ++k) {
        s.push_back(z <= p.x1 ? '0' : '1');
        z = map_forward(z, p);
    }
    return s;
}

// log of Df^n(x); products of Df near the neutral point stay best in log
// scale once n gets large.
inline double log_derivative_along(double x, std::size_t n, const MapParams& p) {
    check_unit_interval(x, "derivative_along");
    if (n < 1) throw std::domain_error("derivative_along: n >= 1 required");
    double z = x;
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        acc += std::log(map_derivative(z, p));
        z = map_forward(z, p);
    }
    return acc;
}

inline double derivative_along(double x, std::size_t n, const MapParams& p) {
    return std::exp(log_derivative_along(x, n, p));
}

} // namespace thermoscope
