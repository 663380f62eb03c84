#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "thermoscope/map.hpp"

namespace thermoscope {

// Upper/lower bounds for the sup norm on [0,1] and for the (1,gamma)
// seminorm sup |phi'(x)| / (gamma x^{gamma-1}) on (0,1].  Upper bounds are
// node maxima inflated by a slope estimate between nodes, so they are the
// safe side for every constant built from them.
struct NormBounds {
    double sup_lo = 0.0, sup_hi = 0.0;
    double semi_lo = 0.0, semi_hi = 0.0;
    bool converged = true;
};

// A potential in normal form phi(x) = phi(0) + c x^gamma + h(x) x^gamma
// with h(0) = 0.  Value and derivative evaluators are closed-form for the
// built-ins and expression-backed for spec files.
struct Potential {
    std::string name;
    double gamma = 1.0;
    double phi0 = 0.0;
    double c = 0.0;
    bool c_known = false;
    std::function<double(double)> value;  // on [0,1], exact at 0
    std::function<double(double)> deriv;  // on (0,1]
    NormBounds norms;

    double operator()(double x) const { return x == 0.0 ? phi0 : value(x); }
};

inline double evaluate(const Potential& phi, double x) {
    check_unit_interval(x, "Potential::evaluate");
    return phi(x);
}

inline double eval_h(const Potential& phi, double x) {
    if (x == 0.0) return 0.0;
    return (phi(x) - phi.phi0) / std::pow(x, phi.gamma) - phi.c;
}

inline double eval_xhprime(const Potential& phi, double x) {
    if (x == 0.0) return 0.0;
    double xg = std::pow(x, phi.gamma);
    double hp = phi.deriv(x) / xg - phi.gamma * (phi(x) - phi.phi0) / (xg * x);
    return x * hp;
}

// --- certified interval bounds ------------------------------------------
//
// For phi with seminorm bound M1, any x,y in [u,v] satisfy
// |phi(x)-phi(y)| <= M1 |x^g - y^g|, so the sup over [u,v] is at most
// max(phi(u),phi(v)) + M1 (v^g - u^g)/2.  Bisection refines the bound.

inline double gamma_gap(double u, double v, double g) {
    return std::pow(v, g) - std::pow(u, g);
}

struct IntervalBound {
    double lo = 0.0; // certified lower bound of the sup (a node value)
    double hi = 0.0; // certified upper bound of the sup
};

template <class F>
IntervalBound certified_sup(F&& f, double u, double v, double gamma, double m1, double tol,
                            int budget = 48) {
    struct Seg {
        double a, b, fa, fb, bound;
        bool operator<(const Seg& o) const { return bound < o.bound; }
    };
    double fu = f(u), fv = f(v);
    double best = std::max(fu, fv);
    auto seg_bound = [&](double a, double b, double fa, double fb) {
        return std::max(fa, fb) + 0.5 * m1 * gamma_gap(a, b, gamma);
    };
    std::priority_queue<Seg> heap;
    heap.push({u, v, fu, fv, seg_bound(u, v, fu, fv)});
    while (budget > 0) {
        const Seg s = heap.top();
        if (s.bound <= best + tol || s.b - s.a < 1e-15) break;
        heap.pop();
        double mid = 0.5 * (s.a + s.b);
        double fm = f(mid);
        best = std::max(best, fm);
        --budget;
        heap.push({s.a, mid, s.fa, fm, seg_bound(s.a, mid, s.fa, fm)});
        heap.push({mid, s.b, fm, s.fb, seg_bound(mid, s.b, fm, s.fb)});
    }
    double upper = std::max(best, heap.top().bound);
    return {best, upper};
}

template <class F>
IntervalBound certified_inf(F&& f, double u, double v, double gamma, double m1, double tol,
                            int budget = 48) {
    auto neg = [&f](double x) { return -f(x); };
    IntervalBound b = certified_sup(neg, u, v, gamma, m1, tol, budget);
    return {-b.hi, -b.lo}; // lo <= inf <= hi
}

// --- norms ----------------------------------------------------------------

namespace detail {

template <class G>
std::pair<double, double> grid_sup_with_slope(G&& g, const std::vector<double>& nodes) {
    std::size_t n = nodes.size();
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i) vals[i] = g(nodes[i]);
    double lo = *std::max_element(vals.begin(), vals.end());
    std::vector<double> slopes(n - 1, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double dx = nodes[i + 1] - nodes[i];
        slopes[i] = dx > 0.0 ? std::fabs(vals[i + 1] - vals[i]) / dx : 0.0;
    }
    double hi = lo;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double s = slopes[i];
        if (i > 0) s = std::max(s, slopes[i - 1]);
        if (i + 2 < n) s = std::max(s, slopes[i + 1]);
        double seg = std::max(vals[i], vals[i + 1]) + 0.75 * s * (nodes[i + 1] - nodes[i]);
        hi = std::max(hi, seg);
    }
    return {lo, hi};
}

inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    std::vector<double> xs(n);
    double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i) xs[i] = std::exp(a + (b - a) * double(i) / double(n - 1));
    xs.back() = hi;
    return xs;
}

} // namespace detail

inline NormBounds certify_norms(const Potential& phi, std::size_t base_nodes = 3000) {
    NormBounds nb;
    auto ratio = [&phi](double x) { return std::fabs(phi.deriv(x)) / (phi.gamma * std::pow(x, phi.gamma - 1.0)); };

    double prev_hi = -1.0;
    std::size_t n = base_nodes;
    for (int round = 0; round < 3; ++round, n *= 2) {
        auto grid = detail::log_grid(1e-12, 1.0, n);
        auto [lo, hi] = detail::grid_sup_with_slope(ratio, grid);
        nb.semi_lo = lo;
        nb.semi_hi = hi;
        if (prev_hi >= 0.0 && std::fabs(hi - prev_hi) <= 0.01 * (std::fabs(hi) + 1e-30)) break;
        prev_hi = hi;
        if (round == 2) nb.converged = false;
    }
    // a ratio still climbing at the grid floor signals a gamma mismatch
    double r0 = ratio(1e-12), r1 = ratio(1e-10), r2 = ratio(1e-8);
    if (r0 > 1.02 * r1 && r1 > 1.02 * r2 && r0 > 10.0 * std::max(1e-30, nb.semi_lo == r0 ? r2 : nb.semi_lo * 0.0 + r2))
        nb.converged = false;

    auto absphi = [&phi](double x) { return std::fabs(phi(x)); };
    std::vector<double> lin(4097);
    for (std::size_t i = 0; i < lin.size(); ++i) lin[i] = double(i) / double(lin.size() - 1);
    double lo = 0.0, hi = 0.0;
    for (double x : lin) lo = std::max(lo, absphi(x));
    hi = lo;
    for (std::size_t i = 0; i + 1 < lin.size(); ++i) {
        double gap = 0.5 * nb.semi_hi * gamma_gap(lin[i], lin[i + 1], phi.gamma);
        hi = std::max(hi, std::max(absphi(lin[i]), absphi(lin[i + 1])) + gap);
    }
    nb.sup_lo = lo;
    nb.sup_hi = hi;
    return nb;
}

// --- built-ins --------------------------------------------------------------

inline Potential finish(Potential p, bool with_norms = true) {
    if (with_norms) p.norms = certify_norms(p);
    return p;
}

inline Potential make_zero() {
    Potential p;
    p.name = "zero";
    p.gamma = 1.0;
    p.phi0 = 0.0;
    p.c = 0.0;
    p.c_known = true;
    p.value = [](double) { return 0.0; };
    p.deriv = [](double) { return 0.0; };
    p.norms = NormBounds{};
    return p;
}

inline Potential make_constant(double kappa) {
    Potential p = make_zero();
    p.name = "const";
    p.phi0 = kappa;
    p.value = [kappa](double) { return kappa; };
    return p;
}

// omega_gamma(x) = -x^gamma
inline Potential make_omega(double gamma) {
    if (!(gamma > 0.0)) throw std::domain_error("omega: gamma must be positive");
    Potential p;
    p.name = "omega";
    p.gamma = gamma;
    p.phi0 = 0.0;
    p.c = -1.0;
    p.c_known = true;
    p.value = [gamma](double x) { return -std::pow(x, gamma); };
    p.deriv = [gamma](double x) { return -gamma * std::pow(x, gamma - 1.0); };
    p.norms.sup_lo = p.norms.sup_hi = 1.0;
    p.norms.semi_lo = p.norms.semi_hi = 1.0;
    return p;
}

// geometric potential -log Df = -log(1 + (1+alpha) x^alpha)
inline Potential make_geometric(const MapParams& mp) {
    double a = mp.alpha;
    Potential p;
    p.name = "geometric";
    p.gamma = a;
    p.phi0 = 0.0;
    p.c = -(a + 1.0);
    p.c_known = true;
    p.value = [a](double x) { return -std::log(1.0 + (1.0 + a) * std::pow(x, a)); };
    p.deriv = [a](double x) {
        double xa = std::pow(x, a);
        return -(1.0 + a) * a * std::pow(x, a - 1.0) / (1.0 + (1.0 + a) * xa);
    };
    return finish(std::move(p));
}

// hat(x) = -x^alpha (1 - x); maximizing measures at both endpoints
inline Potential make_hat(const MapParams& mp) {
    double a = mp.alpha;
    Potential p;
    p.name = "hat";
    p.gamma = a;
    p.phi0 = 0.0;
    p.c = -1.0;
    p.c_known = true;
    p.value = [a](double x) { return -std::pow(x, a) * (1.0 - x); };
    p.deriv = [a](double x) {
        return -a * std::pow(x, a - 1.0) * (1.0 - x) + std::pow(x, a);
    };
    return finish(std::move(p));
}

// psi(x) = -x^alpha (x - x1)^2; vanishes only at 0 and the branch point
inline Potential make_psi(const MapParams& mp) {
    double a = mp.alpha;
    double x1 = mp.x1;
    Potential p;
    p.name = "psi";
    p.gamma = a;
    p.phi0 = 0.0;
    p.c = -x1 * x1;
    p.c_known = true;
    p.value = [a, x1](double x) { return -std::pow(x, a) * (x - x1) * (x - x1); };
    p.deriv = [a, x1](double x) {
        return -a * std::pow(x, a - 1.0) * (x - x1) * (x - x1) - 2.0 * std::pow(x, a) * (x - x1);
    };
    return finish(std::move(p));
}

// tilde(x) = x^gamma / (-x + log x) on (0,1], 0 at 0; zero leading coefficient
inline Potential make_tilde(double gamma) {
    if (!(gamma > 0.0)) throw std::domain_error("tilde: gamma must be positive");
    Potential p;
    p.name = "tilde";
    p.gamma = gamma;
    p.phi0 = 0.0;
    p.c = 0.0;
    p.c_known = true;
    p.value = [gamma](double x) {
        if (x == 0.0) return 0.0;
        return std::pow(x, gamma) / (-x + std::log(x));
    };
    p.deriv = [gamma](double x) {
        double d = -x + std::log(x);
        double u = 1.0 / d;
        double up = -(-1.0 + 1.0 / x) / (d * d);
        return gamma * std::pow(x, gamma - 1.0) * u + std::pow(x, gamma) * up;
    };
    return finish(std::move(p));
}

inline Potential scaled(const Potential& phi, double beta) {
    if (beta == 1.0) return phi;
    Potential p;
    p.name = phi.name;
    p.gamma = phi.gamma;
    p.phi0 = beta * phi.phi0;
    p.c = beta * phi.c;
    p.c_known = phi.c_known;
    auto v = phi.value;
    auto d = phi.deriv;
    p.value = [v, beta](double x) { return beta * v(x); };
    p.deriv = [d, beta](double x) { return beta * d(x); };
    double s = std::fabs(beta);
    p.norms = phi.norms;
    p.norms.sup_lo *= s;
    p.norms.sup_hi *= s;
    p.norms.semi_lo *= s;
    p.norms.semi_hi *= s;
    return p;
}

inline Potential shifted(const Potential& phi, double kappa) {
    Potential p = phi;
    auto v = phi.value;
    p.phi0 = phi.phi0 + kappa;
    p.value = [v, kappa](double x) { return v(x) + kappa; };
    p.norms.sup_lo = std::max(0.0, phi.norms.sup_lo - std::fabs(kappa));
    p.norms.sup_hi = phi.norms.sup_hi + std::fabs(kappa);
    return p;
}

// --- leading coefficient ----------------------------------------------------

struct LeadingCoefficient {
    double c = 0.0;
    double error_bar = 0.0;
    bool converged = false;
};

// Limit of phi'(x) / (gamma x^{gamma-1}) as x -> 0+, via Aitken
// extrapolation on a dyadic grid.  The correction term of the normal form
// is o(1) with no stated rate, so the diagnostic reports an error bar
// instead of assuming one.
template <class D>
LeadingCoefficient leading_coefficient(D&& deriv, double gamma, int k_lo = 10, int k_hi = 40) {
    std::vector<double> r;
    for (int k = k_lo; k <= k_hi; ++k) {
        double x = std::ldexp(1.0, -k);
        r.push_back(deriv(x) / (gamma * std::pow(x, gamma - 1.0)));
    }
    LeadingCoefficient out;
    std::vector<double> extr;
    for (std::size_t i = 0; i + 2 < r.size(); ++i) {
        double d1 = r[i + 1] - r[i];
        double d2 = r[i + 2] - r[i + 1];
        double denom = d2 - d1;
        if (std::fabs(denom) < 1e-300 || std::fabs(d2) < 1e-14 * (std::fabs(r[i + 2]) + 1.0)) {
            extr.push_back(r[i + 2]); // sequence already flat
        } else {
            extr.push_back(r[i + 2] - d2 * d2 / denom);
        }
    }
    if (extr.size() < 3) {
        out.c = r.back();
        out.error_bar = std::fabs(r.back() - r.front());
        out.converged = out.error_bar < 1e-8;
        return out;
    }
    double a = extr[extr.size() - 1], b = extr[extr.size() - 2], e3 = extr[extr.size() - 3];
    out.c = a;
    out.error_bar = std::max({std::fabs(a - b), std::fabs(b - e3),
                              std::fabs(r.back() - a) * 0.5});
    out.error_bar = std::max(out.error_bar, 4.0 * std::fabs(a) * 1e-15);
    out.converged = out.error_bar <= 1e-3 * (std::fabs(a) + 1e-3);
    return out;
}

inline LeadingCoefficient leading_coefficient(const Potential& phi) {
    return leading_coefficient(phi.deriv, phi.gamma);
}

// --- Birkhoff sums -----------------------------------------------------------

inline double birkhoff_sum(const Potential& phi, double x, std::size_t n, const MapParams& p) {
    check_unit_interval(x, "birkhoff_sum");
    if (n < 1) throw std::domain_error("birkhoff_sum: n >= 1 required");
    double acc = 0.0;
    double z = x;
    for (std::size_t k = 0; k < n; ++k) {
        acc += phi(z);
        z = map_forward(z, p);
    }
    return acc;
}

} // namespace thermoscope
