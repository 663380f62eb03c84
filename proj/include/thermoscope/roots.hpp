#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace thermoscope {

struct RootResult {
    double x = 0.0;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Finds the root of a strictly increasing function on [lo, hi] by a
// Newton iteration safeguarded by the bracket; falls back to bisection
// whenever a Newton step leaves the bracket or stalls.  `tol` is an
// absolute tolerance on |f(x)|.
template <class F, class DF>
RootResult solve_increasing(F f, DF df, double lo, double hi, double tol,
                            int max_iter = 200) {
    double flo = f(lo);
    double fhi = f(hi);
    RootResult r;
    if (flo > 0.0 && flo < tol) { r.x = lo; r.residual = flo; r.converged = true; return r; }
    if (fhi < 0.0 && -fhi < tol) { r.x = hi; r.residual = fhi; r.converged = true; return r; }
    if (flo > 0.0 || fhi < 0.0)
        throw std::domain_error("solve_increasing: root not bracketed");

    double x = 0.5 * (lo + hi);
    for (int it = 0; it < max_iter; ++it) {
        double fx = f(x);
        r.iterations = it + 1;
        if (std::fabs(fx) <= tol || hi - lo <= std::numeric_limits<double>::epsilon() * (std::fabs(hi) + 1.0)) {
            r.x = x;
            r.residual = fx;
            r.converged = std::fabs(fx) <= tol ||
                          std::fabs(fx) <= 64.0 * std::numeric_limits<double>::epsilon() * (std::fabs(x) + 1.0);
            return r;
        }
        if (fx > 0.0) hi = x; else lo = x;
        double d = df(x);
        double xn = (d > 0.0) ? x - fx / d : lo - 1.0;
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        x = xn;
    }
    r.x = x;
    r.residual = f(x);
    r.converged = std::fabs(r.residual) <= tol;
    return r;
}

} // namespace thermoscope
