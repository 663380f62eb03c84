#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "thermoscope/two_variable.hpp"

namespace thermoscope {

struct BowenOptions {
    TwoVarOptions two_var;
    double p_tol = 1e-6;
    int max_expand = 60;
};

struct BowenResult {
    PressureBracket bracket; // contains P(phi) by the sign trichotomy
    bool inconclusive = false;
    int sign_evaluations = 0;
    std::string note;
};

// Root of p -> P(phi, p) via sign bisection.  P(phi, p) > 0 strictly below
// P(phi) and <= 0 at and above it, so any certified-positive p is a lower
// endpoint and any certified-nonpositive p an upper endpoint.
inline BowenResult pressure_bowen(const TwoVarEvaluator& ev, double p_lo, double p_hi,
                                  double beta = 1.0, BowenOptions opt = {}) {
    BowenResult out;
    out.bracket.method = "bowen";
    auto sgn = [&](double p) {
        ++out.sign_evaluations;
        return ev.sign(beta, p);
    };
    if (p_hi < p_lo) std::swap(p_lo, p_hi);
    double width = std::max(p_hi - p_lo, 1e-3);
    int tries = 0;
    while (sgn(p_lo) != +1) {
        p_lo -= width;
        width *= 2.0;
        if (++tries > opt.max_expand) {
            out.inconclusive = true;
            out.note = "no certified-positive left endpoint found";
            out.bracket.lo = p_lo;
            out.bracket.hi = p_hi;
            return out;
        }
    }
    width = std::max(p_hi - p_lo, 1e-3);
    tries = 0;
    while (sgn(p_hi) != -1) {
        p_hi += width;
        width *= 2.0;
        if (++tries > opt.max_expand) {
            out.inconclusive = true;
            out.note = "no certified-nonpositive right endpoint found";
            out.bracket.lo = p_lo;
            out.bracket.hi = p_hi;
            return out;
        }
    }
    while (p_hi - p_lo > opt.p_tol) {
        double mid = 0.5 * (p_lo + p_hi);
        int s = sgn(mid);
        if (s == +1) p_lo = mid;
        else if (s == -1) p_hi = mid;
        else {
            out.note = "sign inconclusive near the root; returning last conclusive interval";
            break;
        }
    }
    out.bracket.lo = p_lo;
    out.bracket.hi = p_hi;
    return out;
}

inline BowenResult pressure_bowen(const Potential& phi, std::shared_ptr<const MarkedOrbit> orbit,
                                  double p_lo, double p_hi, BowenOptions opt = {}) {
    TwoVarEvaluator ev(phi, std::move(orbit), opt.two_var);
    return pressure_bowen(ev, p_lo, p_hi, 1.0, opt);
}

enum class ScanVerdict { TransitionLocated, NoSignChangeInRange, DivergentEverywhere };

inline const char* to_string(ScanVerdict v) {
    switch (v) {
        case ScanVerdict::TransitionLocated: return "TransitionLocated";
        case ScanVerdict::NoSignChangeInRange: return "NoSignChangeInRange";
        case ScanVerdict::DivergentEverywhere: return "DivergentEverywhere";
    }
    return "?";
}

struct ScanPoint {
    double beta = 0.0;
    int sign = 0; // +1 / -1 / 0, before divergence marking
    bool divergent = false;
    std::string witness;
};

struct TransitionScanResult {
    std::vector<ScanPoint> grid;
    std::optional<PressureBracket> beta_star; // bracket in beta
    ScanVerdict verdict = ScanVerdict::NoSignChangeInRange;
    std::string note;
};

// Sign of P(beta phi, beta phi(0)) along a beta grid; a certified sign
// change brackets the transition point.  The grid comes first because the
// two-variable pressure is +infinity on an initial beta segment for
// heavy-tailed potentials, which breaks naive bisection.
inline TransitionScanResult transition_scan(const TwoVarEvaluator& ev, double beta_lo,
                                            double beta_hi, int grid_size) {
    if (!(beta_lo > 0.0 && beta_hi > beta_lo)) throw std::domain_error("transition_scan: bad range");
    if (grid_size < 2 || grid_size > 10'000) throw std::domain_error("transition_scan: bad grid");
    const double phi0 = ev.system().potential().phi0;
    TransitionScanResult out;
    out.grid.reserve(grid_size);
    for (int i = 0; i < grid_size; ++i) {
        double beta = beta_lo + (beta_hi - beta_lo) * double(i) / double(grid_size - 1);
        ScanPoint pt;
        pt.beta = beta;
        if (auto w = ev.system().certify_divergence_scaled(beta, beta * phi0)) {
            pt.divergent = true;
            pt.sign = +1;
            pt.witness = *w;
        } else {
            pt.sign = ev.sign(beta, beta * phi0);
        }
        out.grid.push_back(pt);
    }
    bool all_divergent = true;
    for (const auto& pt : out.grid) all_divergent = all_divergent && pt.divergent;
    if (all_divergent) {
        out.verdict = ScanVerdict::DivergentEverywhere;
        out.note = out.grid.front().witness;
        return out;
    }
    // last certified-positive before the first certified-nonpositive
    int first_np = -1, last_pos_before = -1;
    for (int i = 0; i < int(out.grid.size()); ++i) {
        if (out.grid[i].sign == -1) { first_np = i; break; }
        if (out.grid[i].sign == +1) last_pos_before = i;
    }
    if (first_np < 0 || last_pos_before < 0) {
        out.verdict = ScanVerdict::NoSignChangeInRange;
        out.note = first_np < 0 ? "no certified-nonpositive grid point"
                                : "no certified-positive grid point before the change";
        return out;
    }
    double lo = out.grid[last_pos_before].beta;
    double hi = out.grid[first_np].beta;
    double target = (beta_hi - beta_lo) / double(grid_size) / 8.0;
    while (hi - lo > target) {
        double mid = 0.5 * (lo + hi);
        int s;
        if (ev.system().certify_divergence_scaled(mid, mid * phi0)) s = +1;
        else s = ev.sign(mid, mid * phi0);
        if (s == +1) lo = mid;
        else if (s == -1) hi = mid;
        else break; // inconclusive: keep the conclusive hull
    }
    PressureBracket b;
    b.lo = lo;
    b.hi = hi;
    b.method = "transition_scan";
    out.beta_star = b;
    out.verdict = ScanVerdict::TransitionLocated;
    return out;
}

inline TransitionScanResult transition_scan(const Potential& phi,
                                            std::shared_ptr<const MarkedOrbit> orbit,
                                            double beta_lo, double beta_hi, int grid_size,
                                            TwoVarOptions opt = {}) {
    TwoVarEvaluator ev(phi, std::move(orbit), opt);
    return transition_scan(ev, beta_lo, beta_hi, grid_size);
}

} // namespace thermoscope
