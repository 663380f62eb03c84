#pragma once

#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "thermoscope/map.hpp"
#include "thermoscope/potential.hpp"

namespace thermoscope {

struct PressureBracket {
    double lo = 0.0;
    double hi = 0.0;
    int depth = 0;
    std::string method;

    double width() const { return hi - lo; }
    bool contains(double v) const { return lo <= v && v <= hi; }
};

inline PressureBracket intersect(const PressureBracket& a, const PressureBracket& b) {
    PressureBracket r = a;
    r.lo = std::max(a.lo, b.lo);
    r.hi = std::min(a.hi, b.hi);
    if (r.lo > r.hi) { // numerically inconsistent; keep the tighter original
        return a.width() <= b.width() ? a : b;
    }
    return r;
}

// Streaming log-sum-exp with a fixed accumulation order.
struct LogSumAcc {
    double shift = -std::numeric_limits<double>::infinity();
    double sum = 0.0;

    void add(double a) {
        if (a == -std::numeric_limits<double>::infinity()) return;
        if (a <= shift) {
            sum += std::exp(a - shift);
        } else {
            sum = sum * std::exp(shift - a) + 1.0;
            shift = a;
        }
    }
    void merge(const LogSumAcc& o) {
        if (o.sum == 0.0) return;
        if (o.shift <= shift) {
            sum += o.sum * std::exp(o.shift - shift);
        } else {
            sum = sum * std::exp(shift - o.shift) + o.sum;
            shift = o.shift;
        }
    }
    double log_value() const {
        if (sum == 0.0) return -std::numeric_limits<double>::infinity();
        return shift + std::log(sum);
    }
};

namespace detail {

struct CylinderSums {
    LogSumAcc lo, hi, point; // certified inf / sup sums and point values
};

// Depth-first walk over itinerary cylinders.  A child g_b(C) prepends one
// symbol, so its image chain is its own interval followed by the parent's
// chain: the per-step bounds accumulate along the ancestor path.
struct PartitionWalker {
    const Potential& phi;
    const MapParams& mp;
    int target_depth;
    double step_tol;
    int step_budget;
    bool with_point; // track a preimage of base_y for the tree sum
    double base_y = 1.0;

    void walk(double a, double b, double z, double inf_sum, double sup_sum, double point_sum,
              int depth, CylinderSums& out) const {
        if (depth == target_depth) {
            out.lo.add(inf_sum);
            out.hi.add(sup_sum);
            if (with_point) out.point.add(point_sum);
            return;
        }
        // branch 0 child
        {
            double a0 = (a == 0.0) ? 0.0 : inverse_branch(a, 0, mp);
            double b0 = inverse_branch(b, 0, mp);
            auto sup = certified_sup(phi.value, a0, b0, phi.gamma, phi.norms.semi_hi, step_tol,
                                     step_budget);
            auto inf = certified_inf(phi.value, a0, b0, phi.gamma, phi.norms.semi_hi, step_tol,
                                     step_budget);
            double z0 = with_point ? inverse_branch(z, 0, mp) : 0.0;
            walk(a0, b0, z0, inf_sum + inf.lo, sup_sum + sup.hi,
                 with_point ? point_sum + phi(z0) : 0.0, depth + 1, out);
        }
        // branch 1 child; g1 extends to target 0 with value x1
        {
            double a1 = (a == 0.0) ? mp.x1 : inverse_branch(a, 1, mp);
            double b1 = inverse_branch(b, 1, mp);
            auto sup = certified_sup(phi.value, a1, b1, phi.gamma, phi.norms.semi_hi, step_tol,
                                     step_budget);
            auto inf = certified_inf(phi.value, a1, b1, phi.gamma, phi.norms.semi_hi, step_tol,
                                     step_budget);
            double z1 = with_point ? inverse_branch(z, 1, mp) : 0.0;
            walk(a1, b1, z1, inf_sum + inf.lo, sup_sum + sup.hi,
                 with_point ? point_sum + phi(z1) : 0.0, depth + 1, out);
        }
    }

    CylinderSums run(int threads) const {
        CylinderSums total;
        if (target_depth < 2 || threads <= 1) {
            walk(0.0, 1.0, base_y, 0.0, 0.0, 0.0, 0, total);
            return total;
        }
        // split structurally at depth 1 so the combine order is fixed
        struct Start { double a, b, z, inf0, sup0, pt0; };
        std::vector<Start> starts;
        {
            double a0 = 0.0, b0 = inverse_branch(1.0, 0, mp);
            auto s = certified_sup(phi.value, a0, b0, phi.gamma, phi.norms.semi_hi, step_tol, step_budget);
            auto i = certified_inf(phi.value, a0, b0, phi.gamma, phi.norms.semi_hi, step_tol, step_budget);
            double z0 = with_point ? inverse_branch(base_y, 0, mp) : 0.0;
            starts.push_back({a0, b0, z0, i.lo, s.hi, with_point ? phi(z0) : 0.0});
        }
        {
            double a1 = mp.x1, b1 = 1.0;
            auto s = certified_sup(phi.value, a1, b1, phi.gamma, phi.norms.semi_hi, step_tol, step_budget);
            auto i = certified_inf(phi.value, a1, b1, phi.gamma, phi.norms.semi_hi, step_tol, step_budget);
            double z1 = with_point ? inverse_branch(base_y, 1, mp) : 0.0;
            starts.push_back({a1, b1, z1, i.lo, s.hi, with_point ? phi(z1) : 0.0});
        }
        std::vector<std::future<CylinderSums>> futs;
        for (const auto& st : starts) {
            futs.push_back(std::async(std::launch::async, [this, st]() {
                CylinderSums part;
                walk(st.a, st.b, st.z, st.inf0, st.sup0, st.pt0, 1, part);
                return part;
            }));
        }
        for (auto& f : futs) {
            CylinderSums part = f.get();
            total.lo.merge(part.lo);
            total.hi.merge(part.hi);
            total.point.merge(part.point);
        }
        return total;
    }
};

} // namespace detail

constexpr int kMaxEnumerationDepth = 24;

// (1/n) log sum over depth-n cylinders of sup exp(S_n phi), bracketed from
// both sides: upper by per-step certified sups (the sum is subadditive in
// n, so every depth bounds the pressure from above), lower by per-step
// certified infs (supermultiplicative, so every depth bounds from below).
inline PressureBracket pressure_partition(const Potential& phi, int n, const MapParams& mp,
                                          int threads = 1, double step_tol = 1e-4,
                                          int step_budget = 24) {
    if (n < 1 || n > kMaxEnumerationDepth)
        throw std::domain_error("pressure_partition: depth must be in [1, 24]");
    detail::PartitionWalker w{phi, mp, n, step_tol, step_budget, false};
    auto sums = w.run(threads);
    PressureBracket b;
    b.lo = sums.lo.log_value() / n;
    b.hi = sums.hi.log_value() / n;
    b.depth = n;
    b.method = "partition";
    return b;
}

struct TreePressure {
    PressureBracket bracket;
    double value = 0.0; // (1/n) log of the plain preimage sum
};

inline TreePressure pressure_tree(const Potential& phi, double y, int n, const MapParams& mp,
                                  int threads = 1, double step_tol = 1e-4, int step_budget = 24) {
    if (!(y > 0.0 && y <= 1.0)) throw std::domain_error("pressure_tree: base point must be in (0,1]");
    if (n < 1 || n > kMaxEnumerationDepth)
        throw std::domain_error("pressure_tree: depth must be in [1, 24]");
    detail::PartitionWalker w{phi, mp, n, step_tol, step_budget, true, y};
    auto sums = w.run(threads);
    TreePressure t;
    t.bracket.lo = sums.lo.log_value() / n;
    t.bracket.hi = sums.hi.log_value() / n;
    t.bracket.depth = n;
    t.bracket.method = "tree";
    t.value = sums.point.log_value() / n;
    return t;
}

} // namespace thermoscope
