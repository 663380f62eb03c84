#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <vector>

#include "thermoscope/induced.hpp"

namespace thermoscope {

// Finite-state truncation of the induced transfer operator.  States are
// return branches conditioned on where the return lands: piece (n, i) is
// the part of I_n that F maps onto grid cell G_i of J0.  Products of
// per-edge certified sups majorize preimage sums of L^l, products of
// certified infs stay below them, so Collatz-Wielandt bounds for the two
// spectral radii bracket the two-variable pressure.
//
// Edge weights scale linearly in beta and the letter count multiplies p,
// so one geometry build serves a whole temperature scan.
struct InducedOperatorOptions {
    int n_cap = 40;   // letters represented individually
    int split0 = 16;  // pieces of I_1; halves for each deeper letter
    int iterations = 140;
};

class InducedOperator {
  public:
    using Options = InducedOperatorOptions;

    InducedOperator(const InducedSystem& sys, Options opt = Options())
        : sys_(sys), opt_(opt) {
        build_geometry();
        build_weights();
    }

    struct Bracket {
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        bool has_lo = false, has_hi = false;
    };

    // Bracket for P(beta * phi, p) built on this geometry.
    Bracket pressure_bracket(double beta, double p) const {
        Bracket out;
        const int S = static_cast<int>(states_.size());
        const int NC = opt_.n_cap;

        // tail mass sum_{m > n_cap} exp(beta sup_S(m) - m p)
        LogSumAcc tail;
        for (int m = NC + 1; m <= sys_.n_max(); ++m)
            tail.add(beta * sys_.sup_S(m) - double(m) * p);
        bool tail_ok = false;
        double log_tail = std::numeric_limits<double>::infinity();
        {
            auto r = sys_.tail_bound_scaled(beta, p);
            if (r.finite) {
                tail.add(r.log_sum);
                log_tail = tail.log_value();
                tail_ok = true;
            }
        }

        // scaled entry tables
        std::vector<double> e_sup(std::size_t(NC + 1) * (S + 1), 0.0);
        std::vector<double> e_inf(std::size_t(NC + 1) * (S + 1), 0.0);
        double k_shift = -std::numeric_limits<double>::infinity();
        for (int n = 1; n <= NC; ++n)
            for (int w = 0; w <= S; ++w)
                k_shift = std::max(k_shift, beta * w_sup_[idx(n, w)] - double(n) * p);
        if (tail_ok) k_shift = std::max(k_shift, log_tail);
        if (!std::isfinite(k_shift)) return out;
        for (int n = 1; n <= NC; ++n) {
            for (int w = 0; w <= S; ++w) {
                e_sup[idx(n, w)] = std::exp(beta * w_sup_[idx(n, w)] - double(n) * p - k_shift) *
                                   (1.0 + 1e-12);
                e_inf[idx(n, w)] = std::exp(beta * w_inf_[idx(n, w)] - double(n) * p - k_shift) /
                                   (1.0 + 1e-12);
            }
        }
        double e_tail = tail_ok ? std::exp(log_tail - k_shift) * (1.0 + 1e-12)
                                : std::numeric_limits<double>::infinity();

        // ---- upper: overlap edges plus the lumped tail state ----
        if (tail_ok) {
            std::vector<double> x(S + 1, 1.0), y(S + 1, 0.0);
            double ratio_hi = std::numeric_limits<double>::infinity();
            for (int it = 0; it < opt_.iterations; ++it) {
                // partial sums over grid cells: P(i, n) = sum_{w in overlap(i)} E(n, w) x_w
                double x_total = 0.0;
                for (int w = 0; w <= S; ++w) x_total += x[w];
                for (int u = 0; u < S; ++u) y[u] = 0.0;
                for (int i = 0; i < int(grid_.size()); ++i) {
                    for (int n = 1; n <= NC; ++n) acc_[std::size_t(i) * NC + n - 1] = 0.0;
                    for (int w : overlap_[i]) {
                        double xw = x[w];
                        if (xw == 0.0) continue;
                        for (int n = 1; n <= NC; ++n)
                            acc_[std::size_t(i) * NC + n - 1] += e_sup[idx(n, w)] * xw;
                    }
                }
                for (int u = 0; u < S; ++u)
                    y[u] = acc_[std::size_t(states_[u].cell) * NC + states_[u].letter - 1];
                y[S] = e_tail * x_total; // tail row
                double mx = 0.0, r = 0.0;
                for (int w = 0; w <= S; ++w) mx = std::max(mx, y[w]);
                if (mx <= 0.0) { ratio_hi = 0.0; break; }
                if (it + 1 == opt_.iterations) {
                    r = 0.0;
                    for (int w = 0; w <= S; ++w) r = std::max(r, y[w] / std::max(x[w], 1e-300));
                    ratio_hi = r;
                }
                for (int w = 0; w <= S; ++w) x[w] = std::max(y[w] / mx, 1e-250);
            }
            if (ratio_hi < std::numeric_limits<double>::infinity()) {
                out.hi = k_shift + std::log(ratio_hi);
                out.has_hi = true;
            }
        }

        // ---- lower: containment edges, restricted to anchor-reaching states ----
        {
            std::vector<double> x(S, 0.0), y(S, 0.0);
            for (int u = 0; u < S; ++u) x[u] = reach_anchor_[u] ? 1.0 : 0.0;
            double ratio_lo = 0.0;
            for (int it = 0; it < opt_.iterations; ++it) {
                for (int i = 0; i < int(grid_.size()); ++i) {
                    for (int n = 1; n <= NC; ++n) acc_[std::size_t(i) * NC + n - 1] = 0.0;
                    for (int w : inside_[i]) {
                        if (w >= S || !reach_anchor_[w]) continue;
                        double xw = x[w];
                        if (xw == 0.0) continue;
                        for (int n = 1; n <= NC; ++n)
                            acc_[std::size_t(i) * NC + n - 1] += e_inf[idx(n, w)] * xw;
                    }
                }
                double mx = 0.0;
                for (int u = 0; u < S; ++u) {
                    y[u] = reach_anchor_[u]
                               ? acc_[std::size_t(states_[u].cell) * NC + states_[u].letter - 1]
                               : 0.0;
                    mx = std::max(mx, y[u]);
                }
                if (mx <= 0.0) { ratio_lo = 0.0; break; }
                if (it + 1 == opt_.iterations) {
                    double r = std::numeric_limits<double>::infinity();
                    for (int u = 0; u < S; ++u)
                        if (x[u] > 0.0) r = std::min(r, y[u] / x[u]);
                    ratio_lo = std::isfinite(r) ? r : 0.0;
                }
                for (int u = 0; u < S; ++u) x[u] = y[u] / mx;
            }
            if (ratio_lo > 0.0) {
                out.lo = k_shift + std::log(ratio_lo);
                out.has_lo = true;
            }
        }
        return out;
    }

  private:
    struct State {
        int letter; // return time
        int cell;   // grid cell of its F-image
        double dlo, dhi; // domain interval in J0
    };
    struct Cell { double lo, hi; };

    std::size_t idx(int n, int w) const { return std::size_t(n) * (states_.size() + 1) + w; }

    void build_geometry() {
        const MarkedOrbit& ob = sys_.orbit();
        const int NC = opt_.n_cap;
        if (sys_.n_max() < NC + 1) throw std::domain_error("InducedOperator: n_cap beyond table");
        int split = opt_.split0;
        for (int n = 1; n <= NC; ++n) {
            double lo = ob.y(n + 1), hi = ob.y(n);
            int k = std::max(1, split);
            for (int j = 0; j < k; ++j)
                grid_.push_back({lo + (hi - lo) * double(j) / k, lo + (hi - lo) * double(j + 1) / k});
            split /= 2;
        }
        grid_.push_back({ob.params.x1, ob.y(NC + 1)}); // residual image cell
        // pieces: pull each grid cell back through each letter branch
        const MapParams& mp = ob.params;
        for (int i = 0; i < int(grid_.size()); ++i) {
            double zlo = grid_[i].lo, zhi = grid_[i].hi;
            double alo = zlo, ahi = zhi;
            for (int n = 1; n <= NC; ++n) {
                double dlo = inverse_branch(std::max(alo, 1e-300), 1, mp);
                double dhi = inverse_branch(ahi, 1, mp);
                states_.push_back({n, i, dlo, dhi});
                alo = inverse_branch(alo, 0, mp);
                ahi = inverse_branch(ahi, 0, mp);
            }
        }
        tail_dlo_ = mp.x1;
        tail_dhi_ = ob.y(NC + 1);
        const int S = static_cast<int>(states_.size());
        inside_.assign(grid_.size(), {});
        overlap_.assign(grid_.size(), {});
        // containment must be strict for the lower graph, overlap must be
        // generous for the upper one
        const double slack = 4.0 * mp.solver_tol;
        for (int i = 0; i < int(grid_.size()); ++i) {
            for (int w = 0; w < S; ++w) {
                const State& s = states_[w];
                if (s.dlo >= grid_[i].lo + slack && s.dhi <= grid_[i].hi - slack)
                    inside_[i].push_back(w);
                if (s.dhi > grid_[i].lo - slack && s.dlo < grid_[i].hi + slack)
                    overlap_[i].push_back(w);
            }
            if (tail_dhi_ > grid_[i].lo - slack && tail_dlo_ < grid_[i].hi + slack)
                overlap_[i].push_back(S);
        }
        acc_.assign(grid_.size() * std::size_t(opt_.n_cap), 0.0);

        // anchor: cells whose closure contains 1; reverse reachability over
        // containment edges
        std::vector<char> anchor(S, 0);
        for (int u = 0; u < S; ++u)
            if (grid_[states_[u].cell].hi >= 1.0 - 1e-12) anchor[u] = 1;
        reach_anchor_.assign(S, 0);
        std::deque<int> q;
        for (int u = 0; u < S; ++u)
            if (anchor[u]) { reach_anchor_[u] = 1; q.push_back(u); }
        // u reaches v when v is inside u's image cell; reverse edges: from v
        // back to every u whose cell contains v
        std::vector<std::vector<int>> rev(S);
        for (int i = 0; i < int(grid_.size()); ++i)
            for (int w : inside_[i])
                if (w < S)
                    for (int u = 0; u < S; ++u)
                        if (states_[u].cell == i) rev[w].push_back(u);
        while (!q.empty()) {
            int v = q.front();
            q.pop_front();
            for (int u : rev[v])
                if (!reach_anchor_[u]) { reach_anchor_[u] = 1; q.push_back(u); }
        }
    }

    void build_weights() {
        const MarkedOrbit& ob = sys_.orbit();
        const MapParams& mp = ob.params;
        const int NC = opt_.n_cap;
        const int S = static_cast<int>(states_.size());
        w_sup_.assign(std::size_t(NC + 1) * (S + 1), 0.0);
        w_inf_.assign(std::size_t(NC + 1) * (S + 1), 0.0);
        for (int w = 0; w <= S; ++w) {
            double tlo = (w < S) ? states_[w].dlo : tail_dlo_;
            double thi = (w < S) ? states_[w].dhi : tail_dhi_;
            double za = tlo, zb = thi;
            double chain_sup = 0.0, chain_inf = 0.0;
            for (int n = 1; n <= NC; ++n) {
                double a1 = inverse_branch(std::max(za, 1e-300), 1, mp);
                double b1 = inverse_branch(zb, 1, mp);
                w_sup_[idx(n, w)] = sys_.bound_sup(a1, b1).hi + chain_sup;
                w_inf_[idx(n, w)] = sys_.bound_inf(a1, b1).lo + chain_inf;
                za = (za <= 0.0) ? 0.0 : inverse_branch(za, 0, mp);
                zb = inverse_branch(zb, 0, mp);
                chain_sup += sys_.bound_sup(za, zb).hi;
                chain_inf += sys_.bound_inf(za, zb).lo;
            }
        }
    }

    const InducedSystem& sys_;
    Options opt_;
    std::vector<State> states_;
    std::vector<Cell> grid_;
    std::vector<std::vector<int>> inside_, overlap_;
    std::vector<char> reach_anchor_;
    std::vector<double> w_sup_, w_inf_;
    mutable std::vector<double> acc_;
    double tail_dlo_ = 0.0, tail_dhi_ = 0.0;
};

} // namespace thermoscope
