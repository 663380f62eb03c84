#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "thermoscope/induced.hpp"
#include "thermoscope/two_variable.hpp"

namespace thermoscope {

// ---------------------------------------------------------------------------
// distortion constants
// ---------------------------------------------------------------------------

struct DistortionConstants {
    double eps0 = 0.0;  // empirical indifferent-branch expansion rate
    double eps1 = 0.0;  // min(branch floor, eps0)
    double c1_log = 0.0; // log of the distortion constant C1
    double c1 = 1.0;
    double holder_logdf = 0.0;
    double k_const = 1.0; // x_n^{gamma0-1} <= K n^{-(gamma0-1)/alpha}
    double d_const = 0.0; // variation of ergodic sums <= D |phi|_{1,gamma}
    double gamma = 1.0;
    int scan_horizon = 0;
};

inline DistortionConstants distortion_constants(const MarkedOrbit& orbit, double gamma,
                                                int scan_horizon) {
    if (scan_horizon < 1000) throw std::domain_error("distortion_constants: horizon >= 1000");
    if (static_cast<std::size_t>(scan_horizon) + 1 > orbit.max_index)
        throw std::domain_error("distortion_constants: orbit cache too short");
    const MapParams& mp = orbit.params;
    const double a = mp.alpha;
    DistortionConstants dc;
    dc.gamma = gamma;
    dc.scan_horizon = scan_horizon;

    // eps0: largest eps with (1 + eps n)^{1/alpha+1} <= Df^n on J_n, using
    // the infimum of Df^n over J_n, attained at the deep endpoint x_{n+1}
    double log_dfn = 0.0; // log Df^n(x_{n+1}) accumulated over marked points
    double eps0 = std::numeric_limits<double>::infinity();
    const double pw = a / (a + 1.0);
    for (int n = 1; n <= scan_horizon; ++n) {
        log_dfn += std::log(map_derivative(orbit.x(n + 1), mp));
        double cand = (std::exp(pw * log_dfn) - 1.0) / double(n);
        eps0 = std::min(eps0, cand);
    }
    dc.eps0 = std::min(eps0, 0.999999);

    double branch_floor = std::pow(map_derivative(mp.x1, mp), pw) - 1.0;
    dc.eps1 = std::min(branch_floor, dc.eps0);

    // C1' = |J0| * Hol(log Df) * sum_m (1 + eps1 m)^{-h (1/alpha + 1)}
    const double h = std::min(1.0, a);
    dc.holder_logdf = (1.0 + a) * std::max(1.0, a);
    const double s = h * (1.0 / a + 1.0);
    double sum = 0.0;
    const int M = 100000;
    for (int m = 0; m <= M; ++m) sum += std::pow(1.0 + dc.eps1 * m, -s);
    sum += std::pow(1.0 + dc.eps1 * M, 1.0 - s) / (dc.eps1 * (s - 1.0));
    dc.c1_log = (1.0 - mp.x1) * dc.holder_logdf * sum;
    dc.c1 = std::exp(dc.c1_log);

    const double g0 = std::min(1.0, gamma);
    double k_const = 1.0;
    for (int n = 1; n <= scan_horizon; ++n)
        k_const = std::max(k_const, std::pow(orbit.x(n), g0 - 1.0) *
                                        std::pow(double(n), (g0 - 1.0) / a));
    dc.k_const = k_const;

    const double q = g0 / a;
    double zsum = 0.0;
    for (int j = 1; j <= M; ++j) zsum += std::pow(double(j), -(1.0 + q));
    zsum += std::pow(double(M), -q) / q;
    dc.d_const = k_const * gamma * std::pow(dc.eps1, -(1.0 / a + 1.0)) * zsum;
    return dc;
}

// ---------------------------------------------------------------------------
// Main Theorem constants: n0, c, m0
// ---------------------------------------------------------------------------

struct N0CResult {
    int n0 = 0;
    double c = 0.0;        // midpoint between the certified ratio sup and 0
    double ratio_sup = 0.0;
    bool ok = false;
    std::string note; // reason when not ok
};

inline N0CResult find_n0_and_c(const Potential& phi, const MarkedOrbit& orbit) {
    N0CResult out;
    if (phi.gamma > orbit.params.alpha + 1e-15) {
        out.note = "NoNegativeMargin: gamma exceeds alpha";
        return out;
    }
    ExcursionEnvelope env = find_negative_envelope(phi, orbit);
    if (!env.usable) {
        out.note = "NoNegativeMargin: " + env.note;
        return out;
    }
    out.n0 = env.n0;
    out.ratio_sup = env.ratio_sup;
    out.c = 0.5 * env.ratio_sup;
    out.ok = true;
    return out;
}

struct M0Result {
    double log_bound = 0.0; // log of the right-hand side of the threshold
    std::optional<std::int64_t> value; // least integer strictly above, when representable
    bool overflow = false;   // exceeds 2^62
    bool branch_exponential = false; // gamma = alpha branch
};

inline M0Result compute_m0(const Potential& phi, double alpha, double c, int n0,
                           const DistortionConstants& dc) {
    if (!(c < 0.0)) throw std::domain_error("compute_m0: c must be negative");
    if (n0 < 1) throw std::domain_error("compute_m0: n0 >= 1 required");
    const double g = phi.gamma;
    const double dn = dc.d_const * phi.norms.semi_hi + 2.0 * double(n0) * phi.norms.sup_hi;
    M0Result out;
    const double theta = 1.0 - g / alpha;
    if (theta > 1e-12) {
        long double base = 2.0L * std::pow((long double)(n0 + 1), (long double)theta) +
                           4.0L * std::pow((long double)alpha, (long double)(g / alpha)) *
                               (long double)theta / (-(long double)c) * (long double)dn;
        out.log_bound = double(std::log(base) / theta);
    } else {
        out.branch_exponential = true;
        out.log_bound = 2.0 * std::log(double(n0 + 1)) + (4.0 * alpha / (-c)) * dn;
    }
    if (out.log_bound > 62.0 * std::log(2.0)) {
        out.overflow = true;
        return out;
    }
    long double bound = std::exp((long double)out.log_bound);
    out.value = static_cast<std::int64_t>(std::floor((double)bound)) + 1;
    return out;
}

// ---------------------------------------------------------------------------
// periodic orbits of the induced full shift
// ---------------------------------------------------------------------------

struct PeriodicOrbit {
    std::vector<int> word; // return times, necklace representative
    double point = 0.0;    // periodic point of f in the word's cylinder
    int period = 0;        // total time
    std::vector<double> points; // forward orbit, length = period
    double min_point = 1.0;
    double step_residual = 0.0; // max |f(points[k]) - points[k+1]| along the cycle
};

inline double birkhoff_average(const PeriodicOrbit& po, const Potential& phi) {
    double s = 0.0;
    for (double z : po.points) s += phi(z);
    return s / double(po.period);
}

namespace detail {

inline bool is_necklace_representative(const std::vector<int>& w) {
    // lexicographically minimal among its rotations
    const std::size_t n = w.size();
    for (std::size_t r = 1; r < n; ++r) {
        for (std::size_t i = 0; i < n; ++i) {
            int a = w[(i + r) % n], b = w[i];
            if (a < b) return false;
            if (a > b) break;
        }
    }
    return true;
}

} // namespace detail

// Periodic point of the composed inverse branch of a return word: the
// full-branch property makes it the unique fixed point, reached by
// iterating the contraction from any point of J0.
inline PeriodicOrbit locate_periodic_orbit(const std::vector<int>& word, const MapParams& mp) {
    PeriodicOrbit po;
    po.word = word;
    po.period = 0;
    for (int n : word) po.period += n;
    double z = 1.0;
    std::vector<double> chain;
    for (int it = 0; it < 200; ++it) {
        double prev = z;
        chain.clear();
        for (auto w = word.rbegin(); w != word.rend(); ++w) {
            for (int k = 1; k < *w; ++k) {
                z = inverse_branch(z, 0, mp);
                chain.push_back(z);
            }
            z = inverse_branch(z, 1, mp);
            chain.push_back(z);
        }
        if (std::fabs(z - prev) < 0.5 * mp.solver_tol && it > 2) break;
    }
    po.point = z;
    // the chain holds the backward orbit from the fixed point; reversed it
    // is the forward orbit starting at the point itself
    po.points.assign(chain.rbegin(), chain.rend());
    po.min_point = *std::min_element(po.points.begin(), po.points.end());
    // single-step consistency does not amplify with the period
    double res = 0.0;
    for (std::size_t k = 0; k < po.points.size(); ++k) {
        double next = po.points[(k + 1) % po.points.size()];
        res = std::max(res, std::fabs(map_forward(po.points[k], mp) - next));
    }
    po.step_residual = res;
    return po;
}

inline std::vector<PeriodicOrbit> enumerate_periodic_orbits(const MapParams& mp,
                                                            int max_total_period,
                                                            int max_return_time,
                                                            double region_floor = 0.0) {
    if (max_total_period < 1) throw std::domain_error("enumerate_periodic_orbits: N >= 1");
    std::vector<PeriodicOrbit> out;
    std::vector<int> word;
    auto rec = [&](auto&& self, int remaining) -> void {
        if (!word.empty() && detail::is_necklace_representative(word)) {
            PeriodicOrbit po = locate_periodic_orbit(word, mp);
            if (po.min_point >= region_floor && po.step_residual < 10.0 * mp.solver_tol)
                out.push_back(std::move(po));
        }
        for (int n = 1; n <= std::min(remaining, max_return_time); ++n) {
            word.push_back(n);
            self(self, remaining - n);
            word.pop_back();
        }
    };
    rec(rec, max_total_period);
    return out;
}

// ---------------------------------------------------------------------------
// compact-support optimization bound (excursion graph, max mean cycle)
// ---------------------------------------------------------------------------

struct CompactSupResult {
    double eta_lower = -std::numeric_limits<double>::infinity();
    double eta_upper = std::numeric_limits<double>::infinity();
    int graph_nodes = 0;
    int graph_depth = 0;
    int m0_used = 0;
    bool graph_truncated = false;
    std::optional<PeriodicOrbit> best_orbit;
};

namespace detail {

// Karp's max mean cycle on one strongly connected component.
inline double karp_max_mean(const std::vector<int>& nodes,
                            const std::vector<std::vector<std::pair<int, double>>>& adj,
                            const std::vector<int>& comp, int cid) {
    const int n = static_cast<int>(nodes.size());
    if (n == 0) return -std::numeric_limits<double>::infinity();
    std::vector<int> local(comp.size(), -1);
    for (int i = 0; i < n; ++i) local[nodes[i]] = i;
    const double ninf = -std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> F(n + 1, std::vector<double>(n, ninf));
    for (int v = 0; v < n; ++v) F[0][v] = 0.0;
    for (int k = 1; k <= n; ++k)
        for (int u = 0; u < n; ++u) {
            if (F[k - 1][u] == ninf) continue;
            for (auto [v, w] : adj[nodes[u]]) {
                if (comp[v] != cid) continue;
                int lv = local[v];
                F[k][lv] = std::max(F[k][lv], F[k - 1][u] + w);
            }
        }
    double best = ninf;
    for (int v = 0; v < n; ++v) {
        if (F[n][v] == ninf) continue;
        double m = std::numeric_limits<double>::infinity();
        for (int k = 0; k < n; ++k)
            if (F[k][v] != ninf)
                m = std::min(m, (F[n][v] - F[k][v]) / double(n - k));
        best = std::max(best, m);
    }
    return best;
}

} // namespace detail

// Upper bound for sup { int phi dnu : supp(nu) in [x_{m0}, 1] } via the max
// mean cycle of the excursion graph: nodes are the levels J_1..J_{m0-1}
// and the depth-k refinement of J0, edges follow the dynamics, and each
// edge carries a certified sup of phi over its source cell.  Lower bound
// from periodic orbits staying in the window.
inline CompactSupResult compact_sup(const Potential& phi, const MarkedOrbit& orbit,
                                    std::int64_t m0, int graph_depth, int orbit_period_budget = 12,
                                    int node_budget = 6000) {
    if (m0 < 2) throw std::domain_error("compact_sup: m0 >= 2 required");
    if (graph_depth < 2 || graph_depth > 20) throw std::domain_error("compact_sup: depth in [2,20]");
    const MapParams& mp = orbit.params;
    CompactSupResult out;
    out.graph_depth = graph_depth;

    int cells = 1 << (graph_depth - 1);
    std::int64_t m_eff = m0;
    if (m_eff + cells > node_budget) {
        m_eff = std::max<std::int64_t>(2, node_budget - cells);
        out.graph_truncated = true;
    }
    if (static_cast<std::size_t>(m_eff) + 1 > orbit.max_index)
        m_eff = static_cast<std::int64_t>(orbit.max_index) - 1;
    out.m0_used = static_cast<int>(m_eff);

    // nodes: 0..cells-1 = J0 cells (depth-k words starting with 1, indexed
    // by the remaining k-1 bits, MSB first); cells..cells+m_eff-2 = J_1..J_{m_eff-1}
    const int n_nodes = cells + static_cast<int>(m_eff) - 1;
    out.graph_nodes = n_nodes;
    auto level_node = [&](int j) { return cells + j - 1; }; // J_j, 1 <= j <= m_eff-1

    auto sup_cell = [&](double u, double v) {
        return certified_sup(phi.value, u, v, phi.gamma, phi.norms.semi_hi, 1e-9, 40).hi;
    };

    std::vector<std::vector<std::pair<int, double>>> adj(n_nodes);
    // J-level nodes: deterministic descent J_j -> J_{j-1}; J_1 -> all cells
    for (int j = 1; j < m_eff; ++j) {
        double w = sup_cell(orbit.x(j + 1), orbit.x(j));
        if (j >= 2) adj[level_node(j)].push_back({level_node(j - 1), w});
        else
            for (int c = 0; c < cells; ++c) adj[level_node(1)].push_back({c, w});
    }
    // J0 cells
    for (int c = 0; c < cells; ++c) {
        std::string word = "1";
        for (int b = graph_depth - 2; b >= 0; --b) word.push_back((c >> b) & 1 ? '1' : '0');
        Cylinder cyl = cylinder_from_word(word, mp);
        double w = sup_cell(cyl.lo, cyl.hi);
        std::string img = word.substr(1); // image itinerary, length k-1
        if (img[0] == '1') {
            int rest = c & ((1 << (graph_depth - 2)) - 1); // strip leading bit of img
            adj[c].push_back({(rest << 1) | 0, w});
            adj[c].push_back({(rest << 1) | 1, w});
        } else {
            int z = 0;
            while (z < int(img.size()) && img[z] == '0') ++z;
            if (z == int(img.size())) {
                // image [0, x_{k-1}]: may land in any level >= k-1
                for (int j = z; j < m_eff; ++j) adj[c].push_back({level_node(j), w});
            } else if (z < m_eff) {
                adj[c].push_back({level_node(z), w});
            } // deeper landings leave the window; no edge
        }
    }

    // strongly connected components (Kosaraju), then Karp per component
    std::vector<int> order;
    order.reserve(n_nodes);
    {
        std::vector<char> seen(n_nodes, 0);
        for (int s = 0; s < n_nodes; ++s) {
            if (seen[s]) continue;
            std::vector<std::pair<int, std::size_t>> st{{s, 0}};
            seen[s] = 1;
            while (!st.empty()) {
                auto& [u, i] = st.back();
                if (i < adj[u].size()) {
                    int v = adj[u][i++].first;
                    if (!seen[v]) { seen[v] = 1; st.push_back({v, 0}); }
                } else {
                    order.push_back(u);
                    st.pop_back();
                }
            }
        }
    }
    std::vector<std::vector<int>> radj(n_nodes);
    for (int u = 0; u < n_nodes; ++u)
        for (auto [v, w] : adj[u]) radj[v].push_back(u);
    std::vector<int> comp(n_nodes, -1);
    int n_comp = 0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (comp[*it] >= 0) continue;
        std::vector<int> st{*it};
        comp[*it] = n_comp;
        while (!st.empty()) {
            int u = st.back();
            st.pop_back();
            for (int v : radj[u])
                if (comp[v] < 0) { comp[v] = n_comp; st.push_back(v); }
        }
        ++n_comp;
    }
    std::vector<std::vector<int>> members(n_comp);
    for (int u = 0; u < n_nodes; ++u) members[comp[u]].push_back(u);
    double best = -std::numeric_limits<double>::infinity();
    for (int cid = 0; cid < n_comp; ++cid)
        if (members[cid].size() >= 1)
            best = std::max(best, detail::karp_max_mean(members[cid], adj, comp, cid));
    out.eta_upper = best - phi.phi0;

    // periodic-orbit lower bound inside the window
    double floor_x = orbit.x(static_cast<std::size_t>(m_eff));
    auto orbits = enumerate_periodic_orbits(mp, orbit_period_budget,
                                            std::min<int>(orbit_period_budget, int(m_eff)), floor_x);
    double best_avg = -std::numeric_limits<double>::infinity();
    for (auto& po : orbits) {
        double avg = birkhoff_average(po, phi);
        if (avg > best_avg) {
            best_avg = avg;
            out.best_orbit = po;
        }
    }
    out.eta_lower = best_avg - phi.phi0;
    return out;
}

// ---------------------------------------------------------------------------
// the certification pipeline
// ---------------------------------------------------------------------------

enum class Verdict { CertifiedTransition, CertifiedNoTransition, Undetermined };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::CertifiedTransition: return "CertifiedTransition";
        case Verdict::CertifiedNoTransition: return "CertifiedNoTransition";
        case Verdict::Undetermined: return "Undetermined";
    }
    return "?";
}

struct CertifyBudgets {
    int scan_horizon = 2000;
    int orbit_total_period = 12;
    int graph_depth = 10;
    std::int64_t graph_m0_cap = 3000;
    int n_max_induced = 2000;
    double fastpath_beta_max = 1 << 20;
    int fastpath_ell_max = 2;
};

struct TransitionCertificate {
    std::string potential_name;
    double alpha = 0.0, gamma = 0.0;
    Verdict verdict = Verdict::Undetermined;
    std::string route;   // which stage decided
    std::string witness; // orbit / comparison / Z_ell data
    LeadingCoefficient leading;
    DistortionConstants constants;
    N0CResult n0c;
    M0Result m0;
    bool m0_capped = false;
    CompactSupResult compact;
    bool compact_ran = false;
    std::optional<double> fastpath_beta;
    std::optional<int> fastpath_ell;
    std::optional<double> fastpath_log_z;
    std::map<std::string, double> timings_ms;
};

inline TransitionCertificate certify_transition(const Potential& phi,
                                                std::shared_ptr<const MarkedOrbit> orbit,
                                                CertifyBudgets budgets = {}) {
    const MapParams& mp = orbit->params;
    TransitionCertificate cert;
    cert.potential_name = phi.name;
    cert.alpha = mp.alpha;
    cert.gamma = phi.gamma;

    auto clock_ms = [] {
        return std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now().time_since_epoch())
            .count();
    };
    double t0 = clock_ms();

    cert.leading = leading_coefficient(phi);
    cert.timings_ms["leading_coefficient"] = clock_ms() - t0;

    // (a) asymptotic exponent route
    if (phi.gamma > mp.alpha + 1e-15) {
        cert.verdict = Verdict::CertifiedNoTransition;
        cert.route = "gamma>alpha";
        cert.witness = "phi - phi(0) >= -|phi|_{1,gamma} x^gamma with gamma > alpha; "
                       "P(beta phi) > beta phi(0) for all beta by the omega_gamma comparison";
        return cert;
    }
    if (cert.leading.converged && cert.leading.c - cert.leading.error_bar > 0.0) {
        cert.verdict = Verdict::CertifiedNoTransition;
        cert.route = "positive-leading-coefficient";
        cert.witness = "leading coefficient " + std::to_string(cert.leading.c) +
                       " > 0: the point mass at 0 is not maximizing";
        return cert;
    }

    t0 = clock_ms();
    cert.constants = distortion_constants(*orbit, phi.gamma, budgets.scan_horizon);
    cert.timings_ms["distortion_constants"] = clock_ms() - t0;

    // (b) Main Theorem conditions: n0/c, m0, compact optimization window
    t0 = clock_ms();
    cert.n0c = find_n0_and_c(phi, *orbit);
    cert.timings_ms["find_n0_and_c"] = clock_ms() - t0;
    if (cert.n0c.ok) {
        cert.m0 = compute_m0(phi, mp.alpha, cert.n0c.c, cert.n0c.n0, cert.constants);
        std::int64_t m_graph;
        if (cert.m0.overflow || !cert.m0.value || *cert.m0.value > budgets.graph_m0_cap) {
            m_graph = budgets.graph_m0_cap;
            cert.m0_capped = true;
        } else {
            m_graph = std::max<std::int64_t>(2, *cert.m0.value);
        }
        t0 = clock_ms();
        cert.compact = compact_sup(phi, *orbit, std::max<std::int64_t>(2, m_graph),
                                   budgets.graph_depth, budgets.orbit_total_period);
        cert.compact_ran = true;
        cert.timings_ms["compact_sup"] = clock_ms() - t0;
        if (cert.compact.eta_lower >= 0.0) {
            cert.verdict = Verdict::CertifiedNoTransition;
            cert.route = "orbit-witness";
            std::string w = "periodic orbit with Birkhoff average >= phi(0)";
            if (cert.compact.best_orbit) {
                w += "; word (";
                for (std::size_t i = 0; i < cert.compact.best_orbit->word.size(); ++i)
                    w += (i ? "," : "") + std::to_string(cert.compact.best_orbit->word[i]);
                w += "), point " + std::to_string(cert.compact.best_orbit->point);
            }
            cert.witness = w;
            return cert;
        }
        if (!cert.m0_capped && !cert.compact.graph_truncated && cert.compact.eta_upper < 0.0) {
            cert.verdict = Verdict::CertifiedTransition;
            cert.route = "main-theorem-condition-3";
            cert.witness = "eta_upper = " + std::to_string(cert.compact.eta_upper) +
                           " < 0 at the Main Theorem window m0 = " +
                           std::to_string(*cert.m0.value);
            return cert;
        }
    }

    // (c) independent fast path: a certified Z_ell(beta phi, beta phi(0)) < 1
    t0 = clock_ms();
    TwoVarOptions tv;
    tv.n_max = budgets.n_max_induced;
    tv.ell_max = budgets.fastpath_ell_max;
    TwoVarEvaluator ev(phi, orbit, tv);
    for (double beta = 1.0; beta <= budgets.fastpath_beta_max; beta *= 2.0) {
        double p = beta * phi.phi0;
        if (ev.system().certify_divergence_scaled(beta, p)) continue;
        for (int ell = 1; ell <= budgets.fastpath_ell_max; ++ell) {
            ZBracket zb = z_partition(ev.system(), beta, p, ell);
            if (zb.log_z_hi < 0.0) {
                cert.verdict = Verdict::CertifiedTransition;
                cert.route = "fastpath-zell";
                cert.fastpath_beta = beta;
                cert.fastpath_ell = ell;
                cert.fastpath_log_z = zb.log_z_hi;
                cert.witness = "Z_" + std::to_string(ell) + "(beta phi, beta phi(0)) <= exp(" +
                               std::to_string(zb.log_z_hi) + ") < 1 at beta = " +
                               std::to_string(beta);
                cert.timings_ms["fastpath"] = clock_ms() - t0;
                return cert;
            }
        }
    }
    cert.timings_ms["fastpath"] = clock_ms() - t0;
    cert.witness = "no stage reached a certified conclusion within budgets";
    return cert;
}

// ---------------------------------------------------------------------------
// Key Lemma spot check
// ---------------------------------------------------------------------------

struct KeyLemmaReport {
    bool conclusive = false; // pressure.lo strictly above every orbit average
    double margin = 0.0;     // pressure.lo - max average
    double max_average = 0.0;
    std::vector<double> averages;
};

inline KeyLemmaReport key_lemma_check(const Potential& phi,
                                      const std::vector<PeriodicOrbit>& orbits,
                                      const PressureBracket& pressure) {
    KeyLemmaReport rep;
    rep.max_average = -std::numeric_limits<double>::infinity();
    for (const auto& po : orbits) {
        double avg = birkhoff_average(po, phi);
        rep.averages.push_back(avg);
        rep.max_average = std::max(rep.max_average, avg);
    }
    rep.margin = pressure.lo - rep.max_average;
    rep.conclusive = rep.margin > 0.0;
    return rep;
}

} // namespace thermoscope
