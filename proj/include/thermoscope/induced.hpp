#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "thermoscope/map.hpp"
#include "thermoscope/potential.hpp"
#include "thermoscope/pressure.hpp"

namespace thermoscope {

// First-return structure on J0 = (x1, 1].  Return time n means x in I_n
// (above the branch point) or in J_n (below it).
inline int return_time(double x, const MarkedOrbit& orbit) {
    const MapParams& mp = orbit.params;
    if (!(x > 0.0 && x <= 1.0)) throw std::domain_error("return_time: x must be in (0,1]");
    if (x > mp.x1) {
        // I_n = (y_{n+1}, y_n]
        if (orbit.max_index < 2 || x <= orbit.y(orbit.max_index))
            throw std::out_of_range("return_time: x deeper than cached y markers");
        std::size_t lo = 1, hi = orbit.max_index; // y(lo) >= x > y(hi)
        while (hi - lo > 1) {
            std::size_t mid = (lo + hi) / 2;
            if (x <= orbit.y(mid)) lo = mid; else hi = mid;
        }
        return static_cast<int>(lo);
    }
    // J_n = (x_{n+1}, x_n]
    if (x <= orbit.x(orbit.max_index))
        throw std::out_of_range("return_time: x deeper than cached x markers");
    std::size_t lo = 0, hi = orbit.max_index; // x(lo) >= x > x(hi)
    while (hi - lo > 1) {
        std::size_t mid = (lo + hi) / 2;
        if (x <= orbit.x(mid)) lo = mid; else hi = mid;
    }
    return static_cast<int>(lo);
}

// x = g1(g0^{n-1}(y)) is the unique point of I_n with f^n(x) = y.
inline double return_preimage(double y, int n, const MapParams& mp) {
    if (!(y > mp.x1 && y <= 1.0)) throw std::domain_error("return_preimage: y must be in (x1,1]");
    if (n < 1) throw std::domain_error("return_preimage: n >= 1 required");
    double z = y;
    for (int k = 1; k < n; ++k) z = inverse_branch(z, 0, mp);
    return inverse_branch(z, 1, mp);
}

// Certified deep-cusp control: phi(x) - phi(0) <= c_bar x^gamma on
// (0, x_{n0}] with c_bar < 0, and the marked-point lower bound
// x_n^gamma > n^{-gamma/alpha} / (2 alpha^{gamma/alpha}) for n >= n0.
// This makes the transfer-operator tails summable at p = phi(0).
struct ExcursionEnvelope {
    int n0 = 0;
    double c_bar = 0.0;
    double ratio_sup = 0.0; // certified upper bound for sup (phi-phi0)/x^gamma on (0, x_{n0}]
    bool usable = false;
    std::string note;
};

namespace detail {

// Upper bound for sup of (phi - phi0)/x^gamma over [u, v], 0 < u < v.
inline double ratio_sup_segment(const Potential& phi, double u, double v, double tol) {
    auto s = certified_sup(phi.value, u, v, phi.gamma, phi.norms.semi_hi, tol, 24);
    double num = s.hi - phi.phi0;
    return num >= 0.0 ? num / std::pow(u, phi.gamma) : num / std::pow(v, phi.gamma);
}

} // namespace detail

// Certified upper bound of sup over (0, cap] of (phi(x)-phi(0))/x^gamma.
// Geometric grid with per-segment interval bounds down to `floor`; below
// the floor the ratio is c + h with h controlled by the derivative-ratio
// deviation, sampled and inflated.
inline double ratio_sup_bound(const Potential& phi, double cap, double floor_ = 1e-9) {
    double sup = -std::numeric_limits<double>::infinity();
    double v = cap;
    while (v > floor_) {
        double u = std::max(floor_, v * 0.6);
        sup = std::max(sup, detail::ratio_sup_segment(phi, u, v, 1e-12));
        v = u;
    }
    auto lc = leading_coefficient(phi);
    double dev = 0.0;
    for (double x = floor_; x > 1e-13; x *= 0.25) {
        double r = phi.deriv(x) / (phi.gamma * std::pow(x, phi.gamma - 1.0));
        dev = std::max(dev, std::fabs(r - lc.c));
    }
    double near_zero = lc.c + 1.5 * dev + lc.error_bar;
    return std::max(sup, near_zero);
}

inline ExcursionEnvelope find_negative_envelope(const Potential& phi, const MarkedOrbit& orbit) {
    ExcursionEnvelope env;
    const MapParams& mp = orbit.params;
    double a = mp.alpha, g = phi.gamma;
    if (g > a) { env.note = "gamma exceeds alpha"; return env; }
    // smallest index from which the marked-point lower bound holds through the cache
    double lead = 1.0 / (2.0 * std::pow(a, g / a));
    std::size_t n_a = orbit.max_index + 1;
    for (std::size_t n = orbit.max_index; n >= 1; --n) {
        if (!(lead * std::pow(double(n), -g / a) < std::pow(orbit.x(n), g))) break;
        n_a = n;
        if (n == 1) break;
    }
    if (n_a > orbit.max_index) { env.note = "marked-point bound never holds in cache"; return env; }
    std::size_t limit = std::min<std::size_t>(orbit.max_index, n_a + 400);
    for (std::size_t n0 = n_a; n0 <= limit; ++n0) {
        double rs = ratio_sup_bound(phi, orbit.x(n0));
        if (rs < 0.0) {
            env.n0 = static_cast<int>(n0);
            env.ratio_sup = rs;
            env.c_bar = rs;
            env.usable = true;
            return env;
        }
        if (n0 - n_a > 4) n0 += (n0 - n_a) / 2; // ratio sups are monotone-ish, stride out
    }
    env.note = "ratio sup stays nonnegative over searched range";
    return env;
}

struct TailBound {
    double log_sum = -std::numeric_limits<double>::infinity();
    bool finite = true;
    std::string note;
};

// Letter table for the induced system: certified sup/inf of S_n phi over
// the I_n return cylinder, n = 1..n_max, with level bounds reused across
// letters and certified tail control past the truncation.
class InducedSystem {
  public:
    InducedSystem(const Potential& phi, std::shared_ptr<const MarkedOrbit> orbit, int n_max,
                  std::optional<ExcursionEnvelope> env = std::nullopt)
        : phi_(phi), orbit_(std::move(orbit)), n_max_(n_max) {
        const MarkedOrbit& ob = *orbit_;
        if (n_max_ < 1) throw std::domain_error("InducedSystem: n_max >= 1 required");
        if (static_cast<std::size_t>(n_max_) + 1 > ob.max_index)
            throw std::domain_error("InducedSystem: marked orbit shorter than n_max + 1");
        const MapParams& mp = ob.params;
        sup_J_.assign(n_max_ + 1, 0.0);
        inf_J_.assign(n_max_ + 1, 0.0);
        for (int k = 1; k <= n_max_; ++k) {
            sup_J_[k] = bound_sup(ob.x(k + 1), ob.x(k)).hi;
            inf_J_[k] = bound_inf(ob.x(k + 1), ob.x(k)).lo;
        }
        sup_S_.assign(n_max_ + 1, 0.0);
        inf_S_.assign(n_max_ + 1, 0.0);
        double pre_sup = 0.0, pre_inf = 0.0;
        for (int n = 1; n <= n_max_; ++n) {
            sup_S_[n] = bound_sup(ob.y(n + 1), ob.y(n)).hi + pre_sup;
            inf_S_[n] = bound_inf(ob.y(n + 1), ob.y(n)).lo + pre_inf;
            pre_sup += sup_J_[n];
            pre_inf += inf_J_[n];
        }
        head_sup_ = pre_sup - sup_J_[n_max_]; // sum over k = 1..n_max-1
        cap_phi_tail_ = certified_sup(phi_.value, 0.0, ob.x(n_max_), phi_.gamma,
                                      phi_.norms.semi_hi, 1e-12, 64).hi;
        cap_I_tail_ = certified_sup(phi_.value, mp.x1, ob.y(n_max_ + 1), phi_.gamma,
                                    phi_.norms.semi_hi, 1e-12, 64).hi;
        if (env && env->usable) env_ = *env;
        else env_ = find_negative_envelope(phi_, ob);
        // closed-form marked-point floor: X_{n+1} <= X_n + alpha for
        // X_n = x_n^{-alpha}, so x_n >= (alpha n + C)^{-1/alpha} with
        // C = x_1^{-alpha} - alpha when positive
        x_floor_c_ = std::max(0.0, std::pow(mp.x1, -mp.alpha) - mp.alpha);
        deep_ratio_ = ratio_sup_bound(phi_, ob.x(n_max_));
        // partial sums of x_k^gamma and the asymptotic factor-2 envelope check
        x_gamma_partial_.assign(ob.max_index + 1, 0.0);
        double acc = 0.0;
        x_envelope_ok_ = true;
        for (std::size_t k = 1; k <= ob.max_index; ++k) {
            acc += std::pow(ob.x(k), phi_.gamma);
            x_gamma_partial_[k] = acc;
            if (k >= 8 && std::pow(ob.x(k), mp.alpha) * mp.alpha * double(k) > 2.0)
                x_envelope_ok_ = false;
        }
    }

    const Potential& potential() const { return phi_; }
    const MarkedOrbit& orbit() const { return *orbit_; }
    int n_max() const { return n_max_; }
    const ExcursionEnvelope& envelope() const { return env_; }
    double sup_S(int n) const { return sup_S_[n]; }
    double inf_S(int n) const { return inf_S_[n]; }
    double sup_level(int k) const { return sup_J_[k]; }

    TailBound tail_bound(double p) const { return tail_bound_scaled(1.0, p); }

    // log of a bound for Sum_{n > n_max} exp(beta sup_S(n) - n p).
    //
    // For n past the table, sup_S(n) <= cap_I + sum_{k<n} step(k) where
    // step(k) is the tabulated level bound for k < n_max and, beyond it,
    // sup_{J_k} phi <= phi0 + r x_{k+1}^gamma with r the certified ratio
    // sup on (0, x_{n_max}], combined with the closed-form floor
    // x_n >= (alpha n + C)^{-1/alpha}.  Everything scales linearly in
    // beta > 0.
    TailBound tail_bound_scaled(double beta, double p) const {
        TailBound tb;
        if (!(beta > 0.0)) throw std::domain_error("tail_bound_scaled: beta > 0 required");
        const double a = orbit_->params.alpha;
        const double g = phi_.gamma;
        const double q = g / a;
        const double theta = 1.0 - q;
        const double phi0 = beta * phi_.phi0;
        const int from = n_max_;
        const bool use_env = deep_ratio_ < 0.0 && g <= a + 1e-15;
        const double lead = use_env ? beta * deep_ratio_ : 0.0; // < 0 when usable
        const double cap_phi = beta * cap_phi_tail_;
        const double C = x_floor_c_;
        auto floor_pow = [&](double k) { return std::pow(a * k + C, -q); }; // >= x_k^gamma bound
        auto step = [&](double k) { // upper bound for sup_{J_k} (beta phi), k >= n_max
            return use_env ? phi0 + lead * floor_pow(k + 1.0) : cap_phi;
        };
        const double r_inf = (use_env ? phi0 : cap_phi) - p; // limiting log term ratio
        double e = beta * (cap_I_tail_ + head_sup_ + sup_J_[n_max_]) - double(from + 1) * p;
        LogSumAcc acc;
        const long loop_cap = 20000;
        long n = from + 1;
        for (; n < from + loop_cap; ++n) {
            acc.add(e);
            if (e < acc.log_value() - 46.0) break; // term below ~1e-20 of the mass
            e += step(double(n)) - p;
        }
        // close the remainder sum_{j > n} exp(e(j)), e(j) the bound at term j
        if (r_inf < -1e-12) {
            double rho = std::exp(r_inf);
            acc.add(e + r_inf - std::log1p(-rho));
            tb.log_sum = acc.log_value();
            return tb;
        }
        if (use_env && p >= phi0 - 1e-12 && theta > 1e-12) {
            // terms fall at least like exp(lead ((a j + C)^theta - (a n + C)^theta)/(a theta))
            auto e_at = [&](double j) {
                double decay = (std::pow(a * (j + 1.0) + C, theta) -
                                std::pow(a * (double(n) + 1.0) + C, theta)) /
                               (a * theta);
                return e + (phi0 - p) * (j - double(n)) + lead * decay;
            };
            double m = double(n);
            for (int b = 0; b < 300; ++b) {
                double block = std::log(m) + e_at(m + 1.0); // m decreasing terms
                acc.add(block);
                double next = std::log(2.0 * m) + e_at(2.0 * m + 1.0);
                if (next < block - std::log(2.0)) { // blocks at least halve from here
                    acc.add(next + std::log(2.0));
                    tb.log_sum = acc.log_value();
                    return tb;
                }
                m *= 2.0;
            }
            tb.finite = false;
            tb.note = "dyadic tail closure did not converge";
            return tb;
        }
        if (use_env && p >= phi0 - 1e-12 && theta <= 1e-12) {
            // gamma = alpha: terms <= exp(e) ((a(j+1)+C)/(a(n+1)+C))^{lead/a}
            double s = -lead / a;
            if (s > 1.0) {
                double shift = double(n) + 1.0 + C / a;
                acc.add(e + std::log(shift / (s - 1.0)));
                tb.log_sum = acc.log_value();
                return tb;
            }
            tb.finite = false;
            tb.note = "power-law tail exponent not summable";
            return tb;
        }
        tb.finite = false;
        tb.note = "no certified decay at this p";
        return tb;
    }

    // Certified divergence of Z1(beta phi, p): the terms
    // exp(beta inf_S(n) - n p) admit a positive lower bound along all
    // return times.
    std::optional<std::string> certify_divergence(double p) const {
        return certify_divergence_scaled(1.0, p);
    }
    std::optional<std::string> certify_divergence_scaled(double beta, double p) const {
        const double a = orbit_->params.alpha;
        const double g = phi_.gamma;
        const double phi0 = beta * phi_.phi0;
        if (!x_envelope_ok_ || !(beta > 0.0)) return std::nullopt;
        double c_lo = -beta * phi_.norms.semi_hi; // beta phi - phi0 >= c_lo x^gamma on (0,1]
        std::size_t K = orbit_->max_index;
        if (g > a && p <= phi0 + 1e-15) {
            double s = g / a;
            double tail = std::pow(2.0 / a, s) * std::pow(double(K), 1.0 - s) / (s - 1.0);
            double delta_log =
                c_lo * (x_gamma_partial_[K] + tail) - 2.0 * beta * phi_.norms.sup_hi;
            return "nonvanishing terms: log Z1 summand >= " + std::to_string(delta_log) +
                   " for every return time (gamma > alpha, sum x_k^gamma converges)";
        }
        if (p < phi0 - 1e-12) {
            // the linear margin (phi0 - p) n beats the sublinear cusp cost
            double margin = phi0 - p;
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t n = 1; n <= K; ++n)
                best = std::max(best, margin * double(n) + c_lo * x_gamma_partial_[n] -
                                          2.0 * beta * phi_.norms.sup_hi);
            if (best > 0.0)
                return "terms grow: log Z1 summand reaches " + std::to_string(best) +
                       " on the cached range with p < phi(0)";
        }
        return std::nullopt;
    }

    IntervalBound bound_sup(double u, double v) const {
        return certified_sup(phi_.value, u, v, phi_.gamma, phi_.norms.semi_hi, 1e-7, 20);
    }
    IntervalBound bound_inf(double u, double v) const {
        return certified_inf(phi_.value, u, v, phi_.gamma, phi_.norms.semi_hi, 1e-7, 20);
    }

  private:
    const Potential phi_;
    std::shared_ptr<const MarkedOrbit> orbit_;
    int n_max_;
    std::vector<double> sup_J_, inf_J_;
    std::vector<double> sup_S_, inf_S_;
    std::vector<double> x_gamma_partial_;
    double head_sup_ = 0.0;
    double cap_phi_tail_ = 0.0;
    double cap_I_tail_ = 0.0;
    double x_floor_c_ = 0.0;
    double deep_ratio_ = 0.0;
    bool x_envelope_ok_ = false;
    ExcursionEnvelope env_;
};

struct TransferValue {
    double value = 0.0;
    double tail_bound = std::numeric_limits<double>::infinity();
    bool divergent = false;
    std::string note;
};

// (L_{phi,p} 1)(y) truncated at return time n_max, with a certified bound
// on the dropped mass.
inline TransferValue transfer_apply(const InducedSystem& sys, double p, double y) {
    const MapParams& mp = sys.orbit().params;
    if (!(y > mp.x1 && y <= 1.0)) throw std::domain_error("transfer_apply: y must be in (x1,1]");
    const Potential& phi = sys.potential();
    TransferValue out;
    LogSumAcc acc;
    double z = y;           // g0 chain from y
    double chain_sum = 0.0; // sum of phi over z_1 .. z_{n-1}
    for (int n = 1; n <= sys.n_max(); ++n) {
        double x = inverse_branch(z, 1, mp);
        acc.add(phi(x) + chain_sum - double(n) * p);
        z = inverse_branch(z, 0, mp);
        chain_sum += phi(z);
    }
    out.value = std::exp(acc.log_value());
    if (auto w = sys.certify_divergence(p)) {
        out.divergent = true;
        out.note = *w;
        return out;
    }
    auto tb = sys.tail_bound(p);
    if (!tb.finite) {
        out.note = tb.note;
        return out;
    }
    out.tail_bound = std::exp(tb.log_sum);
    return out;
}

struct ZBracket {
    PressureBracket bracket; // for (1/l) log Z_l
    int ell = 1;
    double log_z_lo = -std::numeric_limits<double>::infinity();
    double log_z_hi = std::numeric_limits<double>::infinity();
    double log_cut_mass = -std::numeric_limits<double>::infinity();
    bool divergent = false;
    std::string witness;
    std::uint64_t words_explored = 0;
};

// Bracket for log Z_1(beta phi, p) straight from the letter table.
inline ZBracket z1_bracket(const InducedSystem& sys, double beta, double p) {
    ZBracket out;
    out.ell = 1;
    out.bracket.depth = 1;
    out.bracket.method = "z_partition";
    if (auto w = sys.certify_divergence_scaled(beta, p)) {
        out.divergent = true;
        out.witness = *w;
        out.bracket.lo = out.bracket.hi = std::numeric_limits<double>::infinity();
        return out;
    }
    LogSumAcc lo, hi;
    for (int n = 1; n <= sys.n_max(); ++n) {
        lo.add(beta * sys.inf_S(n) - double(n) * p);
        hi.add(beta * sys.sup_S(n) - double(n) * p);
    }
    auto tb = sys.tail_bound_scaled(beta, p);
    out.log_z_lo = lo.log_value();
    out.bracket.lo = out.log_z_lo;
    if (tb.finite) {
        hi.add(tb.log_sum);
        out.log_z_hi = hi.log_value();
        out.bracket.hi = out.log_z_hi;
        out.log_cut_mass = tb.log_sum;
    } else {
        out.log_z_hi = std::numeric_limits<double>::infinity();
        out.bracket.hi = std::numeric_limits<double>::infinity();
        out.witness = "tail not certifiable: " + tb.note;
    }
    return out;
}

// Branch-and-bound enumeration of return words of length ell with certified
// per-word sup/inf of S_N (beta phi) - N p.  Every cut prefix is charged to
// the upper sum, so the bracket stays valid no matter how aggressive the cut.
inline ZBracket z_partition(const InducedSystem& sys, double beta, double p, int ell,
                            double cut_rel = 1e-13, std::uint64_t node_budget = 40'000'000) {
    if (ell < 1) throw std::domain_error("z_partition: ell >= 1 required");
    if (ell == 1) return z1_bracket(sys, beta, p);
    const MapParams& mp = sys.orbit().params;
    const Potential& phi = sys.potential();
    ZBracket out;
    out.ell = ell;
    out.bracket.depth = ell;
    out.bracket.method = "z_partition";

    if (auto w = sys.certify_divergence_scaled(beta, p)) {
        out.divergent = true;
        out.witness = *w;
        out.bracket.lo = out.bracket.hi = std::numeric_limits<double>::infinity();
        return out;
    }

    const int nmax = sys.n_max();
    auto tb = sys.tail_bound_scaled(beta, p);
    std::vector<double> w_hi(nmax + 2);
    for (int n = 1; n <= nmax; ++n) w_hi[n] = beta * sys.sup_S(n) - double(n) * p;
    // suffix letter masses; the true one carries the analytic tail
    std::vector<double> sfx_true(nmax + 2), sfx_trunc(nmax + 2);
    sfx_true[nmax + 1] = tb.finite ? tb.log_sum : std::numeric_limits<double>::infinity();
    sfx_trunc[nmax + 1] = -std::numeric_limits<double>::infinity();
    for (int n = nmax; n >= 1; --n) {
        LogSumAcc st, sc;
        st.add(sfx_true[n + 1]);
        st.add(w_hi[n]);
        sfx_true[n] = st.log_value();
        sc.add(sfx_trunc[n + 1]);
        sc.add(w_hi[n]);
        sfx_trunc[n] = sc.log_value();
    }
    const double z1_true = sfx_true[1];   // may be +inf
    const double z1_trunc = sfx_trunc[1]; // always finite
    const double log_cut = std::log(cut_rel);

    LogSumAcc hi_acc, lo_acc, cut_acc;
    std::uint64_t nodes = 0;
    bool budget_blown = false;

    auto bound_pair = [&](double u, double v) {
        auto s = certified_sup(phi.value, u, v, phi.gamma, phi.norms.semi_hi, 1e-7, 12);
        auto i = certified_inf(phi.value, u, v, phi.gamma, phi.norms.semi_hi, 1e-7, 12);
        return std::pair<double, double>(beta * s.hi, beta * i.lo);
    };

    std::function<void(double, double, double, double, int)> dfs =
        [&](double a, double b, double sup_sum, double inf_sum, int depth) {
            double za = a, zb = b;
            double chain_sup = 0.0, chain_inf = 0.0;
            for (int n = 1; n <= nmax; ++n) {
                if (++nodes > node_budget) { budget_blown = true; }
                double rest_future = double(ell - depth - 1) * z1_true;
                double floor_now = std::max(lo_acc.log_value(), z1_trunc * double(ell));
                if (budget_blown || sup_sum + sfx_true[n] + rest_future < floor_now + log_cut) {
                    // everything from letter n on at this node
                    cut_acc.add(sup_sum + sfx_true[n] + rest_future);
                    return;
                }
                double a1 = inverse_branch(za, 1, mp);
                double b1 = inverse_branch(zb, 1, mp);
                auto [s0, i0] = bound_pair(a1, b1);
                double nsup = sup_sum + s0 + chain_sup - double(n) * p;
                double ninf = inf_sum + i0 + chain_inf - double(n) * p;
                if (depth + 1 == ell) {
                    hi_acc.add(nsup);
                    lo_acc.add(ninf);
                    ++out.words_explored;
                } else {
                    double node_bound = nsup + rest_future;
                    if (node_bound < floor_now + log_cut) {
                        cut_acc.add(node_bound);
                    } else {
                        dfs(a1, b1, nsup, ninf, depth + 1);
                    }
                }
                if (n == nmax) {
                    cut_acc.add(sup_sum + sfx_true[nmax + 1] + rest_future);
                    break;
                }
                za = inverse_branch(za, 0, mp);
                zb = inverse_branch(zb, 0, mp);
                auto [sj, ij] = bound_pair(za, zb);
                chain_sup += sj;
                chain_inf += ij;
            }
        };

    dfs(mp.x1, 1.0, 0.0, 0.0, 0);

    LogSumAcc hi_total = hi_acc;
    hi_total.merge(cut_acc);
    out.log_z_lo = lo_acc.log_value();
    out.log_z_hi = hi_total.log_value();
    out.log_cut_mass = cut_acc.log_value();
    out.bracket.lo = out.log_z_lo / ell;
    out.bracket.hi = out.log_z_hi / ell;
    if (budget_blown) out.witness = "node budget exhausted; upper side keeps the cut mass";
    return out;
}

} // namespace thermoscope
