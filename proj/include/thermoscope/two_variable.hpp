#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "thermoscope/induced.hpp"
#include "thermoscope/induced_operator.hpp"

namespace thermoscope {

struct TwoVarOptions {
    int ell_max = 3;
    int n_max = 2000;        // truncation of return times in the letter table
    bool use_spectral = true;
    InducedOperator::Options spectral;
    double cut_rel = 1e-12;
    std::uint64_t node_budget = 30'000'000;
};

struct TwoVarPressurePoint {
    double beta = 1.0;
    double p = 0.0;
    int ell = 1;
    int n_max = 0;
    PressureBracket bracket;     // final: Z sandwiches intersected with spectral bounds
    double tail_log_bound = -std::numeric_limits<double>::infinity();
    bool divergent = false;
    std::string witness;
    std::vector<ZBracket> z_by_ell;
    std::optional<InducedOperator::Bracket> spectral;
};

// Shares one letter table and one operator geometry across many (beta, p)
// evaluations; all weights scale linearly in beta.
class TwoVarEvaluator {
  public:
    TwoVarEvaluator(const Potential& phi, std::shared_ptr<const MarkedOrbit> orbit,
                    TwoVarOptions opt = {})
        : opt_(opt), sys_(phi, std::move(orbit), opt.n_max) {
        if (opt_.use_spectral && sys_.n_max() > opt_.spectral.n_cap)
            op_ = std::make_unique<InducedOperator>(sys_, opt_.spectral);
    }

    const InducedSystem& system() const { return sys_; }

    TwoVarPressurePoint eval(double beta, double p, int ell_max = 0) const {
        if (ell_max <= 0) ell_max = opt_.ell_max;
        TwoVarPressurePoint out;
        out.beta = beta;
        out.p = p;
        out.n_max = sys_.n_max();
        if (auto w = sys_.certify_divergence_scaled(beta, p)) {
            out.divergent = true;
            out.witness = *w;
            out.bracket.lo = out.bracket.hi = std::numeric_limits<double>::infinity();
            out.bracket.method = "two_variable";
            return out;
        }
        PressureBracket acc;
        acc.lo = -std::numeric_limits<double>::infinity();
        acc.hi = std::numeric_limits<double>::infinity();
        acc.method = "two_variable";
        for (int ell = 1; ell <= ell_max; ++ell) {
            ZBracket zb = z_partition(sys_, beta, p, ell, opt_.cut_rel, opt_.node_budget);
            out.z_by_ell.push_back(zb);
            acc.lo = std::max(acc.lo, zb.bracket.lo);
            acc.hi = std::min(acc.hi, zb.bracket.hi);
            acc.depth = ell;
            if (ell == 1) out.tail_log_bound = zb.log_cut_mass;
        }
        if (op_) {
            auto sb = op_->pressure_bracket(beta, p);
            out.spectral = sb;
            if (sb.has_lo) acc.lo = std::max(acc.lo, sb.lo);
            if (sb.has_hi) acc.hi = std::min(acc.hi, sb.hi);
        }
        if (acc.lo > acc.hi) { // inconsistent certificates would be a bug; keep both visible
            double mid = 0.5 * (acc.lo + acc.hi);
            acc.lo = acc.hi = mid;
            out.witness = "warning: bracket sides crossed";
        }
        out.bracket = acc;
        out.ell = ell_max;
        return out;
    }

    // Certified sign of P(beta phi, p): +1 positive, -1 nonpositive,
    // 0 inconclusive.  Divergence counts as positive.
    int sign(double beta, double p, int ell_max = 0) const {
        if (sys_.certify_divergence_scaled(beta, p)) return +1;
        ZBracket z1 = z1_bracket(sys_, beta, p);
        if (z1.bracket.lo > 0.0) return +1;
        if (z1.bracket.hi <= 0.0) return -1;
        if (op_) {
            auto sb = op_->pressure_bracket(beta, p);
            if (sb.has_lo && sb.lo > 0.0) return +1;
            if (sb.has_hi && sb.hi <= 0.0) return -1;
        }
        for (int ell = 2; ell <= (ell_max > 0 ? ell_max : opt_.ell_max); ++ell) {
            ZBracket zb = z_partition(sys_, beta, p, ell, opt_.cut_rel, opt_.node_budget);
            if (zb.bracket.lo > 0.0) return +1;
            if (zb.bracket.hi <= 0.0) return -1;
        }
        return 0;
    }

  private:
    TwoVarOptions opt_;
    InducedSystem sys_;
    std::unique_ptr<InducedOperator> op_;
};

inline TwoVarPressurePoint two_variable_pressure(const Potential& phi,
                                                 std::shared_ptr<const MarkedOrbit> orbit,
                                                 double p, int ell_max, int n_max,
                                                 TwoVarOptions opt = {}) {
    opt.ell_max = ell_max;
    opt.n_max = n_max;
    TwoVarEvaluator ev(phi, std::move(orbit), opt);
    return ev.eval(1.0, p);
}

} // namespace thermoscope
