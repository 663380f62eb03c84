#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "thermoscope/expr.hpp"
#include "thermoscope/potential.hpp"

namespace thermoscope {

// Spec file: {"name":..., "alpha":..., "gamma":..., "phi0":..., "c":...,
// "h": "<expression in x>"}; the potential is
// phi(x) = phi0 + c x^gamma + h(x) x^gamma with h evaluated from the
// expression and differentiated symbolically.
inline Potential potential_from_json(const nlohmann::json& j) {
    Potential p;
    p.name = j.value("name", std::string("custom"));
    p.gamma = j.at("gamma").get<double>();
    if (!(p.gamma > 0.0)) throw std::domain_error("potential spec: gamma must be positive");
    p.phi0 = j.value("phi0", 0.0);
    p.c = j.at("c").get<double>();
    p.c_known = true;
    ExprPtr h = parse_expression(j.at("h").get<std::string>());
    ExprPtr hp = expr_derivative(h);
    double gamma = p.gamma, phi0 = p.phi0, c = p.c;
    p.value = [h, gamma, phi0, c](double x) {
        if (x == 0.0) return phi0;
        double xg = std::pow(x, gamma);
        return phi0 + c * xg + expr_eval(h, x) * xg;
    };
    p.deriv = [h, hp, gamma, c](double x) {
        double xg = std::pow(x, gamma);
        double xg1 = gamma * std::pow(x, gamma - 1.0);
        return c * xg1 + expr_eval(hp, x) * xg + expr_eval(h, x) * xg1;
    };
    return finish(std::move(p));
}

inline Potential potential_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open potential spec file: " + path);
    nlohmann::json j;
    in >> j;
    return potential_from_json(j);
}

// Built-ins addressable by name; a parameter rides after a colon, e.g.
// omega:0.5 or const:-1.25.  Anything containing a '.' with a '/' or
// ending in .json is treated as a spec-file path.
inline Potential make_potential(const std::string& spec, const MapParams& mp) {
    auto ends_with = [](const std::string& s, const std::string& suf) {
        return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
    };
    if (ends_with(spec, ".json") || spec.find('/') != std::string::npos)
        return potential_from_file(spec);
    std::string name = spec;
    double param = 0.0;
    bool has_param = false;
    auto pos = spec.find(':');
    if (pos != std::string::npos) {
        name = spec.substr(0, pos);
        param = std::stod(spec.substr(pos + 1));
        has_param = true;
    }
    if (name == "zero") return make_zero();
    if (name == "const") return make_constant(has_param ? param : 0.0);
    if (name == "omega") return make_omega(has_param ? param : mp.alpha);
    if (name == "geometric") return make_geometric(mp);
    if (name == "hat") return make_hat(mp);
    if (name == "psi") return make_psi(mp);
    if (name == "tilde") return make_tilde(has_param ? param : mp.alpha);
    throw std::runtime_error("unknown potential: " + spec);
}

} // namespace thermoscope
