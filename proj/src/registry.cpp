// SPDX-License-Identifier: MIT
#include "impactlab/registry.hpp"

#include "impactlab/errors.hpp"

#include <cmath>
#include <sstream>

namespace impactlab::registry {

using nlohmann::json;

namespace {

// s * log(1 + exp(z / s)) without overflow.
double softplus(double z, double s) {
    const double u = z / s;
    return s * (std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u))));
}

double logistic(double u) {
    return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
}

double sech2(double u) {
    const double c = std::cosh(u);
    return 1.0 / (c * c);
}

std::vector<Entry<ImpactFunction>> build_impacts() {
    std::vector<Entry<ImpactFunction>> out;
    out.push_back({"constant",
                   "f(x) = lambda",
                   {{"lambda", std::nullopt, "impact slope (currency per share)"}},
                   [](const std::vector<double>& p) { return ImpactFunction::constant(p[0]); }});
    out.push_back(
        {"affine_bounded",
         "f(x) = lambda * (1 + kappa * tanh((x - center) / scale)); bounded version of "
         "proportional impact, positive when |kappa| < 1",
         {{"lambda", std::nullopt, "level"},
          {"kappa", 0.5, "relative slope, |kappa| < 1"},
          {"center", 0.0, "reference price"},
          {"scale", 1.0, "price scale of the transition"}},
         [](const std::vector<double>& p) {
             const double lam = p[0], k = p[1], c = p[2], s = p[3];
             auto fn = ImpactFunction::from(
                 "affine_bounded",
                 [=](double x) { return lam * (1.0 + k * std::tanh((x - c) / s)); },
                 [=](double x) { return lam * k / s * sech2((x - c) / s); },
                 [=](double x) {
                     const double u = (x - c) / s;
                     return -2.0 * lam * k / (s * s) * sech2(u) * std::tanh(u);
                 });
             if (std::abs(k) < 1.0) fn.declared_lower_bound = lam * (1.0 - std::abs(k));
             return fn;
         }});
    out.push_back(
        {"sinusoidal",
         "f(x) = base + amplitude * sin(frequency * x + phase)",
         {{"base", std::nullopt, "mean level"},
          {"amplitude", std::nullopt, "perturbation amplitude, < base for positivity"},
          {"frequency", 1.0, "angular frequency"},
          {"phase", 0.0, "phase"}},
         [](const std::vector<double>& p) {
             const double b = p[0], a = p[1], w = p[2], ph = p[3];
             auto fn = ImpactFunction::from(
                 "sinusoidal", [=](double x) { return b + a * std::sin(w * x + ph); },
                 [=](double x) { return a * w * std::cos(w * x + ph); },
                 [=](double x) { return -a * w * w * std::sin(w * x + ph); });
             if (std::abs(a) < b) fn.declared_lower_bound = b - std::abs(a);
             return fn;
         }});
    return out;
}

std::vector<Entry<Coefficient>> build_coefficients() {
    std::vector<Entry<Coefficient>> out;
    out.push_back({"constant",
                   "c(x) = value",
                   {{"value", std::nullopt, "constant level"}},
                   [](const std::vector<double>& p) { return Coefficient::constant_value(p[0]); }});
    out.push_back({"tanh",
                   "c(x) = base + amplitude * tanh((x - center) / scale)",
                   {{"base", std::nullopt, "level"},
                    {"amplitude", std::nullopt, "amplitude"},
                    {"center", 0.0, "center"},
                    {"scale", 1.0, "scale"}},
                   [](const std::vector<double>& p) {
                       const double b = p[0], a = p[1], c = p[2], s = p[3];
                       return Coefficient{
                           "tanh", [=](double x) { return b + a * std::tanh((x - c) / s); },
                           [=](double x) { return a / s * sech2((x - c) / s); }, std::nullopt};
                   }});
    out.push_back({"sinusoidal",
                   "c(x) = base + amplitude * sin(frequency * x + phase)",
                   {{"base", std::nullopt, "level"},
                    {"amplitude", std::nullopt, "amplitude"},
                    {"frequency", 1.0, "angular frequency"},
                    {"phase", 0.0, "phase"}},
                   [](const std::vector<double>& p) {
                       const double b = p[0], a = p[1], w = p[2], ph = p[3];
                       return Coefficient{
                           "sinusoidal", [=](double x) { return b + a * std::sin(w * x + ph); },
                           [=](double x) { return a * w * std::cos(w * x + ph); },
                           std::nullopt};
                   }});
    return out;
}

std::vector<Entry<Claim>> build_claims() {
    std::vector<Entry<Claim>> out;
    out.push_back({"cosine",
                   "g0(x) = offset + amplitude * cos(frequency * x + phase), g1 = 0",
                   {{"amplitude", 1.0, "amplitude"},
                    {"frequency", 1.0, "angular frequency"},
                    {"phase", 0.0, "phase"},
                    {"offset", 0.0, "additive cash"}},
                   [](const std::vector<double>& p) {
                       const double a = p[0], w = p[1], ph = p[2], c = p[3];
                       return Claim::cash("cosine",
                                          [=](double x) { return c + a * std::cos(w * x + ph); });
                   }});
    out.push_back({"affine",
                   "g0(x) = intercept + slope * x, g1 = 0",
                   {{"intercept", 0.0, "intercept"}, {"slope", 0.0, "slope"}},
                   [](const std::vector<double>& p) {
                       const double a = p[0], b = p[1];
                       return Claim::cash("affine", [=](double x) { return a + b * x; });
                   }});
    out.push_back(
        {"call_spread_smoothed",
         "g0(x) = sp(x - lower_strike) - sp(x - upper_strike), sp(z) = s log(1 + e^(z/s)), g1 = 0",
         {{"lower_strike", std::nullopt, "long strike"},
          {"upper_strike", std::nullopt, "short strike"},
          {"smoothing", 0.1, "softplus width s"}},
         [](const std::vector<double>& p) {
             const double k1 = p[0], k2 = p[1], s = p[2];
             return Claim::cash("call_spread_smoothed", [=](double x) {
                 return softplus(x - k1, s) - softplus(x - k2, s);
             });
         }});
    out.push_back(
        {"quadratic_capped",
         "g0(x) = softmin(scale * (x - center)^2, cap) with width s, g1 = 0",
         {{"center", 0.0, "center"},
          {"scale", 1.0, "curvature"},
          {"cap", 1.0, "cap level"},
          {"smoothing", 0.05, "softmin width s"}},
         [](const std::vector<double>& p) {
             const double c = p[0], k = p[1], cap = p[2], s = p[3];
             return Claim::cash("quadratic_capped", [=](double x) {
                 const double q = k * (x - c) * (x - c);
                 const double m = std::min(q, cap);
                 return m - s * std::log(std::exp(-(q - m) / s) + std::exp(-(cap - m) / s));
             });
         }});
    out.push_back({"constant_delivery",
                   "g0(x) = cash, g1(x) = shares",
                   {{"shares", std::nullopt, "delivered shares"}, {"cash", 0.0, "cash settlement"}},
                   [](const std::vector<double>& p) {
                       const double q = p[0], c = p[1];
                       return Claim{"constant_delivery", [=](double) { return c; },
                                    [=](double) { return q; }, DeliveryKind::constant, q};
                   }});
    out.push_back(
        {"digital_delivery_smoothed",
         "g1(x) = shares * logistic((x - strike) / s), g0(x) = -strike * g1(x) (physically "
         "settled call)",
         {{"shares", 1.0, "shares delivered in the money"},
          {"strike", std::nullopt, "strike"},
          {"smoothing", 0.1, "logistic width s"}},
         [](const std::vector<double>& p) {
             const double q = p[0], k = p[1], s = p[2];
             auto g1 = [=](double x) { return q * logistic((x - k) / s); };
             return Claim{"digital_delivery_smoothed", [=](double x) { return -k * g1(x); }, g1,
                          DeliveryKind::general, std::nullopt};
         }});
    return out;
}

template <typename T>
T resolve(const std::vector<Entry<T>>& entries, const json& spec, const char* what) {
    if (!spec.is_object()) throw InvalidArgument(std::string(what) + ": expected an object");
    for (const auto& [key, _] : spec.items())
        if (key != "name" && key != "params")
            throw InvalidArgument(std::string(what) + ": unknown key '" + key + "'");
    if (!spec.contains("name") || !spec["name"].is_string())
        throw InvalidArgument(std::string(what) + ": missing field 'name'");
    const auto name = spec["name"].get<std::string>();
    const json params = spec.value("params", json::object());
    if (!params.is_object()) throw InvalidArgument(std::string(what) + ".params: expected an object");
    for (const auto& e : entries) {
        if (e.name != name) continue;
        for (const auto& [key, _] : params.items()) {
            bool known = false;
            for (const auto& ps : e.params) known = known || ps.name == key;
            if (!known)
                throw InvalidArgument(std::string(what) + " '" + name + "': unknown parameter '" +
                                      key + "'");
        }
        std::vector<double> values;
        for (const auto& ps : e.params) {
            if (params.contains(ps.name)) {
                if (!params[ps.name].is_number())
                    throw InvalidArgument(std::string(what) + " '" + name + "': parameter '" +
                                          ps.name + "' must be a number");
                values.push_back(params[ps.name].template get<double>());
            } else if (ps.default_value) {
                values.push_back(*ps.default_value);
            } else {
                throw InvalidArgument(std::string(what) + " '" + name +
                                      "': missing field 'params." + ps.name + "'");
            }
        }
        return e.make(values);
    }
    throw InvalidArgument(std::string(what) + ": unknown name '" + name + "'");
}

template <typename T>
void list_section(std::ostringstream& os, const char* title, const std::vector<Entry<T>>& entries) {
    os << title << ":\n";
    for (const auto& e : entries) {
        os << "  " << e.name << ": " << e.description << "\n";
        for (const auto& p : e.params) {
            os << "    - " << p.name;
            if (p.default_value) {
                os << " (default " << *p.default_value << ")";
            } else {
                os << " (required)";
            }
            os << ": " << p.description << "\n";
        }
    }
}

}  // namespace

const std::vector<Entry<ImpactFunction>>& impact_functions() {
    static const auto entries = build_impacts();
    return entries;
}

const std::vector<Entry<Coefficient>>& coefficient_families() {
    static const auto entries = build_coefficients();
    return entries;
}

const std::vector<Entry<Claim>>& claims() {
    static const auto entries = build_claims();
    return entries;
}

ImpactFunction make_impact(const json& spec) {
    return resolve(impact_functions(), spec, "impact");
}

Coefficient make_coefficient(const json& spec) {
    return resolve(coefficient_families(), spec, "coefficient");
}

Claim make_claim(const json& spec) { return resolve(claims(), spec, "claim"); }

std::string listing() {
    std::ostringstream os;
    list_section(os, "impact functions", impact_functions());
    list_section(os, "coefficient families (mu, sigma)", coefficient_families());
    list_section(os, "claims", claims());
    return os.str();
}

}  // namespace impactlab::registry
