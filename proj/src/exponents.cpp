#include "fracwave/exponents.hpp"

#include "fracwave/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

namespace fracwave::exponents {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

bool close(double a, double b) {
    if (std::isinf(a) || std::isinf(b)) return a == b;
    return std::abs(a - b) <= kCriticalTol * std::max(1.0, std::abs(b));
}
} // namespace

void ExponentInputs::validate() const {
    if (n < 1) throw DomainError("n: must be >= 1");
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma: must lie in (0,1)");
    if (!(theta >= 0.0 && theta < 0.5)) throw DomainError("theta: must lie in [0, 1/2)");
    if (s && !(*s >= 0.0)) throw DomainError("s: must be >= 0");
}

const char* to_string(Binding b) {
    switch (b) {
    case Binding::fujita_type: return "fujita_type";
    case Binding::memory: return "memory";
    case Binding::regularity: return "regularity";
    }
    return "?";
}

const char* to_string(Regime r) {
    switch (r) {
    case Regime::subcritical: return "subcritical";
    case Regime::critical: return "critical";
    case Regime::supercritical: return "supercritical";
    }
    return "?";
}

double p_c(const ExponentInputs& in) {
    in.validate();
    const double denom = in.n - 2 + 2 * in.gamma * (1 - in.theta);
    if (denom <= 0) return kInf;
    return 1 + 2 * (1 + (1 - in.gamma) * (1 - in.theta)) / denom;
}

double p_tilde_c(const ExponentInputs& in) {
    if (in.n < 1) throw DomainError("n: must be >= 1");
    if (!(in.gamma > 0.0 && in.gamma <= 1.0)) throw DomainError("gamma: must lie in (0,1]");
    if (!(in.theta >= 0.0 && in.theta < 0.5)) throw DomainError("theta: must lie in [0, 1/2)");
    if (!in.s) throw DomainError("s: required for p_tilde_c");
    if (!(*in.s >= 0.0)) throw DomainError("s: must be >= 0");
    const double n = in.n, th = in.theta;
    const double denom = 2 * *in.s + n * (3 - 2 * th) - 4 * (1 - in.gamma) * (1 - th);
    if (!(denom > 0))
        throw DomainError("2s + n(3-2theta) - 4(1-gamma)(1-theta): must be > 0 for p_tilde_c");
    return (6 * n + 4 - 4 * (n + 1) * th) / denom;
}

double branch_boundary(int n) { return (n - 2.0) / n; }

ExponentReport p_bar(const ExponentInputs& in) {
    in.validate();
    ExponentReport r{};
    r.inputs = in;
    r.p_c = p_c(in);
    r.inv_gamma = 1.0 / in.gamma;
    const bool memory_branch = in.gamma <= branch_boundary(in.n);
    r.critical_covered = !memory_branch;
    if (close(r.p_c, r.inv_gamma)) {
        r.binding = memory_branch ? Binding::memory : Binding::fujita_type;
        r.p_bar = memory_branch ? r.inv_gamma : r.p_c;
    } else if (r.p_c > r.inv_gamma) {
        r.binding = Binding::fujita_type;
        r.p_bar = r.p_c;
    } else {
        r.binding = Binding::memory;
        r.p_bar = r.inv_gamma;
    }
    if (in.n >= 4 && in.s) {
        r.p_tilde_c = p_tilde_c(in);
        if (*r.p_tilde_c > r.p_bar && !close(*r.p_tilde_c, r.p_bar)) {
            r.p_bar = *r.p_tilde_c;
            r.binding = Binding::regularity;
        }
    }
    return r;
}

Regime ExponentReport::regime(double p) const {
    if (close(p, p_bar)) return Regime::critical;
    return p < p_bar ? Regime::subcritical : Regime::supercritical;
}

Classification classify(const ExponentInputs& in, double p) {
    const ExponentReport r = p_bar(in);
    return {r.regime(p), r.critical_covered, r.p_bar};
}

double g_eta_min(double eta, double gamma, double theta) {
    if (!(eta >= 0)) throw DomainError("eta: must be >= 0");
    const double a = 1 - gamma;
    if (std::isinf(eta)) return kInf;
    return std::min({a * eta + 2, (a + 1) * eta + 2 * theta, (a + 2) * eta});
}

double g_eta_piecewise(double eta, double gamma, double theta) {
    if (!(eta >= 0)) throw DomainError("eta: must be >= 0");
    if (eta <= 2 * theta) return (3 - gamma) * eta;
    if (eta <= 2 * (1 - theta)) return (2 - gamma) * eta + 2 * theta;
    return (1 - gamma) * eta + 2;
}

double g_eta(double eta, double gamma, double theta) {
    const double a = g_eta_piecewise(eta, gamma, theta);
    const double b = g_eta_min(eta, gamma, theta);
    if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(b)))
        throw NumericalError("g(eta): piecewise and min forms disagree", std::abs(a - b));
    return b;
}

double h_eta(double eta, int n, double gamma, double theta) {
    const double g = g_eta(eta, gamma, theta);
    const double denom = n + eta - g;
    if (!(denom > 0)) return kInf;
    return 1 + g / denom;
}

HArgmax h_argmax(int n, double gamma, double theta) {
    ExponentInputs in{n, gamma, theta, std::nullopt};
    in.validate();
    if (gamma > branch_boundary(n)) {
        const double eta = 2 * (1 - theta);
        return {eta, h_eta(eta, n, gamma, theta)};
    }
    return {kInf, 1.0 / gamma};
}

HArgmax h_grid_argmax(int n, double gamma, double theta, double eta_max, double step) {
    if (!(step > 0) || !(eta_max > 0)) throw DomainError("eta grid: step and eta_max must be > 0");
    const auto count = static_cast<std::size_t>(std::llround(eta_max / step));
    HArgmax best{0.0, h_eta(0.0, n, gamma, theta)};
    for (std::size_t i = 1; i <= count; ++i) {
        const double eta = static_cast<double>(i) * step;
        const double h = h_eta(eta, n, gamma, theta);
        if (h > best.h_star) best = {eta, h};
    }
    return best;
}

double p_fujita(int n) {
    if (n < 1) throw DomainError("n: must be >= 1");
    return 1.0 + 2.0 / n;
}

double p_strauss(int n) {
    if (n < 1) throw DomainError("n: must be >= 1");
    if (n == 1) return kInf;
    const double a = n - 1.0, b = n + 1.0;
    const double q = 0.5 * (b + std::sqrt(b * b + 8.0 * a));
    return q / a;
}

std::vector<double> default_gamma_grid(std::size_t count) {
    std::vector<double> g(count);
    for (std::size_t i = 0; i < count; ++i) g[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(count);
    return g;
}

std::vector<AtlasRow> region_atlas(int n, double theta, std::optional<double> s, const std::vector<double>& gamma_grid) {
    std::vector<AtlasRow> rows;
    rows.reserve(gamma_grid.size());
    for (double g : gamma_grid) {
        const ExponentReport r = p_bar({n, g, theta, s});
        AtlasRow row{g, r.p_c, r.inv_gamma, r.p_tilde_c, r.p_bar, r.binding, false};
        if (r.p_tilde_c) row.tilde_dominant = *r.p_tilde_c > std::max(r.p_c, r.inv_gamma);
        rows.push_back(row);
    }
    return rows;
}

std::string format_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_atlas_csv(const std::vector<AtlasRow>& rows, std::ostream& os) {
    const bool tilde = !rows.empty() && rows.front().p_tilde_c.has_value();
    os << (tilde ? "gamma,p_c,inv_gamma,p_tilde_c,p_bar,binding\n" : "gamma,p_c,inv_gamma,p_bar,binding\n");
    for (const auto& r : rows) {
        os << format_number(r.gamma) << ',' << format_number(r.p_c) << ',' << format_number(r.inv_gamma) << ',';
        if (tilde) os << format_number(r.p_tilde_c.value_or(std::nan(""))) << ',';
        os << format_number(r.p_bar) << ',' << to_string(r.binding) << '\n';
    }
}

namespace {
nlohmann::json num(double v) {
    if (std::isfinite(v)) return v;
    return format_number(v);
}
} // namespace

std::string atlas_json(const std::vector<AtlasRow>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json j{{"gamma", r.gamma},           {"p_c", num(r.p_c)},
                         {"inv_gamma", r.inv_gamma},   {"p_bar", num(r.p_bar)},
                         {"binding", to_string(r.binding)}, {"tilde_dominant", r.tilde_dominant}};
        if (r.p_tilde_c) j["p_tilde_c"] = num(*r.p_tilde_c);
        arr.push_back(j);
    }
    return arr.dump(2);
}

std::string report_json(const ExponentReport& r, std::optional<double> p) {
    nlohmann::json j;
    j["n"] = r.inputs.n;
    j["gamma"] = r.inputs.gamma;
    j["theta"] = r.inputs.theta;
    if (r.inputs.s) j["s"] = *r.inputs.s;
    j["p_c"] = num(r.p_c);
    j["inv_gamma"] = r.inv_gamma;
    if (r.p_tilde_c) j["p_tilde_c"] = num(*r.p_tilde_c);
    j["p_bar"] = num(r.p_bar);
    j["binding"] = to_string(r.binding);
    j["critical_covered"] = r.critical_covered;
    j["p_fujita"] = p_fujita(r.inputs.n);
    j["p_strauss"] = num(p_strauss(r.inputs.n));
    if (p) {
        j["p"] = *p;
        j["regime"] = to_string(r.regime(*p));
    }
    return j.dump(2);
}

} // namespace fracwave::exponents
