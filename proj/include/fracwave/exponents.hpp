#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fracwave::exponents {

struct ExponentInputs {
    int n = 1;
    double gamma = 0.5;
    double theta = 0.0;
    std::optional<double> s;  // regularity of the data, needed for p_tilde_c

    /// Throws DomainError naming the offending field.
    void validate() const;
};

enum class Binding { fujita_type, memory, regularity };
enum class Regime { subcritical, critical, supercritical };

const char* to_string(Binding b);
const char* to_string(Regime r);

/// Regime tolerance on |p - p_bar|.
inline constexpr double kCriticalTol = 1e-12;

struct ExponentReport {
    ExponentInputs inputs;
    double p_c;
    double inv_gamma;
    std::optional<double> p_tilde_c;
    double p_bar;
    Binding binding;
    /// True when nonexistence also holds at p = p_bar (gamma > (n-2)/n).
    bool critical_covered;

    Regime regime(double p) const;
};

/// 1 + 2(1+(1-gamma)(1-theta)) / (n-2+2 gamma(1-theta))_+, +inf on a nonpositive denominator.
double p_c(const ExponentInputs& in);
/// (6n+4-4(n+1)theta) / (2s + n(3-2theta) - 4(1-gamma)(1-theta)); gamma may equal 1.
double p_tilde_c(const ExponentInputs& in);
/// gamma at which the two branches of p_bar meet, (n-2)/n.
double branch_boundary(int n);
ExponentReport p_bar(const ExponentInputs& in);

struct Classification {
    Regime regime;
    bool critical_covered;
    double p_bar;
};
Classification classify(const ExponentInputs& in, double p);

/// min{alpha eta + 2, (alpha+1) eta + 2 theta, (alpha+2) eta}, alpha = 1 - gamma.
double g_eta_min(double eta, double gamma, double theta);
/// Piecewise form (3-gamma)eta | (2-gamma)eta + 2 theta | (1-gamma)eta + 2.
double g_eta_piecewise(double eta, double gamma, double theta);
/// Both forms, checked against each other.
double g_eta(double eta, double gamma, double theta);

/// 1 + g/(n + eta - g); +inf when the denominator is not positive.
double h_eta(double eta, int n, double gamma, double theta);

struct HArgmax {
    double eta_star;  // +inf when h increases without a maximum
    double h_star;
};
/// Closed case analysis: eta* = 2(1-theta) when gamma > (n-2)/n, else the supremum 1/gamma at eta -> inf.
HArgmax h_argmax(int n, double gamma, double theta);
/// Dense grid search on [0, eta_max] with spacing step; returns the first maximizer.
HArgmax h_grid_argmax(int n, double gamma, double theta, double eta_max = 50.0, double step = 1e-4);

double p_fujita(int n);
/// Larger root of (n-1)p^2 - (n+1)p - 2 = 0; +inf for n = 1.
double p_strauss(int n);

struct AtlasRow {
    double gamma;
    double p_c;
    double inv_gamma;
    std::optional<double> p_tilde_c;
    double p_bar;
    Binding binding;
    bool tilde_dominant;  // p_tilde_c > max(p_c, 1/gamma)
};

/// 512 midpoints (i + 1/2)/512 of (0,1).
std::vector<double> default_gamma_grid(std::size_t count = 512);
std::vector<AtlasRow> region_atlas(int n, double theta, std::optional<double> s, const std::vector<double>& gamma_grid);
/// The p_tilde_c column is present only when n >= 4 and s is given.
void write_atlas_csv(const std::vector<AtlasRow>& rows, std::ostream& os);
std::string atlas_json(const std::vector<AtlasRow>& rows);
std::string report_json(const ExponentReport& r, std::optional<double> p = std::nullopt);

/// Shortest round-trip decimal, "inf" for infinities.
std::string format_number(double v);

} // namespace fracwave::exponents
