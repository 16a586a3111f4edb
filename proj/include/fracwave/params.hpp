#pragma once

#include <limits>

namespace fracwave {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Hölder conjugate p' = p/(p-1). Every bound in the probe threads this value.
double conjugate_exponent(double p);

/// The problem quadruple (n, gamma, theta, p).
struct FracParams {
    int n = 1;
    double gamma = 0.5;
    double theta = 0.0;
    double p = 2.0;

    /// Order of the memory integral, 1 - gamma.
    double alpha() const { return 1.0 - gamma; }
    double p_conjugate() const { return conjugate_exponent(p); }

    /// Throws DomainError naming the first field out of range.
    void validate() const;
};

} // namespace fracwave
