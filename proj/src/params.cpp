#include "fracwave/params.hpp"

#include "fracwave/error.hpp"

#include <cmath>

namespace fracwave {

double conjugate_exponent(double p) {
    if (!(p > 1.0)) throw DomainError("p: conjugate exponent needs p > 1");
    if (std::isinf(p)) return 1.0;
    return p / (p - 1.0);
}

void FracParams::validate() const {
    if (n < 1) throw DomainError("n: must be >= 1");
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma: must lie in (0,1)");
    if (!(theta >= 0.0 && theta < 0.5)) throw DomainError("theta: must lie in [0, 1/2)");
    if (!(p > 1.0)) throw DomainError("p: must be > 1");
}

} // namespace fracwave
