#include "spinboson/bath.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace spinboson {

void BathSpec::validate() const {
    if (!(coupling >= 0.0) || !std::isfinite(coupling))
        throw std::invalid_argument("BathSpec: coupling must be finite and >= 0");
    if (!(cutoff > 0.0) || !std::isfinite(cutoff))
        throw std::invalid_argument("BathSpec: cutoff must be finite and > 0");
    if (!(log_factor > 1.0) || !std::isfinite(log_factor))
        throw std::invalid_argument("BathSpec: log_factor must be finite and > 1");
    if (num_modes == 0)
        throw std::invalid_argument("BathSpec: num_modes must be >= 1");
    if (!std::isfinite(exponent) || !(exponent > 0.0))
        throw std::invalid_argument("BathSpec: exponent must be finite and > 0");
}

std::vector<std::string> BathSpec::warnings() const {
    std::vector<std::string> out;
    if (exponent >= 1.0) {
        std::ostringstream os;
        os << "BathSpec: exponent " << exponent
           << " is outside the sub-Ohmic range (0, 1); results are untested there";
        out.push_back(os.str());
    }
    return out;
}

DiscretizedBath discretize(const BathSpec& spec) {
    spec.validate();

    const double s = spec.exponent;
    const double wc = spec.cutoff;
    const std::size_t n = spec.num_modes;
    const double inv_lambda = 1.0 / spec.log_factor;

    // J(w) = c * w^s with c = 2*coupling*cutoff^(1-s); interval moments
    //   int J     = c/(s+1) * (u^(s+1) - l^(s+1))
    //   int J * w = c/(s+2) * (u^(s+2) - l^(s+2))
    const double c = 2.0 * spec.coupling * std::pow(wc, 1.0 - s);

    DiscretizedBath bath;
    bath.frequencies.resize(n);
    bath.amplitudes.resize(n);

    double upper = wc;
    for (std::size_t k = 0; k < n; ++k) {
        const double lower = (k + 1 < n) ? upper * inv_lambda : 0.0;
        const double p1 = std::pow(upper, s + 1.0) - std::pow(lower, s + 1.0);
        const double p2 = std::pow(upper, s + 2.0) - std::pow(lower, s + 2.0);
        // First-moment average; the coupling cancels, so this stays defined
        // for coupling = 0.
        bath.frequencies[k] = (s + 1.0) / (s + 2.0) * p2 / p1;
        bath.amplitudes[k] = std::sqrt(c / (s + 1.0) * p1);
        upper = lower;
    }
    return bath;
}

double effective_coupling(const BathSpec& shape, const std::vector<double>& amplitudes) {
    double weight = 0.0;
    for (double a : amplitudes) weight += a * a;
    return weight * (shape.exponent + 1.0) / (2.0 * shape.cutoff * shape.cutoff);
}

}  // namespace spinboson
