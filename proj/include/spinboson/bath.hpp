#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace spinboson {

/// Power-law spectral density J(w) = 2 * coupling * cutoff^(1-s) * w^s on
/// [0, cutoff], characterized by the exponent s and a dimensionless coupling
/// strength (alpha for the diagonal bath, beta for the off-diagonal one).
struct BathSpec {
    double exponent = 0.5;
    double coupling = 0.0;
    double cutoff = 1.0;
    std::size_t num_modes = 50;
    double log_factor = 1.05;

    /// Throws std::invalid_argument on hard violations (coupling < 0,
    /// cutoff <= 0, log_factor <= 1, num_modes == 0).
    void validate() const;

    /// Non-fatal advisories, e.g. exponent outside the sub-Ohmic range (0,1).
    std::vector<std::string> warnings() const;
};

/// One effective mode per logarithmic interval: frequencies strictly
/// decreasing, amplitudes >= 0 (lambda_k or eta_k depending on which bath
/// this came from).
struct DiscretizedBath {
    std::vector<double> frequencies;
    std::vector<double> amplitudes;

    std::size_t size() const { return frequencies.size(); }
};

/// Coarse-grains the spectral density over the Wilson mesh
/// [Lambda^-(k+1), Lambda^-k] * cutoff, k = 0..N-1. Each amplitude^2 is the
/// exact interval integral of J and each frequency the exact first-moment
/// average, both from the closed-form power-law antiderivatives. The lowest
/// interval extends down to zero frequency so the total weight
/// sum(amplitude^2) matches the full integral 2*coupling*cutoff^2/(s+1)
/// to machine precision.
DiscretizedBath discretize(const BathSpec& spec);

/// Zeroth-moment inverse of discretize: the coupling strength whose power-law
/// bath carries the weight sum(amplitudes^2). Used to report effective
/// couplings for amplitude arrays produced by rotations.
double effective_coupling(const BathSpec& shape, const std::vector<double>& amplitudes);

}  // namespace spinboson
