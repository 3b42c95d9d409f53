#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spinboson/bath.hpp"

namespace spinboson {

enum class CouplingLayout { DiagonalOnly, TwoBath, SingleBathBoth };

std::string to_string(CouplingLayout layout);
CouplingLayout coupling_layout_from_string(const std::string& name);

/// Merged single-chain form of the Hamiltonian
///   H = bias/2 sigma_z - tunneling/2 sigma_x + sum_k w_k b^+ b
///     + sigma_z/2 sum_k lambda_k (b^+ + b) + sigma_x/2 sum_k eta_k (b^+ + b).
/// The layout records which coupling support pattern the arrays obey.
struct ModelParams {
    double bias = 0.0;        // epsilon
    double tunneling = 0.0;   // Delta
    CouplingLayout layout = CouplingLayout::DiagonalOnly;
    std::vector<double> frequencies;
    std::vector<double> diag_amplitudes;     // lambda'_k
    std::vector<double> offdiag_amplitudes;  // eta'_k

    std::size_t num_modes() const { return frequencies.size(); }
    void validate() const;

    /// Content hash (FNV-1a over the canonical byte image); identifies the
    /// model a checkpoint belongs to.
    std::uint64_t fingerprint() const;
};

ModelParams build_diagonal(const DiscretizedBath& bath_z, double bias, double tunneling);

/// Eq.-(3)-style concatenation: modes 1..N carry the sigma_z bath, modes
/// N+1..2N the sigma_x bath, with disjoint coupling support.
ModelParams build_two_bath(const DiscretizedBath& bath_z, const DiscretizedBath& bath_x,
                           double bias, double tunneling);

/// Single bath with every mode coupled both diagonally and off-diagonally.
/// Both baths must live on the same frequency mesh (same exponent shape),
/// which holds when they were discretized with equal (s, cutoff, N, Lambda).
ModelParams build_single_bath_both(const DiscretizedBath& bath_z, const DiscretizedBath& bath_x,
                                   double bias, double tunneling);

struct RotationMap {
    double angle = 0.0;  // radians, in (-pi/2, pi/2)
};

/// The rotation e^{-i theta sigma_y / 2} acts on the spin alone and cannot
/// change boson frequencies; Invariant keeps w_k fixed. PaperRescaled applies
/// the alternative reporting convention w_k * (alpha~/lambda~_k) /
/// (alpha/lambda_k + beta/eta_k) with alpha~ = alpha + beta and requires the
/// global couplings of the pre-rotation spectral densities.
enum class FrequencyConvention { Invariant, PaperRescaled };

ModelParams rotate_params(const ModelParams& p, const RotationMap& map,
                          FrequencyConvention convention = FrequencyConvention::Invariant,
                          double alpha = 0.0, double beta = 0.0);

/// Angle that simultaneously zeroes the rotated bias and all rotated
/// off-diagonal couplings: tan(theta) = bias/tunneling = eta_k/lambda_k.
/// Throws std::invalid_argument naming the violated condition when the
/// ratios are inconsistent beyond `tol` (relative).
RotationMap rotation_angle_for_elimination(const ModelParams& p, double tol = 1e-8);

struct SpinExpectations {
    double sigma_z = 0.0;
    double sigma_x = 0.0;
};

/// (sz, sx) -> (sz cos(theta) - sx sin(theta), sz sin(theta) + sx cos(theta));
/// preserves the Bloch-vector length.
SpinExpectations rotate_observables(double sigma_z, double sigma_x, double angle);

/// Closed-form critical coupling of the single-polaron variational ansatz,
///   alpha_c = sin(pi s) e^{-s/2} / (2 pi (1-s)) * (tunneling/cutoff)^(1-s),
/// valid for 0 < s < 1.
double single_polaron_alpha_c(double s, double tunneling, double cutoff);

}  // namespace spinboson
