#include "spinboson/model.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace spinboson {

std::string to_string(CouplingLayout layout) {
    switch (layout) {
        case CouplingLayout::DiagonalOnly: return "diagonal_only";
        case CouplingLayout::TwoBath: return "two_bath";
        case CouplingLayout::SingleBathBoth: return "single_bath_both";
    }
    throw std::logic_error("unknown CouplingLayout");
}

CouplingLayout coupling_layout_from_string(const std::string& name) {
    if (name == "diagonal_only") return CouplingLayout::DiagonalOnly;
    if (name == "two_bath") return CouplingLayout::TwoBath;
    if (name == "single_bath_both") return CouplingLayout::SingleBathBoth;
    throw std::invalid_argument("unknown coupling layout '" + name +
                                "' (expected diagonal_only, two_bath or single_bath_both)");
}

void ModelParams::validate() const {
    const std::size_t n = frequencies.size();
    if (diag_amplitudes.size() != n || offdiag_amplitudes.size() != n)
        throw std::invalid_argument("ModelParams: amplitude arrays must match frequencies length");
    if (!std::isfinite(bias) || !std::isfinite(tunneling))
        throw std::invalid_argument("ModelParams: bias and tunneling must be finite");
    for (std::size_t k = 0; k < n; ++k) {
        if (!(frequencies[k] > 0.0) || !std::isfinite(frequencies[k]))
            throw std::invalid_argument("ModelParams: frequencies must be finite and > 0");
        if (!std::isfinite(diag_amplitudes[k]) || !std::isfinite(offdiag_amplitudes[k]))
            throw std::invalid_argument("ModelParams: amplitudes must be finite");
    }
    if (layout == CouplingLayout::DiagonalOnly) {
        for (double e : offdiag_amplitudes)
            if (e != 0.0)
                throw std::invalid_argument("ModelParams: diagonal_only layout requires eta == 0");
    } else if (layout == CouplingLayout::TwoBath) {
        if (n % 2 != 0)
            throw std::invalid_argument("ModelParams: two_bath layout requires an even mode count");
        const std::size_t half = n / 2;
        for (std::size_t k = 0; k < half; ++k)
            if (offdiag_amplitudes[k] != 0.0)
                throw std::invalid_argument("ModelParams: two_bath layout requires eta == 0 on the first half");
        for (std::size_t k = half; k < n; ++k)
            if (diag_amplitudes[k] != 0.0)
                throw std::invalid_argument("ModelParams: two_bath layout requires lambda == 0 on the second half");
    }
}

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t fnv1a(std::uint64_t h, double v) { return fnv1a(h, &v, sizeof v); }

}  // namespace

std::uint64_t ModelParams::fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    h = fnv1a(h, bias);
    h = fnv1a(h, tunneling);
    const auto tag = static_cast<std::uint64_t>(layout);
    h = fnv1a(h, &tag, sizeof tag);
    const auto n = static_cast<std::uint64_t>(frequencies.size());
    h = fnv1a(h, &n, sizeof n);
    for (double v : frequencies) h = fnv1a(h, v);
    for (double v : diag_amplitudes) h = fnv1a(h, v);
    for (double v : offdiag_amplitudes) h = fnv1a(h, v);
    return h;
}

ModelParams build_diagonal(const DiscretizedBath& bath_z, double bias, double tunneling) {
    ModelParams p;
    p.bias = bias;
    p.tunneling = tunneling;
    p.layout = CouplingLayout::DiagonalOnly;
    p.frequencies = bath_z.frequencies;
    p.diag_amplitudes = bath_z.amplitudes;
    p.offdiag_amplitudes.assign(bath_z.size(), 0.0);
    p.validate();
    return p;
}

ModelParams build_two_bath(const DiscretizedBath& bath_z, const DiscretizedBath& bath_x,
                           double bias, double tunneling) {
    ModelParams p;
    p.bias = bias;
    p.tunneling = tunneling;
    p.layout = CouplingLayout::TwoBath;
    const std::size_t nz = bath_z.size(), nx = bath_x.size();
    p.frequencies.reserve(nz + nx);
    p.frequencies.insert(p.frequencies.end(), bath_z.frequencies.begin(), bath_z.frequencies.end());
    p.frequencies.insert(p.frequencies.end(), bath_x.frequencies.begin(), bath_x.frequencies.end());
    p.diag_amplitudes.assign(nz + nx, 0.0);
    p.offdiag_amplitudes.assign(nz + nx, 0.0);
    for (std::size_t k = 0; k < nz; ++k) p.diag_amplitudes[k] = bath_z.amplitudes[k];
    for (std::size_t k = 0; k < nx; ++k) p.offdiag_amplitudes[nz + k] = bath_x.amplitudes[k];
    if (nz != nx)
        throw std::invalid_argument("build_two_bath: both baths must have the same mode count");
    p.validate();
    return p;
}

ModelParams build_single_bath_both(const DiscretizedBath& bath_z, const DiscretizedBath& bath_x,
                                   double bias, double tunneling) {
    if (bath_z.size() != bath_x.size())
        throw std::invalid_argument("build_single_bath_both: baths must have the same mode count");
    for (std::size_t k = 0; k < bath_z.size(); ++k) {
        const double wz = bath_z.frequencies[k], wx = bath_x.frequencies[k];
        if (std::abs(wz - wx) > 1e-12 * std::max(wz, wx))
            throw std::invalid_argument(
                "build_single_bath_both: baths live on different frequency meshes "
                "(they must share the exponent, cutoff, mode count and log factor)");
    }
    ModelParams p;
    p.bias = bias;
    p.tunneling = tunneling;
    p.layout = CouplingLayout::SingleBathBoth;
    p.frequencies = bath_z.frequencies;
    p.diag_amplitudes = bath_z.amplitudes;
    p.offdiag_amplitudes = bath_x.amplitudes;
    p.validate();
    return p;
}

ModelParams rotate_params(const ModelParams& p, const RotationMap& map,
                          FrequencyConvention convention, double alpha, double beta) {
    if (p.layout != CouplingLayout::SingleBathBoth)
        throw std::invalid_argument(
            "rotate_params: rotation theory requires the single_bath_both layout "
            "(every mode coupled both ways)");
    if (!(map.angle > -std::numbers::pi / 2 && map.angle < std::numbers::pi / 2))
        throw std::invalid_argument("rotate_params: angle must lie in (-pi/2, pi/2)");
    p.validate();

    const double c = std::cos(map.angle);
    const double s = std::sin(map.angle);

    ModelParams out = p;
    out.bias = p.bias * c - p.tunneling * s;
    out.tunneling = p.bias * s + p.tunneling * c;
    const std::size_t n = p.num_modes();
    bool any_offdiag = false;
    for (std::size_t k = 0; k < n; ++k) {
        const double lam = p.diag_amplitudes[k];
        const double eta = p.offdiag_amplitudes[k];
        out.diag_amplitudes[k] = lam * c + eta * s;
        out.offdiag_amplitudes[k] = -lam * s + eta * c;
        if (std::abs(out.offdiag_amplitudes[k]) > 1e-14) any_offdiag = true;

        if (convention == FrequencyConvention::PaperRescaled) {
            if (lam == 0.0 || eta == 0.0)
                throw std::invalid_argument(
                    "rotate_params: the rescaled-frequency convention needs nonzero "
                    "lambda_k and eta_k on every mode");
            const double alpha_tilde = alpha + beta;
            out.frequencies[k] = p.frequencies[k] * (alpha_tilde / out.diag_amplitudes[k]) /
                                 (alpha / lam + beta / eta);
        }
    }
    // A rotation that removed every off-diagonal coupling produced a plain
    // diagonal model; record that so downstream layout checks hold.
    if (!any_offdiag) {
        for (std::size_t k = 0; k < n; ++k) out.offdiag_amplitudes[k] = 0.0;
        out.layout = CouplingLayout::DiagonalOnly;
    }
    out.validate();
    return out;
}

RotationMap rotation_angle_for_elimination(const ModelParams& p, double tol) {
    if (p.layout != CouplingLayout::SingleBathBoth)
        throw std::invalid_argument(
            "rotation_angle_for_elimination: requires the single_bath_both layout");
    if (p.tunneling == 0.0 && p.bias != 0.0)
        throw std::invalid_argument(
            "rotation_angle_for_elimination: bias/tunneling ratio is unbounded "
            "(tunneling = 0), no angle in (-pi/2, pi/2) removes the bias");

    const double spin_ratio = (p.tunneling == 0.0) ? 0.0 : p.bias / p.tunneling;

    for (std::size_t k = 0; k < p.num_modes(); ++k) {
        const double lam = p.diag_amplitudes[k];
        const double eta = p.offdiag_amplitudes[k];
        if (lam == 0.0) {
            if (eta != 0.0) {
                std::ostringstream os;
                os << "rotation_angle_for_elimination: mode " << k
                   << " has lambda = 0 with eta != 0; eta_k/lambda_k is unbounded "
                      "and no angle in (-pi/2, pi/2) removes the off-diagonal coupling";
                throw std::invalid_argument(os.str());
            }
            continue;  // decoupled mode, no constraint
        }
        const double mode_ratio = eta / lam;
        const double scale = std::max({std::abs(spin_ratio), std::abs(mode_ratio), 1.0});
        if (std::abs(mode_ratio - spin_ratio) > tol * scale) {
            std::ostringstream os;
            os << "rotation_angle_for_elimination: eta_k/lambda_k = " << mode_ratio
               << " at mode " << k << " does not match bias/tunneling = " << spin_ratio
               << " (conditions tan(theta) = bias/tunneling = eta/lambda violated; "
                  "the rotated bias stays finite and no exact diagonal mapping exists)";
            throw std::invalid_argument(os.str());
        }
    }
    return RotationMap{std::atan(spin_ratio)};
}

SpinExpectations rotate_observables(double sigma_z, double sigma_x, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {sigma_z * c - sigma_x * s, sigma_z * s + sigma_x * c};
}

double single_polaron_alpha_c(double s, double tunneling, double cutoff) {
    if (!(s > 0.0 && s < 1.0))
        throw std::invalid_argument("single_polaron_alpha_c: requires 0 < s < 1 (diverges at s = 1)");
    if (!(cutoff > 0.0) || !(tunneling > 0.0))
        throw std::invalid_argument("single_polaron_alpha_c: tunneling and cutoff must be > 0");
    return std::sin(std::numbers::pi * s) * std::exp(-s / 2.0) /
           (2.0 * std::numbers::pi * (1.0 - s)) * std::pow(tunneling / cutoff, 1.0 - s);
}

}  // namespace spinboson
