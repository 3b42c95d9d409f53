#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "spinboson/bath.hpp"
#include "spinboson/model.hpp"
#include "spinboson/solver.hpp"

namespace spinboson {

enum class SweptParameter { Alpha, Beta };

std::string to_string(SweptParameter p);
SweptParameter swept_parameter_from_string(const std::string& name);

struct SweepPoint {
    double parameter = 0.0;
    double energy = 0.0;
    double sigma_z = 0.0;
    double sigma_x = 0.0;
    double entropy = 0.0;
    bool converged = false;
    long iterations = 0;
};

/// Model template plus the coupling grid. Each grid value replaces the swept
/// bath coupling; when sweeping alpha with `beta_over_alpha` set, the
/// off-diagonal coupling follows as beta = ratio * alpha (linked sweeps).
struct SweepPlan {
    SweptParameter parameter = SweptParameter::Alpha;
    std::vector<double> grid;

    double bias = 0.0;
    double tunneling = 0.0;
    CouplingLayout layout = CouplingLayout::DiagonalOnly;
    BathSpec bath_z;
    BathSpec bath_x;
    double beta_over_alpha = std::numeric_limits<double>::quiet_NaN();

    SolverConfig solver;
    bool warm_start = true;

    /// Observer called after each solved point (sweeps and bisections);
    /// used for gradient audits and trace collection.
    std::function<void(double, const ModelParams&, const GroundStateResult&)> observer;

    void validate() const;
    ModelParams instantiate(double value) const;
};

/// One solve per grid point, warm-starting each point from the previous
/// point's branches on top of the configured cold restarts. Unconverged
/// points are flagged, never dropped.
std::vector<SweepPoint> sweep(const SweepPlan& plan);

enum class DetectorKind { OrderParameter, BranchCrossing };

struct Detector {
    DetectorKind kind = DetectorKind::OrderParameter;
    /// |sigma_z| onset for the localized classification (after rotating the
    /// observables by `observable_rotation`).
    double threshold = 1e-2;
    double observable_rotation = 0.0;
    /// Order classification knobs: first order needs a jump above
    /// `jump_threshold` across the refined bracket that persists (ratio >=
    /// `persist_ratio`) when the bracket is halved.
    double jump_threshold = 0.1;
    double persist_ratio = 0.85;
};

enum class TransitionOrder { First, Second, None };

std::string to_string(TransitionOrder order);

struct TransitionReport {
    double critical_value = std::numeric_limits<double>::quiet_NaN();
    TransitionOrder order = TransitionOrder::None;
    double order_parameter_jump = 0.0;       // across the +-resolution bracket
    double derivative_discontinuity = 0.0;   // one-sided dE/dx mismatch at the critical point
    double entropy_peak_location = std::numeric_limits<double>::quiet_NaN();
    double grid_resolution = 0.0;
    bool bracket_found = false;
    bool all_converged = true;
    std::string diagnostics;
};

/// Bisection of the detector indicator over [lo, hi] down to `resolution`.
TransitionReport locate_critical(const SweepPlan& plan, const Detector& detector,
                                 double lo, double hi, double resolution = 1e-4);

struct DerivativePoint {
    double parameter = 0.0;
    double derivative = 0.0;
    bool converged = false;  // all table rows entering the stencil converged
};

/// Central finite differences in the interior, one-sided at the ends.
std::vector<DerivativePoint> energy_derivative(const std::vector<SweepPoint>& table);

/// Columns exactly: param,E_g,sigma_z,sigma_x,entropy,converged,iterations
void write_sweep_csv(const std::string& path, const std::vector<SweepPoint>& table);

}  // namespace spinboson
