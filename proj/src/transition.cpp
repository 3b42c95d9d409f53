#include "spinboson/transition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace spinboson {

std::string to_string(SweptParameter p) {
    return p == SweptParameter::Alpha ? "alpha" : "beta";
}

SweptParameter swept_parameter_from_string(const std::string& name) {
    if (name == "alpha") return SweptParameter::Alpha;
    if (name == "beta") return SweptParameter::Beta;
    throw std::invalid_argument("unknown swept parameter '" + name + "' (expected alpha or beta)");
}

std::string to_string(TransitionOrder order) {
    switch (order) {
        case TransitionOrder::First: return "first";
        case TransitionOrder::Second: return "second";
        case TransitionOrder::None: return "none";
    }
    throw std::logic_error("unknown TransitionOrder");
}

void SweepPlan::validate() const {
    if (grid.size() < 3) throw std::invalid_argument("SweepPlan: grid needs at least 3 points");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw std::invalid_argument("SweepPlan: grid must be strictly increasing");
    solver.validate();
}

ModelParams SweepPlan::instantiate(double value) const {
    BathSpec spec_z = bath_z;
    BathSpec spec_x = bath_x;
    if (parameter == SweptParameter::Alpha) {
        spec_z.coupling = value;
        if (std::isfinite(beta_over_alpha)) spec_x.coupling = beta_over_alpha * value;
    } else {
        spec_x.coupling = value;
    }
    switch (layout) {
        case CouplingLayout::DiagonalOnly:
            return build_diagonal(discretize(spec_z), bias, tunneling);
        case CouplingLayout::TwoBath:
            return build_two_bath(discretize(spec_z), discretize(spec_x), bias, tunneling);
        case CouplingLayout::SingleBathBoth:
            return build_single_bath_both(discretize(spec_z), discretize(spec_x), bias, tunneling);
    }
    throw std::logic_error("unknown CouplingLayout");
}

namespace {

struct PointResult {
    GroundStateResult result;
    VariationalState best_state;
    VariationalState diverse_state;  // restart winner most different in sigma_z
    bool has_diverse = false;
};

PointResult solve_point(const SweepPlan& plan, double x,
                        const std::vector<const VariationalState*>& warm) {
    ModelParams model = plan.instantiate(x);
    SolverConfig cfg = plan.solver;
    cfg.keep_restart_states = true;

    std::vector<VariationalState> seeds;
    seeds.reserve(warm.size());
    for (const VariationalState* w : warm)
        if (w != nullptr) seeds.push_back(*w);

    PointResult out;
    out.result = solve(model, cfg, seeds);
    out.best_state = out.result.state;

    // Keep the converged restart most different in magnetization from the
    // winner; near first-order points this is the metastable branch.
    double best_gap = -1.0;
    for (std::size_t i = 0; i < out.result.restart_records.size(); ++i) {
        const RestartRecord& rec = out.result.restart_records[i];
        if (!rec.converged) continue;
        const double gap = std::abs(rec.sigma_z - out.result.observables.sigma_z);
        if (gap > best_gap) {
            best_gap = gap;
            out.diverse_state = out.result.restart_states[i];
            out.has_diverse = true;
        }
    }
    out.result.restart_states.clear();
    if (plan.observer) plan.observer(x, model, out.result);
    return out;
}

SweepPoint to_sweep_point(double x, const GroundStateResult& r) {
    SweepPoint p;
    p.parameter = x;
    p.energy = r.observables.energy;
    p.sigma_z = r.observables.sigma_z;
    p.sigma_x = r.observables.sigma_x;
    p.entropy = r.observables.entropy;
    p.converged = r.converged;
    p.iterations = r.iterations;
    return p;
}

double rotated_sigma_z(const GroundStateResult& r, double rotation_angle) {
    return rotate_observables(r.observables.sigma_z, r.observables.sigma_x, rotation_angle).sigma_z;
}

bool localized_restart(const RestartRecord& rec, const Detector& det) {
    const double sz = rotate_observables(rec.sigma_z, rec.sigma_x, det.observable_rotation).sigma_z;
    return std::abs(sz) > det.threshold;
}

// Indicator the bisection tracks. OrderParameter reads the winner's
// magnetization; BranchCrossing compares the best energies of the localized-
// and delocalized-classified restarts when both branches were found.
bool localized_indicator(const PointResult& point, const Detector& det) {
    if (det.kind == DetectorKind::BranchCrossing) {
        double e_loc = std::numeric_limits<double>::infinity();
        double e_deloc = std::numeric_limits<double>::infinity();
        for (const RestartRecord& rec : point.result.restart_records) {
            if (!rec.converged) continue;
            double& slot = localized_restart(rec, det) ? e_loc : e_deloc;
            slot = std::min(slot, rec.energy);
        }
        if (std::isfinite(e_loc) && std::isfinite(e_deloc)) return e_loc < e_deloc;
    }
    return std::abs(rotated_sigma_z(point.result, det.observable_rotation)) > det.threshold;
}

}  // namespace

std::vector<SweepPoint> sweep(const SweepPlan& plan) {
    plan.validate();

    std::vector<SweepPoint> table;
    table.reserve(plan.grid.size());

    VariationalState prev_best, prev_diverse;
    bool have_prev = false, have_diverse = false;
    for (double x : plan.grid) {
        std::vector<const VariationalState*> warm;
        if (plan.warm_start && have_prev) {
            warm.push_back(&prev_best);
            if (have_diverse) warm.push_back(&prev_diverse);
        }
        PointResult point = solve_point(plan, x, warm);
        table.push_back(to_sweep_point(x, point.result));

        prev_best = std::move(point.best_state);
        have_prev = true;
        have_diverse = point.has_diverse;
        if (point.has_diverse) prev_diverse = std::move(point.diverse_state);
    }
    return table;
}

TransitionReport locate_critical(const SweepPlan& plan, const Detector& detector,
                                 double lo, double hi, double resolution) {
    plan.solver.validate();
    if (!(hi > lo)) throw std::invalid_argument("locate_critical: need hi > lo");
    if (!(resolution > 0.0)) throw std::invalid_argument("locate_critical: resolution must be > 0");

    std::map<double, PointResult> cache;
    auto evaluate = [&](double x) -> PointResult& {
        auto it = cache.find(x);
        if (it != cache.end()) return it->second;
        // Warm-start from the nearest solved neighbours on each side.
        std::vector<const VariationalState*> warm;
        if (plan.warm_start && !cache.empty()) {
            auto above = cache.lower_bound(x);
            if (above != cache.end()) {
                warm.push_back(&above->second.best_state);
                if (above->second.has_diverse) warm.push_back(&above->second.diverse_state);
            }
            if (above != cache.begin()) {
                auto below = std::prev(above);
                warm.push_back(&below->second.best_state);
                if (below->second.has_diverse) warm.push_back(&below->second.diverse_state);
            }
        }
        auto [pos, inserted] = cache.emplace(x, solve_point(plan, x, warm));
        return pos->second;
    };

    TransitionReport report;
    report.grid_resolution = resolution;

    const bool loc_lo = localized_indicator(evaluate(lo), detector);
    const bool loc_hi = localized_indicator(evaluate(hi), detector);
    if (loc_lo == loc_hi) {
        report.order = TransitionOrder::None;
        report.bracket_found = false;
        std::ostringstream os;
        os << "no bracket: indicator is '" << (loc_lo ? "localized" : "delocalized")
           << "' at both ends of [" << lo << ", " << hi << "]";
        report.diagnostics = os.str();
        for (const auto& [x, point] : cache)
            report.all_converged = report.all_converged && point.result.converged;
        return report;
    }

    double a = lo, b = hi;
    while (b - a > resolution) {
        const double mid = 0.5 * (a + b);
        if (localized_indicator(evaluate(mid), detector) == loc_lo)
            a = mid;
        else
            b = mid;
    }
    const double xc = 0.5 * (a + b);
    report.critical_value = xc;
    report.bracket_found = true;

    // Order classification: jump across +-r versus +-r/2 around the critical
    // point; a first-order jump persists when the bracket is halved.
    const double r = resolution;
    auto abs_sz = [&](double x) {
        return std::abs(rotated_sigma_z(evaluate(x).result, detector.observable_rotation));
    };
    const double jump_wide = std::abs(abs_sz(xc + r) - abs_sz(xc - r));
    const double jump_half = std::abs(abs_sz(xc + 0.5 * r) - abs_sz(xc - 0.5 * r));
    report.order_parameter_jump = jump_wide;
    const bool first = jump_wide > detector.jump_threshold &&
                       jump_half > detector.jump_threshold &&
                       jump_half >= detector.persist_ratio * jump_wide;
    report.order = first ? TransitionOrder::First : TransitionOrder::Second;

    const double e_m1 = evaluate(xc - r).result.observables.energy;
    const double e_mh = evaluate(xc - 0.5 * r).result.observables.energy;
    const double e_ph = evaluate(xc + 0.5 * r).result.observables.energy;
    const double e_p1 = evaluate(xc + r).result.observables.energy;
    const double d_left = (e_mh - e_m1) / (0.5 * r);
    const double d_right = (e_p1 - e_ph) / (0.5 * r);
    report.derivative_discontinuity = std::abs(d_right - d_left);

    double s_peak = -1.0;
    for (const auto& [x, point] : cache) {
        report.all_converged = report.all_converged && point.result.converged;
        if (point.result.observables.entropy > s_peak) {
            s_peak = point.result.observables.entropy;
            report.entropy_peak_location = x;
        }
    }
    return report;
}

std::vector<DerivativePoint> energy_derivative(const std::vector<SweepPoint>& table) {
    const std::size_t n = table.size();
    if (n < 3) throw std::invalid_argument("energy_derivative: need at least 3 grid points");
    for (std::size_t i = 1; i < n; ++i)
        if (!(table[i].parameter > table[i - 1].parameter))
            throw std::invalid_argument("energy_derivative: table must be sorted in the parameter");

    std::vector<DerivativePoint> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        DerivativePoint& p = out[i];
        p.parameter = table[i].parameter;
        if (i == 0) {
            p.derivative = (table[1].energy - table[0].energy) /
                           (table[1].parameter - table[0].parameter);
            p.converged = table[0].converged && table[1].converged;
        } else if (i == n - 1) {
            p.derivative = (table[n - 1].energy - table[n - 2].energy) /
                           (table[n - 1].parameter - table[n - 2].parameter);
            p.converged = table[n - 1].converged && table[n - 2].converged;
        } else {
            p.derivative = (table[i + 1].energy - table[i - 1].energy) /
                           (table[i + 1].parameter - table[i - 1].parameter);
            p.converged = table[i - 1].converged && table[i].converged && table[i + 1].converged;
        }
    }
    return out;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepPoint>& table) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("write_sweep_csv: cannot open '" + path + "'");
    os << "param,E_g,sigma_z,sigma_x,entropy,converged,iterations\n";
    char line[256];
    for (const SweepPoint& p : table) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g,%d,%ld\n", p.parameter,
                      p.energy, p.sigma_z, p.sigma_x, p.entropy, p.converged ? 1 : 0,
                      p.iterations);
        os << line;
    }
    if (!os) throw std::runtime_error("write_sweep_csv: write to '" + path + "' failed");
}

}  // namespace spinboson
