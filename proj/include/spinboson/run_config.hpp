#pragma once

#include <limits>
#include <string>
#include <vector>

#include "spinboson/bath.hpp"
#include "spinboson/model.hpp"
#include "spinboson/oracle.hpp"
#include "spinboson/solver.hpp"
#include "spinboson/transition.hpp"

namespace spinboson {

/// Raised for malformed configs; carries the offending field path in the
/// message so the CLI can print a line/field diagnostic.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SweepSection {
    std::string parameter = "alpha";
    std::vector<double> grid;
    bool warm_start = true;
    double beta_over_alpha = std::numeric_limits<double>::quiet_NaN();
};

struct CriticalSection {
    std::string parameter = "alpha";
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    double resolution = 1e-4;
    std::string detector = "order_parameter";
    double threshold = 1e-2;
    double observable_rotation = 0.0;
    double beta_over_alpha = std::numeric_limits<double>::quiet_NaN();
};

struct RotateSection {
    double theta = 0.0;
    bool auto_theta = false;
    bool rescale_frequencies = false;
};

struct OracleSection {
    int n_max = -1;  // -1: adaptive
};

struct OutputSection {
    std::string result;
    std::string csv;
    std::string checkpoint;
    std::string trace;
    std::string report;
};

/// Versioned, schema-validated run configuration. Unknown keys are rejected;
/// resolved_text() echoes every field with defaults made explicit.
struct RunConfig {
    int schema_version = 1;

    double epsilon = 0.0;
    double delta = 0.1;
    std::string layout = "diagonal_only";

    BathSpec bath_z{0.5, 0.05, 1.0, 50, 1.5};
    BathSpec bath_x{0.5, 0.0, 1.0, 50, 1.5};

    SolverConfig solver;
    SweepSection sweep;
    CriticalSection critical;
    RotateSection rotate;
    OracleSection oracle;
    OutputSection output;

    static RunConfig from_file(const std::string& path);
    static RunConfig from_text(const std::string& text);

    std::string resolved_text() const;

    ModelParams build_model() const;
    SweepPlan build_sweep_plan() const;
    SweepPlan build_critical_plan() const;  // same template, grid unused
    Detector build_detector() const;
};

std::string result_to_json_text(const GroundStateResult& result, const ModelParams& model);

struct ParsedResult {
    Observables observables;
    bool converged = false;
    long iterations = 0;
    int schema_version = 0;
};
ParsedResult parse_result_text(const std::string& text);

std::string transition_report_to_json_text(const TransitionReport& report);
std::string ed_result_to_json_text(const EdResult& ed, bool has_variational_gap,
                                   double variational_gap);

}  // namespace spinboson
