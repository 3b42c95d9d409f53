#include "spinboson/run_config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace spinboson {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError("config: " + path + ": " + what);
}

void require_keys(const json& obj, const std::string& path,
                  std::initializer_list<const char*> known) {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* k : known)
            if (key == k) {
                ok = true;
                break;
            }
        if (!ok) fail(path, "unknown key '" + key + "'");
    }
}

double get_number(const json& obj, const std::string& path, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

long get_integer(const json& obj, const std::string& path, const char* key, long fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
    return v.get<long>();
}

bool get_bool(const json& obj, const std::string& path, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) fail(path + "." + key, "expected a boolean");
    return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& path, const char* key,
                       const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

BathSpec parse_bath(const json& obj, const std::string& path, const BathSpec& defaults) {
    require_keys(obj, path, {"exponent", "coupling", "cutoff", "num_modes", "log_factor"});
    BathSpec spec = defaults;
    spec.exponent = get_number(obj, path, "exponent", defaults.exponent);
    spec.coupling = get_number(obj, path, "coupling", defaults.coupling);
    spec.cutoff = get_number(obj, path, "cutoff", defaults.cutoff);
    const long n = get_integer(obj, path, "num_modes", static_cast<long>(defaults.num_modes));
    if (n < 1) fail(path + ".num_modes", "must be >= 1");
    spec.num_modes = static_cast<std::size_t>(n);
    spec.log_factor = get_number(obj, path, "log_factor", defaults.log_factor);
    return spec;
}

std::vector<double> parse_grid(const json& v, const std::string& path) {
    std::vector<double> grid;
    if (v.is_array()) {
        for (const auto& x : v) {
            if (!x.is_number()) fail(path, "grid entries must be numbers");
            grid.push_back(x.get<double>());
        }
        return grid;
    }
    if (v.is_object()) {
        require_keys(v, path, {"start", "stop", "count"});
        const double start = get_number(v, path, "start", 0.0);
        const double stop = get_number(v, path, "stop", 0.0);
        const long count = get_integer(v, path, "count", 0);
        if (count < 2) fail(path + ".count", "must be >= 2");
        for (long i = 0; i < count; ++i)
            grid.push_back(start + (stop - start) * static_cast<double>(i) /
                                       static_cast<double>(count - 1));
        return grid;
    }
    fail(path, "expected an array of values or {start, stop, count}");
}

json bath_to_json(const BathSpec& spec) {
    return json{{"exponent", spec.exponent},
                {"coupling", spec.coupling},
                {"cutoff", spec.cutoff},
                {"num_modes", spec.num_modes},
                {"log_factor", spec.log_factor}};
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << is.rdbuf();
    return from_text(buf.str());
}

RunConfig RunConfig::from_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }

    RunConfig cfg;
    require_keys(root, "$",
                 {"schema_version", "model", "bath_z", "bath_x", "solver", "sweep", "critical",
                  "rotate", "oracle", "output"});

    const long version = get_integer(root, "$", "schema_version", 1);
    if (version != 1) fail("$.schema_version", "unsupported schema version");
    cfg.schema_version = 1;

    if (root.contains("model")) {
        const json& m = root.at("model");
        require_keys(m, "$.model", {"epsilon", "delta", "layout"});
        cfg.epsilon = get_number(m, "$.model", "epsilon", cfg.epsilon);
        cfg.delta = get_number(m, "$.model", "delta", cfg.delta);
        cfg.layout = get_string(m, "$.model", "layout", cfg.layout);
        coupling_layout_from_string(cfg.layout);  // validates the name
    }
    if (root.contains("bath_z")) cfg.bath_z = parse_bath(root.at("bath_z"), "$.bath_z", cfg.bath_z);
    if (root.contains("bath_x")) cfg.bath_x = parse_bath(root.at("bath_x"), "$.bath_x", cfg.bath_x);

    if (root.contains("solver")) {
        const json& s = root.at("solver");
        require_keys(s, "$.solver",
                     {"multiplicity", "relax_factor", "tol", "max_iter", "restarts", "anneal",
                      "seed", "workers"});
        cfg.solver.multiplicity =
            static_cast<int>(get_integer(s, "$.solver", "multiplicity", cfg.solver.multiplicity));
        cfg.solver.relax_factor = get_number(s, "$.solver", "relax_factor", cfg.solver.relax_factor);
        cfg.solver.tol = get_number(s, "$.solver", "tol", cfg.solver.tol);
        cfg.solver.max_iter = get_integer(s, "$.solver", "max_iter", cfg.solver.max_iter);
        cfg.solver.restarts =
            static_cast<int>(get_integer(s, "$.solver", "restarts", cfg.solver.restarts));
        if (s.contains("anneal")) {
            const json& a = s.at("anneal");
            require_keys(a, "$.solver.anneal", {"rounds", "initial_noise_scale", "decay_factor"});
            cfg.solver.anneal.rounds =
                static_cast<int>(get_integer(a, "$.solver.anneal", "rounds", cfg.solver.anneal.rounds));
            cfg.solver.anneal.initial_noise_scale = get_number(
                a, "$.solver.anneal", "initial_noise_scale", cfg.solver.anneal.initial_noise_scale);
            cfg.solver.anneal.decay_factor =
                get_number(a, "$.solver.anneal", "decay_factor", cfg.solver.anneal.decay_factor);
        }
        const long seed = get_integer(s, "$.solver", "seed", static_cast<long>(cfg.solver.rng_seed));
        cfg.solver.rng_seed = static_cast<std::uint64_t>(seed);
        cfg.solver.workers = static_cast<int>(get_integer(s, "$.solver", "workers", cfg.solver.workers));
    }

    if (root.contains("sweep")) {
        const json& s = root.at("sweep");
        require_keys(s, "$.sweep", {"parameter", "grid", "warm_start", "beta_over_alpha"});
        cfg.sweep.parameter = get_string(s, "$.sweep", "parameter", cfg.sweep.parameter);
        swept_parameter_from_string(cfg.sweep.parameter);
        if (s.contains("grid")) cfg.sweep.grid = parse_grid(s.at("grid"), "$.sweep.grid");
        cfg.sweep.warm_start = get_bool(s, "$.sweep", "warm_start", cfg.sweep.warm_start);
        cfg.sweep.beta_over_alpha =
            get_number(s, "$.sweep", "beta_over_alpha", cfg.sweep.beta_over_alpha);
    }

    if (root.contains("critical")) {
        const json& c = root.at("critical");
        require_keys(c, "$.critical",
                     {"parameter", "bracket", "resolution", "detector", "threshold",
                      "observable_rotation", "beta_over_alpha"});
        cfg.critical.parameter = get_string(c, "$.critical", "parameter", cfg.critical.parameter);
        swept_parameter_from_string(cfg.critical.parameter);
        if (c.contains("bracket")) {
            const json& b = c.at("bracket");
            if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number())
                fail("$.critical.bracket", "expected [lo, hi]");
            cfg.critical.bracket_lo = b[0].get<double>();
            cfg.critical.bracket_hi = b[1].get<double>();
        }
        cfg.critical.resolution =
            get_number(c, "$.critical", "resolution", cfg.critical.resolution);
        cfg.critical.detector = get_string(c, "$.critical", "detector", cfg.critical.detector);
        if (cfg.critical.detector != "order_parameter" && cfg.critical.detector != "branch_crossing")
            fail("$.critical.detector", "expected order_parameter or branch_crossing");
        cfg.critical.threshold = get_number(c, "$.critical", "threshold", cfg.critical.threshold);
        cfg.critical.observable_rotation =
            get_number(c, "$.critical", "observable_rotation", cfg.critical.observable_rotation);
        cfg.critical.beta_over_alpha =
            get_number(c, "$.critical", "beta_over_alpha", cfg.critical.beta_over_alpha);
    }

    if (root.contains("rotate")) {
        const json& r = root.at("rotate");
        require_keys(r, "$.rotate", {"theta", "rescale_frequencies"});
        if (r.contains("theta")) {
            const json& t = r.at("theta");
            if (t.is_string()) {
                if (t.get<std::string>() != "auto")
                    fail("$.rotate.theta", "expected a number or \"auto\"");
                cfg.rotate.auto_theta = true;
            } else if (t.is_number()) {
                cfg.rotate.theta = t.get<double>();
            } else {
                fail("$.rotate.theta", "expected a number or \"auto\"");
            }
        }
        cfg.rotate.rescale_frequencies =
            get_bool(r, "$.rotate", "rescale_frequencies", cfg.rotate.rescale_frequencies);
    }

    if (root.contains("oracle")) {
        const json& o = root.at("oracle");
        require_keys(o, "$.oracle", {"n_max"});
        if (o.contains("n_max")) {
            const json& v = o.at("n_max");
            if (v.is_string()) {
                if (v.get<std::string>() != "auto") fail("$.oracle.n_max", "expected an integer or \"auto\"");
                cfg.oracle.n_max = -1;
            } else if (v.is_number_integer()) {
                cfg.oracle.n_max = v.get<int>();
            } else {
                fail("$.oracle.n_max", "expected an integer or \"auto\"");
            }
        }
    }

    if (root.contains("output")) {
        const json& o = root.at("output");
        require_keys(o, "$.output", {"result", "csv", "checkpoint", "trace", "report"});
        cfg.output.result = get_string(o, "$.output", "result", cfg.output.result);
        cfg.output.csv = get_string(o, "$.output", "csv", cfg.output.csv);
        cfg.output.checkpoint = get_string(o, "$.output", "checkpoint", cfg.output.checkpoint);
        cfg.output.trace = get_string(o, "$.output", "trace", cfg.output.trace);
        cfg.output.report = get_string(o, "$.output", "report", cfg.output.report);
    }

    try {
        cfg.bath_z.validate();
        cfg.bath_x.validate();
        cfg.solver.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

std::string RunConfig::resolved_text() const {
    json root;
    root["schema_version"] = schema_version;
    root["model"] = {{"epsilon", epsilon}, {"delta", delta}, {"layout", layout}};
    root["bath_z"] = bath_to_json(bath_z);
    root["bath_x"] = bath_to_json(bath_x);
    root["solver"] = {{"multiplicity", solver.multiplicity},
                      {"relax_factor", solver.relax_factor},
                      {"tol", solver.tol},
                      {"max_iter", solver.max_iter},
                      {"restarts", solver.restarts},
                      {"anneal",
                       {{"rounds", solver.anneal.rounds},
                        {"initial_noise_scale", solver.anneal.initial_noise_scale},
                        {"decay_factor", solver.anneal.decay_factor}}},
                      {"seed", solver.rng_seed},
                      {"workers", solver.workers}};
    root["sweep"] = {{"parameter", sweep.parameter},
                     {"grid", sweep.grid},
                     {"warm_start", sweep.warm_start}};
    if (std::isfinite(sweep.beta_over_alpha))
        root["sweep"]["beta_over_alpha"] = sweep.beta_over_alpha;
    root["critical"] = {{"parameter", critical.parameter},
                        {"bracket", {critical.bracket_lo, critical.bracket_hi}},
                        {"resolution", critical.resolution},
                        {"detector", critical.detector},
                        {"threshold", critical.threshold},
                        {"observable_rotation", critical.observable_rotation}};
    if (std::isfinite(critical.beta_over_alpha))
        root["critical"]["beta_over_alpha"] = critical.beta_over_alpha;
    root["rotate"] = {{"theta", rotate.auto_theta ? json("auto") : json(rotate.theta)},
                      {"rescale_frequencies", rotate.rescale_frequencies}};
    root["oracle"] = {{"n_max", oracle.n_max < 0 ? json("auto") : json(oracle.n_max)}};
    root["output"] = {{"result", output.result},
                      {"csv", output.csv},
                      {"checkpoint", output.checkpoint},
                      {"trace", output.trace},
                      {"report", output.report}};
    return root.dump(2) + "\n";
}

ModelParams RunConfig::build_model() const {
    const CouplingLayout lay = coupling_layout_from_string(layout);
    switch (lay) {
        case CouplingLayout::DiagonalOnly:
            if (bath_x.coupling != 0.0)
                throw ConfigError(
                    "config: layout diagonal_only is incompatible with a nonzero bath_x coupling");
            return build_diagonal(discretize(bath_z), epsilon, delta);
        case CouplingLayout::TwoBath:
            return build_two_bath(discretize(bath_z), discretize(bath_x), epsilon, delta);
        case CouplingLayout::SingleBathBoth:
            return build_single_bath_both(discretize(bath_z), discretize(bath_x), epsilon, delta);
    }
    throw std::logic_error("unknown layout");
}

namespace {

SweepPlan plan_template(const RunConfig& cfg) {
    SweepPlan plan;
    plan.bias = cfg.epsilon;
    plan.tunneling = cfg.delta;
    plan.layout = coupling_layout_from_string(cfg.layout);
    plan.bath_z = cfg.bath_z;
    plan.bath_x = cfg.bath_x;
    plan.solver = cfg.solver;
    return plan;
}

}  // namespace

SweepPlan RunConfig::build_sweep_plan() const {
    SweepPlan plan = plan_template(*this);
    plan.parameter = swept_parameter_from_string(sweep.parameter);
    plan.grid = sweep.grid;
    plan.warm_start = sweep.warm_start;
    plan.beta_over_alpha = sweep.beta_over_alpha;
    return plan;
}

SweepPlan RunConfig::build_critical_plan() const {
    SweepPlan plan = plan_template(*this);
    plan.parameter = swept_parameter_from_string(critical.parameter);
    plan.beta_over_alpha = critical.beta_over_alpha;
    return plan;
}

Detector RunConfig::build_detector() const {
    Detector det;
    det.kind = critical.detector == "branch_crossing" ? DetectorKind::BranchCrossing
                                                      : DetectorKind::OrderParameter;
    det.threshold = critical.threshold;
    det.observable_rotation = critical.observable_rotation;
    return det;
}

std::string result_to_json_text(const GroundStateResult& result, const ModelParams& model) {
    json root;
    root["schema_version"] = 1;
    root["energy"] = result.observables.energy;
    root["sigma_z"] = result.observables.sigma_z;
    root["sigma_x"] = result.observables.sigma_x;
    root["entropy"] = result.observables.entropy;
    root["converged"] = result.converged;
    root["iterations"] = result.iterations;
    root["best_restart"] = result.best_restart;
    root["restart_energies"] = result.restart_energies;
    root["multiplicity"] = result.state.multiplicity();
    root["num_modes"] = result.state.num_modes();
    char fp[32];
    std::snprintf(fp, sizeof fp, "%016llx",
                  static_cast<unsigned long long>(model.fingerprint()));
    root["model_fingerprint"] = fp;
    return root.dump(2) + "\n";
}

ParsedResult parse_result_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("result: JSON parse error: ") + e.what());
    }
    ParsedResult out;
    try {
        out.schema_version = root.at("schema_version").get<int>();
        if (out.schema_version != 1) throw ConfigError("result: unsupported schema version");
        out.observables.energy = root.at("energy").get<double>();
        out.observables.sigma_z = root.at("sigma_z").get<double>();
        out.observables.sigma_x = root.at("sigma_x").get<double>();
        out.observables.entropy = root.at("entropy").get<double>();
        out.converged = root.at("converged").get<bool>();
        out.iterations = root.at("iterations").get<long>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("result: missing or ill-typed field: ") + e.what());
    }
    return out;
}

std::string transition_report_to_json_text(const TransitionReport& report) {
    json root;
    root["schema_version"] = 1;
    if (std::isfinite(report.critical_value))
        root["critical_value"] = report.critical_value;
    else
        root["critical_value"] = nullptr;
    root["order"] = to_string(report.order);
    root["evidence"] = {{"order_parameter_jump", report.order_parameter_jump},
                        {"derivative_discontinuity", report.derivative_discontinuity},
                        {"entropy_peak_location",
                         std::isfinite(report.entropy_peak_location)
                             ? json(report.entropy_peak_location)
                             : json(nullptr)}};
    root["grid_resolution"] = report.grid_resolution;
    root["bracket_found"] = report.bracket_found;
    root["all_converged"] = report.all_converged;
    root["diagnostics"] = report.diagnostics;
    return root.dump(2) + "\n";
}

std::string ed_result_to_json_text(const EdResult& ed, bool has_variational_gap,
                                   double variational_gap) {
    json root;
    root["schema_version"] = 1;
    root["energy"] = ed.energy;
    root["energy_first_excited"] = ed.energy_first_excited;
    root["sigma_z"] = ed.sigma_z;
    root["sigma_x"] = ed.sigma_x;
    root["sigma_y"] = ed.sigma_y;
    root["entropy"] = ed.entropy;
    root["n_max_used"] = ed.n_max_used;
    if (has_variational_gap) root["variational_gap"] = variational_gap;
    return root.dump(2) + "\n";
}

}  // namespace spinboson
