#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spinboson/ansatz.hpp"

namespace spinboson {

struct AnnealConfig {
    int rounds = 5;
    double initial_noise_scale = 0.1;  // fraction of the parameter RMS
    double decay_factor = 0.5;
};

struct SolverConfig {
    int multiplicity = 6;
    double relax_factor = 0.1;
    double tol = 1e-11;          // max-norm termination threshold on x* - x
    long max_iter = 1000000;
    int restarts = 10;           // two of these are the biased seeds
    AnnealConfig anneal;
    std::uint64_t rng_seed = 1;
    int workers = 0;             // 0: SPINBOSON_WORKERS env var, else hardware
    std::string trace_path;      // per-restart trace CSVs <path>.restartNN.csv
    bool keep_restart_states = false;

    void validate() const;
};

struct RestartRecord {
    double energy = 0.0;
    bool converged = false;
    bool stagnated = false;  // converged-with-warning via the stagnation guard
    long iterations = 0;
    double sigma_z = 0.0;
    double sigma_x = 0.0;
    double anneal_gain = 0.0;  // energy drop from annealing, >= 0 by construction
};

struct GroundStateResult {
    VariationalState state;
    Observables observables;
    bool converged = false;
    long iterations = 0;
    std::vector<double> restart_energies;
    std::vector<RestartRecord> restart_records;
    std::vector<VariationalState> restart_states;  // filled when keep_restart_states
    int best_restart = -1;
};

struct UpdateTargets {
    Eigen::VectorXd up_amps;
    Eigen::VectorXd down_amps;
    Eigen::MatrixXd displacements;
    bool singular = false;  // a fixed-point denominator vanished; the solver
                            // substitutes a damped gradient step
};

/// Fixed-point targets (A*, B*, f*) of the stationarity conditions at the
/// given energy. At a converged point the targets equal the current
/// parameters.
UpdateTargets update_targets(const VariationalState& state, const ModelParams& params,
                             double energy);

/// x -> x + t (x* - x) elementwise. Throws on non-finite targets.
void relax_step(VariationalState& state, const UpdateTargets& targets, double relax_factor);

/// Duplicates or truncates nothing: pads a state with `target_m - M` extra
/// rows carrying tiny-noise amplitudes so a smaller-multiplicity solution can
/// seed a larger run without changing its energy (M-ladder warm starts).
VariationalState pad_multiplicity(const VariationalState& state, Eigen::Index target_m,
                                  std::uint64_t seed);

/// Relaxed fixed-point iteration with random restarts, two biased seeds
/// (localized / delocalized) and simulated annealing. `warm_starts` are run
/// as extra restarts on top of the configured ones; states of smaller
/// multiplicity are padded up.
GroundStateResult solve(const ModelParams& params, const SolverConfig& config,
                        std::span<const VariationalState> warm_starts = {});

}  // namespace spinboson
