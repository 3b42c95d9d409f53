#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "spinboson/model.hpp"

namespace spinboson {

/// Trial ground state with multiplicity M over N_total modes:
///   |Psi> = |+> sum_m A_m |f_m>  +  |-> sum_m B_m |f_m>,
/// where |f_m> is the multimode coherent state displaced by row m of
/// `displacements`. Both spin projections share the displacement rows.
///
/// All variational parameters are real: the Hamiltonians in scope are real
/// symmetric, so a real minimizer exists and <sigma_y> = 0 identically.
struct VariationalState {
    Eigen::VectorXd up_amps;        // A_m
    Eigen::VectorXd down_amps;      // B_m
    Eigen::MatrixXd displacements;  // f_{m,k}, M x N_total

    Eigen::Index multiplicity() const { return up_amps.size(); }
    Eigen::Index num_modes() const { return displacements.cols(); }

    void validate() const;
    void validate(const ModelParams& params) const;
};

struct Observables {
    double energy = 0.0;
    double sigma_z = 0.0;
    double sigma_x = 0.0;
    double entropy = 0.0;  // natural-log von Neumann entropy, in [0, ln 2]
};

/// Signals a state whose norm fell below 1e-14; the solver treats it as a
/// restart condition.
class CollapsedStateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Gaussian overlap F_{m,n} = exp(-1/2 sum_k (f_{m,k} - f_{n,k})^2).
double debye_waller(const VariationalState& state, Eigen::Index m, Eigen::Index n);

double hamiltonian_expectation(const VariationalState& state, const ModelParams& params);
double norm_value(const VariationalState& state);

/// E = <Psi|H|Psi> / <Psi|Psi>; invariant under joint rescaling of (A, B).
double energy(const VariationalState& state, const ModelParams& params);

Observables observables(const VariationalState& state, const ModelParams& params);

/// Per-iteration evaluation workspace. refresh() rebuilds the Debye-Waller
/// matrix and the a/b/d matrices for one (state, params) snapshot in
/// O(M^2 N_total); everything else reads the cache. Mutating the state
/// invalidates the cache -- call refresh() again (single-writer discipline).
class AnsatzEvaluator {
public:
    void refresh(const VariationalState& state, const ModelParams& params);

    double norm_value() const { return norm_; }
    double hamiltonian() const { return hamiltonian_; }
    /// Throws CollapsedStateError when the cached norm is <= 1e-14.
    double energy() const;
    Observables observables() const;

    /// Caller scaled (A, B) jointly by `factor`; updates the cached norm and
    /// Hamiltonian without a refresh (F, a, b, d are displacement-only).
    void note_amplitude_rescale(double factor);

    const Eigen::MatrixXd& overlap() const { return overlap_; }  // F
    const Eigen::MatrixXd& a() const { return a_; }
    const Eigen::MatrixXd& b() const { return b_; }
    const Eigen::MatrixXd& d() const { return d_; }

    /// dE/dA, dE/dB, dE/df for the refreshed snapshot.
    void energy_gradient(Eigen::VectorXd& grad_up, Eigen::VectorXd& grad_down,
                         Eigen::MatrixXd& grad_disp) const;

    const VariationalState& state() const { return *state_; }
    const ModelParams& params() const { return *params_; }

private:
    const VariationalState* state_ = nullptr;
    const ModelParams* params_ = nullptr;

    Eigen::VectorXd omega_, lambda_, eta_;  // copies of the mode arrays
    Eigen::MatrixXd overlap_, gram_, a_, b_, d_;
    Eigen::VectorXd row_sq_, u_, v_;  // |f_m|^2, sum_k lambda_k f_mk, sum_k eta_k f_mk
    double norm_ = 0.0, hamiltonian_ = 0.0;
};

Observables observables_from_parts(double energy, double sigma_z, double sigma_x);

}  // namespace spinboson
