#pragma once

#include <Eigen/Dense>

#include "spinboson/ansatz.hpp"
#include "spinboson/model.hpp"

namespace spinboson {

/// Truncation of the boson Hilbert space for exact diagonalization.
/// Restricted to at most 3 modes and total dimension 2*(n_max+1)^modes <= 1e6.
struct FockTruncation {
    int n_max = -1;  // per-mode cap; -1 doubles adaptively until the ground
                     // energy moves by less than 1e-10
};

struct EdResult {
    double energy = 0.0;
    double energy_first_excited = 0.0;
    double sigma_z = 0.0;
    double sigma_x = 0.0;
    double sigma_y = 0.0;  // identically 0 for the real Hamiltonians in scope
    double entropy = 0.0;
    int n_max_used = 0;
};

/// Lowest eigenpair (and the next eigenvalue, for degeneracy checks) of the
/// merged-chain Hamiltonian in the product basis {|+>,|->} x {|n_1..n_N>};
/// spin observables and the reduced-density-matrix entropy come from the
/// ground eigenvector. Dense below dimension 4000, Lanczos above.
EdResult ed_ground_state(const ModelParams& params, const FockTruncation& trunc = {});

/// Coherent-state expansion <n|f> = e^{-f^2/2} f^n / sqrt(n!) mode by mode of
/// a multi-D2 state. Throws when any per-mode truncation tail exceeds 1e-10.
Eigen::VectorXd expand_coherent_state(const VariationalState& state, const ModelParams& params,
                                      int n_max);

double fock_norm(const Eigen::VectorXd& v);
double fock_hamiltonian(const Eigen::VectorXd& v, const ModelParams& params, int n_max);

/// Dense Hamiltonian matrix (small dimensions only); exposed for symmetry
/// checks in the tests.
Eigen::MatrixXd ed_dense_matrix(const ModelParams& params, int n_max);

}  // namespace spinboson
