#include "spinboson/ansatz.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spinboson {

void VariationalState::validate() const {
    const Eigen::Index m = multiplicity();
    if (m < 1) throw std::invalid_argument("VariationalState: multiplicity must be >= 1");
    if (down_amps.size() != m || displacements.rows() != m)
        throw std::invalid_argument("VariationalState: A, B and displacement rows must agree");
    if (!up_amps.allFinite() || !down_amps.allFinite() || !displacements.allFinite())
        throw std::invalid_argument("VariationalState: all entries must be finite");
}

void VariationalState::validate(const ModelParams& params) const {
    validate();
    if (num_modes() != static_cast<Eigen::Index>(params.num_modes()))
        throw std::invalid_argument("VariationalState: displacement columns must match the model's mode count");
}

double debye_waller(const VariationalState& state, Eigen::Index m, Eigen::Index n) {
    state.validate();
    if (m < 0 || n < 0 || m >= state.multiplicity() || n >= state.multiplicity())
        throw std::invalid_argument("debye_waller: row index out of range");
    const double dist2 = (state.displacements.row(m) - state.displacements.row(n)).squaredNorm();
    return std::exp(-0.5 * dist2);
}

void AnsatzEvaluator::refresh(const VariationalState& state, const ModelParams& params) {
    state.validate(params);
    state_ = &state;
    params_ = &params;

    const Eigen::Index m = state.multiplicity();
    const Eigen::Index n = state.num_modes();

    omega_ = Eigen::Map<const Eigen::VectorXd>(params.frequencies.data(), n);
    lambda_ = Eigen::Map<const Eigen::VectorXd>(params.diag_amplitudes.data(), n);
    eta_ = Eigen::Map<const Eigen::VectorXd>(params.offdiag_amplitudes.data(), n);

    const Eigen::MatrixXd& f = state.displacements;
    row_sq_ = f.rowwise().squaredNorm();
    gram_.noalias() = f * omega_.asDiagonal() * f.transpose();
    u_.noalias() = f * lambda_;
    v_.noalias() = f * eta_;

    // F_{mn} = exp(-1/2 |f_m - f_n|^2) via the plain Gram matrix.
    Eigen::MatrixXd ff;
    ff.noalias() = f * f.transpose();
    overlap_.resize(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        overlap_(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < m; ++j) {
            const double dist2 = std::max(0.0, row_sq_(i) + row_sq_(j) - 2.0 * ff(i, j));
            overlap_(i, j) = overlap_(j, i) = std::exp(-0.5 * dist2);
        }
    }

    const double half_bias = 0.5 * params.bias;
    const double half_tun = 0.5 * params.tunneling;
    a_.resize(m, m);
    b_.resize(m, m);
    d_.resize(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double coupling_sum = 0.5 * (u_(i) + u_(j));
            a_(i, j) = a_(j, i) = half_bias + gram_(i, j) + coupling_sum;
            b_(i, j) = b_(j, i) = -half_bias + gram_(i, j) - coupling_sum;
            d_(i, j) = d_(j, i) = -half_tun + 0.5 * (v_(i) + v_(j));
        }
    }

    const Eigen::VectorXd& A = state.up_amps;
    const Eigen::VectorXd& B = state.down_amps;
    norm_ = A.dot(overlap_ * A) + B.dot(overlap_ * B);
    hamiltonian_ = 2.0 * A.dot(overlap_.cwiseProduct(d_) * B) +
                   A.dot(overlap_.cwiseProduct(a_) * A) +
                   B.dot(overlap_.cwiseProduct(b_) * B);
}

double AnsatzEvaluator::energy() const {
    if (!(norm_ > 1e-14))
        throw CollapsedStateError("ansatz: state norm <= 1e-14 (collapsed state)");
    return hamiltonian_ / norm_;
}

void AnsatzEvaluator::note_amplitude_rescale(double factor) {
    norm_ *= factor * factor;
    hamiltonian_ *= factor * factor;
}

Observables AnsatzEvaluator::observables() const {
    const Eigen::VectorXd& A = state_->up_amps;
    const Eigen::VectorXd& B = state_->down_amps;
    const double e = energy();
    const double sz = (A.dot(overlap_ * A) - B.dot(overlap_ * B)) / norm_;
    const double sx = 2.0 * A.dot(overlap_ * B) / norm_;
    Observables out = observables_from_parts(e, sz, sx);
    return out;
}

Observables observables_from_parts(double energy, double sigma_z, double sigma_x) {
    double r = std::sqrt(sigma_z * sigma_z + sigma_x * sigma_x);
    if (r > 1.0 + 1e-10)
        throw std::runtime_error("observables: Bloch-vector length exceeds 1 beyond 1e-10");
    r = std::min(r, 1.0);
    const double wp = 0.5 * (1.0 + r);
    const double wm = 0.5 * (1.0 - r);
    auto xlnx = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
    Observables out;
    out.energy = energy;
    out.sigma_z = sigma_z;
    out.sigma_x = sigma_x;
    out.entropy = std::max(0.0, -xlnx(wp) - xlnx(wm));
    return out;
}

void AnsatzEvaluator::energy_gradient(Eigen::VectorXd& grad_up, Eigen::VectorXd& grad_down,
                                      Eigen::MatrixXd& grad_disp) const {
    const Eigen::VectorXd& A = state_->up_amps;
    const Eigen::VectorXd& B = state_->down_amps;
    const Eigen::MatrixXd& f = state_->displacements;
    const double e = energy();

    const Eigen::MatrixXd xa = overlap_.cwiseProduct(a_);
    const Eigen::MatrixXd xb = overlap_.cwiseProduct(b_);
    const Eigen::MatrixXd xd = overlap_.cwiseProduct(d_);

    // dH/dA = 2(Xd B + Xa A), dN/dA = 2 F A, dE = (dH - E dN)/N.
    grad_up = 2.0 / norm_ * (xd * B + xa * A - e * (overlap_ * A));
    grad_down = 2.0 / norm_ * (xd * A + xb * B - e * (overlap_ * B));

    // Per-pair H weight t_{mq} and N weight w_{mq}; their F-derivative pulls
    // in -(f_m - f_q), the rest comes from a/b/d varying with f.
    Eigen::MatrixXd cross = (A * B.transpose() + B * A.transpose()).cwiseProduct(overlap_);
    Eigen::MatrixXd wAA = (A * A.transpose()).cwiseProduct(overlap_);
    Eigen::MatrixXd wBB = (B * B.transpose()).cwiseProduct(overlap_);
    Eigen::MatrixXd t = cross.cwiseProduct(d_) + wAA.cwiseProduct(a_) + wBB.cwiseProduct(b_);
    Eigen::MatrixXd w = wAA + wBB;

    Eigen::MatrixXd t_off = t;
    t_off.diagonal().setZero();
    Eigen::MatrixXd w_off = w;
    w_off.diagonal().setZero();

    const Eigen::VectorXd t_row = t_off.rowwise().sum();
    const Eigen::VectorXd w_row = w_off.rowwise().sum();
    const Eigen::VectorXd cross_row = cross.rowwise().sum();
    const Eigen::VectorXd z_row = (wAA - wBB).rowwise().sum();

    // dH/df = -2(f_mk - f_qk) t_off  +  eta_k cross_row + 2 w_kf (w f) + lambda_k z_row
    Eigen::MatrixXd dh = -2.0 * (t_row.asDiagonal() * f) + 2.0 * (t_off * f);
    dh.noalias() += 2.0 * (w * f) * omega_.asDiagonal();
    dh.noalias() += cross_row * eta_.transpose();
    dh.noalias() += z_row * lambda_.transpose();

    Eigen::MatrixXd dn = -2.0 * (w_row.asDiagonal() * f) + 2.0 * (w_off * f);

    grad_disp = (dh - e * dn) / norm_;
}

double hamiltonian_expectation(const VariationalState& state, const ModelParams& params) {
    AnsatzEvaluator eval;
    eval.refresh(state, params);
    return eval.hamiltonian();
}

double norm_value(const VariationalState& state) {
    state.validate();
    const Eigen::Index m = state.multiplicity();
    const Eigen::MatrixXd& f = state.displacements;
    double total = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            const double overlap = std::exp(-0.5 * (f.row(i) - f.row(j)).squaredNorm());
            total += (state.up_amps(i) * state.up_amps(j) +
                      state.down_amps(i) * state.down_amps(j)) *
                     overlap;
        }
    }
    return total;
}

double energy(const VariationalState& state, const ModelParams& params) {
    AnsatzEvaluator eval;
    eval.refresh(state, params);
    return eval.energy();
}

Observables observables(const VariationalState& state, const ModelParams& params) {
    AnsatzEvaluator eval;
    eval.refresh(state, params);
    return eval.observables();
}

}  // namespace spinboson
