#include "spinboson/oracle.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace spinboson {

namespace {

constexpr std::size_t kMaxDimension = 1000000;
constexpr int kDenseThreshold = 4000;

struct FockSpace {
    int n_max;
    std::size_t modes;
    std::size_t boson_dim;  // (n_max+1)^modes
    std::size_t dim;        // 2 * boson_dim
    std::vector<std::size_t> stride;

    FockSpace(const ModelParams& p, int cap) : n_max(cap), modes(p.num_modes()) {
        if (modes == 0 || modes > 3)
            throw std::invalid_argument("oracle: exact diagonalization supports 1..3 modes");
        if (cap < 0) throw std::invalid_argument("oracle: n_max must be >= 0");
        boson_dim = 1;
        stride.resize(modes);
        for (std::size_t k = 0; k < modes; ++k) {
            stride[k] = boson_dim;
            boson_dim *= static_cast<std::size_t>(cap) + 1;
            if (2 * boson_dim > kMaxDimension)
                throw std::invalid_argument("oracle: truncated dimension exceeds 1e6");
        }
        dim = 2 * boson_dim;
    }

    int digit(std::size_t idx, std::size_t k) const {
        return static_cast<int>((idx / stride[k]) % (static_cast<std::size_t>(n_max) + 1));
    }
};

// y = H x, matrix-free. Spin-up block first, spin-down second.
void apply_hamiltonian(const FockSpace& fs, const ModelParams& p,
                       const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    const std::size_t nb = fs.boson_dim;
    y.setZero(static_cast<Eigen::Index>(fs.dim));

    // Boson diagonal energies.
    for (std::size_t i = 0; i < nb; ++i) {
        double w = 0.0;
        for (std::size_t k = 0; k < fs.modes; ++k) w += p.frequencies[k] * fs.digit(i, k);
        y(static_cast<Eigen::Index>(i)) += (0.5 * p.bias + w) * x(static_cast<Eigen::Index>(i));
        y(static_cast<Eigen::Index>(nb + i)) +=
            (-0.5 * p.bias + w) * x(static_cast<Eigen::Index>(nb + i));
    }
    // Tunneling -Delta/2 sigma_x.
    for (std::size_t i = 0; i < nb; ++i) {
        y(static_cast<Eigen::Index>(i)) += -0.5 * p.tunneling * x(static_cast<Eigen::Index>(nb + i));
        y(static_cast<Eigen::Index>(nb + i)) += -0.5 * p.tunneling * x(static_cast<Eigen::Index>(i));
    }
    // Displacement couplings (b^+ + b): pairs i <-> j = i + stride_k.
    for (std::size_t k = 0; k < fs.modes; ++k) {
        const double lam = 0.5 * p.diag_amplitudes[k];
        const double eta = 0.5 * p.offdiag_amplitudes[k];
        if (lam == 0.0 && eta == 0.0) continue;
        for (std::size_t i = 0; i < nb; ++i) {
            const int n = fs.digit(i, k);
            if (n >= fs.n_max) continue;
            const std::size_t j = i + fs.stride[k];
            const double c = std::sqrt(static_cast<double>(n) + 1.0);
            const auto iu = static_cast<Eigen::Index>(i);
            const auto ju = static_cast<Eigen::Index>(j);
            const auto id = static_cast<Eigen::Index>(nb + i);
            const auto jd = static_cast<Eigen::Index>(nb + j);
            if (lam != 0.0) {
                const double t = lam * c;  // sigma_z: +1 for up, -1 for down
                y(iu) += t * x(ju);
                y(ju) += t * x(iu);
                y(id) -= t * x(jd);
                y(jd) -= t * x(id);
            }
            if (eta != 0.0) {
                const double r = eta * c;  // sigma_x flips the spin
                y(iu) += r * x(jd);
                y(jd) += r * x(iu);
                y(id) += r * x(ju);
                y(ju) += r * x(id);
            }
        }
    }
}

// Lanczos with full reorthogonalization and periodic restarts; `deflate`
// holds eigenvectors to project out (for the first excited state).
std::pair<double, Eigen::VectorXd> lanczos_lowest(const FockSpace& fs, const ModelParams& p,
                                                  const std::vector<Eigen::VectorXd>& deflate) {
    const auto dim = static_cast<Eigen::Index>(fs.dim);
    std::mt19937_64 rng(0x5b5b5b5bull + fs.dim);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Eigen::VectorXd v0(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v0(i) = gauss(rng);

    auto project_out = [&](Eigen::VectorXd& v) {
        for (const auto& d : deflate) v -= d.dot(v) * d;
    };

    const int krylov = std::min<int>(120, static_cast<int>(dim));
    const int max_restarts = 60;
    double theta = 0.0;
    Eigen::VectorXd ritz;

    for (int restart = 0; restart < max_restarts; ++restart) {
        project_out(v0);
        double nv = v0.norm();
        if (nv < 1e-12) {
            for (Eigen::Index i = 0; i < dim; ++i) v0(i) = gauss(rng);
            project_out(v0);
            nv = v0.norm();
        }
        v0 /= nv;

        std::vector<Eigen::VectorXd> basis;
        basis.reserve(static_cast<std::size_t>(krylov));
        std::vector<double> alpha, beta;
        basis.push_back(v0);
        Eigen::VectorXd w(dim);

        for (int j = 0; j < krylov; ++j) {
            apply_hamiltonian(fs, p, basis.back(), w);
            project_out(w);
            const double aj = basis.back().dot(w);
            alpha.push_back(aj);
            w -= aj * basis.back();
            if (j > 0) w -= beta.back() * basis[static_cast<std::size_t>(j - 1)];
            for (const auto& q : basis) w -= q.dot(w) * q;  // full reorthogonalization
            const double bj = w.norm();
            if (bj < 1e-13 || j == krylov - 1) break;
            beta.push_back(bj);
            basis.push_back(w / bj);
        }

        const auto steps = static_cast<Eigen::Index>(alpha.size());
        Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(steps, steps);
        for (Eigen::Index j = 0; j < steps; ++j) {
            tri(j, j) = alpha[static_cast<std::size_t>(j)];
            if (j + 1 < steps) tri(j, j + 1) = tri(j + 1, j) = beta[static_cast<std::size_t>(j)];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
        theta = es.eigenvalues()(0);
        ritz.setZero(dim);
        for (Eigen::Index j = 0; j < steps; ++j)
            ritz += es.eigenvectors()(j, 0) * basis[static_cast<std::size_t>(j)];
        ritz.normalize();

        apply_hamiltonian(fs, p, ritz, w);
        project_out(w);
        const double resid = (w - theta * ritz).norm();
        if (resid <= 1e-11 * std::max(1.0, std::abs(theta))) return {theta, ritz};
        v0 = ritz;
    }
    return {theta, ritz};
}

struct EigenPair {
    double e0, e1;
    Eigen::VectorXd ground;
};

EigenPair lowest_two(const FockSpace& fs, const ModelParams& p) {
    if (fs.dim <= static_cast<std::size_t>(kDenseThreshold)) {
        Eigen::MatrixXd h = ed_dense_matrix(p, fs.n_max);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("oracle: dense eigensolver failed to converge");
        return {es.eigenvalues()(0), es.eigenvalues()(1), es.eigenvectors().col(0)};
    }
    auto [e0, v0] = lanczos_lowest(fs, p, {});
    std::vector<Eigen::VectorXd> deflate{v0};
    auto [e1, v1] = lanczos_lowest(fs, p, deflate);
    (void)v1;
    return {e0, e1, std::move(v0)};
}

EdResult observables_from_vector(const FockSpace& fs, const Eigen::VectorXd& psi) {
    const auto nb = static_cast<Eigen::Index>(fs.boson_dim);
    const auto up = psi.head(nb);
    const auto down = psi.tail(nb);
    const double r00 = up.squaredNorm();
    const double r11 = down.squaredNorm();
    const double r01 = up.dot(down);

    EdResult out;
    out.sigma_z = r00 - r11;
    out.sigma_x = 2.0 * r01;
    out.sigma_y = 0.0;  // rho is real symmetric
    const double tr = r00 + r11;
    const double disc = std::sqrt((r00 - r11) * (r00 - r11) + 4.0 * r01 * r01);
    const double wp = 0.5 * (tr + disc);
    const double wm = 0.5 * (tr - disc);
    auto xlnx = [](double x) { return x > 1e-300 ? x * std::log(x) : 0.0; };
    out.entropy = -xlnx(wp) - xlnx(wm);
    return out;
}

}  // namespace

Eigen::MatrixXd ed_dense_matrix(const ModelParams& params, int n_max) {
    params.validate();
    FockSpace fs(params, n_max);
    if (fs.dim > 8192) throw std::invalid_argument("ed_dense_matrix: dimension too large for dense assembly");
    const auto dim = static_cast<Eigen::Index>(fs.dim);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd col(dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        unit(j) = 1.0;
        apply_hamiltonian(fs, params, unit, col);
        unit(j) = 0.0;
        h.col(j) = col;
    }
    // Symmetrize stored entries exactly: copy the lower triangle up.
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < i; ++j) h(j, i) = h(i, j);
    return h;
}

EdResult ed_ground_state(const ModelParams& params, const FockTruncation& trunc) {
    params.validate();

    if (trunc.n_max >= 0) {
        FockSpace fs(params, trunc.n_max);
        EigenPair pair = lowest_two(fs, params);
        EdResult out = observables_from_vector(fs, pair.ground);
        out.energy = pair.e0;
        out.energy_first_excited = pair.e1;
        out.n_max_used = trunc.n_max;
        return out;
    }

    // Adaptive cap: double until the ground energy stops moving.
    int cap = 8;
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (;;) {
        FockSpace fs(params, cap);
        EigenPair pair = lowest_two(fs, params);
        if (std::isfinite(prev) && std::abs(pair.e0 - prev) < 1e-10) {
            EdResult out = observables_from_vector(fs, pair.ground);
            out.energy = pair.e0;
            out.energy_first_excited = pair.e1;
            out.n_max_used = cap;
            return out;
        }
        prev = pair.e0;
        const int next = cap * 2;
        double dim = 2.0;
        for (std::size_t k = 0; k < params.num_modes(); ++k) dim *= next + 1.0;
        if (dim > static_cast<double>(kMaxDimension))
            throw std::runtime_error("ed_ground_state: adaptive truncation hit the dimension cap before converging");
        cap = next;
    }
}

Eigen::VectorXd expand_coherent_state(const VariationalState& state, const ModelParams& params,
                                      int n_max) {
    state.validate(params);
    FockSpace fs(params, n_max);
    const Eigen::Index m = state.multiplicity();

    // Per-row, per-mode coherent coefficients c_n = e^{-f^2/2} f^n / sqrt(n!),
    // built by the stable recurrence c_{n+1} = c_n f / sqrt(n+1).
    std::vector<std::vector<Eigen::VectorXd>> coeff(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
        coeff[static_cast<std::size_t>(i)].resize(fs.modes);
        for (std::size_t k = 0; k < fs.modes; ++k) {
            const double f = state.displacements(i, static_cast<Eigen::Index>(k));
            Eigen::VectorXd c(n_max + 1);
            c(0) = std::exp(-0.5 * f * f);
            for (int n = 0; n < n_max; ++n) c(n + 1) = c(n) * f / std::sqrt(n + 1.0);
            const double tail = 1.0 - c.squaredNorm();
            if (tail > 1e-10)
                throw std::invalid_argument(
                    "expand_coherent_state: truncation tail mass exceeds 1e-10 "
                    "(raise n_max or shrink the displacements)");
            coeff[static_cast<std::size_t>(i)][k] = std::move(c);
        }
    }

    Eigen::VectorXd psi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fs.dim));
    for (std::size_t idx = 0; idx < fs.boson_dim; ++idx) {
        for (Eigen::Index i = 0; i < m; ++i) {
            double prod = 1.0;
            for (std::size_t k = 0; k < fs.modes; ++k)
                prod *= coeff[static_cast<std::size_t>(i)][k](fs.digit(idx, k));
            psi(static_cast<Eigen::Index>(idx)) += state.up_amps(i) * prod;
            psi(static_cast<Eigen::Index>(fs.boson_dim + idx)) += state.down_amps(i) * prod;
        }
    }
    return psi;
}

double fock_norm(const Eigen::VectorXd& v) { return v.squaredNorm(); }

double fock_hamiltonian(const Eigen::VectorXd& v, const ModelParams& params, int n_max) {
    FockSpace fs(params, n_max);
    if (v.size() != static_cast<Eigen::Index>(fs.dim))
        throw std::invalid_argument("fock_hamiltonian: vector length does not match the truncation");
    Eigen::VectorXd w(v.size());
    apply_hamiltonian(fs, params, v, w);
    return v.dot(w);
}

}  // namespace spinboson
