#include "spinboson/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

namespace spinboson {

namespace {

constexpr double kDuplicateOverlap = 1.0 - 1e-12;
constexpr double kStagnationWindow = 10000;
constexpr double kStagnationDrop = 1e-14;
constexpr double kTargetCap = 1e8;
constexpr double kGradientStepFraction = 1e-3;
constexpr long kStallWindow = 2000;
constexpr long kExtrapolationWindow = 400;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

double param_rms(const VariationalState& s) {
    const double total = s.up_amps.squaredNorm() + s.down_amps.squaredNorm() +
                         s.displacements.squaredNorm();
    const double count = static_cast<double>(s.up_amps.size() + s.down_amps.size() +
                                             s.displacements.size());
    return std::sqrt(total / count);
}

struct TargetWorkspace {
    Eigen::MatrixXd xa, xb, xd, cross, w_up, w_down, u, v;
    Eigen::VectorXd fa, fb, num_up, num_down, z_row, cross_row, c1, c2;
    Eigen::MatrixXd numerator, vf;
};

// Fixed-point targets per the printed update equations; returns false when a
// denominator vanished or a target blew past the cap.
bool compute_fixed_point(const AnsatzEvaluator& eval, double e, UpdateTargets& out,
                         TargetWorkspace& ws) {
    const VariationalState& s = eval.state();
    const ModelParams& p = eval.params();
    const Eigen::VectorXd& A = s.up_amps;
    const Eigen::VectorXd& B = s.down_amps;
    const Eigen::MatrixXd& f = s.displacements;
    const Eigen::MatrixXd& F = eval.overlap();
    const Eigen::MatrixXd& a = eval.a();
    const Eigen::MatrixXd& b = eval.b();
    const Eigen::MatrixXd& d = eval.d();
    const Eigen::Index m = A.size();
    const Eigen::Index n = f.cols();

    const auto omega = Eigen::Map<const Eigen::VectorXd>(p.frequencies.data(), n);
    const auto lambda = Eigen::Map<const Eigen::VectorXd>(p.diag_amplitudes.data(), n);
    const auto eta = Eigen::Map<const Eigen::VectorXd>(p.offdiag_amplitudes.data(), n);

    ws.xa = F.cwiseProduct(a);
    ws.xb = F.cwiseProduct(b);
    ws.xd = F.cwiseProduct(d);
    ws.fa.noalias() = F * A;
    ws.fb.noalias() = F * B;

    // A*_n = [sum_m B_m F d + sum_{m!=n} A_m F (a - E)] / (E - a_nn)
    ws.num_up.noalias() = ws.xd * B + ws.xa * A;
    ws.num_up -= A.cwiseProduct(a.diagonal());
    ws.num_up -= e * (ws.fa - A);
    ws.num_down.noalias() = ws.xd * A + ws.xb * B;
    ws.num_down -= B.cwiseProduct(b.diagonal());
    ws.num_down -= e * (ws.fb - B);

    out.up_amps = ws.num_up.array() / (e - a.diagonal().array());
    out.down_amps = ws.num_down.array() / (e - b.diagonal().array());

    ws.cross = (A * B.transpose() + B * A.transpose()).cwiseProduct(F);
    ws.w_up = (A * A.transpose()).cwiseProduct(F);
    ws.w_down = (B * B.transpose()).cwiseProduct(F);

    ws.u = 2.0 * ws.cross.cwiseProduct(d);
    {
        Eigen::MatrixXd off = 2.0 * (ws.w_up.array() * (a.array() - e) +
                                     ws.w_down.array() * (b.array() - e))
                                        .matrix();
        off.diagonal().setZero();
        ws.u += off;
    }
    ws.v = 2.0 * (ws.w_up + ws.w_down);
    ws.v.diagonal().setZero();

    ws.z_row = (ws.w_up - ws.w_down).rowwise().sum();
    ws.cross_row = ws.cross.rowwise().sum();

    ws.numerator.noalias() = ws.u * f;
    ws.vf.noalias() = ws.v * f;
    ws.numerator.noalias() += ws.vf * omega.asDiagonal();
    ws.numerator.noalias() += ws.z_row * lambda.transpose();
    ws.numerator.noalias() += ws.cross_row * eta.transpose();

    ws.c2 = 2.0 * (A.array().square() + B.array().square());
    ws.c1 = ws.c2 * e -
            2.0 * (A.array().square() * a.diagonal().array() +
                   B.array().square() * b.diagonal().array())
                      .matrix();

    out.displacements.resize(m, n);
    for (Eigen::Index k = 0; k < n; ++k)
        out.displacements.col(k) = ws.numerator.col(k).array() / (ws.c1.array() - ws.c2.array() * omega(k));

    const double scale = kTargetCap * (1.0 + param_rms(s));
    const bool sane = out.up_amps.allFinite() && out.down_amps.allFinite() &&
                      out.displacements.allFinite() &&
                      out.up_amps.cwiseAbs().maxCoeff() <= scale &&
                      out.down_amps.cwiseAbs().maxCoeff() <= scale &&
                      out.displacements.cwiseAbs().maxCoeff() <= scale;
    return sane;
}

// Damped gradient step used whenever the printed updates are singular. At a
// stationary point the gradient vanishes and the targets reduce to the
// current parameters.
void gradient_step_targets(const AnsatzEvaluator& eval, double e, UpdateTargets& out) {
    const VariationalState& s = eval.state();
    Eigen::VectorXd ga, gb;
    Eigen::MatrixXd gf;
    eval.energy_gradient(ga, gb, gf);

    const double count = static_cast<double>(ga.size() + gb.size() + gf.size());
    const double grad_rms =
        std::sqrt((ga.squaredNorm() + gb.squaredNorm() + gf.squaredNorm()) / count);
    if (grad_rms < 1e-13 * (1.0 + std::abs(e))) {
        out.up_amps = s.up_amps;
        out.down_amps = s.down_amps;
        out.displacements = s.displacements;
        return;
    }
    const double step = kGradientStepFraction * std::max(param_rms(s), 1e-8) / grad_rms;
    out.up_amps = s.up_amps - step * ga;
    out.down_amps = s.down_amps - step * gb;
    out.displacements = s.displacements - step * gf;
}

double residual_max_norm(const VariationalState& s, const UpdateTargets& t) {
    double r = (t.up_amps - s.up_amps).cwiseAbs().maxCoeff();
    r = std::max(r, (t.down_amps - s.down_amps).cwiseAbs().maxCoeff());
    r = std::max(r, (t.displacements - s.displacements).cwiseAbs().maxCoeff());
    return r;
}

// Monotone line-searched descent burst. The printed amplitude updates go
// spin-blind on decoupled corners (the (a - E)/(E - a_nn) ratio degenerates
// when a_{mn} is constant), so when the residual stops halving we drain the
// stall with the same damped-gradient tool the singular fallback uses; only
// strict energy decreases are accepted, and the fixed-point criterion still
// decides convergence afterwards.
bool gradient_descent_burst(VariationalState& state, const ModelParams& params,
                            AnsatzEvaluator& eval) {
    Eigen::VectorXd ga, gb;
    Eigen::MatrixXd gf;
    VariationalState saved = state;
    const double e_start = eval.energy();
    double e_cur = e_start;
    double step = -1.0;
    auto helped = [&] { return e_start - e_cur > 1e-12 * (1.0 + std::abs(e_cur)); };

    for (int pass = 0; pass < 60; ++pass) {
        eval.energy_gradient(ga, gb, gf);
        const double count = static_cast<double>(ga.size() + gb.size() + gf.size());
        const double grad_rms =
            std::sqrt((ga.squaredNorm() + gb.squaredNorm() + gf.squaredNorm()) / count);
        if (grad_rms < 1e-13 * (1.0 + std::abs(e_cur))) return helped();
        if (step < 0.0) step = 0.5 * std::max(param_rms(state), 1e-8) / grad_rms;

        saved = state;
        bool accepted = false;
        for (int halving = 0; halving < 30; ++halving) {
            state.up_amps = saved.up_amps - step * ga;
            state.down_amps = saved.down_amps - step * gb;
            state.displacements = saved.displacements - step * gf;
            eval.refresh(state, params);
            if (eval.norm_value() > 1e-14 && eval.energy() < e_cur) {
                accepted = true;
                break;
            }
            step *= 0.25;
        }
        if (!accepted) {
            state = saved;
            eval.refresh(state, params);
            return helped();
        }
        const double e_next = eval.energy();
        const bool tiny_gain = e_cur - e_next < 1e-15 * (1.0 + std::abs(e_next));
        e_cur = e_next;
        step *= 2.0;
        if (tiny_gain) return helped();
    }
    return helped();
}

// Aitken-style acceleration: extrapolate along the trajectory increment of
// the last window with a geometric gain ladder, keeping the best energy
// strictly below the current one. The slow transients of the relaxation are
// dominated by one soft mode, where this jumps ahead by orders of magnitude.
void extrapolation_step(VariationalState& state, const VariationalState& previous,
                        const ModelParams& params, AnsatzEvaluator& eval) {
    const double e0 = eval.energy();
    VariationalState base = state;
    VariationalState best = state;
    double e_best = e0;
    bool improved = false;
    for (double gain : {3.0, 9.0, 27.0, 81.0, 243.0}) {
        state.up_amps = base.up_amps + gain * (base.up_amps - previous.up_amps);
        state.down_amps = base.down_amps + gain * (base.down_amps - previous.down_amps);
        state.displacements =
            base.displacements + gain * (base.displacements - previous.displacements);
        eval.refresh(state, params);
        if (eval.norm_value() > 1e-14) {
            const double e = eval.energy();
            if (std::isfinite(e) && e < e_best) {
                e_best = e;
                best = state;
                improved = true;
                continue;
            }
        }
        break;  // the ladder went too far
    }
    state = improved ? best : base;
    eval.refresh(state, params);
}

struct RelaxOutcome {
    bool converged = false;
    bool stagnated = false;
    long iterations = 0;
};

// Exact lower bound on the spectrum: each displaced mode can gain at most
// amp^2/(4 w); anything far below it is cancellation breakdown, not physics.
double energy_floor(const ModelParams& p) {
    double shift = 0.0;
    for (std::size_t k = 0; k < p.num_modes(); ++k)
        shift += (p.diag_amplitudes[k] * p.diag_amplitudes[k] +
                  p.offdiag_amplitudes[k] * p.offdiag_amplitudes[k]) /
                 (4.0 * p.frequencies[k]);
    return -1.0 - std::abs(p.bias) - std::abs(p.tunneling) - 4.0 * shift;
}

// A pair of coherent rows that merged (F -> 1) while carrying opposite
// diverging amplitudes parameterizes a vanishing-norm direction; entries grow
// like 1/sqrt(1-F) until cancellation destroys the evaluation. Fold the pair
// into one row (exact in the F -> 1 limit) and re-seed the freed row nearby.
void repair_degenerate_pair(VariationalState& s, const AnsatzEvaluator& eval,
                            std::mt19937_64& rng) {
    const Eigen::Index m = s.multiplicity();
    Eigen::Index j = 0;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double a = std::max(std::abs(s.up_amps(i)), std::abs(s.down_amps(i)));
        if (a > worst) {
            worst = a;
            j = i;
        }
    }
    Eigen::Index partner = j == 0 ? 1 : 0;
    double best_overlap = -1.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (i == j) continue;
        if (eval.overlap()(i, j) > best_overlap) {
            best_overlap = eval.overlap()(i, j);
            partner = i;
        }
    }
    s.up_amps(partner) += s.up_amps(j);
    s.down_amps(partner) += s.down_amps(j);
    s.up_amps(j) = 0.0;
    s.down_amps(j) = 0.0;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Eigen::Index k = 0; k < s.num_modes(); ++k)
        s.displacements(j, k) = s.displacements(partner, k) + 0.05 * u(rng);
}

RelaxOutcome run_relaxation(VariationalState& state, const ModelParams& params,
                            const SolverConfig& cfg, AnsatzEvaluator& eval,
                            TargetWorkspace& ws, UpdateTargets& targets,
                            std::mt19937_64& rng, std::ofstream* trace) {
    RelaxOutcome outcome;
    eval.refresh(state, params);
    double e_checkpoint = std::numeric_limits<double>::infinity();
    double stall_residual = std::numeric_limits<double>::infinity();
    const double floor = energy_floor(params);
    VariationalState window_start = state;
    long next_burst = kStallWindow;

    for (long it = 0; it < cfg.max_iter; ++it) {
        const double norm = eval.norm_value();
        if (!(norm > 1e-14)) throw CollapsedStateError("solver: state norm collapsed");
        // Exact normalization every 100 iterations, plus a drift guard so the
        // norm cannot underflow between the scheduled rescales.
        if (it % 100 == 0 || norm < 0.25 || norm > 4.0) {
            const double c = 1.0 / std::sqrt(norm);
            state.up_amps *= c;
            state.down_amps *= c;
            eval.note_amplitude_rescale(c);
        }
        double e = eval.energy();
        if (e < floor || !std::isfinite(e))
            throw CollapsedStateError("solver: energy below the exact floor (restart)");
        const double amp_max = std::max(state.up_amps.cwiseAbs().maxCoeff(),
                                        state.down_amps.cwiseAbs().maxCoeff());
        if (amp_max > 1e5 && state.multiplicity() > 1) {
            repair_degenerate_pair(state, eval, rng);
            eval.refresh(state, params);
            e = eval.energy();
        }

        targets.singular = !compute_fixed_point(eval, e, targets, ws);
        if (targets.singular) gradient_step_targets(eval, e, targets);
        const double residual = residual_max_norm(state, targets);

        if (trace && trace->is_open()) {
            char line[96];
            std::snprintf(line, sizeof line, "%ld,%.17g,%.17g\n", it, e, residual);
            *trace << line;
        }

        outcome.iterations = it + 1;
        if (residual < cfg.tol) {
            outcome.converged = true;
            return outcome;
        }

        state.up_amps += cfg.relax_factor * (targets.up_amps - state.up_amps);
        state.down_amps += cfg.relax_factor * (targets.down_amps - state.down_amps);
        state.displacements += cfg.relax_factor * (targets.displacements - state.displacements);
        eval.refresh(state, params);

        if ((it + 1) % kExtrapolationWindow == 0) {
            extrapolation_step(state, window_start, params, eval);
            window_start = state;
        }

        if ((it + 1) >= next_burst) {
            if (residual > 0.5 * stall_residual) {
                // Back off when descent stops paying, so a hard stall cannot
                // soak the iteration budget in line searches.
                const bool useful = gradient_descent_burst(state, params, eval);
                next_burst = (it + 1) + (useful ? kStallWindow : 8 * kStallWindow);
            } else {
                next_burst = (it + 1) + kStallWindow;
            }
            stall_residual = residual;
        }

        if ((it + 1) >= static_cast<long>(kStagnationWindow) &&
            (it + 1) % static_cast<long>(kStagnationWindow) == 0) {
            const double e_now = eval.energy();
            if (e_checkpoint - e_now < kStagnationDrop) {
                outcome.converged = true;
                outcome.stagnated = true;
                return outcome;
            }
            e_checkpoint = e_now;
        }
    }
    return outcome;  // budget exhausted, not converged
}

void randomize_state(VariationalState& s, const ModelParams& p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> amp(-0.5, 0.5);
    std::uniform_real_distribution<double> disp(-0.1, 0.1);
    const Eigen::Index m = s.multiplicity();
    const Eigen::Index n = s.num_modes();
    for (Eigen::Index i = 0; i < m; ++i) {
        s.up_amps(i) = amp(rng);
        s.down_amps(i) = amp(rng);
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index k = 0; k < n; ++k) {
            const double scale =
                (p.diag_amplitudes[k] + p.offdiag_amplitudes[k]) / p.frequencies[k];
            s.displacements(i, k) = disp(rng) * scale;
        }
    }
}

// Biased seeds: a sigma_z-polarized displaced-oscillator state and a
// delocalized sigma_x-polarized one. Small per-row jitter keeps the coherent
// terms distinct.
void seed_localized(VariationalState& s, const ModelParams& p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Eigen::Index m = s.multiplicity();
    const Eigen::Index n = s.num_modes();
    const double base = 1.0 / std::sqrt(static_cast<double>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
        s.up_amps(i) = base * (1.0 + 0.05 * u(rng));
        s.down_amps(i) = 0.01 * u(rng);
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index k = 0; k < n; ++k) {
            const double f0 = -p.diag_amplitudes[k] / (2.0 * p.frequencies[k]);
            s.displacements(i, k) = f0 * (1.0 + 0.02 * u(rng)) + 1e-3 * u(rng);
        }
    }
}

void seed_delocalized(VariationalState& s, const ModelParams& p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Eigen::Index m = s.multiplicity();
    const Eigen::Index n = s.num_modes();
    const double base = 1.0 / std::sqrt(2.0 * static_cast<double>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
        const double jitter = 1.0 + 0.05 * u(rng);
        s.up_amps(i) = base * jitter;
        s.down_amps(i) = base * jitter;
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index k = 0; k < n; ++k) {
            const double f0 = -p.offdiag_amplitudes[k] / (2.0 * p.frequencies[k]);
            s.displacements(i, k) = f0 * (1.0 + 0.02 * u(rng)) + 1e-3 * u(rng);
        }
    }
}

// Redundant coherent terms stall the iteration; re-randomize one of any pair
// whose overlap is numerically 1.
void break_duplicates(VariationalState& s, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Eigen::Index m = s.multiplicity();
    for (int pass = 0; pass < 8; ++pass) {
        bool any = false;
        for (Eigen::Index i = 0; i < m && !any; ++i) {
            for (Eigen::Index j = i + 1; j < m && !any; ++j) {
                const double overlap =
                    std::exp(-0.5 * (s.displacements.row(i) - s.displacements.row(j)).squaredNorm());
                if (overlap > kDuplicateOverlap) {
                    for (Eigen::Index k = 0; k < s.num_modes(); ++k)
                        s.displacements(j, k) += 0.01 * u(rng);
                    any = true;
                }
            }
        }
        if (!any) return;
    }
}

struct RestartOutcome {
    VariationalState state;
    RestartRecord record;
};

RestartOutcome run_restart(const ModelParams& params, const SolverConfig& cfg,
                           int index, const VariationalState* warm) {
    std::mt19937_64 rng(splitmix64(cfg.rng_seed ^ splitmix64(static_cast<std::uint64_t>(index) + 1)));

    const Eigen::Index m = cfg.multiplicity;
    const Eigen::Index n = static_cast<Eigen::Index>(params.num_modes());

    AnsatzEvaluator eval;
    TargetWorkspace ws;
    UpdateTargets targets;

    std::ofstream trace;
    if (!cfg.trace_path.empty()) {
        char name[32];
        std::snprintf(name, sizeof name, ".restart%02d.csv", index);
        trace.open(cfg.trace_path + name, std::ios::trunc);
        trace << "iteration,energy,residual\n";
    }

    RestartOutcome out;
    out.state.up_amps.resize(m);
    out.state.down_amps.resize(m);
    out.state.displacements.resize(m, n);

    RelaxOutcome relax;
    for (int attempt = 0; attempt < 4; ++attempt) {
        if (warm != nullptr && attempt == 0) {
            out.state = *warm;
        } else if (index == 0 && warm == nullptr) {
            seed_localized(out.state, params, rng);
        } else if (index == 1 && warm == nullptr) {
            seed_delocalized(out.state, params, rng);
        } else {
            randomize_state(out.state, params, rng);
        }
        break_duplicates(out.state, rng);
        try {
            relax = run_relaxation(out.state, params, cfg, eval, ws, targets, rng,
                                   trace.is_open() ? &trace : nullptr);
            break;
        } catch (const CollapsedStateError&) {
            if (attempt == 3) {
                out.record.converged = false;
                randomize_state(out.state, params, rng);
                eval.refresh(out.state, params);
                break;
            }
            warm = nullptr;  // fall back to fresh random draws
        }
    }

    eval.refresh(out.state, params);
    double best_e = eval.energy();
    long total_iters = relax.iterations;

    // Simulated annealing: Gaussian kicks with a decaying scale, re-relaxed
    // to tolerance; only strictly lower energies are kept.
    double gain = 0.0;
    if (relax.converged) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int round = 0; round < cfg.anneal.rounds; ++round) {
            const double sigma = cfg.anneal.initial_noise_scale * param_rms(out.state) *
                                 std::pow(cfg.anneal.decay_factor, round);
            if (!(sigma > 0.0)) break;
            VariationalState cand = out.state;
            for (Eigen::Index i = 0; i < m; ++i) {
                cand.up_amps(i) += sigma * gauss(rng);
                cand.down_amps(i) += sigma * gauss(rng);
                for (Eigen::Index k = 0; k < n; ++k)
                    cand.displacements(i, k) += sigma * gauss(rng);
            }
            try {
                RelaxOutcome sub =
                    run_relaxation(cand, params, cfg, eval, ws, targets, rng, nullptr);
                total_iters += sub.iterations;
                if (!sub.converged) continue;
                eval.refresh(cand, params);
                const double e_cand = eval.energy();
                if (e_cand < best_e) {
                    gain += best_e - e_cand;
                    best_e = e_cand;
                    out.state = cand;
                    relax.stagnated = sub.stagnated;
                }
            } catch (const CollapsedStateError&) {
                continue;
            }
        }
    }

    eval.refresh(out.state, params);
    const Observables obs = eval.observables();
    out.record.energy = obs.energy;
    out.record.converged = relax.converged;
    out.record.stagnated = relax.stagnated;
    out.record.iterations = total_iters;
    out.record.sigma_z = obs.sigma_z;
    out.record.sigma_x = obs.sigma_x;
    out.record.anneal_gain = gain;
    return out;
}

int resolve_workers(const SolverConfig& cfg) {
    if (cfg.workers > 0) return cfg.workers;
    if (const char* env = std::getenv("SPINBOSON_WORKERS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace

void SolverConfig::validate() const {
    if (multiplicity < 1) throw std::invalid_argument("SolverConfig: multiplicity must be >= 1");
    if (!(relax_factor > 0.0 && relax_factor <= 1.0))
        throw std::invalid_argument("SolverConfig: relax_factor must lie in (0, 1]");
    if (!(tol > 0.0 && tol < 1e-6))
        throw std::invalid_argument("SolverConfig: tol must be positive and < 1e-6");
    if (max_iter < 1) throw std::invalid_argument("SolverConfig: max_iter must be >= 1");
    if (restarts < 1) throw std::invalid_argument("SolverConfig: restarts must be >= 1");
    if (anneal.rounds < 0) throw std::invalid_argument("SolverConfig: anneal rounds must be >= 0");
    if (!(anneal.initial_noise_scale >= 0.0))
        throw std::invalid_argument("SolverConfig: anneal noise scale must be >= 0");
    if (!(anneal.decay_factor > 0.0 && anneal.decay_factor <= 1.0))
        throw std::invalid_argument("SolverConfig: anneal decay factor must lie in (0, 1]");
}

UpdateTargets update_targets(const VariationalState& state, const ModelParams& params,
                             double energy) {
    AnsatzEvaluator eval;
    eval.refresh(state, params);
    TargetWorkspace ws;
    UpdateTargets out;
    out.singular = !compute_fixed_point(eval, energy, out, ws);
    if (out.singular) gradient_step_targets(eval, energy, out);
    return out;
}

void relax_step(VariationalState& state, const UpdateTargets& targets, double relax_factor) {
    if (!(relax_factor > 0.0 && relax_factor <= 1.0))
        throw std::invalid_argument("relax_step: relax_factor must lie in (0, 1]");
    if (!targets.up_amps.allFinite() || !targets.down_amps.allFinite() ||
        !targets.displacements.allFinite())
        throw std::runtime_error("relax_step: non-finite update target (restart signal)");
    state.up_amps += relax_factor * (targets.up_amps - state.up_amps);
    state.down_amps += relax_factor * (targets.down_amps - state.down_amps);
    state.displacements += relax_factor * (targets.displacements - state.displacements);
}

VariationalState pad_multiplicity(const VariationalState& state, Eigen::Index target_m,
                                  std::uint64_t seed) {
    state.validate();
    const Eigen::Index m = state.multiplicity();
    if (target_m < m)
        throw std::invalid_argument("pad_multiplicity: target multiplicity below the state's");
    if (target_m == m) return state;

    std::mt19937_64 rng(splitmix64(seed));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double amp_scale =
        1e-3 * std::max(1e-3, std::max(state.up_amps.cwiseAbs().maxCoeff(),
                                       state.down_amps.cwiseAbs().maxCoeff()));

    VariationalState out;
    out.up_amps.setZero(target_m);
    out.down_amps.setZero(target_m);
    out.displacements.resize(target_m, state.num_modes());
    out.up_amps.head(m) = state.up_amps;
    out.down_amps.head(m) = state.down_amps;
    out.displacements.topRows(m) = state.displacements;
    for (Eigen::Index i = m; i < target_m; ++i) {
        const Eigen::Index src = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(m));
        out.up_amps(i) = amp_scale * u(rng);
        out.down_amps(i) = amp_scale * u(rng);
        for (Eigen::Index k = 0; k < state.num_modes(); ++k)
            out.displacements(i, k) = state.displacements(src, k) + 0.01 * u(rng);
    }
    return out;
}

GroundStateResult solve(const ModelParams& params, const SolverConfig& config,
                        std::span<const VariationalState> warm_starts) {
    params.validate();
    config.validate();

    // Warm-start states of smaller multiplicity are padded up; larger ones
    // are a caller error.
    std::vector<VariationalState> warm;
    warm.reserve(warm_starts.size());
    for (std::size_t i = 0; i < warm_starts.size(); ++i) {
        const VariationalState& w = warm_starts[i];
        w.validate(params);
        if (w.multiplicity() > config.multiplicity)
            throw std::invalid_argument("solve: warm start multiplicity exceeds the configured one");
        warm.push_back(pad_multiplicity(w, config.multiplicity,
                                        config.rng_seed ^ (0xabcdull + i)));
    }

    const int n_tasks = config.restarts + static_cast<int>(warm.size());
    std::vector<RestartOutcome> outcomes(static_cast<std::size_t>(n_tasks));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_tasks));

    auto run_task = [&](int i) {
        try {
            const VariationalState* w =
                i >= config.restarts ? &warm[static_cast<std::size_t>(i - config.restarts)] : nullptr;
            outcomes[static_cast<std::size_t>(i)] = run_restart(params, config, i, w);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    };

    const int workers = std::min(resolve_workers(config), n_tasks);
    if (workers <= 1) {
        for (int i = 0; i < n_tasks; ++i) run_task(i);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) {
            pool.emplace_back([&] {
                for (int i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) run_task(i);
            });
        }
        for (auto& th : pool) th.join();
    }
    for (const auto& err : errors)
        if (err) std::rethrow_exception(err);

    GroundStateResult result;
    result.restart_energies.reserve(static_cast<std::size_t>(n_tasks));
    result.restart_records.reserve(static_cast<std::size_t>(n_tasks));

    int best_converged = -1, best_any = -1;
    for (int i = 0; i < n_tasks; ++i) {
        const RestartRecord& rec = outcomes[static_cast<std::size_t>(i)].record;
        result.restart_energies.push_back(rec.energy);
        result.restart_records.push_back(rec);
        if (best_any < 0 || rec.energy < outcomes[static_cast<std::size_t>(best_any)].record.energy)
            best_any = i;
        if (rec.converged &&
            (best_converged < 0 ||
             rec.energy < outcomes[static_cast<std::size_t>(best_converged)].record.energy))
            best_converged = i;
    }

    const int best = best_converged >= 0 ? best_converged : best_any;
    const RestartOutcome& winner = outcomes[static_cast<std::size_t>(best)];
    result.state = winner.state;
    result.converged = winner.record.converged;
    result.iterations = winner.record.iterations;
    result.best_restart = best;
    result.observables = observables(result.state, params);

    if (config.keep_restart_states) {
        result.restart_states.reserve(static_cast<std::size_t>(n_tasks));
        for (auto& o : outcomes) result.restart_states.push_back(std::move(o.state));
    }
    return result;
}

}  // namespace spinboson
