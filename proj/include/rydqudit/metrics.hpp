// metrics.hpp: Gate infidelity, Rydberg decay budgets and parameter scans.

#pragma once

#include "rydqudit/compiler.hpp"
#include "rydqudit/core.hpp"
#include "rydqudit/propagator.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace rydqudit {

/// 1 - |Tr(U_target^dagger U)|^2 / d^2.
inline double infidelity(const Matrix& target, const Matrix& U) { return gate_infidelity(target, U); }

/// Rydberg weight of a dressed state: every |+-,q> is half Rydberg.
inline double rydberg_population(const QuditState& state) {
    return 0.5 * state.tail(state.size() - 1).squaredNorm();
}

// -------------------------------- decay --------------------------------------

struct DecayParams {
    /// Rydberg decay rate in units of omega_1r.
    double gamma_r{0.0};

    /// Gamma_r [1/s] over Omega_1r [rad/s].
    static DecayParams from_rates(double gamma_r_per_s, double omega_1r_rad_per_s) {
        if (!(omega_1r_rad_per_s > 0.0))
            throw std::invalid_argument("DecayParams: omega_1r must be > 0");
        DecayParams d{gamma_r_per_s / omega_1r_rad_per_s};
        d.validate();
        return d;
    }

    void validate() const {
        if (!(gamma_r >= 0.0) || !std::isfinite(gamma_r))
            throw std::invalid_argument("DecayParams: gamma_r must be >= 0");
    }
};

/// Gamma_r^-1 = 100 us, Omega_1r / 2pi = 300 MHz.
inline DecayParams reference_decay() { return DecayParams::from_rates(1e4, 2.0 * pi * 3e8); }

/// Trapezoid integral of the Rydberg population along a trajectory.
inline double rydberg_integral(const Trajectory& traj) {
    if (traj.states.empty() || traj.times.size() != traj.states.size())
        throw std::invalid_argument("rydberg_integral: malformed trajectory");
    double sum = 0.0;
    double prev = rydberg_population(traj.states.front());
    for (std::size_t k = 1; k < traj.size(); ++k) {
        const double cur = rydberg_population(traj.states[k]);
        sum += 0.5 * (prev + cur) * (traj.times[k] - traj.times[k - 1]);
        prev = cur;
    }
    return sum;
}

inline double decay_survival(const Trajectory& traj, const DecayParams& decay) {
    decay.validate();
    return std::exp(-decay.gamma_r * rydberg_integral(traj));
}

/// exp(-0.5 Gamma_r T_tot).
inline double decay_estimate(double total_duration, const DecayParams& decay) {
    decay.validate();
    if (!(total_duration >= 0.0)) throw std::invalid_argument("decay_estimate: T_tot must be >= 0");
    return std::exp(-0.5 * decay.gamma_r * total_duration);
}

// ------------------------------- sampling ------------------------------------

/// Haar-random pure state of H' (zero |g,0> amplitude).
template <typename Rng>
QuditState random_qudit_state(const ModelParams& p, Rng& rng) {
    std::normal_distribution<double> gauss;
    QuditState s = QuditState::Zero(p.dim());
    for (Eigen::Index i = 1; i < s.size(); ++i) s(i) = cplx(gauss(rng), gauss(rng));
    return s / s.norm();
}

/// Haar-random d x d unitary (QR of a Ginibre matrix with the phase fix).
template <typename Rng>
Matrix random_unitary(Eigen::Index d, Rng& rng) {
    std::normal_distribution<double> gauss;
    Matrix Z(d, d);
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < d; ++i) Z(i, j) = cplx(gauss(rng), gauss(rng));
    Eigen::HouseholderQR<Matrix> qr(Z);
    Matrix Q = qr.householderQ();
    const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < d; ++j) {
        const cplx r = R(j, j);
        if (std::abs(r) > 0.0) Q.col(j) *= r / std::abs(r);
    }
    return Q;
}

// -------------------------------- scans --------------------------------------

enum class GateKind { PhaseGate, Hadamard, StatePrep };

inline std::string to_string(GateKind k) {
    switch (k) {
        case GateKind::PhaseGate: return "phase";
        case GateKind::Hadamard: return "hadamard";
        case GateKind::StatePrep: return "prep";
    }
    return "?";
}

inline GateKind parse_gate_kind(const std::string& s) {
    if (s == "phase") return GateKind::PhaseGate;
    if (s == "hadamard") return GateKind::Hadamard;
    if (s == "prep") return GateKind::StatePrep;
    throw std::invalid_argument("unknown gate kind: " + s);
}

struct ScanRow {
    int N{0};
    double omega01_ratio{0.0};
    GateKind kind{GateKind::PhaseGate};
    double infidelity{0.0};
    double total_duration{0.0};
    std::size_t pulse_count{0};
    double decay_probability{0.0};
};

struct ScanResult {
    std::vector<ScanRow> rows;
};

struct ScanConfig {
    GateKind kind{GateKind::Hadamard};
    std::vector<int> Ns;
    std::vector<double> ratios;
    DecayParams decay{};
    std::uint64_t seed{1};
    /// Phase used for PhaseGate points.
    double phi{pi / 2.0};
    FoldVariant fold_variant{FoldVariant::Plain};
    unsigned jobs{1};
};

/// Compiles and simulates one grid point. Phase gates act on the uniform state
/// and StatePrep targets a Haar state drawn from (seed, N).
inline ScanRow scan_point(GateKind kind, int N, double ratio, const ScanConfig& cfg) {
    const ModelParams p(N);
    CompileOptions opts;
    opts.omega_01 = ratio;
    opts.fold_variant = cfg.fold_variant;
    ScanRow row{N, ratio, kind, 0.0, 0.0, 0, 0.0};
    PulseSchedule sched;
    switch (kind) {
        case GateKind::PhaseGate: {
            const QuditState t = uniform_state(p);
            sched = compile_phase_gate(t, cfg.phi, p, opts);
            row.infidelity = *extract_gate(sched, phase_gate_target(t.tail(2 * N), cfg.phi)).infidelity;
            break;
        }
        case GateKind::Hadamard: {
            const Matrix U = hadamard_target(N);
            sched = compile_unitary(U, p, opts);
            row.infidelity = *extract_gate(sched, U).infidelity;
            break;
        }
        case GateKind::StatePrep: {
            std::mt19937_64 rng(cfg.seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(N)));
            const QuditState t = random_qudit_state(p, rng);
            sched = compile_state_prep(t, p, opts);
            const QuditState out = schedule_propagator(sched) * basis_state(p, DressedIndex::g0());
            row.infidelity = std::clamp(1.0 - std::norm(t.dot(out)), 0.0, 1.0);
            break;
        }
    }
    row.total_duration = sched.total_duration();
    row.pulse_count = sched.size();
    row.decay_probability = 1.0 - decay_estimate(row.total_duration, cfg.decay);
    return row;
}

/// Rows are ordered by (N, ratio) in the order given, independent of jobs.
inline ScanResult scan(const ScanConfig& cfg) {
    if (cfg.Ns.empty() || cfg.ratios.empty()) throw std::invalid_argument("scan: empty grid");
    cfg.decay.validate();
    for (int N : cfg.Ns)
        if (N < 1) throw std::invalid_argument("scan: N must be >= 1");
    for (double r : cfg.ratios)
        if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("scan: ratios must be > 0");

    const std::size_t total = cfg.Ns.size() * cfg.ratios.size();
    ScanResult out;
    out.rows.resize(total);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (std::size_t k = next++; k < total; k = next++) {
            try {
                out.rows[k] = scan_point(cfg.kind, cfg.Ns[k / cfg.ratios.size()],
                                         cfg.ratios[k % cfg.ratios.size()], cfg);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    const unsigned jobs = std::max(1u, std::min<unsigned>(cfg.jobs, static_cast<unsigned>(total)));
    std::vector<std::thread> pool;
    for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return out;
}

inline void write_scan_csv(std::ostream& os, const ScanResult& result) {
    os << "N,omega01_ratio,gate,infidelity,total_duration,pulse_count,decay_probability\n";
    char buf[256];
    for (const auto& r : result.rows) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%s,%.17g,%.17g,%zu,%.17g\n", r.N, r.omega01_ratio,
                      to_string(r.kind).c_str(), r.infidelity, r.total_duration, r.pulse_count,
                      r.decay_probability);
        os << buf;
    }
}

// ------------------------------ feasibility ----------------------------------

struct FrontierVerdict {
    int N{0};
    bool feasible{false};
    /// Smallest scanned-range ratio where decay drops to the infidelity,
    /// log-interpolated between grid points.
    std::optional<double> crossing_ratio;
};

inline std::vector<FrontierVerdict> feasibility_frontier(const ScanResult& result) {
    std::map<int, std::vector<const ScanRow*>> by_n;
    for (const auto& r : result.rows) by_n[r.N].push_back(&r);
    std::vector<FrontierVerdict> out;
    for (auto& [N, rows] : by_n) {
        std::sort(rows.begin(), rows.end(),
                  [](const ScanRow* a, const ScanRow* b) { return a->omega01_ratio < b->omega01_ratio; });
        FrontierVerdict v{N, false, std::nullopt};
        for (std::size_t k = 0; k < rows.size(); ++k) {
            if (rows[k]->decay_probability > rows[k]->infidelity) continue;
            v.feasible = true;
            if (k == 0) {
                v.crossing_ratio = rows[0]->omega01_ratio;
            } else {
                // Zero of log(decay) - log(eps) in log(ratio).
                auto gap = [](const ScanRow* r) {
                    const double tiny = 1e-300;
                    return std::log(std::max(r->decay_probability, tiny)) -
                           std::log(std::max(r->infidelity, tiny));
                };
                const double g0 = gap(rows[k - 1]);
                const double g1 = gap(rows[k]);
                const double x0 = std::log(rows[k - 1]->omega01_ratio);
                const double x1 = std::log(rows[k]->omega01_ratio);
                const double w = (g0 - g1) != 0.0 ? g0 / (g0 - g1) : 1.0;
                v.crossing_ratio = std::exp(x0 + std::clamp(w, 0.0, 1.0) * (x1 - x0));
            }
            break;
        }
        out.push_back(v);
    }
    return out;
}

/// Largest N such that every scanned N' <= N is feasible; 0 if the smallest is not.
inline int frontier_max_n(const std::vector<FrontierVerdict>& verdicts) {
    int best = 0;
    for (const auto& v : verdicts) {
        if (!v.feasible) break;
        best = v.N;
    }
    return best;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::domain_error("loglog_slope: non-positive data");
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) throw std::domain_error("loglog_slope: degenerate abscissae");
    return (n * sxy - sx * sy) / den;
}

}  // namespace rydqudit
