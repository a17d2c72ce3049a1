// propagator.hpp: Exact piecewise-constant evolution of dressed states.
//
// Each pulse is propagated with the Hermitian eigendecomposition of its
// Hamiltonian, so exp(-i H t) is exact up to rounding for any t.

#pragma once

#include "rydqudit/core.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace rydqudit {

struct Pulse {
    PulseParams params;
    std::string label;

    bool operator==(const Pulse&) const = default;
};

struct PulseSchedule {
    ModelParams params;
    std::vector<Pulse> pulses;

    double total_duration() const {
        double t = 0.0;
        for (const auto& p : pulses) t += p.params.duration;
        return t;
    }
    std::size_t size() const { return pulses.size(); }
    bool empty() const { return pulses.empty(); }

    void append(const PulseSchedule& other) {
        if (other.params.N != params.N)
            throw std::invalid_argument("PulseSchedule: cannot concatenate different N");
        pulses.insert(pulses.end(), other.pulses.begin(), other.pulses.end());
    }
};

/// Spectral form of a constant Hamiltonian: H = V diag(E) V^dagger.
class SpectralPropagator {
public:
    explicit SpectralPropagator(const Matrix& H) {
        Eigen::SelfAdjointEigenSolver<Matrix> solver(H);
        if (solver.info() != Eigen::Success)
            throw std::runtime_error("SpectralPropagator: eigendecomposition failed");
        energies_ = solver.eigenvalues();
        vectors_ = solver.eigenvectors();
    }

    Matrix at(double t) const {
        const Vector phases = (-cplx(0.0, 1.0) * t * energies_.cast<cplx>()).array().exp();
        return vectors_ * phases.asDiagonal() * vectors_.adjoint();
    }

    /// exp(-i H t) applied to a vector (or the columns of a matrix) without
    /// forming the full propagator.
    template <typename Derived>
    Matrix apply(double t, const Eigen::MatrixBase<Derived>& x) const {
        const Vector phases = (-cplx(0.0, 1.0) * t * energies_.cast<cplx>()).array().exp();
        Matrix y = vectors_.adjoint() * x;
        y = phases.asDiagonal() * y;
        return vectors_ * y;
    }

    const Eigen::VectorXd& energies() const { return energies_; }

private:
    Eigen::VectorXd energies_;
    Matrix vectors_;
};

inline constexpr double kStateNormTolerance = 1e-9;

inline void check_pulse(const PulseParams& pulse) {
    if (!pulse.finite()) throw std::domain_error("pulse has non-finite parameters");
    if (pulse.duration < 0.0) throw std::domain_error("pulse duration must be >= 0");
    if (pulse.omega_01 < 0.0) throw std::domain_error("pulse omega_01 must be >= 0");
}

inline QuditState evolve_pulse(const QuditState& state, const PulseParams& pulse,
                               const ModelParams& params) {
    check_pulse(pulse);
    if (state.size() != static_cast<Eigen::Index>(params.dim()))
        throw std::invalid_argument("evolve_pulse: state dimension mismatch");
    check_normalized(state, kStateNormTolerance, "evolve_pulse");
    if (pulse.duration == 0.0) return state;
    SpectralPropagator prop(build_total(params, pulse));
    return prop.apply(pulse.duration, state);
}

/// Propagator of the whole schedule on the (2N+1)-dimensional space.
inline Matrix schedule_propagator(const PulseSchedule& schedule) {
    const auto d = static_cast<Eigen::Index>(schedule.params.dim());
    Matrix U = Matrix::Identity(d, d);
    for (const auto& p : schedule.pulses) {
        check_pulse(p.params);
        if (p.params.duration == 0.0) continue;
        SpectralPropagator prop(build_total(schedule.params, p.params));
        U = prop.apply(p.params.duration, U);
    }
    return U;
}

// ------------------------------ trajectories ---------------------------------

struct Trajectory {
    std::vector<double> times;
    std::vector<QuditState> states;
    /// boundaries[k] is the sample index at the end of pulse k.
    std::vector<std::size_t> boundaries;

    std::size_t size() const { return times.size(); }
    const QuditState& final_state() const { return states.back(); }
};

inline constexpr int kDefaultSamplesPerPulse = 64;

inline Trajectory run_schedule(const QuditState& initial, const PulseSchedule& schedule,
                               int samples_per_pulse = kDefaultSamplesPerPulse) {
    if (samples_per_pulse < 1)
        throw std::invalid_argument("run_schedule: samples_per_pulse must be >= 1");
    if (initial.size() != static_cast<Eigen::Index>(schedule.params.dim()))
        throw std::invalid_argument("run_schedule: state dimension mismatch");
    check_normalized(initial, kStateNormTolerance, "run_schedule");

    Trajectory traj;
    traj.times.push_back(0.0);
    traj.states.push_back(initial);
    double t0 = 0.0;
    QuditState current = initial;
    for (const auto& pulse : schedule.pulses) {
        check_pulse(pulse.params);
        const double T = pulse.params.duration;
        if (T == 0.0) {
            traj.times.push_back(t0);
            traj.states.push_back(current);
        } else {
            SpectralPropagator prop(build_total(schedule.params, pulse.params));
            for (int m = 1; m <= samples_per_pulse; ++m) {
                const double dt = T * m / samples_per_pulse;
                traj.times.push_back(t0 + dt);
                traj.states.push_back(prop.apply(dt, current));
            }
            current = traj.states.back();
        }
        t0 += T;
        traj.boundaries.push_back(traj.times.size() - 1);
    }
    return traj;
}

/// Divides out the accumulated diagonal phase of every level, pulse by pulse.
inline Trajectory interaction_frame(const Trajectory& traj, const PulseSchedule& schedule) {
    if (traj.boundaries.size() != schedule.pulses.size() || traj.states.empty() ||
        traj.times.size() != traj.states.size())
        throw std::invalid_argument("interaction_frame: trajectory does not match schedule");
    const auto d = static_cast<Eigen::Index>(schedule.params.dim());
    Trajectory out = traj;
    Eigen::VectorXd accumulated = Eigen::VectorXd::Zero(d);
    std::size_t sample = 1;
    double t_start = 0.0;
    for (std::size_t k = 0; k < schedule.pulses.size(); ++k) {
        const auto& pulse = schedule.pulses[k].params;
        const Eigen::VectorXd diag = build_total(schedule.params, pulse).diagonal().real();
        for (; sample <= traj.boundaries[k]; ++sample) {
            const double dt = traj.times[sample] - t_start;
            for (Eigen::Index i = 0; i < d; ++i)
                out.states[sample](i) *= std::polar(1.0, accumulated(i) + diag(i) * dt);
        }
        accumulated += diag * pulse.duration;
        t_start += pulse.duration;
    }
    return out;
}

/// CSV with columns time, then |a| and arg(a) per level in canonical ordering.
/// With mask_phases, phases are written as 0 where |a| < 1e-3.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj, bool mask_phases) {
    if (traj.states.empty()) return;
    const auto d = traj.states.front().size();
    os << "time";
    for (Eigen::Index i = 0; i < d; ++i) {
        const auto name = DressedIndex::from_linear(static_cast<std::size_t>(i)).name();
        os << ",abs_" << name << ",arg_" << name;
    }
    os << '\n';
    char buf[64];
    for (std::size_t s = 0; s < traj.size(); ++s) {
        std::snprintf(buf, sizeof buf, "%.17g", traj.times[s]);
        os << buf;
        for (Eigen::Index i = 0; i < d; ++i) {
            const cplx a = traj.states[s](i);
            const double mag = std::abs(a);
            const double arg = (mask_phases && mag < 1e-3) ? 0.0 : std::arg(a);
            std::snprintf(buf, sizeof buf, ",%.17g,%.17g", mag, arg);
            os << buf;
        }
        os << '\n';
    }
}

// ------------------------------ gate extraction ------------------------------

struct GateReport {
    Matrix gate;                 // 2N x 2N restriction to H'
    Matrix full;                 // (2N+1) x (2N+1) evolution operator
    double leakage{0.0};
    std::optional<double> infidelity;
    double total_duration{0.0};
    std::size_t pulse_count{0};
    std::optional<double> survival;
    std::optional<double> decay_probability;
};

/// 1 - |Tr(target^dagger U)|^2 / d^2.
inline double gate_infidelity(const Matrix& target, const Matrix& U) {
    if (target.rows() != U.rows() || target.cols() != U.cols() || U.rows() != U.cols())
        throw std::invalid_argument("infidelity: dimension mismatch");
    const double d = static_cast<double>(U.rows());
    const double f = std::norm((target.adjoint() * U).trace()) / (d * d);
    return std::clamp(1.0 - f, 0.0, 1.0);
}

inline GateReport extract_gate(const PulseSchedule& schedule,
                               const std::optional<Matrix>& target = std::nullopt) {
    GateReport report;
    report.full = schedule_propagator(schedule);
    const auto n = static_cast<Eigen::Index>(schedule.params.qudit_dim());
    report.gate = report.full.bottomRightCorner(n, n);
    for (Eigen::Index j = 1; j <= n; ++j) {
        const double g0 = std::norm(report.full(0, j));
        const double deficit = std::max(0.0, 1.0 - report.full.col(j).squaredNorm());
        report.leakage = std::max(report.leakage, g0 + deficit);
    }
    report.total_duration = schedule.total_duration();
    report.pulse_count = schedule.size();
    if (target) report.infidelity = gate_infidelity(*target, report.gate);
    return report;
}

}  // namespace rydqudit
