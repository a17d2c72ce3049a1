// compiler.hpp: Pulse-schedule synthesis for the dressed-state qudit.
//
// Every schedule is built against an effective model: for each pulse only the
// diagonal terms and the single resonant coupling of the control laser are
// kept. The compiler threads the effective state through every emitted pulse,
// so spectator phases picked up during folds are accounted for exactly and the
// only error left in a full simulation comes from off-resonant couplings.
//
// Pulse roles are carried by labels, which invert_full_control relies on:
//   fold(+,q=3)        plain fold on {|+,4>, |-,3>}
//   fold~1(+,q=3)      first half of a phase-cancelling fold (phi_1r = 0)
//   fold~2(+,q=3)      second half (phi_1r = pi, detuning negated)
//   doublet-phi        z rotation on {|+,1>, |-,1>} with the control laser off
//   doublet-theta      y rotation on {|+,1>, |-,1>} with the control laser off
//   g0(+), g0(-)       transfer |+-,1> -> |g,0>
//   phase-A, phase-B   the two pi pulses of the phase gate on |-,1>
// An inverted pulse carries the suffix "^-1".

#pragma once

#include "rydqudit/core.hpp"
#include "rydqudit/propagator.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <optional>
#include <regex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rydqudit {

// ------------------------------ options --------------------------------------

enum class FoldVariant { Plain, Tilde };

struct CompileOptions {
    /// Control Rabi frequency in units of omega_1r.
    double omega_01{1e-3};
    FoldVariant fold_variant{FoldVariant::Plain};
    bool skip_zero_phases{false};
    double zero_phase_tolerance{1e-9};

    void validate() const {
        if (!(omega_01 > 0.0) || !std::isfinite(omega_01))
            throw std::invalid_argument("CompileOptions: omega_01 must be > 0");
        if (!(zero_phase_tolerance > 0.0))
            throw std::invalid_argument("CompileOptions: zero_phase_tolerance must be > 0");
    }
};

enum class ControlSpace { Hprime, Hfull };

/// The subspace {|s,q+1>, |-s,q>}; |s,q+1> is the upper member.
struct FoldPair {
    Sign s{Sign::Plus};
    int q{1};

    std::size_t upper() const { return level(s, q + 1); }
    std::size_t lower() const { return level(opposite(s), q); }
    bool operator==(const FoldPair&) const = default;
};

// ---------------------------- pulse labels -----------------------------------

enum class PulseRole {
    Fold,
    FoldTildeFirst,
    FoldTildeSecond,
    DoubletPhi,
    DoubletTheta,
    GroundTransfer,
    PhaseFirst,
    PhaseSecond,
};

struct PulseTag {
    PulseRole role{PulseRole::Fold};
    Sign sign{Sign::Plus};
    int q{0};
    bool inverse{false};

    bool operator==(const PulseTag&) const = default;
};

inline std::string format_label(const PulseTag& t) {
    const std::string s(1, sign_char(t.sign));
    std::string out;
    switch (t.role) {
        case PulseRole::Fold: out = "fold(" + s + ",q=" + std::to_string(t.q) + ")"; break;
        case PulseRole::FoldTildeFirst:
            out = "fold~1(" + s + ",q=" + std::to_string(t.q) + ")";
            break;
        case PulseRole::FoldTildeSecond:
            out = "fold~2(" + s + ",q=" + std::to_string(t.q) + ")";
            break;
        case PulseRole::DoubletPhi: out = "doublet-phi"; break;
        case PulseRole::DoubletTheta: out = "doublet-theta"; break;
        case PulseRole::GroundTransfer: out = "g0(" + s + ")"; break;
        case PulseRole::PhaseFirst: out = "phase-A"; break;
        case PulseRole::PhaseSecond: out = "phase-B"; break;
    }
    if (t.inverse) out += "^-1";
    return out;
}

inline std::optional<PulseTag> parse_label(const std::string& label) {
    static const std::regex fold_re(R"(fold(~1|~2)?\(([+-]),q=([0-9]+)\))");
    static const std::regex g0_re(R"(g0\(([+-])\))");
    std::string body = label;
    PulseTag tag;
    if (body.size() >= 3 && body.compare(body.size() - 3, 3, "^-1") == 0) {
        tag.inverse = true;
        body.resize(body.size() - 3);
    }
    std::smatch m;
    if (std::regex_match(body, m, fold_re)) {
        tag.role = m[1].str().empty()   ? PulseRole::Fold
                   : m[1].str() == "~1" ? PulseRole::FoldTildeFirst
                                        : PulseRole::FoldTildeSecond;
        tag.sign = m[2].str() == "+" ? Sign::Plus : Sign::Minus;
        tag.q = std::stoi(m[3].str());
        return tag;
    }
    if (std::regex_match(body, m, g0_re)) {
        tag.role = PulseRole::GroundTransfer;
        tag.sign = m[1].str() == "+" ? Sign::Plus : Sign::Minus;
        tag.q = 1;
        return tag;
    }
    if (body == "doublet-phi") tag.role = PulseRole::DoubletPhi;
    else if (body == "doublet-theta") tag.role = PulseRole::DoubletTheta;
    else if (body == "phase-A") tag.role = PulseRole::PhaseFirst;
    else if (body == "phase-B") tag.role = PulseRole::PhaseSecond;
    else return std::nullopt;
    return tag;
}

/// The pair a pulse is tuned to, with its coupling coefficient as it appears
/// in control_couplings (before the omega_01/2 prefactor).
struct ResonantPair {
    std::size_t up;
    std::size_t down;
    double coefficient;
};

inline std::optional<ResonantPair> resonant_pair(const PulseTag& tag, int N) {
    switch (tag.role) {
        case PulseRole::Fold:
        case PulseRole::FoldTildeFirst:
        case PulseRole::FoldTildeSecond: {
            const FoldPair pair{tag.sign, tag.q};
            return ResonantPair{pair.upper(), pair.lower(), -coupling_Q(N, tag.q)};
        }
        case PulseRole::GroundTransfer:
            return ResonantPair{level(tag.sign, 1), 0,
                                as_double(tag.sign) * std::sqrt(static_cast<double>(N) / 2.0)};
        case PulseRole::PhaseFirst:
        case PulseRole::PhaseSecond:
            return ResonantPair{level(Sign::Minus, 1), 0,
                                -std::sqrt(static_cast<double>(N) / 2.0)};
        case PulseRole::DoubletPhi:
        case PulseRole::DoubletTheta: return std::nullopt;
    }
    return std::nullopt;
}

// --------------------------- effective model ---------------------------------

/// Bare Hamiltonian + diagonal of the control Hamiltonian + the resonant
/// coupling only.
inline Matrix effective_hamiltonian(const ModelParams& params, const PulseParams& pulse,
                                    const PulseTag& tag) {
    ModelParams local = params;
    local.omega_1r = pulse.omega_1r;
    Matrix H = Matrix::Zero(params.dim(), params.dim());
    if (pulse.omega_1r != 0.0) H = build_bare(local, pulse.phi_1r);
    H.diagonal() += control_diagonal(params, pulse.delta_01);
    if (pulse.omega_01 != 0.0) {
        if (const auto pair = resonant_pair(tag, params.N)) {
            detail::add_pauli(H, pair->up, pair->down, pulse.omega_01 / 2.0 * pair->coefficient,
                              detail::control_axis(pulse.phi_01));
        }
    }
    return H;
}

namespace detail {

/// exp(-i H t) x for a Hermitian H made of disjoint 1x1 and 2x2 blocks, in
/// closed form; anything else goes through the eigendecomposition. Every
/// effective Hamiltonian has this shape, and the closed form keeps the long
/// pulse durations from amplifying eigensolver rounding.
template <typename Derived>
Matrix apply_block_exponential(const Matrix& H, double t, const Eigen::MatrixBase<Derived>& x) {
    const Eigen::Index d = H.rows();
    std::vector<Eigen::Index> partner(static_cast<std::size_t>(d), -1);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
            if (i == j || H(i, j) == cplx(0.0)) continue;
            auto& pi_ = partner[static_cast<std::size_t>(i)];
            if (pi_ != -1 && pi_ != j) return SpectralPropagator(H).apply(t, x);
            pi_ = j;
        }
    Matrix y = x;
    for (Eigen::Index i = 0; i < d; ++i) {
        const Eigen::Index j = partner[static_cast<std::size_t>(i)];
        if (j == -1) {
            y.row(i) *= std::polar(1.0, -H(i, i).real() * t);
        } else if (i < j) {
            const double a = H(i, i).real();
            const double b = H(j, j).real();
            const cplx c = H(i, j);
            const double mean = 0.5 * (a + b);
            const double half = 0.5 * (a - b);
            const double w = std::hypot(half, std::abs(c));
            const double cw = std::cos(w * t);
            const double sw = w > 0.0 ? std::sin(w * t) / w : t;
            const cplx phase = std::polar(1.0, -mean * t);
            const cplx uii = phase * cplx(cw, -sw * half);
            const cplx ujj = phase * cplx(cw, sw * half);
            const cplx uij = phase * cplx(0.0, -sw) * c;
            const cplx uji = phase * cplx(0.0, -sw) * std::conj(c);
            const Matrix ri = x.row(i);
            const Matrix rj = x.row(j);
            y.row(i) = uii * ri + uij * rj;
            y.row(j) = uji * ri + ujj * rj;
        }
    }
    return y;
}

}  // namespace detail

inline QuditState evolve_effective(const QuditState& state, const Pulse& pulse,
                                   const ModelParams& params) {
    const auto tag = parse_label(pulse.label);
    if (!tag) throw std::invalid_argument("unrecognized pulse label: " + pulse.label);
    if (pulse.params.duration == 0.0) return state;
    return detail::apply_block_exponential(effective_hamiltonian(params, pulse.params, *tag),
                                           pulse.params.duration, state);
}

/// Replays a compiled schedule under the effective Hamiltonians.
inline Matrix effective_propagator(const PulseSchedule& schedule) {
    const auto d = static_cast<Eigen::Index>(schedule.params.dim());
    Matrix U = Matrix::Identity(d, d);
    for (const auto& p : schedule.pulses) {
        const auto tag = parse_label(p.label);
        if (!tag) throw std::invalid_argument("unrecognized pulse label: " + p.label);
        if (p.params.duration == 0.0) continue;
        U = detail::apply_block_exponential(effective_hamiltonian(schedule.params, p.params, *tag),
                                            p.params.duration, U);
    }
    return U;
}

// ------------------------------ calibration ----------------------------------

namespace detail {

/// Control-laser phase that empties one member of a resonant pair. The pair
/// block of the effective Hamiltonian is E + (omega/2) c (n_phi . sigma); the
/// rotation half-angle atan(|a_from| / |a_to|) is returned alongside.
struct TransferSolution {
    double half_angle;
    double phi_01;
};

inline TransferSolution solve_transfer(cplx a_up, cplx a_down, double coefficient,
                                       bool empty_up, double axis_sign) {
    const double sigma = (coefficient < 0.0 ? -1.0 : 1.0) * axis_sign;
    const cplx from = empty_up ? a_up : a_down;
    const cplx to = empty_up ? a_down : a_up;
    TransferSolution out{std::atan2(std::abs(from), std::abs(to)), 0.0};
    if (std::abs(to) <= 1e-12 || std::abs(from) <= 1e-12) return out;
    const double rel = std::arg(a_down) - std::arg(a_up);
    out.phi_01 = normalize_angle(empty_up ? rel + sigma * pi / 2.0 : rel - sigma * pi / 2.0);
    return out;
}

}  // namespace detail

/// Global sign conventions of the protocol, fixed numerically on first use by
/// solving small effective problems and checking the intended outcome.
struct Calibration {
    /// Orientation of the transfer axis relative to the closed-form solution.
    double transfer_axis{1.0};
    /// Realized phase on |-,1> is phase_sign * phi_01(phase-A) + phase_offset.
    double phase_sign{1.0};
    double phase_offset{0.0};
};

namespace detail {

inline std::vector<Pulse> raw_phase_pulses(double phi_first, const ModelParams& params,
                                           double omega_01) {
    const double w1r = params.omega_1r;
    const double w01 = omega_01 * w1r;
    const double T = std::sqrt(2.0) * pi / (std::sqrt(static_cast<double>(params.N)) * w01);
    Pulse a{{T, w1r, 0.0, w01, normalize_angle(phi_first), -w1r / 2.0},
            format_label({PulseRole::PhaseFirst})};
    Pulse b{{T, w1r, pi, w01, 0.0, w1r / 2.0}, format_label({PulseRole::PhaseSecond})};
    return {a, b};
}

inline Calibration compute_calibration() {
    Calibration cal;

    // Transfer axis: empty the upper member of a fold pair with known phases.
    {
        const ModelParams p(2);
        const FoldPair pair{Sign::Plus, 1};
        QuditState s = QuditState::Zero(p.dim());
        s(pair.upper()) = std::polar(0.6, 0.4);
        s(pair.lower()) = std::polar(0.8, -1.1);
        const double Q = coupling_Q(p.N, 1);
        bool found = false;
        for (double axis : {1.0, -1.0}) {
            const auto sol = solve_transfer(s(pair.upper()), s(pair.lower()), -Q, true, axis);
            const double delta = 1.0 / (2.0 * (std::sqrt(2.0) - 1.0));
            Pulse pulse{{2.0 * sol.half_angle / Q, 1.0, 0.0, 1.0, sol.phi_01, delta},
                        format_label({PulseRole::Fold, Sign::Plus, 1})};
            const QuditState out = evolve_effective(s, pulse, p);
            if (std::abs(out(pair.upper())) < 1e-10) {
                cal.transfer_axis = axis;
                found = true;
                break;
            }
        }
        if (!found) throw std::logic_error("calibration: no transfer axis empties the pair");
    }

    // Phase gate: realized phase on |-,1> as a function of phi_01 of pulse A.
    {
        const ModelParams p(1);
        auto realized = [&](double phi) {
            QuditState s = basis_state(p, DressedIndex::branch(Sign::Minus, 1));
            for (const auto& pulse : raw_phase_pulses(phi, p, 1.0))
                s = evolve_effective(s, pulse, p);
            if (std::abs(std::abs(s(1)) - 1.0) > 1e-10)
                throw std::logic_error("calibration: phase pulses do not return to |-,1>");
            return std::arg(s(1));
        };
        cal.phase_offset = realized(0.0);
        const double quarter = normalize_angle(realized(pi / 2.0) - cal.phase_offset);
        cal.phase_sign = quarter > 0.0 ? 1.0 : -1.0;
        if (std::abs(std::abs(quarter) - pi / 2.0) > 1e-9)
            throw std::logic_error("calibration: phase response is not linear");
    }
    return cal;
}

}  // namespace detail

inline const Calibration& calibration() {
    static const Calibration cal = detail::compute_calibration();
    return cal;
}

// -------------------------------- folds --------------------------------------

struct FoldStep {
    std::vector<Pulse> pulses;
    QuditState effective;
};

inline constexpr double kNegligibleAmplitude = 1e-12;

/// Resonant rotation on a fold pair that moves all of its population onto the
/// lower member |-s,q>.
inline FoldStep fold_pulse(const QuditState& eff, const FoldPair& pair,
                           const ModelParams& params, const CompileOptions& opts) {
    opts.validate();
    check_ladder_q(params.N, pair.q, "fold_pulse");
    FoldStep step{{}, eff};
    const cplx a_up = eff(pair.upper());
    const cplx a_down = eff(pair.lower());
    if (std::abs(a_up) <= kNegligibleAmplitude) return step;

    const double Q = coupling_Q(params.N, pair.q);
    const auto sol =
        detail::solve_transfer(a_up, a_down, -Q, true, calibration().transfer_axis);
    const double w1r = params.omega_1r;
    const double w01 = opts.omega_01 * w1r;
    const double T = 2.0 * sol.half_angle / (w01 * Q);
    const double delta = as_double(pair.s) * w1r /
                         (2.0 * (std::sqrt(pair.q + 1.0) - std::sqrt(static_cast<double>(pair.q))));

    if (opts.fold_variant == FoldVariant::Plain) {
        step.pulses.push_back(
            {{T, w1r, 0.0, w01, sol.phi_01, delta}, format_label({PulseRole::Fold, pair.s, pair.q})});
    } else {
        step.pulses.push_back({{T / 2.0, w1r, 0.0, w01, sol.phi_01, delta},
                               format_label({PulseRole::FoldTildeFirst, pair.s, pair.q})});
        step.pulses.push_back({{T / 2.0, w1r, pi, w01, sol.phi_01, -delta},
                               format_label({PulseRole::FoldTildeSecond, pair.s, pair.q})});
    }
    for (const auto& p : step.pulses) step.effective = evolve_effective(step.effective, p, params);
    return step;
}

// ---------------------------- full control -----------------------------------

namespace detail {

inline void check_target(const QuditState& target, const ModelParams& params, bool in_hprime,
                         const char* who) {
    if (target.size() != static_cast<Eigen::Index>(params.dim()))
        throw std::invalid_argument(std::string(who) + ": target dimension mismatch");
    check_normalized(target, 1e-10, who);
    if (in_hprime && std::abs(target(0)) > kNegligibleAmplitude)
        throw std::domain_error(std::string(who) + ": target has a |g,0> component");
}

inline void push_effective(PulseSchedule& sched, QuditState& eff, Pulse pulse) {
    pulse.params = pulse.params.normalized();
    eff = evolve_effective(eff, pulse, sched.params);
    sched.pulses.push_back(std::move(pulse));
}

}  // namespace detail

/// Schedule O mapping target -> |-,1> (Hprime) or target -> |g,0> (Hfull)
/// within the effective model.
inline PulseSchedule compile_full_control(const QuditState& target, ControlSpace space,
                                          const ModelParams& params, const CompileOptions& opts) {
    opts.validate();
    params.validate();
    detail::check_target(target, params, space == ControlSpace::Hprime, "compile_full_control");

    PulseSchedule sched{params, {}};
    QuditState eff = target;
    for (int k = 1; k <= params.N - 1; ++k) {
        const int q = params.N - k;
        for (Sign s : {Sign::Plus, Sign::Minus}) {
            auto step = fold_pulse(eff, {s, q}, params, opts);
            for (auto& p : step.pulses) {
                p.params = p.params.normalized();
                sched.pulses.push_back(std::move(p));
            }
            eff = std::move(step.effective);
        }
    }

    const double w1r = params.omega_1r;
    const std::size_t m1 = level(Sign::Minus, 1);
    const std::size_t p1 = level(Sign::Plus, 1);
    if (space == ControlSpace::Hprime) {
        // z rotation aligns the relative phase of |+,1> and |-,1> to pi, then
        // the y rotation (phi_1r = pi/2) empties |+,1>.
        if (std::abs(eff(p1)) > kNegligibleAmplitude) {
            if (std::abs(eff(m1)) > kNegligibleAmplitude) {
                double angle = std::fmod(pi - (std::arg(eff(p1)) - std::arg(eff(m1))), 2.0 * pi);
                if (angle < 0.0) angle += 2.0 * pi;
                if (angle > 1e-12 && angle < 2.0 * pi - 1e-12) {
                    detail::push_effective(sched, eff,
                                           {{angle / w1r, w1r, pi, 0.0, 0.0, 0.0},
                                            format_label({PulseRole::DoubletPhi})});
                }
            }
            const double theta = 2.0 * std::atan2(std::abs(eff(p1)), std::abs(eff(m1)));
            detail::push_effective(sched, eff,
                                   {{theta / w1r, w1r, pi / 2.0, 0.0, 0.0, 0.0},
                                    format_label({PulseRole::DoubletTheta})});
        }
    } else {
        const double w01 = opts.omega_01 * w1r;
        const double g = std::sqrt(static_cast<double>(params.N) / 2.0);
        for (Sign s : {Sign::Plus, Sign::Minus}) {
            const std::size_t up = level(s, 1);
            if (std::abs(eff(up)) <= kNegligibleAmplitude) continue;
            const double coef = as_double(s) * g;
            const auto sol =
                detail::solve_transfer(eff(up), eff(0), coef, true, calibration().transfer_axis);
            detail::push_effective(sched, eff,
                                   {{2.0 * sol.half_angle / (w01 * g), w1r, 0.0, w01, sol.phi_01,
                                     as_double(s) * w1r / 2.0},
                                    format_label({PulseRole::GroundTransfer, s, 1})});
        }
    }
    return sched;
}

/// Reverses a full-control schedule, inverting each pulse by role.
inline PulseSchedule invert_full_control(const PulseSchedule& schedule) {
    PulseSchedule out{schedule.params, {}};
    out.pulses.reserve(schedule.size());
    for (auto it = schedule.pulses.rbegin(); it != schedule.pulses.rend(); ++it) {
        auto tag = parse_label(it->label);
        if (!tag) throw std::invalid_argument("invert_full_control: unrecognized label " + it->label);
        PulseParams p = it->params;
        switch (tag->role) {
            case PulseRole::Fold:
            case PulseRole::GroundTransfer:
                p.phi_01 += pi;
                p.phi_1r += pi;
                p.delta_01 = -p.delta_01;
                break;
            case PulseRole::FoldTildeFirst:
            case PulseRole::FoldTildeSecond: p.phi_01 += pi; break;
            case PulseRole::DoubletPhi:
            case PulseRole::DoubletTheta: p.phi_1r += pi; break;
            case PulseRole::PhaseFirst:
            case PulseRole::PhaseSecond:
                throw std::invalid_argument("invert_full_control: phase pulse " + it->label +
                                            " is not part of a full-control schedule");
        }
        tag->inverse = !tag->inverse;
        out.pulses.push_back({p.normalized(), format_label(*tag)});
    }
    return out;
}

// ------------------------------ phase gates ----------------------------------

/// Two pi rotations through |g,0> that multiply |-,1> by exp(i Phi).
inline PulseSchedule compile_phase_on_minus1(double Phi, const ModelParams& params,
                                             const CompileOptions& opts) {
    opts.validate();
    params.validate();
    const auto& cal = calibration();
    const double phi_first = cal.phase_sign * (Phi - cal.phase_offset);
    return {params, detail::raw_phase_pulses(phi_first, params, opts.omega_01)};
}

/// exp(i Phi)|t><t| + (I - |t><t|), as O^-1 P O.
inline PulseSchedule compile_phase_gate(const QuditState& target, double Phi,
                                        const ModelParams& params, const CompileOptions& opts) {
    const auto O = compile_full_control(target, ControlSpace::Hprime, params, opts);
    PulseSchedule sched = O;
    sched.append(compile_phase_on_minus1(Phi, params, opts));
    sched.append(invert_full_control(O));
    return sched;
}

inline Matrix phase_gate_target(const Vector& target_hprime, double Phi) {
    const auto d = target_hprime.size();
    return Matrix::Identity(d, d) +
           (std::polar(1.0, Phi) - 1.0) * target_hprime * target_hprime.adjoint();
}

// --------------------------- eigendecomposition ------------------------------

struct EigenPhase {
    double phase;
    Vector vector;
};

/// Deterministic spectral decomposition of a unitary: eigenphases in (-pi, pi]
/// ascending; every cluster of phases closer than 1e-9 gets an orthonormal
/// basis built by Gram-Schmidt from the projections of e_0, e_1, ... onto the
/// cluster's eigenspace.
inline std::vector<EigenPhase> unitary_eigenbasis(const Matrix& U) {
    if (U.rows() != U.cols()) throw std::invalid_argument("unitary_eigenbasis: matrix not square");
    if (unitarity_error(U) > 1e-10) throw std::domain_error("unitary_eigenbasis: not unitary");
    const Eigen::Index d = U.rows();
    Eigen::ComplexSchur<Matrix> schur(U);
    const Matrix& Z = schur.matrixU();
    const Matrix& T = schur.matrixT();

    auto wrapped = [](cplx lambda) {
        double a = normalize_angle(std::arg(lambda));
        if (a <= -pi + 1e-9) a = pi;
        return a;
    };
    std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
    std::vector<double> phases(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) {
        order[static_cast<std::size_t>(i)] = i;
        phases[static_cast<std::size_t>(i)] = wrapped(T(i, i));
    }
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return phases[static_cast<std::size_t>(a)] < phases[static_cast<std::size_t>(b)];
    });

    std::vector<EigenPhase> out;
    std::size_t start = 0;
    while (start < order.size()) {
        std::size_t end = start + 1;
        while (end < order.size() && phases[static_cast<std::size_t>(order[end])] -
                                             phases[static_cast<std::size_t>(order[end - 1])] <
                                         1e-9)
            ++end;
        const auto k = static_cast<Eigen::Index>(end - start);
        Matrix V(d, k);
        cplx mean = 0.0;
        for (Eigen::Index c = 0; c < k; ++c) {
            const Eigen::Index col = order[start + static_cast<std::size_t>(c)];
            V.col(c) = Z.col(col);
            mean += T(col, col);
        }
        const double phase = wrapped(mean);
        const Matrix P = V * V.adjoint();
        std::vector<Vector> basis;
        for (Eigen::Index e = 0; e < d && static_cast<Eigen::Index>(basis.size()) < k; ++e) {
            Vector x = P.col(e);
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& b : basis) x -= b * b.dot(x);
            const double n = x.norm();
            if (n > 1e-6) basis.push_back(x / n);
        }
        if (static_cast<Eigen::Index>(basis.size()) != k)
            throw std::runtime_error("unitary_eigenbasis: degenerate cluster lost rank");
        for (auto& b : basis) out.push_back({phase, std::move(b)});
        start = end;
    }
    return out;
}

/// Product of generalized phase gates over the eigenbasis of U.
inline PulseSchedule compile_unitary(const Matrix& U, const ModelParams& params,
                                     const CompileOptions& opts) {
    opts.validate();
    params.validate();
    const auto n = static_cast<Eigen::Index>(params.qudit_dim());
    if (U.rows() != n || U.cols() != n)
        throw std::invalid_argument("compile_unitary: target must be 2N x 2N");
    if (!U.allFinite() || unitarity_error(U) > 1e-10)
        throw std::domain_error("compile_unitary: target is not unitary");
    PulseSchedule sched{params, {}};
    for (const auto& ev : unitary_eigenbasis(U)) {
        if (opts.skip_zero_phases && std::abs(ev.phase) < opts.zero_phase_tolerance) continue;
        sched.append(compile_phase_gate(embed_qudit(ev.vector), ev.phase, params, opts));
    }
    return sched;
}

// ---------------------- preparation and measurement --------------------------

/// Schedule taking |g,0> to target.
inline PulseSchedule compile_state_prep(const QuditState& target, const ModelParams& params,
                                        const CompileOptions& opts) {
    detail::check_target(target, params, true, "compile_state_prep");
    return invert_full_control(compile_full_control(target, ControlSpace::Hfull, params, opts));
}

/// Probability of finding state in target: O_target is simulated on state and
/// the |-,1> population is read out.
inline double measure_projection(const QuditState& state, const QuditState& target,
                                 const ModelParams& params, const CompileOptions& opts) {
    detail::check_target(state, params, true, "measure_projection");
    const auto O = compile_full_control(target, ControlSpace::Hprime, params, opts);
    const QuditState out = schedule_propagator(O) * state;
    return std::norm(out(level(Sign::Minus, 1)));
}

}  // namespace rydqudit
