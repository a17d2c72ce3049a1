// core.hpp: Dressed-state bookkeeping and the bare/control Hamiltonians of a
// Rydberg-blockaded N-atom array.
//
// Canonical basis ordering (dimension 2N+1):
//   [ |g,0>, |-,1>, |+,1>, |-,2>, |+,2>, ..., |-,N>, |+,N> ]
// All frequencies are in units of the |1>-|r> Rabi frequency unless a
// ModelParams overrides omega_1r; all times are in the matching inverse unit.
//
// Pauli convention for an ordered pair (up, down):
//   sigma_z = |up><up| - |down><down|
//   sigma_x = |up><down| + h.c.
//   sigma_y = -i|up><down| + h.c.

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rydqudit {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Amplitude vector over the 2N+1 dressed levels, canonical ordering.
using QuditState = Vector;

inline constexpr double pi = std::numbers::pi;

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
    if (!std::isfinite(a)) throw std::domain_error("normalize_angle: non-finite angle");
    double r = std::fmod(a, 2.0 * pi);
    if (r <= -pi) r += 2.0 * pi;
    if (r > pi) r -= 2.0 * pi;
    return r;
}

// ------------------------------- model ---------------------------------------

struct ModelParams {
    int N{1};
    double omega_1r{1.0};

    ModelParams() = default;
    ModelParams(int n, double w1r = 1.0) : N(n), omega_1r(w1r) { validate(); }

    void validate() const {
        if (N < 1) throw std::invalid_argument("ModelParams: N must be >= 1");
        if (!(omega_1r > 0.0) || !std::isfinite(omega_1r))
            throw std::invalid_argument("ModelParams: omega_1r must be > 0");
    }
    std::size_t dim() const { return static_cast<std::size_t>(2 * N + 1); }
    std::size_t qudit_dim() const { return static_cast<std::size_t>(2 * N); }
};

enum class Sign : int { Minus = -1, Plus = +1 };

inline Sign opposite(Sign s) { return s == Sign::Plus ? Sign::Minus : Sign::Plus; }
inline double as_double(Sign s) { return static_cast<double>(static_cast<int>(s)); }
inline char sign_char(Sign s) { return s == Sign::Plus ? '+' : '-'; }

/// Either the ground level |g,0> or a dressed level |sign,q>.
struct DressedIndex {
    bool ground{true};
    Sign sign{Sign::Minus};
    int q{0};

    static DressedIndex g0() { return {}; }
    static DressedIndex branch(Sign s, int q) {
        if (q < 1) throw std::domain_error("DressedIndex: q must be >= 1");
        return {false, s, q};
    }

    /// Excitation number, with |g,0> counted as 0.
    int excitation() const { return ground ? 0 : q; }

    /// Position in the canonical ordering.
    std::size_t linear() const {
        if (ground) return 0;
        return static_cast<std::size_t>(2 * q - 1 + (sign == Sign::Plus ? 1 : 0));
    }

    static DressedIndex from_linear(std::size_t k) {
        if (k == 0) return g0();
        const int q = static_cast<int>((k + 1) / 2);
        return branch(k % 2 == 0 ? Sign::Plus : Sign::Minus, q);
    }

    std::string name() const {
        if (ground) return "g0";
        return std::string(1, sign_char(sign)) + std::to_string(q);
    }

    bool operator==(const DressedIndex&) const = default;
};

inline std::size_t level(Sign s, int q) { return DressedIndex::branch(s, q).linear(); }

inline void check_index(const ModelParams& p, const DressedIndex& idx) {
    if (!idx.ground && (idx.q < 1 || idx.q > p.N))
        throw std::domain_error("DressedIndex: q outside 1..N");
}

// --------------------------- piecewise pulses --------------------------------

/// One piecewise-constant control interval.
struct PulseParams {
    double duration{0.0};
    double omega_1r{1.0};
    double phi_1r{0.0};
    double omega_01{0.0};
    double phi_01{0.0};
    double delta_01{0.0};

    bool finite() const {
        return std::isfinite(duration) && std::isfinite(omega_1r) && std::isfinite(phi_1r) &&
               std::isfinite(omega_01) && std::isfinite(phi_01) && std::isfinite(delta_01);
    }

    PulseParams normalized() const {
        PulseParams p = *this;
        p.phi_1r = normalize_angle(phi_1r);
        p.phi_01 = normalize_angle(phi_01);
        return p;
    }

    bool operator==(const PulseParams&) const = default;
};

// ----------------------------- couplings -------------------------------------

inline void check_ladder_q(int N, int q, const char* who) {
    if (q < 1 || q > N - 1)
        throw std::domain_error(std::string(who) + ": q must satisfy 1 <= q <= N-1");
}

/// Same-branch coupling |s,q+1> <-> |s,q>.
inline double coupling_K(int N, int q) {
    check_ladder_q(N, q, "coupling_K");
    const double a = std::sqrt(static_cast<double>(q + 1));
    const double b = std::sqrt(static_cast<double>(q));
    return std::sqrt(static_cast<double>(N - q)) / (2.0 * (a - b));
}

/// Cross-branch coupling |s,q+1> <-> |s',q>, s' = -s.
inline double coupling_Q(int N, int q) {
    check_ladder_q(N, q, "coupling_Q");
    const double a = std::sqrt(static_cast<double>(q + 1));
    const double b = std::sqrt(static_cast<double>(q));
    return std::sqrt(static_cast<double>(N - q)) / (2.0 * (a + b));
}

/// Jaynes-Cummings ladder energy of |sign,q> for phi_1r in {0, pi}.
inline double jc_energy(int q, Sign s, double omega_1r, double phi_1r) {
    if (q < 1) throw std::domain_error("jc_energy: q must be >= 1");
    const double phi = normalize_angle(phi_1r);
    double orient = 0.0;
    if (std::abs(phi) < 1e-12) orient = 1.0;
    else if (std::abs(std::abs(phi) - pi) < 1e-12) orient = -1.0;
    else throw std::domain_error("jc_energy: phi_1r must be 0 or pi");
    return orient * as_double(s) * omega_1r * std::sqrt(static_cast<double>(q)) / 2.0;
}

// ---------------------------- Hamiltonians -----------------------------------

namespace detail {

/// Adds coef * (n . sigma) on the ordered pair (up, down).
inline void add_pauli(Matrix& H, std::size_t up, std::size_t down, double coef,
                      const std::array<double, 3>& n) {
    const auto u = static_cast<Eigen::Index>(up);
    const auto d = static_cast<Eigen::Index>(down);
    H(u, u) += coef * n[2];
    H(d, d) -= coef * n[2];
    H(u, d) += coef * cplx(n[0], -n[1]);
    H(d, u) += coef * cplx(n[0], n[1]);
}

/// (cos, sin) with exact values at multiples of pi/2, so that e.g. phi = pi
/// leaves no 1e-16 residue coupling levels that should be decoupled.
inline std::pair<double, double> exact_cos_sin(double phi) {
    const double a = normalize_angle(phi);
    if (a == 0.0) return {1.0, 0.0};
    if (a == pi) return {-1.0, 0.0};
    if (a == pi / 2) return {0.0, 1.0};
    if (a == -pi / 2) return {0.0, -1.0};
    return {std::cos(a), std::sin(a)};
}

inline std::array<double, 3> bare_axis(double phi_1r) {
    const auto [c, s] = exact_cos_sin(phi_1r);
    return {0.0, -s, c};
}

inline std::array<double, 3> control_axis(double phi_01) {
    const auto [c, s] = exact_cos_sin(phi_01);
    return {c, s, 0.0};
}

}  // namespace detail

/// Block-diagonal bare Hamiltonian; each doublet {|+,q>, |-,q>} carries
/// (omega_1r sqrt(q)/2) n_phi1r . sigma with |+,q> up.
inline Matrix build_bare(const ModelParams& p, double phi_1r) {
    p.validate();
    Matrix H = Matrix::Zero(p.dim(), p.dim());
    const auto n = detail::bare_axis(phi_1r);
    for (int q = 1; q <= p.N; ++q) {
        const double c = p.omega_1r * std::sqrt(static_cast<double>(q)) / 2.0;
        detail::add_pauli(H, level(Sign::Plus, q), level(Sign::Minus, q), c, n);
    }
    return H;
}

/// One off-diagonal coupling term of the control Hamiltonian, before the
/// omega_01/2 prefactor and the axis are applied.
struct ControlCoupling {
    std::size_t up;
    std::size_t down;
    double coefficient;
};

/// Every coupling of the control laser in the dressed basis.
inline std::vector<ControlCoupling> control_couplings(int N) {
    std::vector<ControlCoupling> out;
    for (Sign s : {Sign::Plus, Sign::Minus}) {
        for (int q = 1; q <= N - 1; ++q) {
            out.push_back({level(s, q + 1), level(s, q), coupling_K(N, q)});
            out.push_back({level(s, q + 1), level(opposite(s), q), -coupling_Q(N, q)});
        }
    }
    const double g = std::sqrt(static_cast<double>(N) / 2.0);
    out.push_back({level(Sign::Plus, 1), 0, g});
    out.push_back({level(Sign::Minus, 1), 0, -g});
    return out;
}

/// Diagonal detuning part of the control Hamiltonian: -delta_01 * q on |+-,q>.
inline Vector control_diagonal(const ModelParams& p, double delta_01) {
    Vector d = Vector::Zero(p.dim());
    for (int q = 1; q <= p.N; ++q) {
        d(level(Sign::Plus, q)) = -delta_01 * q;
        d(level(Sign::Minus, q)) = -delta_01 * q;
    }
    return d;
}

inline Matrix build_control(const ModelParams& p, double omega_01, double phi_01,
                            double delta_01) {
    p.validate();
    if (omega_01 < 0.0) throw std::invalid_argument("build_control: omega_01 must be >= 0");
    Matrix H = Matrix::Zero(p.dim(), p.dim());
    const auto n = detail::control_axis(phi_01);
    if (omega_01 != 0.0) {
        for (const auto& c : control_couplings(p.N))
            detail::add_pauli(H, c.up, c.down, omega_01 / 2.0 * c.coefficient, n);
    }
    H.diagonal() += control_diagonal(p, delta_01);
    return H;
}

inline Matrix build_total(const ModelParams& p, const PulseParams& pulse) {
    ModelParams local = p;
    local.omega_1r = pulse.omega_1r;
    Matrix H = Matrix::Zero(p.dim(), p.dim());
    if (pulse.omega_1r != 0.0) H = build_bare(local, pulse.phi_1r);
    H += build_control(p, pulse.omega_01, pulse.phi_01, pulse.delta_01);
    return H;
}

// ------------------------------ Bloch map ------------------------------------

struct BlochCoordinates {
    Eigen::Vector3d u{Eigen::Vector3d::Zero()};
    double weight{0.0};
};

/// Bloch vector of the state projected onto the ordered pair (up, down).
inline BlochCoordinates bloch_vector(const QuditState& state, const DressedIndex& up,
                                     const DressedIndex& down) {
    if (up == down) throw std::domain_error("bloch_vector: indices must be distinct");
    const auto iu = static_cast<Eigen::Index>(up.linear());
    const auto id = static_cast<Eigen::Index>(down.linear());
    if (iu >= state.size() || id >= state.size())
        throw std::domain_error("bloch_vector: index outside state");
    const cplx a = state(iu);
    const cplx b = state(id);
    BlochCoordinates out;
    out.weight = std::norm(a) + std::norm(b);
    if (out.weight > 0.0) {
        const cplx c = std::conj(a) * b;
        out.u = Eigen::Vector3d(2.0 * c.real(), 2.0 * c.imag(), std::norm(a) - std::norm(b)) /
                out.weight;
    }
    return out;
}

// ------------------------- qudit (Hadamard) ordering -------------------------

/// perm[j] is the canonical H' position (|g,0> removed, so canonical - 1) of
/// qudit basis vector |q_{j+1}>:
///   |q_1> = |-,N>, ..., |q_N> = |-,1>, |q_{N+1}> = |+,1>, ..., |q_2N> = |+,N>.
inline std::vector<std::size_t> qudit_ordering_permutation(int N) {
    if (N < 1) throw std::invalid_argument("qudit_ordering_permutation: N must be >= 1");
    std::vector<std::size_t> perm;
    perm.reserve(static_cast<std::size_t>(2 * N));
    for (int j = 0; j < N; ++j) perm.push_back(level(Sign::Minus, N - j) - 1);
    for (int j = 0; j < N; ++j) perm.push_back(level(Sign::Plus, j + 1) - 1);
    return perm;
}

inline std::vector<std::size_t> invert_permutation(const std::vector<std::size_t>& perm) {
    std::vector<std::size_t> inv(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
    return inv;
}

/// Generalized Hadamard (2N-point DFT in the qudit ordering), expressed in the
/// canonical H' ordering.
inline Matrix hadamard_target(int N) {
    const auto perm = qudit_ordering_permutation(N);
    const auto d = static_cast<Eigen::Index>(2 * N);
    Matrix U(d, d);
    const double norm = 1.0 / std::sqrt(static_cast<double>(d));
    for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index p = 0; p < d; ++p) {
            const double ang = pi / N * static_cast<double>(j) * static_cast<double>(p);
            U(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(p)]),
              static_cast<Eigen::Index>(perm[static_cast<std::size_t>(j)])) =
                norm * std::polar(1.0, ang);
        }
    }
    return U;
}

// ------------------------------ utilities ------------------------------------

inline double hermiticity_error(const Matrix& H) {
    return (H - H.adjoint()).cwiseAbs().maxCoeff();
}

inline double unitarity_error(const Matrix& U) {
    return (U.adjoint() * U - Matrix::Identity(U.cols(), U.cols())).cwiseAbs().maxCoeff();
}

inline void check_normalized(const QuditState& s, double tol, const char* who) {
    if (!s.allFinite()) throw std::domain_error(std::string(who) + ": non-finite amplitudes");
    if (std::abs(s.norm() - 1.0) > tol)
        throw std::domain_error(std::string(who) + ": state is not normalized");
}

/// Basis state |idx> in the canonical ordering.
inline QuditState basis_state(const ModelParams& p, const DressedIndex& idx) {
    check_index(p, idx);
    QuditState s = QuditState::Zero(p.dim());
    s(idx.linear()) = 1.0;
    return s;
}

/// (1/sqrt(2N)) sum over all |+-,q>.
inline QuditState uniform_state(const ModelParams& p) {
    QuditState s = QuditState::Constant(p.dim(), 1.0 / std::sqrt(2.0 * p.N));
    s(0) = 0.0;
    return s;
}

/// Embeds a 2N-vector of H' into the (2N+1)-dimensional space.
inline QuditState embed_qudit(const Vector& v) {
    QuditState s = QuditState::Zero(v.size() + 1);
    s.tail(v.size()) = v;
    return s;
}

}  // namespace rydqudit
