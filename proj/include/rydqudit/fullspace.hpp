// fullspace.hpp: Brute-force atom-basis model of N three-level atoms with van
// der Waals interactions, used to check the dressed-state mapping.
//
// Product basis {|0>, |1>, |r>}^N, little endian: site j is the base-3 digit
// of weight 3^j, with digit 0 = |0>, 1 = |1>, 2 = |r>.

#pragma once

#include "rydqudit/core.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace rydqudit {

inline constexpr int kMaxFullSites = 8;

struct Geometry {
    /// Site positions in units of the lattice spacing a.
    std::vector<Eigen::Vector3d> positions;
    double a{1.0};
    double lambda{0.0};
    /// Van der Waals coefficient in units of omega_1r * a^6 (sign allowed).
    double C6{0.0};
    int d{1};

    int N() const { return static_cast<int>(positions.size()); }

    void validate() const {
        if (positions.empty()) throw std::invalid_argument("Geometry: no sites");
        if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("Geometry: a must be > 0");
        if (!(lambda >= 0.0) || !std::isfinite(lambda))
            throw std::invalid_argument("Geometry: lambda must be >= 0");
        if (!std::isfinite(C6)) throw std::invalid_argument("Geometry: C6 must be finite");
        if (d < 1 || d > 3) throw std::invalid_argument("Geometry: d must be 1, 2 or 3");
        for (std::size_t j = 0; j < positions.size(); ++j) {
            if (!positions[j].allFinite()) throw std::invalid_argument("Geometry: non-finite position");
            for (std::size_t k = 0; k < j; ++k)
                if ((positions[j] - positions[k]).norm() == 0.0)
                    throw std::invalid_argument("Geometry: coincident sites");
        }
    }

    /// C6 / |a (x_j - x_k)|^6.
    double interaction(std::size_t j, std::size_t k) const {
        const double r = a * (positions[j] - positions[k]).norm();
        return C6 / std::pow(r, 6);
    }
};

/// Equilateral triangle with unit side in the xy plane.
inline Geometry triangle_geometry(double C6, double a = 1.0, double lambda = 0.0) {
    Geometry g;
    g.positions = {{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {0.5, std::sqrt(3.0) / 2.0, 0.0}};
    g.a = a;
    g.lambda = lambda;
    g.C6 = C6;
    g.d = 2;
    return g;
}

/// (|C6| / omega_1r)^(1/6).
inline double blockade_radius(double C6, double omega_1r) {
    if (!(omega_1r > 0.0)) throw std::invalid_argument("blockade_radius: omega_1r must be > 0");
    return std::pow(std::abs(C6) / omega_1r, 1.0 / 6.0);
}

struct GeometryReport {
    bool collision_ok{false};
    /// a - lambda
    double collision_margin{0.0};
    bool blockade_ok{false};
    /// R_b - N^(1/d) a
    double blockade_margin{0.0};
    double blockade_radius{0.0};

    bool ok() const { return collision_ok && blockade_ok; }
};

inline GeometryReport validate_geometry(const Geometry& g, double omega_1r) {
    g.validate();
    GeometryReport r;
    r.blockade_radius = blockade_radius(g.C6, omega_1r);
    r.collision_margin = g.a - g.lambda;
    r.collision_ok = g.a > g.lambda;
    const double extent = std::pow(static_cast<double>(g.N()), 1.0 / g.d) * g.a;
    r.blockade_margin = r.blockade_radius - extent;
    r.blockade_ok = extent < r.blockade_radius;
    return r;
}

// --------------------------- full Hamiltonian --------------------------------

namespace detail {

inline std::size_t pow3(int n) {
    std::size_t r = 1;
    for (int i = 0; i < n; ++i) r *= 3;
    return r;
}

inline int site_digit(std::size_t state, std::size_t weight) { return static_cast<int>((state / weight) % 3); }

}  // namespace detail

inline Matrix build_full_hamiltonian(const Geometry& g, const PulseParams& pulse) {
    g.validate();
    const int N = g.N();
    if (N > kMaxFullSites)
        throw std::invalid_argument("build_full_hamiltonian: N exceeds the site cap of " +
                                    std::to_string(kMaxFullSites));
    if (!pulse.finite()) throw std::domain_error("build_full_hamiltonian: non-finite pulse");
    const std::size_t dim = detail::pow3(N);
    Matrix H = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    const cplx r_from_1 = 0.5 * pulse.omega_1r * std::polar(1.0, -pulse.phi_1r);
    const cplx one_from_0 = 0.5 * pulse.omega_01 * std::polar(1.0, -pulse.phi_01);

    std::vector<std::size_t> weight(static_cast<std::size_t>(N));
    for (int j = 0; j < N; ++j) weight[static_cast<std::size_t>(j)] = detail::pow3(j);

    for (std::size_t s = 0; s < dim; ++s) {
        const auto col = static_cast<Eigen::Index>(s);
        double diag = 0.0;
        for (int j = 0; j < N; ++j) {
            const std::size_t w = weight[static_cast<std::size_t>(j)];
            const int digit = detail::site_digit(s, w);
            if (digit != 0) diag -= pulse.delta_01;
            if (digit == 1) {
                H(static_cast<Eigen::Index>(s + w), col) += r_from_1;
                H(col, static_cast<Eigen::Index>(s + w)) += std::conj(r_from_1);
            } else if (digit == 0) {
                H(static_cast<Eigen::Index>(s + w), col) += one_from_0;
                H(col, static_cast<Eigen::Index>(s + w)) += std::conj(one_from_0);
            }
            if (digit == 2) {
                for (int k = j + 1; k < N; ++k)
                    if (detail::site_digit(s, weight[static_cast<std::size_t>(k)]) == 2)
                        diag += g.interaction(static_cast<std::size_t>(j), static_cast<std::size_t>(k));
            }
        }
        H(col, col) += diag;
    }
    return H;
}

/// Number of sites in |0>, as a diagonal operator.
inline Eigen::VectorXd ground_count(int N) {
    const std::size_t dim = detail::pow3(N);
    Eigen::VectorXd c(static_cast<Eigen::Index>(dim));
    for (std::size_t s = 0; s < dim; ++s) {
        int n = 0;
        for (int j = 0; j < N; ++j) n += detail::site_digit(s, detail::pow3(j)) == 0;
        c(static_cast<Eigen::Index>(s)) = n;
    }
    return c;
}

// ------------------------------ embedding ------------------------------------

namespace detail {

/// Equal-amplitude superposition of all product states with exactly n_one
/// sites in |1> and n_r sites in |r>.
inline Vector symmetric_sector(int N, int n_one, int n_r) {
    const std::size_t dim = pow3(N);
    Vector v = Vector::Zero(static_cast<Eigen::Index>(dim));
    for (std::size_t s = 0; s < dim; ++s) {
        int ones = 0, rs = 0;
        for (int j = 0; j < N; ++j) {
            const int digit = site_digit(s, pow3(j));
            ones += digit == 1;
            rs += digit == 2;
        }
        if (ones == n_one && rs == n_r) v(static_cast<Eigen::Index>(s)) = 1.0;
    }
    return v / v.norm();
}

}  // namespace detail

/// Atom-basis image of a dressed level: |g,0> = |0...0>,
/// |+-,q> = (|e,q-1> +- |g,q>)/sqrt(2).
inline Vector embed_dressed(int N, const DressedIndex& idx) {
    if (N < 1 || N > kMaxFullSites) throw std::invalid_argument("embed_dressed: N outside 1..8");
    check_index(ModelParams(N), idx);
    if (idx.ground) return detail::symmetric_sector(N, 0, 0);
    const Vector e = detail::symmetric_sector(N, idx.q - 1, 1);
    const Vector g = detail::symmetric_sector(N, idx.q, 0);
    return (e + as_double(idx.sign) * g) / std::sqrt(2.0);
}

/// 3^N x (2N+1) isometry whose columns are the embedded dressed levels in
/// canonical order.
inline Matrix dressed_frame(int N) {
    const ModelParams p(N);
    Matrix E(static_cast<Eigen::Index>(detail::pow3(N)), static_cast<Eigen::Index>(p.dim()));
    for (std::size_t k = 0; k < p.dim(); ++k)
        E.col(static_cast<Eigen::Index>(k)) = embed_dressed(N, DressedIndex::from_linear(k));
    return E;
}

// ------------------------------ comparison -----------------------------------

struct SpectrumComparison {
    /// Full-model eigenvalues attributed to the dressed subspace, ascending.
    std::vector<double> full_levels;
    /// Eigenvalues of the dressed Hamiltonian, ascending.
    std::vector<double> dressed_levels;
    double max_deviation{0.0};
};

/// Diagonalizes the full Hamiltonian, groups degenerate eigenvalues, weights
/// each group by its overlap with the embedded dressed frame and keeps the
/// 2N+1 levels carrying that weight; these are compared with the spectrum of
/// the dressed Hamiltonian.
inline SpectrumComparison compare_spectrum(const Geometry& g, const PulseParams& pulse) {
    const int N = g.N();
    const ModelParams p(N, pulse.omega_1r > 0.0 ? pulse.omega_1r : 1.0);
    const Matrix H = build_full_hamiltonian(g, pulse);
    Eigen::SelfAdjointEigenSolver<Matrix> full(H);
    if (full.info() != Eigen::Success) throw std::runtime_error("compare_spectrum: eigensolver failed");
    const Matrix E = dressed_frame(N);
    const Eigen::VectorXd weights = (E.adjoint() * full.eigenvectors()).colwise().squaredNorm().transpose();
    const Eigen::VectorXd& evals = full.eigenvalues();

    const double scale = std::max(1.0, evals.cwiseAbs().maxCoeff());
    struct Cluster {
        double energy;
        double weight;
        int count;
    };
    std::vector<Cluster> clusters;
    for (Eigen::Index i = 0; i < evals.size(); ++i) {
        if (!clusters.empty() && evals(i) - clusters.back().energy < 1e-9 * scale) {
            auto& c = clusters.back();
            c.weight += weights(i);
            ++c.count;
        } else {
            clusters.push_back({evals(i), weights(i), 1});
        }
    }

    const int target = static_cast<int>(p.dim());
    std::vector<int> mult(clusters.size());
    int assigned = 0;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        mult[c] = std::min(clusters[c].count, static_cast<int>(std::floor(clusters[c].weight + 1e-9)));
        assigned += mult[c];
    }
    std::vector<std::size_t> order(clusters.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return clusters[x].weight - mult[x] > clusters[y].weight - mult[y];
    });
    for (std::size_t k = 0; assigned < target && k < order.size(); ++k) {
        const std::size_t c = order[k];
        if (mult[c] < clusters[c].count) {
            ++mult[c];
            ++assigned;
        }
    }
    if (assigned != target) throw std::runtime_error("compare_spectrum: could not attribute levels");

    SpectrumComparison out;
    for (std::size_t c = 0; c < clusters.size(); ++c)
        for (int m = 0; m < mult[c]; ++m) out.full_levels.push_back(clusters[c].energy);
    std::sort(out.full_levels.begin(), out.full_levels.end());

    Eigen::SelfAdjointEigenSolver<Matrix> dressed(build_total(p, pulse), Eigen::EigenvaluesOnly);
    for (Eigen::Index i = 0; i < dressed.eigenvalues().size(); ++i)
        out.dressed_levels.push_back(dressed.eigenvalues()(i));
    for (std::size_t k = 0; k < out.full_levels.size(); ++k)
        out.max_deviation =
            std::max(out.max_deviation, std::abs(out.full_levels[k] - out.dressed_levels[k]));
    return out;
}

/// |<E exp(-i H_dressed T) psi0 | exp(-i H_full T) E psi0>| for a dressed
/// initial level psi0.
inline double compare_evolution(const Geometry& g, const PulseParams& pulse, double T,
                                const DressedIndex& initial) {
    if (!(T >= 0.0) || !std::isfinite(T)) throw std::invalid_argument("compare_evolution: T must be >= 0");
    const int N = g.N();
    const ModelParams p(N, pulse.omega_1r > 0.0 ? pulse.omega_1r : 1.0);
    const Matrix H = build_full_hamiltonian(g, pulse);
    const Matrix E = dressed_frame(N);
    const QuditState psi0 = basis_state(p, initial);

    Eigen::SelfAdjointEigenSolver<Matrix> full(H);
    if (full.info() != Eigen::Success) throw std::runtime_error("compare_evolution: eigensolver failed");
    const Vector phases = (-cplx(0.0, 1.0) * T * full.eigenvalues().cast<cplx>()).array().exp();
    const Vector full_state =
        full.eigenvectors() * (phases.asDiagonal() * (full.eigenvectors().adjoint() * (E * psi0)));

    Eigen::SelfAdjointEigenSolver<Matrix> dressed(build_total(p, pulse));
    const Vector dphases = (-cplx(0.0, 1.0) * T * dressed.eigenvalues().cast<cplx>()).array().exp();
    const Vector dressed_state =
        dressed.eigenvectors() * (dphases.asDiagonal() * (dressed.eigenvectors().adjoint() * psi0));
    return std::abs((E * dressed_state).dot(full_state));
}

}  // namespace rydqudit
