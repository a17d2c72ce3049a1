#include <gtest/gtest.h>

#include <rydqudit/metrics.hpp>

#include <cmath>
#include <random>
#include <sstream>

using namespace rydqudit;

namespace {

Trajectory constant_trajectory(const QuditState& s, double T, int samples) {
    Trajectory traj;
    for (int k = 0; k <= samples; ++k) {
        traj.times.push_back(T * k / samples);
        traj.states.push_back(s);
    }
    traj.boundaries.push_back(traj.size() - 1);
    return traj;
}

PulseSchedule single_pulse(int N, const PulseParams& pp) {
    PulseSchedule s{ModelParams(N), {}};
    s.pulses.push_back({pp, "test"});
    return s;
}

}  // namespace

TEST(Infidelity, IdenticalAndGlobalPhase) {
    std::mt19937_64 rng(3);
    const Matrix U = random_unitary(6, rng);
    EXPECT_NEAR(infidelity(U, U), 0.0, 1e-14);
    for (double g : {0.3, 1.7, -2.9}) EXPECT_NEAR(infidelity(U, std::polar(1.0, g) * U), 0.0, 1e-14);
    EXPECT_NEAR(infidelity(std::polar(1.0, 0.4) * U, U), 0.0, 1e-14);
}

TEST(Infidelity, MatchesTraceFormulaAndDimensionCheck) {
    std::mt19937_64 rng(5);
    const Matrix A = random_unitary(4, rng);
    const Matrix B = random_unitary(4, rng);
    cplx tr = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) tr += std::conj(A(j, i)) * B(j, i);
    EXPECT_NEAR(infidelity(A, B), 1.0 - std::norm(tr) / 16.0, 1e-14);
    EXPECT_THROW(infidelity(A, Matrix::Identity(3, 3)), std::invalid_argument);
}

TEST(Infidelity, InvariantUnderSimultaneousPermutation) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix A = random_unitary(6, rng);
        const Matrix B = random_unitary(6, rng);
        std::vector<int> perm(6);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Matrix P = Matrix::Zero(6, 6);
        for (int i = 0; i < 6; ++i) P(perm[i], i) = 1.0;
        EXPECT_NEAR(infidelity(P * A * P.transpose(), P * B * P.transpose()), infidelity(A, B), 1e-13);
    }
}

TEST(RydbergPopulation, Examples) {
    const ModelParams p(3);
    EXPECT_EQ(rydberg_population(basis_state(p, DressedIndex::g0())), 0.0);
    for (std::size_t k = 1; k < p.dim(); ++k)
        EXPECT_DOUBLE_EQ(rydberg_population(basis_state(p, DressedIndex::from_linear(k))), 0.5);
    QuditState mix = (basis_state(p, DressedIndex::g0()) + basis_state(p, DressedIndex::branch(Sign::Minus, 1))) /
                     std::sqrt(2.0);
    EXPECT_NEAR(rydberg_population(mix), 0.25, 1e-15);
}

TEST(Decay, ParamsValidation) {
    EXPECT_THROW(DecayParams{-1.0}.validate(), std::invalid_argument);
    EXPECT_THROW(DecayParams::from_rates(1.0, 0.0), std::invalid_argument);
    EXPECT_NEAR(DecayParams::from_rates(10.0, 40.0).gamma_r, 0.25, 1e-16);
    EXPECT_NEAR(reference_decay().gamma_r, 1e4 / (2.0 * pi * 3e8), 1e-20);
}

TEST(Decay, SurvivalExamples) {
    const ModelParams p(2);
    const auto traj = constant_trajectory(basis_state(p, DressedIndex::branch(Sign::Minus, 1)), 40.0, 16);
    EXPECT_EQ(decay_survival(traj, DecayParams{0.0}), 1.0);
    EXPECT_NEAR(decay_survival(traj, DecayParams{0.01}), std::exp(-0.5 * 0.01 * 40.0), 1e-15);
    EXPECT_NEAR(rydberg_integral(traj), 20.0, 1e-12);
}

TEST(Decay, EstimateExamples) {
    EXPECT_EQ(decay_estimate(0.0, DecayParams{3.0}), 1.0);
    EXPECT_NEAR(decay_estimate(4.0, DecayParams{0.5}), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(decay_estimate(4.0, DecayParams{0.5}), 0.3679, 1e-4);
    EXPECT_THROW(decay_estimate(-1.0, DecayParams{0.5}), std::invalid_argument);
}

// With omega_1r = 0 and no detuning, |g,0> Rabi-flops into the bright
// combination of |+-,1> at angular frequency omega_01, so the Rydberg weight is
// 0.5 sin^2(omega_01 t / 2) and its integral is known in closed form.
TEST(Decay, TrapezoidIntegralMatchesRabiClosedForm) {
    const double w = 0.37, T = 23.0;
    const auto sched = single_pulse(1, PulseParams{T, 0.0, 0.0, w, 0.4, 0.0});
    const auto traj = run_schedule(basis_state(ModelParams(1), DressedIndex::g0()), sched, 256);
    const double exact = 0.5 * (T / 2.0 - std::sin(w * T) / (2.0 * w));
    EXPECT_NEAR(rydberg_integral(traj) / exact, 1.0, 1e-4);
    for (std::size_t k = 0; k < traj.size(); k += 37)
        EXPECT_NEAR(rydberg_population(traj.states[k]), 0.5 * std::pow(std::sin(w * traj.times[k] / 2.0), 2), 1e-12);
}

TEST(Decay, SurvivalInUnitIntervalAndMonotone) {
    std::mt19937_64 rng(17);
    const ModelParams p(3);
    const QuditState t = random_qudit_state(p, rng);
    CompileOptions opts;
    opts.omega_01 = 1e-2;
    const auto sched = compile_state_prep(t, p, opts);
    const auto traj = run_schedule(basis_state(p, DressedIndex::g0()), sched);

    double prev = 1.0;
    for (double g : {0.0, 1e-5, 1e-4, 1e-3, 1e-2}) {
        const double s = decay_survival(traj, DecayParams{g});
        EXPECT_GT(s, 0.0);
        EXPECT_LE(s, prev);
        prev = s;
    }
    // Longer prefixes of the same trajectory never survive better.
    prev = 1.0;
    for (std::size_t n = 2; n <= traj.size(); n += 25) {
        Trajectory prefix;
        prefix.times.assign(traj.times.begin(), traj.times.begin() + static_cast<long>(n));
        prefix.states.assign(traj.states.begin(), traj.states.begin() + static_cast<long>(n));
        const double s = decay_survival(prefix, DecayParams{1e-3});
        EXPECT_LE(s, prev + 1e-15);
        prev = s;
    }
}

TEST(Decay, MalformedTrajectoryRejected) {
    EXPECT_THROW(rydberg_integral(Trajectory{}), std::invalid_argument);
}

TEST(Decay, HadamardTrajectoryAverageNearOneHalf) {
    for (int N : {3, 5, 7}) {
        const ModelParams p(N);
        CompileOptions opts;
        opts.omega_01 = 4e-3;
        const auto sched = compile_unitary(hadamard_target(N), p, opts);
        const auto traj = run_schedule(uniform_state(p), sched, 16);
        const double avg = rydberg_integral(traj) / sched.total_duration();
        EXPECT_GE(avg, 0.3) << "N=" << N;
        EXPECT_LE(avg, 0.7) << "N=" << N;
    }
}

TEST(Sampling, RandomStatesAndUnitaries) {
    std::mt19937_64 rng(23);
    const ModelParams p(4);
    for (int k = 0; k < 5; ++k) {
        const QuditState s = random_qudit_state(p, rng);
        EXPECT_NEAR(s.norm(), 1.0, 1e-14);
        EXPECT_EQ(s(0), cplx(0.0));
        EXPECT_LE(unitarity_error(random_unitary(7, rng)), 1e-13);
    }
}

TEST(Scan, GateKindNames) {
    for (auto k : {GateKind::PhaseGate, GateKind::Hadamard, GateKind::StatePrep})
        EXPECT_EQ(parse_gate_kind(to_string(k)), k);
    EXPECT_THROW(parse_gate_kind("toffoli"), std::invalid_argument);
}

TEST(Scan, RowsOrderedAndIndependentOfJobs) {
    ScanConfig cfg;
    cfg.kind = GateKind::StatePrep;
    cfg.Ns = {3, 2};
    cfg.ratios = {1e-2, 3e-3};
    cfg.decay = DecayParams{1e-4};
    cfg.seed = 99;
    const auto serial = scan(cfg);
    cfg.jobs = 4;
    const auto parallel = scan(cfg);
    std::ostringstream a, b;
    write_scan_csv(a, serial);
    write_scan_csv(b, parallel);
    EXPECT_EQ(a.str(), b.str());

    ASSERT_EQ(serial.rows.size(), 4u);
    EXPECT_EQ(serial.rows[0].N, 3);
    EXPECT_EQ(serial.rows[1].omega01_ratio, 3e-3);
    EXPECT_EQ(serial.rows[2].N, 2);
    for (const auto& r : serial.rows) {
        EXPECT_GE(r.infidelity, 0.0);
        EXPECT_LE(r.infidelity, 1.0);
        EXPECT_GE(r.total_duration, 0.0);
        EXPECT_NEAR(r.decay_probability, 1.0 - std::exp(-0.5e-4 * r.total_duration), 1e-15);
    }
    EXPECT_EQ(a.str().substr(0, a.str().find('\n')),
              "N,omega01_ratio,gate,infidelity,total_duration,pulse_count,decay_probability");
}

TEST(Scan, SeedChangesPrepTargets) {
    ScanConfig cfg;
    cfg.kind = GateKind::StatePrep;
    cfg.Ns = {3};
    cfg.ratios = {1e-2};
    cfg.seed = 1;
    const auto a = scan(cfg);
    cfg.seed = 2;
    const auto b = scan(cfg);
    EXPECT_NE(a.rows[0].total_duration, b.rows[0].total_duration);
}

TEST(Scan, RejectsBadGrids) {
    ScanConfig cfg;
    cfg.Ns = {};
    cfg.ratios = {1e-3};
    EXPECT_THROW(scan(cfg), std::invalid_argument);
    cfg.Ns = {2};
    cfg.ratios = {-1e-3};
    EXPECT_THROW(scan(cfg), std::invalid_argument);
    cfg.ratios = {1e-3};
    cfg.decay = DecayParams{-1.0};
    EXPECT_THROW(scan(cfg), std::invalid_argument);
}

TEST(Scan, PhaseGateRatioSlopeNearTwo) {
    ScanConfig cfg;
    cfg.kind = GateKind::PhaseGate;
    cfg.Ns = {3};
    cfg.ratios = {3e-4, 1e-3, 3e-3};
    const auto res = scan(cfg);
    std::vector<double> x, y;
    for (const auto& r : res.rows) {
        x.push_back(r.omega01_ratio);
        y.push_back(r.infidelity);
    }
    const double slope = loglog_slope(x, y);
    EXPECT_GE(slope, 1.7);
    EXPECT_LE(slope, 2.3);
}

TEST(Frontier, NoDecayIsFeasibleEverywhere) {
    ScanConfig cfg;
    cfg.kind = GateKind::PhaseGate;
    cfg.Ns = {1, 2, 3};
    cfg.ratios = {1e-2, 1e-3};
    const auto verdicts = feasibility_frontier(scan(cfg));
    ASSERT_EQ(verdicts.size(), 3u);
    for (const auto& v : verdicts) {
        EXPECT_TRUE(v.feasible);
        ASSERT_TRUE(v.crossing_ratio);
        EXPECT_EQ(*v.crossing_ratio, 1e-3);
    }
    EXPECT_EQ(frontier_max_n(verdicts), 3);
}

TEST(Frontier, LogInterpolatedCrossingAndMaxN) {
    ScanResult res;
    // N=2: decay/eps = 100 at 1e-3 and 1e-2 at 1e-1, so the crossing sits at 1e-2.
    res.rows.push_back({2, 1e-1, GateKind::Hadamard, 1.0, 0, 0, 1e-2});
    res.rows.push_back({2, 1e-3, GateKind::Hadamard, 1e-4, 0, 0, 1e-2});
    // N=3 never crosses; N=4 does but sits past the gap.
    res.rows.push_back({3, 1e-3, GateKind::Hadamard, 1e-4, 0, 0, 1e-1});
    res.rows.push_back({4, 1e-3, GateKind::Hadamard, 1e-1, 0, 0, 1e-3});
    const auto v = feasibility_frontier(res);
    ASSERT_EQ(v.size(), 3u);
    EXPECT_TRUE(v[0].feasible);
    EXPECT_NEAR(*v[0].crossing_ratio, 1e-2, 1e-15);
    EXPECT_FALSE(v[1].feasible);
    EXPECT_FALSE(v[1].crossing_ratio);
    EXPECT_TRUE(v[2].feasible);
    EXPECT_EQ(frontier_max_n(v), 2);
}

TEST(Slope, ExactPowerLaw) {
    std::vector<double> x{1, 2, 5, 9}, y;
    for (double v : x) y.push_back(3.5 * std::pow(v, 2.7));
    EXPECT_NEAR(loglog_slope(x, y), 2.7, 1e-12);
    EXPECT_THROW(loglog_slope({1.0}, {1.0}), std::invalid_argument);
    EXPECT_THROW(loglog_slope({1.0, 2.0}, {1.0, 0.0}), std::domain_error);
}
