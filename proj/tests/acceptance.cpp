// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <rydqudit/cli.hpp>
#include <rydqudit/fullspace.hpp>
#include <rydqudit/metrics.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace rydqudit;

namespace {

struct Verdict {
    bool pass{true};
    std::string detail;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [out of range]");
    }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

CompileOptions at_ratio(double r) {
    CompileOptions o;
    o.omega_01 = r;
    return o;
}

double hadamard_eps(int N, double ratio) {
    const Matrix U = hadamard_target(N);
    return *extract_gate(compile_unitary(U, ModelParams(N), at_ratio(ratio)), U).infidelity;
}

double phase_eps(int N, double ratio) {
    const QuditState t = uniform_state(ModelParams(N));
    const auto s = compile_phase_gate(t, pi / 2, ModelParams(N), at_ratio(ratio));
    return *extract_gate(s, phase_gate_target(t.tail(2 * N), pi / 2)).infidelity;
}

/// Random H' state orthogonal to t.
template <typename Rng>
QuditState orthogonal_state(const QuditState& t, const ModelParams& p, Rng& rng) {
    QuditState x = random_qudit_state(p, rng);
    x -= t.dot(x) * t;
    return x / x.norm();
}

Verdict criterion1() {
    Verdict v;
    const double eps = phase_eps(7, 1e-3);
    v.check(eps >= 3e-5 && eps <= 3e-4, "eps(N=7, 1e-3) = " + fmt("%.3e", eps) + " in [3e-5, 3e-4]");
    return v;
}

Verdict criterion2() {
    Verdict v;
    const double eps = hadamard_eps(7, 4e-3);
    v.check(eps >= 1e-2 && eps <= 9e-2, "hadamard eps(N=7, 4e-3) = " + fmt("%.4e", eps) + " within 3x of 3e-2");
    return v;
}

Verdict criterion3() {
    Verdict v;
    std::vector<double> ratios{3e-4, 5e-4, 1e-3, 2e-3, 3e-3}, eps;
    for (double r : ratios) eps.push_back(hadamard_eps(5, r));
    const double s_ratio = loglog_slope(ratios, eps);
    v.check(s_ratio >= 1.7 && s_ratio <= 2.3, "ratio slope (N=5) = " + fmt("%.3f", s_ratio));

    std::vector<double> Ns, epsN;
    for (int N = 3; N <= 7; ++N) {
        Ns.push_back(N);
        epsN.push_back(hadamard_eps(N, 1e-3));
    }
    const double s_n = loglog_slope(Ns, epsN);
    std::string series;
    for (double e : epsN) series += fmt(" %.2e", e);
    v.check(s_n >= 2.3 && s_n <= 3.7, "N slope (ratio 1e-3) = " + fmt("%.3f", s_n) + " from eps" + series);
    return v;
}

Verdict criterion4() {
    Verdict v;
    std::mt19937_64 rng(2024);

    // (a) unitarity and leakage over a mix of compiled schedules.
    struct Case {
        std::string name;
        PulseSchedule s;
        Matrix target;
    };
    std::vector<Case> cases;
    {
        const ModelParams p(7);
        const QuditState t = uniform_state(p);
        cases.push_back({"phase N=7", compile_phase_gate(t, pi / 2, p, at_ratio(1e-3)),
                         phase_gate_target(t.tail(14), pi / 2)});
    }
    cases.push_back({"hadamard N=4", compile_unitary(hadamard_target(4), ModelParams(4), at_ratio(1e-3)),
                     hadamard_target(4)});
    {
        const Matrix U = random_unitary(6, rng);
        cases.push_back({"haar N=3", compile_unitary(U, ModelParams(3), at_ratio(1e-3)), U});
    }
    double worst_unitarity = 0.0, worst_leak_ratio = 0.0;
    for (const auto& c : cases) {
        const auto rep = extract_gate(c.s, c.target);
        worst_unitarity = std::max(worst_unitarity, unitarity_error(rep.full));
        worst_leak_ratio = std::max(worst_leak_ratio, rep.leakage / *rep.infidelity);
    }
    v.check(worst_unitarity <= 1e-9, "(a) max |U^+U - I| = " + fmt("%.1e", worst_unitarity));
    v.check(worst_leak_ratio <= 10.0, "max leakage/eps = " + fmt("%.2f", worst_leak_ratio));

    // (b) states orthogonal to the phase-gate target are left alone.
    {
        const ModelParams p(5);
        const QuditState t = random_qudit_state(p, rng);
        const auto s = compile_phase_gate(t, 1.3, p, at_ratio(1e-3));
        const auto rep = extract_gate(s, phase_gate_target(t.tail(10), 1.3));
        double worst = 0.0;
        for (int k = 0; k < 20; ++k) {
            const QuditState x = orthogonal_state(t, p, rng);
            worst = std::max(worst, 1.0 - std::norm(x.dot(rep.full * x)));
        }
        v.check(worst <= 10.0 * *rep.infidelity,
                "(b) worst orthogonal-state error " + fmt("%.2e", worst) + " vs 10 eps = " +
                    fmt("%.2e", 10.0 * *rep.infidelity));
    }

    // (c) invert(O) after O.
    {
        const ModelParams p(3);
        const QuditState t = random_qudit_state(p, rng);
        auto s = compile_full_control(t, ControlSpace::Hprime, p, at_ratio(1e-3));
        s.append(invert_full_control(s));
        const double eps = *extract_gate(s, Matrix::Identity(6, 6)).infidelity;
        v.check(eps <= 1e-4, "(c) eps(invert(O) O) = " + fmt("%.2e", eps));
    }
    return v;
}

Verdict criterion5() {
    Verdict v;
    std::mt19937_64 rng(77);
    const ModelParams p(5);
    const auto opts = at_ratio(1e-3);

    double worst_prep = 0.0;
    for (int k = 0; k < 10; ++k) {
        const QuditState t = random_qudit_state(p, rng);
        const QuditState out = schedule_propagator(compile_state_prep(t, p, opts)) * basis_state(p, DressedIndex::g0());
        worst_prep = std::max(worst_prep, 1.0 - std::norm(t.dot(out)));
    }
    v.check(worst_prep <= 1e-3, "prep worst infidelity (N=5, 10 Haar targets) = " + fmt("%.2e", worst_prep));

    double worst_meas = 0.0, sum = 0.0;
    for (int k = 0; k < 20; ++k) {
        const QuditState t = random_qudit_state(p, rng);
        const QuditState s = random_qudit_state(p, rng);
        const double err = std::abs(measure_projection(s, t, p, opts) - std::norm(t.dot(s)));
        worst_meas = std::max(worst_meas, err);
        sum += err;
    }
    v.check(worst_meas <= 1e-3, "measurement worst error (20 pairs) = " + fmt("%.2e", worst_meas) +
                                    ", mean " + fmt("%.2e", sum / 20.0));
    return v;
}

Verdict criterion6() {
    Verdict v;
    const PulseParams pp{0.0, 1.0, 0.0, 1e-2, 0.0, 0.0};
    const Geometry g = triangle_geometry(1e4);
    const double dev = compare_spectrum(g, pp).max_deviation;
    v.check(dev <= 5e-3, "spectrum deviation (V=1e4) = " + fmt("%.2e", dev));
    double worst_overlap = 1.0;
    const ModelParams p(3);
    for (std::size_t k = 0; k < p.dim(); ++k)
        worst_overlap = std::min(worst_overlap, compare_evolution(g, pp, 10.0, DressedIndex::from_linear(k)));
    v.check(worst_overlap >= 0.999, "min overlap over all 7 levels at T=10 = " + fmt("%.6f", worst_overlap));
    std::vector<double> devs;
    for (double V : {1e2, 1e3, 1e4}) devs.push_back(compare_spectrum(triangle_geometry(V), pp).max_deviation);
    v.check(devs[0] > devs[1] && devs[1] > devs[2],
            "deviations " + fmt("%.1e", devs[0]) + " > " + fmt("%.1e", devs[1]) + " > " + fmt("%.1e", devs[2]));
    return v;
}

std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> g;
    for (int k = 0; k < n; ++k) g.push_back(lo * std::pow(hi / lo, double(k) / (n - 1)));
    return g;
}

/// Crossing ratio per N and the infidelity there (log-interpolated).
std::string frontier_summary(const std::vector<FrontierVerdict>& verdicts, const ScanResult& res) {
    std::string s;
    for (const auto& fv : verdicts) {
        if (!fv.crossing_ratio) {
            s += " N" + std::to_string(fv.N) + "=none";
            continue;
        }
        std::vector<const ScanRow*> rows;
        for (const auto& r : res.rows)
            if (r.N == fv.N) rows.push_back(&r);
        double eps = rows.back()->infidelity;
        for (std::size_t k = 1; k < rows.size(); ++k) {
            if (rows[k]->omega01_ratio < *fv.crossing_ratio) continue;
            const double w = std::log(*fv.crossing_ratio / rows[k - 1]->omega01_ratio) /
                             std::log(rows[k]->omega01_ratio / rows[k - 1]->omega01_ratio);
            eps = std::exp((1 - w) * std::log(rows[k - 1]->infidelity) + w * std::log(rows[k]->infidelity));
            break;
        }
        s += " N" + std::to_string(fv.N) + fmt("@%.3f", *fv.crossing_ratio) + fmt("(eps %.2f)", eps);
    }
    return s;
}

Verdict criterion7() {
    Verdict v;
    {
        const ModelParams p(7);
        const auto s = compile_unitary(hadamard_target(7), p, at_ratio(4e-3));
        const auto traj = run_schedule(uniform_state(p), s);
        const double avg = rydberg_integral(traj) / s.total_duration();
        v.check(avg >= 0.3 && avg <= 0.7, "hadamard N=7 trajectory-average Rydberg population = " + fmt("%.4f", avg));
    }
    const std::vector<double> ratios = log_grid(1e-4, 1e-1, 13);
    for (auto [kind, lo, hi, expect, tol] :
         {std::tuple{GateKind::Hadamard, 2, 12, 8, 1}, std::tuple{GateKind::PhaseGate, 2, 20, 14, 2}}) {
        ScanConfig cfg;
        cfg.kind = kind;
        for (int N = lo; N <= hi; ++N) cfg.Ns.push_back(N);
        cfg.ratios = ratios;
        cfg.decay = reference_decay();
        cfg.jobs = std::max(1u, std::thread::hardware_concurrency());
        const auto res = scan(cfg);
        const auto verdicts = feasibility_frontier(res);
        const int n_max = frontier_max_n(verdicts);
        v.check(std::abs(n_max - expect) <= tol, to_string(kind) + " frontier N_max = " + std::to_string(n_max) +
                                                     " (expect " + std::to_string(expect) + "+-" +
                                                     std::to_string(tol) + ", scanned to " + std::to_string(hi) +
                                                     "; crossings" + frontier_summary(verdicts, res) + ")");
    }
    return v;
}

Verdict criterion8() {
    Verdict v;
    cli::CompileConfig cc;
    cc.gate = "hadamard";
    cc.N = 4;
    cc.ratio = 2e-3;
    const auto a = dump_json(schedule_to_json(cli::build_schedule(cc)));
    const auto b = dump_json(schedule_to_json(cli::build_schedule(cc)));
    v.check(a == b, "schedule JSON byte-identical");

    ScanConfig sc;
    sc.kind = GateKind::StatePrep;
    sc.Ns = {2, 3, 4};
    sc.ratios = {1e-3, 3e-3};
    sc.seed = 5;
    std::ostringstream c1, c2;
    write_scan_csv(c1, scan(sc));
    sc.jobs = 4;
    write_scan_csv(c2, scan(sc));
    v.check(c1.str() == c2.str(), "scan CSV byte-identical across job counts");

    const auto s = cli::build_schedule(cc);
    const auto back = parse_schedule(a);
    cli::SimulateConfig sim;
    sim.gate = "hadamard";
    sim.initial = "uniform";
    sim.decay.gamma_r = reference_decay().gamma_r;
    const auto r1 = cli::simulate_schedule(s, sim);
    const auto r2 = cli::simulate_schedule(back, sim);
    double diff = std::max({std::abs(*r1.report.infidelity - *r2.report.infidelity),
                            std::abs(r1.report.leakage - r2.report.leakage),
                            std::abs(*r1.report.survival - *r2.report.survival),
                            std::abs(r1.report.total_duration - r2.report.total_duration),
                            (r1.trajectory.final_state() - r2.trajectory.final_state()).cwiseAbs().maxCoeff()});
    v.check(diff <= 1e-12, "round-trip report difference = " + fmt("%.1e", diff));
    return v;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"1 phase-gate infidelity", criterion1},  {"2 hadamard infidelity", criterion2},
        {"3 scaling laws", criterion3},           {"4 protocol identities", criterion4},
        {"5 state prep and measurement", criterion5}, {"6 full-space oracle", criterion6},
        {"7 decay model", criterion7},            {"8 determinism and round-trip", criterion8},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = run();
        } catch (const std::exception& e) {
            v.check(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s criterion %s (%.1f s): %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), secs,
                    v.detail.c_str());
        std::fflush(stdout);
        failed += !v.pass;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
