// cli.hpp: Commands behind the rydqudit executable. Each command takes a
// plain config struct so the same code paths are reachable from tests.
//
// Exit codes: 0 success, 2 configuration error, 3 numeric or contract failure.

#pragma once

#include "rydqudit/compiler.hpp"
#include "rydqudit/fullspace.hpp"
#include "rydqudit/io.hpp"
#include "rydqudit/metrics.hpp"
#include "rydqudit/propagator.hpp"

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rydqudit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

inline constexpr const char* kOutputDirEnv = "RYDQUDIT_OUTPUT_DIR";

inline std::filesystem::path output_dir() {
    const char* env = std::getenv(kOutputDirEnv);
    return (env && *env) ? std::filesystem::path(env) : std::filesystem::path(".");
}

/// Explicit path if given, else name inside the default output directory.
inline std::filesystem::path output_path(const std::string& given, const char* fallback) {
    return given.empty() ? output_dir() / fallback : std::filesystem::path(given);
}

inline int run_guarded(const std::function<void()>& body, std::ostream& err = std::cerr) {
    try {
        body();
        return kExitOk;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
}

inline FoldVariant parse_fold_variant(const std::string& s) {
    if (s == "plain") return FoldVariant::Plain;
    if (s == "tilde") return FoldVariant::Tilde;
    throw std::invalid_argument("unknown fold variant: " + s);
}

/// Decay from either a dimensionless ratio or a pair of physical rates.
struct DecayInput {
    std::optional<double> gamma_r;
    std::optional<double> gamma_r_hz;
    std::optional<double> omega1r_hz;

    DecayParams resolve() const {
        if (gamma_r && (gamma_r_hz || omega1r_hz))
            throw std::invalid_argument("give either --gamma-r or --gamma-r-hz/--omega1r-hz");
        if (gamma_r) {
            DecayParams d{*gamma_r};
            d.validate();
            return d;
        }
        if (gamma_r_hz || omega1r_hz) {
            if (!gamma_r_hz || !omega1r_hz)
                throw std::invalid_argument("--gamma-r-hz and --omega1r-hz must be given together");
            return DecayParams::from_rates(*gamma_r_hz, *omega1r_hz);
        }
        return DecayParams{};
    }
};

// -------------------------------- compile ------------------------------------

enum class CompileGate { Phase, Hadamard, Prep, Control, Unitary };

inline CompileGate parse_compile_gate(const std::string& s) {
    if (s == "phase") return CompileGate::Phase;
    if (s == "hadamard") return CompileGate::Hadamard;
    if (s == "prep") return CompileGate::Prep;
    if (s == "control") return CompileGate::Control;
    if (s == "unitary") return CompileGate::Unitary;
    throw std::invalid_argument("unknown gate: " + s);
}

struct CompileConfig {
    std::string gate{"phase"};
    int N{1};
    double ratio{1e-3};
    double phi{0.0};
    std::string target{"uniform"};
    std::string unitary_file;
    std::string fold_variant{"plain"};
    bool skip_zero_phases{false};
    std::string out;
};

inline CompileOptions make_options(double ratio, const std::string& fold_variant,
                                   bool skip_zero_phases = false) {
    CompileOptions o;
    o.omega_01 = ratio;
    o.fold_variant = parse_fold_variant(fold_variant);
    o.skip_zero_phases = skip_zero_phases;
    o.validate();
    return o;
}

inline Matrix load_unitary(const std::string& path) { return parse_complex_matrix(read_file(path)); }

inline PulseSchedule build_schedule(const CompileConfig& cfg) {
    const ModelParams p(cfg.N);
    const CompileOptions opts = make_options(cfg.ratio, cfg.fold_variant, cfg.skip_zero_phases);
    switch (parse_compile_gate(cfg.gate)) {
        case CompileGate::Phase: return compile_phase_gate(resolve_target(cfg.target, p), cfg.phi, p, opts);
        case CompileGate::Hadamard: return compile_unitary(hadamard_target(cfg.N), p, opts);
        case CompileGate::Prep: return compile_state_prep(resolve_target(cfg.target, p), p, opts);
        case CompileGate::Control:
            return compile_full_control(resolve_target(cfg.target, p), ControlSpace::Hprime, p, opts);
        case CompileGate::Unitary:
            if (cfg.unitary_file.empty()) throw std::invalid_argument("--unitary-file is required");
            return compile_unitary(load_unitary(cfg.unitary_file), p, opts);
    }
    throw std::invalid_argument("unknown gate");
}

inline void cmd_compile(const CompileConfig& cfg, std::ostream& out = std::cout) {
    const PulseSchedule s = build_schedule(cfg);
    const auto path = output_path(cfg.out, "schedule.json");
    write_file_atomic(path, dump_json(schedule_to_json(s)));
    out << "pulses: " << s.size() << "\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", s.total_duration());
    out << "total_duration: " << buf << "\n";
    out << "written: " << path.string() << "\n";
}

// -------------------------------- simulate -----------------------------------

struct SimulateConfig {
    std::string schedule;
    std::string initial{"minus1"};
    /// Reference gate for the infidelity: none, phase, hadamard or unitary.
    std::string gate{"none"};
    double phi{0.0};
    std::string target{"uniform"};
    std::string unitary_file;
    int samples{kDefaultSamplesPerPulse};
    bool interaction_frame{false};
    bool mask_phases{false};
    DecayInput decay;
    std::string out;
    std::string trajectory;
};

inline std::optional<Matrix> reference_gate(const SimulateConfig& cfg, const ModelParams& p) {
    if (cfg.gate == "none") return std::nullopt;
    if (cfg.gate == "phase") {
        const QuditState t = resolve_target(cfg.target, p);
        return phase_gate_target(t.tail(static_cast<Eigen::Index>(p.qudit_dim())), cfg.phi);
    }
    if (cfg.gate == "hadamard") return hadamard_target(p.N);
    if (cfg.gate == "unitary") {
        if (cfg.unitary_file.empty()) throw std::invalid_argument("--unitary-file is required");
        return load_unitary(cfg.unitary_file);
    }
    throw std::invalid_argument("unknown reference gate: " + cfg.gate);
}

struct SimulationOutput {
    GateReport report;
    Trajectory trajectory;
};

inline SimulationOutput simulate_schedule(const PulseSchedule& s, const SimulateConfig& cfg) {
    const DecayParams decay = cfg.decay.resolve();
    const QuditState initial = resolve_target(cfg.initial, s.params);
    check_normalized(initial, 1e-10, "simulate");
    const auto target = reference_gate(cfg, s.params);
    if (target && (target->rows() != static_cast<Eigen::Index>(s.params.qudit_dim()) ||
                   target->cols() != target->rows()))
        throw std::invalid_argument("reference gate does not match schedule N");
    SimulationOutput out;
    out.report = extract_gate(s, target);
    out.trajectory = run_schedule(initial, s, cfg.samples);
    out.report.survival = decay_survival(out.trajectory, decay);
    out.report.decay_probability = 1.0 - *out.report.survival;
    return out;
}

inline void cmd_simulate(const SimulateConfig& cfg, std::ostream& out = std::cout) {
    const PulseSchedule s = parse_schedule(read_file(cfg.schedule));
    const SimulationOutput sim = simulate_schedule(s, cfg);
    const auto report_path = output_path(cfg.out, "report.json");
    const auto traj_path = output_path(cfg.trajectory, "trajectory.csv");
    if (report_path == traj_path) throw std::invalid_argument("report and trajectory paths must differ");
    std::ostringstream csv;
    write_trajectory_csv(csv, cfg.interaction_frame ? interaction_frame(sim.trajectory, s) : sim.trajectory,
                         cfg.mask_phases);
    write_file_atomic(traj_path, csv.str());
    write_file_atomic(report_path, dump_json(report_to_json(sim.report)));
    out << dump_json(report_to_json(sim.report));
}

// ---------------------------------- scan -------------------------------------

struct ScanCommandConfig {
    std::string gate{"hadamard"};
    std::vector<int> Ns;
    std::vector<double> ratios;
    std::uint64_t seed{1};
    unsigned jobs{1};
    double phi{pi / 2.0};
    std::string fold_variant{"plain"};
    DecayInput decay;
    std::string out;
    std::string frontier_out;
};

inline void write_frontier_csv(std::ostream& os, const std::vector<FrontierVerdict>& verdicts,
                               std::uint64_t seed) {
    os << "N,feasible,crossing_ratio,seed\n";
    char buf[128];
    for (const auto& v : verdicts) {
        if (v.crossing_ratio)
            std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%llu\n", v.N, v.feasible ? 1 : 0, *v.crossing_ratio,
                          static_cast<unsigned long long>(seed));
        else
            std::snprintf(buf, sizeof buf, "%d,%d,,%llu\n", v.N, v.feasible ? 1 : 0,
                          static_cast<unsigned long long>(seed));
        os << buf;
    }
}

inline void cmd_scan(const ScanCommandConfig& cfg, std::ostream& out = std::cout) {
    ScanConfig sc;
    sc.kind = parse_gate_kind(cfg.gate);
    sc.Ns = cfg.Ns;
    sc.ratios = cfg.ratios;
    sc.seed = cfg.seed;
    sc.jobs = cfg.jobs;
    sc.phi = cfg.phi;
    sc.fold_variant = parse_fold_variant(cfg.fold_variant);
    sc.decay = cfg.decay.resolve();
    const ScanResult result = scan(sc);
    const auto verdicts = feasibility_frontier(result);

    const auto csv_path = output_path(cfg.out, "scan.csv");
    auto frontier_path = cfg.frontier_out.empty() ? std::filesystem::path(csv_path.string() + ".frontier.csv")
                                                  : std::filesystem::path(cfg.frontier_out);
    if (csv_path == frontier_path) throw std::invalid_argument("scan and frontier paths must differ");
    std::ostringstream csv, fcsv;
    write_scan_csv(csv, result);
    write_frontier_csv(fcsv, verdicts, cfg.seed);
    write_file_atomic(csv_path, csv.str());
    write_file_atomic(frontier_path, fcsv.str());
    out << "rows: " << result.rows.size() << "\n";
    out << "frontier_max_N: " << frontier_max_n(verdicts) << "\n";
}

// -------------------------------- validate -----------------------------------

struct ValidateConfig {
    std::string geometry;
    double omega_1r{1.0};
    double ratio{1e-2};
    double phi_01{0.0};
    double delta_01{0.0};
    double T{10.0};
    std::string initial{"-,1"};
    std::string out;
};

inline DressedIndex parse_level(const std::string& s) {
    if (s == "g0") return DressedIndex::g0();
    if (s.size() < 3 || (s[0] != '+' && s[0] != '-') || s[1] != ',')
        throw std::invalid_argument("level must be g0 or <+|->,<q>");
    int q = 0;
    try {
        q = std::stoi(s.substr(2));
    } catch (const std::exception&) {
        throw std::invalid_argument("bad level: " + s);
    }
    if (q < 1) throw std::invalid_argument("level q must be >= 1");
    return DressedIndex::branch(s[0] == '+' ? Sign::Plus : Sign::Minus, q);
}

inline json validate_report(const ValidateConfig& cfg) {
    json doc;
    try {
        doc = json::parse(read_file(cfg.geometry));
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("geometry: ") + e.what());
    }
    const Geometry g = geometry_from_json(doc);
    const GeometryReport gr = validate_geometry(g, cfg.omega_1r);
    json report = {{"N", g.N()},
                   {"blockade_radius", gr.blockade_radius},
                   {"collision_ok", gr.collision_ok},
                   {"collision_margin", gr.collision_margin},
                   {"blockade_ok", gr.blockade_ok},
                   {"blockade_margin", gr.blockade_margin}};
    if (g.N() > kMaxFullSites)
        throw std::invalid_argument("full-space comparison supports at most " + std::to_string(kMaxFullSites) +
                                    " sites");
    const DressedIndex initial = parse_level(cfg.initial);
    check_index(ModelParams(g.N()), initial);
    const PulseParams pulse{0.0, cfg.omega_1r, 0.0, cfg.ratio * cfg.omega_1r, cfg.phi_01, cfg.delta_01};
    report["spectrum_max_deviation"] = compare_spectrum(g, pulse).max_deviation;
    report["evolution_overlap"] = compare_evolution(g, pulse, cfg.T, initial);
    report["T"] = cfg.T;
    return report;
}

inline void cmd_validate(const ValidateConfig& cfg, std::ostream& out = std::cout) {
    const json report = validate_report(cfg);
    write_file_atomic(output_path(cfg.out, "validate.json"), dump_json(report));
    out << dump_json(report);
}

}  // namespace rydqudit::cli
