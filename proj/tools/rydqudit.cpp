// rydqudit: compile, simulate, scan and validate dressed-qudit pulse schedules.

#include "rydqudit/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

void add_decay_flags(CLI::App* cmd, rydqudit::cli::DecayInput& d) {
    cmd->add_option("--gamma-r", d.gamma_r, "Rydberg decay rate in units of omega_1r");
    cmd->add_option("--gamma-r-hz", d.gamma_r_hz, "Rydberg decay rate [1/s]");
    cmd->add_option("--omega1r-hz", d.omega1r_hz, "Omega_1r [rad/s]");
}

}  // namespace

int main(int argc, char** argv) {
    using namespace rydqudit::cli;
    CLI::App app{"Pulse compiler and simulator for Rydberg dressed-state qudits"};
    app.require_subcommand(1);

    CompileConfig cc;
    auto* compile = app.add_subcommand("compile", "Compile a pulse schedule to JSON");
    compile->add_option("--gate", cc.gate, "phase | hadamard | prep | control | unitary")->required();
    compile->add_option("--N", cc.N, "Number of atoms")->required();
    compile->add_option("--ratio", cc.ratio, "Omega_01 / Omega_1r");
    compile->add_option("--phi", cc.phi, "Phase-gate angle");
    compile->add_option("--target", cc.target, "uniform | minus1 | basis:<+|->,<q> | file");
    compile->add_option("--unitary-file", cc.unitary_file, "2N x 2N matrix as 're im' pairs per row");
    compile->add_option("--fold-variant", cc.fold_variant, "plain | tilde");
    compile->add_flag("--skip-zero-phases", cc.skip_zero_phases, "Drop eigen-phase gates with zero angle");
    compile->add_option("--out", cc.out, "Schedule JSON path");

    SimulateConfig sc;
    auto* simulate = app.add_subcommand("simulate", "Simulate a schedule and report gate metrics");
    simulate->add_option("--schedule", sc.schedule, "Schedule JSON")->required();
    simulate->add_option("--initial", sc.initial, "Initial state (preset or file)");
    simulate->add_option("--gate", sc.gate, "Reference gate: none | phase | hadamard | unitary");
    simulate->add_option("--phi", sc.phi, "Phase of the reference phase gate");
    simulate->add_option("--target", sc.target, "Target state of the reference phase gate");
    simulate->add_option("--unitary-file", sc.unitary_file, "Reference unitary");
    simulate->add_option("--samples", sc.samples, "Trajectory samples per pulse");
    simulate->add_flag("--interaction-frame", sc.interaction_frame, "Remove accumulated diagonal phases");
    simulate->add_flag("--mask-phases", sc.mask_phases, "Zero phases where |a| < 1e-3");
    simulate->add_option("--out", sc.out, "Report JSON path");
    simulate->add_option("--trajectory", sc.trajectory, "Trajectory CSV path");
    add_decay_flags(simulate, sc.decay);

    ScanCommandConfig scan;
    auto* scan_cmd = app.add_subcommand("scan", "Infidelity and decay over an (N, ratio) grid");
    scan_cmd->add_option("--gate", scan.gate, "phase | hadamard | prep");
    scan_cmd->add_option("--N", scan.Ns, "Atom numbers")->required()->delimiter(',');
    scan_cmd->add_option("--ratios", scan.ratios, "Omega_01 / Omega_1r values")->required()->delimiter(',');
    scan_cmd->add_option("--seed", scan.seed, "Seed for random targets");
    scan_cmd->add_option("--jobs", scan.jobs, "Worker threads")->check(CLI::PositiveNumber);
    scan_cmd->add_option("--phi", scan.phi, "Phase-gate angle");
    scan_cmd->add_option("--fold-variant", scan.fold_variant, "plain | tilde");
    scan_cmd->add_option("--out", scan.out, "Scan CSV path");
    scan_cmd->add_option("--frontier-out", scan.frontier_out, "Frontier CSV path");
    add_decay_flags(scan_cmd, scan.decay);

    ValidateConfig vc;
    auto* validate = app.add_subcommand("validate", "Check geometry and compare with the atom-basis model");
    validate->add_option("--geometry", vc.geometry, "Geometry JSON")->required();
    validate->add_option("--omega-1r", vc.omega_1r, "Omega_1r");
    validate->add_option("--ratio", vc.ratio, "Omega_01 / Omega_1r");
    validate->add_option("--phi-01", vc.phi_01, "Control-laser phase");
    validate->add_option("--delta-01", vc.delta_01, "Control-laser detuning");
    validate->add_option("--T", vc.T, "Evolution time");
    validate->add_option("--initial", vc.initial, "Initial level: g0 or <+|->,<q>");
    validate->add_option("--out", vc.out, "Report JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    if (*compile) return run_guarded([&] { cmd_compile(cc); });
    if (*simulate) return run_guarded([&] { cmd_simulate(sc); });
    if (*scan_cmd) return run_guarded([&] { cmd_scan(scan); });
    return run_guarded([&] { cmd_validate(vc); });
}
