// seqctl: solve, evaluate, calibrate, and interactively apply optimal
// sequential testing policies for controlled experiments.
//
// Exit codes: 0 ok, 2 configuration error, 3 convergence warning,
// 4 fingerprint mismatch.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "seqctl/errors.hpp"
#include "seqctl/serialize.hpp"

namespace fs = std::filesystem;
using namespace seqctl;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitConvergence = 3;
constexpr int kExitFingerprint = 4;

std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct CommonArgs {
    std::string config_path;
    std::string policy_path;
    std::string out_dir;
    std::optional<long> reps;
    std::optional<std::uint64_t> seed;
};

RunConfig load_config(const CommonArgs& args) {
    RunConfig cfg = load_run_config(args.config_path);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.reps) cfg.reps = *args.reps;
    if (args.seed) cfg.seed = *args.seed;
    return cfg;
}

void print_solution_summary(const RunConfig& cfg, const ValueTable& table) {
    const std::vector<double> unit(static_cast<std::size_t>(cfg.model.k() - 1), 1.0);
    const double l0 = terminal_cost_g(cfg.loss, unit);
    const double continue_value = stage_cost(cfg.loss, unit) + r0(cfg.model, cfg.loss, table);
    std::cout << "l_0 = " << fmt6(l0) << "\n";
    std::cout << "stage_cost(1) + R_0 = " << fmt6(continue_value) << "\n";
    std::cout << "iterations = " << table.iterations << ", residual = " << fmt6(table.residual)
              << (table.converged ? "" : " (NOT CONVERGED)") << "\n";
    if (l0 <= continue_value) {
        const int j = accept_decision(cfg.loss, unit);
        std::cout << "trivial procedure optimal: accept H_" << j << ", L = " << fmt6(l0) << "\n";
    } else {
        const auto init = continuation(cfg.model, cfg.loss, table, LikelihoodState::initial(cfg.model.k()));
        std::cout << "initial control = " << cfg.model.controls()[static_cast<std::size_t>(init.control)]
                  << "\n";
    }
}

int cmd_validate(const CommonArgs& args) {
    const json j = read_json_file(args.config_path);
    RunConfig cfg = run_config_from_json(j); // throws on schema problems
    const auto violations = cfg.model.validate();
    if (violations.empty()) {
        std::cout << "ok: model valid, k = " << cfg.model.k() << ", "
                  << cfg.model.control_count() << " controls\n";
        return kExitOk;
    }
    for (const auto& v : violations) std::cout << "violation: " << v << "\n";
    return kExitConfig;
}

int cmd_solve(const CommonArgs& args) {
    RunConfig cfg = load_config(args);
    fs::create_directories(cfg.out_dir);
    ValueTable table = solve_rho(cfg.model, cfg.loss, cfg.grid, cfg.solve);
    print_solution_summary(cfg, table);

    write_text_file(fs::path(cfg.out_dir) / "value_table.json", table_to_json(table).dump(2) + "\n");
    const std::vector<double> unit(static_cast<std::size_t>(cfg.model.k() - 1), 1.0);
    const bool trivial = trivial_procedure_optimal(cfg.model, cfg.loss, table);
    if (!trivial) {
        Policy policy = make_policy(cfg.model, cfg.loss, table, cfg.horizon_cap);
        write_text_file(fs::path(cfg.out_dir) / "policy.json",
                        policy_to_json(policy, "value_table.json").dump(2) + "\n");
    }
    return table.converged ? kExitOk : kExitConvergence;
}

struct LoadedPolicy {
    ValueTable table;
    Policy policy;
};

LoadedPolicy load_policy(const RunConfig& cfg, const std::string& policy_path) {
    const json pj = read_json_file(policy_path);
    PolicyFile pf = policy_file_from_json(pj);
    const std::string expected = make_fingerprint(cfg.model, cfg.loss);
    if (pf.fingerprint != expected)
        throw FingerprintError("policy fingerprint " + pf.fingerprint +
                               " does not match model/loss fingerprint " + expected);
    LoadedPolicy lp;
    const fs::path table_path = fs::path(policy_path).parent_path() / pf.table_path;
    lp.table = table_from_json(read_json_file(table_path));
    if (lp.table.fingerprint != expected)
        throw FingerprintError("value table fingerprint does not match model/loss");
    lp.policy.model = &cfg.model;
    lp.policy.spec = &cfg.loss;
    lp.policy.table = &lp.table;
    lp.policy.horizon_cap = pf.horizon_cap;
    lp.policy.initial_control = cfg.model.control_index(pf.initial_control);
    return lp;
}

void print_report(const ControlledModel& model, const EvalReport& report) {
    std::cout << "method = " << report.method;
    if (report.mc) std::cout << " (reps " << report.mc->reps << ", seed " << report.mc->seed << ")";
    std::cout << "\n";
    std::cout << "hyp   asn          beta         truncation\n";
    for (int i = 0; i < report.k; ++i) {
        std::printf("H_%-3d %-12s %-12s %-12s\n", i + 1,
                    fmt6(report.asn[static_cast<std::size_t>(i)]).c_str(),
                    fmt6(report.beta[static_cast<std::size_t>(i)]).c_str(),
                    fmt6(report.truncation_mass[static_cast<std::size_t>(i)]).c_str());
    }
    std::cout << "alpha matrix (rows: true hypothesis, cols: accepted):\n";
    for (int i = 0; i < report.k; ++i) {
        std::cout << "  ";
        for (int j = 0; j < report.k; ++j)
            std::printf("%-12s ", fmt6(report.alpha[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]).c_str());
        std::cout << "\n";
    }
    std::cout << "lagrangian = " << fmt6(report.lagrangian) << "\n";
    if (report.bayes_risk) std::cout << "bayes_risk = " << fmt6(*report.bayes_risk) << "\n";
    (void)model;
}

int run_eval(const CommonArgs& args, bool monte_carlo) {
    RunConfig cfg = load_config(args);
    LoadedPolicy lp = load_policy(cfg, args.policy_path);
    DecisionRule rule = to_rule(lp.policy);
    EvalReport report = monte_carlo ? mc_eval(cfg.model, cfg.loss, rule, cfg.reps, cfg.seed)
                                    : exact_eval(cfg.model, cfg.loss, rule);
    if (cfg.bayes) report.bayes_risk = bayes_risk(report, *cfg.bayes);
    print_report(cfg.model, report);
    fs::create_directories(cfg.out_dir);
    write_text_file(fs::path(cfg.out_dir) / "report.json", report_to_json(report).dump(2) + "\n");
    write_text_file(fs::path(cfg.out_dir) / "report.csv", report_to_csv(report));
    return kExitOk;
}

int cmd_calibrate(const CommonArgs& args) {
    RunConfig cfg = load_config(args);
    if (!cfg.calibration)
        throw ConfigError("config: calibrate requires a 'calibration' block");
    CalibrationResult result = calibrate(cfg.model, *cfg.calibration);
    std::cout << (result.converged ? "converged" : "not converged") << " after "
              << result.trace.size() << " outer iterations\n";
    if (!result.message.empty()) std::cout << result.message << "\n";
    std::cout << "meets error constraints: " << (result.meets_constraints ? "yes" : "no") << "\n";
    print_report(cfg.model, result.report);

    fs::create_directories(cfg.out_dir);
    write_text_file(fs::path(cfg.out_dir) / "calibrated_loss.json",
                    loss_to_json(result.spec).dump(2) + "\n");
    write_text_file(fs::path(cfg.out_dir) / "value_table.json",
                    table_to_json(result.table).dump(2) + "\n");
    if (!trivial_procedure_optimal(cfg.model, result.spec, result.table)) {
        Policy policy = make_policy(cfg.model, result.spec, result.table, cfg.horizon_cap);
        write_text_file(fs::path(cfg.out_dir) / "policy.json",
                        policy_to_json(policy, "value_table.json").dump(2) + "\n");
    }
    write_text_file(fs::path(cfg.out_dir) / "report.json",
                    report_to_json(result.report).dump(2) + "\n");
    write_text_file(fs::path(cfg.out_dir) / "trace.csv", trace_to_csv(result.trace));
    return result.converged ? kExitOk : kExitConvergence;
}

int cmd_apply(const CommonArgs& args) {
    RunConfig cfg = load_config(args);
    LoadedPolicy lp = load_policy(cfg, args.policy_path);
    const Policy& policy = lp.policy;
    const ControlledModel& model = cfg.model;

    LikelihoodState state = LikelihoodState::initial(model.k());
    std::cout << "initial control: "
              << model.controls()[static_cast<std::size_t>(policy.initial_control)] << "\n";
    int control = policy.initial_control;
    std::string line;
    while (true) {
        std::cout << "y[" << (state.n + 1) << "] (control "
                  << model.controls()[static_cast<std::size_t>(control)] << ", 'quit' to abort)> "
                  << std::flush;
        if (!std::getline(std::cin, line)) {
            std::cout << "\nend of input, no decision recorded\n";
            return kExitOk;
        }
        std::istringstream iss(line);
        std::string token;
        iss >> token;
        if (token.empty()) continue;
        if (token == "quit" || token == "q") {
            std::cout << "aborted, no decision recorded\n";
            return kExitOk;
        }
        Outcome y;
        try {
            if (model.discrete()) {
                y = Outcome{model.outcome_index(token)};
            } else {
                y = Outcome{std::stod(token)};
            }
        } catch (const std::exception&) {
            std::cout << "could not parse observation '" << token << "', try again\n";
            continue;
        }
        try {
            state = advance(model, state, control, y);
        } catch (const AbsContinuityError& e) {
            std::cout << "error: " << e.what() << "\n";
            return kExitConfig;
        }
        const double g = terminal_cost_g(cfg.loss, state);
        const auto cont = continuation(model, cfg.loss, *policy.table, state);
        const double continue_value = stage_cost(cfg.loss, state) + cont.value;
        std::cout << "n = " << state.n << ", z = (";
        const auto z = state.z();
        for (std::size_t r = 0; r < z.size(); ++r)
            std::cout << (r ? ", " : "") << fmt6(z[r]);
        std::cout << "), g(z) = " << fmt6(g) << ", stage + R(z) = " << fmt6(continue_value)
                  << "\n";
        if (should_stop(policy, state)) {
            const bool forced = state.n >= policy.horizon_cap && g > continue_value;
            std::cout << "stop after n = " << state.n << (forced ? " (forced by horizon cap)" : "")
                      << ": accept H_" << decide(policy, state) << "\n";
            return kExitOk;
        }
        control = next_control(policy, state);
    }
}

int cmd_demo_gaussian(const CommonArgs& args) {
    // Regression experiment: normal response with mean theta * x, theta in
    // {1, 2}, controls x in {1, 2}, symmetric multipliers 100.
    json config = {
        {"model",
         {{"k", 2},
          {"controls", {"1", "2"}},
          {"observation",
           {{"type", "gaussian_mean"},
            {"means", {{"1", 1.0}, {"2", 2.0}}},
            {"std", 1.0},
            {"control_values", {{"1", 1.0}, {"2", 2.0}}},
            {"quadrature_nodes", 64}}}}},
        {"loss", {{"lambda", {{0.0, 100.0}, {100.0, 0.0}}}}},
        // the upper continuation boundary sits near +193 nats for this loss;
        // the grid must close over it or boundary truncation distorts the
        // control map near the top edge
        {"grid", {{"lo", -25.0}, {"hi", 210.0}, {"m", 4701}}},
        {"eval", {{"backend", "monte_carlo"}, {"reps", 100000}, {"seed", 1}}}};
    RunConfig cfg = run_config_from_json(config);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.reps) cfg.reps = *args.reps;
    if (args.seed) cfg.seed = *args.seed;

    ValueTable table = solve_rho(cfg.model, cfg.loss, cfg.grid, cfg.solve);
    print_solution_summary(cfg, table);
    Policy policy = make_policy(cfg.model, cfg.loss, table, cfg.horizon_cap);

    // stopping interval and control map over the grid nodes
    const auto& axis = table.axes[0];
    double first_cont = 0.0, last_cont = 0.0;
    bool any = false, contiguous = true, closed = false;
    std::string controls_used;
    LikelihoodState probe = LikelihoodState::initial(2);
    probe.n = 1;
    for (double q : axis) {
        probe.log_z[0] = q;
        if (!natural_stop(policy, probe)) {
            if (!any) first_cont = q;
            else if (closed) contiguous = false;
            last_cont = q;
            any = true;
            const int c = next_control(policy, probe);
            const std::string& label = cfg.model.controls()[static_cast<std::size_t>(c)];
            if (controls_used.find(label) == std::string::npos) {
                if (!controls_used.empty()) controls_used += ",";
                controls_used += label;
            }
        } else if (any) {
            closed = true;
        }
    }
    if (!any) {
        std::cout << "continuation region empty on the grid\n";
        return kExitOk;
    }
    std::cout << "continuation region in z: [" << fmt6(std::exp(first_cont)) << ", "
              << fmt6(std::exp(last_cont)) << "]"
              << (contiguous ? " (single interval)" : " (NOT an interval)") << "\n";
    std::cout << "controls chosen on continuation nodes: x = " << controls_used << "\n";

    DecisionRule rule = to_rule(policy);
    EvalReport report = mc_eval(cfg.model, cfg.loss, rule, cfg.reps, cfg.seed);
    print_report(cfg.model, report);

    fs::create_directories(cfg.out_dir);
    write_text_file(fs::path(cfg.out_dir) / "value_table.json", table_to_json(table).dump(2) + "\n");
    write_text_file(fs::path(cfg.out_dir) / "policy.json",
                    policy_to_json(policy, "value_table.json").dump(2) + "\n");
    write_text_file(fs::path(cfg.out_dir) / "report.json", report_to_json(report).dump(2) + "\n");
    write_text_file(fs::path(cfg.out_dir) / "report.csv", report_to_csv(report));
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"optimal sequential multiple-hypothesis testing with control variables"};
    app.require_subcommand(1);

    CommonArgs args;
    long reps_arg = -1;
    long long seed_arg = -1;

    auto add_common = [&](CLI::App* cmd, bool needs_config, bool needs_policy) {
        if (needs_config)
            cmd->add_option("--config", args.config_path, "run configuration JSON")->required();
        if (needs_policy)
            cmd->add_option("--policy", args.policy_path, "policy JSON written by solve")->required();
        cmd->add_option("--out", args.out_dir, "output directory");
        cmd->add_option("--reps", reps_arg, "Monte Carlo replications");
        cmd->add_option("--seed", seed_arg, "Monte Carlo seed");
    };

    auto* validate = app.add_subcommand("validate", "check a configuration");
    add_common(validate, true, false);
    auto* solve = app.add_subcommand("solve", "solve for the optimal policy");
    add_common(solve, true, false);
    auto* evaluate = app.add_subcommand("evaluate", "exact operating characteristics");
    add_common(evaluate, true, true);
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo operating characteristics");
    add_common(simulate, true, true);
    auto* calibrate_cmd = app.add_subcommand("calibrate", "tune multipliers to error targets");
    add_common(calibrate_cmd, true, false);
    auto* apply = app.add_subcommand("apply", "interactive application of a policy");
    add_common(apply, true, true);
    auto* demo = app.add_subcommand("demo-gaussian", "end-to-end normal-regression demo");
    add_common(demo, false, false);

    CLI11_PARSE(app, argc, argv);
    if (reps_arg >= 0) args.reps = reps_arg;
    if (seed_arg >= 0) args.seed = static_cast<std::uint64_t>(seed_arg);

    try {
        if (validate->parsed()) return cmd_validate(args);
        if (solve->parsed()) return cmd_solve(args);
        if (evaluate->parsed()) return run_eval(args, false);
        if (simulate->parsed()) return run_eval(args, true);
        if (calibrate_cmd->parsed()) return cmd_calibrate(args);
        if (apply->parsed()) return cmd_apply(args);
        if (demo->parsed()) return cmd_demo_gaussian(args);
    } catch (const FingerprintError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFingerprint;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
