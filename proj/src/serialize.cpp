// External interfaces: config and artifact JSON schemas, report CSV, file IO.

#include "seqctl/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "seqctl/errors.hpp"

namespace seqctl {

using nlohmann::json;

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

const json& require(const json& j, const char* field, const char* where) {
    auto it = j.find(field);
    if (it == j.end())
        throw ConfigError(std::string(where) + ": missing required field '" + field + "'");
    return *it;
}

} // namespace

ControlledModel model_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("model: expected a JSON object");
    const json& obs = require(j, "observation", "model");
    const std::string type = require(obs, "type", "model.observation").get<std::string>();
    const std::string canonical = j.dump();

    if (type == "discrete") {
        const int k = require(j, "k", "model").get<int>();
        std::vector<std::string> controls =
            require(j, "controls", "model").get<std::vector<std::string>>();
        DiscreteObservation d;
        d.outcomes = require(obs, "outcomes", "model.observation").get<std::vector<std::string>>();
        const json& pmf = require(obs, "pmf", "model.observation");
        d.pmf.assign(static_cast<std::size_t>(k),
                     std::vector<std::vector<double>>(controls.size(),
                                                      std::vector<double>(d.outcomes.size(), 0.0)));
        for (int i = 1; i <= k; ++i) {
            const std::string hyp_key = std::to_string(i);
            if (!pmf.contains(hyp_key))
                throw ConfigError("model.observation.pmf: missing hypothesis '" + hyp_key + "'");
            for (std::size_t x = 0; x < controls.size(); ++x) {
                if (!pmf[hyp_key].contains(controls[x]))
                    throw ConfigError("model.observation.pmf[" + hyp_key + "]: missing control '" +
                                      controls[x] + "'");
                const auto probs = pmf[hyp_key][controls[x]].get<std::vector<double>>();
                if (probs.size() != d.outcomes.size())
                    throw ConfigError("model.observation.pmf[" + hyp_key + "][" + controls[x] +
                                      "]: expected " + std::to_string(d.outcomes.size()) +
                                      " probabilities");
                d.pmf[static_cast<std::size_t>(i - 1)][x] = probs;
            }
        }
        return ControlledModel::make_discrete(std::move(controls), std::move(d), canonical);
    }
    if (type == "gaussian_mean") {
        const json& means_j = require(obs, "means", "model.observation");
        std::vector<double> means;
        for (int i = 1; static_cast<std::size_t>(i) <= means_j.size(); ++i) {
            const std::string key = std::to_string(i);
            if (!means_j.contains(key))
                throw ConfigError("model.observation.means: missing hypothesis '" + key + "'");
            means.push_back(means_j[key].get<double>());
        }
        const double sd = obs.value("std", 1.0);
        const json& cv = require(obs, "control_values", "model.observation");
        std::vector<std::string> labels;
        std::vector<double> values;
        if (j.contains("controls")) {
            labels = j["controls"].get<std::vector<std::string>>();
        } else {
            for (auto it = cv.begin(); it != cv.end(); ++it) labels.push_back(it.key());
        }
        for (const auto& label : labels) {
            if (!cv.contains(label))
                throw ConfigError("model.observation.control_values: missing control '" + label + "'");
            values.push_back(cv[label].get<double>());
        }
        const int nodes = obs.value("quadrature_nodes", 64);
        return ControlledModel::gaussian_mean(std::move(means), sd, std::move(labels),
                                              std::move(values), nodes, canonical);
    }
    throw ConfigError("model.observation.type must be 'discrete' or 'gaussian_mean'");
}

LossSpec loss_from_json(const json& j) {
    LossSpec spec;
    spec.lambda = require(j, "lambda", "loss").get<std::vector<std::vector<double>>>();
    if (j.contains("cost_weights")) {
        spec.cost_weights = j["cost_weights"].get<std::vector<double>>();
    } else {
        spec.cost_weights.assign(spec.lambda.size(), 0.0);
        if (!spec.cost_weights.empty()) spec.cost_weights[0] = 1.0;
    }
    spec.validate();
    return spec;
}

BayesSpec bayes_from_json(const json& j) {
    BayesSpec bayes;
    bayes.priors = require(j, "priors", "bayes").get<std::vector<double>>();
    bayes.losses = require(j, "losses", "bayes").get<std::vector<std::vector<double>>>();
    bayes.cost = require(j, "cost", "bayes").get<double>();
    bayes.validate();
    return bayes;
}

json loss_to_json(const LossSpec& spec) {
    return json{{"lambda", spec.lambda}, {"cost_weights", spec.cost_weights}};
}

namespace {

GridSpec grid_from_json(const json& j, int k) {
    GridSpec grid = GridSpec::default_for(k);
    if (j.is_null()) return grid;
    auto scalar_or_per_dim = [&](const char* name, auto setter) {
        if (!j.contains(name)) return;
        const json& v = j[name];
        if (v.is_array()) {
            if (v.size() != grid.axes.size())
                throw ConfigError(std::string("grid.") + name + ": expected " +
                                  std::to_string(grid.axes.size()) + " entries");
            for (std::size_t d = 0; d < grid.axes.size(); ++d) setter(grid.axes[d], v[d]);
        } else {
            for (auto& axis : grid.axes) setter(axis, v);
        }
    };
    scalar_or_per_dim("lo", [](GridAxis& a, const json& v) { a.lo = v.get<double>(); });
    scalar_or_per_dim("hi", [](GridAxis& a, const json& v) { a.hi = v.get<double>(); });
    scalar_or_per_dim("m", [](GridAxis& a, const json& v) { a.m = v.get<int>(); });
    return grid;
}

json grid_to_json(const GridSpec& grid) {
    json axes = json::array();
    for (const auto& axis : grid.axes) {
        json a{{"lo", axis.lo}, {"hi", axis.hi}, {"m", axis.m}};
        if (!axis.extra.empty()) a["extra"] = axis.extra;
        axes.push_back(a);
    }
    return json{{"axes", axes}};
}

GridSpec grid_from_table_json(const json& j) {
    GridSpec grid;
    for (const auto& a : require(j, "axes", "table.grid")) {
        GridAxis axis;
        axis.lo = require(a, "lo", "table.grid.axes").get<double>();
        axis.hi = require(a, "hi", "table.grid.axes").get<double>();
        axis.m = require(a, "m", "table.grid.axes").get<int>();
        if (a.contains("extra")) axis.extra = a["extra"].get<std::vector<double>>();
        grid.axes.push_back(std::move(axis));
    }
    return grid;
}

} // namespace

RunConfig run_config_from_json(const json& j) {
    RunConfig cfg;
    cfg.model = model_from_json(require(j, "model", "config"));
    cfg.model.ensure_valid();

    const bool has_loss = j.contains("loss");
    const bool has_bayes = j.contains("bayes");
    if (has_loss == has_bayes)
        throw ConfigError("config: exactly one of 'loss' or 'bayes' must be present");
    if (has_loss) {
        cfg.loss = loss_from_json(j["loss"]);
    } else {
        cfg.bayes = bayes_from_json(j["bayes"]);
        cfg.loss = bayes_to_lagrange(*cfg.bayes);
    }
    if (cfg.loss.k() != cfg.model.k())
        throw ConfigError("config: loss and model disagree on the hypothesis count");

    cfg.grid = grid_from_json(j.contains("grid") ? j["grid"] : json(), cfg.model.k());
    if (j.contains("solver")) {
        cfg.solve.tol = j["solver"].value("tol", cfg.solve.tol);
        cfg.solve.max_iter = j["solver"].value("max_iter", cfg.solve.max_iter);
    }
    if (j.contains("policy")) cfg.horizon_cap = j["policy"].value("horizon_cap", cfg.horizon_cap);
    if (cfg.horizon_cap < 1) throw ConfigError("config: policy.horizon_cap must be >= 1");
    if (j.contains("eval")) {
        const json& e = j["eval"];
        cfg.eval_backend = e.value("backend", cfg.eval_backend);
        if (cfg.eval_backend != "exact" && cfg.eval_backend != "monte_carlo")
            throw ConfigError("config: eval.backend must be 'exact' or 'monte_carlo'");
        cfg.reps = e.value("reps", cfg.reps);
        cfg.seed = e.value("seed", cfg.seed);
    }
    if (j.contains("out")) cfg.out_dir = j["out"].get<std::string>();

    if (j.contains("calibration")) {
        const json& c = j["calibration"];
        CalibrationTask task;
        const std::string mode = require(c, "mode", "calibration").get<std::string>();
        if (mode == "problem_i") {
            ProblemITargets t;
            t.alpha = require(c, "targets", "calibration").get<std::vector<std::vector<double>>>();
            task.mode = std::move(t);
        } else if (mode == "problem_ii") {
            ProblemIITargets t;
            t.beta = require(c, "targets", "calibration").get<std::vector<double>>();
            task.mode = std::move(t);
        } else {
            throw ConfigError("calibration.mode must be 'problem_i' or 'problem_ii'");
        }
        task.initial_multiplier = c.value("initial_multiplier", task.initial_multiplier);
        task.rtol = c.value("rtol", task.rtol);
        task.max_outer = c.value("max_outer", task.max_outer);
        task.monte_carlo = cfg.eval_backend == "monte_carlo";
        task.reps = cfg.reps;
        task.seed = cfg.seed;
        task.grid = cfg.grid;
        task.solve = cfg.solve;
        task.horizon_cap = cfg.horizon_cap;
        cfg.calibration = std::move(task);
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    return run_config_from_json(read_json_file(path));
}

json table_to_json(const ValueTable& table) {
    return json{{"version", kVersion},
                {"grid", grid_to_json(table.grid)},
                {"values", table.values},
                {"iterations", table.iterations},
                {"residual", table.residual},
                {"converged", table.converged},
                {"fingerprint", table.fingerprint}};
}

ValueTable table_from_json(const json& j) {
    ValueTable table;
    table.grid = grid_from_table_json(require(j, "grid", "table"));
    table.axes = table.grid.build_axes();
    table.values = require(j, "values", "table").get<std::vector<double>>();
    std::size_t expected = 1;
    for (const auto& axis : table.axes) expected *= axis.size();
    if (table.values.size() != expected)
        throw ConfigError("table: value array does not match the grid size");
    table.iterations = j.value("iterations", 0);
    table.residual = j.value("residual", 0.0);
    table.converged = j.value("converged", true);
    table.fingerprint = require(j, "fingerprint", "table").get<std::string>();
    finalize_axes(table);
    return table;
}

json policy_to_json(const Policy& policy, const std::string& table_path) {
    return json{{"version", kVersion},
                {"fingerprint", policy.table->fingerprint},
                {"horizon_cap", policy.horizon_cap},
                {"initial_control", policy.model->controls()[static_cast<std::size_t>(policy.initial_control)]},
                {"table", table_path}};
}

PolicyFile policy_file_from_json(const json& j) {
    PolicyFile f;
    f.fingerprint = require(j, "fingerprint", "policy").get<std::string>();
    f.horizon_cap = require(j, "horizon_cap", "policy").get<long>();
    f.initial_control = require(j, "initial_control", "policy").get<std::string>();
    f.table_path = require(j, "table", "policy").get<std::string>();
    return f;
}

json report_to_json(const EvalReport& report) {
    json j{{"version", kVersion},
           {"k", report.k},
           {"alpha", report.alpha},
           {"beta", report.beta},
           {"asn", report.asn},
           {"truncation_mass", report.truncation_mass},
           {"lagrangian", report.lagrangian},
           {"method", report.method}};
    if (report.bayes_risk) j["bayes_risk"] = *report.bayes_risk;
    if (report.mc) {
        j["monte_carlo"] = json{{"reps", report.mc->reps},
                                {"seed", report.mc->seed},
                                {"alpha_se", report.mc->alpha_se},
                                {"asn_se", report.mc->asn_se}};
    }
    return j;
}

std::string report_to_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "hypothesis,asn,beta,truncation_mass";
    if (report.mc) out << ",asn_se";
    out << "\n";
    for (int i = 0; i < report.k; ++i) {
        out << (i + 1) << ',' << fmt17(report.asn[static_cast<std::size_t>(i)]) << ','
            << fmt17(report.beta[static_cast<std::size_t>(i)]) << ','
            << fmt17(report.truncation_mass[static_cast<std::size_t>(i)]);
        if (report.mc) out << ',' << fmt17(report.mc->asn_se[static_cast<std::size_t>(i)]);
        out << "\n";
    }
    out << "alpha_i_j";
    for (int j = 0; j < report.k; ++j) out << ",j=" << (j + 1);
    out << "\n";
    for (int i = 0; i < report.k; ++i) {
        out << "i=" << (i + 1);
        for (int j = 0; j < report.k; ++j)
            out << ',' << fmt17(report.alpha[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
        out << "\n";
    }
    return out.str();
}

std::string trace_to_csv(const std::vector<CalibrationIterate>& trace) {
    std::ostringstream out;
    std::size_t width = 0;
    for (const auto& it : trace) width = std::max(width, it.multipliers.size());
    out << "iteration";
    for (std::size_t m = 0; m < width; ++m) out << ",multiplier_" << m;
    for (std::size_t m = 0; m < width; ++m) out << ",achieved_" << m;
    out << ",asn_1,trivial\n";
    for (const auto& it : trace) {
        out << it.iteration;
        for (std::size_t m = 0; m < width; ++m)
            out << ',' << (m < it.multipliers.size() ? fmt17(it.multipliers[m]) : "");
        for (std::size_t m = 0; m < width; ++m)
            out << ',' << (m < it.achieved.size() ? fmt17(it.achieved[m]) : "");
        out << ',' << (it.asn.empty() ? "" : fmt17(it.asn[0])) << ',' << (it.trivial ? 1 : 0)
            << "\n";
    }
    return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw ConfigError("write failed: " + path.string());
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("JSON parse error in " + path.string() + ": " + e.what());
    }
    return j;
}

} // namespace seqctl
