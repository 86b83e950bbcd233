#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "seqctl/calibrate.hpp"

#include <json.hpp>

namespace seqctl {

inline constexpr const char* kVersion = "0.1.0";

// ---- model / loss configuration ----------------------------------------

ControlledModel model_from_json(const nlohmann::json& j);
LossSpec loss_from_json(const nlohmann::json& j);
BayesSpec bayes_from_json(const nlohmann::json& j);
nlohmann::json loss_to_json(const LossSpec& spec);

// ---- run configuration ---------------------------------------------------

struct RunConfig {
    ControlledModel model;
    LossSpec loss;                  // adapted from bayes when bayes is given
    std::optional<BayesSpec> bayes;
    GridSpec grid;
    SolveOptions solve;
    long horizon_cap = 10000;
    std::string eval_backend = "exact"; // "exact" | "monte_carlo"
    long reps = 100000;
    std::uint64_t seed = 1;
    std::optional<CalibrationTask> calibration;
    std::string out_dir = ".";
};

RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

// ---- persisted artifacts ---------------------------------------------------

nlohmann::json table_to_json(const ValueTable& table);
ValueTable table_from_json(const nlohmann::json& j);

struct PolicyFile {
    std::string fingerprint;
    long horizon_cap = 10000;
    std::string initial_control;
    std::string table_path; // relative to the policy file
};

nlohmann::json policy_to_json(const Policy& policy, const std::string& table_path);
PolicyFile policy_file_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const EvalReport& report);
std::string report_to_csv(const EvalReport& report);
std::string trace_to_csv(const std::vector<CalibrationIterate>& trace);

void write_text_file(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json_file(const std::filesystem::path& path);

} // namespace seqctl
