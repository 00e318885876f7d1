#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "aucns/data.hpp"
#include "aucns/metrics.hpp"
#include "aucns/train.hpp"

namespace aucns {

struct ExperimentConfig {
    std::filesystem::path dataset_path;
    RatingFormat format = RatingFormat::Ml100k;
    double split_ratio = 0.8;
    double hot_quantile = 0.15;
    TrainConfig train;
    std::vector<std::size_t> eval_ks = {5, 10, 20};
    double pauc_gamma = 0.006;
    std::uint64_t seed = 1;
    std::filesystem::path output_dir = "out";
};

void validate(const ExperimentConfig& config);

// Strict parse: unknown keys anywhere are rejected. Relative dataset paths are
// resolved against base_dir.
ExperimentConfig parse_experiment_config(const nlohmann::json& json, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Canonical form; output_dir is excluded so identical runs in different
// directories share a hash.
nlohmann::json to_json(const ExperimentConfig& config);
std::uint64_t config_hash(const ExperimentConfig& config);

// SHA-1 of "blob <size>\0<content>", as git computes object ids.
std::string git_blob_sha1(const std::filesystem::path& path);

struct PreparedData {
    RatingTable table;
    InteractionDataset dataset;
    PopularityProfile profile;
};

PreparedData prepare_data(const ExperimentConfig& config);

struct ExperimentResult {
    std::vector<EvalReport> reports;
    std::vector<EpochLog> log;
    SamplerTelemetry telemetry;
    nlohmann::json report_json;
    nlohmann::json manifest_json;
};

// Trains, evaluates and writes report.json, metrics_k{K}.csv, training_log.csv,
// manifest.json and model.bin into config.output_dir. Nothing is left behind on failure.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Evaluates a saved checkpoint on the split described by config.
std::vector<EvalReport> evaluate_checkpoint(const ExperimentConfig& config, const std::filesystem::path& checkpoint);

struct SweepPoint {
    double value = 0.0;
    ExperimentResult result;
};

// One run per value of alpha, beta or gamma with the shared seed; writes
// sweep_<param>.csv next to the per-point output directories.
std::vector<SweepPoint> sweep(const ExperimentConfig& config, const std::string& parameter,
                              const std::vector<double>& values);

ExperimentConfig with_parameter(ExperimentConfig config, const std::string& parameter, double value);

}  // namespace aucns
