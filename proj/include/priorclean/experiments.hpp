#ifndef PRIORCLEAN_EXPERIMENTS_HPP_
#define PRIORCLEAN_EXPERIMENTS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "priorclean/agent.hpp"
#include "priorclean/inject.hpp"
#include "priorclean/rewards.hpp"

namespace priorclean {

struct InjectionSpec {
  ErrorKind kind = ErrorKind::kMcar;
  int rate_percent = 15;
};

struct RlSettings {
  bool enabled = true;
  size_t steps = 3000;
  size_t finetune_steps = 500;
  PpoConfig ppo;
};

struct TransferSettings {
  std::string source;
  std::vector<std::string> targets;
  size_t steps = 5000;
  size_t checkpoint_step = 2000;
  size_t curve_every = 250;
};

struct ExperimentConfig {
  std::string experiment;  // c1 .. c6
  std::string data_dir = ".";
  std::vector<std::string> datasets;
  std::string format = "auto";  // auto, csv, parquet
  std::optional<std::string> label_column;
  std::vector<InjectionSpec> profiles;
  std::string suite = "discrete7";
  std::vector<RewardKind> rewards;
  size_t n_pipelines = 0;  // 0 = every enumerated pipeline
  uint64_t seed = 42;
  std::string evaluator = "reference";
  std::vector<std::string> evaluator_command;
  size_t threads = 1;
  RlSettings rl;
  TransferSettings transfer;

  // Experiment-specific defaults for every field the JSON leaves out.
  static ExperimentConfig defaults(const std::string& experiment);
  static ExperimentConfig from_json(const nlohmann::json& j, const std::string& experiment = "");
  nlohmann::json to_json() const;
};

// Path of an injected artifact `<data_dir>/<name>_<type>_p<rate>.<ext>`.
// Throws IoError naming the expected stem when no such file exists.
std::filesystem::path resolve_artifact(const ExperimentConfig& config, const std::string& dataset,
                                       const InjectionSpec& spec);

struct ReportBundle {
  std::string experiment;
  std::vector<std::pair<std::string, std::string>> files;  // file name, CSV text
  nlohmann::json summary;
  nlohmann::json config;
  // Long-format plot rows by kind: heatmap, sensitivity, transfer, scatter.
  std::vector<std::pair<std::string, std::vector<std::vector<std::string>>>> plots;
};

ReportBundle run_experiment(const ExperimentConfig& config);

// Column headers:
//   heatmap      reward,dataset,best_score
//   sensitivity  dataset,rate,method,accuracy
//   transfer     dataset,step,variant,reward
//   scatter      dataset,reward,pipeline,score,accuracy
std::string emit_plot_data(const ReportBundle& bundle, const std::string& kind);

// Writes every CSV, plot_<kind>.csv, summary.json and config.json.
void write_bundle(const ReportBundle& bundle, const std::filesystem::path& dir);

}  // namespace priorclean

#endif  // PRIORCLEAN_EXPERIMENTS_HPP_
