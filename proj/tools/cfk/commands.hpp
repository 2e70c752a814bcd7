#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace cfk::cli {

struct Global {
  std::uint64_t seed = 1;
  int jobs = 1;
  std::filesystem::path out = "out";
  bool quiet = false;
};

/// Records one command's arguments and outputs in <out>/run_manifest.json.
/// Entries are keyed by command, hold no timestamps, and list outputs
/// relative to <out>, so reruns produce identical files.
class RunLog {
 public:
  RunLog(const Global& g, std::string command);
  void arg(const std::string& key, nlohmann::json value);
  void output(const std::filesystem::path& path);
  void commit();

 private:
  const Global& g_;
  std::string command_;
  nlohmann::json args_ = nlohmann::json::object();
  std::vector<std::string> outputs_;
};

void log(const Global& g, const std::string& message);

struct IngestArgs {
  std::string manifest;
  std::string cnsifd;
  bool skip_image_check = false;
};
void run_ingest(const Global& g, const IngestArgs& a);

struct PreprocessArgs {
  std::string manifest;
  bool no_equalize = false;
};
void run_preprocess(const Global& g, const PreprocessArgs& a);

struct ExtractArgs {
  std::string manifest;
  std::vector<std::string> families;
  std::string cnn_file;
  bool csv = false;
  bool no_equalize = false;
};
void run_extract(const Global& g, const ExtractArgs& a);

struct TrainArgs {
  std::string manifest;
  std::string task = "race";
  std::vector<std::string> families;
  int k = 10;
  int repeats = 100;
  double variance = 0.95;
};
void run_train(const Global& g, const TrainArgs& a);

struct RegressArgs {
  std::string manifest;
  std::string attribute;
  std::vector<std::string> families;
  std::vector<std::string> responses;
  int k = 10;
  int repeats = 100;
  double variance = 0.95;
  int inner_folds = 10;
};
void run_regress(const Global& g, const RegressArgs& a);

struct AnalyzeArgs {
  std::string manifest;
  std::vector<std::string> responses;
  std::string design;
  std::string scheme = "even_odd";
  std::size_t draws = 1000;
  std::size_t n_boot = 1000;
};
void run_analyze(const Global& g, const AnalyzeArgs& a);

struct OccludeArgs {
  std::string manifest;
  std::string accuracy;  // CSV face_id,accuracy
  std::vector<std::string> responses;
  std::optional<double> target;
  double tolerance = 0.01;
  int restarts = 1000;
  double margin = 4.0;
  std::size_t n_common = 108;
  std::size_t n_unique = 109;
  bool no_stimuli = false;
};
void run_occlude(const Global& g, const OccludeArgs& a);

struct ServeArgs {
  std::string manifest;
  std::string storage;
  std::string design;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string token;
  std::optional<std::size_t> plain_trials;
};
void run_serve(const Global& g, const ServeArgs& a);

struct SynthArgs {
  std::size_t n_per_class = 50;
  double effect = 0.0;
  std::string part = "mouth";
  double noise_sd = 2.0;
  std::size_t subjects = 0;
  double mean_accuracy = 0.64;
  double accuracy_sd = 0.15;
};
void run_synth(const Global& g, const SynthArgs& a);

struct ReportArgs {
  std::string analysis;
  std::string output;
};
void run_report(const Global& g, const ReportArgs& a);

}  // namespace cfk::cli
