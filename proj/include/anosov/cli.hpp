#pragma once

#include "anosov/perturbed.hpp"
#include "anosov/suspension.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace anosov::cli {

enum ExitCode : int {
  kOk = 0,
  kIdentityViolation = 1,
  kConfigError = 2,
  kNumericFailure = 3,
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string backend = "algebraic";

  double lambda0 = 1.0;

  ConformalSpec conformal;
  double perturbed_warmup = 20.0;
  double perturbed_dt_max = 0.01;

  SuspensionConfig suspension;

  double dt = 0.01;
  double duration = 100.0;
  int ensemble = 4;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds;  // overrides seed/ensemble when non-empty

  std::vector<double> metric_f;
  std::vector<double> metric_theta;
  double basis_width = 0.4;
  double theta_margin = 0.1;

  std::vector<double> realize_eta;
  std::vector<double> realize_sigma;

  std::vector<double> uniformize_T{1.0, 4.0, 16.0, 64.0};
  std::string eps_policy = "spread";  // spread: exp(-T (max r_u - min r_u)) | inverse_square | fixed
  double eps = 0.0;
  std::optional<double> horizon;
  double horizon_factor = 5.0;
  double uniformize_tolerance = 1e-4;

  int optimize_budget = 0;
  double optimize_step = 0.05;
  int samples_per_orbit = 2000;

  std::string output_dir = "out";
  int output_stride = 1;

  nlohmann::json echo;     // validated flat config, defaults filled in
  std::string config_hash; // git blob hash of the raw file

  std::vector<std::uint64_t> orbit_seeds() const;
  Eigen::Index samples() const;
};

// Flattens nested objects to dotted keys; rejects unknown keys and values of
// the wrong type.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

// SHA-1 of "blob <size>\0<content>", hex encoded.
std::string git_blob_hash(const std::string& content);

// Documented key schema: key, type, default.
struct KeyInfo {
  std::string key;
  std::string type;
  std::string default_value;
};
const std::vector<KeyInfo>& config_schema();

// Floats with 17 significant digits.
std::string format_double(double x);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);
  void row(const std::vector<std::string>& cells);

 private:
  std::string path_;
  std::size_t columns_;
  std::unique_ptr<std::ofstream> out_;
};

struct RunOptions {
  std::string command;
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

const std::vector<std::string>& commands();

// Runs one command end to end (config, computation, CSV + report.json) and
// returns the process exit code. Diagnostics go to `log`.
int run(const RunOptions& opt, std::ostream& log);

}  // namespace anosov::cli
