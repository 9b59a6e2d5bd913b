#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "maskpinn/nn/network.hpp"
#include "maskpinn/pde/problem.hpp"
#include "maskpinn/train/trainer.hpp"

namespace maskpinn::cli {

/// A rejected configuration; `key()` is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key + ": " + message), key_(std::move(key)) {}
  [[nodiscard]] const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct ExperimentConfig {
  pde::ProblemKind problem = pde::ProblemKind::Heat;
  pde::ProblemParams problem_params;
  nn::Architecture arch;
  train::TrainConfig training;
  std::vector<std::uint64_t> trials{0};
  std::string output_dir = "runs/out";
  bool ci = true;  // false marks full-scale configs that are too slow for CI

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses TOML text with sections [problem], [architecture], [training] and
/// [output]. Unknown keys and invalid values raise ConfigError.
[[nodiscard]] ExperimentConfig parse_config(const std::string& text);
[[nodiscard]] ExperimentConfig load_config(const std::string& path);

/// Canonical TOML; parse_config(serialize(c)) == c for every valid c.
[[nodiscard]] std::string serialize(const ExperimentConfig& cfg);

/// Throws ConfigError naming the first invalid field.
void validate(const ExperimentConfig& cfg);

/// FNV-1a of the canonical text with the output section left out.
[[nodiscard]] std::uint64_t config_hash(const ExperimentConfig& cfg);

}  // namespace maskpinn::cli
