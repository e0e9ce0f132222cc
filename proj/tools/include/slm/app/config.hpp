#pragma once

// Experiment configuration: a flat key=value file, overridable from the command line.

#include <cstdint>
#include <map>
#include <string>

#include "slm/varinf.hpp"

namespace slm::app {

using KeyValues = std::map<std::string, std::string>;

/// Lines of key = value; '#' starts a comment. IoError carries the path.
KeyValues load_key_values(const std::string& path);
KeyValues parse_key_values(const std::string& text, const std::string& origin);

struct ExperimentConfig {
  std::string image;               ///< PGM path; empty selects the generator
  std::string generator = "phantom";
  Index side = 32;
  std::uint64_t seed = 0;

  // Laplace scales for images in [0, 1]: 0.07 and 0.04 times 255.
  double tau_a = 17.85;
  double tau_r = 10.2;
  PotentialKind potential = PotentialKind::Laplace;
  double nu = 2.1;
  bool isotropic_tv = false;
  int haar_levels = -1;

  double sigma2 = 0.0;        ///< <= 0: noise_ratio times the mean signal power
  double noise_ratio = 1e-3;

  Bounding bounding = Bounding::TypeA;
  VarianceSource variance = VarianceSource::exact();
  int outer_max = 25;
  double map_epsilon = 1e-6;

  Index columns = -1;        ///< low-pass columns for reconstruct and infer; -1: side/2, side/4
  bool posterior_mean = false;  ///< reconstruct with the variational mean instead of MAP
  bool compare_bounding = false;

  std::string design = "all";  ///< op, ct, eq, rd or all
  Index init_columns = -1;     ///< -1: side/8
  Index total_columns = -1;    ///< -1: side/4
  int rd_repeats = 5;
  bool timing = false;

  std::string out = ".";
};

/// Applies the keys on top of `base`. Unknown keys and malformed values raise FormatError.
ExperimentConfig apply_key_values(ExperimentConfig base, const KeyValues& kv);

/// Range checks; a missing image file raises IoError with its path.
void validate(const ExperimentConfig& config);

Bounding parse_bounding(const std::string& text);
/// "exact" or "lanczos:K".
VarianceSource parse_variance(const std::string& text, std::uint64_t seed);

}  // namespace slm::app
