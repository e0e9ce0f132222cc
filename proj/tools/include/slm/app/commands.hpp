#pragma once

// The four slm subcommands. Each writes its files under config.out and returns the
// numbers it reported, so tests can drive them without the executable.

#include <map>
#include <string>
#include <vector>

#include "slm/app/config.hpp"
#include "slm/design.hpp"

namespace slm::app {

/// Ground truth from the image file or the generator.
Vector load_ground_truth(const ExperimentConfig& config);
double noise_variance(const ExperimentConfig& config, const Vector& u_true);
ImagePriorParams prior_params(const ExperimentConfig& config);

struct ReconstructReport {
  Vector reconstruction;
  double error = 0.0;
  double zero_filled_error = 0.0;
  Index columns = 0;
};

/// MAP (or flagged posterior mean) from the low-pass design with config.columns columns.
/// Writes reconstruction.pgm and reconstruct.csv.
ReconstructReport cmd_reconstruct(const ExperimentConfig& config);

struct InferRow {
  Bounding bounding = Bounding::TypeA;
  int outer = 0;
  double phi = 0.0;
  int inner_steps = 0;
  double gamma_min = 0.0;
  double gamma_median = 0.0;
  double gamma_max = 0.0;
};

/// Per-outer-loop diagnostics; both bounding types when compare_bounding is set.
/// Writes infer.csv.
std::vector<InferRow> cmd_infer(const ExperimentConfig& config);

struct DesignReport {
  /// Keyed by design kind; rd holds one trajectory per repeat.
  std::map<std::string, std::vector<DesignTrajectory>> runs;
  double rd_mean_final_error() const;
};

/// Writes design_<kind>.csv (design_rd_<k>.csv per repeat), design_<kind>.pgm and
/// design_summary.csv.
DesignReport cmd_design(const ExperimentConfig& config);

/// Writes <out>/<generator>.pgm and returns its path.
std::string cmd_synth(const ExperimentConfig& config);

/// CSV text in the result-row schema, starting with the schema line.
std::string design_csv(const DesignTrajectory& trajectory);

}  // namespace slm::app
