#pragma once

// Sequential Bayesian experimental design over columns of an orthonormal 2-D transform.
// A candidate's score is the information gain log|I + sigma^-2 X* A^-1 X*^T|.

#include <cstdint>
#include <vector>

#include "slm/varinf.hpp"

namespace slm {

/// Sparsity prior for square images: wavelet coefficients and first differences.
struct ImagePriorParams {
  double tau_a = 0.5;  ///< wavelet potentials
  double tau_r = 1.0;  ///< difference potentials
  PotentialKind kind = PotentialKind::Laplace;
  double nu = 2.1;     ///< Student's t, matched in variance to the Laplace scales
  bool isotropic_tv = false;
  int haar_levels = -1;  ///< -1: log2(side) - 2, at least 1
};

struct ImagePrior {
  Index side = 0;
  LinearOperator B;
  std::vector<PotentialSpec> potentials;
  GroupLayout layout;
  Index wavelet_rows = 0;  ///< the first rows of B are wavelet coefficients
};

ImagePrior make_image_prior(Index side, const ImagePriorParams& params);
ModelSpec make_model(const ImagePrior& prior, const LinearOperator& x, const Vector& y, double sigma2);

/// One measurement block; for column designs the id is the column position.
struct CandidateBlock {
  Index id = 0;
  LinearOperator X;
};

CandidateBlock column_candidate(Index height, Index width, Index column);

/// Exact score from a dense factorization of A.
double score_exact(const CandidateBlock& candidate, const DensePosterior& posterior, double sigma2);
/// Lanczos score log|I + V* V*^T| with V* = sigma^-1 X* Q_k L_k^-T, on the smaller Gram side.
double score_lanczos(const CandidateBlock& candidate, const LanczosFactorization& fact, double sigma2);

enum class BaselineKind { Lowpass, Equispaced, RandomVd };

const char* to_string(BaselineKind kind);

/// Columns added to `init`, in the order they are added:
///   Lowpass     outward from the center (w-1)/2, left first on ties;
///   Equispaced  C[floor(j |C| / count)] of the sorted non-init columns C;
///   RandomVd    seeded draws without replacement, weight (1 + |c - center| / w)^-2.
std::vector<Index> baseline_design(BaselineKind kind, Index width, Index count,
                                   const std::vector<Index>& init, std::uint64_t seed);

/// Noisy measurements of the given columns. Each column's noise is drawn from its own
/// stream seeded by (seed, column), so designs sharing a column share its data.
Vector simulate_measurements(const Vector& u_true, Index side, const std::vector<Index>& columns,
                             double sigma2, std::uint64_t seed);

struct DesignOptions {
  Bounding bounding = Bounding::TypeA;
  VarianceSource variance = VarianceSource::exact();
  int outer_max = 25;
  double map_epsilon = 1e-6;
  std::uint64_t seed = 0;
  bool timing = false;  ///< record wall time per round (0 otherwise, for reproducible output)
  IrlsOptions inner;
  IrlsOptions map_inner;
};

struct DesignRound {
  int round = 0;
  Index selected = -1;  ///< -1 for round 0
  double score = 0.0;   ///< NaN when not scored
  double phi = 0.0;     ///< NaN when no variational fit was run
  double error = 0.0;   ///< |u_map - u_true|
  double wall_time = 0.0;
};

struct DesignTrajectory {
  std::vector<Index> design;    ///< init followed by the selected columns
  std::vector<Index> selected;
  std::vector<DesignRound> rounds;
  std::vector<std::vector<std::pair<Index, double>>> score_tables;  ///< per scored round
  Vector reconstruction;        ///< MAP estimate for the final design
};

/// MAP reconstruction of the image from the given columns.
Vector reconstruct_map(const ImagePrior& prior, const Vector& u_true, double sigma2,
                       const std::vector<Index>& columns, const DesignOptions& options,
                       const Vector* warm_start = nullptr);

/// Greedy information-gain design: fit, score every remaining pool column, append the
/// argmax (ties to the lowest id), measure, refit. Stops early when the pool is empty.
DesignTrajectory run_sequential_design(const ImagePrior& prior, const Vector& u_true, double sigma2,
                                       const std::vector<Index>& pool, const std::vector<Index>& init,
                                       int rounds, const DesignOptions& options);

/// Same bookkeeping for a precomputed column sequence (baselines); no fits or scores.
DesignTrajectory run_fixed_design(const ImagePrior& prior, const Vector& u_true, double sigma2,
                                  const std::vector<Index>& init, const std::vector<Index>& sequence,
                                  const DesignOptions& options);

}  // namespace slm
