#pragma once

// End-to-end flow estimation: cost map, match pruning, sparse-to-dense
// interpolation, variational refinement.

#include <optional>
#include <string>
#include <vector>

#include "epicflow/interpolation.hpp"
#include "epicflow/variational.hpp"

namespace epic {

struct PruneConfig {
  std::optional<double> saliency_threshold = 1e-4;  // nullopt disables
  int saliency_radius = 2;
  std::optional<double> consistency_residual = 5.0;  // nullopt disables
  double match_scale = 1.0;                          // applied when reading match files
};

struct PipelineConfig {
  InterpConfig interp;
  VarParams variational;
  PruneConfig prune;
  bool skip_variational = false;
  bool keep_interpolation = false;  // store the interpolated field in Diagnostics

  void validate() const;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct Diagnostics {
  std::size_t matches_in = 0;
  std::size_t after_saliency = 0;
  std::size_t after_consistency = 0;
  std::size_t matches_interpolated = 0;  // after pixel deduplication
  std::size_t la_fallbacks = 0;
  std::vector<StageTiming> timings;
  double total_seconds = 0.0;
  std::optional<FlowField> interpolated;
  std::optional<Labeling> labeling;
  std::vector<double> energies;
};

struct PipelineResult {
  FlowField flow;
  Diagnostics diagnostics;
};

/// `edges` is an external cost map (clamped to [0,1]); without one the
/// gradient cost map of image1 is used. Throws FormatError on dimension
/// mismatch and EmptyMatchError when pruning leaves nothing.
PipelineResult epicflow(const Image& image1, const Image& image2, const MatchSet& matches, const PipelineConfig& config,
                        const CostMap* edges = nullptr);

/// Process exit codes used by the command-line tools.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitFormat = 2, kExitEmptyMatches = 3, kExitNumeric = 4 };

}  // namespace epic
