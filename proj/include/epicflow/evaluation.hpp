#pragma once

// Endpoint-error metrics, flow colour coding and the synthetic-match
// sensitivity sweep.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "epicflow/image.hpp"
#include "epicflow/pipeline.hpp"

namespace epic {

struct EvalReport {
  double aee = 0.0;                  // all valid pixels
  std::optional<double> aee_occ;     // valid & occluded (needs an occlusion mask)
  std::optional<double> aee_noc;     // valid & not occluded (needs an occlusion mask)
  // Bins by ground-truth magnitude: [0,10), [10,40), [40,inf). Empty bins are absent.
  std::optional<double> aee_s0_10, aee_s10_40, aee_s40plus;
  std::size_t n_s0_10 = 0, n_s10_40 = 0, n_s40plus = 0;
  double out_all_3 = 0.0;            // fraction of valid pixels with error > 3 px
  std::optional<double> out_noc_3;   // same over non-occluded pixels (needs a mask)
  std::size_t n_valid = 0;
  std::size_t n_occ = 0;
};

/// `invalid` flags pixels without ground truth; `occluded` flags occluded
/// pixels (which stay in the overall AEE when valid). Throws
/// std::invalid_argument on shape mismatch or when no pixel is valid.
EvalReport evaluate(const FlowField& estimate, const FlowField& truth, const Mask* invalid = nullptr,
                    const OcclusionMask* occluded = nullptr);

std::string to_json(const EvalReport& report);

/// Hue from flow direction, saturation from |flow| / max_norm (clipped at 1),
/// full value; zero flow is white. max_norm defaults to the 99th percentile
/// of the magnitudes.
Image flow_to_color(const FlowField& flow, std::optional<double> max_norm = std::nullopt);

struct SweepRow {
  double density = 0.0;
  double corruption = 0.0;
  std::uint64_t seed = 0;
  std::optional<double> aee;      // absent when the pipeline failed
  std::optional<double> aee_noc;
};

struct SweepSummary {
  double density = 0.0;
  double corruption = 0.0;
  std::size_t runs = 0;  // successful seeds
  std::optional<double> mean_aee;
  std::optional<double> mean_aee_noc;
};

struct SweepResult {
  std::vector<SweepRow> rows;          // density-major, then corruption, then seed
  std::vector<SweepSummary> summary;   // density-major, then corruption

  /// `density,corruption,seed,aee`; failed runs leave aee empty.
  std::string rows_csv() const;
  /// `density,corruption,runs,mean_aee,mean_aee_noc`.
  std::string summary_csv() const;
};

/// For each (density, corruption, seed): synthesize matches from the ground
/// truth, run the pipeline with saliency pruning off, evaluate. Pipeline
/// failures become rows without an AEE.
SweepResult sensitivity_sweep(const Image& image1, const Image& image2, const FlowField& truth,
                              const OcclusionMask& occluded, const std::vector<double>& densities,
                              const std::vector<double>& corruptions, const std::vector<std::uint64_t>& seeds,
                              const PipelineConfig& config, const CostMap* edges = nullptr,
                              const Mask* invalid = nullptr);

}  // namespace epic
