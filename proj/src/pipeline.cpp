#include "epicflow/pipeline.hpp"

#include <chrono>

#include "epicflow/edges.hpp"
#include "epicflow/error.hpp"
#include "epicflow/match_prep.hpp"

namespace epic {

void PipelineConfig::validate() const {
  interp.validate();
  variational.validate();
  if (prune.saliency_radius < 1) throw std::invalid_argument("saliency radius must be at least 1");
  if (prune.consistency_residual && !(*prune.consistency_residual > 0.0))
    throw std::invalid_argument("consistency residual must be positive");
  if (!(prune.match_scale > 0.0)) throw std::invalid_argument("match scale must be positive");
}

namespace {

using Clock = std::chrono::steady_clock;

// Contiguous stage timer: each lap closes the previous stage.
class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>& out) : out_(out), start_(Clock::now()), last_(start_) {}

  void lap(const char* stage) {
    const auto now = Clock::now();
    out_.push_back({stage, std::chrono::duration<double>(now - last_).count()});
    last_ = now;
  }

  double total() const { return std::chrono::duration<double>(last_ - start_).count(); }

 private:
  std::vector<StageTiming>& out_;
  Clock::time_point start_;
  Clock::time_point last_;
};

}  // namespace

PipelineResult epicflow(const Image& image1, const Image& image2, const MatchSet& matches, const PipelineConfig& config,
                        const CostMap* edges) {
  config.validate();
  if (image1.width() != image2.width() || image1.height() != image2.height() || image1.channels() != image2.channels())
    throw FormatError("image dimensions differ");
  if (image1.width() <= 0 || image1.height() <= 0) throw FormatError("non-positive dimensions");
  if (edges && !edges->same_shape(image1.width(), image1.height()))
    throw FormatError("edge map dimensions do not match the image");

  PipelineResult result;
  Diagnostics& diag = result.diagnostics;
  StageClock clock(diag.timings);
  diag.matches_in = matches.size();

  const CostMap cost = edges ? adapt_edge_map(*edges) : gradient_cost_map(image1);
  clock.lap("cost_map");

  MatchSet kept = matches;
  if (config.prune.saliency_threshold)
    kept = saliency_filter(kept, image1, config.prune.saliency_radius, *config.prune.saliency_threshold);
  diag.after_saliency = kept.size();
  clock.lap("saliency");

  if (config.prune.consistency_residual)
    kept = consistency_filter(kept, cost, config.interp.kernel_a, InterpConfig::for_estimator(Estimator::NadarayaWatson).k,
                              *config.prune.consistency_residual)
               .kept;
  diag.after_consistency = kept.size();
  clock.lap("consistency");
  if (kept.empty()) throw EmptyMatchError("all matches were pruned");

  InterpolationResult interp = interpolate(image1.width(), image1.height(), cost, kept, config.interp);
  diag.matches_interpolated = interp.matches_used;
  diag.la_fallbacks = interp.la_fallbacks;
  diag.labeling = std::move(interp.labeling);
  clock.lap("interpolation");

  if (config.skip_variational) {
    result.flow = interp.flow;
  } else {
    RefineStats stats;
    result.flow = refine(image1, image2, interp.flow, config.variational, &stats);
    diag.energies = std::move(stats.energies);
  }
  if (config.keep_interpolation) diag.interpolated = std::move(interp.flow);
  clock.lap("variational");
  diag.total_seconds = clock.total();
  return result;
}

}  // namespace epic
