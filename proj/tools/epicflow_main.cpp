// epicflow: dense optical flow from a sparse match file.

#include <CLI11.hpp>

#include <charconv>
#include <iostream>
#include <optional>
#include <string>

#include "epicflow/error.hpp"
#include "epicflow/evaluation.hpp"
#include "epicflow/io.hpp"
#include "epicflow/pipeline.hpp"

namespace {

using namespace epic;

// "off" disables a pruning stage, anything else must parse as a number.
std::optional<double> parse_threshold(const std::string& text, const std::string& flag) {
  if (text == "off") return std::nullopt;
  double v = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) throw CLI::ValidationError(flag, "expected a number or 'off'");
  return v;
}

struct Options {
  std::string image1, image2, matches, out;
  std::string edges, edges_mode;
  std::string interp = "la", distance = "approx";
  std::optional<std::size_t> k;
  double a = 1.0, la_lambda = 1e-3, match_scale = 1.0;
  std::string prune_saliency = "1e-4", prune_consistency = "5";
  bool no_variational = false, timings = false;
  VarParams var;
  std::string dump_interp, dump_labels, viz;
};

int run(const Options& o) {
  const Image i1 = read_image(o.image1);
  const Image i2 = read_image(o.image2);
  const MatchFile mf = read_matches(o.matches, i1.width(), i1.height(), o.match_scale);
  if (mf.rejected) std::cerr << "epicflow: dropped " << mf.rejected << " matches outside image 1\n";

  std::optional<CostMap> edges;
  if (!o.edges.empty()) {
    CostMapFile cf = read_cost_map(o.edges);
    if (cf.clamped) std::cerr << "epicflow: clamped " << cf.clamped << " negative edge values\n";
    edges = std::move(cf.map);
  }

  PipelineConfig cfg;
  cfg.interp = InterpConfig::for_estimator(parse_estimator(o.interp));
  cfg.interp.distance = parse_distance_mode(o.distance);
  if (o.k) cfg.interp.k = *o.k;
  cfg.interp.kernel_a = o.a;
  cfg.interp.la_lambda = o.la_lambda;
  cfg.prune.saliency_threshold = parse_threshold(o.prune_saliency, "--prune-saliency");
  cfg.prune.consistency_residual = parse_threshold(o.prune_consistency, "--prune-consistency");
  cfg.prune.match_scale = o.match_scale;
  cfg.variational = o.var;
  cfg.skip_variational = o.no_variational;
  cfg.keep_interpolation = !o.dump_interp.empty();

  const PipelineResult res = epicflow(i1, i2, mf.matches, cfg, edges ? &*edges : nullptr);
  write_flo(o.out, res.flow);
  const Diagnostics& d = res.diagnostics;
  if (!o.dump_interp.empty()) write_flo(o.dump_interp, *d.interpolated);
  if (!o.dump_labels.empty()) {
    if (!d.labeling) throw std::invalid_argument("--dump-labels needs --distance approx or mixed");
    write_label_pgm(o.dump_labels, d.labeling->label);
  }
  if (!o.viz.empty()) write_image(o.viz, flow_to_color(res.flow));

  if (o.timings) {
    std::cerr << "matches: " << d.matches_in << " in, " << d.after_saliency << " after saliency, " << d.after_consistency
              << " after consistency, " << d.matches_interpolated << " interpolated\n";
    if (d.la_fallbacks) std::cerr << "affine fallbacks: " << d.la_fallbacks << "\n";
    for (const auto& t : d.timings) std::cerr << t.stage << ": " << t.seconds << " s\n";
    std::cerr << "total: " << d.total_seconds << " s\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Sparse-to-dense optical flow with edge-aware interpolation and variational refinement"};
  app.add_option("IMG1", o.image1, "first frame (PGM/PPM)")->required();
  app.add_option("IMG2", o.image2, "second frame (PGM/PPM)")->required();
  app.add_option("--matches", o.matches, "match file: x1 y1 x2 y2 per line")->required();
  app.add_option("--out", o.out, "output .flo")->required();
  auto* edges = app.add_option("--edges", o.edges, "external edge map (PGM or PFM)");
  app.add_option("--edges-mode", o.edges_mode, "cost map computed from image 1")
      ->check(CLI::IsMember({"gradient"}))
      ->excludes(edges);
  app.add_option("--interp", o.interp, "estimator")->check(CLI::IsMember({"la", "nw"}))->capture_default_str();
  app.add_option("--k", o.k, "neighbours per estimate (default 100 for la, 25 for nw)")->check(CLI::PositiveNumber);
  app.add_option("--a", o.a, "kernel coefficient")->capture_default_str();
  app.add_option("--la-lambda", o.la_lambda, "affine damping")->capture_default_str();
  app.add_option("--distance", o.distance, "distance mode")
      ->check(CLI::IsMember({"approx", "exact", "euclidean", "mixed"}))
      ->capture_default_str();
  app.add_option("--match-scale", o.match_scale, "multiply match coordinates")->capture_default_str();
  app.add_option("--prune-saliency", o.prune_saliency, "min structure eigenvalue, or off")->capture_default_str();
  app.add_option("--prune-consistency", o.prune_consistency, "max residual in px, or off")->capture_default_str();
  app.add_flag("--no-variational", o.no_variational, "output the interpolated field");
  app.add_option("--fp-iters", o.var.fp_iters, "fixed-point iterations")->capture_default_str();
  app.add_option("--sor-iters", o.var.sor_iters, "SOR sweeps per iteration")->capture_default_str();
  app.add_option("--sor-omega", o.var.sor_omega, "SOR relaxation")->capture_default_str();
  app.add_option("--kappa", o.var.kappa, "smoothness edge sensitivity")->capture_default_str();
  app.add_option("--dump-interp", o.dump_interp, "write the interpolated field (.flo)");
  app.add_option("--dump-labels", o.dump_labels, "write the Voronoi labels (16-bit PGM)");
  app.add_option("--viz", o.viz, "write a colour rendering of the output (PPM)");
  app.add_flag("--timings", o.timings, "print stage timings and match counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    return run(o);
  } catch (const FormatError& e) {
    std::cerr << "epicflow: " << e.what() << "\n";
    return kExitFormat;
  } catch (const EmptyMatchError& e) {
    std::cerr << "epicflow: " << e.what() << "\n";
    return kExitEmptyMatches;
  } catch (const NumericError& e) {
    std::cerr << "epicflow: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "epicflow: " << e.what() << "\n";
    return kExitUsage;
  }
}
