// epicflow-eval: endpoint-error metrics of an estimate against ground truth.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "epicflow/error.hpp"
#include "epicflow/evaluation.hpp"
#include "epicflow/io.hpp"
#include "epicflow/pipeline.hpp"

namespace {

using namespace epic;

void print_metric(const char* name, const std::optional<double>& v) {
  if (v)
    std::printf("%-12s %.6f\n", name, *v);
  else
    std::printf("%-12s -\n", name);
}

}  // namespace

int main(int argc, char** argv) {
  std::string est_path, gt_path, valid_path, occ_path;
  bool json = false;
  CLI::App app{"Average endpoint error of a flow estimate"};
  app.add_option("EST", est_path, "estimated flow (.flo)")->required();
  app.add_option("GT", gt_path, "ground-truth flow (.flo)")->required();
  app.add_option("--valid", valid_path, "PGM validity mask, nonzero where ground truth is invalid");
  app.add_option("--occ", occ_path, "PGM mask, nonzero where pixels are occluded");
  app.add_flag("--json", json, "print the report as JSON");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    const FlowFile est = read_flo(est_path);
    const FlowFile gt = read_flo(gt_path);
    if (!est.flow.same_shape(gt.flow)) throw FormatError("estimate and ground truth dimensions differ");

    // unknown ground-truth entries are never scored
    Mask invalid = gt.unknown;
    if (!valid_path.empty()) {
      const Mask flagged = read_mask(valid_path);
      if (!flagged.same_shape(gt.flow)) throw FormatError("validity mask dimensions differ");
      for (std::size_t i = 0; i < invalid.size(); ++i)
        if (flagged[i]) invalid[i] = 1;
    }
    std::optional<OcclusionMask> occ;
    if (!occ_path.empty()) {
      occ = read_mask(occ_path);
      if (!occ->same_shape(gt.flow)) throw FormatError("occlusion mask dimensions differ");
    }

    const EvalReport r = evaluate(est.flow, gt.flow, &invalid, occ ? &*occ : nullptr);
    if (json) {
      std::cout << to_json(r) << "\n";
    } else {
      print_metric("aee", r.aee);
      print_metric("aee_occ", r.aee_occ);
      print_metric("aee_noc", r.aee_noc);
      print_metric("aee_s0-10", r.aee_s0_10);
      print_metric("aee_s10-40", r.aee_s10_40);
      print_metric("aee_s40+", r.aee_s40plus);
      print_metric("out_all_3", r.out_all_3);
      print_metric("out_noc_3", r.out_noc_3);
      std::printf("%-12s %zu\n", "n_valid", r.n_valid);
    }
    return kExitOk;
  } catch (const FormatError& e) {
    std::cerr << "epicflow-eval: " << e.what() << "\n";
    return kExitFormat;
  } catch (const std::exception& e) {
    std::cerr << "epicflow-eval: " << e.what() << "\n";
    return kExitUsage;
  }
}
