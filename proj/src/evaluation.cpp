#include "epicflow/evaluation.hpp"

#include <charconv>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "epicflow/match_prep.hpp"

namespace epic {
namespace {

struct Accumulator {
  double sum = 0.0;
  std::size_t n = 0;
  void add(double v) { sum += v; ++n; }
  std::optional<double> mean() const {
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  }
};

std::string number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general);
  return std::string(buf, ptr);
}

std::string number(const std::optional<double>& v) { return v ? number(*v) : std::string(); }

}  // namespace

EvalReport evaluate(const FlowField& estimate, const FlowField& truth, const Mask* invalid,
                    const OcclusionMask* occluded) {
  if (!estimate.same_shape(truth)) throw std::invalid_argument("estimate and ground truth dimensions differ");
  if (invalid && !invalid->same_shape(truth)) throw std::invalid_argument("validity mask dimensions differ");
  if (occluded && !occluded->same_shape(truth)) throw std::invalid_argument("occlusion mask dimensions differ");

  Accumulator all, occ, noc, bin0, bin1, bin2;
  std::size_t out_all = 0, out_noc = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (invalid && (*invalid)[i]) continue;
    const double epe = (estimate[i] - truth[i]).norm();
    const double mag = truth[i].norm();
    const bool is_occ = occluded && (*occluded)[i];
    all.add(epe);
    out_all += epe > 3.0;
    if (occluded) {
      if (is_occ) {
        occ.add(epe);
      } else {
        noc.add(epe);
        out_noc += epe > 3.0;
      }
    }
    (mag < 10.0 ? bin0 : mag < 40.0 ? bin1 : bin2).add(epe);
  }
  if (all.n == 0) throw std::invalid_argument("no valid pixels to evaluate");

  EvalReport r;
  r.n_valid = all.n;
  r.aee = *all.mean();
  r.out_all_3 = static_cast<double>(out_all) / static_cast<double>(all.n);
  if (occluded) {
    r.n_occ = occ.n;
    r.aee_occ = occ.mean();
    r.aee_noc = noc.mean();
    if (noc.n > 0) r.out_noc_3 = static_cast<double>(out_noc) / static_cast<double>(noc.n);
  }
  r.aee_s0_10 = bin0.mean();
  r.aee_s10_40 = bin1.mean();
  r.aee_s40plus = bin2.mean();
  r.n_s0_10 = bin0.n;
  r.n_s10_40 = bin1.n;
  r.n_s40plus = bin2.n;
  return r;
}

std::string to_json(const EvalReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json j = {
      {"aee", r.aee},
      {"aee_occ", opt(r.aee_occ)},
      {"aee_noc", opt(r.aee_noc)},
      {"aee_s0_10", opt(r.aee_s0_10)},
      {"aee_s10_40", opt(r.aee_s10_40)},
      {"aee_s40plus", opt(r.aee_s40plus)},
      {"n_s0_10", r.n_s0_10},
      {"n_s10_40", r.n_s10_40},
      {"n_s40plus", r.n_s40plus},
      {"out_all_3", r.out_all_3},
      {"out_noc_3", opt(r.out_noc_3)},
      {"n_valid", r.n_valid},
      {"n_occ", r.n_occ},
  };
  return j.dump(2);
}

Image flow_to_color(const FlowField& flow, std::optional<double> max_norm) {
  Image out(flow.width(), flow.height(), 3, 1.0);
  double scale = 0.0;
  if (max_norm) {
    scale = *max_norm;
  } else {
    std::vector<double> mags;
    mags.reserve(flow.size());
    for (const auto& v : flow.values()) mags.push_back(v.norm());
    scale = percentile(std::move(mags), 0.99);
  }
  if (!(scale > 0.0)) return out;

  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      const Vec2 f = flow(x, y);
      const double sat = std::min(1.0, f.norm() / scale);
      if (sat == 0.0) continue;
      double hue = std::atan2(f.y, f.x) * 180.0 / std::numbers::pi;
      if (hue < 0.0) hue += 360.0;
      // HSV with V = 1: channel = 1 - S * (1 - pure_hue_channel)
      const double h6 = hue / 60.0;
      const double frac = h6 - std::floor(h6);
      double r = 0, g = 0, b = 0;
      switch (static_cast<int>(std::floor(h6)) % 6) {
        case 0: r = 1; g = frac; b = 0; break;
        case 1: r = 1 - frac; g = 1; b = 0; break;
        case 2: r = 0; g = 1; b = frac; break;
        case 3: r = 0; g = 1 - frac; b = 1; break;
        case 4: r = frac; g = 0; b = 1; break;
        default: r = 1; g = 0; b = 1 - frac; break;
      }
      out(x, y, 0) = 1.0 - sat * (1.0 - r);
      out(x, y, 1) = 1.0 - sat * (1.0 - g);
      out(x, y, 2) = 1.0 - sat * (1.0 - b);
    }
  }
  return out;
}

std::string SweepResult::rows_csv() const {
  std::ostringstream os;
  os << "density,corruption,seed,aee\n";
  for (const auto& r : rows) os << number(r.density) << ',' << number(r.corruption) << ',' << r.seed << ',' << number(r.aee) << '\n';
  return os.str();
}

std::string SweepResult::summary_csv() const {
  std::ostringstream os;
  os << "density,corruption,runs,mean_aee,mean_aee_noc\n";
  for (const auto& s : summary)
    os << number(s.density) << ',' << number(s.corruption) << ',' << s.runs << ',' << number(s.mean_aee) << ','
       << number(s.mean_aee_noc) << '\n';
  return os.str();
}

SweepResult sensitivity_sweep(const Image& image1, const Image& image2, const FlowField& truth,
                              const OcclusionMask& occluded, const std::vector<double>& densities,
                              const std::vector<double>& corruptions, const std::vector<std::uint64_t>& seeds,
                              const PipelineConfig& config, const CostMap* edges, const Mask* invalid) {
  if (densities.empty() || corruptions.empty() || seeds.empty())
    throw std::invalid_argument("sweep lists must not be empty");
  if (!occluded.same_shape(truth)) throw std::invalid_argument("occlusion mask dimensions differ");

  // matches are only drawn where the ground truth is usable
  OcclusionMask excluded = occluded;
  if (invalid)
    for (std::size_t i = 0; i < excluded.size(); ++i) excluded[i] = excluded[i] || (*invalid)[i];

  PipelineConfig cfg = config;
  cfg.prune.saliency_threshold.reset();

  SweepResult result;
  for (double density : densities) {
    for (double corruption : corruptions) {
      Accumulator aee, aee_noc;
      for (std::uint64_t seed : seeds) {
        SweepRow row{density, corruption, seed, std::nullopt, std::nullopt};
        try {
          const MatchSet matches = synthesize_matches(truth, excluded, {density, corruption, seed});
          const PipelineResult run = epicflow(image1, image2, matches, cfg, edges);
          const EvalReport rep = evaluate(run.flow, truth, invalid, &occluded);
          row.aee = rep.aee;
          row.aee_noc = rep.aee_noc;
          aee.add(rep.aee);
          if (rep.aee_noc) aee_noc.add(*rep.aee_noc);
        } catch (const std::exception&) {
          // recorded as a missing cell
        }
        result.rows.push_back(row);
      }
      result.summary.push_back({density, corruption, aee.n, aee.mean(), aee_noc.mean()});
    }
  }
  return result;
}

}  // namespace epic
