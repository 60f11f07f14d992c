#pragma once

// Single-scale variational refinement of a dense flow: robust colour and
// gradient constancy data terms with local normalisation, edge-weighted
// robust smoothness, fixed-point linearisation around the warped second
// image and SOR for the linear systems.

#include <vector>

#include "epicflow/edges.hpp"
#include "epicflow/image.hpp"

namespace epic {

struct VarParams {
  int fp_iters = 5;         // outer fixed-point iterations; 0 returns the init flow
  int sor_iters = 30;       // SOR sweeps per linear solve
  double sor_omega = 1.6;   // relaxation, in (0, 2)
  double kappa = 5.0;       // smoothness weight alpha = exp(-kappa |grad I|)
  double delta = 1.0;       // colour constancy weight
  double gamma = 0.7;       // gradient constancy weight
  double eps_psi = 1e-3;    // Psi(s^2) = sqrt(s^2 + eps^2)
  double zeta = 0.1;        // normalisation 1 / (|grad|^2 + zeta^2), zeta in 0-255 intensity units
  int max_backtracks = 8;   // step halvings when a step would raise the energy

  void validate() const;
};

struct WarpResult {
  Image warped;
  Mask out_of_bounds;
};

/// Keys bicubic (a = -0.5) sample with replicated borders.
double bicubic_sample(const Grid<double>& plane, double x, double y);

/// Samples image2 at x + flow(x). Pixels whose sample point lies outside
/// [0, w-1] x [0, h-1] are flagged out-of-bounds.
WarpResult warp_image(const Image& image2, const FlowField& flow);

/// Total energy of `flow`; data terms are dropped at out-of-bounds pixels.
double energy(const Image& image1, const Image& image2, const FlowField& flow, const VarParams& params,
              const SmoothnessWeights& alpha);

struct RefineStats {
  std::vector<double> energies;    // energies[0] for the init, then one per fixed-point iteration
  std::vector<double> step_sizes;  // accepted fraction of each increment (0 when rejected)
};

/// Runs params.fp_iters outer iterations from `init`. Each one warps image2,
/// freezes the robust weights, solves for the increment with SOR and accepts
/// the largest step in {1, 1/2, ...} that does not raise the energy.
/// Throws NumericError if non-finite values appear.
FlowField refine(const Image& image1, const Image& image2, const FlowField& init, const VarParams& params,
                 RefineStats* stats = nullptr);

}  // namespace epic
