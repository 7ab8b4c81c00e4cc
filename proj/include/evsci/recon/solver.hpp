#pragma once

#include <optional>
#include <vector>

#include "evsci/events/repr.hpp"
#include "evsci/sci/forward.hpp"

namespace evsci::recon {

enum class Algorithm { gap_tv, admm_tv };

Algorithm parse_algorithm(const std::string& name);
std::string algorithm_name(Algorithm a);

struct ReconSettings {
  Algorithm algorithm = Algorithm::gap_tv;
  int max_iters = 100;
  double tol = 1e-4;          // relative frame change stopping threshold
  double tv_weight = 0.07;    // in [0,1]-intensity units
  int tv_inner_iters = 10;
  double event_weight = 0.1;  // 0 disables event fusion
  double admm_rho = 0.01;
  bool acceleration = true;   // accelerated GAP updates
};

void validate(const ReconSettings& cfg);

struct ReconReport {
  int iterations_run = 0;
  double final_residual = 0.0;           // ||y - Phi s|| / ||y||
  std::vector<double> residual_trace;    // one entry per iteration
  double wall_time_s = 0.0;              // measured, not part of any artifact
};

struct ReconResult {
  scene::FrameSequence frames;
  ReconReport report;
};

// Approximate prox of weight * anisotropic TV via a fixed number of dual
// projection steps; weight 0 returns the input unchanged. Reflective
// boundaries (forward differences vanish at the far edges).
Image tv_denoise(const Image& img, double weight, int inner_iters);

// Explicit objective 0.5*||u - x||^2 + weight*TV_aniso(u), for tests.
double tv_objective(const Image& u, const Image& x, double weight);

// Analytic gradient in linear intensity of
//   C_e = sum_b || log(I_{b+1}+eps) - log(I_b+eps) - T*S_{b,b+1} ||^2
// where S is the signed polarity map of slice b. Expects B-1 slices for B
// frames.
std::vector<Image> event_consistency_grad(const std::vector<Image>& frames,
                                          const std::vector<events::EventSlice>& slices,
                                          const events::EventCameraModel& cam);

// Decode B frames from a raw (un-normalized) snapshot. When slices are given
// and event_weight > 0, each iteration takes one preconditioned gradient step
// on the event-consistency term after the TV stage. `init` overrides the
// default normalized-backprojection initialization.
ReconResult reconstruct(const sci::Snapshot& snap, const sci::MaskStack& masks,
                        const std::vector<events::EventSlice>& slices,
                        const events::EventCameraModel& cam, const ReconSettings& cfg,
                        double frame_interval_s,
                        const scene::FrameSequence* init = nullptr);

}  // namespace evsci::recon
