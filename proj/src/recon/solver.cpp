#include "evsci/recon/solver.hpp"

#include <chrono>
#include <cmath>

namespace evsci::recon {

Algorithm parse_algorithm(const std::string& name) {
  if (name == "gap_tv") return Algorithm::gap_tv;
  if (name == "admm_tv") return Algorithm::admm_tv;
  throw InvalidConfigError("unknown reconstruction algorithm: " + name);
}

std::string algorithm_name(Algorithm a) {
  return a == Algorithm::gap_tv ? "gap_tv" : "admm_tv";
}

void validate(const ReconSettings& cfg) {
  if (cfg.max_iters < 1) throw InvalidConfigError("recon: max_iters must be >= 1");
  if (cfg.tol < 0.0) throw InvalidConfigError("recon: tol must be >= 0");
  if (cfg.tv_weight < 0.0) throw InvalidConfigError("recon: tv_weight must be >= 0");
  if (cfg.tv_inner_iters < 0) throw InvalidConfigError("recon: tv_inner_iters must be >= 0");
  if (cfg.event_weight < 0.0) throw InvalidConfigError("recon: event_weight must be >= 0");
  if (cfg.admm_rho <= 0.0) throw InvalidConfigError("recon: admm_rho must be > 0");
}

Image tv_denoise(const Image& img, double weight, int inner_iters) {
  if (weight <= 0.0 || inner_iters <= 0) return img;
  const int rows = img.rows;
  const int cols = img.cols;
  // dual projection with step tau/w, tau below the 1/4 stability bound
  const double tau = 0.125;
  const double step = tau / weight;

  Image p1(rows, cols), p2(rows, cols), u = img;
  for (int it = 0; it < inner_iters; ++it) {
    // u = img - w * div p
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        double div = p1.at(r, c) + p2.at(r, c);
        if (c > 0) div -= p1.at(r, c - 1);
        if (r > 0) div -= p2.at(r - 1, c);
        u.at(r, c) = img.at(r, c) - weight * div;
      }
    // p -= (tau/w) * grad u, clamped component-wise to [-1, 1]
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        if (c + 1 < cols) {
          const double gx = u.at(r, c + 1) - u.at(r, c);
          p1.at(r, c) = std::clamp(p1.at(r, c) - step * gx, -1.0, 1.0);
        }
        if (r + 1 < rows) {
          const double gy = u.at(r + 1, c) - u.at(r, c);
          p2.at(r, c) = std::clamp(p2.at(r, c) - step * gy, -1.0, 1.0);
        }
      }
  }
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double div = p1.at(r, c) + p2.at(r, c);
      if (c > 0) div -= p1.at(r, c - 1);
      if (r > 0) div -= p2.at(r - 1, c);
      u.at(r, c) = img.at(r, c) - weight * div;
    }
  return u;
}

double tv_objective(const Image& u, const Image& x, double weight) {
  require_same_shape(u, x, "tv_objective");
  double fidelity = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u.data[i] - x.data[i];
    fidelity += 0.5 * d * d;
  }
  double tv = 0.0;
  for (int r = 0; r < u.rows; ++r)
    for (int c = 0; c < u.cols; ++c) {
      if (c + 1 < u.cols) tv += std::abs(u.at(r, c + 1) - u.at(r, c));
      if (r + 1 < u.rows) tv += std::abs(u.at(r + 1, c) - u.at(r, c));
    }
  return fidelity + weight * tv;
}

std::vector<Image> event_consistency_grad(const std::vector<Image>& frames,
                                          const std::vector<events::EventSlice>& slices,
                                          const events::EventCameraModel& cam) {
  const int b_frames = static_cast<int>(frames.size());
  if (b_frames < 2)
    throw DimensionMismatchError("event_consistency_grad: need at least 2 frames");
  if (static_cast<int>(slices.size()) != b_frames - 1)
    throw DimensionMismatchError("event_consistency_grad: need B-1 slices for B frames");

  const int rows = frames.front().rows;
  const int cols = frames.front().cols;
  const double eps = cam.log_eps;
  const double threshold = cam.threshold;

  // residuals D_b = log(I_{b+1}+eps) - log(I_b+eps) - T*S_b
  std::vector<Image> residuals;
  residuals.reserve(slices.size());
  for (int b = 0; b + 1 < b_frames; ++b) {
    require_same_shape(frames[b], frames[b + 1], "event_consistency_grad");
    const Image s_map = events::accumulate_image(slices[b], rows, cols);
    Image d(rows, cols);
    for (std::size_t i = 0; i < d.size(); ++i)
      d.data[i] = std::log(frames[b + 1].data[i] + eps) - std::log(frames[b].data[i] + eps) -
                  threshold * s_map.data[i];
    residuals.push_back(std::move(d));
  }

  std::vector<Image> grad(b_frames, Image(rows, cols));
  for (int b = 0; b < b_frames; ++b)
    for (std::size_t i = 0; i < grad[b].size(); ++i) {
      double acc = 0.0;
      if (b > 0) acc += residuals[b - 1].data[i];
      if (b + 1 < b_frames) acc -= residuals[b].data[i];
      grad[b].data[i] = 2.0 * acc / (frames[b].data[i] + eps);
    }
  return grad;
}

namespace {

double vec_norm(const std::vector<Image>& frames) {
  double s = 0.0;
  for (const Image& f : frames)
    for (double v : f.data) s += v * v;
  return std::sqrt(s);
}

double image_norm(const Image& img) {
  double s = 0.0;
  for (double v : img.data) s += v * v;
  return std::sqrt(s);
}

Image apply_phi(const std::vector<Image>& frames, const sci::MaskStack& masks) {
  Image y(masks.rows(), masks.cols());
  for (int b = 0; b < masks.frames(); ++b) {
    const double* m = masks.masks[b].data.data();
    const double* f = frames[b].data.data();
    for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += m[i] * f[i];
  }
  return y;
}

bool all_finite(const std::vector<Image>& frames) {
  for (const Image& f : frames)
    for (double v : f.data)
      if (!std::isfinite(v)) return false;
  return true;
}

// Multiplicative log-domain step on the event term: each frame moves by
// exp(-0.5 * lambda_e * grad * (I+eps)) so the effective step in log
// intensity is a damped Jacobi update on the pairwise log-difference chain.
void event_step(std::vector<Image>& frames, const std::vector<events::EventSlice>& slices,
                const events::EventCameraModel& cam, double event_weight) {
  const std::vector<Image> grad = event_consistency_grad(frames, slices, cam);
  const double eps = cam.log_eps;
  for (std::size_t b = 0; b < frames.size(); ++b)
    for (std::size_t i = 0; i < frames[b].size(); ++i) {
      const double value = frames[b].data[i] + eps;
      const double dlog =
          std::clamp(-0.5 * event_weight * grad[b].data[i] * value, -1.0, 1.0);
      frames[b].data[i] = std::exp(std::log(value) + dlog) - eps;
    }
}

}  // namespace

ReconResult reconstruct(const sci::Snapshot& snap, const sci::MaskStack& masks,
                        const std::vector<events::EventSlice>& slices,
                        const events::EventCameraModel& cam, const ReconSettings& cfg,
                        double frame_interval_s, const scene::FrameSequence* init) {
  validate(cfg);
  if (snap.normalized)
    throw InvalidConfigError("reconstruct: expects the raw un-normalized measurement");
  if (snap.data.rows != masks.rows() || snap.data.cols != masks.cols())
    throw DimensionMismatchError("reconstruct: snapshot dims must match masks");
  const int b_frames = masks.frames();
  const bool use_events = cfg.event_weight > 0.0 && !slices.empty();
  if (use_events && static_cast<int>(slices.size()) != b_frames - 1)
    throw DimensionMismatchError("reconstruct: need B-1 event slices for B frames");

  const auto t0 = std::chrono::steady_clock::now();
  const Image& y = snap.data;
  const Image mask_sum = masks.per_pixel_sum();
  const double y_norm = std::max(image_norm(y), 1e-300);

  // normalized backprojection; unobserved (zero mask sum) pixels start at 0
  // and are carried by the prior alone
  std::vector<Image> v(b_frames, Image(y.rows, y.cols));
  if (init) {
    if (init->count() != b_frames || init->rows() != y.rows || init->cols() != y.cols)
      throw DimensionMismatchError("reconstruct: init shape must match masks");
    v = init->frames;
  } else {
    for (int b = 0; b < b_frames; ++b)
      for (std::size_t i = 0; i < v[b].size(); ++i)
        v[b].data[i] = mask_sum.data[i] > 0.0
                           ? masks.masks[b].data[i] * y.data[i] / mask_sum.data[i]
                           : 0.0;
  }

  ReconReport report;
  Image accel_y = y;                                  // accumulated measurement (GAP)
  std::vector<Image> dual(b_frames, Image(y.rows, y.cols));  // ADMM multiplier

  for (int k = 1; k <= cfg.max_iters; ++k) {
    std::vector<Image> next(b_frames, Image(y.rows, y.cols));

    if (cfg.algorithm == Algorithm::gap_tv) {
      const Image yb = apply_phi(v, masks);
      Image r(y.rows, y.cols);
      if (cfg.acceleration) {
        for (std::size_t i = 0; i < r.size(); ++i) {
          accel_y.data[i] += y.data[i] - yb.data[i];
          r.data[i] = accel_y.data[i] - yb.data[i];
        }
      } else {
        for (std::size_t i = 0; i < r.size(); ++i) r.data[i] = y.data[i] - yb.data[i];
      }
      for (std::size_t i = 0; i < r.size(); ++i)
        r.data[i] = mask_sum.data[i] > 0.0 ? r.data[i] / mask_sum.data[i] : 0.0;
      for (int b = 0; b < b_frames; ++b) {
        Image s(y.rows, y.cols);
        for (std::size_t i = 0; i < s.size(); ++i)
          s.data[i] = v[b].data[i] + masks.masks[b].data[i] * r.data[i];
        next[b] = tv_denoise(s, cfg.tv_weight, cfg.tv_inner_iters);
      }
    } else {
      // ADMM splitting: x solves the rho-regularized data term in closed form
      // via the diagonal Phi Phi^T, theta takes the prox steps
      std::vector<Image> z(b_frames, Image(y.rows, y.cols));
      for (int b = 0; b < b_frames; ++b)
        for (std::size_t i = 0; i < z[b].size(); ++i)
          z[b].data[i] = v[b].data[i] + dual[b].data[i];
      const Image yb = apply_phi(z, masks);
      Image r(y.rows, y.cols);
      for (std::size_t i = 0; i < r.size(); ++i)
        r.data[i] = (y.data[i] - yb.data[i]) / (mask_sum.data[i] + cfg.admm_rho);
      for (int b = 0; b < b_frames; ++b) {
        Image x(y.rows, y.cols);
        for (std::size_t i = 0; i < x.size(); ++i)
          x.data[i] = z[b].data[i] + masks.masks[b].data[i] * r.data[i];
        Image prox_in(y.rows, y.cols);
        for (std::size_t i = 0; i < prox_in.size(); ++i)
          prox_in.data[i] = x.data[i] - dual[b].data[i];
        next[b] = tv_denoise(prox_in, cfg.tv_weight, cfg.tv_inner_iters);
        for (std::size_t i = 0; i < x.size(); ++i)
          dual[b].data[i] -= x.data[i] - next[b].data[i];
      }
    }

    // clamp before the event step so its log stays defined; the step itself
    // preserves positivity but can overshoot 1, hence the second clamp
    for (Image& f : next) clamp01(f);
    if (use_events) {
      event_step(next, slices, cam, cfg.event_weight);
      for (Image& f : next) clamp01(f);
    }

    if (!all_finite(next))
      throw DivergedError("reconstruct: non-finite iterate at iteration " + std::to_string(k), k);

    const Image yb = apply_phi(next, masks);
    double res = 0.0;
    for (std::size_t i = 0; i < yb.size(); ++i) {
      const double d = y.data[i] - yb.data[i];
      res += d * d;
    }
    report.residual_trace.push_back(std::sqrt(res) / y_norm);
    report.iterations_run = k;

    double change = 0.0;
    for (int b = 0; b < b_frames; ++b)
      for (std::size_t i = 0; i < next[b].size(); ++i) {
        const double d = next[b].data[i] - v[b].data[i];
        change += d * d;
      }
    const double denom = std::max(vec_norm(v), 1e-300);
    v = std::move(next);
    if (std::sqrt(change) / denom < cfg.tol) break;
  }

  report.final_residual = report.residual_trace.back();
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  ReconResult result;
  result.frames.frames = std::move(v);
  result.frames.frame_interval_s = frame_interval_s;
  result.report = report;
  return result;
}

}  // namespace evsci::recon
