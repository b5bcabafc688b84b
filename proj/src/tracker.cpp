#include "widfs/tracker.hpp"

#include "widfs/dsp.hpp"
#include "widfs/errors.hpp"

#include <algorithm>
#include <cmath>

namespace widfs::tracker {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
  return 0.5 * (v[mid - 1] + hi);
}

dyncomp::HwPhases hw_phases(const calib::CalibResult* calib,
                            const SystemConfig& cfg) {
  if (calib) return {calib->phase_12, calib->phase_23, calib->phase_31};
  return {cfg.hw_phase_12, cfg.hw_phase_23, cfg.hw_phase_31};
}

std::pair<double, double> spacings(const calib::CalibResult* calib,
                                   const SystemConfig& cfg) {
  if (calib) return {calib->spacing_12, calib->spacing_23};
  return {cfg.spacing_12, cfg.spacing_23};
}

bool any_weight(std::span<const SubwindowFeatures> jw) {
  for (const auto& sw : jw) {
    if (sw.z.w.cwiseAbs().sum() > 0) return true;
  }
  return false;
}

// Grid argmax with deterministic tie-breaking toward a reference candidate.
class ArgmaxTracker {
 public:
  explicit ArgmaxTracker(double reference) : ref_(reference) {}
  void offer(double candidate, double value) {
    const double tol = 1e-12 * std::max(1.0, std::abs(best_value_));
    if (value > best_value_ + tol) {
      best_value_ = value;
      best_ = candidate;
    } else if (value >= best_value_ - tol &&
               std::abs(candidate - ref_) < std::abs(best_ - ref_)) {
      best_ = candidate;
    }
  }
  double best() const { return best_; }
  bool valid() const { return best_value_ > -1.0; }

 private:
  double ref_;
  double best_ = 0.0;
  double best_value_ = -2.0;
};

}  // namespace

SubwindowFeatures process_subwindow(const CsiWindow& window,
                                    const calib::CalibResult* calib,
                                    const SystemConfig& cfg) {
  if (window.samples.size() != static_cast<std::size_t>(cfg.N_p)) {
    throw PreconditionError("process_subwindow: window must hold N_p samples");
  }
  SubwindowFeatures f;
  f.window_index = window.window_index;
  f.t_start = window.samples.front().timestamp;
  f.t_end = window.samples.back().timestamp;

  const auto cc = dfs::cross_correlate(window);
  const auto denoised = dfs::denoise(cc, cfg);
  const auto splits = dfs::split_static_dynamic(denoised);
  f.delta_w = dfs::build_delta_w(splits);
  f.dfs = dfs::estimate_dfs(f.delta_w, cfg, window.window_index);
  f.u12 = splits.s12.u;
  f.u23 = splits.s23.u;
  f.u31 = splits.s31.u;

  const auto power_split = dyncomp::split_power(dyncomp::self_correlate(window));
  if (dsp::cos_fit_resolvable(f.dfs.f_d, cfg.N_p, cfg.dt())) {
    const auto refined = dyncomp::refine_power(power_split.v, f.dfs.f_d, cfg);
    f.z = dyncomp::reconstruct_components(refined, power_split.u, f.dfs.f_d,
                                          f.u12, f.u31,
                                          hw_phases(calib, cfg), cfg);
  }
  f.z.window_index = window.window_index;
  return f;
}

double motion_confidence(std::span<const SubwindowFeatures> jw,
                         const SystemConfig& cfg) {
  if (jw.empty()) throw PreconditionError("motion_confidence: empty window");
  const double dt = cfg.dt();
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& sw : jw) {
    const int n = static_cast<int>(sw.delta_w.cols());
    for (int j = 0; j < sw.delta_w.rows(); ++j) {
      Complex acc{};
      for (int k = 0; k < n; ++k) {
        const Complex w = sw.delta_w(j, k);
        const double mag = std::abs(w);
        // Cancellation residue in a fully static window is ~1e-15 yet phase
        // coherent; normalizing it to a unit phasor would read as motion.
        if (mag > 1e-12) {
          // unit phasor of DeltaW, derotated by the estimated Doppler
          acc += w / mag * std::polar(1.0, 2.0 * kPi * sw.dfs.f_d * k * dt);
        }
      }
      total += std::abs(acc);
      count += n;
    }
  }
  return total / static_cast<double>(count);
}

std::optional<double> estimate_aoa(std::span<const SubwindowFeatures> jw,
                                   const SystemConfig& cfg,
                                   const calib::CalibResult* calib,
                                   std::optional<double> prev_deg) {
  if (!any_weight(jw)) return std::nullopt;
  const auto fj = subcarrier_frequencies(cfg);
  const auto [sp12, sp23] = spacings(calib, cfg);
  const std::array<double, kAntennas> offs{0.0, sp12, sp12 + sp23};
  ArgmaxTracker argmax(prev_deg.value_or(0.0));
  for (double th = -90.0; th <= 90.0 + 1e-9; th += cfg.aoa_grid_step) {
    const double s = std::sin(deg_to_rad(th));
    CsiMatrix kernel;
    for (int i = 0; i < kAntennas; ++i) {
      for (int j = 0; j < kSubcarriers; ++j) {
        kernel(i, j) =
            std::polar(1.0, 2.0 * kPi * fj[j] / kSpeedOfLight * offs[i] * s);
      }
    }
    double val = 0.0;
    for (const auto& sw : jw) {
      for (int j = 0; j < kSubcarriers; ++j) {
        Complex acc{};
        for (int i = 0; i < kAntennas; ++i) acc += sw.z.z(i, j) * kernel(i, j);
        val += std::abs(acc);
      }
    }
    argmax.offer(th, val);
  }
  return argmax.best();
}

std::optional<double> estimate_distance(std::span<const SubwindowFeatures> jw,
                                        const SystemConfig& cfg,
                                        std::optional<double> prev_m) {
  if (!any_weight(jw)) return std::nullopt;
  const auto fj = subcarrier_frequencies(cfg);
  const int m = static_cast<int>(jw.size());
  const int eps = (m + 1) / 2;  // 1-indexed center
  const double step = cfg.N_p / cfg.f_s;

  // Rotate every sub-window's components to the joint-window center using the
  // accumulated per-sub-window Doppler phase, then sum coherently.
  CsiMatrix combined = CsiMatrix::Zero();
  for (int l = 0; l < m; ++l) {
    Complex zd{1.0, 0.0};
    if (l + 1 < eps) {
      double acc = 0.0;
      for (int q = l; q < eps - 1; ++q) acc += jw[q].dfs.f_d;
      zd = std::polar(1.0, -2.0 * kPi * acc * step);
    } else if (l + 1 > eps) {
      double acc = 0.0;
      for (int q = eps - 1; q < l; ++q) acc += jw[q].dfs.f_d;
      zd = std::polar(1.0, 2.0 * kPi * acc * step);
    }
    combined += zd * jw[l].z.z;
  }

  ArgmaxTracker argmax(prev_m.value_or(cfg.d_s1 + cfg.dist_grid_step));
  for (double d = cfg.d_s1 + cfg.dist_grid_step; d <= cfg.dist_max + 1e-9;
       d += cfg.dist_grid_step) {
    double val = 0.0;
    for (int i = 0; i < kAntennas; ++i) {
      Complex acc{};
      for (int j = 0; j < kSubcarriers; ++j) {
        acc += combined(i, j) *
               std::polar(1.0, 2.0 * kPi * fj[j] / kSpeedOfLight * d);
      }
      val += std::abs(acc);
    }
    argmax.offer(d, val);
  }
  return argmax.best();
}

double estimate_tx_aoa(std::span<const SubwindowFeatures> jw,
                       const SystemConfig& cfg,
                       const calib::CalibResult* calib) {
  if (jw.empty()) throw PreconditionError("estimate_tx_aoa: empty window");
  const auto fj = subcarrier_frequencies(cfg);
  const auto [sp12, sp23] = spacings(calib, cfg);
  const auto hw = hw_phases(calib, cfg);
  const std::array<double, kAntennas> offs{0.0, sp12, sp12 + sp23};
  const int m = static_cast<int>(jw.size());

  // Per-antenna static phasors chained from the calibrated pair terms:
  // antenna 1 is the reference; antennas 2 and 3 accumulate conjugated pair
  // products. Magnitudes are normalized per antenna so no element dominates.
  CMat a2(m, kSubcarriers), a3(m, kSubcarriers);
  const Complex rot12 = std::polar(1.0, -hw.p12);
  const Complex rot23 = std::polar(1.0, -hw.p23);
  for (int l = 0; l < m; ++l) {
    for (int j = 0; j < kSubcarriers; ++j) {
      const Complex u12 = jw[l].u12(j) * rot12;
      const Complex u23 = jw[l].u23(j) * rot23;
      a2(l, j) = std::conj(u12);
      a3(l, j) = std::conj(u12) * std::conj(u23);
    }
  }
  const double n2 = a2.cwiseAbs().mean() + 1e-30;
  const double n3 = a3.cwiseAbs().mean() + 1e-30;
  a2 /= n2;
  a3 /= n3;

  double best = 0.0, best_v = -1.0;
  for (double th = -90.0; th <= 90.0 + 1e-9; th += cfg.aoa_grid_step) {
    const double s = std::sin(deg_to_rad(th));
    double val = 0.0;
    for (int j = 0; j < kSubcarriers; ++j) {
      const double base = 2.0 * kPi * fj[j] / kSpeedOfLight * s;
      const Complex k2 = std::polar(1.0, base * offs[1]);
      const Complex k3 = std::polar(1.0, base * offs[2]);
      Complex acc{};
      for (int l = 0; l < m; ++l) {
        acc += 1.0 + a2(l, j) * k2 + a3(l, j) * k3;
      }
      val += std::abs(acc);
    }
    if (val > best_v) {
      best_v = val;
      best = th;
    }
  }
  return best;
}

double Kalman1D::step(double z, double drift) {
  if (!x) {
    x = z;
    p = 10.0 * meas_var;  // inflated first-measurement variance
    return *x;
  }
  const double xp = *x + drift;
  const double pp = p + process_var;
  const double gain = pp / (pp + meas_var);
  x = xp + gain * (z - xp);
  p = (1.0 - gain) * pp;
  return *x;
}

void Kalman1D::predict(double drift) {
  if (!x) return;
  x = *x + drift;
  p += process_var;
}

TrackState make_track_state(const SystemConfig& cfg) {
  TrackState st;
  const double lambda = kSpeedOfLight / cfg.f_c;
  st.sin_aoa.process_var = 0.3;
  st.sin_aoa.meas_var = cfg.kalman_sin_aoa_var;
  // Distance process noise from the Doppler drive: one DFS uncertainty step
  // (kalman_dfs_var_hz) integrated over a sub-window, with a 0.1 s window.
  const double dfs_step = lambda * 0.1 * cfg.kalman_dfs_var_hz;
  st.dist.process_var = dfs_step * dfs_step;
  st.dist.meas_var = cfg.kalman_dist_var_m * cfg.kalman_dist_var_m;
  return st;
}

Refined kalman_refine(TrackState& state, double aoa_deg, double dist_m,
                      double f_d_median, const SystemConfig& cfg) {
  const double lambda = kSpeedOfLight / cfg.f_c;
  const double drift = lambda * f_d_median * cfg.N_p / cfg.f_s;

  bool accept = true;
  if (state.dist.x) {
    const double pred = *state.dist.x + drift;
    const double resid = dist_m - pred;
    double mad = 0.0;
    if (state.accepted_residuals.size() >= 4) {
      std::vector<double> recent(state.accepted_residuals.begin(),
                                 state.accepted_residuals.end());
      const double med = median(recent);
      for (double& v : recent) v = std::abs(v - med);
      mad = median(recent);
    }
    const double threshold = std::max(3.0 * 1.4826 * mad, 0.5);
    if (std::abs(resid) > threshold) {
      ++state.consecutive_rejects;
      if (state.consecutive_rejects < 3) {
        accept = false;
      } else {
        state.consecutive_rejects = 0;  // force re-acquisition
      }
    } else {
      state.consecutive_rejects = 0;
    }
    if (accept) {
      state.accepted_residuals.push_back(resid);
      while (state.accepted_residuals.size() > 7) {
        state.accepted_residuals.pop_front();
      }
    }
  }

  Refined out;
  if (accept) {
    const double sin_hat =
        state.sin_aoa.step(std::sin(deg_to_rad(aoa_deg)));
    state.dist.step(dist_m, drift);
    out.aoa_deg = rad_to_deg(std::asin(std::clamp(sin_hat, -1.0, 1.0)));
    out.dist_m = *state.dist.x;
    out.accepted = true;
  } else {
    state.dist.predict(drift);
    out.aoa_deg = rad_to_deg(
        std::asin(std::clamp(state.sin_aoa.x.value_or(0.0), -1.0, 1.0)));
    out.dist_m = *state.dist.x;
    out.accepted = false;
  }
  return out;
}

void coast(TrackState& state, double f_d_median, const SystemConfig& cfg) {
  const double lambda = kSpeedOfLight / cfg.f_c;
  state.dist.predict(lambda * f_d_median * cfg.N_p / cfg.f_s);
}

Position localize(double aoa_deg, double dist_m, double tx_aoa_deg,
                  double d_s1) {
  const double tx = deg_to_rad(aoa_deg);
  const double ts = deg_to_rad(tx_aoa_deg);
  const double denom = dist_m - d_s1 * std::cos(tx - ts);
  if (std::abs(denom) < 1e-6) {
    throw PreconditionError(
        "localize: geometric degeneracy (target on the TX-RX baseline "
        "extension)");
  }
  const double range = (dist_m * dist_m - d_s1 * d_s1) / (2.0 * denom);
  return {range * std::sin(tx), range * std::cos(tx)};
}

TrackPipeline::TrackPipeline(const calib::CalibResult* calib,
                             const SystemConfig& cfg)
    : cfg_(cfg), state_(make_track_state(cfg)) {
  cfg_.validate();
  if (calib) calib_ = *calib;
}

void TrackPipeline::push_sample(const CsiSample& sample) {
  buffer_.push_back(sample);
  if (static_cast<int>(buffer_.size()) == cfg_.N_p) {
    process_ready_window();
    buffer_.clear();
  }
}

void TrackPipeline::process_ready_window() {
  CsiWindow w;
  w.window_index = next_window_++;
  w.samples = buffer_;
  features_.push_back(
      process_subwindow(w, calib_ ? &*calib_ : nullptr, cfg_));
  if (static_cast<int>(features_.size()) > cfg_.M) features_.pop_front();
  if (static_cast<int>(features_.size()) == cfg_.M) emit_joint_window();
}

void TrackPipeline::emit_joint_window() {
  const int m = cfg_.M;
  std::vector<SubwindowFeatures> jw_store(features_.begin(), features_.end());
  std::span<const SubwindowFeatures> jw(jw_store);
  const calib::CalibResult* calib = calib_ ? &*calib_ : nullptr;
  const int eps = (m + 1) / 2;

  TrackOutput out;
  const auto& center = jw[eps - 1];
  out.timestamp = 0.5 * (center.t_start + center.t_end);
  out.motion_confidence = motion_confidence(jw, cfg_);

  if (out.motion_confidence < cfg_.motion_threshold) {
    ready_.push_back(out);
    return;
  }

  std::vector<double> fds(m);
  for (int l = 0; l < m; ++l) fds[l] = jw[l].dfs.f_d;
  const double fd_med = median(fds);

  tx_aoa_history_.push_back(estimate_tx_aoa(jw, cfg_, calib));
  const double tx_aoa = median(tx_aoa_history_);

  const auto aoa = estimate_aoa(jw, cfg_, calib, prev_aoa_deg_);
  const auto dist = estimate_distance(jw, cfg_, prev_dist_m_);

  Refined refined;
  if (aoa && dist) {
    refined = kalman_refine(state_, *aoa, *dist, fd_med, cfg_);
  } else if (state_.sin_aoa.x) {
    coast(state_, fd_med, cfg_);
    refined.aoa_deg = rad_to_deg(
        std::asin(std::clamp(*state_.sin_aoa.x, -1.0, 1.0)));
    refined.dist_m = *state_.dist.x;
  } else {
    // Motion present but nothing to localize with yet.
    ready_.push_back(out);
    return;
  }
  prev_aoa_deg_ = refined.aoa_deg;
  prev_dist_m_ = refined.dist_m;

  out.present = true;
  out.aoa_deg = refined.aoa_deg;
  out.dist_m = refined.dist_m;
  out.tx_aoa_deg = tx_aoa;
  out.dfs_hz = fd_med;
  try {
    out.position = localize(refined.aoa_deg, refined.dist_m, tx_aoa, cfg_.d_s1);
    out.has_position = true;
  } catch (const PreconditionError&) {
    out.has_position = false;  // degenerate geometry this window; keep going
  }
  ready_.push_back(out);
}

std::vector<TrackOutput> TrackPipeline::drain() {
  std::vector<TrackOutput> out;
  out.swap(ready_);
  return out;
}

std::vector<TrackOutput> track_trace(const CsiTrace& trace,
                                     const calib::CalibResult* calib,
                                     const SystemConfig& cfg) {
  const std::size_t minimum =
      static_cast<std::size_t>(cfg.M) * static_cast<std::size_t>(cfg.N_p);
  if (trace.size() < minimum) {
    throw PreconditionError(
        "track_trace: trace too short; need at least M*N_p = " +
        std::to_string(minimum) + " samples, got " +
        std::to_string(trace.size()));
  }
  TrackPipeline pipeline(calib, cfg);
  std::vector<TrackOutput> out;
  for (const auto& sample : trace) {
    pipeline.push_sample(sample);
    auto ready = pipeline.drain();
    out.insert(out.end(), ready.begin(), ready.end());
  }
  return out;
}

}  // namespace widfs::tracker
