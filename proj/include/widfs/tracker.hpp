#pragma once

#include "widfs/calib.hpp"
#include "widfs/config.hpp"
#include "widfs/dfs.hpp"
#include "widfs/dyncomp.hpp"
#include "widfs/types.hpp"

#include <deque>
#include <optional>
#include <span>
#include <vector>

namespace widfs::tracker {

// Everything the joint-window stage needs from one processed sub-window.
struct SubwindowFeatures {
  dfs::DfsEstimate dfs;
  dyncomp::DynamicComponentSet z;
  dfs::DeltaW delta_w;  // kSubcarriers x N_p
  CVec u12, u23, u31;   // static cross-correlation terms per subcarrier
  int window_index = 0;
  double t_start = 0.0;
  double t_end = 0.0;
};

// Full per-sub-window chain: cross-correlate, denoise, static/dynamic split,
// DFS estimate, power self-correlation, band refinement, component
// reconstruction. calib may be null (falls back to config hardware phases).
SubwindowFeatures process_subwindow(const CsiWindow& window,
                                    const calib::CalibResult* calib,
                                    const SystemConfig& cfg);

// Mean resultant length of the Doppler-derotated DeltaW phasors; in (0, 1],
// approximately 1 when a single Doppler line dominates, small for noise.
double motion_confidence(std::span<const SubwindowFeatures> jw,
                         const SystemConfig& cfg);

// Grid searches over the joint window. Return nullopt when every
// reconstruction weight in the window is zero ("no estimate"). Ties broken
// toward prev (or toward 0 deg / near distance when prev is absent).
std::optional<double> estimate_aoa(std::span<const SubwindowFeatures> jw,
                                   const SystemConfig& cfg,
                                   const calib::CalibResult* calib,
                                   std::optional<double> prev_deg);
std::optional<double> estimate_distance(std::span<const SubwindowFeatures> jw,
                                        const SystemConfig& cfg,
                                        std::optional<double> prev_m);

// Transmitter AoA from the static terms (coherent across sub-windows).
double estimate_tx_aoa(std::span<const SubwindowFeatures> jw,
                       const SystemConfig& cfg,
                       const calib::CalibResult* calib);

struct Kalman1D {
  double process_var = 0.0;
  double meas_var = 1.0;
  std::optional<double> x;
  double p = 0.0;

  // First call initializes from the measurement with inflated (x10) variance.
  double step(double z, double drift = 0.0);
  void predict(double drift = 0.0);
};

struct TrackState {
  Kalman1D sin_aoa;
  Kalman1D dist;
  std::deque<double> accepted_residuals;  // last few accepted innovation terms
  int consecutive_rejects = 0;
};

TrackState make_track_state(const SystemConfig& cfg);

struct Refined {
  double aoa_deg = 0.0;
  double dist_m = 0.0;
  bool accepted = false;  // false when the distance gate rejected the update
};

// Outlier-gated Kalman update. The distance transition follows the Doppler
// integral (drift = lambda * f_d_median * N_p / f_s); a measurement whose
// innovation exceeds max(3 * 1.4826 * MAD(recent), 0.5 m) is rejected and the
// state coasts, except every third consecutive reject is force-accepted so
// the tracker can re-acquire after a genuine jump.
Refined kalman_refine(TrackState& state, double aoa_deg, double dist_m,
                      double f_d_median, const SystemConfig& cfg);

// Predict-only step used when a joint window yields no usable measurement.
void coast(TrackState& state, double f_d_median, const SystemConfig& cfg);

// Bistatic geometry inversion. Throws PreconditionError when the person lies
// (numerically) on the TX-RX baseline extension.
Position localize(double aoa_deg, double dist_m, double tx_aoa_deg,
                  double d_s1);

struct TrackOutput {
  double timestamp = 0.0;  // midpoint of the joint window's center sub-window
  double motion_confidence = 0.0;
  bool present = false;
  double aoa_deg = 0.0;     // refined; valid when present
  double dist_m = 0.0;      // refined; valid when present
  double tx_aoa_deg = 0.0;  // running median; valid when present
  double dfs_hz = 0.0;      // joint-window median; valid when present
  bool has_position = false;
  Position position;
};

// Incremental pipeline: feed samples, collect outputs. Batch processing
// (track_trace) runs through this same class, so batch and streaming results
// are identical by construction.
class TrackPipeline {
 public:
  TrackPipeline(const calib::CalibResult* calib, const SystemConfig& cfg);

  void push_sample(const CsiSample& sample);
  // Outputs completed since the last call.
  std::vector<TrackOutput> drain();
  int windows_processed() const { return next_window_; }

 private:
  void process_ready_window();
  void emit_joint_window();

  SystemConfig cfg_;
  std::optional<calib::CalibResult> calib_;
  std::vector<CsiSample> buffer_;
  std::deque<SubwindowFeatures> features_;
  TrackState state_;
  std::vector<double> tx_aoa_history_;
  std::optional<double> prev_aoa_deg_;
  std::optional<double> prev_dist_m_;
  int next_window_ = 0;
  std::vector<TrackOutput> ready_;
};

// Batch tracking over a whole trace. Requires at least M * N_p samples.
std::vector<TrackOutput> track_trace(const CsiTrace& trace,
                                     const calib::CalibResult* calib,
                                     const SystemConfig& cfg);

}  // namespace widfs::tracker
