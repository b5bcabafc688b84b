#pragma once

#include "widfs/config.hpp"
#include "widfs/synth.hpp"
#include "widfs/tracker.hpp"
#include "widfs/types.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace widfs::io {

// CSI trace file ("WIDFS-TRACE v1"): header carrying the format version, the
// full SystemConfig snapshot, the sample count, and the body encoding; body
// rows (timestamp, antenna 1-3, subcarrier 1-30, re, im) sorted by
// (timestamp, antenna, subcarrier), printed with 17 significant digits so a
// write/read round trip is value-exact. The optional binary body stores the
// same values as packed native doubles for throughput work.
void write_trace(const std::string& path, const CsiTrace& trace,
                 const SystemConfig& cfg, bool binary_body = false);
std::pair<CsiTrace, SystemConfig> read_trace(const std::string& path);

// Ground truth file ("WIDFS-GT v1"): rows (timestamp, x, y, path_length,
// dfs_hz, aoa_deg); absent-person samples hold nan coordinates.
void write_ground_truth(const std::string& path,
                        const synth::GroundTruth& gt);
synth::GroundTruth read_ground_truth(const std::string& path);

struct TrajectoryRow {
  double t = 0.0;
  double x = 0.0;  // nan when the window had no position
  double y = 0.0;
  double aoa_deg = 0.0;
  double dist_m = 0.0;
  double dfs_hz = 0.0;
  double p = 0.0;  // motion confidence
};

struct LatencyStats {
  double mean_ms = 0.0;
  double std_ms = 0.0;
};

// Trajectory file ("WIDFS-TRAJ v1"): one row per joint window (timestamp, x,
// y, aoa_deg, dist_m, dfs_hz, P). Windows without presence or position carry
// nan fields. Optional latency metadata from streaming runs.
void write_trajectory(const std::string& path,
                      const std::vector<tracker::TrackOutput>& outputs,
                      const std::optional<LatencyStats>& latency = {});
std::pair<std::vector<TrajectoryRow>, std::optional<LatencyStats>>
read_trajectory(const std::string& path);

std::vector<TrajectoryRow> to_rows(
    const std::vector<tracker::TrackOutput>& outputs);

struct EvalReport {
  std::size_t windows_total = 0;
  std::size_t windows_evaluated = 0;
  double median_m = 0.0;
  double p90_m = 0.0;
  double median_x_m = 0.0;  // per-axis absolute-error medians
  double median_y_m = 0.0;
  std::optional<LatencyStats> latency;
};

// Linear interpolation of ground truth onto trajectory timestamps, Euclidean
// errors, median / 90th percentile / per-axis medians. Throws when the time
// ranges are disjoint or no evaluable window exists.
EvalReport evaluate(const std::vector<TrajectoryRow>& trajectory,
                    const synth::GroundTruth& gt,
                    const std::optional<LatencyStats>& latency = {});

std::string format_report(const EvalReport& report);

}  // namespace widfs::io
