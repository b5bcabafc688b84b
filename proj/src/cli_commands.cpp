#include "widfs/cli.hpp"

#include "widfs/calib.hpp"
#include "widfs/config.hpp"
#include "widfs/errors.hpp"
#include "widfs/io.hpp"
#include "widfs/synth.hpp"
#include "widfs/tracker.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>

namespace widfs::cli {

namespace {

SystemConfig config_or_default(const std::string& path) {
  if (path.empty()) return SystemConfig{};
  return load_config(path);
}

// Tracks use the config embedded in the trace unless one is given explicitly.
SystemConfig pick_config(const SystemConfig& embedded,
                         const std::string& config_path) {
  if (config_path.empty()) return embedded;
  return load_config(config_path);
}

int cmd_simulate(const std::string& scene_path, const std::string& config_path,
                 const std::string& out_path, const std::string& gt_path,
                 bool binary, std::optional<std::uint64_t> seed) {
  auto scene = synth::load_scene(scene_path);
  if (seed) scene.seed = *seed;
  const SystemConfig cfg = config_or_default(config_path);
  auto [trace, gt] = synth::generate_trace(scene, cfg);
  io::write_trace(out_path, trace, cfg, binary);
  if (!gt_path.empty()) io::write_ground_truth(gt_path, gt);
  std::cout << "wrote " << trace.size() << " samples to " << out_path << "\n";
  return 0;
}

int cmd_calibrate(const std::string& left_path, const std::string& right_path,
                  const std::string& config_path, const std::string& out_path,
                  int reps) {
  auto [left, left_cfg] = io::read_trace(left_path);
  auto [right, right_cfg] = io::read_trace(right_path);
  const SystemConfig cfg =
      config_path.empty() ? left_cfg : load_config(config_path);
  (void)right_cfg;
  const auto result = calib::calibrate(left, right, cfg, reps);
  calib::save_calib(result, out_path);
  std::cout << "spacing_12 " << result.spacing_12 * 100.0 << " cm, spacing_23 "
            << result.spacing_23 * 100.0 << " cm, phase_12 " << result.phase_12
            << " rad, phase_23 " << result.phase_23 << " rad, phase_31 "
            << result.phase_31 << " rad\n";
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_detect(const std::string& trace_path, const std::string& config_path,
               const std::string& out_path) {
  auto [trace, embedded] = io::read_trace(trace_path);
  const SystemConfig cfg = pick_config(embedded, config_path);
  cfg.validate();
  const int n_sw = static_cast<int>(trace.size()) / cfg.N_p;
  if (n_sw < cfg.M) {
    throw PreconditionError(
        "detect: trace too short; need at least M*N_p = " +
        std::to_string(static_cast<long long>(cfg.M) * cfg.N_p) + " samples");
  }
  std::vector<tracker::SubwindowFeatures> features;
  features.reserve(n_sw);
  for (int s = 0; s < n_sw; ++s) {
    CsiWindow w;
    w.window_index = s;
    w.samples.assign(trace.begin() + s * cfg.N_p,
                     trace.begin() + (s + 1) * cfg.N_p);
    features.push_back(tracker::process_subwindow(w, nullptr, cfg));
  }
  std::ofstream f(out_path);
  if (!f) throw InputError("detect: cannot write '" + out_path + "'");
  const int eps = (cfg.M + 1) / 2;
  for (int l0 = 0; l0 + cfg.M <= n_sw; ++l0) {
    const double p = tracker::motion_confidence(
        std::span<const tracker::SubwindowFeatures>(features.data() + l0,
                                                    cfg.M),
        cfg);
    const auto& center = features[l0 + eps - 1];
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g",
                  0.5 * (center.t_start + center.t_end));
    f << buf << " ";
    std::snprintf(buf, sizeof(buf), "%.17g", p);
    f << buf << "\n";
  }
  if (!f) throw InputError("detect: write failed for '" + out_path + "'");
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_track(const std::string& trace_path, const std::string& calib_path,
              const std::string& config_path, const std::string& out_path,
              bool streaming) {
  const auto calib_result = calib::load_calib(calib_path);
  auto [trace, embedded] = io::read_trace(trace_path);
  const SystemConfig cfg = pick_config(embedded, config_path);
  cfg.validate();
  const std::size_t minimum =
      static_cast<std::size_t>(cfg.M) * static_cast<std::size_t>(cfg.N_p);
  if (trace.size() < minimum) {
    throw PreconditionError(
        "track: trace too short; need at least M*N_p = " +
        std::to_string(minimum) + " samples, got " +
        std::to_string(trace.size()));
  }

  std::vector<tracker::TrackOutput> outputs;
  std::optional<io::LatencyStats> latency;
  if (streaming) {
    // Incremental feed, timing each completed joint window.
    tracker::TrackPipeline pipeline(&calib_result, cfg);
    std::vector<double> window_ms;
    auto window_start = std::chrono::steady_clock::now();
    std::size_t fed = 0;
    for (const auto& sample : trace) {
      pipeline.push_sample(sample);
      ++fed;
      if (fed % cfg.N_p == 0) {
        auto ready = pipeline.drain();
        if (!ready.empty()) {
          const auto now = std::chrono::steady_clock::now();
          window_ms.push_back(
              std::chrono::duration<double, std::milli>(now - window_start)
                  .count());
          outputs.insert(outputs.end(), ready.begin(), ready.end());
        }
        window_start = std::chrono::steady_clock::now();
      }
    }
    if (!window_ms.empty()) {
      const double mean =
          std::accumulate(window_ms.begin(), window_ms.end(), 0.0) /
          window_ms.size();
      double var = 0.0;
      for (double v : window_ms) var += (v - mean) * (v - mean);
      var /= window_ms.size();
      latency = io::LatencyStats{mean, std::sqrt(var)};
      std::cerr << "streaming: " << window_ms.size() << " joint windows, "
                << mean << " ms mean per window\n";
    }
  } else {
    outputs = tracker::track_trace(trace, &calib_result, cfg);
  }
  io::write_trajectory(out_path, outputs, latency);
  std::cout << "wrote " << outputs.size() << " joint windows to " << out_path
            << "\n";
  return 0;
}

int cmd_eval(const std::string& traj_path, const std::string& gt_path,
             const std::string& out_path) {
  auto [rows, latency] = io::read_trajectory(traj_path);
  const auto gt = io::read_ground_truth(gt_path);
  const auto report = io::evaluate(rows, gt, latency);
  const std::string text = io::format_report(report);
  if (!out_path.empty()) {
    std::ofstream f(out_path);
    if (!f) throw InputError("eval: cannot write '" + out_path + "'");
    f << text;
    if (!f) throw InputError("eval: write failed for '" + out_path + "'");
  }
  std::cout << text;
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{
      "Passive WiFi tracking pipeline: simulate CSI traces, calibrate "
      "hardware, detect motion, track, evaluate"};
  app.require_subcommand(1);

  // simulate
  std::string sim_scene, sim_config, sim_out, sim_gt;
  bool sim_binary = false;
  std::uint64_t sim_seed = 0;
  bool sim_seed_set = false;
  auto* sim = app.add_subcommand(
      "simulate", "Generate a synthetic CSI trace from a scene file");
  sim->add_option("--scene", sim_scene, "Scene spec file")->required();
  sim->add_option("--config", sim_config,
                  "System config file (defaults used when omitted)");
  sim->add_option("--out", sim_out, "Output trace file")->required();
  sim->add_option("--ground-truth", sim_gt, "Output ground-truth file");
  sim->add_flag("--binary", sim_binary, "Write a packed binary trace body");
  sim->add_option("--seed", sim_seed, "Override the scene's random seed")
      ->each([&](const std::string&) { sim_seed_set = true; });

  // calibrate
  std::string cal_left, cal_right, cal_config, cal_out;
  int cal_reps = 20;
  auto* cal = app.add_subcommand(
      "calibrate",
      "Recover antenna spacings and hardware phases from two static traces");
  cal->add_option("--left", cal_left, "Trace with TX on the antenna-1 side")
      ->required();
  cal->add_option("--right", cal_right, "Trace with TX on the antenna-3 side")
      ->required();
  cal->add_option("--config", cal_config, "System config file");
  cal->add_option("--reps", cal_reps, "Sub-window repetitions per side")
      ->check(CLI::PositiveNumber);
  cal->add_option("--out", cal_out, "Output calibration file")->required();

  // detect
  std::string det_trace, det_config, det_out;
  auto* det = app.add_subcommand(
      "detect", "Emit per-joint-window motion confidence for a trace");
  det->add_option("--trace", det_trace, "Input trace file")->required();
  det->add_option("--config", det_config,
                  "System config override (default: config embedded in trace)");
  det->add_option("--out", det_out, "Output P-series file")->required();

  // track
  std::string trk_trace, trk_calib, trk_config, trk_out;
  bool trk_streaming = false;
  auto* trk = app.add_subcommand("track", "Track a person through a trace");
  trk->add_option("--trace", trk_trace, "Input trace file")->required();
  trk->add_option("--calib", trk_calib, "Calibration file")->required();
  trk->add_option("--config", trk_config,
                  "System config override (default: config embedded in trace)");
  trk->add_option("--out", trk_out, "Output trajectory file")->required();
  trk->add_flag("--streaming", trk_streaming,
                "Feed samples incrementally and record per-window latency");

  // eval
  std::string ev_traj, ev_gt, ev_out;
  auto* ev = app.add_subcommand(
      "eval", "Compare a trajectory against ground truth");
  ev->add_option("--trajectory", ev_traj, "Trajectory file")->required();
  ev->add_option("--ground-truth", ev_gt, "Ground-truth file")->required();
  ev->add_option("--out", ev_out, "Also write the report to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed()) {
      return cmd_simulate(sim_scene, sim_config, sim_out, sim_gt, sim_binary,
                          sim_seed_set ? std::optional<std::uint64_t>(sim_seed)
                                       : std::nullopt);
    }
    if (cal->parsed()) {
      return cmd_calibrate(cal_left, cal_right, cal_config, cal_out, cal_reps);
    }
    if (det->parsed()) return cmd_detect(det_trace, det_config, det_out);
    if (trk->parsed()) {
      return cmd_track(trk_trace, trk_calib, trk_config, trk_out,
                       trk_streaming);
    }
    if (ev->parsed()) return cmd_eval(ev_traj, ev_gt, ev_out);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace widfs::cli
