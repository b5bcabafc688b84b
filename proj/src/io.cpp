#include "widfs/io.hpp"

#include "widfs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace widfs::io {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double to_double(const std::string& tok, const char* what, int lineno) {
  try {
    size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw InputError(std::string(what) + ": bad numeric value '" + tok +
                     "' (line " + std::to_string(lineno) + ")");
  }
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ls(line);
  std::vector<std::string> toks;
  std::string tok;
  while (ls >> tok) toks.push_back(tok);
  return toks;
}

constexpr const char* kTraceMagic = "WIDFS-TRACE v1";
constexpr const char* kGtMagic = "WIDFS-GT v1";
constexpr const char* kTrajMagic = "WIDFS-TRAJ v1";

}  // namespace

void write_trace(const std::string& path, const CsiTrace& trace,
                 const SystemConfig& cfg, bool binary_body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("trace: cannot write '" + path + "'");
  f << kTraceMagic << "\n";
  f << "body " << (binary_body ? "binary" : "text") << "\n";
  f << "samples " << trace.size() << "\n";
  {
    std::istringstream cfg_lines(format_config(cfg));
    std::string line;
    while (std::getline(cfg_lines, line)) f << "config " << line << "\n";
  }
  f << "end-header\n";
  if (binary_body) {
    std::vector<double> block(1 + 2 * kAntennas * kSubcarriers);
    for (const auto& s : trace) {
      std::size_t w = 0;
      block[w++] = s.timestamp;
      for (int i = 0; i < kAntennas; ++i) {
        for (int j = 0; j < kSubcarriers; ++j) {
          block[w++] = s.values(i, j).real();
          block[w++] = s.values(i, j).imag();
        }
      }
      f.write(reinterpret_cast<const char*>(block.data()),
              static_cast<std::streamsize>(block.size() * sizeof(double)));
    }
  } else {
    for (const auto& s : trace) {
      const std::string ts = fmt(s.timestamp);
      for (int i = 0; i < kAntennas; ++i) {
        for (int j = 0; j < kSubcarriers; ++j) {
          f << ts << " " << (i + 1) << " " << (j + 1) << " "
            << fmt(s.values(i, j).real()) << " " << fmt(s.values(i, j).imag())
            << "\n";
        }
      }
    }
  }
  if (!f) throw InputError("trace: write failed for '" + path + "'");
}

std::pair<CsiTrace, SystemConfig> read_trace(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("trace: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(f, line) || line != kTraceMagic) {
    throw InputError("trace: '" + path + "' is not a " +
                     std::string(kTraceMagic) + " file");
  }
  bool binary_body = false;
  std::size_t samples = 0;
  bool saw_samples = false;
  std::ostringstream config_text;
  int lineno = 1;
  bool in_header = true;
  while (in_header) {
    if (!std::getline(f, line)) {
      throw InputError("trace: truncated header in '" + path + "'");
    }
    ++lineno;
    if (line == "end-header") break;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "body") {
      std::string kind;
      ls >> kind;
      if (kind == "binary") binary_body = true;
      else if (kind == "text") binary_body = false;
      else throw InputError("trace: unknown body kind '" + kind + "'");
    } else if (key == "samples") {
      long long v = -1;
      ls >> v;
      if (v < 0) throw InputError("trace: bad sample count");
      samples = static_cast<std::size_t>(v);
      saw_samples = true;
    } else if (key == "config") {
      std::string rest;
      std::getline(ls, rest);
      config_text << rest << "\n";
    } else {
      throw InputError("trace: unknown header key '" + key + "' (line " +
                       std::to_string(lineno) + ")");
    }
  }
  if (!saw_samples) throw InputError("trace: header missing sample count");
  SystemConfig cfg = parse_config(config_text.str());

  CsiTrace trace;
  trace.reserve(samples);
  if (binary_body) {
    const std::size_t doubles = 1 + 2 * kAntennas * kSubcarriers;
    std::vector<double> block(doubles);
    for (std::size_t s = 0; s < samples; ++s) {
      f.read(reinterpret_cast<char*>(block.data()),
             static_cast<std::streamsize>(doubles * sizeof(double)));
      if (static_cast<std::size_t>(f.gcount()) != doubles * sizeof(double)) {
        throw InputError("trace: truncated binary body in '" + path + "'");
      }
      CsiSample sample;
      std::size_t w = 0;
      sample.timestamp = block[w++];
      for (int i = 0; i < kAntennas; ++i) {
        for (int j = 0; j < kSubcarriers; ++j) {
          sample.values(i, j) = Complex(block[w], block[w + 1]);
          w += 2;
        }
      }
      trace.push_back(sample);
    }
  } else {
    CsiSample sample;
    int expected_i = 0, expected_j = 0;
    bool block_open = false;
    while (std::getline(f, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto toks = split_ws(line);
      if (toks.size() != 5) {
        throw InputError("trace: body row needs 5 fields (line " +
                         std::to_string(lineno) + ")");
      }
      const double t = to_double(toks[0], "trace", lineno);
      const int ant = static_cast<int>(to_double(toks[1], "trace", lineno));
      const int sub = static_cast<int>(to_double(toks[2], "trace", lineno));
      if (ant < 1 || ant > kAntennas || sub < 1 || sub > kSubcarriers) {
        throw InputError("trace: antenna/subcarrier index out of range (line " +
                         std::to_string(lineno) + ")");
      }
      if (!block_open) {
        sample = CsiSample{};
        sample.timestamp = t;
        block_open = true;
      } else if (t != sample.timestamp) {
        throw InputError("trace: incomplete 3x30 block before timestamp " +
                         toks[0] + " (line " + std::to_string(lineno) + ")");
      }
      if (ant - 1 != expected_i || sub - 1 != expected_j) {
        throw InputError("trace: rows out of order (line " +
                         std::to_string(lineno) + ")");
      }
      sample.values(ant - 1, sub - 1) =
          Complex(to_double(toks[3], "trace", lineno),
                  to_double(toks[4], "trace", lineno));
      if (++expected_j == kSubcarriers) {
        expected_j = 0;
        if (++expected_i == kAntennas) {
          expected_i = 0;
          if (!trace.empty() && sample.timestamp <= trace.back().timestamp) {
            throw InputError("trace: timestamps not increasing (line " +
                             std::to_string(lineno) + ")");
          }
          trace.push_back(sample);
          block_open = false;
        }
      }
    }
    if (block_open) {
      throw InputError("trace: trailing incomplete sample block in '" + path +
                       "'");
    }
  }
  if (trace.size() != samples) {
    throw InputError("trace: header promised " + std::to_string(samples) +
                     " samples, body holds " + std::to_string(trace.size()));
  }
  return {std::move(trace), cfg};
}

void write_ground_truth(const std::string& path,
                        const synth::GroundTruth& gt) {
  std::ofstream f(path);
  if (!f) throw InputError("ground truth: cannot write '" + path + "'");
  f << kGtMagic << "\n";
  f << "samples " << gt.timestamp.size() << "\n";
  f << "end-header\n";
  for (std::size_t k = 0; k < gt.timestamp.size(); ++k) {
    f << fmt(gt.timestamp[k]) << " " << fmt(gt.position[k].x) << " "
      << fmt(gt.position[k].y) << " " << fmt(gt.path_length[k]) << " "
      << fmt(gt.dfs_hz[k]) << " " << fmt(gt.aoa_deg[k]) << "\n";
  }
  if (!f) throw InputError("ground truth: write failed for '" + path + "'");
}

synth::GroundTruth read_ground_truth(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("ground truth: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(f, line) || line != kGtMagic) {
    throw InputError("ground truth: '" + path + "' is not a " +
                     std::string(kGtMagic) + " file");
  }
  int lineno = 1;
  std::size_t samples = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line == "end-header") break;
    const auto toks = split_ws(line);
    if (toks.size() == 2 && toks[0] == "samples") {
      samples = static_cast<std::size_t>(to_double(toks[1], "ground truth",
                                                   lineno));
    } else {
      throw InputError("ground truth: unknown header line " +
                       std::to_string(lineno));
    }
  }
  synth::GroundTruth gt;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto toks = split_ws(line);
    if (toks.size() != 6) {
      throw InputError("ground truth: row needs 6 fields (line " +
                       std::to_string(lineno) + ")");
    }
    gt.timestamp.push_back(to_double(toks[0], "ground truth", lineno));
    gt.position.push_back({to_double(toks[1], "ground truth", lineno),
                           to_double(toks[2], "ground truth", lineno)});
    gt.path_length.push_back(to_double(toks[3], "ground truth", lineno));
    gt.dfs_hz.push_back(to_double(toks[4], "ground truth", lineno));
    gt.aoa_deg.push_back(to_double(toks[5], "ground truth", lineno));
  }
  if (gt.timestamp.size() != samples) {
    throw InputError("ground truth: header/body sample count mismatch");
  }
  return gt;
}

std::vector<TrajectoryRow> to_rows(
    const std::vector<tracker::TrackOutput>& outputs) {
  std::vector<TrajectoryRow> rows;
  rows.reserve(outputs.size());
  const double nan = std::nan("");
  for (const auto& o : outputs) {
    TrajectoryRow r;
    r.t = o.timestamp;
    r.p = o.motion_confidence;
    if (o.present) {
      r.aoa_deg = o.aoa_deg;
      r.dist_m = o.dist_m;
      r.dfs_hz = o.dfs_hz;
      r.x = o.has_position ? o.position.x : nan;
      r.y = o.has_position ? o.position.y : nan;
    } else {
      r.aoa_deg = r.dist_m = r.dfs_hz = r.x = r.y = nan;
    }
    rows.push_back(r);
  }
  return rows;
}

void write_trajectory(const std::string& path,
                      const std::vector<tracker::TrackOutput>& outputs,
                      const std::optional<LatencyStats>& latency) {
  std::ofstream f(path);
  if (!f) throw InputError("trajectory: cannot write '" + path + "'");
  f << kTrajMagic << "\n";
  f << "windows " << outputs.size() << "\n";
  if (latency) {
    f << "latency_ms " << fmt(latency->mean_ms) << " " << fmt(latency->std_ms)
      << "\n";
  }
  f << "end-header\n";
  for (const auto& r : to_rows(outputs)) {
    f << fmt(r.t) << " " << fmt(r.x) << " " << fmt(r.y) << " "
      << fmt(r.aoa_deg) << " " << fmt(r.dist_m) << " " << fmt(r.dfs_hz) << " "
      << fmt(r.p) << "\n";
  }
  if (!f) throw InputError("trajectory: write failed for '" + path + "'");
}

std::pair<std::vector<TrajectoryRow>, std::optional<LatencyStats>>
read_trajectory(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("trajectory: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(f, line) || line != kTrajMagic) {
    throw InputError("trajectory: '" + path + "' is not a " +
                     std::string(kTrajMagic) + " file");
  }
  int lineno = 1;
  std::size_t windows = 0;
  std::optional<LatencyStats> latency;
  while (std::getline(f, line)) {
    ++lineno;
    if (line == "end-header") break;
    const auto toks = split_ws(line);
    if (toks.size() == 2 && toks[0] == "windows") {
      windows = static_cast<std::size_t>(to_double(toks[1], "trajectory",
                                                   lineno));
    } else if (toks.size() == 3 && toks[0] == "latency_ms") {
      latency = LatencyStats{to_double(toks[1], "trajectory", lineno),
                             to_double(toks[2], "trajectory", lineno)};
    } else {
      throw InputError("trajectory: unknown header line " +
                       std::to_string(lineno));
    }
  }
  std::vector<TrajectoryRow> rows;
  double prev_t = -std::numeric_limits<double>::infinity();
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto toks = split_ws(line);
    if (toks.size() != 7) {
      throw InputError("trajectory: row needs 7 fields (line " +
                       std::to_string(lineno) + ")");
    }
    TrajectoryRow r;
    r.t = to_double(toks[0], "trajectory", lineno);
    r.x = to_double(toks[1], "trajectory", lineno);
    r.y = to_double(toks[2], "trajectory", lineno);
    r.aoa_deg = to_double(toks[3], "trajectory", lineno);
    r.dist_m = to_double(toks[4], "trajectory", lineno);
    r.dfs_hz = to_double(toks[5], "trajectory", lineno);
    r.p = to_double(toks[6], "trajectory", lineno);
    if (!(r.t > prev_t)) {
      throw InputError("trajectory: timestamps must increase (line " +
                       std::to_string(lineno) + ")");
    }
    prev_t = r.t;
    rows.push_back(r);
  }
  if (rows.size() != windows) {
    throw InputError("trajectory: header/body window count mismatch");
  }
  return {std::move(rows), latency};
}

namespace {

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return 0.0;
  const double idx = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(idx);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = idx - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace

EvalReport evaluate(const std::vector<TrajectoryRow>& trajectory,
                    const synth::GroundTruth& gt,
                    const std::optional<LatencyStats>& latency) {
  if (gt.timestamp.empty()) throw PreconditionError("evaluate: empty ground truth");
  if (trajectory.empty()) throw PreconditionError("evaluate: empty trajectory");
  const double gt_t0 = gt.timestamp.front();
  const double gt_t1 = gt.timestamp.back();
  if (trajectory.back().t < gt_t0 || trajectory.front().t > gt_t1) {
    throw PreconditionError(
        "evaluate: trajectory and ground-truth time ranges are disjoint");
  }

  EvalReport rep;
  rep.windows_total = trajectory.size();
  rep.latency = latency;
  std::vector<double> err, err_x, err_y;
  std::size_t cursor = 1;
  for (const auto& r : trajectory) {
    if (!std::isfinite(r.x) || !std::isfinite(r.y)) continue;
    if (r.t < gt_t0 || r.t > gt_t1) continue;
    while (cursor < gt.timestamp.size() && gt.timestamp[cursor] < r.t) {
      ++cursor;
    }
    if (cursor >= gt.timestamp.size()) break;
    const std::size_t i1 = cursor;
    const std::size_t i0 = i1 - 1;
    const double t0 = gt.timestamp[i0];
    const double t1 = gt.timestamp[i1];
    const Position p0 = gt.position[i0];
    const Position p1 = gt.position[i1];
    if (!std::isfinite(p0.x) || !std::isfinite(p1.x)) continue;
    const double a = t1 > t0 ? (r.t - t0) / (t1 - t0) : 0.0;
    const double gx = p0.x + a * (p1.x - p0.x);
    const double gy = p0.y + a * (p1.y - p0.y);
    const double dx = r.x - gx;
    const double dy = r.y - gy;
    err.push_back(std::hypot(dx, dy));
    err_x.push_back(std::abs(dx));
    err_y.push_back(std::abs(dy));
  }
  if (err.empty()) {
    throw PreconditionError(
        "evaluate: no evaluable windows (no positions inside the ground-truth "
        "range)");
  }
  rep.windows_evaluated = err.size();
  rep.median_m = percentile(err, 0.5);
  rep.p90_m = percentile(err, 0.9);
  rep.median_x_m = percentile(err_x, 0.5);
  rep.median_y_m = percentile(err_y, 0.5);
  return rep;
}

std::string format_report(const EvalReport& r) {
  std::ostringstream out;
  out << "windows_total " << r.windows_total << "\n";
  out << "windows_evaluated " << r.windows_evaluated << "\n";
  out << "median_error_m " << fmt(r.median_m) << "\n";
  out << "p90_error_m " << fmt(r.p90_m) << "\n";
  out << "median_error_x_m " << fmt(r.median_x_m) << "\n";
  out << "median_error_y_m " << fmt(r.median_y_m) << "\n";
  if (r.latency) {
    out << "latency_mean_ms " << fmt(r.latency->mean_ms) << "\n";
    out << "latency_std_ms " << fmt(r.latency->std_ms) << "\n";
  }
  return out.str();
}

}  // namespace widfs::io
