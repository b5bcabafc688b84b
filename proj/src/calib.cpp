#include "widfs/calib.hpp"

#include "widfs/dfs.hpp"
#include "widfs/errors.hpp"
#include "widfs/tracker.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace widfs::calib {

void CalibResult::validate(double f_c) const {
  const double half_wl = kSpeedOfLight / (2.0 * f_c);
  for (auto [name, v] : {std::pair{"spacing_12", spacing_12},
                         std::pair{"spacing_23", spacing_23}}) {
    if (std::abs(v - half_wl) > 0.25 * half_wl) {
      throw PreconditionError(
          std::string("calibration: ") + name +
          " outside +/-25% of the nominal half-wavelength (got " +
          std::to_string(v * 100.0) + " cm)");
    }
  }
  if (std::abs(wrap_pi(phase_12 + phase_23 + phase_31)) > 1e-9) {
    throw PreconditionError(
        "calibration: pairwise phases violate cycle consistency");
  }
}

CalibMeasurement extract_measurement(const CsiTrace& trace, Side side,
                                     const SystemConfig& cfg,
                                     int max_repetitions) {
  const int n_sw = static_cast<int>(trace.size()) / cfg.N_p;
  if (n_sw < 1) {
    throw PreconditionError(
        "calibration: trace shorter than one sub-window (" +
        std::to_string(cfg.N_p) + " samples)");
  }
  const int reps = std::min(n_sw, max_repetitions);
  CalibMeasurement m;
  m.side = side;
  m.u12_phases.reserve(reps);
  m.u23_phases.reserve(reps);
  for (int s = 0; s < reps; ++s) {
    CsiWindow w;
    w.window_index = s;
    w.samples.assign(trace.begin() + s * cfg.N_p,
                     trace.begin() + (s + 1) * cfg.N_p);
    const auto splits = dfs::split_static_dynamic(dfs::cross_correlate(w));
    std::array<double, kSubcarriers> a12{}, a23{};
    for (int j = 0; j < kSubcarriers; ++j) {
      a12[j] = std::arg(splits.s12.u(j));
      a23[j] = std::arg(splits.s23.u(j));
    }
    m.u12_phases.push_back(a12);
    m.u23_phases.push_back(a23);
  }
  return m;
}

namespace {

const std::vector<std::array<double, kSubcarriers>>& pair_phases(
    const CalibMeasurement& m, Pair pair) {
  return pair == Pair::k12 ? m.u12_phases : m.u23_phases;
}

void check_reliable(const Complex& sum, std::size_t count,
                    const char* op_name) {
  if (std::abs(sum) < 0.5 * static_cast<double>(count)) {
    throw PreconditionError(std::string(op_name) +
                            ": inconsistent repetitions (phasor sum below "
                            "half of count)");
  }
}

}  // namespace

double estimate_spacing(const CalibMeasurement& left,
                        const CalibMeasurement& right, Pair pair, double f_c,
                        double nominal_m) {
  const auto& lp = pair_phases(left, pair);
  const auto& rp = pair_phases(right, pair);
  if (lp.empty() || rp.empty()) {
    throw PreconditionError("estimate_spacing: need >= 1 repetition per side");
  }
  if (lp.size() != rp.size()) {
    throw PreconditionError(
        "estimate_spacing: repetition counts differ between sides");
  }
  Complex sum{};
  std::size_t count = 0;
  for (std::size_t r = 0; r < lp.size(); ++r) {
    for (int j = 0; j < kSubcarriers; ++j) {
      sum += std::polar(1.0, lp[r][j] - rp[r][j]);
      ++count;
    }
  }
  check_reliable(sum, count, "estimate_spacing");
  const double half = std::arg(sum) / 2.0;
  // The half-difference determines the spacing only modulo half-wavelengths;
  // pick the integer count bringing it closest to the nominal spacing.
  double best = std::numeric_limits<double>::infinity();
  for (int k_int = -4; k_int <= 4; ++k_int) {
    const double d = std::abs((half + kPi * k_int) * kSpeedOfLight /
                              (2.0 * kPi * f_c));
    if (std::abs(d - nominal_m) < std::abs(best - nominal_m)) best = d;
  }
  return best;
}

double estimate_phase_offset(const CalibMeasurement& left,
                             const CalibMeasurement& right, Pair pair,
                             double f_c, double spacing_m) {
  const auto& lp = pair_phases(left, pair);
  const auto& rp = pair_phases(right, pair);
  if (lp.empty() || rp.empty()) {
    throw PreconditionError(
        "estimate_phase_offset: need >= 1 repetition per side");
  }
  const double geom = 2.0 * kPi * f_c * spacing_m / kSpeedOfLight;
  Complex sum{};
  std::size_t count = 0;
  for (const auto& rep : lp) {
    for (int j = 0; j < kSubcarriers; ++j) {
      sum += std::polar(1.0, rep[j] - geom);
      ++count;
    }
  }
  for (const auto& rep : rp) {
    for (int j = 0; j < kSubcarriers; ++j) {
      sum += std::polar(1.0, rep[j] + geom);
      ++count;
    }
  }
  check_reliable(sum, count, "estimate_phase_offset");
  return wrap_2pi(std::arg(sum));
}

namespace {

void enforce_static(const CsiTrace& trace, const SystemConfig& cfg,
                    const char* label) {
  const int n_sw = static_cast<int>(trace.size()) / cfg.N_p;
  std::vector<tracker::SubwindowFeatures> features;
  features.reserve(n_sw);
  for (int s = 0; s < n_sw; ++s) {
    CsiWindow w;
    w.window_index = s;
    w.samples.assign(trace.begin() + s * cfg.N_p,
                     trace.begin() + (s + 1) * cfg.N_p);
    features.push_back(tracker::process_subwindow(w, nullptr, cfg));
  }
  const int group = std::min<int>(cfg.M, n_sw);
  for (int l0 = 0; l0 + group <= n_sw; ++l0) {
    const double p = tracker::motion_confidence(
        std::span<const tracker::SubwindowFeatures>(features.data() + l0,
                                                    group),
        cfg);
    if (p >= cfg.motion_threshold) {
      throw PreconditionError(std::string("calibration: motion detected in ") +
                              label + " trace (P=" + std::to_string(p) +
                              " at joint window " + std::to_string(l0) + ")");
    }
  }
}

}  // namespace

CalibResult calibrate(const CsiTrace& trace_left, const CsiTrace& trace_right,
                      const SystemConfig& cfg, int max_repetitions) {
  cfg.validate();
  if (max_repetitions < 1) {
    throw PreconditionError("calibration: max_repetitions must be >= 1");
  }
  // Identical traces mean the two placements were not actually swapped; the
  // half-difference then degenerates to the nominal rather than failing the
  // bound check, so detect it directly.
  if (trace_left.size() == trace_right.size()) {
    bool identical = !trace_left.empty();
    for (std::size_t k = 0; identical && k < trace_left.size(); ++k) {
      identical =
          trace_left[k].timestamp == trace_right[k].timestamp &&
          (trace_left[k].values.array() == trace_right[k].values.array())
              .all();
    }
    if (identical) {
      throw PreconditionError(
          "calibration: left and right traces are identical (same capture "
          "used twice?)");
    }
  }
  enforce_static(trace_left, cfg, "left");
  enforce_static(trace_right, cfg, "right");

  const auto left =
      extract_measurement(trace_left, Side::kLeft, cfg, max_repetitions);
  const auto right =
      extract_measurement(trace_right, Side::kRight, cfg, max_repetitions);

  CalibResult res;
  res.spacing_12 =
      estimate_spacing(left, right, Pair::k12, cfg.f_c, cfg.spacing_12);
  res.spacing_23 =
      estimate_spacing(left, right, Pair::k23, cfg.f_c, cfg.spacing_23);
  res.phase_12 =
      estimate_phase_offset(left, right, Pair::k12, cfg.f_c, res.spacing_12);
  res.phase_23 =
      estimate_phase_offset(left, right, Pair::k23, cfg.f_c, res.spacing_23);
  res.phase_31 = wrap_2pi(-(res.phase_12 + res.phase_23));
  res.validate(cfg.f_c);
  return res;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string format_calib(const CalibResult& c) {
  std::ostringstream out;
  out << "spacing_12 " << fmt(c.spacing_12) << "\n";
  out << "spacing_23 " << fmt(c.spacing_23) << "\n";
  out << "phase_12 " << fmt(c.phase_12) << "\n";
  out << "phase_23 " << fmt(c.phase_23) << "\n";
  out << "phase_31 " << fmt(c.phase_31) << "\n";
  return out.str();
}

CalibResult parse_calib(const std::string& text) {
  CalibResult c;
  bool seen[5] = {};
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key, val, extra;
    ls >> key >> val;
    if (key.empty()) continue;
    if (ls >> extra) {
      throw InputError("calib file: key '" + key + "' expects one value (line " +
                       std::to_string(lineno) + ")");
    }
    double v;
    try {
      size_t pos = 0;
      v = std::stod(val, &pos);
      if (pos != val.size()) throw std::invalid_argument(val);
    } catch (const std::exception&) {
      throw InputError("calib file: bad numeric value '" + val + "' (line " +
                       std::to_string(lineno) + ")");
    }
    if (key == "spacing_12") { c.spacing_12 = v; seen[0] = true; }
    else if (key == "spacing_23") { c.spacing_23 = v; seen[1] = true; }
    else if (key == "phase_12") { c.phase_12 = v; seen[2] = true; }
    else if (key == "phase_23") { c.phase_23 = v; seen[3] = true; }
    else if (key == "phase_31") { c.phase_31 = v; seen[4] = true; }
    else {
      throw InputError("calib file: unknown key '" + key + "' (line " +
                       std::to_string(lineno) + ")");
    }
  }
  for (bool s : seen) {
    if (!s) throw InputError("calib file: missing required keys");
  }
  return c;
}

CalibResult load_calib(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("calib file: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_calib(buf.str());
}

void save_calib(const CalibResult& calib, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw InputError("calib file: cannot write '" + path + "'");
  f << format_calib(calib);
  if (!f) throw InputError("calib file: write failed for '" + path + "'");
}

}  // namespace widfs::calib
