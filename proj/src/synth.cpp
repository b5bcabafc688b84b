#include "widfs/synth.hpp"

#include "widfs/errors.hpp"
#include "widfs/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace widfs::synth {

TrajectorySpec TrajectorySpec::make(Kind kind, double speed) {
  TrajectorySpec t;
  t.kind = kind;
  t.speed = speed;
  switch (kind) {
    case Kind::kNone:
      break;
    case Kind::kEllipse:
      t.params = {0.3, 3.0, 1.2, 0.8};
      break;
    case Kind::kLine:
      t.params = {-1.5, 2.5, 1.5, 2.5};
      break;
    case Kind::kRect:
      t.params = {0.0, 3.0, 2.4, 1.4};
      break;
    case Kind::kRadial:
      t.params = {40.0, 1.5, 0.0, 0.0};
      break;
  }
  return t;
}

Position TrajectorySpec::position(double t) const {
  switch (kind) {
    case Kind::kNone:
      return {0.0, 0.0};
    case Kind::kEllipse: {
      const double a = params[2], b = params[3];
      const double w = speed / ((a + b) / 2.0);
      return {params[0] + a * std::cos(w * t), params[1] + b * std::sin(w * t)};
    }
    case Kind::kLine: {
      const double x0 = params[0], y0 = params[1];
      const double x1 = params[2], y1 = params[3];
      const double len = std::hypot(x1 - x0, y1 - y0);
      const double period = len / speed;
      double ph = std::fmod(t / period, 2.0);
      if (ph < 0) ph += 2.0;
      const double s = ph <= 1.0 ? ph : 2.0 - ph;
      return {x0 + (x1 - x0) * s, y0 + (y1 - y0) * s};
    }
    case Kind::kRect: {
      const double w = params[2], h = params[3];
      const double cx = params[0], cy = params[1];
      const double perim = 2.0 * (w + h);
      double s = std::fmod(speed * t, perim);
      if (s < 0) s += perim;
      if (s < w) return {cx - w / 2 + s, cy - h / 2};
      s -= w;
      if (s < h) return {cx + w / 2, cy - h / 2 + s};
      s -= h;
      if (s < w) return {cx + w / 2 - s, cy + h / 2};
      s -= w;
      return {cx - w / 2, cy + h / 2 - s};
    }
    case Kind::kRadial: {
      const double th = deg_to_rad(params[0]);
      const double r = params[1] + speed * t;
      return {r * std::sin(th), r * std::cos(th)};
    }
  }
  return {0.0, 0.0};
}

void SceneSpec::validate() const {
  const double axis_norm = std::hypot(rx_array_axis[0], rx_array_axis[1]);
  if (std::abs(axis_norm - 1.0) > 1e-9) {
    throw PreconditionError("scene: rx_array_axis must be a unit vector");
  }
  for (std::size_t i = 0; i < static_reflectors.size(); ++i) {
    // Direct path has implicit unit amplitude and must dominate.
    if (!(static_reflectors[i].amplitude < 1.0) ||
        !(static_reflectors[i].amplitude >= 0.0)) {
      throw PreconditionError("scene: static reflector " + std::to_string(i) +
                              " amplitude must lie in [0, 1)");
    }
  }
  if (!(duration_s > 0)) throw PreconditionError("scene: duration_s must be positive");
  if (person_dropout < 0 || person_dropout >= 1) {
    throw PreconditionError("scene: person_dropout must lie in [0, 1)");
  }
  if (!(person_reflectivity >= 0)) {
    throw PreconditionError("scene: person_reflectivity must be nonnegative");
  }
}

namespace {

struct Vec2 {
  double x, y;
};

double norm(Vec2 v) { return std::hypot(v.x, v.y); }
Vec2 diff(Position a, Position b) { return {a.x - b.x, a.y - b.y}; }

}  // namespace

std::pair<CsiTrace, GroundTruth> generate_trace(const SceneSpec& scene,
                                                const SystemConfig& cfg) {
  scene.validate();
  cfg.validate();

  const auto fj = subcarrier_frequencies(cfg);
  const double dt = cfg.dt();
  const int n = static_cast<int>(scene.duration_s * cfg.f_s);
  if (n < 1) throw PreconditionError("scene: duration shorter than one sample");
  const int n_w = n / cfg.N_p + 1;

  const Vec2 axis{scene.rx_array_axis[0], scene.rx_array_axis[1]};
  const Vec2 boresight{-axis.y, axis.x};
  std::array<Position, kAntennas> ants;
  const double off12 = scene.hardware.true_spacing_12;
  const double off13 = off12 + scene.hardware.true_spacing_23;
  ants[0] = scene.rx_antenna1_position;
  ants[1] = {ants[0].x - off12 * axis.x, ants[0].y - off12 * axis.y};
  ants[2] = {ants[0].x - off13 * axis.x, ants[0].y - off13 * axis.y};

  // Static channel: direct path (unit amplitude) plus static reflectors.
  CsiMatrix hs = CsiMatrix::Zero();
  for (int i = 0; i < kAntennas; ++i) {
    const double d_direct = norm(diff(scene.tx_position, ants[i]));
    for (int j = 0; j < kSubcarriers; ++j) {
      hs(i, j) = std::polar(1.0, -2.0 * kPi * fj[j] / kSpeedOfLight * d_direct);
    }
    for (const auto& refl : scene.static_reflectors) {
      const double d = norm(diff(scene.tx_position, refl.position)) +
                       norm(diff(refl.position, ants[i]));
      for (int j = 0; j < kSubcarriers; ++j) {
        hs(i, j) += refl.amplitude *
                    std::polar(1.0, -2.0 * kPi * fj[j] / kSpeedOfLight * d);
      }
    }
  }
  const double ref_power = hs.cwiseAbs2().mean();
  const double sigma =
      std::sqrt(ref_power * std::pow(10.0, -scene.impairments.noise_snr_db / 10.0));

  std::array<Complex, kAntennas> hw;
  for (int i = 0; i < kAntennas; ++i) {
    hw[i] = scene.hardware.attenuation[i] *
            std::polar(1.0, -scene.hardware.phase[i]);
  }

  Rng rng_noise(scene.seed * 7919 + 1);
  Rng rng_impair(scene.seed * 7919 + 2);
  Rng rng_person(scene.seed * 7919 + 3);

  // AGC gain: multiplicative random walk, constant within each sub-window.
  std::vector<double> agc(n_w);
  double g = 1.0;
  for (int w = 0; w < n_w; ++w) {
    g = std::clamp(g * (1.0 + scene.impairments.agc_walk_sigma * rng_impair.normal()),
                   scene.impairments.agc_min, scene.impairments.agc_max);
    agc[w] = g;
  }
  std::vector<double> tau(n), fo(n);
  for (int k = 0; k < n; ++k) {
    tau[k] = rng_impair.uniform(-scene.impairments.timing_offset_max_s,
                                scene.impairments.timing_offset_max_s);
    fo[k] = rng_impair.uniform(0.0, 2.0 * kPi);
  }

  const bool person = scene.person_trajectory.kind != TrajectorySpec::Kind::kNone;

  // Person visibility: per-sample Bernoulli dropout, optionally scaled by a
  // slowly varying Rayleigh fade (AR(1) over sub-windows).
  std::vector<double> fade_w(n_w, 1.0);
  if (person && scene.person_fading) {
    const double a = 0.6;
    double gx = rng_person.normal(), gy = rng_person.normal();
    fade_w[0] = std::sqrt((gx * gx + gy * gy) / 2.0);
    for (int w = 1; w < n_w; ++w) {
      gx = a * gx + std::sqrt(1.0 - a * a) * rng_person.normal();
      gy = a * gy + std::sqrt(1.0 - a * a) * rng_person.normal();
      fade_w[w] = std::sqrt((gx * gx + gy * gy) / 2.0);
    }
  }

  CsiTrace trace(n);
  GroundTruth gt;
  gt.timestamp.resize(n);
  gt.position.assign(n, Position{std::nan(""), std::nan("")});
  gt.path_length.assign(n, std::nan(""));
  gt.dfs_hz.assign(n, 0.0);
  gt.aoa_deg.assign(n, std::nan(""));

  const double h = 1e-4;  // finite-difference step for ground-truth DFS
  for (int k = 0; k < n; ++k) {
    const double t = k * dt;
    CsiMatrix inner = hs;
    if (person) {
      const Position p = scene.person_trajectory.position(t);
      const Vec2 rel = diff(p, ants[0]);
      if (rel.x * boresight.x + rel.y * boresight.y <= 0.0) {
        throw PreconditionError(
            "scene: trajectory leaves the valid half-plane at sample " +
            std::to_string(k) + " (t=" + std::to_string(t) + " s)");
      }
      const double d_tx_p = norm(diff(scene.tx_position, p));
      std::array<double, kAntennas> dx;
      for (int i = 0; i < kAntennas; ++i) {
        dx[i] = d_tx_p + norm(diff(p, ants[i]));
      }
      const Position pp = scene.person_trajectory.position(t + h);
      const Position pm = scene.person_trajectory.position(t - h);
      const double d1p = norm(diff(scene.tx_position, pp)) + norm(diff(pp, ants[0]));
      const double d1m = norm(diff(scene.tx_position, pm)) + norm(diff(pm, ants[0]));
      gt.dfs_hz[k] = cfg.f_c / kSpeedOfLight * (d1p - d1m) / (2.0 * h);
      gt.position[k] = p;
      gt.path_length[k] = dx[0];
      gt.aoa_deg[k] =
          rad_to_deg(std::asin(std::clamp(
              (rel.x * axis.x + rel.y * axis.y) / norm(rel), -1.0, 1.0)));

      double vis = fade_w[k / cfg.N_p];
      if (scene.person_dropout > 0.0 &&
          rng_person.uniform() < scene.person_dropout) {
        vis = 0.0;
      }
      if (vis > 0.0) {
        const double amp = scene.person_reflectivity * vis;
        for (int i = 0; i < kAntennas; ++i) {
          for (int j = 0; j < kSubcarriers; ++j) {
            inner(i, j) += amp * std::polar(1.0, -2.0 * kPi * fj[j] /
                                                     kSpeedOfLight * dx[i]);
          }
        }
      }
    }
    for (int i = 0; i < kAntennas; ++i) {
      for (int j = 0; j < kSubcarriers; ++j) {
        inner(i, j) += sigma / std::sqrt(2.0) *
                       Complex(rng_noise.normal(), rng_noise.normal());
      }
    }
    CsiSample& sample = trace[k];
    sample.timestamp = t;
    gt.timestamp[k] = t;
    for (int j = 0; j < kSubcarriers; ++j) {
      Complex he;
      if (scene.impairments.phase_impairments) {
        he = agc[k / cfg.N_p] *
             std::polar(1.0, -(fo[k] + 2.0 * kPi * cfg.subcarrier_offsets[j] *
                                            tau[k]));
      } else {
        he = 1.0;
      }
      for (int i = 0; i < kAntennas; ++i) {
        sample.values(i, j) = he * hw[i] * inner(i, j);
      }
    }
  }
  return {std::move(trace), std::move(gt)};
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double to_double(const std::string& tok, const std::string& key, int lineno) {
  try {
    size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw InputError("scene: bad numeric value '" + tok + "' for key '" + key +
                     "' (line " + std::to_string(lineno) + ")");
  }
}

TrajectorySpec::Kind kind_from_name(const std::string& name, int lineno) {
  using Kind = TrajectorySpec::Kind;
  if (name == "none") return Kind::kNone;
  if (name == "ellipse") return Kind::kEllipse;
  if (name == "line") return Kind::kLine;
  if (name == "rect") return Kind::kRect;
  if (name == "radial") return Kind::kRadial;
  throw InputError("scene: unknown trajectory kind '" + name + "' (line " +
                   std::to_string(lineno) + ")");
}

std::string kind_name(TrajectorySpec::Kind kind) {
  using Kind = TrajectorySpec::Kind;
  switch (kind) {
    case Kind::kNone: return "none";
    case Kind::kEllipse: return "ellipse";
    case Kind::kLine: return "line";
    case Kind::kRect: return "rect";
    case Kind::kRadial: return "radial";
  }
  return "none";
}

}  // namespace

std::string format_scene(const SceneSpec& s) {
  std::ostringstream out;
  out << "tx_position " << fmt(s.tx_position.x) << " " << fmt(s.tx_position.y)
      << "\n";
  out << "rx_antenna1_position " << fmt(s.rx_antenna1_position.x) << " "
      << fmt(s.rx_antenna1_position.y) << "\n";
  out << "rx_array_axis " << fmt(s.rx_array_axis[0]) << " "
      << fmt(s.rx_array_axis[1]) << "\n";
  for (const auto& r : s.static_reflectors) {
    out << "static_reflector " << fmt(r.position.x) << " " << fmt(r.position.y)
        << " " << fmt(r.amplitude) << "\n";
  }
  out << "trajectory " << kind_name(s.person_trajectory.kind);
  if (s.person_trajectory.kind != TrajectorySpec::Kind::kNone) {
    for (double p : s.person_trajectory.params) out << " " << fmt(p);
  }
  out << "\n";
  out << "speed " << fmt(s.person_trajectory.speed) << "\n";
  out << "person_reflectivity " << fmt(s.person_reflectivity) << "\n";
  out << "person_dropout " << fmt(s.person_dropout) << "\n";
  out << "person_fading " << (s.person_fading ? 1 : 0) << "\n";
  out << "phase_impairments " << (s.impairments.phase_impairments ? 1 : 0)
      << "\n";
  out << "agc_walk_sigma " << fmt(s.impairments.agc_walk_sigma) << "\n";
  out << "agc_range " << fmt(s.impairments.agc_min) << " "
      << fmt(s.impairments.agc_max) << "\n";
  out << "timing_offset_max_s " << fmt(s.impairments.timing_offset_max_s)
      << "\n";
  out << "noise_snr_db " << fmt(s.impairments.noise_snr_db) << "\n";
  out << "hw_attenuation " << fmt(s.hardware.attenuation[0]) << " "
      << fmt(s.hardware.attenuation[1]) << " " << fmt(s.hardware.attenuation[2])
      << "\n";
  out << "hw_phase " << fmt(s.hardware.phase[0]) << " "
      << fmt(s.hardware.phase[1]) << " " << fmt(s.hardware.phase[2]) << "\n";
  out << "hw_spacing " << fmt(s.hardware.true_spacing_12) << " "
      << fmt(s.hardware.true_spacing_23) << "\n";
  out << "duration_s " << fmt(s.duration_s) << "\n";
  out << "seed " << s.seed << "\n";
  return out.str();
}

SceneSpec parse_scene(const std::string& text) {
  SceneSpec s;
  s.static_reflectors.clear();
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool saw_trajectory = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key.empty()) continue;
    std::vector<std::string> toks;
    std::string tok;
    while (ls >> tok) toks.push_back(tok);
    auto need = [&](std::size_t count) {
      if (toks.size() != count) {
        throw InputError("scene: key '" + key + "' expects " +
                         std::to_string(count) + " values, got " +
                         std::to_string(toks.size()) + " (line " +
                         std::to_string(lineno) + ")");
      }
    };
    auto d = [&](std::size_t i) { return to_double(toks[i], key, lineno); };
    if (key == "tx_position") {
      need(2);
      s.tx_position = {d(0), d(1)};
    } else if (key == "rx_antenna1_position") {
      need(2);
      s.rx_antenna1_position = {d(0), d(1)};
    } else if (key == "rx_array_axis") {
      need(2);
      s.rx_array_axis = {d(0), d(1)};
    } else if (key == "static_reflector") {
      need(3);
      s.static_reflectors.push_back({{d(0), d(1)}, d(2)});
    } else if (key == "trajectory") {
      if (toks.empty()) {
        throw InputError("scene: trajectory expects a kind (line " +
                         std::to_string(lineno) + ")");
      }
      const auto kind = kind_from_name(toks[0], lineno);
      const double speed = s.person_trajectory.speed;
      s.person_trajectory = TrajectorySpec::make(kind, speed);
      if (toks.size() > 1) {
        if (toks.size() != 1 + s.person_trajectory.params.size() &&
            !(kind == TrajectorySpec::Kind::kRadial && toks.size() == 3)) {
          throw InputError("scene: trajectory '" + toks[0] +
                           "' expects 0 or " +
                           std::to_string(s.person_trajectory.params.size()) +
                           " parameters (line " + std::to_string(lineno) + ")");
        }
        for (std::size_t i = 1; i < toks.size(); ++i) {
          s.person_trajectory.params[i - 1] = to_double(toks[i], key, lineno);
        }
      }
      saw_trajectory = true;
    } else if (key == "speed") {
      need(1);
      s.person_trajectory.speed = d(0);
    } else if (key == "person_reflectivity") {
      need(1);
      s.person_reflectivity = d(0);
    } else if (key == "person_dropout") {
      need(1);
      s.person_dropout = d(0);
    } else if (key == "person_fading") {
      need(1);
      s.person_fading = d(0) != 0.0;
    } else if (key == "phase_impairments") {
      need(1);
      s.impairments.phase_impairments = d(0) != 0.0;
    } else if (key == "agc_walk_sigma") {
      need(1);
      s.impairments.agc_walk_sigma = d(0);
    } else if (key == "agc_range") {
      need(2);
      s.impairments.agc_min = d(0);
      s.impairments.agc_max = d(1);
    } else if (key == "timing_offset_max_s") {
      need(1);
      s.impairments.timing_offset_max_s = d(0);
    } else if (key == "noise_snr_db") {
      need(1);
      s.impairments.noise_snr_db = d(0);
    } else if (key == "hw_attenuation") {
      need(3);
      s.hardware.attenuation = {d(0), d(1), d(2)};
    } else if (key == "hw_phase") {
      need(3);
      s.hardware.phase = {d(0), d(1), d(2)};
    } else if (key == "hw_spacing") {
      need(2);
      s.hardware.true_spacing_12 = d(0);
      s.hardware.true_spacing_23 = d(1);
    } else if (key == "duration_s") {
      need(1);
      s.duration_s = d(0);
    } else if (key == "seed") {
      need(1);
      const double v = d(0);
      if (v < 0 || v != std::floor(v)) {
        throw InputError("scene: seed must be a nonnegative integer (line " +
                         std::to_string(lineno) + ")");
      }
      s.seed = static_cast<std::uint64_t>(v);
    } else {
      throw InputError("scene: unknown key '" + key + "' (line " +
                       std::to_string(lineno) + ")");
    }
  }
  if (!saw_trajectory) {
    // Default spec is an ellipse; an explicit line is required so a scene
    // file always states whether a person is present.
    throw InputError("scene: missing 'trajectory' line");
  }
  return s;
}

SceneSpec load_scene(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("scene: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_scene(buf.str());
}

void save_scene(const SceneSpec& scene, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw InputError("scene: cannot write '" + path + "'");
  f << format_scene(scene);
  if (!f) throw InputError("scene: write failed for '" + path + "'");
}

}  // namespace widfs::synth
