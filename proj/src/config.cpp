#include "widfs/config.hpp"

#include "widfs/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace widfs {

std::array<double, kSubcarriers> SystemConfig::default_offsets() {
  std::array<double, kSubcarriers> o{};
  const double span = 8.75e6;
  for (int j = 0; j < kSubcarriers; ++j) {
    o[j] = -span + 2.0 * span * j / (kSubcarriers - 1);
  }
  return o;
}

void SystemConfig::validate() const {
  if (N_p < 2) throw PreconditionError("N_p must be >= 2");
  if (M < 1 || M % 2 == 0) throw PreconditionError("M must be odd and >= 1");
  if (!(f_s > 0)) throw PreconditionError("f_s must be positive");
  if (!(f_c > 0)) throw PreconditionError("f_c must be positive");
  const double max_spacing = kSpeedOfLight / (2.0 * f_c);
  for (auto [name, v] : {std::pair{"spacing_12", spacing_12},
                         std::pair{"spacing_23", spacing_23}}) {
    if (!(v > 0) || v > max_spacing) {
      throw PreconditionError(std::string(name) +
                              " must lie in (0, c/(2*f_c)]");
    }
  }
  if (!(dist_grid_step > 0)) {
    throw PreconditionError("dist_grid_step must be positive");
  }
  if (!(aoa_grid_step > 0)) {
    throw PreconditionError("aoa_grid_step must be positive");
  }
  if (!(dist_max > d_s1)) {
    throw PreconditionError("dist_max must exceed d_s1");
  }
  if (sg_frame < sg_order + 1 || sg_frame % 2 == 0) {
    throw PreconditionError("sg_frame must be odd and exceed sg_order");
  }
  if (!(eig_threshold_factor > 0 && eig_threshold_factor < 1)) {
    throw PreconditionError("eig_threshold_factor must lie in (0, 1)");
  }
}

std::array<double, kSubcarriers> subcarrier_frequencies(
    const SystemConfig& cfg) {
  std::array<double, kSubcarriers> f{};
  for (int j = 0; j < kSubcarriers; ++j) f[j] = cfg.f_c + cfg.subcarrier_offsets[j];
  return f;
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& tok, const std::string& key) {
  try {
    size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw InputError("config: bad numeric value '" + tok + "' for key '" +
                     key + "'");
  }
}

int parse_int(const std::string& tok, const std::string& key) {
  double v = parse_double(tok, key);
  int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) {
    throw InputError("config: key '" + key + "' expects an integer, got '" +
                     tok + "'");
  }
  return i;
}

struct FieldTable {
  std::map<std::string, double SystemConfig::*> doubles;
  std::map<std::string, int SystemConfig::*> ints;

  FieldTable() {
    doubles = {
        {"f_c", &SystemConfig::f_c},
        {"f_s", &SystemConfig::f_s},
        {"spacing_12", &SystemConfig::spacing_12},
        {"spacing_23", &SystemConfig::spacing_23},
        {"hw_phase_12", &SystemConfig::hw_phase_12},
        {"hw_phase_23", &SystemConfig::hw_phase_23},
        {"hw_phase_31", &SystemConfig::hw_phase_31},
        {"d_s1", &SystemConfig::d_s1},
        {"aoa_grid_step", &SystemConfig::aoa_grid_step},
        {"dist_grid_step", &SystemConfig::dist_grid_step},
        {"dist_max", &SystemConfig::dist_max},
        {"motion_threshold", &SystemConfig::motion_threshold},
        {"kalman_sin_aoa_var", &SystemConfig::kalman_sin_aoa_var},
        {"kalman_dist_var_m", &SystemConfig::kalman_dist_var_m},
        {"kalman_dfs_var_hz", &SystemConfig::kalman_dfs_var_hz},
        {"lowpass_pass_hz", &SystemConfig::lowpass_pass_hz},
        {"delta_f_hz", &SystemConfig::delta_f_hz},
        {"highpass_trigger_hz", &SystemConfig::highpass_trigger_hz},
        {"eig_threshold_factor", &SystemConfig::eig_threshold_factor},
    };
    ints = {
        {"N_p", &SystemConfig::N_p},
        {"M", &SystemConfig::M},
        {"sg_order", &SystemConfig::sg_order},
        {"sg_frame", &SystemConfig::sg_frame},
    };
  }
};

const FieldTable& fields() {
  static const FieldTable t;
  return t;
}

}  // namespace

std::string format_config(const SystemConfig& cfg) {
  std::ostringstream out;
  // Emission order matches the declaration order for readability.
  out << "f_c " << fmt_double(cfg.f_c) << "\n";
  out << "f_s " << fmt_double(cfg.f_s) << "\n";
  out << "N_p " << cfg.N_p << "\n";
  out << "M " << cfg.M << "\n";
  out << "subcarrier_offsets";
  for (double o : cfg.subcarrier_offsets) out << " " << fmt_double(o);
  out << "\n";
  out << "spacing_12 " << fmt_double(cfg.spacing_12) << "\n";
  out << "spacing_23 " << fmt_double(cfg.spacing_23) << "\n";
  out << "hw_phase_12 " << fmt_double(cfg.hw_phase_12) << "\n";
  out << "hw_phase_23 " << fmt_double(cfg.hw_phase_23) << "\n";
  out << "hw_phase_31 " << fmt_double(cfg.hw_phase_31) << "\n";
  out << "d_s1 " << fmt_double(cfg.d_s1) << "\n";
  out << "aoa_grid_step " << fmt_double(cfg.aoa_grid_step) << "\n";
  out << "dist_grid_step " << fmt_double(cfg.dist_grid_step) << "\n";
  out << "dist_max " << fmt_double(cfg.dist_max) << "\n";
  out << "motion_threshold " << fmt_double(cfg.motion_threshold) << "\n";
  out << "kalman_sin_aoa_var " << fmt_double(cfg.kalman_sin_aoa_var) << "\n";
  out << "kalman_dist_var_m " << fmt_double(cfg.kalman_dist_var_m) << "\n";
  out << "kalman_dfs_var_hz " << fmt_double(cfg.kalman_dfs_var_hz) << "\n";
  out << "lowpass_pass_hz " << fmt_double(cfg.lowpass_pass_hz) << "\n";
  out << "delta_f_hz " << fmt_double(cfg.delta_f_hz) << "\n";
  out << "highpass_trigger_hz " << fmt_double(cfg.highpass_trigger_hz) << "\n";
  out << "sg_order " << cfg.sg_order << "\n";
  out << "sg_frame " << cfg.sg_frame << "\n";
  out << "eig_threshold_factor " << fmt_double(cfg.eig_threshold_factor)
      << "\n";
  return out.str();
}

SystemConfig parse_config(const std::string& text) {
  SystemConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
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
    auto where = [&] { return " (line " + std::to_string(lineno) + ")"; };
    if (key == "subcarrier_offsets") {
      if (toks.size() != kSubcarriers) {
        throw InputError("config: subcarrier_offsets expects " +
                         std::to_string(kSubcarriers) + " values, got " +
                         std::to_string(toks.size()) + where());
      }
      for (int j = 0; j < kSubcarriers; ++j) {
        cfg.subcarrier_offsets[j] = parse_double(toks[j], key);
      }
      continue;
    }
    if (toks.size() != 1) {
      throw InputError("config: key '" + key + "' expects one value" +
                       where());
    }
    if (auto it = fields().doubles.find(key); it != fields().doubles.end()) {
      cfg.*(it->second) = parse_double(toks[0], key);
    } else if (auto it2 = fields().ints.find(key); it2 != fields().ints.end()) {
      cfg.*(it2->second) = parse_int(toks[0], key);
    } else {
      throw InputError("config: unknown key '" + key + "'" + where());
    }
  }
  return cfg;
}

SystemConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str());
}

void save_config(const SystemConfig& cfg, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw InputError("config: cannot write '" + path + "'");
  f << format_config(cfg);
  if (!f) throw InputError("config: write failed for '" + path + "'");
}

}  // namespace widfs
