#include "dqfleet/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <vector>

namespace dqf {

namespace {

const std::vector<std::string> kKeys = {
    "scenario",      "sats",          "duration",        "rate",
    "edge_prob",     "snr",           "snrs",            "std_q",
    "std_r",         "mode",          "leaders",         "leader_fractions",
    "stubborn",      "seed",          "seeds",           "position_scale",
    "metrics_window", "mass",         "inertia",         "tumble_rate_std",
    "drift_vel_std", "lattice_radius", "plane_distance", "grid_spacing",
    "lqr_q",         "lqr_r",         "maneuver_fraction"};

int edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::vector<int>> d(a.size() + 1, std::vector<int>(b.size() + 1));
  for (size_t i = 0; i <= a.size(); ++i) d[i][0] = static_cast<int>(i);
  for (size_t j = 0; j <= b.size(); ++j) d[0][j] = static_cast<int>(j);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return d[a.size()][b.size()];
}

std::string nearest_key(const std::string& key) {
  std::string best = kKeys.front();
  int best_d = edit_distance(key, best);
  for (const auto& k : kKeys) {
    const int d = edit_distance(key, k);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const double x = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("key '" + key + "' expects a number, got '" + value + "'");
  }
}

long parse_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const long x = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("key '" + key + "' expects an integer, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("key '" + key + "' expects true/false, got '" + value + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(key, item));
  }
  if (out.empty()) throw std::invalid_argument("key '" + key + "' expects a list");
  return out;
}

void apply(ScenarioConfig& c, const std::string& key, const std::string& value) {
  if (key == "scenario") {
    if (value == "sweep") c.kind = ScenarioKind::Sweep;
    else if (value == "asteroid") c.kind = ScenarioKind::Asteroid;
    else if (value == "leaders") c.kind = ScenarioKind::Leaders;
    else if (value == "single-demo") c.kind = ScenarioKind::SingleDemo;
    else throw std::invalid_argument("key 'scenario' expects sweep|asteroid|leaders|single-demo");
  } else if (key == "sats") {
    c.n_sats = static_cast<int>(parse_int(key, value));
  } else if (key == "duration") {
    c.duration_s = parse_double(key, value);
  } else if (key == "rate") {
    c.rate_hz = parse_double(key, value);
  } else if (key == "edge_prob") {
    c.edge_probability = parse_double(key, value);
  } else if (key == "snr") {
    c.snrs = {parse_double(key, value)};
  } else if (key == "snrs") {
    c.snrs = parse_list(key, value);
  } else if (key == "std_q") {
    c.std_q_override = parse_double(key, value);
  } else if (key == "std_r") {
    c.std_r_override = parse_double(key, value);
  } else if (key == "mode") {
    if (value == "none") c.mode = ConsensusMode::None;
    else if (value == "soft") c.mode = ConsensusMode::Soft;
    else if (value == "hardsoft") c.mode = ConsensusMode::HardSoft;
    else throw std::invalid_argument("key 'mode' expects none|soft|hardsoft");
  } else if (key == "leaders") {
    c.leader_fractions = {parse_double(key, value)};
  } else if (key == "leader_fractions") {
    c.leader_fractions = parse_list(key, value);
  } else if (key == "stubborn") {
    c.stubborn = parse_bool(key, value);
  } else if (key == "seed") {
    c.base_seed = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "seeds") {
    c.n_seeds = static_cast<int>(parse_int(key, value));
  } else if (key == "position_scale") {
    c.position_scale = parse_double(key, value);
  } else if (key == "metrics_window") {
    c.metrics_window = static_cast<int>(parse_int(key, value));
  } else if (key == "mass") {
    c.mass = parse_double(key, value);
  } else if (key == "inertia") {
    const auto v = parse_list(key, value);
    if (v.size() != 3) throw std::invalid_argument("key 'inertia' expects three values");
    c.inertia_diag = Vec3(v[0], v[1], v[2]);
  } else if (key == "tumble_rate_std") {
    c.tumble_rate_std = parse_double(key, value);
  } else if (key == "drift_vel_std") {
    c.drift_vel_std = parse_double(key, value);
  } else if (key == "lattice_radius") {
    c.lattice_radius = parse_double(key, value);
  } else if (key == "plane_distance") {
    c.plane_distance = parse_double(key, value);
  } else if (key == "grid_spacing") {
    c.grid_spacing = parse_double(key, value);
  } else if (key == "lqr_q") {
    c.lqr_q = parse_double(key, value);
  } else if (key == "lqr_r") {
    c.lqr_r = parse_double(key, value);
  } else if (key == "maneuver_fraction") {
    c.maneuver_fraction = parse_double(key, value);
  } else {
    throw std::invalid_argument("unknown key '" + key + "'; did you mean '" +
                                nearest_key(key) + "'?");
  }
}

}  // namespace

ScenarioConfig parse_config(const std::string& text,
                            const std::map<std::string, std::string>& overrides) {
  ScenarioConfig c;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("expected key=value, got '" + line + "'");
    }
    apply(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  for (const auto& [key, value] : overrides) apply(c, key, value);
  c.validate();
  return c;
}

ScenarioConfig load_config(const std::string& path,
                           const std::map<std::string, std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

std::string documented_keys() {
  std::string out;
  for (const auto& k : kKeys) {
    if (!out.empty()) out += ", ";
    out += k;
  }
  return out;
}

namespace {
std::string join(const std::vector<double>& v) {
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) os << ",";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
    os << buf;
  }
  return os.str();
}
}  // namespace

std::string manifest_text(const ScenarioConfig& c, const std::string& out_dir,
                          const std::string& version) {
  std::ostringstream os;
  os << "# dqfleet run manifest (re-runnable as a config file)\n";
  os << "# version: " << version << "\n";
  os << "# out: " << out_dir << "\n";
  os << "scenario = " << to_string(c.kind) << "\n";
  os << "sats = " << c.n_sats << "\n";
  os << "duration = " << c.duration_s << "\n";
  os << "rate = " << c.rate_hz << "\n";
  os << "edge_prob = " << c.edge_probability << "\n";
  os << "snrs = " << join(c.snrs) << "\n";
  if (c.std_q_override) os << "std_q = " << *c.std_q_override << "\n";
  if (c.std_r_override) os << "std_r = " << *c.std_r_override << "\n";
  os << "mode = " << to_string(c.mode) << "\n";
  os << "leader_fractions = " << join(c.leader_fractions) << "\n";
  os << "stubborn = " << (c.stubborn ? "true" : "false") << "\n";
  os << "seed = " << c.base_seed << "\n";
  os << "seeds = " << c.n_seeds << "\n";
  os << "position_scale = " << c.position_scale << "\n";
  os << "metrics_window = " << c.metrics_window << "\n";
  os << "mass = " << c.mass << "\n";
  os << "inertia = " << c.inertia_diag.x() << "," << c.inertia_diag.y() << ","
     << c.inertia_diag.z() << "\n";
  os << "tumble_rate_std = " << c.tumble_rate_std << "\n";
  os << "drift_vel_std = " << c.drift_vel_std << "\n";
  os << "lattice_radius = " << c.lattice_radius << "\n";
  os << "plane_distance = " << c.plane_distance << "\n";
  os << "grid_spacing = " << c.grid_spacing << "\n";
  os << "lqr_q = " << c.lqr_q << "\n";
  os << "lqr_r = " << c.lqr_r << "\n";
  os << "maneuver_fraction = " << c.maneuver_fraction << "\n";
  return os.str();
}

}  // namespace dqf
