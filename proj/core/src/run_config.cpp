#include "direnyi/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace direnyi {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: invalid number for key '" + key + "': " + value);
  }
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
  const double v = parse_double(key, value);
  if (!(v >= 0.0) || v > 1.8e19 || v != std::floor(v))
    throw ConfigError("config: key '" + key + "' needs a nonnegative integer");
  return static_cast<std::uint64_t>(v);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw ConfigError("config: key '" + key + "' needs a boolean (0/1/true/false)");
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_double(key, item));
  }
  return out;
}

std::vector<EntropyFamily> parse_families(const std::string& key, const std::string& value) {
  std::vector<EntropyFamily> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto family = family_from_name(item);
    if (!family) throw ConfigError("config: key '" + key + "' has unknown family '" + item + "'");
    out.push_back(*family);
  }
  return out;
}

}  // namespace

RunConfig parse_run_config(std::istream& in) {
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(line_no) + " is not 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config: line " + std::to_string(line_no) + " has an empty key or value");

    if (key == "n") cfg.params.n = parse_count(key, value);
    else if (key == "omega_hon") cfg.params.honest.omega_hon = parse_double(key, value);
    else if (key == "qerr_hon") cfg.params.honest.qerr_hon = parse_double(key, value);
    else if (key == "gamma") cfg.params.honest.gamma = parse_double(key, value);
    else if (key == "eps_sound") cfg.params.eps_sound = parse_double(key, value);
    else if (key == "eps_corr") cfg.params.eps_corr = parse_double(key, value);
    else if (key == "eps_com_at") cfg.params.eps_com_at = parse_double(key, value);
    else if (key == "ell_ev") cfg.params.ell_ev = parse_double(key, value);
    else if (key == "alpha") cfg.params.alpha = parse_double(key, value);
    else if (key == "optimize_alpha") cfg.params.optimize_alpha = parse_bool(key, value);
    else if (key == "optimize_gamma") cfg.params.optimize_gamma = parse_bool(key, value);
    else if (key == "gamma_cap") cfg.params.gamma_cap = parse_double(key, value);
    else if (key == "beta") cfg.params.beta = parse_double(key, value);
    else if (key == "npp_q") cfg.params.npp_q = parse_double(key, value);
    else if (key == "workers") cfg.params.workers = static_cast<unsigned>(parse_count(key, value));
    else if (key == "seed") cfg.seed = parse_count(key, value);
    else if (key == "out") cfg.out_path = value;
    else if (key == "n_min") cfg.sweep.n_min = parse_count(key, value);
    else if (key == "n_max") cfg.sweep.n_max = parse_count(key, value);
    else if (key == "sweep_points") cfg.sweep.points = parse_count(key, value);
    else if (key == "sweep_spacing") {
      if (value == "log") cfg.sweep.log_spacing = true;
      else if (value == "linear") cfg.sweep.log_spacing = false;
      else throw ConfigError("config: sweep_spacing must be 'log' or 'linear'");
    } else if (key == "verify_alphas") cfg.verify.alphas = parse_list(key, value);
    else if (key == "verify_betas") cfg.verify.betas = parse_list(key, value);
    else if (key == "verify_qs") cfg.verify.npp_qs = parse_list(key, value);
    else if (key == "verify_score_points") cfg.verify.score_points = parse_count(key, value);
    else if (key == "verify_families") cfg.verify.families = parse_families(key, value);
    else throw ConfigError("config: unknown key '" + key + "'");
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  return parse_run_config(in);
}

std::vector<std::uint64_t> make_sweep_grid(const SweepGridSpec& spec) {
  if (spec.points == 0) throw ConfigError("sweep grid: points must be positive");
  if (spec.n_min == 0 || spec.n_max < spec.n_min)
    throw ConfigError("sweep grid: need 0 < n_min <= n_max");
  std::vector<std::uint64_t> grid;
  grid.reserve(spec.points);
  if (spec.points == 1) {
    grid.push_back(spec.n_min);
    return grid;
  }
  const double lo = static_cast<double>(spec.n_min);
  const double hi = static_cast<double>(spec.n_max);
  for (std::size_t i = 0; i < spec.points; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(spec.points - 1);
    const double v = spec.log_spacing ? std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)))
                                      : lo + t * (hi - lo);
    grid.push_back(static_cast<std::uint64_t>(std::llround(v)));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace direnyi
