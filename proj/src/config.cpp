#include "acgad/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace acgad {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::runtime_error("bad value for " + key + ": " + v);
  }
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const std::int64_t x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::runtime_error("bad value for " + key + ": " + v);
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  try {
    // stoull wraps negatives around instead of failing; reject them here
    if (v.empty() || v[0] == '-') throw std::invalid_argument(v);
    std::size_t used = 0;
    const std::uint64_t x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::runtime_error("bad value for " + key + ": " + v);
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::runtime_error("bad value for " + key + ": " + v);
}

SelectionConfig::Criterion parse_criterion(const std::string& key,
                                           const std::string& v) {
  if (v == "dual") return SelectionConfig::Criterion::Dual;
  if (v == "entropy") return SelectionConfig::Criterion::EntropyOnly;
  if (v == "deviation") return SelectionConfig::Criterion::DeviationOnly;
  throw std::runtime_error("bad value for " + key + ": " + v);
}

const char* criterion_name(SelectionConfig::Criterion c) {
  switch (c) {
    case SelectionConfig::Criterion::Dual: return "dual";
    case SelectionConfig::Criterion::EntropyOnly: return "entropy";
    case SelectionConfig::Criterion::DeviationOnly: return "deviation";
  }
  return "dual";
}

AugmentStrategy parse_strategy(const std::string& key, const std::string& v) {
  if (v == "random-edge-feature") return AugmentStrategy::RandomEdgeFeature;
  if (v == "degree-based") return AugmentStrategy::DegreeBased;
  if (v == "feature-noise") return AugmentStrategy::FeatureNoise;
  throw std::runtime_error("bad value for " + key + ": " + v);
}

const char* source_name(PairSource s) {
  return s == PairSource::Counterfactual ? "counterfactual" : "baseline";
}

PairSource parse_source(const std::string& key, const std::string& v) {
  if (v == "counterfactual") return PairSource::Counterfactual;
  if (v == "baseline") return PairSource::Baseline;
  throw std::runtime_error("bad value for " + key + ": " + v);
}

}  // namespace

void apply_config_entry(RunConfig& cfg, const std::string& key,
                        const std::string& value) {
  if (key == "seed") cfg.seed = parse_uint(key, value);
  else if (key == "threads") cfg.threads = static_cast<int>(parse_int(key, value));
  else if (key == "inject.enable") cfg.inject = parse_bool(key, value);
  else if (key == "inject.ratio") cfg.inject_cfg.ratio = parse_real(key, value);
  else if (key == "inject.rewire_fraction") cfg.inject_cfg.rewire_fraction = parse_real(key, value);
  else if (key == "inject.noise_std") cfg.inject_cfg.noise_std = parse_real(key, value);
  else if (key == "inject.mask_fraction") cfg.inject_cfg.mask_fraction = parse_real(key, value);
  else if (key == "select.k") cfg.select_cfg.k = parse_int(key, value);
  else if (key == "select.k_frac") cfg.select_cfg.k_frac = parse_real(key, value);
  else if (key == "select.bins") cfg.select_cfg.bins = static_cast<int>(parse_int(key, value));
  else if (key == "select.criterion") cfg.select_cfg.criterion = parse_criterion(key, value);
  else if (key == "cf.gamma") cfg.cf.gamma = parse_real(key, value);
  else if (key == "cf.beta") cfg.cf.beta = parse_real(key, value);
  else if (key == "cf.max_step") cfg.cf.max_step = parse_real(key, value);
  else if (key == "cf.max_retries") cfg.cf.max_retries = static_cast<int>(parse_int(key, value));
  else if (key == "cf.edge_budget_remove") cfg.cf.edge_budget_remove = static_cast<int>(parse_int(key, value));
  else if (key == "cf.edge_budget_add") cfg.cf.edge_budget_add = static_cast<int>(parse_int(key, value));
  else if (key == "cf.degree_delta_max") cfg.cf.degree_delta_max = static_cast<int>(parse_int(key, value));
  else if (key == "consistency.lambda_attr") cfg.consistency.lambda_attr = parse_real(key, value);
  else if (key == "consistency.lambda_struct") cfg.consistency.lambda_struct = parse_real(key, value);
  else if (key == "consistency.sim_threshold") cfg.consistency.sim_threshold = parse_real(key, value);
  else if (key == "consistency.delta") cfg.consistency.delta = parse_real(key, value);
  else if (key == "train.tau") cfg.train_cfg.tau = parse_real(key, value);
  else if (key == "train.lambda_u") cfg.train_cfg.lambda_u = parse_real(key, value);
  else if (key == "train.max_epochs") cfg.train_cfg.max_epochs = static_cast<int>(parse_int(key, value));
  else if (key == "train.patience") cfg.train_cfg.patience = static_cast<int>(parse_int(key, value));
  else if (key == "train.batch_size") cfg.train_cfg.batch_size = static_cast<int>(parse_int(key, value));
  else if (key == "train.val_fraction") cfg.train_cfg.val_fraction = parse_real(key, value);
  else if (key == "train.lr") cfg.train_cfg.lr = parse_real(key, value);
  else if (key == "train.weight_decay") cfg.train_cfg.weight_decay = parse_real(key, value);
  else if (key == "augment.source") cfg.pair_opts.source = parse_source(key, value);
  else if (key == "augment.strategy") cfg.pair_opts.baseline = parse_strategy(key, value);
  else if (key == "augment.cf_positive") cfg.pair_opts.cf_positive = parse_bool(key, value);
  else if (key == "augment.cf_negative") cfg.pair_opts.cf_negative = parse_bool(key, value);
  else if (key == "augment.feature_cf") cfg.pair_opts.feature_cf = parse_bool(key, value);
  else if (key == "augment.struct_cf") cfg.pair_opts.struct_cf = parse_bool(key, value);
  else throw std::runtime_error("unknown config key: " + key);
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected key=value");
    apply_config_entry(cfg, trim(line.substr(0, eq)),
                       trim(line.substr(eq + 1)));
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string echo_config(const RunConfig& cfg) {
  std::ostringstream out;
  char buf[64];
  auto real = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%s = %.17g\n", key, v);
    out << buf;
  };
  out << "seed = " << cfg.seed << '\n';
  out << "threads = " << cfg.threads << '\n';
  out << "inject.enable = " << (cfg.inject ? "true" : "false") << '\n';
  real("inject.ratio", cfg.inject_cfg.ratio);
  real("inject.rewire_fraction", cfg.inject_cfg.rewire_fraction);
  real("inject.noise_std", cfg.inject_cfg.noise_std);
  real("inject.mask_fraction", cfg.inject_cfg.mask_fraction);
  out << "select.k = " << cfg.select_cfg.k << '\n';
  real("select.k_frac", cfg.select_cfg.k_frac);
  out << "select.bins = " << cfg.select_cfg.bins << '\n';
  out << "select.criterion = " << criterion_name(cfg.select_cfg.criterion)
      << '\n';
  real("cf.gamma", cfg.cf.gamma);
  real("cf.beta", cfg.cf.beta);
  real("cf.max_step", cfg.cf.max_step);
  out << "cf.max_retries = " << cfg.cf.max_retries << '\n';
  out << "cf.edge_budget_remove = " << cfg.cf.edge_budget_remove << '\n';
  out << "cf.edge_budget_add = " << cfg.cf.edge_budget_add << '\n';
  out << "cf.degree_delta_max = " << cfg.cf.degree_delta_max << '\n';
  real("consistency.lambda_attr", cfg.consistency.lambda_attr);
  real("consistency.lambda_struct", cfg.consistency.lambda_struct);
  real("consistency.sim_threshold", cfg.consistency.sim_threshold);
  real("consistency.delta", cfg.consistency.delta);
  real("train.tau", cfg.train_cfg.tau);
  real("train.lambda_u", cfg.train_cfg.lambda_u);
  out << "train.max_epochs = " << cfg.train_cfg.max_epochs << '\n';
  out << "train.patience = " << cfg.train_cfg.patience << '\n';
  out << "train.batch_size = " << cfg.train_cfg.batch_size << '\n';
  real("train.val_fraction", cfg.train_cfg.val_fraction);
  real("train.lr", cfg.train_cfg.lr);
  real("train.weight_decay", cfg.train_cfg.weight_decay);
  out << "augment.source = " << source_name(cfg.pair_opts.source) << '\n';
  out << "augment.strategy = "
      << augment_strategy_name(cfg.pair_opts.baseline) << '\n';
  out << "augment.cf_positive = "
      << (cfg.pair_opts.cf_positive ? "true" : "false") << '\n';
  out << "augment.cf_negative = "
      << (cfg.pair_opts.cf_negative ? "true" : "false") << '\n';
  out << "augment.feature_cf = "
      << (cfg.pair_opts.feature_cf ? "true" : "false") << '\n';
  out << "augment.struct_cf = "
      << (cfg.pair_opts.struct_cf ? "true" : "false") << '\n';
  return out.str();
}

}  // namespace acgad
