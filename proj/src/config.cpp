#include "archstyle/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include "archstyle/errors.hpp"

namespace archstyle {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  try {
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ValidationError("config key '" + key + "': '" + v + "' is not a number");
}

long long to_integer(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  try {
    const long long i = std::stoll(v, &used);
    if (used == v.size()) return i;
  } catch (const std::exception&) {
  }
  throw ValidationError("config key '" + key + "': '" + v + "' is not an integer");
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  try {
    if (!v.empty() && v[0] != '-') {
      const unsigned long long u = std::stoull(v, &used);
      if (used == v.size()) return u;
    }
  } catch (const std::exception&) {
  }
  throw ValidationError("config key '" + key + "': '" + v + "' is not an unsigned integer");
}

int to_int(const std::string& key, const std::string& v) { return static_cast<int>(to_integer(key, v)); }

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"base_width", [](RunConfig& c, auto& k, auto& v) { c.net.base_width = to_int(k, v); }},
      {"style_dim", [](RunConfig& c, auto& k, auto& v) { c.net.style_dim = to_int(k, v); }},
      {"n_disc_scales", [](RunConfig& c, auto& k, auto& v) { c.net.n_disc_scales = to_int(k, v); }},
      {"image_size", [](RunConfig& c, auto& k, auto& v) { c.net.image_size = to_int(k, v); }},
      {"lambda_x", [](RunConfig& c, auto& k, auto& v) { c.weights.lambda_x = to_double(k, v); }},
      {"lambda_c", [](RunConfig& c, auto& k, auto& v) { c.weights.lambda_c = to_double(k, v); }},
      {"lambda_s", [](RunConfig& c, auto& k, auto& v) { c.weights.lambda_s = to_double(k, v); }},
      {"lambda_z", [](RunConfig& c, auto& k, auto& v) { c.weights.lambda_z = to_double(k, v); }},
      {"lambda_cycle", [](RunConfig& c, auto& k, auto& v) { c.weights.lambda_cycle = to_double(k, v); }},
      {"lambda_adv", [](RunConfig& c, auto& k, auto& v) { c.weights.lambda_adv = to_double(k, v); }},
      {"lambda_gd", [](RunConfig& c, auto& k, auto& v) { c.weights.lambda_gd = to_double(k, v); }},
      {"lambda_kl", [](RunConfig& c, auto& k, auto& v) { c.weights.lambda_kl = to_double(k, v); }},
      {"lr", [](RunConfig& c, auto& k, auto& v) { c.adam.lr = to_double(k, v); }},
      {"beta1", [](RunConfig& c, auto& k, auto& v) { c.adam.beta1 = to_double(k, v); }},
      {"beta2", [](RunConfig& c, auto& k, auto& v) { c.adam.beta2 = to_double(k, v); }},
      {"adam_eps", [](RunConfig& c, auto& k, auto& v) { c.adam.eps = to_double(k, v); }},
      {"iterations", [](RunConfig& c, auto& k, auto& v) { c.iterations = to_int(k, v); }},
      {"batch_size", [](RunConfig& c, auto& k, auto& v) { c.batch_size = to_int(k, v); }},
      {"checkpoint_every", [](RunConfig& c, auto& k, auto& v) { c.checkpoint_every = to_int(k, v); }},
      {"mask_threshold", [](RunConfig& c, auto& k, auto& v) { c.mask_threshold = to_double(k, v); }},
      {"fill", [](RunConfig& c, auto&, auto& v) { c.fill = parse_fill_policy(v); }},
      {"infer_size", [](RunConfig& c, auto& k, auto& v) { c.infer_size = to_int(k, v); }},
      {"seed", [](RunConfig& c, auto& k, auto& v) { c.seed = to_u64(k, v); }},
      {"blend_beta", [](RunConfig& c, auto& k, auto& v) { c.blend.beta = to_double(k, v); }},
      {"blend_iterations", [](RunConfig& c, auto& k, auto& v) { c.blend.iterations = to_int(k, v); }},
      {"blend_solver", [](RunConfig& c, auto&, auto& v) { c.blend.solver = parse_blend_solver(v); }},
      {"cg_tol", [](RunConfig& c, auto& k, auto& v) { c.blend.cg_tol = to_double(k, v); }},
      {"cg_max_iter", [](RunConfig& c, auto& k, auto& v) { c.blend.cg_max_iter = to_int(k, v); }},
      {"blend_max_levels", [](RunConfig& c, auto& k, auto& v) { c.blend.max_levels = to_int(k, v); }},
      {"canny_low", [](RunConfig& c, auto& k, auto& v) { c.eval.canny.low = to_double(k, v); }},
      {"canny_high", [](RunConfig& c, auto& k, auto& v) { c.eval.canny.high = to_double(k, v); }},
      {"canny_sigma", [](RunConfig& c, auto& k, auto& v) { c.eval.canny.sigma = to_double(k, v); }},
      {"eval_size", [](RunConfig& c, auto& k, auto& v) { c.eval.eval_size = to_int(k, v); }},
      {"is_splits", [](RunConfig& c, auto& k, auto& v) { c.eval.is_splits = to_int(k, v); }},
  };
  return table;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = canonical_key(trim(line.substr(0, eq)));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ValidationError("config line " + std::to_string(line_no) + ": empty key");
    if (!kv.emplace(key, value).second) {
      throw ValidationError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }
  return kv;
}

KeyValues load_key_values(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_key_values(ss.str());
}

std::string canonical_key(const std::string& key) {
  if (key == "lambda_cs") return "lambda_z";
  if (key == "lambda_cc") return "lambda_cycle";
  return key;
}

void apply_key_values(const KeyValues& kv, RunConfig& cfg) {
  const auto& table = setters();
  for (const auto& [raw, value] : kv) {
    const std::string key = canonical_key(raw);
    const auto it = table.find(key);
    if (it == table.end()) throw ValidationError("unknown config key '" + raw + "'");
    it->second(cfg, key, value);
    cfg.explicit_keys.insert(key);
  }
  cfg.net.seed = cfg.seed;
  cfg.net.validate();
  cfg.weights.validate();
  cfg.blend.validate();
  cfg.eval.canny.validate();
  if (cfg.iterations < 1) throw ValidationError("iterations must be >= 1");
  if (cfg.batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (cfg.checkpoint_every < 0) throw ValidationError("checkpoint_every must be >= 0");
  if (!(cfg.mask_threshold > 0.0 && cfg.mask_threshold < 1.0)) throw ValidationError("mask_threshold must lie in (0,1)");
  if (cfg.infer_size < 32) throw ValidationError("infer_size must be >= 32");
  if (cfg.eval.eval_size != 0 && cfg.eval.eval_size < 11) throw ValidationError("eval_size must be 0 or >= 11");
  if (cfg.eval.is_splits < 1) throw ValidationError("is_splits must be >= 1");
  if (!(cfg.adam.lr > 0.0)) throw ValidationError("lr must be > 0");
}

std::string net_config_to_text(const NetConfig& c) {
  std::ostringstream out;
  out << "base_width=" << c.base_width << "\n"
      << "style_dim=" << c.style_dim << "\n"
      << "n_disc_scales=" << c.n_disc_scales << "\n"
      << "image_size=" << c.image_size << "\n"
      << "seed=" << c.seed << "\n";
  return out.str();
}

NetConfig net_config_from_text(const std::string& text) {
  const KeyValues kv = parse_key_values(text);
  NetConfig c;
  for (const auto& [k, v] : kv) {
    if (k == "base_width") {
      c.base_width = to_int(k, v);
    } else if (k == "style_dim") {
      c.style_dim = to_int(k, v);
    } else if (k == "n_disc_scales") {
      c.n_disc_scales = to_int(k, v);
    } else if (k == "image_size") {
      c.image_size = to_int(k, v);
    } else if (k == "seed") {
      c.seed = to_u64(k, v);
    } else {
      throw ValidationError("unknown network config key '" + k + "'");
    }
  }
  c.validate();
  return c;
}

}  // namespace archstyle
