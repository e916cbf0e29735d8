// Copyright 2026 The HypeMARL Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "hypemarl/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hypemarl/error.hpp"

namespace hypemarl {

Variant variant_from_string(const std::string& name) {
  if (name == "hypemarl") return Variant::hypemarl;
  if (name == "mb-hypemarl") return Variant::mb_hypemarl;
  if (name == "marl") return Variant::marl;
  if (name == "single-rl") return Variant::single_rl;
  throw ConfigError("unknown variant '" + name + "' (hypemarl|mb-hypemarl|marl|single-rl)");
}

const char* to_string(Variant v) {
  switch (v) {
    case Variant::hypemarl: return "hypemarl";
    case Variant::mb_hypemarl: return "mb-hypemarl";
    case Variant::marl: return "marl";
    case Variant::single_rl: return "single-rl";
  }
  return "?";
}

bool uses_hypernet(Variant v) { return v == Variant::hypemarl || v == Variant::mb_hypemarl; }

std::size_t TrainSchedule::updates(std::size_t env_steps) const {
  return updates_per_episode == 0 ? env_steps : updates_per_episode;
}

void TrainSchedule::validate() const {
  if (episodes == 0) throw ConfigError("schedule.episodes must be >= 1");
  if (warmup >= episodes) throw ConfigError("schedule.warmup must be < schedule.episodes");
  if (eval_period == 0) throw ConfigError("schedule.eval_period must be >= 1");
  if (buffer_capacity == 0) throw ConfigError("schedule.buffer_capacity must be >= 1");
  if (real_fraction > 1.0) throw ConfigError("schedule.real_fraction must be <= 1");
  if (!(noise_initial >= 0.0) || !(noise_final >= 0.0)) {
    throw ConfigError("schedule.noise_initial and schedule.noise_final must be >= 0");
  }
}

void NetworkConfig::validate() const {
  auto check = [](const std::vector<std::size_t>& dims, const char* key, bool allow_empty) {
    if (!allow_empty && dims.empty()) throw ConfigError(std::string(key) + " must not be empty");
    for (std::size_t d : dims) {
      if (d == 0) throw ConfigError(std::string(key) + " entries must be >= 1");
    }
  };
  check(main_hidden, "networks.main_hidden", false);
  check(hyper_hidden, "networks.hyper_hidden", false);
  check(plain_hidden, "networks.plain_hidden", false);
}

Td3Hyper RunConfig::td3_hyper() const {
  Td3Hyper h = td3;
  const bool hyper = uses_hypernet(variant);
  h.actor_lr = actor_lr.value_or(hyper ? 1e-6 : 3e-4);
  h.critic_lr = critic_lr.value_or(hyper ? 5e-5 : 3e-4);
  h.target_noise = target_noise_scale * env_params.action.half_width();
  h.noise_clip = noise_clip_scale * env_params.action.half_width();
  return h;
}

void RunConfig::validate() const {
  if (grid_rows < 2 || grid_cols < 2) throw ConfigError("env.rows and env.cols must be >= 2");
  env_params.validate();
  schedule.validate();
  if (!(target_noise_scale >= 0.0)) throw ConfigError("td3.target_noise must be >= 0");
  if (!(noise_clip_scale > 0.0)) throw ConfigError("td3.noise_clip must be > 0");
  if (actor_lr && !(*actor_lr >= 0.0)) throw ConfigError("td3.actor_lr must be >= 0");
  if (critic_lr && !(*critic_lr >= 0.0)) throw ConfigError("td3.critic_lr must be >= 0");
  td3_hyper().validate();
  encoding.validate();
  networks.validate();
  surrogate.validate();
  if (seeds.empty()) throw ConfigError("seeds must list at least one seed");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

// ---------------------------------------------------------------------------
// Canonical form

namespace {

using nlohmann::json;

json dims_json(const std::vector<std::size_t>& v) { return json(v); }

}  // namespace

std::string canonical_config(const RunConfig& c) {
  json j;
  j["variant"] = to_string(c.variant);
  const EnvParams& e = c.env_params;
  j["env"] = {{"kind", to_string(c.env)},
              {"rows", c.grid_rows},
              {"cols", c.grid_cols},
              {"layout", to_string(c.layout)},
              {"kappa", e.kappa},
              {"dt", e.dt},
              {"final_time", e.final_time},
              {"action_low", e.action.low},
              {"action_high", e.action.high}};
  const TrainSchedule& s = c.schedule;
  j["schedule"] = {{"episodes", s.episodes},
                   {"warmup", s.warmup},
                   {"eval_period", s.eval_period},
                   {"eval_episodes", s.eval_episodes},
                   {"eval_seed", s.eval_seed},
                   {"surrogate_ratio", s.surrogate_ratio},
                   {"updates_per_episode", s.updates_per_episode},
                   {"surrogate_updates", s.surrogate_updates},
                   {"real_fraction", s.real_fraction},
                   {"buffer_capacity", s.buffer_capacity},
                   {"checkpoint_period", s.checkpoint_period},
                   {"noise_initial", s.noise_initial},
                   {"noise_final", s.noise_final}};
  j["td3"] = {{"gamma", c.td3.gamma},
              {"batch_size", c.td3.batch_size},
              {"target_noise", c.target_noise_scale},
              {"noise_clip", c.noise_clip_scale},
              {"policy_delay", c.td3.policy_delay},
              {"polyak", c.td3.polyak},
              {"huber_delta", c.td3.huber_delta},
              {"actor_lr", c.actor_lr ? json(*c.actor_lr) : json(nullptr)},
              {"critic_lr", c.critic_lr ? json(*c.critic_lr) : json(nullptr)}};
  j["encoding"] = {{"dim", c.encoding.dim}, {"base", c.encoding.base}};
  j["networks"] = {{"main_hidden", dims_json(c.networks.main_hidden)},
                   {"hyper_hidden", dims_json(c.networks.hyper_hidden)},
                   {"plain_hidden", dims_json(c.networks.plain_hidden)}};
  const SurrogateConfig& g = c.surrogate;
  j["surrogate"] = {{"hidden", dims_json(g.hidden_dims)},
                    {"learning_rate", g.learning_rate},
                    {"batch_size", g.batch_size},
                    {"residual", g.residual},
                    {"pretrain_steps", g.pretrain_steps},
                    {"divergence_factor", g.divergence_factor}};
  return j.dump();
}

std::uint64_t config_hash(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_config(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct Value {
  enum class Kind { number, boolean, string, array } kind = Kind::number;
  double number = 0.0;
  bool integral = false;
  bool boolean = false;
  std::string text;
  std::vector<Value> items;
};

struct Entry {
  Value value;
  int line = 0;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void syntax(int line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

class ValueParser {
 public:
  ValueParser(const std::string& s, int line) : s_(s), line_(line) {}

  Value parse() {
    Value v = value();
    skip();
    if (pos_ != s_.size()) syntax(line_, "unexpected trailing text '" + s_.substr(pos_) + "'");
    return v;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  Value value() {
    skip();
    if (pos_ >= s_.size()) syntax(line_, "missing value");
    const char c = s_[pos_];
    Value v;
    if (c == '"') {
      v.kind = Value::Kind::string;
      ++pos_;
      while (pos_ < s_.size() && s_[pos_] != '"') {
        if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
        v.text += s_[pos_++];
      }
      if (pos_ >= s_.size()) syntax(line_, "unterminated string");
      ++pos_;
      return v;
    }
    if (c == '[') {
      v.kind = Value::Kind::array;
      ++pos_;
      skip();
      if (pos_ < s_.size() && s_[pos_] == ']') {
        ++pos_;
        return v;
      }
      for (;;) {
        v.items.push_back(value());
        skip();
        if (pos_ >= s_.size()) syntax(line_, "unterminated array");
        if (s_[pos_] == ',') {
          ++pos_;
          skip();
          if (pos_ < s_.size() && s_[pos_] == ']') {
            ++pos_;
            return v;
          }
          continue;
        }
        if (s_[pos_] == ']') {
          ++pos_;
          return v;
        }
        syntax(line_, "expected ',' or ']' in array");
      }
    }
    std::size_t end = pos_;
    while (end < s_.size() && s_[end] != ',' && s_[end] != ']' && s_[end] != ' ' &&
           s_[end] != '\t') {
      ++end;
    }
    std::string token = s_.substr(pos_, end - pos_);
    pos_ = end;
    if (token == "true" || token == "false") {
      v.kind = Value::Kind::boolean;
      v.boolean = token == "true";
      return v;
    }
    std::string digits;
    for (char ch : token) {
      if (ch != '_') digits += ch;
    }
    try {
      std::size_t used = 0;
      v.number = std::stod(digits, &used);
      if (used != digits.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      syntax(line_, "cannot parse value '" + token + "'");
    }
    v.integral = digits.find_first_of(".eEn") == std::string::npos;
    return v;
  }

  const std::string& s_;
  int line_;
  std::size_t pos_ = 0;
};

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

std::map<std::string, Entry> tokenize(const std::string& text) {
  std::map<std::string, Entry> out;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') syntax(line, "malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty()) syntax(line, "empty section name");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) syntax(line, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    if (key.empty()) syntax(line, "missing key");
    for (char ch : key) {
      if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-')) {
        syntax(line, "invalid key '" + key + "'");
      }
    }
    const std::string full = section.empty() ? key : section + "." + key;
    if (out.count(full)) syntax(line, "duplicate key '" + full + "'");
    out[full] = Entry{ValueParser(trim(s.substr(eq + 1)), line).parse(), line};
  }
  return out;
}

class Reader {
 public:
  explicit Reader(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

  const Value* find(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    used_.insert(key);
    return &it->second.value;
  }

  [[noreturn]] void bad(const std::string& key, const std::string& what) {
    throw ConfigError("config key '" + key + "' " + what);
  }

  void number(const std::string& key, double& out) {
    if (const Value* v = find(key)) {
      if (v->kind != Value::Kind::number) bad(key, "must be a number");
      out = v->number;
    }
  }

  void optional_number(const std::string& key, std::optional<double>& out) {
    if (const Value* v = find(key)) {
      if (v->kind != Value::Kind::number) bad(key, "must be a number");
      out = v->number;
    }
  }

  template <typename T>
  void count(const std::string& key, T& out) {
    if (const Value* v = find(key)) out = static_cast<T>(to_count(key, *v));
  }

  void boolean(const std::string& key, bool& out) {
    if (const Value* v = find(key)) {
      if (v->kind != Value::Kind::boolean) bad(key, "must be true or false");
      out = v->boolean;
    }
  }

  bool string(const std::string& key, std::string& out) {
    if (const Value* v = find(key)) {
      if (v->kind != Value::Kind::string) bad(key, "must be a quoted string");
      out = v->text;
      return true;
    }
    return false;
  }

  template <typename T>
  void counts(const std::string& key, std::vector<T>& out) {
    if (const Value* v = find(key)) {
      if (v->kind != Value::Kind::array) bad(key, "must be an array of non-negative integers");
      out.clear();
      for (const Value& item : v->items) out.push_back(static_cast<T>(to_count(key, item)));
    }
  }

  void reject_unused() const {
    for (const auto& [key, entry] : entries_) {
      if (!used_.count(key)) {
        throw ConfigError("unknown config key '" + key + "' (line " +
                          std::to_string(entry.line) + ")");
      }
    }
  }

 private:
  std::uint64_t to_count(const std::string& key, const Value& v) {
    if (v.kind != Value::Kind::number || !v.integral || v.number < 0.0 ||
        v.number != std::floor(v.number) || v.number > 1.8e19) {
      bad(key, "must be a non-negative integer");
    }
    return static_cast<std::uint64_t>(v.number);
  }

  std::map<std::string, Entry> entries_;
  std::set<std::string> used_;
};

RunConfig build(Reader& r) {
  RunConfig c;
  std::string text;
  if (r.string("variant", text)) c.variant = variant_from_string(text);
  if (r.string("env.kind", text)) c.env = env_kind_from_string(text);
  c.env_params = c.env == EnvKind::vacuum ? EnvParams::vacuum() : EnvParams::fluid();
  r.counts("seeds", c.seeds);
  r.string("output_dir", c.output_dir);

  r.count("env.rows", c.grid_rows);
  r.count("env.cols", c.grid_cols);
  if (r.string("env.layout", text)) c.layout = layout_scheme_from_string(text);
  r.number("env.kappa", c.env_params.kappa);
  r.number("env.dt", c.env_params.dt);
  r.number("env.final_time", c.env_params.final_time);
  r.number("env.action_low", c.env_params.action.low);
  r.number("env.action_high", c.env_params.action.high);

  TrainSchedule& s = c.schedule;
  r.count("schedule.episodes", s.episodes);
  r.count("schedule.warmup", s.warmup);
  r.count("schedule.eval_period", s.eval_period);
  r.count("schedule.eval_episodes", s.eval_episodes);
  r.count("schedule.eval_seed", s.eval_seed);
  r.count("schedule.surrogate_ratio", s.surrogate_ratio);
  r.count("schedule.updates_per_episode", s.updates_per_episode);
  r.count("schedule.surrogate_updates", s.surrogate_updates);
  r.number("schedule.real_fraction", s.real_fraction);
  r.count("schedule.buffer_capacity", s.buffer_capacity);
  r.count("schedule.checkpoint_period", s.checkpoint_period);
  r.number("schedule.noise_initial", s.noise_initial);
  r.number("schedule.noise_final", s.noise_final);

  r.number("td3.gamma", c.td3.gamma);
  r.count("td3.batch_size", c.td3.batch_size);
  r.number("td3.target_noise", c.target_noise_scale);
  r.number("td3.noise_clip", c.noise_clip_scale);
  r.count("td3.policy_delay", c.td3.policy_delay);
  r.number("td3.polyak", c.td3.polyak);
  r.number("td3.huber_delta", c.td3.huber_delta);
  r.optional_number("td3.actor_lr", c.actor_lr);
  r.optional_number("td3.critic_lr", c.critic_lr);

  r.count("encoding.dim", c.encoding.dim);
  r.number("encoding.base", c.encoding.base);

  r.counts("networks.main_hidden", c.networks.main_hidden);
  r.counts("networks.hyper_hidden", c.networks.hyper_hidden);
  r.counts("networks.plain_hidden", c.networks.plain_hidden);

  r.counts("surrogate.hidden", c.surrogate.hidden_dims);
  r.number("surrogate.learning_rate", c.surrogate.learning_rate);
  r.count("surrogate.batch_size", c.surrogate.batch_size);
  r.boolean("surrogate.residual", c.surrogate.residual);
  r.count("surrogate.pretrain_steps", c.surrogate.pretrain_steps);
  r.number("surrogate.divergence_factor", c.surrogate.divergence_factor);

  r.reject_unused();
  c.validate();
  return c;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  Reader reader(tokenize(text));
  return build(reader);
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

RunConfig config_from_canonical(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw CompatibilityError(std::string("stored configuration is not valid JSON: ") + e.what());
  }
  try {
    RunConfig c;
    c.variant = variant_from_string(j.at("variant").get<std::string>());
    const json& e = j.at("env");
    c.env = env_kind_from_string(e.at("kind").get<std::string>());
    c.env_params = c.env == EnvKind::vacuum ? EnvParams::vacuum() : EnvParams::fluid();
    c.grid_rows = e.at("rows").get<std::size_t>();
    c.grid_cols = e.at("cols").get<std::size_t>();
    c.layout = layout_scheme_from_string(e.at("layout").get<std::string>());
    c.env_params.kappa = e.at("kappa").get<double>();
    c.env_params.dt = e.at("dt").get<double>();
    c.env_params.final_time = e.at("final_time").get<double>();
    c.env_params.action.low = e.at("action_low").get<double>();
    c.env_params.action.high = e.at("action_high").get<double>();
    const json& s = j.at("schedule");
    TrainSchedule& t = c.schedule;
    t.episodes = s.at("episodes").get<std::size_t>();
    t.warmup = s.at("warmup").get<std::size_t>();
    t.eval_period = s.at("eval_period").get<std::size_t>();
    t.eval_episodes = s.at("eval_episodes").get<std::size_t>();
    t.eval_seed = s.at("eval_seed").get<std::uint64_t>();
    t.surrogate_ratio = s.at("surrogate_ratio").get<std::size_t>();
    t.updates_per_episode = s.at("updates_per_episode").get<std::size_t>();
    t.surrogate_updates = s.at("surrogate_updates").get<std::size_t>();
    t.real_fraction = s.at("real_fraction").get<double>();
    t.buffer_capacity = s.at("buffer_capacity").get<std::size_t>();
    t.checkpoint_period = s.at("checkpoint_period").get<std::size_t>();
    t.noise_initial = s.at("noise_initial").get<double>();
    t.noise_final = s.at("noise_final").get<double>();
    const json& d = j.at("td3");
    c.td3.gamma = d.at("gamma").get<double>();
    c.td3.batch_size = d.at("batch_size").get<std::size_t>();
    c.target_noise_scale = d.at("target_noise").get<double>();
    c.noise_clip_scale = d.at("noise_clip").get<double>();
    c.td3.policy_delay = d.at("policy_delay").get<std::size_t>();
    c.td3.polyak = d.at("polyak").get<double>();
    c.td3.huber_delta = d.at("huber_delta").get<double>();
    if (!d.at("actor_lr").is_null()) c.actor_lr = d.at("actor_lr").get<double>();
    if (!d.at("critic_lr").is_null()) c.critic_lr = d.at("critic_lr").get<double>();
    c.encoding.dim = j.at("encoding").at("dim").get<std::size_t>();
    c.encoding.base = j.at("encoding").at("base").get<double>();
    const json& n = j.at("networks");
    c.networks.main_hidden = n.at("main_hidden").get<std::vector<std::size_t>>();
    c.networks.hyper_hidden = n.at("hyper_hidden").get<std::vector<std::size_t>>();
    c.networks.plain_hidden = n.at("plain_hidden").get<std::vector<std::size_t>>();
    const json& g = j.at("surrogate");
    c.surrogate.hidden_dims = g.at("hidden").get<std::vector<std::size_t>>();
    c.surrogate.learning_rate = g.at("learning_rate").get<double>();
    c.surrogate.batch_size = g.at("batch_size").get<std::size_t>();
    c.surrogate.residual = g.at("residual").get<bool>();
    c.surrogate.pretrain_steps = g.at("pretrain_steps").get<std::size_t>();
    c.surrogate.divergence_factor = g.at("divergence_factor").get<double>();
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw CompatibilityError(std::string("stored configuration is incomplete: ") + e.what());
  }
}

}  // namespace hypemarl
