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

#include "hypemarl/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "hypemarl/error.hpp"
#include "hypemarl/marl.hpp"

namespace hypemarl {

using nlohmann::json;

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_f64_blob(const std::filesystem::path& path, const double* data, std::size_t n) {
  std::vector<unsigned char> bytes(n * 8);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(data[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + static_cast<std::size_t>(b)] =
        static_cast<unsigned char>(bits >> (8 * b));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed on " + path.string());
}

std::vector<double> read_f64_blob(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() % 8 != 0) throw IoError("truncated f64 blob " + path.string());
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(bytes[i * 8 + static_cast<std::size_t>(b)]) << (8 * b);
    }
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

std::filesystem::path checkpoint_dir(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) return path;
  if (path.filename() == "manifest.json") return path.parent_path();
  throw IoError("not a checkpoint: " + path.string());
}

namespace {

json read_manifest(const std::filesystem::path& dir) {
  const std::filesystem::path file = dir / "manifest.json";
  json j;
  try {
    j = json::parse(read_text_file(file));
  } catch (const json::exception& e) {
    throw IoError("malformed checkpoint manifest " + file.string() + ": " + e.what());
  }
  if (j.value("format", "") != kCheckpointFormat) {
    throw CompatibilityError(file.string() + " is not a hypemarl checkpoint");
  }
  const int version = j.value("version", -1);
  if (version != kCheckpointVersion) {
    throw CompatibilityError("checkpoint version " + std::to_string(version) +
                             " is not supported (expected " +
                             std::to_string(kCheckpointVersion) + ")");
  }
  return j;
}

class BlobWriter {
 public:
  BlobWriter(const std::filesystem::path& dir, json& index) : dir_(dir), index_(index) {}

  void put(const std::string& name, const double* data, std::size_t n) {
    const std::string file = name + ".bin";
    write_f64_blob(dir_ / file, data, n);
    index_[name] = {{"file", file}, {"length", n}};
  }
  void put(const std::string& name, const Vector& v) {
    put(name, v.data(), static_cast<std::size_t>(v.size()));
  }
  void put(const std::string& name, const std::vector<double>& v) { put(name, v.data(), v.size()); }

 private:
  std::filesystem::path dir_;
  json& index_;
};

class BlobReader {
 public:
  BlobReader(const std::filesystem::path& dir, const json& index) : dir_(dir), index_(index) {}

  std::vector<double> get(const std::string& name) const {
    if (!index_.contains(name)) throw CompatibilityError("checkpoint lacks blob '" + name + "'");
    const json& e = index_.at(name);
    auto data = read_f64_blob(dir_ / e.at("file").get<std::string>());
    if (data.size() != e.at("length").get<std::size_t>()) {
      throw IoError("blob '" + name + "' has the wrong length");
    }
    return data;
  }

  Vector vector(const std::string& name, Eigen::Index expected) const {
    auto data = get(name);
    if (static_cast<Eigen::Index>(data.size()) != expected) {
      throw CompatibilityError("blob '" + name + "' has " + std::to_string(data.size()) +
                               " entries, the configured network needs " +
                               std::to_string(expected));
    }
    return Eigen::Map<const Vector>(data.data(), expected);
  }

 private:
  std::filesystem::path dir_;
  const json& index_;
};

json adam_json(const AdamState& a) {
  return {{"step", a.step}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"epsilon", a.epsilon}};
}

void put_params(BlobWriter& w, json& adam, const std::string& name, const TrainedParams& p) {
  w.put(name + ".online", p.online);
  w.put(name + ".target", p.target);
  w.put(name + ".adam_m", p.adam.m);
  w.put(name + ".adam_v", p.adam.v);
  adam[name] = adam_json(p.adam);
}

void get_adam(const json& j, AdamState& a) {
  a.step = j.at("step").get<std::int64_t>();
  a.beta1 = j.at("beta1").get<double>();
  a.beta2 = j.at("beta2").get<double>();
  a.epsilon = j.at("epsilon").get<double>();
}

void get_params(const BlobReader& r, const json& adam, const std::string& name, TrainedParams& p) {
  const Eigen::Index n = p.online.size();
  p.online = r.vector(name + ".online", n);
  p.target = r.vector(name + ".target", n);
  p.adam.m = r.vector(name + ".adam_m", n);
  p.adam.v = r.vector(name + ".adam_v", n);
  get_adam(adam.at(name), p.adam);
}

json put_buffer(BlobWriter& w, const std::string& name, const ReplayBuffer& b) {
  const ReplayBuffer::Raw raw = b.raw();
  std::vector<double> agents(raw.agents.begin(), raw.agents.end());
  w.put(name + ".agents", agents);
  w.put(name + ".states", raw.states);
  w.put(name + ".actions", raw.actions);
  w.put(name + ".rewards", raw.rewards);
  w.put(name + ".next_states", raw.next_states);
  w.put(name + ".mus", raw.mus);
  return {{"capacity", raw.capacity},   {"state_dim", raw.state_dim}, {"action_dim", raw.action_dim},
          {"param_dim", raw.param_dim}, {"head", raw.head},           {"size", raw.size},
          {"inserted", raw.inserted}};
}

ReplayBuffer get_buffer(const BlobReader& r, const json& meta, const std::string& name,
                        const ReplayBuffer& shape) {
  ReplayBuffer::Raw raw;
  raw.capacity = meta.at("capacity").get<std::size_t>();
  raw.state_dim = meta.at("state_dim").get<std::size_t>();
  raw.action_dim = meta.at("action_dim").get<std::size_t>();
  raw.param_dim = meta.at("param_dim").get<std::size_t>();
  raw.head = meta.at("head").get<std::size_t>();
  raw.size = meta.at("size").get<std::size_t>();
  raw.inserted = meta.at("inserted").get<std::uint64_t>();
  if (raw.state_dim != shape.state_dim() || raw.action_dim != shape.action_dim() ||
      raw.param_dim != shape.param_dim()) {
    throw CompatibilityError("replay buffer '" + name + "' has incompatible dimensions");
  }
  for (double a : r.get(name + ".agents")) raw.agents.push_back(static_cast<std::uint32_t>(a));
  raw.states = r.get(name + ".states");
  raw.actions = r.get(name + ".actions");
  raw.rewards = r.get(name + ".rewards");
  raw.next_states = r.get(name + ".next_states");
  raw.mus = r.get(name + ".mus");
  return ReplayBuffer::from_raw(std::move(raw));
}

}  // namespace

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path) {
  const json j = read_manifest(checkpoint_dir(path));
  CheckpointInfo info;
  info.version = j.at("version").get<int>();
  info.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
  info.config = j.at("config").dump();
  info.seed = j.at("seed").get<std::uint64_t>();
  info.episode = j.at("episode").get<std::size_t>();
  return info;
}

void Trainer::save(const std::filesystem::path& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create checkpoint directory " + dir.string() + ": " + ec.message());
  json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["config_hash"] = hash_hex(config_hash(cfg_));
  j["config"] = json::parse(canonical_config(cfg_));
  j["seed"] = seed_;
  j["episode"] = episode_;
  j["real_episodes"] = real_episodes_;
  j["agent_updates"] = agent_updates_;
  j["surrogate_updates"] = surrogate_updates_;
  j["surrogate_ready"] = surrogate_ready_;
  j["max_abs_real"] = hash_hex(std::bit_cast<std::uint64_t>(max_abs_real_));
  j["rng"] = rng_.serialize();
  j["td3"] = {{"critic_steps", stack_.learner->critic_steps()},
              {"actor_steps", stack_.learner->actor_steps()}};
  json blobs = json::object();
  json adam = json::object();
  BlobWriter w(dir, blobs);
  const Td3Nets& nets = stack_.learner->nets();
  put_params(w, adam, "actor", nets.actor);
  put_params(w, adam, "critic1", nets.critic1);
  put_params(w, adam, "critic2", nets.critic2);
  json buffers;
  buffers["real"] = put_buffer(w, "real", real_);
  if (surrogate_) {
    buffers["synthetic"] = put_buffer(w, "synthetic", synthetic_);
    w.put("surrogate.weights", surrogate_->weights());
    w.put("surrogate.adam_m", surrogate_->adam().m);
    w.put("surrogate.adam_v", surrogate_->adam().v);
    adam["surrogate"] = adam_json(surrogate_->adam());
  }
  j["adam"] = adam;
  j["buffers"] = buffers;
  j["blobs"] = blobs;
  write_text_file(dir / "manifest.json", j.dump(2) + "\n");
}

Trainer Trainer::load(const std::filesystem::path& path, const RunConfig* expected, bool force) {
  const std::filesystem::path dir = checkpoint_dir(path);
  const json j = read_manifest(dir);
  RunConfig stored = config_from_canonical(j.at("config").dump());
  const std::string stored_hash = j.at("config_hash").get<std::string>();
  if (stored_hash != hash_hex(config_hash(stored))) {
    throw CompatibilityError("checkpoint config hash does not match its stored config");
  }
  RunConfig cfg = stored;
  if (expected && hash_hex(config_hash(*expected)) != stored_hash) {
    if (!force) {
      throw CompatibilityError("config hash " + hash_hex(config_hash(*expected)) +
                               " differs from checkpoint hash " + stored_hash +
                               " in " + dir.string() + " (pass --force to load anyway)");
    }
    std::cerr << "warning: config hash differs from checkpoint " << dir.string()
              << "; loading with the supplied config\n";
    cfg = *expected;
  }
  cfg.seeds = expected ? expected->seeds : stored.seeds;
  cfg.output_dir = expected ? expected->output_dir : stored.output_dir;

  Trainer t(Restore{}, cfg, j.at("seed").get<std::uint64_t>());
  try {
    t.episode_ = j.at("episode").get<std::size_t>();
    t.real_episodes_ = j.at("real_episodes").get<std::size_t>();
    t.agent_updates_ = j.at("agent_updates").get<std::size_t>();
    t.surrogate_updates_ = j.at("surrogate_updates").get<std::size_t>();
    t.surrogate_ready_ = j.at("surrogate_ready").get<bool>();
    t.max_abs_real_ = std::bit_cast<double>(
        static_cast<std::uint64_t>(std::stoull(j.at("max_abs_real").get<std::string>(), nullptr, 16)));
    t.rng_.deserialize(j.at("rng").get<std::string>());
    const BlobReader r(dir, j.at("blobs"));
    const json& adam = j.at("adam");
    Td3Nets& nets = t.stack_.learner->nets();
    get_params(r, adam, "actor", nets.actor);
    get_params(r, adam, "critic1", nets.critic1);
    get_params(r, adam, "critic2", nets.critic2);
    t.stack_.learner->set_counters(j.at("td3").at("critic_steps").get<std::int64_t>(),
                                   j.at("td3").at("actor_steps").get<std::int64_t>());
    const json& buffers = j.at("buffers");
    t.real_ = get_buffer(r, buffers.at("real"), "real", t.real_);
    if (t.surrogate_) {
      if (!buffers.contains("synthetic")) {
        throw CompatibilityError("checkpoint lacks the surrogate model state");
      }
      t.synthetic_ = get_buffer(r, buffers.at("synthetic"), "synthetic", t.synthetic_);
      const Eigen::Index n = t.surrogate_->weights().size();
      t.surrogate_->weights() = r.vector("surrogate.weights", n);
      t.surrogate_->adam().m = r.vector("surrogate.adam_m", n);
      t.surrogate_->adam().v = r.vector("surrogate.adam_v", n);
      get_adam(adam.at("surrogate"), t.surrogate_->adam());
    }
  } catch (const json::exception& e) {
    throw CompatibilityError("incomplete checkpoint manifest in " + dir.string() + ": " + e.what());
  }
  return t;
}

}  // namespace hypemarl
