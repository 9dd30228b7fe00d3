// Copyright (c) the Scaleform authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "scaleform/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "scaleform/errors.hpp"

namespace scaleform {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  if (out.empty()) out.push_back("");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno != 0) {
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  }
  return d;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const unsigned long long u = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || v[0] == '-' || *end != '\0' || errno != 0) {
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return u;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("'" + key + "' expects a boolean, got '" + v + "'");
}

degrade::Range to_range(const std::string& key, const std::string& v) {
  const auto parts = split_list(v);
  if (parts.size() == 1) {
    const double d = to_double(key, parts[0]);
    return {d, d};
  }
  if (parts.size() != 2) throw ConfigError("'" + key + "' expects A or A,B");
  return {to_double(key, parts[0]), to_double(key, parts[1])};
}

std::string range_text(const degrade::Range& r) {
  return format_double(r.lo) + "," + format_double(r.hi);
}

template <class T>
std::string list_text(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::vector<std::uint64_t> to_uint_list(const std::string& key, const std::string& v) {
  std::vector<std::uint64_t> out;
  if (trim(v).empty()) return out;
  for (const auto& p : split_list(v)) out.push_back(to_uint(key, p));
  return out;
}

// One binding per config key: how to read it into and write it out of a RunConfig.
struct Binding {
  std::function<void(RunConfig&, const std::string&, const std::string&)> read;
  std::function<std::string(const RunConfig&)> write;
};

template <class Get>
Binding size_binding(Get get) {
  return {[get](RunConfig& c, const std::string& k, const std::string& v) {
            get(c) = std::size_t(to_uint(k, v));
          },
          [get](const RunConfig& c) { return std::to_string(get(const_cast<RunConfig&>(c))); }};
}

template <class Get>
Binding u64_binding(Get get) {
  return {[get](RunConfig& c, const std::string& k, const std::string& v) { get(c) = to_uint(k, v); },
          [get](const RunConfig& c) { return std::to_string(get(const_cast<RunConfig&>(c))); }};
}

template <class Get>
Binding double_binding(Get get) {
  return {[get](RunConfig& c, const std::string& k, const std::string& v) { get(c) = to_double(k, v); },
          [get](const RunConfig& c) { return format_double(get(const_cast<RunConfig&>(c))); }};
}

template <class Get>
Binding bool_binding(Get get) {
  return {[get](RunConfig& c, const std::string& k, const std::string& v) { get(c) = to_bool(k, v); },
          [get](const RunConfig& c) {
            return std::string(get(const_cast<RunConfig&>(c)) ? "true" : "false");
          }};
}

template <class Get>
Binding range_binding(Get get) {
  return {[get](RunConfig& c, const std::string& k, const std::string& v) { get(c) = to_range(k, v); },
          [get](const RunConfig& c) { return range_text(get(const_cast<RunConfig&>(c))); }};
}

const std::map<std::string, Binding>& bindings() {
  static const std::map<std::string, Binding> table = [] {
    std::map<std::string, Binding> b;
    b["net.channels"] = size_binding([](RunConfig& c) -> auto& { return c.net.channels; });
    b["ffup.squeeze_ratio"] = size_binding([](RunConfig& c) -> auto& { return c.net.ffup.squeeze_ratio; });
    b["ffup.hidden"] = size_binding([](RunConfig& c) -> auto& { return c.net.ffup.hidden; });
    b["ffup.offset_clamp"] = double_binding([](RunConfig& c) -> auto& { return c.net.ffup.offset_clamp; });
    b["ffup.kernel"] = size_binding([](RunConfig& c) -> auto& { return c.net.ffup.kernel; });
    b["ffup.max_scale"] = double_binding([](RunConfig& c) -> auto& { return c.net.ffup.max_scale; });
    b["ffe.depths"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                         c.net.ffe.depths.clear();
                         for (auto d : to_uint_list(k, v)) c.net.ffe.depths.push_back(std::size_t(d));
                       },
                       [](const RunConfig& c) { return list_text(c.net.ffe.depths); }};
    b["ffe.dim"] = size_binding([](RunConfig& c) -> auto& { return c.net.ffe.dim; });
    b["ffe.heads"] = size_binding([](RunConfig& c) -> auto& { return c.net.ffe.heads; });
    b["ffe.window"] = size_binding([](RunConfig& c) -> auto& { return c.net.ffe.window; });
    b["ffe.mlp_ratio"] = size_binding([](RunConfig& c) -> auto& { return c.net.ffe.mlp_ratio; });
    b["ffe.out_channels"] = size_binding([](RunConfig& c) -> auto& { return c.net.ffe.out_channels; });
    b["ffe.pos_size"] = size_binding([](RunConfig& c) -> auto& { return c.net.ffe.pos_size; });
    b["ffe.shift"] = bool_binding([](RunConfig& c) -> auto& { return c.net.ffe.shift; });
    b["gen.latent_dim"] = size_binding([](RunConfig& c) -> auto& { return c.net.gen.latent_dim; });
    b["gen.mapping_hidden"] = size_binding([](RunConfig& c) -> auto& { return c.net.gen.mapping_hidden; });
    b["gen.channels"] = size_binding([](RunConfig& c) -> auto& { return c.net.gen.channels; });
    b["gen.start_size"] = size_binding([](RunConfig& c) -> auto& { return c.net.gen.start_size; });
    b["train.lr"] = double_binding([](RunConfig& c) -> auto& { return c.train.adam.lr; });
    b["train.beta1"] = double_binding([](RunConfig& c) -> auto& { return c.train.adam.beta1; });
    b["train.beta2"] = double_binding([](RunConfig& c) -> auto& { return c.train.adam.beta2; });
    b["train.eps"] = double_binding([](RunConfig& c) -> auto& { return c.train.adam.eps; });
    b["train.iters"] = u64_binding([](RunConfig& c) -> auto& { return c.train.total_iters; });
    b["train.milestones"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                               c.train.milestones = to_uint_list(k, v);
                             },
                             [](const RunConfig& c) { return list_text(c.train.milestones); }};
    b["train.decay"] = double_binding([](RunConfig& c) -> auto& { return c.train.decay; });
    b["train.batch"] = size_binding([](RunConfig& c) -> auto& { return c.train.batch; });
    b["train.seed"] = u64_binding([](RunConfig& c) -> auto& { return c.train.seed; });
    b["train.scale"] = range_binding([](RunConfig& c) -> auto& { return c.train.scale; });
    b["train.resample_degradation"] =
        bool_binding([](RunConfig& c) -> auto& { return c.train.resample_degradation; });
    b["train.flip"] = bool_binding([](RunConfig& c) -> auto& { return c.train.flip; });
    b["train.permute_channels"] = bool_binding([](RunConfig& c) -> auto& { return c.train.permute_channels; });
    b["train.resize_back"] = bool_binding([](RunConfig& c) -> auto& { return c.train.resize_back; });
    b["train.checkpoint_every"] =
        u64_binding([](RunConfig& c) -> auto& { return c.train.checkpoint_every; });
    b["degrade.sigma"] = range_binding([](RunConfig& c) -> auto& { return c.train.degradation.sigma; });
    b["degrade.delta"] = range_binding([](RunConfig& c) -> auto& { return c.train.degradation.delta; });
    b["degrade.q"] = range_binding([](RunConfig& c) -> auto& { return c.train.degradation.q; });
    b["degrade.jitter_brightness"] =
        double_binding([](RunConfig& c) -> auto& { return c.train.degradation.jitter.brightness; });
    b["degrade.jitter_contrast"] =
        double_binding([](RunConfig& c) -> auto& { return c.train.degradation.jitter.contrast; });
    b["degrade.jitter_saturation"] =
        double_binding([](RunConfig& c) -> auto& { return c.train.degradation.jitter.saturation; });
    b["loss.lambda1"] = double_binding([](RunConfig& c) -> auto& { return c.train.weights.lambda1; });
    b["loss.lambda2"] = double_binding([](RunConfig& c) -> auto& { return c.train.weights.lambda2; });
    b["loss.rec"] = double_binding([](RunConfig& c) -> auto& { return c.train.weights.rec; });
    b["loss.adv"] = double_binding([](RunConfig& c) -> auto& { return c.train.weights.adv; });
    b["loss.comp"] = double_binding([](RunConfig& c) -> auto& { return c.train.weights.comp; });
    b["loss.id"] = double_binding([](RunConfig& c) -> auto& { return c.train.weights.id; });
    return b;
  }();
  return table;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ConfigMap ConfigMap::parse(const std::string& text) {
  ConfigMap map;
  std::stringstream ss(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": bad section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    map.set(section.empty() ? key : section + "." + key, trim(line.substr(eq + 1)));
  }
  return map;
}

ConfigMap ConfigMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void ConfigMap::set(const std::string& key, const std::string& value) { entries_[key] = value; }

bool ConfigMap::has(const std::string& key) const { return entries_.count(key) != 0; }

const std::string& ConfigMap::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing config key " + key);
  return it->second;
}

void ConfigMap::merge(const ConfigMap& other) {
  for (const auto& [k, v] : other.entries_) entries_[k] = v;
}

std::string ConfigMap::to_text() const {
  std::string out, section;
  for (const auto& [key, value] : entries_) {
    const auto dot = key.find('.');
    const std::string s = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string k = dot == std::string::npos ? key : key.substr(dot + 1);
    if (s != section) {
      out += (out.empty() ? "" : "\n") + std::string("[") + s + "]\n";
      section = s;
    }
    out += k + " = " + value + "\n";
  }
  return out;
}

void TrainConfig::validate() const {
  if (total_iters == 0) throw ConfigError("train.iters must be positive");
  if (batch == 0) throw ConfigError("train.batch must be positive");
  if (!(scale.lo >= 1.0 && scale.hi >= scale.lo)) throw ConfigError("train.scale must be >= 1");
  schedule().validate(total_iters);
  weights.validate();
  degradation.validate();
  if (!(adam.beta1 >= 0 && adam.beta1 < 1 && adam.beta2 >= 0 && adam.beta2 < 1 && adam.eps > 0)) {
    throw ConfigError("Adam betas must be in [0, 1) and eps positive");
  }
}

void RunConfig::apply(const ConfigMap& map) {
  const auto& table = bindings();
  for (const auto& [key, value] : map.entries()) {
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key " + key);
    try {
      it->second.read(*this, key, value);
    } catch (const RangeError& e) {
      throw ConfigError(e.what());
    }
  }
}

ConfigMap RunConfig::to_map() const {
  ConfigMap map;
  for (const auto& [key, binding] : bindings()) map.set(key, binding.write(*this));
  return map;
}

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig c;
  c.apply(ConfigMap::parse(text));
  return c;
}

}  // namespace scaleform
