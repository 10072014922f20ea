// Copyright 2026 The CTA Authors. All Rights Reserved.
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

#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace cta::cli {

using nlohmann::json;

namespace {

std::string join_lines(const std::vector<std::string>& items) {
  std::string out = std::to_string(items.size()) + " config violation(s):";
  for (const auto& s : items) out += "\n  " + s;
  return out;
}

std::string child(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string index_path(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

// Collects violations instead of stopping at the first one.
class Reader {
 public:
  std::vector<std::string> errors;

  void error(const std::string& path, const std::string& message) {
    errors.push_back(path + ": " + message);
  }

  bool object(const json& j, const std::string& path) {
    if (j.is_object()) return true;
    error(path, "expected an object");
    return false;
  }

  void known_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, value] : j.items())
      if (!allowed.contains(key)) error(child(path, key), "unknown key");
  }

  double number(const json& j, const char* key, const std::string& path, double fallback,
                double lo, double hi, bool lo_open = false, bool hi_open = false) {
    const std::string p = child(path, key);
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number()) {
      error(p, "expected a number");
      return fallback;
    }
    const double d = v.get<double>();
    const bool below = lo_open ? d <= lo : d < lo;
    const bool above = hi_open ? d >= hi : d > hi;
    if (!std::isfinite(d) || below || above) {
      std::ostringstream msg;
      msg << "value " << d << " out of range " << (lo_open ? "(" : "[") << lo << ", " << hi
          << (hi_open ? ")" : "]");
      error(p, msg.str());
      return fallback;
    }
    return d;
  }

  std::uint64_t unsigned_int(const json& j, const char* key, const std::string& path,
                             std::uint64_t fallback, std::uint64_t lo,
                             std::uint64_t hi = ~std::uint64_t{0}) {
    if (!j.contains(key)) return fallback;
    return unsigned_value(j.at(key), child(path, key), fallback, lo, hi);
  }

  std::uint64_t unsigned_value(const json& v, const std::string& p, std::uint64_t fallback,
                               std::uint64_t lo, std::uint64_t hi = ~std::uint64_t{0}) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      error(p, "expected a non-negative integer");
      return fallback;
    }
    const auto u = v.get<std::uint64_t>();
    if (u < lo || u > hi) {
      error(p, "value " + std::to_string(u) + " out of range [" + std::to_string(lo) + ", " +
                   (hi == ~std::uint64_t{0} ? std::string("inf") : std::to_string(hi)) + "]");
      return fallback;
    }
    return u;
  }

  int integer(const json& j, const char* key, const std::string& path, int fallback, int lo, int hi) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    const std::string p = child(path, key);
    if (!v.is_number_integer()) {
      error(p, "expected an integer");
      return fallback;
    }
    const auto i = v.get<std::int64_t>();
    if (i < lo || i > hi) {
      error(p, "value " + std::to_string(i) + " out of range [" + std::to_string(lo) + ", " +
                   std::to_string(hi) + "]");
      return fallback;
    }
    return static_cast<int>(i);
  }

  std::string text(const json& j, const char* key, const std::string& path, std::string fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_string()) {
      error(child(path, key), "expected a string");
      return fallback;
    }
    return v.get<std::string>();
  }

  bool boolean(const json& j, const char* key, const std::string& path, bool fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_boolean()) {
      error(child(path, key), "expected true or false");
      return fallback;
    }
    return v.get<bool>();
  }

  // Parses an enum through its from_string function, recording failures.
  template <typename Enum, typename Parse>
  Enum choice(const json& j, const char* key, const std::string& path, Enum fallback, Parse parse) {
    if (!j.contains(key)) return fallback;
    const std::string p = child(path, key);
    if (!j.at(key).is_string()) {
      error(p, "expected a string");
      return fallback;
    }
    try {
      return parse(j.at(key).get<std::string>());
    } catch (const Error& e) {
      error(p, strip_code(e));
      return fallback;
    }
  }

  static std::string strip_code(const Error& e) {
    const std::string message = e.what();
    const std::size_t prefix = to_string(e.code()).size() + 2;
    return message.size() > prefix ? message.substr(prefix) : message;
  }
};

void read_model(Reader& r, const json& j, ExperimentConfig& cfg) {
  const std::string path = "model";
  if (!r.object(j, path)) return;
  r.known_keys(j, path, {"num_classes", "bn_epsilon", "bn_stat_momentum", "layers"});
  const std::size_t classes = r.unsigned_int(j, "num_classes", path, kShapeClasses, 2, 1000);
  ModelSpec spec = default_model_spec(classes);
  spec.bn_epsilon = r.number(j, "bn_epsilon", path, spec.bn_epsilon, 0.0, 1.0, true);
  spec.bn_stat_momentum = r.number(j, "bn_stat_momentum", path, spec.bn_stat_momentum, 0.0, 1.0);
  if (j.contains("layers")) {
    const json& layers = j.at("layers");
    const std::string lp = child(path, "layers");
    if (!layers.is_array() || layers.empty()) {
      r.error(lp, "expected a non-empty array of layer objects");
    } else {
      spec.layers.clear();
      for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string p = index_path(lp, i);
        const json& l = layers[i];
        if (!r.object(l, p)) continue;
        r.known_keys(l, p, {"kind", "in", "out", "kernel", "channels", "window", "bias"});
        if (!l.contains("kind")) r.error(child(p, "kind"), "required");
        LayerSpec layer;
        layer.kind = r.choice(l, "kind", p, LayerKind::kRelu, layer_kind_from_string);
        layer.in = r.unsigned_int(l, "in", p, 0, 0, 1u << 20);
        layer.out = r.unsigned_int(l, "out", p, 0, 0, 1u << 20);
        layer.kernel = r.unsigned_int(l, "kernel", p, 3, 1, 15);
        layer.channels = r.unsigned_int(l, "channels", p, 0, 0, 1u << 20);
        layer.window = r.unsigned_int(l, "window", p, 2, 1, 32);
        layer.bias = r.boolean(l, "bias", p, true);
        spec.layers.push_back(layer);
      }
    }
  }
  if (r.errors.empty()) {
    try {
      spec.layer_output_shapes();
    } catch (const Error& e) {
      r.error(child(path, "layers"), Reader::strip_code(e));
    }
    if (spec.batchnorm_count() == 0)
      r.error(child(path, "layers"), "at least one batchnorm layer is required for adaptation");
  }
  cfg.model = spec;
}

void read_training(Reader& r, const json& j, ExperimentConfig& cfg) {
  const std::string path = "source_training";
  if (!r.object(j, path)) return;
  r.known_keys(j, path, {"epochs", "batch_size", "optimizer", "learning_rate", "momentum",
                         "per_class", "split_fraction"});
  auto& t = cfg.source_training;
  t.epochs = r.unsigned_int(j, "epochs", path, t.epochs, 1, 1000);
  t.batch_size = r.unsigned_int(j, "batch_size", path, t.batch_size, 2, 4096);
  t.optimizer.kind = r.choice(j, "optimizer", path, t.optimizer.kind, optimizer_kind_from_string);
  t.optimizer.learning_rate = r.number(j, "learning_rate", path, t.optimizer.learning_rate, 0.0, 10.0);
  t.optimizer.momentum = r.number(j, "momentum", path, t.optimizer.momentum, 0.0, 1.0, false, true);
  t.per_class = r.unsigned_int(j, "per_class", path, t.per_class, 2, 100000);
  t.split_fraction = r.number(j, "split_fraction", path, t.split_fraction, 0.0, 1.0, true, true);
}

DomainSpec read_domain(Reader& r, const json& j, const std::string& path) {
  DomainSpec d;
  if (!r.object(j, path)) return d;
  r.known_keys(j, path, {"id", "name", "kind", "style", "seed", "background_level",
                         "texture_frequency", "gain", "bias", "noise_sigma", "occluder_fraction"});
  if (!j.contains("id")) r.error(child(path, "id"), "required");
  d.id = r.integer(j, "id", path, 0, 0, 1 << 20);
  d.name = r.text(j, "name", path, "domain" + std::to_string(d.id));
  d.kind = r.choice(j, "kind", path, ShiftKind::kContextual, shift_kind_from_string);
  d.style = r.choice(j, "style", path, Style::kSolid, style_from_string);
  d.seed = r.unsigned_int(j, "seed", path, 1000 + static_cast<std::uint64_t>(d.id), 0);
  auto& c = d.contextual;
  c.background_level = r.number(j, "background_level", path, 0.0, 0.0, 1.0);
  c.texture_frequency = r.number(j, "texture_frequency", path, 0.0, 0.0, 16.0);
  c.noise_sigma = r.number(j, "noise_sigma", path, 0.0, 0.0, 1.0);
  c.occluder_fraction = r.number(j, "occluder_fraction", path, 0.0, 0.0, 0.4);
  const auto triple = [&](const char* key, std::array<double, 3>& out, double lo, double hi) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    const std::string p = child(path, key);
    if (!v.is_array() || v.size() != 3) {
      r.error(p, "expected an array of 3 numbers");
      return;
    }
    for (std::size_t i = 0; i < 3; ++i) {
      if (!v[i].is_number() || v[i].get<double>() < lo || v[i].get<double>() > hi) {
        r.error(index_path(p, i), "expected a number in [" + std::to_string(lo) + ", " +
                                      std::to_string(hi) + "]");
        continue;
      }
      out[i] = v[i].get<double>();
    }
  };
  triple("gain", c.gain, 0.0, 4.0);
  triple("bias", c.bias, -1.0, 1.0);
  return d;
}

void read_domains(Reader& r, const json& j, ExperimentConfig& cfg) {
  const std::string path = "domains";
  if (j.is_string()) {
    const std::string preset = j.get<std::string>();
    if (preset == "contextual") {
      cfg.domains = default_contextual_domains();
    } else if (preset == "semantic") {
      cfg.domains = default_semantic_domains();
      cfg.domains.insert(cfg.domains.begin(), default_contextual_domains().front());
    } else if (preset == "all") {
      cfg.domains = default_contextual_domains();
      for (const auto& d : default_semantic_domains()) cfg.domains.push_back(d);
    } else {
      r.error(path, "unknown preset '" + preset + "' (contextual, semantic, all)");
    }
    return;
  }
  if (!j.is_array() || j.empty()) {
    r.error(path, "expected a preset name or a non-empty array of domain objects");
    return;
  }
  cfg.domains.clear();
  std::set<int> ids;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = index_path(path, i);
    DomainSpec d = read_domain(r, j[i], p);
    if (!ids.insert(d.id).second) r.error(child(p, "id"), "duplicate domain id " + std::to_string(d.id));
    cfg.domains.push_back(d);
  }
}

std::vector<int> read_ids(Reader& r, const json& j, const char* key, const std::string& path,
                          std::vector<int> fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  const std::string p = child(path, key);
  if (!v.is_array() || v.empty()) {
    r.error(p, "expected a non-empty array of domain ids");
    return fallback;
  }
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number_integer()) {
      r.error(index_path(p, i), "expected an integer domain id");
      continue;
    }
    out.push_back(v[i].get<int>());
  }
  return out;
}

void read_protocol(Reader& r, const json& j, ExperimentConfig& cfg) {
  const std::string path = "protocol";
  if (!r.object(j, path)) return;
  r.known_keys(j, path, {"kind", "source_ids", "target_ids", "batch_size", "epochs",
                         "batch_sizes", "seeds"});
  auto& p = cfg.protocol;
  p.kind = r.choice(j, "kind", path, p.kind, protocol_kind_from_string);
  p.source_ids = read_ids(r, j, "source_ids", path, p.source_ids);
  p.target_ids = read_ids(r, j, "target_ids", path, p.target_ids);
  p.batch_size = r.unsigned_int(j, "batch_size", path, p.batch_size, 2, 1u << 16);
  p.epochs = r.unsigned_int(j, "epochs", path, p.epochs, 1, 1000);
  if (j.contains("batch_sizes")) {
    const json& v = j.at("batch_sizes");
    const std::string bp = child(path, "batch_sizes");
    if (!v.is_array() || v.empty()) {
      r.error(bp, "expected a non-empty array of batch sizes");
    } else {
      p.batch_sizes.clear();
      for (std::size_t i = 0; i < v.size(); ++i)
        p.batch_sizes.push_back(r.unsigned_value(v[i], index_path(bp, i), 2, 2, 1u << 16));
      for (std::size_t i = 1; i < p.batch_sizes.size(); ++i)
        if (p.batch_sizes[i] <= p.batch_sizes[i - 1])
          r.error(bp, "batch sizes must be sorted ascending without repeats");
    }
  }
  if (j.contains("seeds")) {
    const json& v = j.at("seeds");
    const std::string sp = child(path, "seeds");
    if (!v.is_array() || v.empty()) {
      r.error(sp, "expected a non-empty array of seeds");
    } else {
      p.seeds.clear();
      for (std::size_t i = 0; i < v.size(); ++i)
        p.seeds.push_back(r.unsigned_value(v[i], index_path(sp, i), 0, 0));
    }
  }
}

AdapterConfig read_adapter(Reader& r, const json& j, const std::string& path) {
  AdapterConfig a;
  if (!r.object(j, path)) return a;
  r.known_keys(j, path, {"method", "learning_rate", "cotta_alpha", "restore_prob", "optimizer", "seed"});
  if (!j.contains("method")) r.error(child(path, "method"), "required");
  a.method = r.choice(j, "method", path, AdaptMethod::kBn, adapt_method_from_string);
  const bool learns = a.method == AdaptMethod::kTent || a.method == AdaptMethod::kCotta;
  if (learns && !j.contains("learning_rate"))
    r.error(child(path, "learning_rate"), "required for " + std::string(to_string(a.method)));
  a.learning_rate = r.number(j, "learning_rate", path, 0.0, 0.0, 10.0, learns);
  a.cotta_alpha = r.number(j, "cotta_alpha", path, a.cotta_alpha, 0.0, 1.0);
  a.restore_prob = r.number(j, "restore_prob", path, a.restore_prob, 0.0, 1.0);
  if (j.contains("optimizer"))
    a.optimizer = r.choice(j, "optimizer", path, OptimizerKind::kSgd, optimizer_kind_from_string);
  a.seed = r.unsigned_int(j, "seed", path, 0, 0);
  return a;
}

void read_adapters(Reader& r, const json& j, ExperimentConfig& cfg) {
  cfg.adapters.clear();
  if (j.is_array()) {
    if (j.empty()) r.error("adapter", "expected at least one adapter");
    for (std::size_t i = 0; i < j.size(); ++i)
      cfg.adapters.push_back(read_adapter(r, j[i], index_path("adapter", i)));
  } else {
    cfg.adapters.push_back(read_adapter(r, j, "adapter"));
  }
}

void read_inspect(Reader& r, const json& j, ExperimentConfig& cfg) {
  const std::string path = "inspect";
  if (!r.object(j, path)) return;
  r.known_keys(j, path, {"domain_id", "samples"});
  cfg.inspect.domain_id = r.integer(j, "domain_id", path, cfg.inspect.domain_id, -1, 1 << 20);
  cfg.inspect.samples = r.unsigned_int(j, "samples", path, cfg.inspect.samples, 1, kMaxChartSamples);
}

void check_cross_references(Reader& r, ExperimentConfig& cfg) {
  auto& p = cfg.protocol;
  if (p.source_ids.empty() && !cfg.domains.empty()) p.source_ids = {cfg.domains.front().id};
  if (p.target_ids.empty()) {
    const std::set<int> src(p.source_ids.begin(), p.source_ids.end());
    for (const auto& d : cfg.domains)
      if (!src.contains(d.id)) p.target_ids.push_back(d.id);
  }
  const auto check = [&](const std::vector<int>& ids, const char* key) {
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (!find_domain(cfg, ids[i]))
        r.error(index_path(std::string("protocol.") + key, i),
                "domain id " + std::to_string(ids[i]) + " is not defined in domains");
  };
  check(p.source_ids, "source_ids");
  check(p.target_ids, "target_ids");
  const std::set<int> src(p.source_ids.begin(), p.source_ids.end());
  for (std::size_t i = 0; i < p.target_ids.size(); ++i)
    if (src.contains(p.target_ids[i]))
      r.error(index_path("protocol.target_ids", i),
              "domain " + std::to_string(p.target_ids[i]) + " is also a source domain");
  if (p.target_ids.empty()) r.error("protocol.target_ids", "no target domains");
  if (cfg.inspect.domain_id >= 0 && !find_domain(cfg, cfg.inspect.domain_id))
    r.error("inspect.domain_id", "domain id " + std::to_string(cfg.inspect.domain_id) +
                                     " is not defined in domains");
  if (cfg.model.num_classes != kShapeClasses)
    r.error("model.num_classes", "the synthetic benchmark has " + std::to_string(kShapeClasses) +
                                     " classes");
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : Error(ErrorCode::kConfig, join_lines(violations)), violations_(std::move(violations)) {}

const DomainSpec* find_domain(const ExperimentConfig& config, int id) {
  for (const auto& d : config.domains)
    if (d.id == id) return &d;
  return nullptr;
}

ExperimentConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("<document>: malformed JSON: ") + e.what()});
  }
  Reader r;
  ExperimentConfig cfg;
  cfg.domains = default_contextual_domains();
  AdapterConfig source_adapter, bn_adapter;
  source_adapter.method = AdaptMethod::kSource;
  cfg.adapters = {source_adapter, bn_adapter};
  if (!doc.is_object()) throw ConfigError({"<document>: expected a JSON object"});
  r.known_keys(doc, "", {"master_seed", "output_dir", "model", "source_training", "domains",
                         "target_per_class", "protocol", "adapter", "inspect"});
  cfg.master_seed = r.unsigned_int(doc, "master_seed", "", 0, 0);
  if (doc.contains("output_dir")) cfg.output_dir = r.text(doc, "output_dir", "", "");
  if (doc.contains("model")) read_model(r, doc.at("model"), cfg);
  if (doc.contains("source_training")) read_training(r, doc.at("source_training"), cfg);
  if (doc.contains("domains")) read_domains(r, doc.at("domains"), cfg);
  cfg.target_per_class = r.unsigned_int(doc, "target_per_class", "", cfg.target_per_class, 1, 100000);
  if (doc.contains("protocol")) read_protocol(r, doc.at("protocol"), cfg);
  if (doc.contains("adapter")) read_adapters(r, doc.at("adapter"), cfg);
  if (doc.contains("inspect")) read_inspect(r, doc.at("inspect"), cfg);
  check_cross_references(r, cfg);
  if (!r.errors.empty()) throw ConfigError(r.errors);
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({path.string() + ": cannot read config file"});
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json doc;
  doc["master_seed"] = cfg.master_seed;
  if (cfg.output_dir) doc["output_dir"] = *cfg.output_dir;
  json layers = json::array();
  for (const auto& l : cfg.model.layers) {
    json o{{"kind", std::string(to_string(l.kind))}};
    switch (l.kind) {
      case LayerKind::kConv2d:
        o["in"] = l.in;
        o["out"] = l.out;
        o["kernel"] = l.kernel;
        o["bias"] = l.bias;
        break;
      case LayerKind::kDense:
        o["in"] = l.in;
        o["out"] = l.out;
        o["bias"] = l.bias;
        break;
      case LayerKind::kBatchNorm: o["channels"] = l.channels; break;
      case LayerKind::kAvgPool: o["window"] = l.window; break;
      default: break;
    }
    layers.push_back(o);
  }
  doc["model"] = {{"num_classes", cfg.model.num_classes},
                  {"bn_epsilon", cfg.model.bn_epsilon},
                  {"bn_stat_momentum", cfg.model.bn_stat_momentum},
                  {"layers", layers}};
  const auto& t = cfg.source_training;
  doc["source_training"] = {{"epochs", t.epochs},
                            {"batch_size", t.batch_size},
                            {"optimizer", std::string(to_string(t.optimizer.kind))},
                            {"learning_rate", t.optimizer.learning_rate},
                            {"momentum", t.optimizer.momentum},
                            {"per_class", t.per_class},
                            {"split_fraction", t.split_fraction}};
  json domains = json::array();
  for (const auto& d : cfg.domains) {
    const auto& c = d.contextual;
    domains.push_back({{"id", d.id},
                       {"name", d.name},
                       {"kind", std::string(to_string(d.kind))},
                       {"style", std::string(to_string(d.style))},
                       {"seed", d.seed},
                       {"background_level", c.background_level},
                       {"texture_frequency", c.texture_frequency},
                       {"gain", c.gain},
                       {"bias", c.bias},
                       {"noise_sigma", c.noise_sigma},
                       {"occluder_fraction", c.occluder_fraction}});
  }
  doc["domains"] = domains;
  doc["target_per_class"] = cfg.target_per_class;
  const auto& p = cfg.protocol;
  doc["protocol"] = {{"kind", std::string(to_string(p.kind))},
                     {"source_ids", p.source_ids},
                     {"target_ids", p.target_ids},
                     {"batch_size", p.batch_size},
                     {"epochs", p.epochs},
                     {"batch_sizes", p.batch_sizes},
                     {"seeds", p.seeds}};
  json adapters = json::array();
  for (const auto& a : cfg.adapters) {
    json o{{"method", std::string(to_string(a.method))},
           {"learning_rate", a.learning_rate},
           {"cotta_alpha", a.cotta_alpha},
           {"restore_prob", a.restore_prob},
           {"seed", a.seed}};
    if (a.optimizer) o["optimizer"] = std::string(to_string(*a.optimizer));
    adapters.push_back(o);
  }
  doc["adapter"] = adapters;
  doc["inspect"] = {{"domain_id", cfg.inspect.domain_id}, {"samples", cfg.inspect.samples}};
  return doc.dump(2) + "\n";
}

}  // namespace cta::cli
