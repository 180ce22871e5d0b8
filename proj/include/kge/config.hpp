#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <system_error>

#include <nlohmann/json.hpp>

#include "kge/error.hpp"
#include "kge/evaluator.hpp"
#include "kge/fusion.hpp"
#include "kge/model.hpp"
#include "kge/split.hpp"
#include "kge/text.hpp"

namespace kge {

/// Every knob of a CLI run. Unset keys keep the defaults below, which for the
/// model part are the reference toolkit settings.
struct RunConfig {
  ModelConfig model;
  int variation = 1;
  Protocol protocol = Protocol::Filtered;
  double train_fraction = 0.8;
  int cv_k = 10;
  RepairMode repair = RepairMode::MoveToTrain;
  PoolMode pool = PoolMode::Mean;
  bool freeze_hints = false;
  unsigned threads = 1;
  std::size_t top_k = 10;
  std::string format = "text";
  std::string hierarchy_relation = "is a";
  std::map<std::string, std::string> paths;  // triples, lexicon, sentences, vectors, ...

  static const std::vector<std::string>& path_keys() {
    static const std::vector<std::string> keys = {"triples", "test",    "known",    "lexicon",
                                                  "sentences", "vectors", "checkpoint", "report",
                                                  "trace",   "baselines", "ontology", "out"};
    return keys;
  }

  std::string path(const std::string& key) const {
    const auto it = paths.find(key);
    return it == paths.end() ? std::string{} : it->second;
  }

  std::string require_path(const std::string& key) const {
    auto p = path(key);
    if (p.empty()) throw ConfigError(key, "path is required");
    return p;
  }

  void set(const std::string& raw_key, std::string_view value);

  void validate() const {
    model.validate();
    if (variation < 1 || variation > 3) throw ConfigError("variation", "must be 1, 2 or 3");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
      throw ConfigError("train_fraction", "must lie strictly between 0 and 1");
    if (cv_k < 2) throw ConfigError("cv_k", "must be at least 2");
    if (format != "json" && format != "text") throw ConfigError("format", "expected json or text");
  }
};

namespace detail {

template <class Int>
Int parse_int(const std::string& key, std::string_view v) {
  Int out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw ConfigError(key, "expected an integer, got '" + std::string(v) + "'");
  return out;
}

inline double parse_double(const std::string& key, std::string_view v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw ConfigError(key, "expected a number, got '" + std::string(v) + "'");
  return out;
}

inline bool parse_bool(const std::string& key, std::string_view v) {
  const auto s = canonicalize_label(v);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(key, "expected true or false");
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace detail

inline void RunConfig::set(const std::string& raw_key, std::string_view raw_value) {
  std::string key = canonicalize_label(raw_key);
  for (auto& c : key)
    if (c == '-') c = '_';
  const auto value = detail::trim(raw_value);
  using detail::parse_double;
  using detail::parse_int;

  if (key == "family") {
    model.family = parse_family(value);
  } else if (key == "k") {
    model.k = parse_int<int>(key, value);
  } else if (key == "eta") {
    model.eta = parse_int<int>(key, value);
  } else if (key == "epochs") {
    model.epochs = parse_int<int>(key, value);
  } else if (key == "batches_count") {
    model.batches_count = parse_int<int>(key, value);
  } else if (key == "seed") {
    model.seed = parse_int<std::uint64_t>(key, value);
  } else if (key == "loss") {
    model.loss = parse_loss(value);
  } else if (key == "margin") {
    model.margin = parse_double(key, value);
  } else if (key == "learning_rate" || key == "lr") {
    model.learning_rate = parse_double("learning_rate", value);
  } else if (key == "norm") {
    model.norm = parse_norm(value);
  } else if (key == "variation") {
    variation = parse_int<int>(key, value);
  } else if (key == "protocol") {
    protocol = parse_protocol(value);
  } else if (key == "train_fraction") {
    train_fraction = parse_double(key, value);
  } else if (key == "cv_k") {
    cv_k = parse_int<int>(key, value);
  } else if (key == "repair") {
    const auto v = canonicalize_label(value);
    if (v == "move" || v == "move-to-train") repair = RepairMode::MoveToTrain;
    else if (v == "drop") repair = RepairMode::Drop;
    else throw ConfigError(key, "expected move or drop");
  } else if (key == "pool") {
    pool = parse_pool_mode(value);
  } else if (key == "freeze_hints") {
    freeze_hints = detail::parse_bool(key, value);
  } else if (key == "threads") {
    threads = parse_int<unsigned>(key, value);
    if (threads == 0) throw ConfigError(key, "must be at least 1");
  } else if (key == "top_k") {
    top_k = parse_int<std::size_t>(key, value);
  } else if (key == "format") {
    format = canonicalize_label(value);
    if (format != "json" && format != "text") throw ConfigError(key, "expected json or text");
  } else if (key == "hierarchy_relation") {
    hierarchy_relation = canonicalize_label(value);
  } else if (std::find(path_keys().begin(), path_keys().end(), key) != path_keys().end()) {
    paths[key] = std::string(value);
  } else {
    throw ConfigError(key, "unknown configuration key");
  }
}

/// Flat `key = value` lines (':' also accepted); '#' starts a comment.
inline std::map<std::string, std::string> parse_key_values(std::string_view content,
                                                           std::string_view source = "<memory>") {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    auto line = strip_cr(content.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto sep = line.find('=');
    if (sep == std::string_view::npos) sep = line.find(':');
    if (sep == std::string_view::npos) throw ParseError(std::string(source), line_no, "expected key = value");
    const auto key = detail::trim(line.substr(0, sep));
    if (key.empty()) throw ParseError(std::string(source), line_no, "empty key");
    out[std::string(key)] = std::string(detail::trim(line.substr(sep + 1)));
  }
  return out;
}

inline void apply_key_values(RunConfig& config, const std::map<std::string, std::string>& kv) {
  for (const auto& [k, v] : kv) config.set(k, v);
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig c;
  apply_key_values(c, parse_key_values(read_file(path), path.string()));
  return c;
}

inline nlohmann::json to_json(const RunConfig& c) {
  auto j = to_json(c.model);
  j["variation"] = c.variation;
  j["protocol"] = to_string(c.protocol);
  j["train_fraction"] = c.train_fraction;
  j["cv_k"] = c.cv_k;
  j["repair"] = c.repair == RepairMode::MoveToTrain ? "move" : "drop";
  j["pool"] = c.pool == PoolMode::Mean ? "mean" : "max";
  j["freeze_hints"] = c.freeze_hints;
  j["hierarchy_relation"] = c.hierarchy_relation;
  j["paths"] = c.paths;
  return j;
}

}  // namespace kge
