#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kge/graph.hpp"

namespace kge {

struct FrequencyEntry {
  std::string label;
  std::size_t count = 0;
  double percent = 0.0;  // share of all triples, 0..100
};

struct FrequencyReport {
  std::size_t total_triples = 0;
  std::vector<FrequencyEntry> subjects;
  std::vector<FrequencyEntry> predicates;
  std::vector<FrequencyEntry> objects;
};

namespace detail {

inline std::vector<FrequencyEntry> top_entries(const std::vector<std::size_t>& counts,
                                               const Vocabulary& vocab, std::size_t total,
                                               std::size_t top_k) {
  std::vector<FrequencyEntry> all;
  for (std::uint32_t id = 0; id < counts.size(); ++id) {
    if (counts[id] == 0) continue;
    all.push_back({vocab.label(id), counts[id],
                   100.0 * static_cast<double>(counts[id]) / static_cast<double>(total)});
  }
  std::sort(all.begin(), all.end(), [](const FrequencyEntry& a, const FrequencyEntry& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.label < b.label;
  });
  if (all.size() > top_k) all.resize(top_k);
  return all;
}

}  // namespace detail

/// Top-k subjects, predicates and objects by triple frequency.
/// Ties are broken by label order.
inline FrequencyReport graph_stats(const KnowledgeGraph& g, std::size_t top_k) {
  if (g.empty()) throw EmptyGraphError("stats of an empty graph");
  std::vector<std::size_t> subj(g.entities().size()), pred(g.relations().size()),
      obj(g.entities().size());
  for (const auto& t : g.triads()) {
    ++subj[t.s];
    ++pred[t.p];
    ++obj[t.o];
  }
  FrequencyReport r;
  r.total_triples = g.size();
  r.subjects = detail::top_entries(subj, g.entities(), g.size(), top_k);
  r.predicates = detail::top_entries(pred, g.relations(), g.size(), top_k);
  r.objects = detail::top_entries(obj, g.entities(), g.size(), top_k);
  return r;
}

inline nlohmann::json to_json(const FrequencyReport& r) {
  auto list = [](const std::vector<FrequencyEntry>& entries) {
    auto arr = nlohmann::json::array();
    for (const auto& e : entries)
      arr.push_back({{"label", e.label}, {"count", e.count}, {"percent", e.percent}});
    return arr;
  };
  return {{"total_triples", r.total_triples},
          {"subjects", list(r.subjects)},
          {"predicates", list(r.predicates)},
          {"objects", list(r.objects)}};
}

/// Table layout: one block per role, percentages rounded to whole numbers.
inline std::string render_stats_table(const FrequencyReport& r) {
  std::size_t width = 5;
  for (const auto* list : {&r.subjects, &r.predicates, &r.objects})
    for (const auto& e : *list) width = std::max(width, e.label.size());

  std::ostringstream os;
  os << std::left << std::setw(11) << ("Top " + std::to_string(r.subjects.size()))
     << std::setw(static_cast<int>(width) + 2) << "Label" << "Share\n";
  auto block = [&](const char* role, const std::vector<FrequencyEntry>& entries) {
    bool first = true;
    for (const auto& e : entries) {
      os << std::left << std::setw(11) << (first ? role : "") << std::setw(static_cast<int>(width) + 2)
         << e.label << std::right << std::setw(4) << std::lround(e.percent) << "%\n";
      first = false;
    }
  };
  block("Subject", r.subjects);
  block("Predicate", r.predicates);
  block("Object", r.objects);
  os << "(" << r.total_triples << " triples)\n";
  return os.str();
}

}  // namespace kge
