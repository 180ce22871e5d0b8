// Holdout split, ComplEx training, filtered evaluation and one query.
//
//   link_prediction_demo [triples.tsv] [epochs]

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <string>

#include "kge.hpp"

int main(int argc, char** argv) {
  const std::string path = argc > 1 ? argv[1] : KGE_FIXTURE_DIR "/triples.tsv";
  const int epochs = argc > 2 ? std::atoi(argv[2]) : 50;

  try {
    const auto graph = kge::load_triples(path).graph;
    const auto split = kge::split_holdout(graph, 0.8, 555);
    std::cout << graph.size() << " triples, " << split.train.size() << " train / " << split.test.size()
              << " test\n";

    kge::ModelConfig config;
    config.epochs = epochs;
    const auto result = kge::train(split.train, config);
    std::cout << "loss " << result.trace.epoch_loss.front() << " -> " << result.trace.epoch_loss.back() << '\n';

    const kge::KnowledgeGraph* known[] = {&graph};
    const auto report = kge::evaluate(result.model, split.test, known, kge::Protocol::Filtered);
    std::cout << kge::format_metrics(report.metrics) << "\n\n";

    const auto query = split.test.triples().front();
    std::cout << "(" << query.subject << ", " << query.predicate << ", ?)   expected: " << query.object << '\n';
    for (const auto& p : kge::predict_links(result.model, query.subject, query.predicate, 5))
      std::cout << "  " << std::fixed << std::setprecision(3) << std::setw(8) << p.score << "  " << p.entity
                << '\n';
  } catch (const kge::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
