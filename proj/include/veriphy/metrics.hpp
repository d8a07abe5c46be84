#pragma once

// Labeled evaluation of the detector: confusion matrix, accuracy, macro F1,
// latency statistics.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "veriphy/baseband.hpp"
#include "veriphy/detector.hpp"

namespace veriphy {

struct LabeledWindow {
  IqStream window;
  std::size_t label = 0;  // enrolled index, or enrolled.size() for no signature
};

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct Metrics {
  /// enrolled ids followed by "none".
  std::vector<std::string> class_names;
  /// rows: true class; columns: predicted class, plus a trailing "unknown" column.
  std::vector<std::vector<std::size_t>> confusion;
  double accuracy = 0.0;
  double f1_macro = 0.0;
  std::vector<PrecisionRecall> per_class;
  std::size_t total = 0;
  std::size_t replay_flags = 0;
  StageLatency mean_latency;
  StageLatency max_latency;
};

/// Column index of a verdict in the confusion matrix.
std::size_t confusion_column(const Verdict& v, std::size_t n_enrolled) noexcept;

Metrics compute_metrics(std::vector<std::string> class_names, std::span<const std::size_t> truth,
                        std::span<const Verdict> predicted,
                        std::span<const StageLatency> latencies = {});

struct Evaluation {
  Metrics metrics;
  std::vector<DetectionReport> reports;
};

/// Windows are classified in parallel; replay tracking then runs in window
/// order, so results do not depend on `threads`. threads == 0 picks the
/// hardware concurrency. Throws EmptyDataset on no windows.
Evaluation evaluate(std::span<const LabeledWindow> windows, const DetectorConfig& cfg,
                    unsigned threads = 0);

/// Replay sequencing (window order) and metrics over already-computed reports.
Evaluation finalize_evaluation(std::vector<DetectionReport> reports,
                               std::span<const std::size_t> truth, const DetectorConfig& cfg);

nlohmann::json metrics_to_json(const Metrics& m, const std::string& config_digest);
std::string confusion_csv(const Metrics& m);

}  // namespace veriphy
