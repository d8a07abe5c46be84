#include "veriphy/metrics.hpp"

#include <algorithm>
#include <sstream>

#include "veriphy/error.hpp"
#include "veriphy/parallel.hpp"

namespace veriphy {

std::size_t confusion_column(const Verdict& v, std::size_t n_enrolled) noexcept {
  switch (v.kind) {
    case VerdictKind::Signature: return v.index;
    case VerdictKind::NoSignature: return n_enrolled;
    case VerdictKind::Unknown: return n_enrolled + 1;
  }
  return n_enrolled + 1;
}

Metrics compute_metrics(std::vector<std::string> class_names, std::span<const std::size_t> truth,
                        std::span<const Verdict> predicted,
                        std::span<const StageLatency> latencies) {
  if (truth.empty()) throw Error(ErrorKind::EmptyDataset, "no labeled windows");
  if (truth.size() != predicted.size()) {
    throw Error(ErrorKind::InvalidArgument, "truth and prediction counts differ");
  }
  const std::size_t n_classes = class_names.size();
  const std::size_t n_enrolled = n_classes - 1;

  Metrics m;
  m.class_names = std::move(class_names);
  m.total = truth.size();
  m.confusion.assign(n_classes, std::vector<std::size_t>(n_classes + 1, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= n_classes) throw Error(ErrorKind::InvalidArgument, "label out of range");
    ++m.confusion[truth[i]][confusion_column(predicted[i], n_enrolled)];
  }

  std::size_t correct = 0;
  for (std::size_t c = 0; c < n_classes; ++c) correct += m.confusion[c][c];
  m.accuracy = static_cast<double>(correct) / static_cast<double>(m.total);

  m.per_class.resize(n_classes);
  double f1_sum = 0.0;
  std::size_t f1_count = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    std::size_t predicted_c = 0;
    for (std::size_t r = 0; r < n_classes; ++r) predicted_c += m.confusion[r][c];
    std::size_t support = 0;
    for (std::size_t k = 0; k <= n_classes; ++k) support += m.confusion[c][k];
    auto& pr = m.per_class[c];
    pr.support = support;
    const double tp = static_cast<double>(m.confusion[c][c]);
    pr.precision = predicted_c ? tp / static_cast<double>(predicted_c) : 0.0;
    pr.recall = support ? tp / static_cast<double>(support) : 0.0;
    pr.f1 = (pr.precision + pr.recall) > 0.0
                ? 2.0 * pr.precision * pr.recall / (pr.precision + pr.recall)
                : 0.0;
    // Classes absent from both truth and predictions carry no information.
    if (support > 0 || predicted_c > 0) {
      f1_sum += pr.f1;
      ++f1_count;
    }
  }
  m.f1_macro = f1_count ? f1_sum / static_cast<double>(f1_count) : 0.0;

  if (!latencies.empty()) {
    const auto n = static_cast<double>(latencies.size());
    for (const auto& l : latencies) {
      m.mean_latency.capture_ms += l.capture_ms / n;
      m.mean_latency.processing_ms += l.processing_ms / n;
      m.mean_latency.classification_ms += l.classification_ms / n;
      m.mean_latency.total_ms += l.total_ms / n;
      m.max_latency.capture_ms = std::max(m.max_latency.capture_ms, l.capture_ms);
      m.max_latency.processing_ms = std::max(m.max_latency.processing_ms, l.processing_ms);
      m.max_latency.classification_ms =
          std::max(m.max_latency.classification_ms, l.classification_ms);
      m.max_latency.total_ms = std::max(m.max_latency.total_ms, l.total_ms);
    }
  }
  return m;
}

Evaluation evaluate(std::span<const LabeledWindow> windows, const DetectorConfig& cfg,
                    unsigned threads) {
  if (windows.empty()) throw Error(ErrorKind::EmptyDataset, "dataset has no windows");
  cfg.validate();
  std::vector<DetectionReport> reports(windows.size());
  parallel_for(windows.size(), threads, [&](std::size_t i) {
    reports[i] = detect_window(windows[i].window, cfg, i);
  });
  std::vector<std::size_t> truth(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) truth[i] = windows[i].label;
  return finalize_evaluation(std::move(reports), truth, cfg);
}

Evaluation finalize_evaluation(std::vector<DetectionReport> reports,
                               std::span<const std::size_t> truth, const DetectorConfig& cfg) {
  if (reports.empty()) throw Error(ErrorKind::EmptyDataset, "dataset has no windows");
  Evaluation out;
  out.reports = std::move(reports);
  ReplayCache cache(cfg.replay_horizon, cfg.quantization);
  std::vector<Verdict> predicted(out.reports.size());
  std::vector<StageLatency> latency(out.reports.size());
  std::size_t flags = 0;
  for (std::size_t i = 0; i < out.reports.size(); ++i) {
    auto& rep = out.reports[i];
    if (rep.classification.verdict.kind == VerdictKind::Signature) {
      rep.replay_flag = cache.check_and_insert(rep.extraction.values);
      flags += rep.replay_flag ? 1 : 0;
    }
    predicted[i] = rep.classification.verdict;
    latency[i] = rep.latency;
  }

  std::vector<std::string> names;
  for (const auto& g : cfg.enrolled) names.push_back(g.id());
  names.emplace_back("none");
  out.metrics = compute_metrics(std::move(names), truth, predicted, latency);
  out.metrics.replay_flags = flags;
  return out;
}

nlohmann::json metrics_to_json(const Metrics& m, const std::string& config_digest) {
  using nlohmann::json;
  json pr = json::object();
  for (std::size_t c = 0; c < m.class_names.size(); ++c) {
    const auto& p = m.per_class[c];
    pr[m.class_names[c]] = {{"precision", p.precision},
                            {"recall", p.recall},
                            {"f1", p.f1},
                            {"support", p.support}};
  }
  json columns = m.class_names;
  columns.push_back("unknown");
  auto stage = [](const StageLatency& l) {
    return json{{"capture", l.capture_ms},
                {"processing", l.processing_ms},
                {"classification", l.classification_ms},
                {"total", l.total_ms}};
  };
  json latency = stage(m.mean_latency);
  latency["max"] = stage(m.max_latency);
  return {{"config_digest", config_digest},
          {"classes", m.class_names},
          {"confusion_columns", columns},
          {"confusion_matrix", m.confusion},
          {"accuracy", m.accuracy},
          {"f1_macro", m.f1_macro},
          {"per_class_precision_recall", pr},
          {"total_windows", m.total},
          {"replay_flags", m.replay_flags},
          {"latency_ms", latency}};
}

std::string confusion_csv(const Metrics& m) {
  std::ostringstream out;
  out << "true\\predicted";
  for (const auto& name : m.class_names) out << ',' << name;
  out << ",unknown\n";
  for (std::size_t r = 0; r < m.confusion.size(); ++r) {
    out << m.class_names[r];
    for (auto v : m.confusion[r]) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

}  // namespace veriphy
