#include <fmt/format.h>

#include "peatwht/pipeline.hpp"

namespace peatwht {

void ConfusionMatrix::add(bool predicted_fire, bool actual_fire) noexcept {
  if (predicted_fire) {
    ++(actual_fire ? tp : fp);
  } else {
    ++(actual_fire ? fn : tn);
  }
}

double f1_score(double precision, double recall) noexcept {
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

Metrics compute_metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorCode::EmptyDataset, "confusion matrix is empty");
  Metrics m;
  m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  if (cm.tp + cm.fp > 0) {
    m.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
  } else {
    m.precision_undefined = true;
  }
  if (cm.tp + cm.fn > 0) {
    m.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
  } else {
    m.recall_undefined = true;
  }
  m.f1_undefined = m.precision + m.recall == 0.0;
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
  return {{"tp", cm.tp}, {"fp", cm.fp}, {"fn", cm.fn}, {"tn", cm.tn}};
}

nlohmann::json to_json(const Metrics& m) {
  nlohmann::json j = {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
  if (m.precision_undefined) j["precision_undefined"] = true;
  if (m.recall_undefined) j["recall_undefined"] = true;
  if (m.f1_undefined) j["f1_undefined"] = true;
  return j;
}

std::string format_metrics_table(const Metrics& m, const ConfusionMatrix& cm) {
  std::string out;
  out += fmt::format("{:<10} {:>8}\n", "metric", "value");
  out += fmt::format("{:<10} {:>8.4f}\n", "accuracy", m.accuracy);
  out += fmt::format("{:<10} {:>8.4f}{}\n", "precision", m.precision, m.precision_undefined ? "  (undefined)" : "");
  out += fmt::format("{:<10} {:>8.4f}{}\n", "recall", m.recall, m.recall_undefined ? "  (undefined)" : "");
  out += fmt::format("{:<10} {:>8.4f}{}\n", "f1", m.f1, m.f1_undefined ? "  (undefined)" : "");
  out += "\n";
  out += fmt::format("{:<14} {:>10} {:>10}\n", "", "pred fire", "pred none");
  out += fmt::format("{:<14} {:>10} {:>10}\n", "actual fire", cm.tp, cm.fn);
  out += fmt::format("{:<14} {:>10} {:>10}\n", "actual none", cm.fp, cm.tn);
  return out;
}

}  // namespace peatwht
