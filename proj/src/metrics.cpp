#include "presup/metrics.hpp"

#include <cmath>

#include "presup/error.hpp"
#include "presup/models.hpp"

namespace presup {

double ConfusionMatrix::accuracy() const {
  if (total() == 0) throw UsageError("accuracy of an empty confusion matrix");
  return static_cast<double>(tn + tp) / static_cast<double>(total());
}

ConfusionMatrix ConfusionMatrix::from(const std::vector<int>& predictions,
                                      const std::vector<int>& labels) {
  if (predictions.size() != labels.size()) {
    throw UsageError("confusion: prediction/label length mismatch");
  }
  ConfusionMatrix m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool actual = labels[i] == 1;
    const bool predicted = predictions[i] == 1;
    if (actual) {
      (predicted ? m.tp : m.fn)++;
    } else {
      (predicted ? m.fp : m.tn)++;
    }
  }
  return m;
}

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size()) throw UsageError("accuracy: length mismatch");
  if (labels.empty()) throw UsageError("accuracy: no samples");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += predictions[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

EvalReport evaluate(const Model& model, const std::vector<Sample>& data, const std::string& model_id,
                    const std::string& dataset_id) {
  if (data.empty()) throw UsageError("evaluate: empty data");
  EvalReport r;
  r.model = model_id;
  r.dataset = dataset_id;
  r.predictions.reserve(data.size());
  r.labels.reserve(data.size());
  for (const auto& s : data) {
    const EncodedSample e = model.encode(s);
    r.predictions.push_back(model.predict(e));
    r.labels.push_back(e.label);
    (e.label == 1 ? r.positives : r.negatives)++;
  }
  r.confusion = ConfusionMatrix::from(r.predictions, r.labels);
  r.accuracy = r.confusion.accuracy();
  return r;
}

ContingencyTable contingency(const std::vector<int>& pa, const std::vector<int>& pb,
                             const std::vector<int>& labels) {
  if (pa.size() != labels.size() || pb.size() != labels.size()) {
    throw UsageError("contingency: prediction vectors differ in length (" +
                     std::to_string(pa.size()) + ", " + std::to_string(pb.size()) + ", " +
                     std::to_string(labels.size()) + ")");
  }
  ContingencyTable t;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool ca = pa[i] == labels[i];
    const bool cb = pb[i] == labels[i];
    if (ca && cb) ++t.a;
    else if (ca) ++t.b;
    else if (cb) ++t.c;
    else ++t.d;
  }
  return t;
}

McNemarResult mcnemar(const ContingencyTable& t) {
  McNemarResult r;
  const std::uint64_t n = t.b + t.c;
  if (n == 0) {
    r.degenerate = true;
    return r;
  }
  const double diff = std::fabs(static_cast<double>(t.b) - static_cast<double>(t.c)) - 1.0;
  r.chi2 = diff * diff / static_cast<double>(n);
  r.p = std::erfc(std::sqrt(r.chi2 / 2.0));
  return r;
}

}  // namespace presup
