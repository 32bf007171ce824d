#include "glosskit/zsic.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "glosskit/error.hpp"
#include "glosskit/hash.hpp"

namespace glosskit {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
  for (const double v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "embedding contains NaN or Inf");
  }
}

double EmbeddingVector::norm() const noexcept { return std::sqrt(dot(values_, values_)); }

EmbeddingVector class_prototype(std::span<const EmbeddingVector> vectors) {
  if (vectors.empty()) throw Error(ErrorCode::EmptyEnsemble, "no description embeddings");
  const std::size_t dim = vectors.front().dim();
  if (dim == 0) throw Error(ErrorCode::DimensionMismatch, "zero-dimensional embedding");
  std::vector<double> mean(dim, 0.0);
  for (const auto& v : vectors) {
    if (v.dim() != dim) {
      throw Error(ErrorCode::DimensionMismatch,
                  "expected dim " + std::to_string(dim) + ", got " + std::to_string(v.dim()));
    }
    const double n = v.norm();
    if (n == 0.0) throw Error(ErrorCode::ZeroVector, "zero description embedding");
    for (std::size_t i = 0; i < dim; ++i) mean[i] += v[i] / n;
  }
  for (auto& x : mean) x /= static_cast<double>(vectors.size());
  const double n = std::sqrt(dot(mean, mean));
  if (n == 0.0) throw Error(ErrorCode::ZeroVector, "ensemble mean is the zero vector");
  for (auto& x : mean) x /= n;
  return EmbeddingVector(std::move(mean));
}

ClassPrototype make_prototype(std::string class_id, std::span<const EmbeddingVector> vectors) {
  return {std::move(class_id), class_prototype(vectors), vectors.size()};
}

Prediction classify(std::span<const ClassPrototype> prototypes, const EmbeddingVector& image) {
  if (prototypes.empty()) throw Error(ErrorCode::EmptyClassSet, "no prototypes");
  const double image_norm = image.norm();
  if (image_norm == 0.0) throw Error(ErrorCode::ZeroVector, "zero image embedding");
  Prediction p;
  p.scores.reserve(prototypes.size());
  std::size_t best = 0;
  for (std::size_t c = 0; c < prototypes.size(); ++c) {
    const auto& proto = prototypes[c].vector;
    if (proto.dim() != image.dim()) {
      throw Error(ErrorCode::DimensionMismatch, "prototype " + prototypes[c].class_id + " has dim " +
                                                    std::to_string(proto.dim()) + ", image has " +
                                                    std::to_string(image.dim()));
    }
    const double pn = proto.norm();
    if (pn == 0.0) throw Error(ErrorCode::ZeroVector, "zero prototype " + prototypes[c].class_id);
    const double s = dot(proto.values(), image.values()) / (pn * image_norm);
    p.scores.push_back(s);
    if (c > 0 && (s > p.scores[best] ||
                  (s == p.scores[best] && prototypes[c].class_id < prototypes[best].class_id))) {
      best = c;
    }
  }
  p.class_id = prototypes[best].class_id;
  p.score = p.scores[best];
  return p;
}

EvalReport evaluate(std::span<const ClassPrototype> prototypes, std::span<const LabeledImage> images,
                    std::size_t threads) {
  EvalReport report;
  std::set<std::string> known;
  for (const auto& p : prototypes) known.insert(p.class_id);
  report.class_ids.assign(known.begin(), known.end());
  for (const auto& img : images) {
    if (!known.contains(img.gold)) throw Error(ErrorCode::UnknownGoldClass, img.image_id + " -> " + img.gold);
  }

  struct Partial {
    std::map<std::string, std::map<std::string, std::size_t>> confusion;
  };
  std::vector<std::string> predicted(images.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::max<std::size_t>(1, std::min(threads, images.size()));
  std::vector<Partial> partials(threads);
  std::vector<std::exception_ptr> errors(threads);
  const auto work = [&](std::size_t t) {
    try {
      for (std::size_t i = t; i < images.size(); i += threads) {
        predicted[i] = classify(prototypes, images[i].vector).class_id;
        ++partials[t].confusion[images[i].gold][predicted[i]];
      }
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (const auto& part : partials) {
    for (const auto& [gold, row] : part.confusion) {
      for (const auto& [pred, count] : row) {
        report.confusion[gold][pred] += count;
        auto& tally = report.per_class[gold];
        tally.total += count;
        if (pred == gold) tally.correct += count;
      }
    }
  }
  for (std::size_t i = 0; i < images.size(); ++i) report.predictions.emplace_back(images[i].image_id, predicted[i]);
  for (const auto& [cls, tally] : report.per_class) {
    report.total += tally.total;
    report.correct += tally.correct;
  }
  report.top1_accuracy = report.total ? static_cast<double>(report.correct) / report.total : 0.0;
  return report;
}

std::vector<std::pair<std::string, std::size_t>> false_positive_report(const EvalReport& report,
                                                                       std::string_view class_id,
                                                                       std::size_t top_m) {
  if (!std::binary_search(report.class_ids.begin(), report.class_ids.end(), class_id)) {
    throw Error(ErrorCode::UnknownClass, std::string(class_id));
  }
  std::vector<std::pair<std::string, std::size_t>> out;
  if (const auto it = report.confusion.find(std::string(class_id)); it != report.confusion.end()) {
    for (const auto& [pred, count] : it->second) {
      if (pred != class_id && count > 0) out.emplace_back(pred, count);
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (out.size() > top_m) out.resize(top_m);
  return out;
}

FalsePositiveComparison compare_false_positives(const EvalReport& report, std::string_view class_id,
                                                std::size_t top_m, std::span<const std::string> contrastive) {
  FalsePositiveComparison row;
  row.class_id = class_id;
  row.false_positives = false_positive_report(report, class_id, top_m);
  row.contrastive.assign(contrastive.begin(), contrastive.end());
  for (const auto& [cls, count] : row.false_positives) {
    row.hits.push_back(std::find(contrastive.begin(), contrastive.end(), cls) != contrastive.end());
  }
  return row;
}

void write_report_records(std::ostream& out, const EvalReport& r) {
  nlohmann::ordered_json summary;
  summary["record"] = "summary";
  summary["top1_accuracy"] = r.top1_accuracy;
  summary["correct"] = r.correct;
  summary["total"] = r.total;
  summary["classes"] = r.class_ids.size();
  summary["aggregation"] = r.aggregation;
  out << summary.dump() << '\n';
  for (const auto& [cls, tally] : r.per_class) {
    nlohmann::ordered_json j;
    j["record"] = "class";
    j["class_id"] = cls;
    j["accuracy"] = tally.accuracy();
    j["correct"] = tally.correct;
    j["total"] = tally.total;
    nlohmann::ordered_json row = nlohmann::ordered_json::object();
    for (const auto& [pred, count] : r.confusion.at(cls)) row[pred] = count;
    j["confusion"] = row;
    out << j.dump() << '\n';
  }
}

std::string render_report_table(const EvalReport& r) {
  std::ostringstream out;
  out << "top-1 accuracy: " << std::fixed << std::setprecision(4) << r.top1_accuracy << " (" << r.correct << "/"
      << r.total << ")\n";
  out << "aggregation: " << r.aggregation << "\n\n";
  std::size_t width = 8;
  for (const auto& [cls, tally] : r.per_class) width = std::max(width, cls.size());
  out << std::left << std::setw(static_cast<int>(width)) << "class" << "  accuracy  correct  total  top confusion\n";
  for (const auto& [cls, tally] : r.per_class) {
    const auto fp = false_positive_report(r, cls, 1);
    out << std::left << std::setw(static_cast<int>(width)) << cls << "  " << std::right << std::setw(8)
        << std::setprecision(4) << tally.accuracy() << "  " << std::setw(7) << tally.correct << "  " << std::setw(5)
        << tally.total << "  ";
    if (fp.empty()) {
      out << "-";
    } else {
      out << fp.front().first << " (" << fp.front().second << ")";
    }
    out << '\n';
  }
  return out.str();
}

std::string render_false_positive_table(std::span<const FalsePositiveComparison> rows) {
  std::ostringstream out;
  out << "class | false positives (count) | contrastive neighbors\n";
  for (const auto& row : rows) {
    out << row.class_id << " | ";
    for (std::size_t i = 0; i < row.false_positives.size(); ++i) {
      if (i) out << ", ";
      out << row.false_positives[i].first << " (" << row.false_positives[i].second << ")"
          << (row.hits[i] ? " [hit]" : " [miss]");
    }
    if (row.false_positives.empty()) out << "-";
    out << " | ";
    for (std::size_t i = 0; i < row.contrastive.size(); ++i) {
      if (i) out << ", ";
      out << row.contrastive[i];
    }
    if (row.contrastive.empty()) out << "-";
    out << '\n';
  }
  return out.str();
}

}  // namespace glosskit
