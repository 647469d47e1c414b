#include "vquant/train.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace vquant {

namespace {

// Label ranges in percent; few is right-closed, some open, most left-closed.
struct Range {
  Quantifier label;
  int low, high;
};
constexpr std::array<Range, 3> kGradedRanges = {{
    {Quantifier::few, 0, kFewMaxPercent},
    {Quantifier::some, kFewMaxPercent, kMostMinPercent},
    {Quantifier::most, kMostMinPercent, 100},
}};

// Bin of k/m inside its label's range, in exact integer arithmetic.
int bin_of(const Range& r, SetCounts c, int bins) {
  const long num = (100L * c.k - static_cast<long>(r.low) * c.m) * bins;
  const long den = static_cast<long>(r.high - r.low) * c.m;
  long b = r.label == Quantifier::few ? (num + den - 1) / den - 1 : num / den;
  return static_cast<int>(std::clamp(b, 0L, static_cast<long>(bins - 1)));
}

}  // namespace

std::vector<Prediction> predict(const Model& model, const Dataset& data) {
  std::vector<Prediction> out;
  out.reserve(data.size());
  for (const auto& ex : data.examples) {
    Value logits = model.forward(ex);
    out.push_back({ex.id, ex.label, quantifier_from_ordinal(argmax_lower(logits.value())), ex.counts,
                   ex.distractors_with_scope});
  }
  return out;
}

double accuracy(std::span<const Prediction> predictions) {
  if (predictions.empty()) return 0;
  const auto hits = std::ranges::count_if(predictions, [](const Prediction& p) { return p.label == p.predicted; });
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

std::vector<RatioBin> ratio_bin_analysis(std::span<const Prediction> predictions, int bins) {
  if (bins < 1) throw std::invalid_argument("bins must be >= 1");
  std::vector<RatioBin> out;
  auto single = [&](Quantifier q, double at) {
    RatioBin b;
    b.label = q;
    b.low = b.high = at;
    out.push_back(b);
  };
  single(Quantifier::no, 0.0);
  const std::size_t graded_start = out.size();
  for (const auto& r : kGradedRanges) {
    for (int i = 0; i < bins; ++i) {
      RatioBin b;
      b.label = r.label;
      b.index = i;
      b.low = (r.low + (r.high - r.low) * static_cast<double>(i) / bins) / 100.0;
      b.high = (r.low + (r.high - r.low) * static_cast<double>(i + 1) / bins) / 100.0;
      out.push_back(b);
    }
  }
  single(Quantifier::all, 1.0);

  for (const auto& p : predictions) {
    RatioBin* bin = nullptr;
    switch (p.label) {
      case Quantifier::no: bin = &out.front(); break;
      case Quantifier::all: bin = &out.back(); break;
      default: {
        if (p.counts.m <= 0 || quantize_ratio(p.counts) != p.label)
          throw std::invalid_argument("prediction " + std::to_string(p.id) + " has counts that do not match its label");
        const std::size_t r = static_cast<std::size_t>(ordinal(p.label) - 1);
        bin = &out[graded_start + r * static_cast<std::size_t>(bins) +
                   static_cast<std::size_t>(bin_of(kGradedRanges[r], p.counts, bins))];
      }
    }
    ++bin->count;
    bin->correct += p.label == p.predicted;
  }
  for (auto& b : out)
    if (b.count > 0) b.accuracy = static_cast<double>(b.correct) / b.count;
  return out;
}

std::vector<DistractorRow> distractor_analysis(std::span<const Prediction> predictions) {
  int max_card = -1;
  for (const auto& p : predictions) max_card = std::max(max_card, p.distractors_with_scope);
  std::vector<DistractorRow> rows(static_cast<std::size_t>(max_card + 1));
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].cardinality = static_cast<int>(i);
  for (const auto& p : predictions) {
    auto& r = rows[static_cast<std::size_t>(p.distractors_with_scope)];
    ++r.count;
    r.correct += p.label == p.predicted;
  }
  for (auto& r : rows) r.accuracy = r.count ? static_cast<double>(r.correct) / r.count : 0.0;
  return rows;
}

EvalReport summarize(std::span<const Prediction> predictions, int bins) {
  EvalReport rep;
  rep.total = static_cast<int>(predictions.size());
  for (const auto& p : predictions) {
    const int t = ordinal(p.label), y = ordinal(p.predicted);
    ++rep.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(y)];
    ++rep.label_counts[static_cast<std::size_t>(t)];
    ++rep.adjacency[static_cast<std::size_t>(scale_distance(p.label, p.predicted))];
    rep.correct += t == y;
  }
  rep.accuracy = rep.total ? static_cast<double>(rep.correct) / rep.total : 0.0;
  for (std::size_t q = 0; q < kNumQuantifiers; ++q)
    if (rep.label_counts[q]) rep.label_accuracy[q] = static_cast<double>(rep.confusion[q][q]) / rep.label_counts[q];
  rep.ratio_bins = ratio_bin_analysis(predictions, bins);
  rep.distractors = distractor_analysis(predictions);
  return rep;
}

EvalReport evaluate(const Model& model, const Dataset& data, int bins) {
  return summarize(predict(model, data), bins);
}

double adjacent_error_share(const EvalReport& report) {
  const int errors = report.total - report.correct;
  return errors ? static_cast<double>(report.adjacency[1]) / errors : 0.0;
}

int BoundaryDip::dipped_count() const {
  return static_cast<int>(std::ranges::count_if(labels, [](const Label& l) { return l.dipped; }));
}

BoundaryDip boundary_dip(std::span<const RatioBin> bins) {
  BoundaryDip out;
  for (const auto& r : kGradedRanges) {
    std::vector<const RatioBin*> filled;
    for (const auto& b : bins)
      if (b.label == r.label && b.count > 0) filled.push_back(&b);
    BoundaryDip::Label l;
    l.label = r.label;
    if (filled.size() >= 3) {
      const int bc = filled.front()->correct + filled.back()->correct;
      const int bn = filled.front()->count + filled.back()->count;
      int ic = 0, in = 0;
      for (std::size_t i = 1; i + 1 < filled.size(); ++i) {
        ic += filled[i]->correct;
        in += filled[i]->count;
      }
      l.boundary = static_cast<double>(bc) / bn;
      l.interior = static_cast<double>(ic) / in;
      l.dipped = *l.boundary <= *l.interior;
    }
    out.labels.push_back(l);
  }
  return out;
}

}  // namespace vquant
