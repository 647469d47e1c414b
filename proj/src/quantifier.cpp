#include "vquant/quantifier.hpp"

#include <cstdlib>

namespace vquant {

namespace {
constexpr std::array<std::string_view, kNumQuantifiers> kWords = {"no", "few", "some", "most", "all"};
}

Quantifier quantifier_from_ordinal(int ordinal) {
  if (ordinal < 0 || ordinal >= kNumQuantifiers) {
    throw std::out_of_range("quantifier ordinal out of range: " + std::to_string(ordinal));
  }
  return static_cast<Quantifier>(ordinal);
}

std::string_view to_string(Quantifier q) { return kWords.at(static_cast<std::size_t>(ordinal(q))); }

Quantifier parse_quantifier(std::string_view word) {
  for (int i = 0; i < kNumQuantifiers; ++i) {
    if (kWords[static_cast<std::size_t>(i)] == word) return static_cast<Quantifier>(i);
  }
  throw std::invalid_argument("unknown quantifier word: " + std::string(word));
}

Quantifier quantize_ratio(SetCounts counts) {
  const auto [m, k] = counts;
  if (m <= 0) throw UndefinedRestrictorError("quantifier undefined for an empty restrictor set");
  if (k < 0 || k > m) {
    throw std::invalid_argument("target count " + std::to_string(k) + " outside [0, " +
                                std::to_string(m) + "]");
  }
  if (k == 0) return Quantifier::no;
  if (k == m) return Quantifier::all;
  if (100 * k <= kFewMaxPercent * m) return Quantifier::few;
  if (100 * k >= kMostMinPercent * m) return Quantifier::most;
  return Quantifier::some;
}

int scale_distance(Quantifier a, Quantifier b) { return std::abs(ordinal(a) - ordinal(b)); }

std::vector<SetCounts> feasible_counts(Quantifier target, int min_m, int max_m) {
  std::vector<SetCounts> out;
  for (int m = std::max(1, min_m); m <= max_m; ++m) {
    for (int k = 0; k <= m; ++k) {
      if (quantize_ratio({m, k}) == target) out.push_back({m, k});
    }
  }
  return out;
}

}  // namespace vquant
