#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vquant {

/// Ordinal quantifier scale; the enumerator order is the linguistic order.
enum class Quantifier : std::uint8_t { no = 0, few = 1, some = 2, most = 3, all = 4 };

inline constexpr int kNumQuantifiers = 5;
inline constexpr std::array<Quantifier, kNumQuantifiers> kAllQuantifiers = {
    Quantifier::no, Quantifier::few, Quantifier::some, Quantifier::most, Quantifier::all};

// Thresholds as exact percentages: few is k/m <= 17%, most is k/m >= 70%.
inline constexpr int kFewMaxPercent = 17;
inline constexpr int kMostMinPercent = 70;

class UndefinedRestrictorError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// |restrictor| = m, |restrictor ∩ scope| = k.
struct SetCounts {
  int m = 0;
  int k = 0;

  friend bool operator==(const SetCounts&, const SetCounts&) = default;
};

constexpr int ordinal(Quantifier q) { return static_cast<int>(q); }
Quantifier quantifier_from_ordinal(int ordinal);

std::string_view to_string(Quantifier q);
/// Parses the lowercase words no|few|some|most|all.
Quantifier parse_quantifier(std::string_view word);

/**
 * Maps a restrictor/target count pair to its quantifier. k = 0 and k = m take
 * precedence; otherwise the ratio is compared in integer arithmetic so the
 * inclusive 17% and 70% boundaries are exact.
 */
Quantifier quantize_ratio(SetCounts counts);

int scale_distance(Quantifier a, Quantifier b);

/// Every (m, k) with min_m <= m <= max_m whose ratio maps to `target`.
std::vector<SetCounts> feasible_counts(Quantifier target, int min_m, int max_m);

}  // namespace vquant
