#include "doctest.h"
#include "generators.hpp"

#include "vquant/quantifier.hpp"

#include <map>
#include <numeric>

using namespace vquant;

namespace {

// Piecewise oracle over reduced fractions: compares k/m with the two
// thresholds through cross-multiplied differences on the reduced pair.
const char* oracle_word(int k, int m) {
  const int g = std::gcd(k, m);
  const long p = k / g, q = m / g;
  if (p == 0) return "no";
  if (p == q) return "all";
  const long below_few = 17 * q - 100 * p;   // >= 0 iff k/m <= 0.17
  const long above_most = 100 * p - 70 * q;  // >= 0 iff k/m >= 0.70
  if (below_few >= 0) return "few";
  if (above_most >= 0) return "most";
  return "some";
}

}  // namespace

TEST_CASE("quantize_ratio agrees with the piecewise oracle on every pair up to 16") {
  int mismatches = 0;
  for (int m = 1; m <= 16; ++m)
    for (int k = 0; k <= m; ++k)
      if (to_string(quantize_ratio({m, k})) != oracle_word(k, m)) ++mismatches;
  CHECK(mismatches == 0);
}

TEST_CASE("six objects cover all five quantifiers") {
  // 0 of 6 no, 1 few, 2-4 some, 5 most, 6 all
  const std::vector<std::string> expect = {"no", "few", "some", "some", "some", "most", "all"};
  for (int k = 0; k <= 6; ++k) CHECK(to_string(quantize_ratio({6, k})) == expect[static_cast<std::size_t>(k)]);
  // five objects cannot express few
  for (int k = 0; k <= 5; ++k) CHECK(quantize_ratio({5, k}) != Quantifier::few);
}

TEST_CASE("threshold edges are inclusive") {
  CHECK(quantize_ratio({100, 17}) == Quantifier::few);
  CHECK(quantize_ratio({100, 18}) == Quantifier::some);
  CHECK(quantize_ratio({100, 70}) == Quantifier::most);
  CHECK(quantize_ratio({100, 69}) == Quantifier::some);
  CHECK(quantize_ratio({10, 7}) == Quantifier::most);
}

TEST_CASE("invalid counts") {
  CHECK_THROWS_AS(quantize_ratio({0, 0}), UndefinedRestrictorError);
  CHECK_THROWS_AS(quantize_ratio({-3, 0}), UndefinedRestrictorError);
  CHECK_THROWS_AS(quantize_ratio({4, 5}), std::invalid_argument);
  CHECK_THROWS_AS(quantize_ratio({4, -1}), std::invalid_argument);
}

TEST_CASE("words round-trip and ordinals follow the scale") {
  for (auto q : kAllQuantifiers) {
    CHECK(parse_quantifier(to_string(q)) == q);
    CHECK(quantifier_from_ordinal(ordinal(q)) == q);
  }
  CHECK_THROWS(parse_quantifier("many"));
  CHECK_THROWS(parse_quantifier("Most"));
  CHECK_THROWS(quantifier_from_ordinal(5));
  CHECK(scale_distance(Quantifier::no, Quantifier::all) == 4);
  CHECK(scale_distance(Quantifier::most, Quantifier::some) == 1);
}

TEST_CASE("feasible pairs per label for 6 <= m <= 16") {
  // counted by hand from the thresholds: no and all give one pair per m
  std::map<Quantifier, std::size_t> expect = {{Quantifier::no, 11},
                                              {Quantifier::few, 16},
                                              {Quantifier::some, 63},
                                              {Quantifier::most, 31},
                                              {Quantifier::all, 11}};
  std::size_t total = 0;
  for (auto q : kAllQuantifiers) {
    const auto pairs = feasible_counts(q, 6, 16);
    CHECK(pairs.size() == expect[q]);
    total += pairs.size();
    for (auto c : pairs) CHECK(quantize_ratio(c) == q);
  }
  // every (m, k) lands in exactly one label
  CHECK(total == static_cast<std::size_t>((7 + 17) * 11 / 2));
  const auto few = feasible_counts(Quantifier::few, 6, 16);
  CHECK(std::find(few.begin(), few.end(), SetCounts{6, 1}) != few.end());
  CHECK(std::find(few.begin(), few.end(), SetCounts{16, 2}) != few.end());
}

TEST_CASE("property: the label is monotone in k for fixed m") {
  auto r = gen::rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const auto c = gen::counts(r, 60);
    if (c.k == c.m) continue;
    CHECK(ordinal(quantize_ratio({c.m, c.k + 1})) >= ordinal(quantize_ratio(c)));
  }
}

TEST_CASE("property: scaling both counts keeps the label") {
  auto r = gen::rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    const auto c = gen::counts(r, 30);
    const int s = gen::integer(r, 2, 7);
    CHECK(quantize_ratio({c.m * s, c.k * s}) == quantize_ratio(c));
  }
}
