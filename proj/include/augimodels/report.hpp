#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "augimodels/auggam.hpp"

namespace aug::report {

enum class Direction { Positive, Negative, Both };
Direction parse_direction(std::string_view name);
std::string_view to_string(Direction direction);

struct CoefficientRow {
  Direction direction = Direction::Positive;  // Positive or Negative
  std::size_t rank = 0;                       // 1-based within its direction
  std::string ngram;
  double value = 0;
};

struct CoefficientTable {
  std::string output;  // class name, or "response"
  std::vector<CoefficientRow> rows;

  std::string to_text() const;
  std::string to_tsv() const;
};

/// Top-k entries by signed contribution to `output`: largest first for
/// Positive, smallest first for Negative, both lists for Both. Ties go to
/// the lexicographically smaller ngram. For a logit dictionary the single
/// output is the second class.
CoefficientTable top_coefficients(const gam::CoefficientDictionary& dictionary, std::size_t k,
                                  Direction direction, std::size_t output = 0);

}  // namespace aug::report
