#include "augimodels/report.hpp"

#include <algorithm>
#include <cstdio>

#include "augimodels/errors.hpp"

namespace aug::report {

Direction parse_direction(std::string_view name) {
  if (name == "positive") return Direction::Positive;
  if (name == "negative") return Direction::Negative;
  if (name == "both") return Direction::Both;
  throw InvalidArgument("unknown direction: " + std::string(name));
}

std::string_view to_string(Direction direction) {
  switch (direction) {
    case Direction::Positive: return "positive";
    case Direction::Negative: return "negative";
    case Direction::Both: return "both";
  }
  return "both";
}

CoefficientTable top_coefficients(const gam::CoefficientDictionary& dictionary, std::size_t k,
                                  Direction direction, std::size_t output) {
  if (output >= dictionary.num_outputs()) throw InvalidArgument("output index out of range");
  CoefficientTable table;
  if (dictionary.link == LinkKind::Identity)
    table.output = "response";
  else if (dictionary.link == LinkKind::Logit && dictionary.classes.size() == 2)
    table.output = dictionary.classes[1];
  else if (output < dictionary.classes.size())
    table.output = dictionary.classes[output];

  std::vector<std::pair<double, const std::string*>> all;
  for (const auto& [g, v] : dictionary.entries) all.emplace_back(v[output], &g);

  auto emit = [&](Direction d) {
    auto sorted = all;
    std::stable_sort(sorted.begin(), sorted.end(), [d](const auto& a, const auto& b) {
      if (a.first != b.first) return d == Direction::Positive ? a.first > b.first : a.first < b.first;
      return *a.second < *b.second;
    });
    for (std::size_t i = 0; i < std::min(k, sorted.size()); ++i)
      table.rows.push_back({d, i + 1, *sorted[i].second, sorted[i].first});
  };
  if (direction != Direction::Negative) emit(Direction::Positive);
  if (direction != Direction::Positive) emit(Direction::Negative);
  return table;
}

std::string CoefficientTable::to_tsv() const {
  std::string out = "direction\trank\tngram\tvalue\n";
  for (const auto& r : rows) {
    out += to_string(r.direction);
    out += '\t' + std::to_string(r.rank) + '\t' + r.ngram + '\t' + gam::format_double(r.value) + '\n';
  }
  return out;
}

std::string CoefficientTable::to_text() const {
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.ngram.size());
  std::string out;
  if (!output.empty()) out += "output: " + output + "\n";
  Direction current = Direction::Both;
  char buf[64];
  for (const auto& r : rows) {
    if (r.direction != current) {
      current = r.direction;
      out += std::string("\n") + (current == Direction::Positive ? "top positive" : "top negative") + "\n";
    }
    std::snprintf(buf, sizeof buf, "%4zu  ", r.rank);
    out += buf;
    out += r.ngram;
    out.append(width - r.ngram.size() + 2, ' ');
    std::snprintf(buf, sizeof buf, "%+.6f\n", r.value);
    out += buf;
  }
  return out;
}

}  // namespace aug::report
