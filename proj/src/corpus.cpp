#include "augimodels/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "augimodels/errors.hpp"
#include "augimodels/rng.hpp"

namespace aug {

std::string_view to_string(Task task) {
  return task == Task::Classification ? "classification" : "regression";
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  return "train";
}

Task parse_task(std::string_view name) {
  if (name == "classification") return Task::Classification;
  if (name == "regression") return Task::Regression;
  throw InvalidArgument("unknown task: " + std::string(name));
}

CorpusFormat parse_format(std::string_view name) {
  if (name == "tsv") return CorpusFormat::Tsv;
  if (name == "jsonl") return CorpusFormat::Jsonl;
  throw InvalidArgument("unknown corpus format: " + std::string(name));
}

std::vector<std::size_t> LabeledCorpus::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < splits.size(); ++i)
    if (splits[i] == split) out.push_back(i);
  return out;
}

void LabeledCorpus::add(std::string document, std::string_view label, Split split) {
  auto it = std::find(classes.begin(), classes.end(), label);
  if (it == classes.end()) {
    classes.emplace_back(label);
    it = classes.end() - 1;
  }
  documents.push_back(std::move(document));
  labels.push_back(static_cast<int>(it - classes.begin()));
  splits.push_back(split);
}

void LabeledCorpus::add(std::string document, double response, Split split) {
  documents.push_back(std::move(document));
  responses.push_back(response);
  splits.push_back(split);
}

LabeledCorpus LabeledCorpus::subset(const std::vector<std::size_t>& rows) const {
  LabeledCorpus out;
  out.task = task;
  out.classes = classes;
  out.seed = seed;
  for (auto r : rows) {
    out.documents.push_back(documents[r]);
    out.splits.push_back(splits[r]);
    if (task == Task::Classification)
      out.labels.push_back(labels[r]);
    else
      out.responses.push_back(responses[r]);
  }
  return out;
}

void LabeledCorpus::validate() const {
  const auto n = documents.size();
  if (splits.size() != n) throw InvalidArgument("corpus split assignment size mismatch");
  if (task == Task::Classification) {
    if (labels.size() != n) throw InvalidArgument("corpus label count mismatch");
    for (int l : labels)
      if (l < 0 || static_cast<std::size_t>(l) >= classes.size())
        throw InvalidArgument("corpus label index out of range");
  } else {
    if (responses.size() != n) throw InvalidArgument("corpus response count mismatch");
    for (double r : responses)
      if (!std::isfinite(r)) throw InvalidArgument("corpus response is not finite");
  }
}

namespace {

double parse_response(std::string_view s, std::size_t line) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
    throw MalformedRow(line, "regression target is not a finite number");
  return v;
}

void assign_splits(LabeledCorpus& corpus, const SplitSpec& spec) {
  const auto n = corpus.size();
  if (spec.fixed) {
    corpus.splits.assign(n, *spec.fixed);
    return;
  }
  if (spec.train_fraction < 0 || spec.validation_fraction < 0 ||
      spec.train_fraction + spec.validation_fraction > 1.0 + 1e-12)
    throw InvalidArgument("split fractions must be non-negative and sum to at most 1");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(spec.seed);
  rng.shuffle(std::span(order));
  const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
  const auto n_val = std::min(
      n - std::min(n, n_train),
      static_cast<std::size_t>(std::llround(spec.validation_fraction * static_cast<double>(n))));
  corpus.splits.assign(n, Split::Test);
  for (std::size_t r = 0; r < n; ++r) {
    if (r < n_train)
      corpus.splits[order[r]] = Split::Train;
    else if (r < n_train + n_val)
      corpus.splits[order[r]] = Split::Validation;
  }
  corpus.seed = spec.seed;
}

}  // namespace

LabeledCorpus parse_corpus(std::string_view content, CorpusFormat format,
                           const SplitSpec& split_spec, Task task) {
  LabeledCorpus corpus;
  corpus.task = task;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    auto nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (nl == content.size()) break;
      continue;
    }

    std::string label;
    std::string text;
    if (format == CorpusFormat::Tsv) {
      const auto tab = line.find('\t');
      if (tab == std::string_view::npos) throw MalformedRow(line_no, "missing tab separator");
      label = std::string(line.substr(0, tab));
      text = std::string(line.substr(tab + 1));
      if (label.empty()) throw MalformedRow(line_no, "empty label");
    } else {
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw MalformedRow(line_no, e.what());
      }
      if (!obj.is_object() || !obj.contains("text") || !obj.contains("label") ||
          !obj["text"].is_string())
        throw MalformedRow(line_no, "expected an object with string \"text\" and \"label\"");
      text = obj["text"].get<std::string>();
      const auto& l = obj["label"];
      if (l.is_string())
        label = l.get<std::string>();
      else if (l.is_number_integer())
        label = std::to_string(l.get<long long>());
      else if (l.is_number())
        label = l.dump();
      else
        throw MalformedRow(line_no, "label must be a string or number");
    }

    if (task == Task::Classification)
      corpus.add(std::move(text), label);
    else
      corpus.add(std::move(text), parse_response(label, line_no));
    if (nl == content.size()) break;
  }
  if (corpus.size() == 0) throw EmptyCorpus("no rows found");
  assign_splits(corpus, split_spec);
  return corpus;
}

LabeledCorpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                          const SplitSpec& split_spec, Task task) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str(), format, split_spec, task);
}

void append_corpus(LabeledCorpus& corpus, const LabeledCorpus& other) {
  if (corpus.size() == 0 && corpus.classes.empty()) corpus.task = other.task;
  if (corpus.task != other.task) throw InvalidArgument("cannot append corpora of different tasks");
  for (std::size_t i = 0; i < other.size(); ++i) {
    if (other.task == Task::Classification)
      corpus.add(other.documents[i], other.classes[static_cast<std::size_t>(other.labels[i])],
                 other.splits[i]);
    else
      corpus.add(other.documents[i], other.responses[i], other.splits[i]);
  }
}

}  // namespace aug
