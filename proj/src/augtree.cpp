#include "augimodels/augtree.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include "augimodels/errors.hpp"
#include "augimodels/rng.hpp"
#include "kernels_detail.hpp"

namespace aug::tree {

std::string_view to_string(ExpansionKind kind) {
  switch (kind) {
    case ExpansionKind::None: return "none";
    case ExpansionKind::Llm: return "llm";
    case ExpansionKind::Embedding: return "embedding";
  }
  return "none";
}

ExpansionKind parse_expansion(std::string_view name) {
  if (name == "none") return ExpansionKind::None;
  if (name == "llm") return ExpansionKind::Llm;
  if (name == "embedding") return ExpansionKind::Embedding;
  throw InvalidArgument("unknown expansion kind: " + std::string(name));
}

void TreeFitConfig::validate() const {
  if (max_depth < 1) throw InvalidArgument("max_depth must be >= 1");
  if (min_samples_split < 2) throw InvalidArgument("min_samples_split must be >= 2");
  if (expansion_seeds < 1) throw InvalidArgument("expansion_seeds must be >= 1");
  if (candidate_limit < 1) throw InvalidArgument("candidate_limit must be positive");
  if (expansion == ExpansionKind::Llm && prompt_template.find("{keyphrase}") == std::string::npos)
    throw InvalidArgument("prompt template lacks the {keyphrase} placeholder");
  (void)ngram_config.canonical();
}

namespace {

bool tie_or_better(double a, double b) { return a >= b - kTieTolerance * std::max(1.0, std::abs(b)); }
bool strictly_better(double a, double b) { return a > b + kTieTolerance * std::max(1.0, std::abs(b)); }

bool window_match(std::span<const text::Token> doc, std::span<const text::Token> phrase) {
  if (phrase.empty() || phrase.size() > doc.size()) return false;
  for (std::size_t s = 0; s + phrase.size() <= doc.size(); ++s)
    if (std::equal(phrase.begin(), phrase.end(), doc.begin() + static_cast<std::ptrdiff_t>(s)))
      return true;
  return false;
}

}  // namespace

// --- impurity -------------------------------------------------------------------

double impurity(std::span<const int> labels, std::size_t num_classes) {
  if (labels.empty()) throw EmptyNode("impurity of an empty node");
  std::vector<double> counts(num_classes, 0.0);
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= num_classes) throw InvalidArgument("label out of range");
    counts[static_cast<std::size_t>(l)] += 1;
  }
  const double n = static_cast<double>(labels.size());
  double g = 1.0;
  for (double c : counts) g -= (c / n) * (c / n);
  return std::max(0.0, g);
}

double impurity(std::span<const double> responses) {
  if (responses.empty()) throw EmptyNode("impurity of an empty node");
  const double n = static_cast<double>(responses.size());
  const double mean = std::accumulate(responses.begin(), responses.end(), 0.0) / n;
  double acc = 0;
  for (double y : responses) acc += (y - mean) * (y - mean);
  return acc / n;
}

namespace {

template <class T, class F>
double split_decrease(std::span<const bool> in_left, std::span<const T> ys, F&& h) {
  if (in_left.size() != ys.size()) throw InvalidArgument("split mask length mismatch");
  std::vector<T> left, right;
  for (std::size_t i = 0; i < ys.size(); ++i) (in_left[i] ? left : right).push_back(ys[i]);
  if (left.empty() || right.empty()) throw DegenerateSplit("one child would be empty");
  auto mass = [&](std::span<const T> s) { return static_cast<double>(s.size()) * h(s); };
  return mass(ys) - mass(left) - mass(right);
}

}  // namespace

double impurity_decrease(std::span<const bool> in_left, std::span<const int> labels,
                         std::size_t num_classes) {
  return split_decrease<int>(in_left, labels,
                             [&](std::span<const int> s) { return impurity(s, num_classes); });
}

double impurity_decrease(std::span<const bool> in_left, std::span<const double> responses) {
  return split_decrease<double>(in_left, responses,
                                [](std::span<const double> s) { return impurity(s); });
}

// --- training data ----------------------------------------------------------------

TreeData::TreeData(const LabeledCorpus& corpus, std::span<const std::size_t> rows,
                   const text::NgramConfig& config, const text::Vocabulary& vocabulary)
    : task_(corpus.task),
      num_classes_(corpus.num_classes()),
      config_(config.canonical()),
      vocabulary_(vocabulary) {
  tokens_.reserve(rows.size());
  std::vector<std::vector<std::uint32_t>> lists(vocabulary_.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = rows[i];
    if (task_ == Task::Classification)
      labels_.push_back(corpus.labels[r]);
    else
      responses_.push_back(corpus.responses[r]);
    tokens_.push_back(text::tokenize(corpus.documents[r], config_));
    for (const auto& g : text::extract_ngram_strings(tokens_.back(), config_)) {
      const auto v = vocabulary_.find(g);
      if (v == text::Vocabulary::npos) continue;
      auto& list = lists[v];
      if (list.empty() || list.back() != i) list.push_back(static_cast<std::uint32_t>(i));
    }
  }
  for (const auto& list : lists) vocab_postings_.push_row(list);
}

const std::vector<std::uint32_t>& TreeData::postings(const std::string& keyphrase) const {
  {
    std::shared_lock lock(cache_mutex_);
    auto it = cache_.find(keyphrase);
    if (it != cache_.end()) return it->second;
  }
  const auto phrase = text::tokenize(keyphrase, config_);
  std::vector<std::uint32_t> docs;
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    if (window_match(tokens_[i], phrase)) docs.push_back(static_cast<std::uint32_t>(i));
  std::unique_lock lock(cache_mutex_);
  return cache_.emplace(keyphrase, std::move(docs)).first->second;
}

kernels::SplitTargets TreeData::targets(std::span<const std::uint32_t> weight) const {
  kernels::SplitTargets t;
  t.weight = weight;
  if (task_ == Task::Classification) {
    t.labels = labels_;
    t.num_classes = num_classes_;
  } else {
    t.responses = responses_;
  }
  return t;
}

std::optional<double> disjunction_decrease(const TreeData& data,
                                           std::span<const std::uint32_t> weight,
                                           std::span<const std::string> keyphrases) {
  std::vector<std::uint32_t> members;
  for (const auto& k : keyphrases) {
    const auto& p = data.postings(k);
    members.insert(members.end(), p.begin(), p.end());
  }
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  kernels::CsrIndex one;
  one.push_row(members);
  const auto targets = data.targets(weight);
  const auto totals = kernels::detail::node_totals(targets);
  std::vector<double> scratch;
  const double d = kernels::detail::scan_one(one, targets, totals, 0, scratch);
  if (std::isinf(d)) return std::nullopt;
  return d;
}

std::vector<CartCandidate> top_cart_splits(const TreeData& data,
                                           std::span<const std::uint32_t> weight,
                                           std::size_t count) {
  const auto& postings = data.vocabulary_postings();
  const auto decreases = kernels::omp::split_scan(postings, data.targets(weight));
  std::vector<CartCandidate> out;
  std::vector<bool> taken(decreases.size(), false);
  for (std::size_t pick = 0; pick < count; ++pick) {
    std::size_t best = decreases.size();
    for (std::size_t v = 0; v < decreases.size(); ++v) {
      if (taken[v] || !std::isfinite(decreases[v])) continue;
      if (!strictly_better(decreases[v], 0.0)) continue;
      if (best == decreases.size() || strictly_better(decreases[v], decreases[best])) best = v;
    }
    if (best == decreases.size()) break;
    taken[best] = true;
    out.push_back({data.vocabulary()[best].ngram, decreases[best]});
  }
  return out;
}

std::optional<CartCandidate> best_cart_split(const TreeData& data,
                                             std::span<const std::uint32_t> weight) {
  auto top = top_cart_splits(data, weight, 1);
  if (top.empty()) return std::nullopt;
  return top.front();
}

// --- expansion ----------------------------------------------------------------------

std::string format_prompt(std::string_view prompt_template, std::string_view keyphrase) {
  static constexpr std::string_view kPlaceholder = "{keyphrase}";
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto hit = prompt_template.find(kPlaceholder, pos);
    out.append(prompt_template.substr(pos, hit - pos));
    if (hit == std::string_view::npos) break;
    out.append(keyphrase);
    pos = hit + kPlaceholder.size();
  }
  return out;
}

std::vector<std::string> deduplicate_candidates(std::span<const std::string> raw,
                                                std::string_view seed, std::size_t limit) {
  const auto clean_seed = text::clean_phrase(seed);
  std::vector<std::string> out;
  for (const auto& r : raw) {
    if (out.size() >= limit) break;
    auto c = text::clean_phrase(r);
    if (c.empty() || c == clean_seed) continue;
    if (std::find(out.begin(), out.end(), c) != out.end()) continue;
    out.push_back(std::move(c));
  }
  return out;
}

namespace {

// Trailing list marker of a prompt ("...\n1."), if any.
std::string trailing_marker(std::string_view prompt) {
  while (!prompt.empty() && (prompt.back() == ' ' || prompt.back() == '\t')) prompt.remove_suffix(1);
  const auto nl = prompt.rfind('\n');
  auto last = nl == std::string_view::npos ? prompt : prompt.substr(nl + 1);
  while (!last.empty() && (last.front() == ' ' || last.front() == '\t')) last.remove_prefix(1);
  if (last.size() < 2 || (last.back() != '.' && last.back() != ')')) return {};
  for (std::size_t i = 0; i + 1 < last.size(); ++i)
    if (last[i] < '0' || last[i] > '9') return {};
  return std::string(last);
}

}  // namespace

ExpansionResult expand_keyphrase_llm(std::string_view keyphrase, llm::Client& client,
                                     std::string_view prompt_template, std::size_t limit,
                                     int max_tokens) {
  llm::CompletionRequest request;
  request.prompt = format_prompt(prompt_template, keyphrase);
  request.max_tokens = max_tokens;
  auto completion = client.complete(request);

  const auto marker = trailing_marker(request.prompt);
  if (!marker.empty()) {
    const auto first_line = completion.substr(0, completion.find('\n'));
    if (llm::parse_numbered_list(first_line).empty()) {
      const bool leading_ws = !completion.empty() && (completion.front() == ' ' || completion.front() == '\t');
      completion = marker + (leading_ws ? "" : " ") + completion;
    }
  }
  const auto parsed = llm::parse_numbered_list(completion);
  if (parsed.empty()) throw UnparseableCompletion("no numbered items for '" + std::string(keyphrase) + "'");
  ExpansionResult result;
  result.generated = parsed.size();
  result.candidates = deduplicate_candidates(parsed, keyphrase, limit);
  return result;
}

std::vector<std::string> expand_keyphrase_embedding(std::string_view keyphrase,
                                                    std::span<const std::string> vocabulary,
                                                    embed::EmbeddingProvider& provider,
                                                    std::size_t k) {
  if (k == 0) return {};
  if (vocabulary.empty()) throw InvalidArgument("embedding expansion needs a vocabulary");
  const RowMatrix table = embed::embed_matrix(vocabulary, provider);
  const auto query = provider.embed(keyphrase);
  const auto dist = kernels::omp::squared_distances(table, query);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < vocabulary.size(); ++i)
    if (vocabulary[i] != keyphrase) order.push_back(i);
  const auto take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (dist[a] != dist[b]) return dist[a] < dist[b];
                      return vocabulary[a] < vocabulary[b];
                    });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < take; ++i) out.push_back(vocabulary[order[i]]);
  return out;
}

LlmExpander::LlmExpander(std::shared_ptr<llm::Client> client, std::string prompt_template,
                         std::size_t limit, int max_tokens)
    : client_(std::move(client)),
      template_(std::move(prompt_template)),
      limit_(limit),
      max_tokens_(max_tokens) {
  if (template_.find("{keyphrase}") == std::string::npos)
    throw InvalidArgument("prompt template lacks the {keyphrase} placeholder");
}

ExpansionResult LlmExpander::expand(const std::string& keyphrase) {
  std::lock_guard lock(mutex_);
  auto it = memo_.find(keyphrase);
  if (it != memo_.end()) return it->second;
  auto result = expand_keyphrase_llm(keyphrase, *client_, template_, limit_, max_tokens_);
  return memo_.emplace(keyphrase, std::move(result)).first->second;
}

EmbeddingExpander::EmbeddingExpander(std::vector<std::string> vocabulary,
                                     std::shared_ptr<embed::EmbeddingProvider> provider,
                                     std::size_t k)
    : vocabulary_(std::move(vocabulary)), provider_(std::move(provider)), k_(k) {}

ExpansionResult EmbeddingExpander::expand(const std::string& keyphrase) {
  ExpansionResult result;
  if (k_ == 0 || vocabulary_.empty()) return result;
  std::call_once(embedded_, [&] { table_ = embed::embed_matrix(vocabulary_, *provider_); });
  const auto query = provider_->embed(keyphrase);
  const auto dist = kernels::omp::squared_distances(table_, query);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < vocabulary_.size(); ++i)
    if (vocabulary_[i] != keyphrase) order.push_back(i);
  const auto take = std::min(k_, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (dist[a] != dist[b]) return dist[a] < dist[b];
                      return vocabulary_[a] < vocabulary_[b];
                    });
  for (std::size_t i = 0; i < take; ++i) result.candidates.push_back(vocabulary_[order[i]]);
  result.generated = result.candidates.size();
  return result;
}

// --- screening -------------------------------------------------------------------------

SplitDisjunction screen_candidates(const TreeData& data, std::span<const std::uint32_t> weight,
                                   const std::string& seed,
                                   std::span<const std::string> candidates) {
  SplitDisjunction out;
  out.keyphrases = {seed};
  const auto seed_decrease = disjunction_decrease(data, weight, out.keyphrases);
  if (!seed_decrease) throw DegenerateSplit("seed keyphrase '" + seed + "' does not split the node");
  double best = *seed_decrease;

  for (const auto& c : candidates) {
    if (std::find(out.keyphrases.begin(), out.keyphrases.end(), c) != out.keyphrases.end()) continue;
    out.keyphrases.push_back(c);
    const auto d = disjunction_decrease(data, weight, out.keyphrases);
    if (d && strictly_better(*d, best))
      best = *d;
    else
      out.keyphrases.pop_back();
  }

  // A later keyphrase can make an earlier one redundant; drop those.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 1; i < out.keyphrases.size(); ++i) {
      auto without = out.keyphrases;
      without.erase(without.begin() + static_cast<std::ptrdiff_t>(i));
      const auto d = disjunction_decrease(data, weight, without);
      if (d && tie_or_better(*d, best)) {
        out.keyphrases = std::move(without);
        best = *d;
        changed = true;
        break;
      }
    }
  }
  out.impurity_decrease = best;
  out.stats.deduplicated = candidates.size();
  out.stats.retained = out.keyphrases.size() - 1;
  return out;
}

// --- model ------------------------------------------------------------------------------

void AugTreeModel::rebuild_matchers() {
  matchers_.assign(nodes.size(), {});
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (const auto& k : nodes[i].keyphrases) matchers_[i].push_back(text::tokenize(k, ngram_config));
}

std::vector<double> AugTreeModel::predict_tokens(std::span<const text::Token> tokens) const {
  if (nodes.empty()) throw InvalidArgument("empty tree");
  if (matchers_.size() != nodes.size()) throw InvalidArgument("tree matchers not built");
  std::size_t at = 0;
  while (!nodes[at].leaf) {
    bool hit = false;
    for (const auto& phrase : matchers_[at])
      if (window_match(tokens, phrase)) {
        hit = true;
        break;
      }
    at = hit ? nodes[at].contains_child : nodes[at].absent_child;
  }
  return nodes[at].value;
}

std::vector<double> AugTreeModel::predict(std::string_view document) const {
  const auto tokens = text::tokenize(document, ngram_config);
  return predict_tokens(tokens);
}

std::size_t AugTreeModel::num_internal() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return !n.leaf; }));
}

std::size_t AugTreeModel::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t deepest = 0;
  while (!stack.empty()) {
    auto [at, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes[at].leaf) {
      stack.push_back({nodes[at].contains_child, d + 1});
      stack.push_back({nodes[at].absent_child, d + 1});
    }
  }
  return deepest;
}

namespace {

class Builder {
public:
  Builder(const TreeData& data, const TreeFitConfig& config, KeyphraseExpander* expander,
          AugTreeModel& model)
      : data_(data), config_(config), expander_(expander), model_(model) {}

  std::size_t build(const std::vector<std::uint32_t>& weight, int depth) {
    const auto index = model_.nodes.size();
    model_.nodes.emplace_back();
    double n = 0;
    for (auto w : weight) n += w;
    model_.nodes[index].n_samples = static_cast<std::size_t>(n);

    if (depth >= config_.max_depth || n < static_cast<double>(config_.min_samples_split) || pure(weight))
      return make_leaf(index, weight);

    const auto seeds = top_cart_splits(data_, weight, static_cast<std::size_t>(config_.expansion_seeds));
    if (seeds.empty()) return make_leaf(index, weight);

    std::optional<SplitDisjunction> best;
    for (const auto& seed : seeds) {
      ExpansionResult expansion;
      if (config_.expansion != ExpansionKind::None) expansion = expander_->expand(seed.ngram);
      auto split = screen_candidates(data_, weight, seed.ngram, expansion.candidates);
      split.stats.generated = expansion.generated;
      if (!best || strictly_better(split.impurity_decrease, best->impurity_decrease)) best = std::move(split);
    }
    if (!strictly_better(best->impurity_decrease, 0.0)) return make_leaf(index, weight);

    std::vector<std::uint32_t> in(weight.size(), 0), out = weight;
    for (const auto& k : best->keyphrases)
      for (auto doc : data_.postings(k)) {
        in[doc] = weight[doc];
        out[doc] = 0;
      }
    {
      auto& node = model_.nodes[index];
      node.leaf = false;
      node.keyphrases = best->keyphrases;
      node.impurity_decrease = best->impurity_decrease;
      node.stats = best->stats;
    }
    const auto contains = build(in, depth + 1);
    const auto absent = build(out, depth + 1);
    model_.nodes[index].contains_child = contains;
    model_.nodes[index].absent_child = absent;
    return index;
  }

private:
  bool pure(const std::vector<std::uint32_t>& weight) const {
    if (data_.task() == Task::Classification) {
      int seen = -1;
      for (std::size_t i = 0; i < weight.size(); ++i) {
        if (!weight[i]) continue;
        if (seen < 0) seen = data_.labels()[i];
        else if (data_.labels()[i] != seen) return false;
      }
      return true;
    }
    bool first = true;
    double value = 0;
    for (std::size_t i = 0; i < weight.size(); ++i) {
      if (!weight[i]) continue;
      if (first) value = data_.responses()[i], first = false;
      else if (data_.responses()[i] != value) return false;
    }
    return true;
  }

  std::size_t make_leaf(std::size_t index, const std::vector<std::uint32_t>& weight) {
    auto& node = model_.nodes[index];
    node.leaf = true;
    double n = 0;
    if (data_.task() == Task::Classification) {
      node.value.assign(data_.num_classes(), 0.0);
      for (std::size_t i = 0; i < weight.size(); ++i) {
        node.value[static_cast<std::size_t>(data_.labels()[i])] += weight[i];
        n += weight[i];
      }
      for (auto& v : node.value) v /= n;
    } else {
      double sum = 0;
      for (std::size_t i = 0; i < weight.size(); ++i) {
        sum += weight[i] * data_.responses()[i];
        n += weight[i];
      }
      node.value = {sum / n};
    }
    return index;
  }

  const TreeData& data_;
  const TreeFitConfig& config_;
  KeyphraseExpander* expander_;
  AugTreeModel& model_;
};

}  // namespace

AugTreeModel fit_augtree(const TreeData& data, std::span<const std::uint32_t> weight,
                         const TreeFitConfig& config, KeyphraseExpander* expander,
                         const std::vector<std::string>& classes) {
  config.validate();
  if (data.size() == 0) throw EmptyTrainingSplit("no training documents");
  if (config.expansion != ExpansionKind::None && !expander)
    throw InvalidArgument("expansion requested without an expander");
  if (weight.size() != data.size()) throw InvalidArgument("weight length mismatch");
  if (std::all_of(weight.begin(), weight.end(), [](auto w) { return w == 0; }))
    throw EmptyTrainingSplit("all sample weights are zero");
  if (config.task != data.task()) throw InvalidArgument("tree task does not match the corpus");

  AugTreeModel model;
  model.task = data.task();
  if (model.task == Task::Classification) model.classes = classes;
  model.ngram_config = data.config();
  Builder builder(data, config, expander, model);
  builder.build(std::vector<std::uint32_t>(weight.begin(), weight.end()), 0);
  model.rebuild_matchers();
  return model;
}

AugTreeModel fit_augtree(const LabeledCorpus& corpus, const TreeFitConfig& config,
                         const text::Vocabulary& vocabulary, KeyphraseExpander* expander) {
  const auto train = corpus.indices(Split::Train);
  if (train.empty()) throw EmptyTrainingSplit("corpus has no training documents");
  TreeData data(corpus, train, config.ngram_config, vocabulary);
  std::vector<std::uint32_t> weight(train.size(), 1);
  return fit_augtree(data, weight, config, expander, corpus.classes);
}

std::vector<std::uint32_t> bootstrap_weights(std::size_t n, std::uint64_t seed, std::size_t index) {
  Rng rng(splitmix64(seed) ^ splitmix64(0x5bd1e995ULL + index));
  std::vector<std::uint32_t> weight(n, 0);
  for (std::size_t i = 0; i < n; ++i) ++weight[static_cast<std::size_t>(rng.below(n))];
  return weight;
}

AugTreeEnsemble fit_ensemble(const LabeledCorpus& corpus, const TreeFitConfig& config,
                             const text::Vocabulary& vocabulary, KeyphraseExpander* expander,
                             std::size_t n_estimators, std::uint64_t seed, bool bootstrap) {
  if (n_estimators < 1) throw InvalidArgument("n_estimators must be >= 1");
  const auto train = corpus.indices(Split::Train);
  if (train.empty()) throw EmptyTrainingSplit("corpus has no training documents");
  const TreeData data(corpus, train, config.ngram_config, vocabulary);

  AugTreeEnsemble ensemble;
  ensemble.n_estimators = n_estimators;
  ensemble.bootstrap_seed = seed;
  ensemble.bootstrap = bootstrap;
  ensemble.trees.resize(n_estimators);

  std::exception_ptr failure;
  const auto count = static_cast<std::ptrdiff_t>(n_estimators);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t t = 0; t < count; ++t) {
    try {
      const auto weight = bootstrap ? bootstrap_weights(train.size(), seed, static_cast<std::size_t>(t))
                                    : std::vector<std::uint32_t>(train.size(), 1);
      ensemble.trees[static_cast<std::size_t>(t)] = fit_augtree(data, weight, config, expander, corpus.classes);
    } catch (...) {
#pragma omp critical(aug_ensemble_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return ensemble;
}

std::vector<double> AugTreeEnsemble::predict(std::string_view document) const {
  if (trees.empty()) throw InvalidArgument("empty ensemble");
  const auto tokens = text::tokenize(document, trees.front().ngram_config);
  std::vector<double> sum;
  for (const auto& t : trees) {
    const auto v = t.ngram_config == trees.front().ngram_config ? t.predict_tokens(tokens) : t.predict(document);
    if (sum.empty()) sum.assign(v.size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) sum[i] += v[i];
  }
  for (auto& s : sum) s /= static_cast<double>(trees.size());
  return sum;
}

}  // namespace aug::tree
