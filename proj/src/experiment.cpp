#include "augimodels/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>

#include <json.hpp>

#include "augimodels/auggam.hpp"
#include "augimodels/baselines.hpp"
#include "augimodels/errors.hpp"
#include "augimodels/metrics.hpp"
#include "augimodels/rng.hpp"
#include "binio.hpp"

namespace aug::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Gam: return "gam";
    case ModelKind::Tree: return "tree";
    case ModelKind::Ensemble: return "ensemble";
    case ModelKind::BagOfNgrams: return "bow";
    case ModelKind::TfIdf: return "tfidf";
  }
  return "gam";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "gam") return ModelKind::Gam;
  if (name == "tree") return ModelKind::Tree;
  if (name == "ensemble") return ModelKind::Ensemble;
  if (name == "bow") return ModelKind::BagOfNgrams;
  if (name == "tfidf") return ModelKind::TfIdf;
  throw InvalidArgument("unknown model kind: " + std::string(name));
}

LabeledCorpus DataSpec::load() const {
  if (!path.empty())
    return load_corpus(path, format, SplitSpec::random(train_fraction, validation_fraction, split_seed), task);
  if (train.empty()) throw InvalidArgument("data spec needs 'path' or 'train'");
  auto corpus = load_corpus(train, format, SplitSpec::all(Split::Train), task);
  if (!validation.empty())
    append_corpus(corpus, load_corpus(validation, format, SplitSpec::all(Split::Validation), task));
  if (!test.empty()) append_corpus(corpus, load_corpus(test, format, SplitSpec::all(Split::Test), task));
  return corpus;
}

// --- spec parsing ---------------------------------------------------------------

namespace {

template <class T>
std::vector<T> list_of(const json& j) {
  if (j.is_array()) return j.get<std::vector<T>>();
  return {j.get<T>()};
}

std::vector<int> orders_of(const json& j) {
  if (j.is_string()) return text::NgramConfig::parse_orders(j.get<std::string>());
  if (j.is_number_integer()) return {j.get<int>()};
  return j.get<std::vector<int>>();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

ExperimentSpec ExperimentSpec::parse(std::string_view text, const fs::path& base_dir) {
  ExperimentSpec spec;
  try {
    const auto j = json::parse(text);
    spec.name = j.value("name", spec.name);
    spec.seed = j.value("seed", spec.seed);

    const auto& d = j.at("data");
    spec.data.format = parse_format(d.value("format", std::string("tsv")));
    spec.data.task = parse_task(d.value("task", std::string("classification")));
    if (d.contains("path")) spec.data.path = resolve(base_dir, d["path"].get<std::string>());
    if (d.contains("train")) spec.data.train = resolve(base_dir, d["train"].get<std::string>());
    if (d.contains("validation")) spec.data.validation = resolve(base_dir, d["validation"].get<std::string>());
    if (d.contains("test")) spec.data.test = resolve(base_dir, d["test"].get<std::string>());
    spec.data.train_fraction = d.value("train_fraction", spec.data.train_fraction);
    spec.data.validation_fraction = d.value("validation_fraction", spec.data.validation_fraction);
    spec.data.split_seed = d.value("split_seed", spec.seed);

    if (j.contains("embedding")) {
      const auto& e = j["embedding"];
      embed::EmbeddingProviderSpec p;
      const auto kind = e.at("kind").get<std::string>();
      if (kind == "stub")
        p.kind = embed::ProviderKind::Stub;
      else if (kind == "cache")
        p.kind = embed::ProviderKind::CacheBacked;
      else if (kind == "remote")
        p.kind = embed::ProviderKind::Remote;
      else
        throw InvalidArgument("unknown embedding kind: " + kind);
      p.dim = e.value("dim", std::size_t{0});
      p.seed = e.value("seed", std::uint64_t{0});
      p.endpoint = e.value("endpoint", std::string());
      if (e.contains("cache")) p.cache_path = resolve(base_dir, e["cache"].get<std::string>());
      spec.embedding = p;
    }
    if (j.contains("llm")) {
      const auto& l = j["llm"];
      LlmSpec s;
      s.endpoint = l.value("endpoint", std::string());
      if (l.contains("replay_dir")) s.replay_dir = resolve(base_dir, l["replay_dir"].get<std::string>());
      s.mode = llm::parse_mode(l.value("mode", std::string(s.replay_dir ? "replay" : "live")));
      spec.llm = s;
    }

    const auto& g = j.contains("grid") ? j["grid"] : json::object();
    if (g.contains("model")) {
      spec.models.clear();
      for (const auto& m : list_of<std::string>(g["model"])) spec.models.push_back(parse_model_kind(m));
    }
    if (g.contains("orders")) {
      spec.orders.clear();
      if (g["orders"].is_array() && !g["orders"].empty() && !g["orders"][0].is_number())
        for (const auto& o : g["orders"]) spec.orders.push_back(orders_of(o));
      else
        spec.orders.push_back(orders_of(g["orders"]));
    }
    if (g.contains("lambda")) spec.lambdas = list_of<double>(g["lambda"]);
    if (g.contains("max_depth")) spec.max_depths = list_of<int>(g["max_depth"]);
    if (g.contains("n_estimators")) spec.n_estimators = list_of<std::size_t>(g["n_estimators"]);
    if (g.contains("expansion")) {
      spec.expansions.clear();
      for (const auto& e : list_of<std::string>(g["expansion"])) spec.expansions.push_back(tree::parse_expansion(e));
    }
    if (g.contains("threshold")) spec.thresholds = list_of<double>(g["threshold"]);
    if (g.contains("keep_fraction")) spec.keep_fractions = list_of<double>(g["keep_fraction"]);

    spec.lambda_grid = j.value("lambda_grid", spec.lambda_grid);
    spec.folds = j.value("folds", spec.folds);
    if (j.contains("link")) spec.link = parse_link(j["link"].get<std::string>());
    spec.min_samples_split = j.value("min_samples_split", spec.min_samples_split);
    spec.expansion_seeds = j.value("expansion_seeds", spec.expansion_seeds);
    spec.candidate_limit = j.value("candidate_limit", spec.candidate_limit);
    if (j.contains("prompt_template_file"))
      spec.prompt_template = binio::read_file(resolve(base_dir, j["prompt_template_file"].get<std::string>()));
    else
      spec.prompt_template = j.value("prompt_template", spec.prompt_template);
  } catch (const json::exception& e) {
    throw FormatError(std::string("experiment spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

ExperimentSpec ExperimentSpec::load(const fs::path& path) {
  return parse(binio::read_file(path), path.parent_path());
}

void ExperimentSpec::validate() const {
  if (models.empty() || orders.empty()) throw InvalidArgument("grid needs at least one model and one order set");
  for (const auto& o : orders) {
    text::NgramConfig c;
    c.orders = o;
    (void)c.canonical();
  }
  for (double l : lambdas)
    if (!(l > 0) || !std::isfinite(l)) throw InvalidArgument("lambda values must be positive");
  for (int d : max_depths)
    if (d < 1) throw InvalidArgument("max_depth must be >= 1");
  for (auto n : n_estimators)
    if (n < 1) throw InvalidArgument("n_estimators must be >= 1");
  for (double k : keep_fractions)
    if (!(k > 0 && k <= 1)) throw InvalidArgument("keep_fraction must lie in (0, 1]");
  for (double t : thresholds)
    if (!std::isfinite(t)) throw InvalidArgument("threshold must be finite");
  if (max_depths.empty() || n_estimators.empty() || expansions.empty() || keep_fractions.empty())
    throw InvalidArgument("grid dimensions must be non-empty");
  gam::RegularizationPlan plan;
  plan.lambda_grid = lambda_grid;
  plan.folds = folds;
  plan.validate();
}

// --- grid -------------------------------------------------------------------------

std::string Cell::directory_name() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%03zu-", index);
  return buf + std::string(to_string(model));
}

namespace {

std::string fit_key(const Cell& c) {
  std::string key(to_string(c.model));
  key += "|" + c.config.orders_string();
  if (c.lambda) key += "|l=" + gam::format_double(*c.lambda);
  if (c.max_depth) key += "|d=" + std::to_string(*c.max_depth);
  if (c.n_estimators) key += "|n=" + std::to_string(*c.n_estimators);
  if (c.expansion) key += "|e=" + std::string(tree::to_string(*c.expansion));
  return key;
}

template <class T>
std::vector<std::optional<T>> optionals(const std::vector<T>& values) {
  std::vector<std::optional<T>> out;
  for (const auto& v : values) out.emplace_back(v);
  if (out.empty()) out.emplace_back(std::nullopt);
  return out;
}

}  // namespace

std::vector<Cell> expand_grid(const ExperimentSpec& spec) {
  std::vector<Cell> cells;
  auto push = [&](Cell c) {
    c.index = cells.size();
    c.seed = splitmix64(spec.seed ^ fnv1a64(fit_key(c)));
    cells.push_back(std::move(c));
  };
  for (auto model : spec.models)
    for (const auto& orders : spec.orders) {
      Cell base;
      base.model = model;
      base.config.orders = orders;
      base.config = base.config.canonical();
      switch (model) {
        case ModelKind::Gam:
          for (auto l : optionals(spec.lambdas))
            for (auto t : optionals(spec.thresholds))
              for (auto k : spec.keep_fractions) {
                Cell c = base;
                c.lambda = l;
                c.threshold = t;
                c.keep_fraction = k;
                push(c);
              }
          break;
        case ModelKind::BagOfNgrams:
        case ModelKind::TfIdf:
          for (auto l : optionals(spec.lambdas)) {
            Cell c = base;
            c.lambda = l;
            push(c);
          }
          break;
        case ModelKind::Tree:
          for (int d : spec.max_depths)
            for (auto e : spec.expansions) {
              Cell c = base;
              c.max_depth = d;
              c.expansion = e;
              push(c);
            }
          break;
        case ModelKind::Ensemble:
          for (int d : spec.max_depths)
            for (auto e : spec.expansions)
              for (auto n : spec.n_estimators) {
                Cell c = base;
                c.max_depth = d;
                c.expansion = e;
                c.n_estimators = n;
                push(c);
              }
          break;
      }
    }
  return cells;
}

// --- results table ------------------------------------------------------------------

const std::vector<std::string>& result_columns() {
  static const std::vector<std::string> columns{
      "cell",      "model",        "orders",   "lambda",   "max_depth", "n_estimators",
      "expansion", "threshold",    "keep_fraction", "seed", "status",   "lambda_selected",
      "n_test",    "accuracy",     "roc_auc",  "pearson",  "spearman",  "gam_fraction",
      "hybrid_accuracy", "dict_size", "n_internal", "error"};
  return columns;
}

namespace {

const char* const kMetricColumns[] = {"lambda_selected", "n_test",       "accuracy",        "roc_auc",
                                      "pearson",         "spearman",     "gam_fraction",    "hybrid_accuracy",
                                      "dict_size",       "n_internal"};

std::string clean_field(std::string s) {
  for (auto& c : s)
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  return s;
}

template <class T, class F>
std::string opt(const std::optional<T>& v, F&& f) {
  return v ? f(*v) : std::string("NA");
}

}  // namespace

std::string results_table(const std::vector<CellResult>& cells) {
  std::string out;
  const auto& cols = result_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "\t" : "") + cols[i];
  out += '\n';
  for (const auto& r : cells) {
    const auto& c = r.cell;
    std::vector<std::string> f;
    f.push_back(std::to_string(c.index));
    f.emplace_back(to_string(c.model));
    f.push_back(c.config.orders_string());
    f.push_back(opt(c.lambda, gam::format_double));
    f.push_back(opt(c.max_depth, [](int d) { return std::to_string(d); }));
    f.push_back(opt(c.n_estimators, [](std::size_t n) { return std::to_string(n); }));
    f.push_back(opt(c.expansion, [](tree::ExpansionKind e) { return std::string(tree::to_string(e)); }));
    f.push_back(opt(c.threshold, gam::format_double));
    f.push_back(opt(c.keep_fraction, gam::format_double));
    f.push_back(std::to_string(c.seed));
    f.push_back(r.ok ? "ok" : "failed");
    for (const char* m : kMetricColumns) {
      auto it = r.metrics.find(m);
      f.push_back(it == r.metrics.end() ? "NA" : gam::format_double(it->second));
    }
    f.push_back(r.error.empty() ? "NA" : clean_field(r.error));
    for (std::size_t i = 0; i < f.size(); ++i) out += (i ? "\t" : "") + f[i];
    out += '\n';
  }
  return out;
}

// --- running ---------------------------------------------------------------------------

namespace {

struct Shared {
  const ExperimentSpec& spec;
  const LabeledCorpus& corpus;
  std::vector<std::size_t> eval_rows;
  LinkKind link;
  std::shared_ptr<embed::EmbeddingProvider> provider;
  std::shared_ptr<llm::Client> client;
  fs::path out_dir;
};

gam::RegularizationPlan plan_for(const Shared& s, const Cell& c) {
  gam::RegularizationPlan plan;
  plan.lambda_grid = c.lambda ? std::vector<double>{*c.lambda} : s.spec.lambda_grid;
  plan.folds = s.spec.folds;
  plan.order_candidates = {c.config};
  plan.seed = c.seed;
  return plan;
}

// Accuracy/AUC for classification, correlations for regression.
void score(const Shared& s, const std::vector<std::vector<double>>& outputs, std::map<std::string, double>& m) {
  m["n_test"] = static_cast<double>(s.eval_rows.size());
  if (s.corpus.task == Task::Regression) {
    std::vector<double> pred, truth;
    for (std::size_t i = 0; i < s.eval_rows.size(); ++i) {
      pred.push_back(outputs[i][0]);
      truth.push_back(s.corpus.responses[s.eval_rows[i]]);
    }
    try {
      m["pearson"] = metrics::pearson(pred, truth);
      m["spearman"] = metrics::spearman(pred, truth);
    } catch (const DegenerateInput&) {
    }
    return;
  }
  std::vector<int> predicted, truth;
  std::vector<double> positive;
  for (std::size_t i = 0; i < s.eval_rows.size(); ++i) {
    const auto& p = outputs[i];
    predicted.push_back(static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
    truth.push_back(s.corpus.labels[s.eval_rows[i]]);
    if (p.size() == 2) positive.push_back(p[1]);
  }
  m["accuracy"] = metrics::accuracy(predicted, truth);
  if (s.corpus.num_classes() == 2) {
    try {
      m["roc_auc"] = metrics::roc_auc(positive, truth);
    } catch (const DegenerateInput&) {
    }
  }
}

std::vector<double> outputs_of(const gam::Prediction& p) {
  return p.probabilities.empty() ? std::vector<double>{p.value} : p.probabilities;
}

void run_gam(const Shared& s, const Cell& c, const fs::path& dir, std::map<std::string, double>& m) {
  if (!s.provider) throw InvalidArgument("gam cells need an embedding provider");
  gam::FitReport report;
  const auto model = gam::fit_auggam(s.corpus, plan_for(s, c), *s.provider, s.link, &report);
  m["lambda_selected"] = report.lambda;
  gam::save_model(model, dir / "model.bin");

  const auto vocab = text::vocabulary(s.corpus, model.ngram_config);
  auto dict = gam::export_dictionary(model, vocab, *s.provider);
  if (c.keep_fraction) dict = gam::prune(dict, *c.keep_fraction);
  gam::save_dictionary(dict, dir / "dictionary.tsv");
  m["dict_size"] = static_cast<double>(dict.size());

  std::vector<gam::Prediction> preds;
  std::vector<std::vector<double>> outputs;
  for (auto r : s.eval_rows) {
    preds.push_back(gam::predict(dict, s.corpus.documents[r]));
    outputs.push_back(outputs_of(preds.back()));
  }
  score(s, outputs, m);

  if (c.threshold && s.link != LinkKind::Identity) {
    const auto fallback_model =
        baselines::fit_bag_of_ngrams(s.corpus, plan_for(s, c), s.link, baselines::FeatureWeighting::Counts);
    baselines::BagOfNgramsFallback fallback(fallback_model);
    gam::RoutingOptions routing;
    routing.threshold = *c.threshold;
    std::size_t kept = 0, correct = 0;
    for (std::size_t i = 0; i < s.eval_rows.size(); ++i) {
      const auto& doc = s.corpus.documents[s.eval_rows[i]];
      const auto routed = gam::route_hybrid(preds[i], fallback, doc, routing);
      kept += routed.route == gam::Route::Gam;
      correct += routed.prediction.predicted_class == s.corpus.labels[s.eval_rows[i]];
    }
    const auto n = static_cast<double>(s.eval_rows.size());
    m["gam_fraction"] = static_cast<double>(kept) / n;
    m["hybrid_accuracy"] = static_cast<double>(correct) / n;
  }
}

std::unique_ptr<tree::KeyphraseExpander> make_expander(const Shared& s, const Cell& c,
                                                       const text::Vocabulary& vocab) {
  switch (*c.expansion) {
    case tree::ExpansionKind::None:
      return nullptr;
    case tree::ExpansionKind::Llm:
      if (!s.client) throw InvalidArgument("llm expansion needs an LLM client");
      return std::make_unique<tree::LlmExpander>(s.client, s.spec.prompt_template, s.spec.candidate_limit);
    case tree::ExpansionKind::Embedding:
      if (!s.provider) throw InvalidArgument("embedding expansion needs an embedding provider");
      return std::make_unique<tree::EmbeddingExpander>(vocab.ngrams(), s.provider, s.spec.candidate_limit);
  }
  return nullptr;
}

tree::TreeFitConfig tree_config(const Shared& s, const Cell& c) {
  tree::TreeFitConfig config;
  config.max_depth = *c.max_depth;
  config.min_samples_split = s.spec.min_samples_split;
  config.task = s.corpus.task;
  config.expansion = *c.expansion;
  config.expansion_seeds = s.spec.expansion_seeds;
  config.prompt_template = s.spec.prompt_template;
  config.candidate_limit = s.spec.candidate_limit;
  config.ngram_config = c.config;
  return config;
}

void run_tree(const Shared& s, const Cell& c, const fs::path& dir, std::map<std::string, double>& m) {
  const auto vocab = text::vocabulary(s.corpus, c.config);
  const auto expander = make_expander(s, c, vocab);
  const auto config = tree_config(s, c);
  std::vector<std::vector<double>> outputs;
  if (c.model == ModelKind::Tree) {
    const auto model = tree::fit_augtree(s.corpus, config, vocab, expander.get());
    tree::save_tree(model, dir / "tree.json");
    m["n_internal"] = static_cast<double>(model.num_internal());
    for (auto r : s.eval_rows) outputs.push_back(model.predict(s.corpus.documents[r]));
  } else {
    const auto ensemble = tree::fit_ensemble(s.corpus, config, vocab, expander.get(), *c.n_estimators, c.seed);
    tree::save_ensemble(ensemble, dir / "ensemble.json");
    double internal = 0;
    for (const auto& t : ensemble.trees) internal += static_cast<double>(t.num_internal());
    m["n_internal"] = internal;
    for (auto r : s.eval_rows) outputs.push_back(ensemble.predict(s.corpus.documents[r]));
  }
  score(s, outputs, m);
}

void run_baseline(const Shared& s, const Cell& c, const fs::path& dir, std::map<std::string, double>& m) {
  const auto weighting =
      c.model == ModelKind::TfIdf ? baselines::FeatureWeighting::TfIdf : baselines::FeatureWeighting::Counts;
  gam::FitReport report;
  const auto model = baselines::fit_bag_of_ngrams(s.corpus, plan_for(s, c), s.link, weighting, &report);
  m["lambda_selected"] = report.lambda;
  gam::save_dictionary(baselines::to_dictionary(model), dir / "coefficients.tsv");
  m["dict_size"] = static_cast<double>(model.features.size());
  std::vector<std::vector<double>> outputs;
  for (auto r : s.eval_rows) outputs.push_back(outputs_of(model.predict(s.corpus.documents[r])));
  score(s, outputs, m);
}

CellResult run_cell(const Shared& s, const Cell& c) {
  CellResult result;
  result.cell = c;
  try {
    const auto dir = s.out_dir / "cells" / c.directory_name();
    fs::create_directories(dir);
    switch (c.model) {
      case ModelKind::Gam: run_gam(s, c, dir, result.metrics); break;
      case ModelKind::Tree:
      case ModelKind::Ensemble: run_tree(s, c, dir, result.metrics); break;
      case ModelKind::BagOfNgrams:
      case ModelKind::TfIdf: run_baseline(s, c, dir, result.metrics); break;
    }
    result.ok = true;
  } catch (const std::exception& e) {
    result.ok = false;
    result.error = e.what();
    result.metrics.clear();
  }
  return result;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  spec.validate();
  if (options.out_dir.empty()) throw InvalidArgument("experiment needs an output directory");
  const LabeledCorpus corpus = options.corpus ? *options.corpus : spec.data.load();
  corpus.validate();

  auto eval_rows = corpus.indices(Split::Test);
  if (eval_rows.empty()) eval_rows = corpus.indices(Split::Validation);
  if (eval_rows.empty()) throw InvalidArgument("corpus has no test or validation documents to evaluate on");

  LinkKind link = corpus.task == Task::Regression ? LinkKind::Identity
                  : corpus.num_classes() == 2     ? LinkKind::Logit
                                                  : LinkKind::Softmax;
  if (spec.link) link = *spec.link;

  auto provider = options.provider;
  if (!provider && spec.embedding) provider = embed::make_provider(*spec.embedding);
  auto client = options.client;
  if (!client && spec.llm) {
    llm::Client::Options o;
    o.endpoint = spec.llm->endpoint;
    o.mode = spec.llm->mode;
    o.replay_dir = spec.llm->replay_dir;
    if (const char* token = std::getenv("AUG_LLM_TOKEN")) o.bearer_token = token;
    client = std::make_shared<llm::Client>(std::move(o));
  }

  Shared shared{spec, corpus, std::move(eval_rows), link, provider, client, options.out_dir};
  const auto cells = expand_grid(spec);
  ExperimentResult result;
  result.cells.resize(cells.size());
  const auto n = static_cast<std::ptrdiff_t>(cells.size());
#pragma omp parallel for schedule(dynamic, 1) if (options.parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    result.cells[static_cast<std::size_t>(i)] = run_cell(shared, cells[static_cast<std::size_t>(i)]);

  for (const auto& c : result.cells) result.failures += !c.ok;
  result.table = results_table(result.cells);
  fs::create_directories(options.out_dir);
  binio::write_file_atomic(options.out_dir / "results.tsv", result.table);
  return result;
}

}  // namespace aug::experiment
