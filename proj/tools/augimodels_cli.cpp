// augimodels: fit, inspect and evaluate Aug-GAM / Aug-Tree text models.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "augimodels/auggam.hpp"
#include "augimodels/augtree.hpp"
#include "augimodels/baselines.hpp"
#include "augimodels/corpus.hpp"
#include "augimodels/embed.hpp"
#include "augimodels/errors.hpp"
#include "augimodels/experiment.hpp"
#include "augimodels/llmclient.hpp"
#include "augimodels/metrics.hpp"
#include "augimodels/report.hpp"
#include "augimodels/rng.hpp"

namespace fs = std::filesystem;
using namespace aug;

namespace {

struct DataOpts {
  std::string path;
  std::string format = "tsv";
  std::string task = "classification";

  void add(CLI::App* app, bool required = true) {
    auto* o = app->add_option("--data", path, "Corpus file (TSV label<TAB>text or JSONL)");
    if (required) o->required();
    app->add_option("--format", format, "tsv or jsonl")->check(CLI::IsMember({"tsv", "jsonl"}));
    app->add_option("--task", task, "classification or regression")
        ->check(CLI::IsMember({"classification", "regression"}));
  }
  LabeledCorpus load(Split split = Split::Train) const {
    return load_corpus(path, parse_format(format), SplitSpec::all(split), parse_task(task));
  }
};

struct EmbedOpts {
  std::string endpoint;
  std::string cache;
  std::size_t stub_dim = 0;
  std::size_t dim = 0;
  std::uint64_t stub_seed = 0;

  void add(CLI::App* app) {
    auto* e = app->add_option("--embed-endpoint", endpoint, "Embedding service base URL");
    auto* c = app->add_option("--embed-cache", cache, "Embedding cache file");
    auto* s = app->add_option("--embed-stub-dim", stub_dim, "Use the deterministic stub embedder");
    e->excludes(c)->excludes(s);
    c->excludes(s);
    app->add_option("--embed-dim", dim, "Vector length of the embedding service");
    app->add_option("--embed-seed", stub_seed, "Seed of the stub embedder");
  }
  bool given() const { return !endpoint.empty() || !cache.empty() || stub_dim > 0; }

  std::shared_ptr<embed::EmbeddingProvider> make() const {
    embed::EmbeddingProviderSpec spec;
    if (!endpoint.empty()) {
      spec.kind = embed::ProviderKind::Remote;
      spec.endpoint = endpoint;
      spec.dim = dim;
      // Remote vectors are memoized under AUG_CACHE_DIR when it is set.
      if (const char* root = std::getenv("AUG_CACHE_DIR")) {
        char name[64];
        std::snprintf(name, sizeof name, "%016llx-%zu.auge",
                      static_cast<unsigned long long>(fnv1a64(endpoint)), dim);
        spec.cache_path = fs::path(root) / name;
      }
    } else if (!cache.empty()) {
      spec.kind = embed::ProviderKind::CacheBacked;
      fs::path p(cache);
      const char* root = std::getenv("AUG_CACHE_DIR");
      if (root && p.is_relative() && !fs::exists(p)) p = fs::path(root) / p;
      spec.cache_path = p;
      spec.dim = dim;
    } else if (stub_dim > 0) {
      spec.kind = embed::ProviderKind::Stub;
      spec.dim = stub_dim;
      spec.seed = stub_seed;
    } else {
      throw InvalidArgument("one of --embed-endpoint, --embed-cache, --embed-stub-dim is required");
    }
    return embed::make_provider(spec);
  }

  // Persists memoized remote vectors, if any.
  static void flush(const std::shared_ptr<embed::EmbeddingProvider>& p) {
    if (auto* remote = dynamic_cast<embed::RemoteProvider*>(p.get())) remote->save_cache();
  }
};

struct LlmOpts {
  std::string endpoint;
  std::string replay;
  std::string template_file;

  void add(CLI::App* app) {
    app->add_option("--llm-endpoint", endpoint, "Completion service base URL (with --llm-replay: record)");
    app->add_option("--llm-replay", replay, "Directory of recorded completions");
    app->add_option("--prompt-template-file", template_file, "Prompt with a {keyphrase} placeholder");
  }
  bool given() const { return !endpoint.empty() || !replay.empty(); }

  std::shared_ptr<llm::Client> make() const {
    llm::Client::Options o;
    o.endpoint = endpoint;
    if (!replay.empty()) o.replay_dir = fs::path(replay);
    o.mode = replay.empty() ? llm::Mode::Live : endpoint.empty() ? llm::Mode::Replay : llm::Mode::Record;
    if (const char* token = std::getenv("AUG_LLM_TOKEN")) o.bearer_token = token;
    return std::make_shared<llm::Client>(std::move(o));
  }

  std::string prompt_template() const {
    if (template_file.empty()) return std::string(tree::kDefaultPromptTemplate);
    std::ifstream in(template_file, std::ios::binary);
    if (!in) throw IoError("cannot read " + template_file);
    std::ostringstream ss;
    ss << in.rdbuf();
    auto s = ss.str();
    // Editors append a final newline; the prompt itself ends at "1.".
    if (!s.empty() && s.back() == '\n') s.pop_back();
    return s;
  }
};

std::vector<double> parse_csv_doubles(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument("bad number in list: '" + item + "'");
    }
  }
  return out;
}

text::NgramConfig config_from(const std::string& orders) {
  text::NgramConfig c;
  c.orders = text::NgramConfig::parse_orders(orders);
  return c.canonical();
}

LinkKind default_link(const LabeledCorpus& corpus, const std::string& name) {
  if (!name.empty()) return parse_link(name);
  if (corpus.task == Task::Regression) return LinkKind::Identity;
  return corpus.num_classes() == 2 ? LinkKind::Logit : LinkKind::Softmax;
}

enum class ArtifactKind { GamModel, Dictionary, Tree, Ensemble };

ArtifactKind sniff(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string head(4, '\0');
  in.read(head.data(), 4);
  if (head == "AUGM") return ArtifactKind::GamModel;
  in.seekg(0);
  std::string line;
  std::getline(in, line);
  if (line.find("\"link\"") != std::string::npos) return ArtifactKind::Dictionary;
  std::ostringstream rest;
  rest << line << '\n' << in.rdbuf();
  const auto j = nlohmann::json::parse(rest.str(), nullptr, false);
  if (!j.is_discarded() && j.is_object()) {
    const auto f = j.value("format", std::string());
    if (f == "augtree") return ArtifactKind::Tree;
    if (f == "augtree-ensemble") return ArtifactKind::Ensemble;
  }
  throw FormatError("unrecognized model file " + path.string());
}

// Per-document outputs: class probabilities or {response}.
struct Scored {
  std::vector<std::vector<double>> outputs;
  std::vector<std::string> classes;
  std::vector<int> routes;  // 1 = fallback, only with routing
};

Scored score_documents(const fs::path& model_path, const std::vector<std::string>& docs,
                       const EmbedOpts& embed_opts, const std::string& unknown_policy) {
  Scored s;
  auto to_outputs = [](const gam::Prediction& p) {
    return p.probabilities.empty() ? std::vector<double>{p.value} : p.probabilities;
  };
  switch (sniff(model_path)) {
    case ArtifactKind::GamModel: {
      const auto model = gam::load_model(model_path);
      const auto provider = embed_opts.make();
      if (provider->fingerprint() != model.provider_fingerprint)
        std::cerr << "warning: provider " << provider->fingerprint() << " differs from the model's "
                  << model.provider_fingerprint << "\n";
      s.classes = model.classes;
      for (const auto& d : docs) s.outputs.push_back(to_outputs(gam::predict(model, d, *provider)));
      EmbedOpts::flush(provider);
      break;
    }
    case ArtifactKind::Dictionary: {
      const auto dict = gam::load_dictionary(model_path);
      gam::DictionaryInference inference;
      inference.policy = gam::parse_unknown_policy(unknown_policy);
      if (inference.policy == gam::UnknownNgramPolicy::Infer)
        throw InvalidArgument("dictionary inference of unseen ngrams needs the model file; use --model model.bin");
      s.classes = dict.classes;
      for (const auto& d : docs) s.outputs.push_back(to_outputs(gam::predict(dict, d, inference)));
      break;
    }
    case ArtifactKind::Tree: {
      const auto t = tree::load_tree(model_path);
      s.classes = t.classes;
      for (const auto& d : docs) s.outputs.push_back(t.predict(d));
      break;
    }
    case ArtifactKind::Ensemble: {
      const auto e = tree::load_ensemble(model_path);
      if (!e.trees.empty()) s.classes = e.trees.front().classes;
      for (const auto& d : docs) s.outputs.push_back(e.predict(d));
      break;
    }
  }
  return s;
}

int argmax(const std::vector<double>& p) {
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

void write_or_print(const std::string& out, const std::string& content) {
  if (out.empty() || out == "-") {
    std::cout << content;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw IoError("cannot write " + out);
  f << content;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interpretable text models with LLM-augmented features"};
  app.require_subcommand(1);

  DataOpts data;
  EmbedOpts embed_opts;
  LlmOpts llm_opts;
  std::vector<std::string> orders_list{"1,2"};
  std::string orders = "1,2";
  std::string lambda_grid = "0.01,0.1,1,10,100";
  std::size_t folds = 3;
  std::string link;
  std::uint64_t seed = 0;
  std::string out;
  int max_depth = 8;
  std::size_t min_samples_split = 2;
  std::size_t n_estimators = 10;
  std::string expansion = "none";
  int expansion_seeds = 1;
  std::size_t candidate_limit = 100;
  double threshold = -1;
  double keep_fraction = 1.0;
  std::string model_path;
  std::string unknown_policy = "skip";
  std::string fallback_path;
  std::size_t top_k = 0;
  std::string direction = "both";
  std::string keyphrase;
  std::string spec_path;
  bool serial = false;

  auto add_tree_opts = [&](CLI::App* c) {
    data.add(c);
    c->add_option("--orders", orders, "Ngram orders, e.g. 1,2");
    c->add_option("--max-depth", max_depth)->check(CLI::PositiveNumber);
    c->add_option("--min-samples-split", min_samples_split)->check(CLI::Range(2, 1 << 30));
    c->add_option("--expansion", expansion)->check(CLI::IsMember({"none", "llm", "embedding"}));
    c->add_option("--expansion-seeds", expansion_seeds)->check(CLI::PositiveNumber);
    c->add_option("--candidate-limit", candidate_limit)->check(CLI::PositiveNumber);
    embed_opts.add(c);
    llm_opts.add(c);
    c->add_option("--out", out, "Output tree file")->required();
  };

  auto* fit_gam = app.add_subcommand("fit-gam", "Fit an Aug-GAM model");
  data.add(fit_gam);
  fit_gam->add_option("--orders", orders_list, "Ngram order set(s) to cross-validate, e.g. --orders 1 --orders 1,2");
  fit_gam->add_option("--lambda-grid", lambda_grid, "Comma-separated ascending lambdas");
  fit_gam->add_option("--folds", folds)->check(CLI::Range(2, 1000));
  fit_gam->add_option("--link", link)->check(CLI::IsMember({"logit", "softmax", "identity"}));
  fit_gam->add_option("--seed", seed);
  embed_opts.add(fit_gam);
  fit_gam->add_option("--out", out, "Output model file")->required();

  auto* fit_tree = app.add_subcommand("fit-tree", "Fit a single Aug-Tree");
  add_tree_opts(fit_tree);

  auto* fit_ens = app.add_subcommand("fit-ensemble", "Fit a bagged Aug-Tree ensemble");
  add_tree_opts(fit_ens);
  fit_ens->add_option("--n-estimators", n_estimators)->check(CLI::PositiveNumber);
  fit_ens->add_option("--seed", seed);

  auto* predict = app.add_subcommand("predict", "Score documents with a saved model");
  data.add(predict);
  predict->add_option("--model", model_path, "Model, dictionary, tree or ensemble file")->required();
  predict->add_option("--unknown", unknown_policy, "Dictionary policy for unseen ngrams: skip or strict")
      ->check(CLI::IsMember({"skip", "strict"}));
  predict->add_option("--threshold", threshold, "Route predictions below this confidence to --fallback");
  predict->add_option("--fallback", fallback_path, "Fallback model (tree, ensemble or dictionary)");
  embed_opts.add(predict);
  predict->add_option("--out", out, "Output TSV (default stdout)");

  auto* eval = app.add_subcommand("eval", "Evaluate a saved model on a labeled corpus");
  data.add(eval);
  eval->add_option("--model", model_path)->required();
  eval->add_option("--unknown", unknown_policy)->check(CLI::IsMember({"skip", "strict"}));
  embed_opts.add(eval);

  auto* export_coefs = app.add_subcommand("export-coefs", "Export the ngram coefficient dictionary");
  data.add(export_coefs);
  export_coefs->add_option("--model", model_path, "Aug-GAM model file")->required();
  embed_opts.add(export_coefs);
  export_coefs->add_option("--top", top_k, "Also print the top-k coefficients");
  export_coefs->add_option("--direction", direction)->check(CLI::IsMember({"positive", "negative", "both"}));
  export_coefs->add_option("--out", out, "Output dictionary file")->required();

  auto* prune = app.add_subcommand("prune", "Keep the largest coefficients of a dictionary");
  prune->add_option("--model", model_path, "Dictionary file")->required();
  prune->add_option("--keep-fraction", keep_fraction)->required();
  prune->add_option("--top", top_k, "Also print the top-k coefficients");
  prune->add_option("--out", out, "Output dictionary file")->required();

  auto* expand = app.add_subcommand("expand", "Show the expansion candidates of one keyphrase");
  expand->add_option("keyphrase", keyphrase)->required();
  expand->add_option("--expansion", expansion)->check(CLI::IsMember({"llm", "embedding"}));
  expand->add_option("--candidate-limit", candidate_limit)->check(CLI::PositiveNumber);
  expand->add_option("--data", data.path, "Vocabulary source for embedding expansion");
  expand->add_option("--format", data.format);
  expand->add_option("--orders", orders);
  embed_opts.add(expand);
  llm_opts.add(expand);

  auto* sweep = app.add_subcommand("sweep", "Run an experiment grid from a JSON spec");
  sweep->add_option("spec", spec_path, "Experiment spec (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--seed", seed, "Override the seed in the experiment file");
  sweep->add_option("--out", out, "Output directory")->required();
  sweep->add_flag("--serial", serial, "Run cells one at a time");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit_gam->parsed()) {
      auto corpus = data.load();
      gam::RegularizationPlan plan;
      plan.lambda_grid = parse_csv_doubles(lambda_grid);
      plan.folds = folds;
      plan.seed = seed;
      plan.order_candidates.clear();
      for (const auto& o : orders_list) plan.order_candidates.push_back(config_from(o));
      const auto provider = embed_opts.make();
      gam::FitReport report;
      const auto model = gam::fit_auggam(corpus, plan, *provider, default_link(corpus, link), &report);
      gam::save_model(model, out);
      EmbedOpts::flush(provider);
      for (const auto& c : report.cells)
        std::cout << "cv\torders=" << c.config.orders_string() << "\tlambda=" << gam::format_double(c.lambda)
                  << "\tmetric=" << gam::format_double(c.mean_metric) << "\n";
      std::cout << "selected\torders=" << report.config.orders_string()
                << "\tlambda=" << gam::format_double(report.lambda) << "\n";
      if (!report.converged)
        std::cerr << "warning: solver stopped before converging (gradient norm "
                  << report.gradient_norm << ")\n";
      return 0;
    }

    if (fit_tree->parsed() || fit_ens->parsed()) {
      auto corpus = data.load();
      tree::TreeFitConfig config;
      config.max_depth = max_depth;
      config.min_samples_split = min_samples_split;
      config.task = corpus.task;
      config.expansion = tree::parse_expansion(expansion);
      config.expansion_seeds = expansion_seeds;
      config.candidate_limit = candidate_limit;
      config.prompt_template = llm_opts.prompt_template();
      config.ngram_config = config_from(orders);
      const auto vocab = text::vocabulary(corpus, config.ngram_config);

      std::unique_ptr<tree::KeyphraseExpander> expander;
      std::shared_ptr<embed::EmbeddingProvider> provider;
      if (config.expansion == tree::ExpansionKind::Llm) {
        expander = std::make_unique<tree::LlmExpander>(llm_opts.make(), config.prompt_template, candidate_limit);
      } else if (config.expansion == tree::ExpansionKind::Embedding) {
        provider = embed_opts.make();
        expander = std::make_unique<tree::EmbeddingExpander>(vocab.ngrams(), provider, candidate_limit);
      }
      if (fit_tree->parsed()) {
        const auto model = tree::fit_augtree(corpus, config, vocab, expander.get());
        tree::save_tree(model, out);
        std::cout << "internal nodes: " << model.num_internal() << ", depth: " << model.depth() << "\n";
      } else {
        const auto ensemble = tree::fit_ensemble(corpus, config, vocab, expander.get(), n_estimators, seed);
        tree::save_ensemble(ensemble, out);
        std::cout << "trees: " << ensemble.trees.size() << "\n";
      }
      if (provider) EmbedOpts::flush(provider);
      return 0;
    }

    if (predict->parsed()) {
      const auto corpus = data.load();
      const auto scored = score_documents(model_path, corpus.documents, embed_opts, unknown_policy);
      std::optional<Scored> fallback;
      if (threshold >= 0) {
        if (fallback_path.empty()) throw InvalidArgument("--threshold needs --fallback");
        fallback = score_documents(fallback_path, corpus.documents, embed_opts, unknown_policy);
      }
      std::string table = "index\tprediction\tconfidence\troute\n";
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto* outputs = &scored.outputs[i];
        std::string route = "model";
        const bool classification = !scored.classes.empty();
        double confidence = classification ? (*outputs)[static_cast<std::size_t>(argmax(*outputs))] : 1.0;
        if (fallback && classification && confidence < std::min(1.0, threshold)) {
          outputs = &fallback->outputs[i];
          route = "fallback";
          confidence = (*outputs)[static_cast<std::size_t>(argmax(*outputs))];
        }
        std::string label = classification ? scored.classes[static_cast<std::size_t>(argmax(*outputs))]
                                           : gam::format_double((*outputs)[0]);
        table += std::to_string(i) + "\t" + label + "\t" + gam::format_double(confidence) + "\t" + route + "\n";
      }
      write_or_print(out, table);
      return 0;
    }

    if (eval->parsed()) {
      const auto corpus = data.load(Split::Test);
      const auto scored = score_documents(model_path, corpus.documents, embed_opts, unknown_policy);
      if (corpus.task == Task::Regression) {
        std::vector<double> pred;
        for (const auto& o : scored.outputs) pred.push_back(o[0]);
        std::cout << "pearson\t" << gam::format_double(metrics::pearson(pred, corpus.responses)) << "\n";
        std::cout << "spearman\t" << gam::format_double(metrics::spearman(pred, corpus.responses)) << "\n";
        return 0;
      }
      // Map corpus labels onto the model's class order.
      std::vector<int> predicted, truth;
      std::vector<double> positive;
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& name = corpus.classes[static_cast<std::size_t>(corpus.labels[i])];
        auto it = std::find(scored.classes.begin(), scored.classes.end(), name);
        if (it == scored.classes.end()) throw InvalidArgument("label '" + name + "' unknown to the model");
        truth.push_back(static_cast<int>(it - scored.classes.begin()));
        predicted.push_back(argmax(scored.outputs[i]));
        if (scored.outputs[i].size() == 2) positive.push_back(scored.outputs[i][1]);
      }
      std::cout << "n\t" << corpus.size() << "\n";
      std::cout << "accuracy\t" << gam::format_double(metrics::accuracy(predicted, truth)) << "\n";
      if (scored.classes.size() == 2) {
        try {
          std::cout << "roc_auc\t" << gam::format_double(metrics::roc_auc(positive, truth)) << "\n";
        } catch (const DegenerateInput&) {
          std::cout << "roc_auc\tNA\n";
        }
      }
      return 0;
    }

    if (export_coefs->parsed()) {
      const auto model = gam::load_model(model_path);
      const auto corpus = data.load();
      const auto provider = embed_opts.make();
      const auto vocab = text::vocabulary(corpus, model.ngram_config);
      const auto dict = gam::export_dictionary(model, vocab, *provider);
      gam::save_dictionary(dict, out);
      EmbedOpts::flush(provider);
      if (top_k > 0)
        std::cout << report::top_coefficients(dict, top_k, report::parse_direction(direction)).to_text();
      return 0;
    }

    if (prune->parsed()) {
      const auto dict = gam::load_dictionary(model_path);
      const auto pruned = gam::prune(dict, keep_fraction);
      gam::save_dictionary(pruned, out);
      std::cout << "kept " << pruned.size() << " of " << dict.size() << " entries\n";
      if (top_k > 0) std::cout << report::top_coefficients(pruned, top_k, report::Direction::Both).to_text();
      return 0;
    }

    if (expand->parsed()) {
      if (expansion == "embedding") {
        if (data.path.empty()) throw InvalidArgument("embedding expansion needs --data for the vocabulary");
        const auto corpus = data.load();
        const auto vocab = text::vocabulary(corpus, config_from(orders));
        const auto provider = embed_opts.make();
        const auto ngrams = vocab.ngrams();
        for (const auto& c : tree::expand_keyphrase_embedding(keyphrase, ngrams, *provider, candidate_limit))
          std::cout << c << "\n";
        return 0;
      }
      auto client = llm_opts.make();
      const auto result = tree::expand_keyphrase_llm(keyphrase, *client, llm_opts.prompt_template(), candidate_limit);
      std::cerr << "generated " << result.generated << ", after deduplication " << result.candidates.size() << "\n";
      for (const auto& c : result.candidates) std::cout << c << "\n";
      return 0;
    }

    if (sweep->parsed()) {
      auto spec = experiment::ExperimentSpec::load(spec_path);
      if (sweep->count("--seed")) spec.seed = seed;
      experiment::RunOptions options;
      options.out_dir = out;
      options.parallel = !serial;
      const auto result = experiment::run_experiment(spec, options);
      std::cout << result.table;
      if (result.failures) {
        std::cerr << result.failures << " cell(s) failed\n";
        return 1;
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
