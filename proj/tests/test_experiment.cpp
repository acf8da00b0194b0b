#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

#include "augimodels/auggam.hpp"
#include "augimodels/errors.hpp"
#include "augimodels/experiment.hpp"
#include "augimodels/metrics.hpp"
#include "helpers.hpp"
#include "planted.hpp"

using namespace aug;
using namespace aug::experiment;

namespace {

std::vector<std::vector<std::string>> parse_tsv(const std::string& table) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(table);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    rows.push_back(fields);
  }
  return rows;
}

std::string field(const std::vector<std::vector<std::string>>& t, std::size_t row, const std::string& col) {
  for (std::size_t j = 0; j < t[0].size(); ++j)
    if (t[0][j] == col) return t[row][j];
  return "<missing>";
}

ExperimentSpec gam_spec() {
  ExperimentSpec spec;
  spec.seed = 11;
  spec.models = {ModelKind::Gam};
  spec.orders = {{1}};
  spec.lambdas = {1.0};
  return spec;
}

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("spec parsing") {
    testutil::TempDir dir;
    testutil::spit(dir / "prompt.txt", "Synonyms of {keyphrase}:\n1.");
    const auto spec = ExperimentSpec::parse(R"({
      "name": "demo", "seed": 4,
      "data": {"path": "corpus.tsv", "train_fraction": 0.7, "validation_fraction": 0.1},
      "embedding": {"kind": "stub", "dim": 8},
      "llm": {"replay_dir": "replay"},
      "grid": {"model": ["gam", "tree", "ensemble"], "orders": ["1", "1,2"], "lambda": [0.1, 1],
               "max_depth": [2, 3], "n_estimators": 4, "expansion": ["none", "llm"],
               "threshold": [0.5, 0.9], "keep_fraction": [1.0, 0.5]},
      "folds": 4, "prompt_template_file": "prompt.txt"
    })", dir.path());
    CHECK(spec.name == "demo");
    CHECK(spec.data.path == dir / "corpus.tsv");
    CHECK(spec.data.split_seed == 4);
    CHECK(spec.orders == std::vector<std::vector<int>>{{1}, {1, 2}});
    CHECK(spec.llm->mode == llm::Mode::Replay);
    CHECK(spec.llm->replay_dir == dir / "replay");
    CHECK(spec.prompt_template == "Synonyms of {keyphrase}:\n1.");
    CHECK(spec.folds == 4);

    const auto cells = expand_grid(spec);
    // per order set: gam 2*2*2, tree 2*2, ensemble 2*2*1
    CHECK(cells.size() == 2 * (8 + 4 + 4));
    for (std::size_t i = 0; i < cells.size(); ++i) CHECK(cells[i].index == i);
    CHECK(cells[0].directory_name() == "000-gam");
    // threshold and keep_fraction do not change the fit seed
    CHECK(cells[0].seed == cells[1].seed);
    CHECK(cells[0].seed == cells[2].seed);
    CHECK(cells[0].seed != cells[4].seed);

    CHECK_THROWS_AS(ExperimentSpec::parse("{}"), FormatError);
    CHECK_THROWS_AS(ExperimentSpec::parse(R"({"data": {"path": "x"}, "grid": {"model": "forest"}})"),
                    InvalidArgument);
    CHECK_THROWS_AS(ExperimentSpec::parse(R"({"data": {"path": "x"}, "grid": {"keep_fraction": 0}})"),
                    InvalidArgument);
  }

  TEST_CASE("one cell, one row; reruns are byte-identical") {
    const auto corpus = planted::gam_synonym_corpus(2, 80, 40);
    testutil::TempDir a, b;
    RunOptions opt;
    opt.corpus = corpus;
    opt.provider = planted::gam_synonym_provider(2);
    opt.out_dir = a.path();
    const auto r1 = run_experiment(gam_spec(), opt);
    CHECK(r1.failures == 0);
    const auto t = parse_tsv(r1.table);
    REQUIRE(t.size() == 2);
    CHECK(t[0] == result_columns());
    CHECK(field(t, 1, "status") == "ok");
    CHECK(field(t, 1, "n_test") == "40");
    CHECK(testutil::slurp(a / "results.tsv") == r1.table);

    opt.out_dir = b.path();
    run_experiment(gam_spec(), opt);
    CHECK(testutil::snapshot(a.path()) == testutil::snapshot(b.path()));
  }

  TEST_CASE("keep_fraction sweep") {
    const auto corpus = planted::gam_synonym_corpus(3, 100, 60);
    auto provider = planted::gam_synonym_provider(3);
    auto spec = gam_spec();
    spec.keep_fractions = {1.0, 0.5, 0.1};
    testutil::TempDir dir;
    RunOptions opt;
    opt.corpus = corpus;
    opt.provider = provider;
    opt.out_dir = dir.path();
    const auto res = run_experiment(spec, opt);
    const auto t = parse_tsv(res.table);
    REQUIRE(t.size() == 4);

    // direct evaluation of the unpruned dictionary
    const auto cell = expand_grid(spec)[0];
    gam::RegularizationPlan plan;
    plan.lambda_grid = {1.0};
    plan.folds = spec.folds;
    plan.order_candidates = {cell.config};
    plan.seed = cell.seed;
    const auto model = gam::fit_auggam(corpus, plan, *provider, LinkKind::Logit);
    const auto dict = gam::export_dictionary(model, text::vocabulary(corpus, cell.config), *provider);
    std::vector<int> predicted, truth;
    for (auto r : corpus.indices(Split::Test)) {
      predicted.push_back(gam::predict(dict, corpus.documents[r]).predicted_class);
      truth.push_back(corpus.labels[r]);
    }
    CHECK(field(t, 1, "accuracy") == gam::format_double(metrics::accuracy(predicted, truth)));
    CHECK(field(t, 1, "dict_size") == std::to_string(dict.size()));
    CHECK(std::stoul(field(t, 2, "dict_size")) < dict.size());
    CHECK(testutil::slurp(dir / "cells" / "000-gam" / "dictionary.tsv") == gam::serialize_dictionary(dict));
  }

  TEST_CASE("every model kind runs, failures are recorded") {
    const auto corpus = planted::tree_synonym_corpus(5, 100, 50, 0.0);
    testutil::TempDir replay, out;
    planted::install_completion_fixtures(replay.path());
    ExperimentSpec spec;
    spec.models = {ModelKind::Gam, ModelKind::Tree, ModelKind::Ensemble, ModelKind::BagOfNgrams, ModelKind::TfIdf};
    spec.orders = {{1}};
    spec.lambdas = {1.0};
    spec.max_depths = {2};
    spec.n_estimators = {3};
    spec.expansions = {tree::ExpansionKind::None, tree::ExpansionKind::Llm};
    spec.thresholds = {0.8};
    RunOptions opt;
    opt.corpus = corpus;
    opt.provider = std::make_shared<embed::StubProvider>(8, 1);
    opt.client = planted::replay_client(replay.path());
    opt.out_dir = out.path();
    const auto res = run_experiment(spec, opt);
    CHECK(res.cells.size() == 1 + 2 + 2 + 1 + 1);
    CHECK(res.failures == 0);
    for (const auto& c : res.cells) CHECK_MESSAGE(c.ok, c.error);
    CHECK(std::filesystem::exists(out / "cells/000-gam/model.bin"));
    CHECK(std::filesystem::exists(out / "cells/002-tree/tree.json"));
    CHECK(std::filesystem::exists(out / "cells/004-ensemble/ensemble.json"));
    CHECK(std::filesystem::exists(out / "cells/006-tfidf/coefficients.tsv"));
    const auto t = parse_tsv(res.table);
    CHECK(field(t, 1, "gam_fraction") != "NA");
    CHECK(field(t, 2, "gam_fraction") == "NA");

    // llm cells without a client fail without stopping the run
    opt.client = nullptr;
    testutil::TempDir out2;
    opt.out_dir = out2.path();
    const auto broken = run_experiment(spec, opt);
    CHECK(broken.failures == 2);
    const auto bt = parse_tsv(broken.table);
    CHECK(field(bt, 3, "status") == "failed");
    CHECK(field(bt, 3, "error") != "NA");
    CHECK(field(bt, 2, "status") == "ok");
  }

  TEST_CASE("parallel and serial runs agree") {
    const auto corpus = planted::tree_synonym_corpus(6, 80, 40);
    ExperimentSpec spec;
    spec.models = {ModelKind::Tree, ModelKind::BagOfNgrams};
    spec.max_depths = {1, 2, 3};
    RunOptions opt;
    opt.corpus = corpus;
    testutil::TempDir a, b;
    opt.out_dir = a.path();
    opt.parallel = true;
    run_experiment(spec, opt);
    opt.out_dir = b.path();
    opt.parallel = false;
    run_experiment(spec, opt);
    CHECK(testutil::snapshot(a.path()) == testutil::snapshot(b.path()));
  }
}
