#include <json.hpp>

#include "augimodels/augtree.hpp"
#include "augimodels/errors.hpp"
#include "binio.hpp"

namespace aug::tree {
namespace {

using nlohmann::json;

json node_json(const AugTreeModel& model, std::size_t at) {
  const auto& n = model.nodes.at(at);
  json j;
  j["n_samples"] = n.n_samples;
  if (n.leaf) {
    j["type"] = "leaf";
    j["value"] = n.value;
    return j;
  }
  j["type"] = "internal";
  j["keyphrases"] = n.keyphrases;
  j["impurity_decrease"] = n.impurity_decrease;
  j["stats"] = {{"generated", n.stats.generated},
                {"deduplicated", n.stats.deduplicated},
                {"retained", n.stats.retained}};
  j["children"] = {{"contains", node_json(model, n.contains_child)},
                   {"absent", node_json(model, n.absent_child)}};
  return j;
}

std::size_t read_node(const json& j, AugTreeModel& model, int depth) {
  if (depth > 4096) throw FormatError("tree file nests too deeply");
  const auto index = model.nodes.size();
  model.nodes.emplace_back();
  TreeNode node;
  node.n_samples = j.at("n_samples").get<std::size_t>();
  const auto type = j.at("type").get<std::string>();
  if (type == "leaf") {
    node.leaf = true;
    node.value = j.at("value").get<std::vector<double>>();
    model.nodes[index] = std::move(node);
    return index;
  }
  if (type != "internal") throw FormatError("unknown node type '" + type + "'");
  node.leaf = false;
  node.keyphrases = j.at("keyphrases").get<std::vector<std::string>>();
  if (node.keyphrases.empty()) throw FormatError("internal node without keyphrases");
  node.impurity_decrease = j.at("impurity_decrease").get<double>();
  if (j.contains("stats")) {
    const auto& s = j["stats"];
    node.stats.generated = s.at("generated").get<std::size_t>();
    node.stats.deduplicated = s.at("deduplicated").get<std::size_t>();
    node.stats.retained = s.at("retained").get<std::size_t>();
  }
  model.nodes[index] = node;
  const auto& children = j.at("children");
  const auto contains = read_node(children.at("contains"), model, depth + 1);
  const auto absent = read_node(children.at("absent"), model, depth + 1);
  model.nodes[index].contains_child = contains;
  model.nodes[index].absent_child = absent;
  return index;
}

json tree_json(const AugTreeModel& model) {
  if (model.nodes.empty()) throw InvalidArgument("cannot serialize an empty tree");
  json j;
  j["format"] = "augtree";
  j["version"] = 1;
  j["task"] = std::string(to_string(model.task));
  j["classes"] = model.classes;
  j["orders"] = model.ngram_config.orders;
  j["lowercase"] = model.ngram_config.lowercase;
  j["strip_punctuation"] = model.ngram_config.strip_punctuation;
  j["root"] = node_json(model, 0);
  return j;
}

AugTreeModel tree_from_json(const json& j) {
  if (j.value("format", "") != "augtree") throw FormatError("not a tree file");
  if (j.value("version", 0) != 1) throw FormatError("unsupported tree file version");
  AugTreeModel model;
  model.task = parse_task(j.at("task").get<std::string>());
  model.classes = j.at("classes").get<std::vector<std::string>>();
  model.ngram_config.orders = j.at("orders").get<std::vector<int>>();
  model.ngram_config.lowercase = j.at("lowercase").get<bool>();
  model.ngram_config.strip_punctuation = j.at("strip_punctuation").get<bool>();
  model.ngram_config = model.ngram_config.canonical();
  read_node(j.at("root"), model, 0);
  model.rebuild_matchers();
  return model;
}

template <class F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw FormatError(std::string("tree file: ") + e.what());
  }
}

}  // namespace

std::string serialize_tree(const AugTreeModel& model) { return tree_json(model).dump(1) + "\n"; }

AugTreeModel parse_tree(std::string_view text) {
  return guarded([&] { return tree_from_json(json::parse(text)); });
}

std::string serialize_ensemble(const AugTreeEnsemble& ensemble) {
  json j;
  j["format"] = "augtree-ensemble";
  j["version"] = 1;
  j["n_estimators"] = ensemble.n_estimators;
  j["bootstrap_seed"] = ensemble.bootstrap_seed;
  j["bootstrap"] = ensemble.bootstrap;
  j["trees"] = json::array();
  for (const auto& t : ensemble.trees) j["trees"].push_back(tree_json(t));
  return j.dump(1) + "\n";
}

AugTreeEnsemble parse_ensemble(std::string_view text) {
  return guarded([&] {
    const auto j = json::parse(text);
    if (j.value("format", "") != "augtree-ensemble") throw FormatError("not an ensemble file");
    AugTreeEnsemble e;
    e.n_estimators = j.at("n_estimators").get<std::size_t>();
    e.bootstrap_seed = j.at("bootstrap_seed").get<std::uint64_t>();
    e.bootstrap = j.at("bootstrap").get<bool>();
    for (const auto& t : j.at("trees")) e.trees.push_back(tree_from_json(t));
    if (e.trees.size() != e.n_estimators) throw FormatError("ensemble tree count mismatch");
    return e;
  });
}

void save_tree(const AugTreeModel& model, const std::filesystem::path& path) {
  binio::write_file_atomic(path, serialize_tree(model));
}

AugTreeModel load_tree(const std::filesystem::path& path) { return parse_tree(binio::read_file(path)); }

void save_ensemble(const AugTreeEnsemble& ensemble, const std::filesystem::path& path) {
  binio::write_file_atomic(path, serialize_ensemble(ensemble));
}

AugTreeEnsemble load_ensemble(const std::filesystem::path& path) {
  return parse_ensemble(binio::read_file(path));
}

}  // namespace aug::tree
