#include <charconv>
#include <cmath>

#include <json.hpp>

#include "augimodels/auggam.hpp"
#include "augimodels/errors.hpp"
#include "binio.hpp"

namespace aug::gam {
namespace {

constexpr std::string_view kModelMagic = "AUGM";
constexpr std::uint32_t kModelVersion = 1;

std::uint32_t link_tag(LinkKind link) {
  switch (link) {
    case LinkKind::Logit: return 0;
    case LinkKind::Softmax: return 1;
    case LinkKind::Identity: return 2;
  }
  return 2;
}

LinkKind link_from_tag(std::uint32_t tag) {
  switch (tag) {
    case 0: return LinkKind::Logit;
    case 1: return LinkKind::Softmax;
    case 2: return LinkKind::Identity;
  }
  throw FormatError("unknown link tag " + std::to_string(tag));
}

double parse_double(std::string_view s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw FormatError("bad number '" + std::string(s) + "'");
  return v;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw FormatError("cannot format double");
  return std::string(buf, ptr);
}

std::string serialize_model(const AugGamModel& model) {
  model.validate();
  std::string out;
  out.append(kModelMagic);
  binio::put_u32(out, kModelVersion);
  binio::put_u32(out, static_cast<std::uint32_t>(model.dim()));
  binio::put_u32(out, static_cast<std::uint32_t>(model.num_outputs()));
  binio::put_u32(out, link_tag(model.link));
  for (Eigen::Index r = 0; r < model.weights.rows(); ++r)
    for (Eigen::Index c = 0; c < model.weights.cols(); ++c)
      binio::put_f32(out, static_cast<float>(model.weights(r, c)));
  for (Eigen::Index r = 0; r < model.intercepts.size(); ++r)
    binio::put_f32(out, static_cast<float>(model.intercepts[r]));
  binio::put_u32(out, static_cast<std::uint32_t>(model.ngram_config.orders.size()));
  for (int k : model.ngram_config.orders) binio::put_u32(out, static_cast<std::uint32_t>(k));
  out.push_back(model.ngram_config.lowercase ? 1 : 0);
  out.push_back(model.ngram_config.strip_punctuation ? 1 : 0);
  binio::put_bytes(out, model.provider_fingerprint);
  binio::put_u32(out, static_cast<std::uint32_t>(model.classes.size()));
  for (const auto& c : model.classes) binio::put_bytes(out, c);
  return out;
}

AugGamModel parse_model(std::string_view bytes) {
  binio::Reader r(bytes, "model file");
  if (r.raw(4) != kModelMagic) throw FormatError("not an Aug-GAM model file");
  const auto version = r.u32();
  if (version != kModelVersion) throw FormatError("unsupported model version " + std::to_string(version));
  AugGamModel m;
  const auto dim = static_cast<Eigen::Index>(r.u32());
  const auto outputs = static_cast<Eigen::Index>(r.u32());
  m.link = link_from_tag(r.u32());
  m.weights.resize(outputs, dim);
  for (Eigen::Index i = 0; i < outputs; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) m.weights(i, j) = r.f32();
  m.intercepts.resize(outputs);
  for (Eigen::Index i = 0; i < outputs; ++i) m.intercepts[i] = r.f32();
  const auto n_orders = r.u32();
  m.ngram_config.orders.clear();
  for (std::uint32_t i = 0; i < n_orders; ++i) m.ngram_config.orders.push_back(static_cast<int>(r.u32()));
  m.ngram_config.lowercase = r.u8() != 0;
  m.ngram_config.strip_punctuation = r.u8() != 0;
  m.provider_fingerprint = r.bytes();
  const auto n_classes = r.u32();
  for (std::uint32_t i = 0; i < n_classes; ++i) m.classes.push_back(r.bytes());
  if (!r.done()) throw FormatError("model file has trailing bytes");
  m.ngram_config = m.ngram_config.canonical();
  m.validate();
  return m;
}

void save_model(const AugGamModel& model, const std::filesystem::path& path) {
  binio::write_file_atomic(path, serialize_model(model));
}

AugGamModel load_model(const std::filesystem::path& path) { return parse_model(binio::read_file(path)); }

std::string serialize_dictionary(const CoefficientDictionary& dict) {
  nlohmann::json meta;
  meta["link"] = std::string(to_string(dict.link));
  meta["classes"] = dict.classes;
  meta["intercepts"] = dict.intercepts;
  meta["orders"] = dict.ngram_config.orders;
  meta["lowercase"] = dict.ngram_config.lowercase;
  meta["strip_punctuation"] = dict.ngram_config.strip_punctuation;
  meta["provider"] = dict.provider_fingerprint;
  meta["entries"] = dict.entries.size();

  std::string out = meta.dump();
  out.push_back('\n');
  for (const auto& [g, values] : dict.entries) {
    if (values.size() != dict.intercepts.size())
      throw InvalidArgument("dictionary entry '" + g + "' has the wrong number of outputs");
    out += g;
    for (double v : values) {
      out.push_back('\t');
      out += format_double(v);
    }
    out.push_back('\n');
  }
  return out;
}

CoefficientDictionary parse_dictionary(std::string_view text) {
  const auto first_nl = text.find('\n');
  if (first_nl == std::string_view::npos) throw FormatError("dictionary is missing its metadata line");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(text.substr(0, first_nl));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("dictionary metadata: ") + e.what());
  }
  CoefficientDictionary dict;
  try {
    dict.link = parse_link(meta.at("link").get<std::string>());
    dict.classes = meta.at("classes").get<std::vector<std::string>>();
    dict.intercepts = meta.at("intercepts").get<std::vector<double>>();
    dict.ngram_config.orders = meta.at("orders").get<std::vector<int>>();
    dict.ngram_config.lowercase = meta.at("lowercase").get<bool>();
    dict.ngram_config.strip_punctuation = meta.at("strip_punctuation").get<bool>();
    dict.provider_fingerprint = meta.at("provider").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("dictionary metadata: ") + e.what());
  }
  const auto expected = meta.value("entries", static_cast<std::size_t>(0));

  std::size_t pos = first_nl + 1;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw FormatError("dictionary row without values");
    std::vector<double> values;
    std::size_t p = tab + 1;
    while (true) {
      const auto next = line.find('\t', p);
      values.push_back(parse_double(line.substr(p, next == std::string_view::npos ? std::string_view::npos : next - p)));
      if (next == std::string_view::npos) break;
      p = next + 1;
    }
    if (values.size() != dict.intercepts.size()) throw FormatError("dictionary row has the wrong arity");
    dict.entries.emplace(std::string(line.substr(0, tab)), std::move(values));
  }
  if (dict.entries.size() != expected) throw FormatError("dictionary entry count does not match metadata");
  return dict;
}

void save_dictionary(const CoefficientDictionary& dictionary, const std::filesystem::path& path) {
  binio::write_file_atomic(path, serialize_dictionary(dictionary));
}

CoefficientDictionary load_dictionary(const std::filesystem::path& path) {
  return parse_dictionary(binio::read_file(path));
}

}  // namespace aug::gam
