#include "augimodels/textproc.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <charconv>
#include <map>
#include <unordered_set>

#include "augimodels/errors.hpp"

namespace aug::text {
namespace {

struct CodePoint {
  UChar32 value;
  std::size_t begin;
  std::size_t end;
};

// Decodes UTF-8; malformed sequences become U+FFFD.
std::vector<CodePoint> decode(std::string_view s) {
  std::vector<CodePoint> out;
  out.reserve(s.size());
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(s.data());
  const auto length = static_cast<std::int32_t>(s.size());
  std::int32_t i = 0;
  while (i < length) {
    const std::int32_t start = i;
    UChar32 c = 0;
    U8_NEXT(bytes, i, length, c);
    if (c < 0) c = 0xFFFD;
    out.push_back({c, static_cast<std::size_t>(start), static_cast<std::size_t>(i)});
  }
  return out;
}

bool is_space(UChar32 c) { return u_isUWhiteSpace(c) != 0; }
bool is_punct(UChar32 c) { return (U_GET_GC_MASK(c) & U_GC_P_MASK) != 0; }

void append_utf8(std::string& out, UChar32 c) {
  char buf[U8_MAX_LENGTH];
  std::int32_t n = 0;
  UBool error = false;
  U8_APPEND(reinterpret_cast<std::uint8_t*>(buf), n, U8_MAX_LENGTH, c, error);
  if (!error) out.append(buf, static_cast<std::size_t>(n));
}

std::string fold(std::span<const CodePoint> cps) {
  std::string out;
  for (const auto& cp : cps) append_utf8(out, u_foldCase(cp.value, U_FOLD_CASE_DEFAULT));
  return out;
}

std::string join(std::span<const Token> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

}  // namespace

NgramConfig NgramConfig::canonical() const {
  NgramConfig c = *this;
  std::sort(c.orders.begin(), c.orders.end());
  c.orders.erase(std::unique(c.orders.begin(), c.orders.end()), c.orders.end());
  if (c.orders.empty()) throw InvalidArgument("ngram orders must be non-empty");
  if (c.orders.front() < 1 || c.orders.back() > kMaxOrder)
    throw InvalidArgument("ngram orders must lie in [1, " + std::to_string(kMaxOrder) + "]");
  return c;
}

int NgramConfig::max_order() const {
  return orders.empty() ? 0 : *std::max_element(orders.begin(), orders.end());
}

std::string NgramConfig::orders_string() const {
  std::string out;
  for (std::size_t i = 0; i < orders.size(); ++i) {
    if (i) out.push_back(',');
    out += std::to_string(orders[i]);
  }
  return out;
}

std::vector<int> NgramConfig::parse_orders(std::string_view csv) {
  std::vector<int> out;
  while (!csv.empty()) {
    const auto comma = csv.find(',');
    auto piece = csv.substr(0, comma);
    while (!piece.empty() && piece.front() == ' ') piece.remove_prefix(1);
    while (!piece.empty() && piece.back() == ' ') piece.remove_suffix(1);
    int value = 0;
    auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), value);
    if (ec != std::errc{} || ptr != piece.data() + piece.size())
      throw InvalidArgument("bad ngram order list: " + std::string(csv));
    out.push_back(value);
    if (comma == std::string_view::npos) break;
    csv.remove_prefix(comma + 1);
  }
  return NgramConfig{out, true, true}.canonical().orders;
}

Ngram::Ngram(std::vector<Token> tokens) : tokens_(std::move(tokens)), text_(join(tokens_)) {
  if (tokens_.empty()) throw InvalidArgument("ngram must contain at least one token");
}

Ngram Ngram::parse(std::string_view canonical) {
  std::vector<Token> tokens;
  std::size_t start = 0;
  while (start <= canonical.size()) {
    const auto sp = canonical.find(' ', start);
    const auto end = sp == std::string_view::npos ? canonical.size() : sp;
    if (end > start) tokens.emplace_back(canonical.substr(start, end - start));
    if (sp == std::string_view::npos) break;
    start = sp + 1;
  }
  return Ngram(std::move(tokens));
}

std::vector<Token> tokenize(std::string_view text, const NgramConfig& config) {
  std::vector<Token> tokens;
  const auto cps = decode(text);
  std::size_t i = 0;
  while (i < cps.size()) {
    while (i < cps.size() && is_space(cps[i].value)) ++i;
    std::size_t j = i;
    while (j < cps.size() && !is_space(cps[j].value)) ++j;
    if (j == i) break;
    std::size_t lo = i, hi = j;
    if (config.strip_punctuation) {
      while (lo < hi && is_punct(cps[lo].value)) ++lo;
      while (hi > lo && is_punct(cps[hi - 1].value)) --hi;
    }
    if (hi > lo) {
      std::span<const CodePoint> word(cps.data() + lo, hi - lo);
      if (config.lowercase)
        tokens.push_back(fold(word));
      else
        tokens.emplace_back(text.substr(word.front().begin, word.back().end - word.front().begin));
    }
    i = j;
  }
  return tokens;
}

std::vector<std::string> extract_ngram_strings(std::span<const Token> tokens,
                                               const NgramConfig& config) {
  std::vector<std::string> out;
  const std::size_t n = tokens.size();
  std::size_t total = 0;
  for (int k : config.orders)
    if (static_cast<std::size_t>(k) <= n) total += n - static_cast<std::size_t>(k) + 1;
  out.reserve(total);
  auto orders = config.orders;
  std::sort(orders.begin(), orders.end());
  orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
  for (int k : orders) {
    const auto width = static_cast<std::size_t>(k);
    if (width == 0 || width > n) continue;
    for (std::size_t s = 0; s + width <= n; ++s) out.push_back(join(tokens.subspan(s, width)));
  }
  return out;
}

std::vector<Ngram> extract_ngrams(std::span<const Token> tokens, const NgramConfig& config) {
  std::vector<Ngram> out;
  auto orders = config.orders;
  std::sort(orders.begin(), orders.end());
  orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
  for (int k : orders) {
    const auto width = static_cast<std::size_t>(k);
    if (width == 0 || width > tokens.size()) continue;
    for (std::size_t s = 0; s + width <= tokens.size(); ++s) {
      auto window = tokens.subspan(s, width);
      out.emplace_back(std::vector<Token>(window.begin(), window.end()));
    }
  }
  return out;
}

std::vector<std::string> document_ngrams(std::string_view document, const NgramConfig& config) {
  const auto tokens = tokenize(document, config);
  return extract_ngram_strings(tokens, config);
}

std::string normalize_phrase(std::string_view phrase, const NgramConfig& config) {
  return join(tokenize(phrase, config));
}

std::string clean_phrase(std::string_view phrase) {
  const auto cps = decode(phrase);
  std::size_t lo = 0, hi = cps.size();
  while (lo < hi && (is_space(cps[lo].value) || is_punct(cps[lo].value))) ++lo;
  while (hi > lo && (is_space(cps[hi - 1].value) || is_punct(cps[hi - 1].value))) --hi;
  std::string out;
  bool pending_space = false;
  for (std::size_t i = lo; i < hi; ++i) {
    if (is_space(cps[i].value)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    append_utf8(out, u_foldCase(cps[i].value, U_FOLD_CASE_DEFAULT));
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<VocabEntry> sorted_entries) : entries_(std::move(sorted_entries)) {
  index_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) index_.emplace(entries_[i].ngram, i);
}

std::size_t Vocabulary::find(std::string_view ngram) const {
  auto it = index_.find(std::string(ngram));
  return it == index_.end() ? npos : it->second;
}

std::vector<std::string> Vocabulary::ngrams() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.ngram);
  return out;
}

Vocabulary build_vocabulary(std::span<const std::string> documents, const NgramConfig& config) {
  std::map<std::string, VocabEntry> acc;
  std::unordered_set<std::string> seen;
  for (const auto& doc : documents) {
    seen.clear();
    for (auto& g : document_ngrams(doc, config)) {
      auto& entry = acc[g];
      ++entry.count;
      if (seen.insert(g).second) ++entry.doc_freq;
    }
  }
  std::vector<VocabEntry> entries;
  entries.reserve(acc.size());
  for (auto& [key, entry] : acc) {
    entry.ngram = key;
    entries.push_back(std::move(entry));
  }
  return Vocabulary(std::move(entries));
}

Vocabulary vocabulary(const LabeledCorpus& corpus, const NgramConfig& config) {
  if (corpus.size() == 0) throw EmptyCorpus("cannot build a vocabulary from an empty corpus");
  std::vector<std::string> docs;
  for (auto i : corpus.indices(Split::Train)) docs.push_back(corpus.documents[i]);
  return build_vocabulary(docs, config);
}

}  // namespace aug::text
