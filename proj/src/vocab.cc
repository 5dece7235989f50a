#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "lmgnn/errors.hpp"
#include "lmgnn/text_encoder.hpp"

namespace lmgnn {

Vocab::Vocab() {
  for (const char* special : {"[CLS]", "[SEP]", "[PAD]", "[MASK]", "[UNK]"}) add(special);
}

void Vocab::add(const std::string& token) {
  if (index_.emplace(token, static_cast<std::int64_t>(tokens_.size())).second)
    tokens_.push_back(token);
}

Vocab Vocab::build(std::span<const std::string> corpus) {
  std::set<std::string> words;
  for (const auto& text : corpus)
    for (auto& w : split_words(text)) words.insert(std::move(w));
  Vocab vocab;
  for (const auto& w : words) vocab.add(w);
  return vocab;
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  LMGNN_CHECK(in.good(), LoadError, path.string() << ": missing or unreadable vocabulary");
  Vocab vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    LMGNN_CHECK(!line.empty(), LoadError, path.string() << ":" << line_no << ": empty token");
    const auto before = vocab.size();
    vocab.add(line);
    LMGNN_CHECK(vocab.size() == before + 1, LoadError,
                path.string() << ":" << line_no << ": duplicate token '" << line << "'");
  }
  return vocab;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  LMGNN_CHECK(out.good(), LoadError, path.string() << ": cannot write vocabulary");
  for (std::size_t i = kNumSpecial; i < tokens_.size(); ++i) out << tokens_[i] << '\n';
}

std::int64_t Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  std::string w;
  while (in >> w) {
    std::transform(w.begin(), w.end(), w.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    words.push_back(std::move(w));
  }
  return words;
}

std::vector<std::int64_t> tokenize(const Vocab& vocab, const std::string& text,
                                   std::size_t max_len) {
  LMGNN_CHECK(max_len >= 2, ContractError, "tokenize: max_len must be >= 2");
  std::vector<std::int64_t> ids;
  ids.reserve(max_len);
  ids.push_back(Vocab::kCls);
  for (const auto& w : split_words(text)) {
    if (ids.size() == max_len) break;
    ids.push_back(vocab.id(w));
  }
  ids.resize(max_len, Vocab::kPad);
  return ids;
}

TokenBatch make_token_batch(const Vocab& vocab, std::span<const std::string> texts,
                            std::size_t max_len) {
  TokenBatch batch;
  batch.rows = texts.size();
  std::vector<std::vector<std::int64_t>> rows;
  rows.reserve(texts.size());
  std::size_t longest = 1;
  for (const auto& t : texts) {
    rows.push_back(tokenize(vocab, t, max_len));
    const auto& r = rows.back();
    std::size_t len = r.size();
    while (len > 1 && r[len - 1] == Vocab::kPad) --len;
    longest = std::max(longest, len);
  }
  batch.seq = longest;
  batch.ids.reserve(batch.rows * batch.seq);
  for (const auto& r : rows) batch.ids.insert(batch.ids.end(), r.begin(), r.begin() + static_cast<std::ptrdiff_t>(longest));
  return batch;
}

}  // namespace lmgnn
