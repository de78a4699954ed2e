#ifndef MLSTM_VOCAB_HPP
#define MLSTM_VOCAB_HPP

#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mlstm/errors.hpp"
#include "mlstm/snli.hpp"

namespace mlstm {

// Token ids. Ids 0 and 1 are reserved for the padding slot and the premise
// NULL slot; corpus tokens start at 2 and keep first-occurrence order.
// Corpus tokens are stored with their original casing (lowercasing happens
// only at embedding lookup), so the literal strings "<pad>"/"NULL" in a
// corpus would still get their own ids >= 2.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kNull = 1;

  Vocabulary() {
    tokens_ = {"<pad>", "NULL"};
  }

  int add(const std::string& token) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    const int id = static_cast<int>(tokens_.size());
    index_.emplace(token, id);
    tokens_.push_back(token);
    return id;
  }

  std::optional<int> id_of(const std::string& token) const {
    auto it = index_.find(token);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& token_of(int id) const {
    if (id < 0 || id >= static_cast<int>(tokens_.size()))
      throw IndexError("Vocabulary: id " + std::to_string(id) + " out of range");
    return tokens_[static_cast<size_t>(id)];
  }

  int size() const { return static_cast<int>(tokens_.size()); }

  bool is_oov(int id) const { return oov_.count(id) != 0; }
  void mark_oov(int id) { oov_.insert(id); }
  const std::unordered_set<int>& oov_ids() const { return oov_; }

  std::vector<int> ids_for(const std::vector<std::string>& tokens) const {
    std::vector<int> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
      auto id = id_of(t);
      if (!id) throw IndexError("Vocabulary: unknown token \"" + t + "\"");
      out.push_back(*id);
    }
    return out;
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    for (size_t i = 0; i < tokens_.size(); ++i) out << i << '\t' << tokens_[i] << '\n';
  }

  static Vocabulary load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    Vocabulary v;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const size_t tab = line.find('\t');
      if (tab == std::string::npos)
        throw ParseError("line " + std::to_string(line_no) + ": expected <id>\\t<token>");
      const int id = std::stoi(line.substr(0, tab));
      const std::string token = line.substr(tab + 1);
      if (id <= kNull) continue;  // reserved rows round-trip by position
      const int got = v.add(token);
      if (got != id)
        throw ParseError("line " + std::to_string(line_no) + ": non-contiguous id " + std::to_string(id));
    }
    return v;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  std::unordered_set<int> oov_;
};

// Distinct tokens of every sentence of every pair, in first-occurrence order.
inline Vocabulary build_vocab(const std::vector<const Corpus*>& corpora) {
  size_t total = 0;
  for (const Corpus* c : corpora) total += c->pairs.size();
  if (total == 0) throw InvalidInputError("build_vocab: empty corpus");
  Vocabulary v;
  for (const Corpus* c : corpora)
    for (const auto& pair : c->pairs) {
      for (const auto& t : pair.premise_tokens) v.add(t);
      for (const auto& t : pair.hypothesis_tokens) v.add(t);
    }
  return v;
}

inline Vocabulary build_vocab(const Corpus& corpus) { return build_vocab(std::vector<const Corpus*>{&corpus}); }

}  // namespace mlstm

#endif
