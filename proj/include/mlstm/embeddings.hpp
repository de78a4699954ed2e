#ifndef MLSTM_EMBEDDINGS_HPP
#define MLSTM_EMBEDDINGS_HPP

#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "mlstm/errors.hpp"
#include "mlstm/snli.hpp"
#include "mlstm/tensor.hpp"
#include "mlstm/vocab.hpp"

namespace mlstm {

// Frozen word vectors, one row per vocabulary id. Rows 0 (padding) and 1
// (NULL) are all zeros and training never touches any row; checksum() is the
// cheap way to assert that.
struct EmbeddingTable {
  int dim = 0;
  Tensor matrix;  // |V| x dim

  Tensor row(int id) const {
    if (id < 0 || id >= matrix.rows())
      throw IndexError("EmbeddingTable: id " + std::to_string(id) + " out of range");
    return matrix.row(id);
  }

  uint64_t table_checksum() const { return checksum(matrix); }
};

// Reads `<token> <v1> ... <vl>` lines and fills rows for vocabulary tokens,
// matching on the lowercased corpus token. Tokens not found end up in the
// vocabulary's oov set with zero rows, pending imputation.
inline EmbeddingTable load_pretrained(const std::string& path, Vocabulary& vocab, int dim) {
  if (dim <= 0) throw DimensionError("load_pretrained: dim must be positive");
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  // lowercased token -> first vocab ids that want it
  std::unordered_map<std::string, std::vector<int>> wanted;
  for (int id = 2; id < vocab.size(); ++id) wanted[to_lower(vocab.token_of(id))].push_back(id);

  EmbeddingTable table;
  table.dim = dim;
  table.matrix = Tensor::zeros({vocab.size(), dim});

  std::vector<bool> filled(static_cast<size_t>(vocab.size()), false);
  std::string line;
  size_t line_no = 0;
  bool first_data_line = true;
  std::vector<double> vals;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const size_t sp = line.find(' ');
    if (sp == std::string::npos)
      throw ParseError("line " + std::to_string(line_no) + ": expected <token> <v1> ... <vl>");
    const std::string token = line.substr(0, sp);
    vals.clear();
    {
      const char* p = line.c_str() + sp;
      char* end = nullptr;
      while (*p) {
        while (*p == ' ') ++p;
        if (!*p) break;
        const double v = std::strtod(p, &end);
        if (end == p) throw ParseError("line " + std::to_string(line_no) + ": malformed number");
        vals.push_back(v);
        p = end;
      }
    }
    if (static_cast<int>(vals.size()) != dim) {
      if (first_data_line)
        throw DimensionError("embedding file has " + std::to_string(vals.size()) + "-dim vectors, expected " +
                             std::to_string(dim));
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                       " values, got " + std::to_string(vals.size()));
    }
    first_data_line = false;
    auto it = wanted.find(token);
    if (it != wanted.end()) {
      for (int id : it->second) {
        for (int c = 0; c < dim; ++c) table.matrix.at(id, c) = vals[static_cast<size_t>(c)];
        filled[static_cast<size_t>(id)] = true;
      }
    }
  }
  for (int id = 2; id < vocab.size(); ++id)
    if (!filled[static_cast<size_t>(id)]) vocab.mark_oov(id);
  return table;
}

// Window-averaging imputation for out-of-vocabulary rows: each OOV token's
// row becomes the mean of the original rows of all in-vocabulary neighbors
// within `window/2` positions on each side, aggregated over every occurrence
// in every corpus sentence. Rows with no in-vocabulary neighbor stay zero.
// Only pre-imputation rows are read, so the result is independent of OOV
// processing order and a second run is a no-op.
inline void impute_oov(EmbeddingTable& table, const Vocabulary& vocab,
                       const std::vector<const Corpus*>& corpora, int window = 9) {
  if (window < 3 || window % 2 == 0)
    throw InvalidInputError("impute_oov: window must be odd and >= 3, got " + std::to_string(window));
  const int half = window / 2;

  std::unordered_map<int, std::pair<std::vector<double>, long long>> acc;  // oov id -> (sum, count)
  auto scan = [&](const std::vector<std::string>& tokens) {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) {
      auto id = vocab.id_of(t);
      ids.push_back(id ? *id : -1);
    }
    const int n = static_cast<int>(ids.size());
    for (int p = 0; p < n; ++p) {
      const int id = ids[p];
      if (id < 2 || !vocab.is_oov(id)) continue;
      auto& slot = acc[id];
      if (slot.first.empty()) slot.first.assign(static_cast<size_t>(table.dim), 0.0);
      for (int q = std::max(0, p - half); q <= std::min(n - 1, p + half); ++q) {
        if (q == p) continue;
        const int nid = ids[q];
        if (nid < 2 || vocab.is_oov(nid)) continue;
        for (int c = 0; c < table.dim; ++c) slot.first[static_cast<size_t>(c)] += table.matrix.at(nid, c);
        ++slot.second;
      }
    }
  };
  for (const Corpus* corpus : corpora)
    for (const auto& pair : corpus->pairs) {
      scan(pair.premise_tokens);
      scan(pair.hypothesis_tokens);
    }
  for (auto& [id, slot] : acc) {
    if (slot.second == 0) continue;
    for (int c = 0; c < table.dim; ++c)
      table.matrix.at(id, c) = slot.first[static_cast<size_t>(c)] / static_cast<double>(slot.second);
  }
}

inline void impute_oov(EmbeddingTable& table, const Vocabulary& vocab, const Corpus& corpus, int window = 9) {
  impute_oov(table, vocab, std::vector<const Corpus*>{&corpus}, window);
}

// Stacked embedding rows for an id sequence. No gradient ever flows here.
inline Tensor lookup(const std::vector<int>& ids, const EmbeddingTable& table) {
  if (ids.empty()) throw InvalidInputError("lookup: empty id sequence");
  Tensor out = Tensor::zeros({static_cast<int>(ids.size()), table.dim});
  for (size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || ids[r] >= table.matrix.rows())
      throw IndexError("lookup: id " + std::to_string(ids[r]) + " out of range");
    for (int c = 0; c < table.dim; ++c) out.at(static_cast<int>(r), c) = table.matrix.at(ids[r], c);
  }
  return out;
}

// Writes the (possibly imputed) table back in the pretrained text format,
// one row per vocabulary id >= 2, keyed by the original-cased token.
inline void save_embeddings(const EmbeddingTable& table, const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out.precision(17);
  for (int id = 2; id < vocab.size(); ++id) {
    out << vocab.token_of(id);
    for (int c = 0; c < table.dim; ++c) out << ' ' << table.matrix.at(id, c);
    out << '\n';
  }
}

// Loads a table saved by save_embeddings (exact-cased tokens, no oov pass).
inline EmbeddingTable load_prepared_embeddings(const std::string& path, const Vocabulary& vocab, int dim) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  EmbeddingTable table;
  table.dim = dim;
  table.matrix = Tensor::zeros({vocab.size(), dim});
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream iss(line);
    std::string token;
    iss >> token;
    auto id = vocab.id_of(token);
    if (!id || *id < 2) throw ParseError("line " + std::to_string(line_no) + ": token not in vocabulary");
    for (int c = 0; c < dim; ++c) {
      double v;
      if (!(iss >> v)) throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(dim) + " values");
      table.matrix.at(*id, c) = v;
    }
    double extra;
    if (iss >> extra) throw ParseError("line " + std::to_string(line_no) + ": too many values");
  }
  return table;
}

}  // namespace mlstm

#endif
