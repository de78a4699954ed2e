#ifndef MLSTM_SNLI_HPP
#define MLSTM_SNLI_HPP

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlstm/errors.hpp"

namespace mlstm {

// Class order is fixed across every serialized artifact.
enum class Label : int { entailment = 0, contradiction = 1, neutral = 2 };
inline constexpr int kNumClasses = 3;

inline const char* label_name(Label l) {
  switch (l) {
    case Label::entailment: return "entailment";
    case Label::contradiction: return "contradiction";
    case Label::neutral: return "neutral";
  }
  return "?";
}

inline std::string to_lower(std::string s) {
  for (char& c : s)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return s;
}

// Parses a gold label case-insensitively. Returns nullopt for the
// no-consensus marker ("-"), throws ParseError for anything else unknown.
inline std::optional<Label> parse_label(const std::string& raw, size_t line_no) {
  const std::string s = to_lower(raw);
  if (s == "entailment") return Label::entailment;
  if (s == "contradiction") return Label::contradiction;
  if (s == "neutral") return Label::neutral;
  if (s == "-" || s == "\xe2\x88\x92") return std::nullopt;  // ASCII hyphen or U+2212
  throw ParseError("line " + std::to_string(line_no) + ": unknown gold_label \"" + raw + "\"");
}

struct LabeledPair {
  std::vector<std::string> premise_tokens;
  std::vector<std::string> hypothesis_tokens;
  Label label = Label::neutral;
};

struct Corpus {
  std::vector<LabeledPair> pairs;
  std::string split;
  std::string source_path;
  size_t kept = 0;
  size_t dropped = 0;  // records with the no-consensus label
};

inline std::vector<std::string> split_whitespace(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

// Tokens for one sentence. A binary parse, when available, is the corpus's
// canonical tokenization: whitespace-split with the bracket tokens dropped.
inline std::vector<std::string> tokenize_sentence(const std::string& plain, const std::string& binary_parse,
                                                  size_t line_no) {
  std::vector<std::string> out;
  if (!binary_parse.empty()) {
    for (const std::string& t : split_whitespace(binary_parse))
      if (t != "(" && t != ")") out.push_back(t);
  } else {
    out = split_whitespace(plain);
  }
  if (out.empty()) throw ParseError("line " + std::to_string(line_no) + ": sentence has no tokens");
  return out;
}

namespace detail {

struct RawRecord {
  std::string gold_label;
  std::string sentence1, sentence2;
  std::string parse1, parse2;
};

inline RawRecord record_from_json(const std::string& line, size_t line_no) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("line " + std::to_string(line_no) + ": invalid JSON record: " + e.what());
  }
  RawRecord r;
  for (const char* field : {"gold_label", "sentence1", "sentence2"})
    if (!j.contains(field) || !j[field].is_string())
      throw ParseError("line " + std::to_string(line_no) + ": missing required field " + field);
  r.gold_label = j["gold_label"].get<std::string>();
  r.sentence1 = j["sentence1"].get<std::string>();
  r.sentence2 = j["sentence2"].get<std::string>();
  if (j.contains("sentence1_binary_parse") && j["sentence1_binary_parse"].is_string())
    r.parse1 = j["sentence1_binary_parse"].get<std::string>();
  if (j.contains("sentence2_binary_parse") && j["sentence2_binary_parse"].is_string())
    r.parse2 = j["sentence2_binary_parse"].get<std::string>();
  return r;
}

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == '\t') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

// Appends the record as a pair unless its label is the no-consensus marker.
inline void ingest_record(const detail::RawRecord& r, size_t line_no, Corpus& corpus) {
  std::optional<Label> label = parse_label(r.gold_label, line_no);
  if (r.sentence2.empty() && r.parse2.empty())
    throw ParseError("line " + std::to_string(line_no) + ": empty sentence2");
  if (r.sentence1.empty() && r.parse1.empty())
    throw ParseError("line " + std::to_string(line_no) + ": empty sentence1");
  if (!label) {
    ++corpus.dropped;
    return;
  }
  LabeledPair pair;
  pair.premise_tokens = tokenize_sentence(r.sentence1, r.parse1, line_no);
  pair.hypothesis_tokens = tokenize_sentence(r.sentence2, r.parse2, line_no);
  pair.label = *label;
  corpus.pairs.push_back(std::move(pair));
  ++corpus.kept;
}

// SNLI line-delimited records: JSONL, or the tab-separated distribution with
// a header row naming the fields. Records labeled "-" are dropped and
// counted; malformed lines raise ParseError with their line number.
inline Corpus parse_snli(const std::string& path, const std::string& split = "") {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  Corpus corpus;
  corpus.split = split;
  corpus.source_path = path;

  std::string line;
  size_t line_no = 0;
  bool json_mode = false;
  std::vector<std::string> header;
  bool saw_first = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!saw_first) {
      saw_first = true;
      json_mode = line[0] == '{';
      if (!json_mode) {
        header = detail::split_tabs(line);
        bool has_required = false;
        for (const auto& h : header) has_required |= (h == "gold_label");
        if (!has_required)
          throw ParseError("line 1: expected JSONL records or a tab-separated header naming gold_label");
        continue;
      }
    }
    detail::RawRecord rec;
    if (json_mode) {
      rec = detail::record_from_json(line, line_no);
    } else {
      std::vector<std::string> cols = detail::split_tabs(line);
      if (cols.size() < header.size())
        throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                         " tab-separated fields, got " + std::to_string(cols.size()));
      bool have_label = false, have_s1 = false, have_s2 = false;
      for (size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "gold_label") {
          rec.gold_label = cols[i];
          have_label = true;
        } else if (header[i] == "sentence1") {
          rec.sentence1 = cols[i];
          have_s1 = true;
        } else if (header[i] == "sentence2") {
          rec.sentence2 = cols[i];
          have_s2 = true;
        } else if (header[i] == "sentence1_binary_parse") {
          rec.parse1 = cols[i];
        } else if (header[i] == "sentence2_binary_parse") {
          rec.parse2 = cols[i];
        }
      }
      if (!have_label || !have_s1 || !have_s2)
        throw ParseError("line " + std::to_string(line_no) + ": missing required field");
    }
    ingest_record(rec, line_no, corpus);
  }
  if (!saw_first) throw InvalidInputError("empty corpus file " + path);
  return corpus;
}

// Minimal fixture format: label \t premise \t hypothesis, no header.
inline Corpus load_fixture_tsv(const std::string& path, const std::string& split = "") {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  Corpus corpus;
  corpus.split = split;
  corpus.source_path = path;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cols = detail::split_tabs(line);
    if (cols.size() != 3)
      throw ParseError("line " + std::to_string(line_no) + ": expected 3 tab-separated fields, got " +
                       std::to_string(cols.size()));
    detail::RawRecord rec;
    rec.gold_label = cols[0];
    rec.sentence1 = cols[1];
    rec.sentence2 = cols[2];
    ingest_record(rec, line_no, corpus);
  }
  if (corpus.pairs.empty() && corpus.dropped == 0) throw InvalidInputError("empty corpus file " + path);
  return corpus;
}

inline void write_fixture_tsv(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& p : corpus.pairs) {
    out << label_name(p.label) << '\t';
    for (size_t i = 0; i < p.premise_tokens.size(); ++i) out << (i ? " " : "") << p.premise_tokens[i];
    out << '\t';
    for (size_t i = 0; i < p.hypothesis_tokens.size(); ++i) out << (i ? " " : "") << p.hypothesis_tokens[i];
    out << '\n';
  }
}

// Sniffs between the SNLI formats and the 3-column fixture format.
inline Corpus load_corpus(const std::string& path, const std::string& split = "") {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string first;
  while (std::getline(in, first) && first.empty()) {
  }
  in.close();
  if (!first.empty() && first[0] == '{') return parse_snli(path, split);
  if (first.find("gold_label") != std::string::npos) return parse_snli(path, split);
  return load_fixture_tsv(path, split);
}

}  // namespace mlstm

#endif
