#ifndef MLSTM_INTROSPECT_HPP
#define MLSTM_INTROSPECT_HPP

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "mlstm/errors.hpp"
#include "mlstm/matcher.hpp"
#include "mlstm/snli.hpp"
#include "mlstm/training.hpp"

namespace mlstm {

// Lowercase token set loaded from a one-token-per-line resource file.
class StopwordList {
 public:
  static StopwordList load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open stopword list " + path);
    StopwordList list;
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      list.tokens_.insert(to_lower(line));
    }
    if (list.tokens_.empty()) throw InvalidInputError("stopword list " + path + " is empty");
    return list;
  }

  static StopwordList from_tokens(const std::vector<std::string>& tokens) {
    StopwordList list;
    for (const auto& t : tokens) list.tokens_.insert(to_lower(t));
    if (list.tokens_.empty()) throw InvalidInputError("stopword list is empty");
    return list;
  }

  bool contains(const std::string& token) const { return tokens_.count(to_lower(token)) != 0; }
  size_t size() const { return tokens_.size(); }

 private:
  std::unordered_set<std::string> tokens_;
};

// ----- trace export ---------------------------------------------------------

namespace detail {

inline void write_matrix_block(std::ostream& out, const std::string& name, const std::vector<Tensor>& rows) {
  if (rows.empty()) return;
  out << "matrix " << name << " " << rows.size() << " " << rows[0].size() << "\n";
  char buf[40];
  for (const Tensor& row : rows) {
    for (int i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", row.at(i));
      out << (i ? " " : "") << buf;
    }
    out << "\n";
  }
}

}  // namespace detail

// Writes one pair's alignment matrix (NULL column first) and gate matrices
// with token labels, as plain text blocks any plotting tool can consume.
inline void export_trace(Model& model, const EmbeddingTable& table, const Vocabulary& vocab,
                         const LabeledPair& pair, const std::string& out_path) {
  Tape tape;
  ForwardResult r = model.forward_pair(tape, table, vocab, pair, true);
  std::ofstream out(out_path);
  if (!out) throw IoError("cannot write " + out_path);
  out << "mlstm-trace 1\n";
  out << "variant " << variant_name(model.config().variant) << "\n";
  out << "d_out " << model.d_out() << "\n";
  out << "label " << label_name(pair.label) << "\n";
  out << "premise_columns NULL";
  for (const auto& t : pair.premise_tokens) out << " " << t;
  out << "\n";
  out << "hypothesis_rows";
  for (const auto& t : pair.hypothesis_tokens) out << " " << t;
  out << "\n";
  detail::write_matrix_block(out, "alpha", r.trace.alpha);
  detail::write_matrix_block(out, "input_gate", r.trace.gate_i);
  detail::write_matrix_block(out, "forget_gate", r.trace.gate_f);
  detail::write_matrix_block(out, "output_gate", r.trace.gate_o);
  detail::write_matrix_block(out, "hidden", r.trace.hidden);
  out << "end\n";
  if (!out) throw IoError("write failed for " + out_path);
}

struct TraceFile {
  std::string variant;
  int d_out = 0;
  std::vector<std::string> premise_columns, hypothesis_rows;
  std::vector<std::pair<std::string, std::vector<Tensor>>> matrices;

  const std::vector<Tensor>* matrix(const std::string& name) const {
    for (const auto& [n, m] : matrices)
      if (n == name) return &m;
    return nullptr;
  }
};

inline TraceFile parse_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  TraceFile tf;
  std::string line;
  if (!std::getline(in, line) || line.rfind("mlstm-trace", 0) != 0)
    throw ParseError("trace file: bad magic in " + path);
  while (std::getline(in, line)) {
    if (line == "end") break;
    std::istringstream iss(line);
    std::string key;
    iss >> key;
    if (key == "variant") {
      iss >> tf.variant;
    } else if (key == "d_out") {
      iss >> tf.d_out;
    } else if (key == "premise_columns") {
      std::string tok;
      while (iss >> tok) tf.premise_columns.push_back(tok);
    } else if (key == "hypothesis_rows") {
      std::string tok;
      while (iss >> tok) tf.hypothesis_rows.push_back(tok);
    } else if (key == "matrix") {
      std::string name;
      size_t rows = 0, cols = 0;
      iss >> name >> rows >> cols;
      if (!iss) throw ParseError("trace file: malformed matrix header \"" + line + "\"");
      std::vector<Tensor> mat;
      for (size_t r = 0; r < rows; ++r) {
        if (!std::getline(in, line)) throw ParseError("trace file: truncated matrix " + name);
        std::istringstream row_ss(line);
        Tensor row = Tensor::zeros({static_cast<int>(cols)});
        for (size_t c = 0; c < cols; ++c)
          if (!(row_ss >> row.at(static_cast<int>(c))))
            throw ParseError("trace file: short row in matrix " + name);
        mat.push_back(std::move(row));
      }
      tf.matrices.emplace_back(name, std::move(mat));
    } else if (key == "label" || key.empty()) {
      // informational
    } else {
      throw ParseError("trace file: unknown key \"" + key + "\"");
    }
  }
  return tf;
}

// ----- gate statistics ------------------------------------------------------

struct GateStats {
  std::string group;  // stopword | content | label:<name> | token:<token>
  std::string gate;   // input | forget
  double mean = 0.0;
  double stddev = 0.0;  // population
  long long n = 0;
};

struct GateStatsReport {
  std::vector<GateStats> stats;
  std::vector<std::string> warnings;
};

namespace detail {

struct Welford {
  double sum = 0.0, sumsq = 0.0;
  long long n = 0;
  void add(double x) {
    sum += x;
    sumsq += x * x;
    ++n;
  }
  GateStats finish(const std::string& group, const std::string& gate) const {
    GateStats s;
    s.group = group;
    s.gate = gate;
    s.n = n;
    if (n > 0) {
      s.mean = sum / static_cast<double>(n);
      const double var = std::max(0.0, sumsq / static_cast<double>(n) - s.mean * s.mean);
      s.stddev = std::sqrt(var);
    }
    return s;
  }
};

inline double mean_of(const Tensor& v) {
  double s = 0.0;
  for (int i = 0; i < v.size(); ++i) s += v.at(i);
  return s / static_cast<double>(v.size());
}

}  // namespace detail

// Aggregates per-position scalar gate values (mean over the gate dimensions)
// over a corpus: input gates grouped into stop words vs content words, forget
// gates grouped by the pair's gold label, plus per-token input-gate groups
// for any requested tokens. Groups that stay empty are omitted with a
// warning record.
inline GateStatsReport gate_statistics(Model& model, const EmbeddingTable& table, const Vocabulary& vocab,
                                       const Corpus& corpus, const StopwordList& stopwords,
                                       const std::vector<std::string>& named_tokens = {}) {
  if (corpus.pairs.empty()) throw InvalidInputError("gate_statistics: empty corpus");
  detail::Welford stop_in, content_in;
  std::array<detail::Welford, 3> forget_by_label;
  std::vector<detail::Welford> named(named_tokens.size());

  for (const LabeledPair& pair : corpus.pairs) {
    Tape tape;
    ForwardResult r = model.forward_pair(tape, table, vocab, pair, true);
    for (size_t k = 0; k < pair.hypothesis_tokens.size(); ++k) {
      const std::string& token = pair.hypothesis_tokens[k];
      const double gi = detail::mean_of(r.trace.gate_i[k]);
      const double gf = detail::mean_of(r.trace.gate_f[k]);
      if (stopwords.contains(token))
        stop_in.add(gi);
      else
        content_in.add(gi);
      forget_by_label[static_cast<size_t>(pair.label)].add(gf);
      for (size_t t = 0; t < named_tokens.size(); ++t)
        if (to_lower(token) == to_lower(named_tokens[t])) named[t].add(gi);
    }
  }

  GateStatsReport report;
  auto emit = [&](const detail::Welford& w, const std::string& group, const std::string& gate) {
    if (w.n == 0) {
      report.warnings.push_back("group " + group + " (" + gate + " gate) is empty; omitted");
      return;
    }
    report.stats.push_back(w.finish(group, gate));
  };
  emit(stop_in, "stopword", "input");
  emit(content_in, "content", "input");
  for (int label = 0; label < 3; ++label)
    emit(forget_by_label[static_cast<size_t>(label)], std::string("label:") + label_name(static_cast<Label>(label)),
         "forget");
  for (size_t t = 0; t < named_tokens.size(); ++t) emit(named[t], "token:" + named_tokens[t], "input");
  return report;
}

// Line-delimited records; std is the population standard deviation.
inline void write_gate_stats(const GateStatsReport& report, std::ostream& out) {
  out << "# gate statistics; std is population standard deviation\n";
  for (const GateStats& s : report.stats)
    out << "group=" << s.group << " gate=" << s.gate << " mean=" << format_double(s.mean)
        << " std=" << format_double(s.stddev) << " n=" << s.n << "\n";
  for (const std::string& w : report.warnings) out << "# warning: " << w << "\n";
}

// ----- NULL alignment report ------------------------------------------------

struct NullAlignmentRecord {
  size_t pair_index = 0;
  int position = 0;  // hypothesis position, 0-based
  std::string token;
  double mass = 0.0;  // alpha weight on the NULL slot
};

// Hypothesis tokens whose alignment mass on the NULL slot exceeds threshold.
inline std::vector<NullAlignmentRecord> null_alignment_report(Model& model, const EmbeddingTable& table,
                                                              const Vocabulary& vocab, const Corpus& corpus,
                                                              double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0) && threshold != 1.0)
    throw InvalidInputError("null_alignment_report: threshold must be in (0, 1]");
  std::vector<NullAlignmentRecord> records;
  for (size_t pi = 0; pi < corpus.pairs.size(); ++pi) {
    const LabeledPair& pair = corpus.pairs[pi];
    Tape tape;
    ForwardResult r = model.forward_pair(tape, table, vocab, pair, true);
    for (size_t k = 0; k < pair.hypothesis_tokens.size(); ++k) {
      const double mass = r.trace.alpha[k].at(0);
      if (mass > threshold)
        records.push_back(NullAlignmentRecord{pi, static_cast<int>(k), pair.hypothesis_tokens[k], mass});
    }
  }
  return records;
}

inline void write_null_alignment(const std::vector<NullAlignmentRecord>& records, std::ostream& out) {
  for (const auto& r : records)
    out << "pair=" << r.pair_index << " position=" << r.position << " token=" << r.token
        << " mass=" << format_double(r.mass) << "\n";
}

}  // namespace mlstm

#endif
