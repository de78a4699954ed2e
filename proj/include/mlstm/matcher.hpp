#ifndef MLSTM_MATCHER_HPP
#define MLSTM_MATCHER_HPP

#include <string>
#include <vector>

#include "mlstm/attention.hpp"
#include "mlstm/embeddings.hpp"
#include "mlstm/encoder.hpp"
#include "mlstm/errors.hpp"
#include "mlstm/snli.hpp"
#include "mlstm/tape.hpp"
#include "mlstm/vocab.hpp"

namespace mlstm {

enum class ModelVariant {
  wbw_attention_baseline,  // attention + aggregation RNN, predicts from [h_a_N; h_t_N]
  mlstm,                   // match recurrence over [a_k; h_t_k], predicts from h_m_N
  mlstm_bilstm,            // same with bidirectional sentence encoding
  mlstm_word_embedding,    // same, attending over raw embedding rows
};

inline const char* variant_name(ModelVariant v) {
  switch (v) {
    case ModelVariant::wbw_attention_baseline: return "wbw_attention_baseline";
    case ModelVariant::mlstm: return "mlstm";
    case ModelVariant::mlstm_bilstm: return "mlstm_bilstm";
    case ModelVariant::mlstm_word_embedding: return "mlstm_word_embedding";
  }
  return "?";
}

inline ModelVariant variant_from_string(const std::string& s) {
  if (s == "wbw_attention_baseline") return ModelVariant::wbw_attention_baseline;
  if (s == "mlstm") return ModelVariant::mlstm;
  if (s == "mlstm_bilstm") return ModelVariant::mlstm_bilstm;
  if (s == "mlstm_word_embedding") return ModelVariant::mlstm_word_embedding;
  throw InvalidInputError("unknown variant \"" + s + "\"");
}

struct ModelConfig {
  ModelVariant variant = ModelVariant::mlstm;
  int d = 150;
  int embed_dim = 300;
  bool shared_encoder = true;
  uint64_t seed = 0;
};

// Per-position record of what the match recurrence did: one alignment row
// over NULL + premise positions, the gate vectors, and the hidden state.
// Exactly one entry per real hypothesis position, never for padding. The
// baseline head has no gates; its gate vectors stay empty.
struct MatchTrace {
  std::vector<Tensor> alpha;
  std::vector<Tensor> gate_i, gate_f, gate_o;
  std::vector<Tensor> hidden;
};

// One match step: m_k = [a_k; h_t_k] fed through the gate recurrence.
inline LstmStepResult match_step(Tape& tape, const LstmVars& w, Var a_k, Var h_t_k, Var h_prev, Var c_prev) {
  const Tensor av = tape.value(a_k);
  const Tensor hv = tape.value(h_t_k);
  if (av.size() != hv.size())
    throw DimensionError("match_step: a_k" + av.shape_str() + " vs h_t_k" + hv.shape_str());
  return lstm_step(tape, w, tape.concat(a_k, h_t_k), h_prev, c_prev);
}

struct RunMatchResult {
  Var h_final;
  MatchTrace trace;
};

// Iterates the hypothesis positions 1..N: score against the bank with the
// previous match state as the recurrent argument, normalize, attend, then
// one match step. Returns the state at the true length plus the full trace.
inline RunMatchResult run_match(Tape& tape, const PremiseBankVars& bank, const std::vector<Var>& hyp_states,
                                int hyp_len, const AttentionVars& att, const LstmVars& match_vars,
                                bool want_trace = false) {
  if (hyp_len < 1 || hyp_len > static_cast<int>(hyp_states.size()))
    throw IndexError("run_match: hypothesis length " + std::to_string(hyp_len) + " out of bounds");
  const int d_out = tape.value(hyp_states[0]).size();
  std::vector<Var> premise_proj = project_premise(tape, att, bank);
  RunMatchResult out;
  Var h = tape.zero_vector(d_out);
  Var c = tape.zero_vector(d_out);
  for (int k = 0; k < hyp_len; ++k) {
    Var h_t_k = hyp_states[static_cast<size_t>(k)];
    Var scores = attention_scores(tape, bank, premise_proj, h_t_k, h, att);
    Var alpha = attention_weights(tape, scores, bank.mask);
    Var a_k = attend(tape, alpha, bank);
    LstmStepResult r = match_step(tape, match_vars, a_k, h_t_k, h, c);
    h = r.h;
    c = r.c;
    if (want_trace) {
      out.trace.alpha.push_back(tape.value(alpha));
      out.trace.gate_i.push_back(tape.value(r.gate_i));
      out.trace.gate_f.push_back(tape.value(r.gate_f));
      out.trace.gate_o.push_back(tape.value(r.gate_o));
      out.trace.hidden.push_back(tape.value(h));
    }
  }
  out.h_final = h;
  return out;
}

// softmax(W h + b) over the three classes.
inline Var classify(Tape& tape, Var features, Var W, Var b) {
  Var logits = tape.affine(features, W, b);
  return tape.masked_softmax(logits, std::vector<bool>(static_cast<size_t>(kNumClasses), true));
}

struct ForwardResult {
  Var probs;    // entailment, contradiction, neutral
  Var h_final;  // h_m_N (or h_a_N for the baseline)
  MatchTrace trace;
};

// The assembled classifier: frozen embeddings in, class distribution out.
// Parameter registration order (encoder, attention, matcher, classifier)
// fixes the checkpoint layout.
class Model {
 public:
  explicit Model(const ModelConfig& cfg) : cfg_(cfg) {
    std::mt19937_64 rng(cfg.seed);
    const EncoderConfig enc = encoder_config();
    if (enc.variant != EncoderVariant::identity) {
      if (cfg_.shared_encoder) {
        add_encoder(enc, "enc", rng);
      } else {
        add_encoder(enc, "enc_p", rng);
        add_encoder(enc, "enc_h", rng);
      }
    }
    const int dout = d_out();
    const bool baseline = cfg_.variant == ModelVariant::wbw_attention_baseline;
    add_attention_params(store_, dout, baseline, rng);
    if (!baseline) add_lstm_params(store_, "match", dout, 2 * dout, rng);
    const int feat = baseline ? 2 * dout : dout;
    const double lim = std::sqrt(6.0 / (feat + kNumClasses));
    store_.add("cls.W", uniform_tensor({kNumClasses, feat}, lim, rng));
    store_.add("cls.b", Tensor::zeros({kNumClasses}));
  }

  const ModelConfig& config() const { return cfg_; }
  ParameterStore& store() { return store_; }
  const ParameterStore& store() const { return store_; }

  EncoderConfig encoder_config() const {
    EncoderConfig enc;
    enc.d = cfg_.d;
    enc.shared = cfg_.shared_encoder;
    switch (cfg_.variant) {
      case ModelVariant::mlstm_bilstm: enc.variant = EncoderVariant::bilstm; break;
      case ModelVariant::mlstm_word_embedding: enc.variant = EncoderVariant::identity; break;
      default: enc.variant = EncoderVariant::lstm; break;
    }
    return enc;
  }

  int d_out() const { return encoder_config().d_out(cfg_.embed_dim); }

  // Trainable scalars; the frozen embedding table is not counted.
  long long count_parameters() const { return store_.scalar_count(); }

  // ids may carry trailing padding; len gives the real token count.
  ForwardResult forward(Tape& tape, const EmbeddingTable& table, const std::vector<int>& premise_ids,
                        int premise_len, const std::vector<int>& hyp_ids, int hyp_len,
                        bool want_trace = false) {
    if (premise_ids.empty() || premise_len < 1) throw InvalidInputError("forward: empty premise");
    if (hyp_ids.empty() || hyp_len < 1) throw InvalidInputError("forward: empty hypothesis");
    if (premise_len > static_cast<int>(premise_ids.size()) || hyp_len > static_cast<int>(hyp_ids.size()))
      throw IndexError("forward: length exceeds id sequence");
    if (table.dim != cfg_.embed_dim)
      throw DimensionError("forward: table dim " + std::to_string(table.dim) + " vs config embed_dim " +
                           std::to_string(cfg_.embed_dim));

    const EncoderConfig enc = encoder_config();
    auto embed_rows = [&](const std::vector<int>& ids) {
      Tensor mat = lookup(ids, table);
      std::vector<Var> rows;
      rows.reserve(ids.size());
      for (int r = 0; r < mat.rows(); ++r) rows.push_back(tape.input(mat.row(r)));
      return rows;
    };
    std::vector<Var> premise_states =
        encode(tape, store_, enc, embed_rows(premise_ids), premise_len, cfg_.shared_encoder ? "enc" : "enc_p");
    std::vector<Var> hyp_states =
        encode(tape, store_, enc, embed_rows(hyp_ids), hyp_len, cfg_.shared_encoder ? "enc" : "enc_h");
    PremiseBankVars bank = build_premise_bank(tape, premise_states, premise_len);

    const bool baseline = cfg_.variant == ModelVariant::wbw_attention_baseline;
    AttentionVars att = bind_attention(tape, store_, baseline);

    ForwardResult out;
    Var feat;
    if (baseline) {
      const int dout = d_out();
      std::vector<Var> premise_proj = project_premise(tape, att, bank);
      Var h_a = tape.zero_vector(dout);
      for (int k = 0; k < hyp_len; ++k) {
        Var h_t_k = hyp_states[static_cast<size_t>(k)];
        Var scores = attention_scores(tape, bank, premise_proj, h_t_k, h_a, att);
        Var alpha = attention_weights(tape, scores, bank.mask);
        Var a_k = attend(tape, alpha, bank);
        h_a = aggregate_rnn_step(tape, a_k, h_a, att.V_a);
        if (want_trace) {
          out.trace.alpha.push_back(tape.value(alpha));
          out.trace.hidden.push_back(tape.value(h_a));
        }
      }
      out.h_final = h_a;
      feat = tape.concat(h_a, hyp_states[static_cast<size_t>(hyp_len - 1)]);
    } else {
      LstmVars match_vars = bind_lstm(tape, store_, "match");
      RunMatchResult r = run_match(tape, bank, hyp_states, hyp_len, att, match_vars, want_trace);
      out.h_final = r.h_final;
      out.trace = std::move(r.trace);
      feat = r.h_final;
    }
    auto& W = store_.at("cls.W");
    auto& b = store_.at("cls.b");
    out.probs = classify(tape, feat, tape.param(W.value, W.grad), tape.param(b.value, b.grad));
    return out;
  }

  // Convenience for unpadded token sequences.
  ForwardResult forward_pair(Tape& tape, const EmbeddingTable& table, const Vocabulary& vocab,
                             const LabeledPair& pair, bool want_trace = false) {
    std::vector<int> p = vocab.ids_for(pair.premise_tokens);
    std::vector<int> h = vocab.ids_for(pair.hypothesis_tokens);
    return forward(tape, table, p, static_cast<int>(p.size()), h, static_cast<int>(h.size()), want_trace);
  }

 private:
  void add_encoder(const EncoderConfig& enc, const std::string& prefix, std::mt19937_64& rng) {
    if (enc.variant == EncoderVariant::bilstm) {
      add_lstm_params(store_, prefix + ".fw", enc.d, cfg_.embed_dim, rng);
      add_lstm_params(store_, prefix + ".bw", enc.d, cfg_.embed_dim, rng);
    } else {
      add_lstm_params(store_, prefix, enc.d, cfg_.embed_dim, rng);
    }
  }

  ModelConfig cfg_;
  ParameterStore store_;
};

}  // namespace mlstm

#endif
