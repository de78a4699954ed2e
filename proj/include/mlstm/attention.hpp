#ifndef MLSTM_ATTENTION_HPP
#define MLSTM_ATTENTION_HPP

#include <cmath>
#include <string>
#include <vector>

#include "mlstm/errors.hpp"
#include "mlstm/params.hpp"
#include "mlstm/tape.hpp"

namespace mlstm {

// Premise hidden states with the NULL slot prepended at row 0. The NULL row
// is the raw zero vector (it bypasses the encoder), so a hypothesis word may
// align with nothing. The mask is true for NULL plus the real premise
// positions; padded rows stay masked out of every softmax.
struct PremiseBankVars {
  std::vector<Var> rows;       // M+1 entries, row 0 = NULL
  std::vector<bool> mask;      // mask[0] = true
  int premise_len = 0;         // real positions (excluding NULL)
};

inline PremiseBankVars build_premise_bank(Tape& tape, const std::vector<Var>& premise_states, int len) {
  const int m = static_cast<int>(premise_states.size());
  if (len < 1 || len > m)
    throw IndexError("premise bank: length " + std::to_string(len) + " out of bounds for " + std::to_string(m) +
                     " states");
  PremiseBankVars bank;
  bank.premise_len = len;
  bank.rows.reserve(static_cast<size_t>(m) + 1);
  bank.mask.reserve(static_cast<size_t>(m) + 1);
  bank.rows.push_back(tape.zero_vector(tape.value(premise_states[0]).size()));
  bank.mask.push_back(true);
  for (int j = 0; j < m; ++j) {
    bank.rows.push_back(premise_states[static_cast<size_t>(j)]);
    bank.mask.push_back(j < len);
  }
  return bank;
}

// Score parameters. W_r multiplies the recurrent state that distinguishes
// the two attention variants: the aggregation state for the baseline, the
// match state otherwise. V_a exists only for the baseline's aggregation RNN.
inline void add_attention_params(ParameterStore& store, int d_out, bool baseline, std::mt19937_64& rng) {
  const double lim = std::sqrt(6.0 / (d_out + d_out));
  store.add("att.w_e", uniform_tensor({d_out}, std::sqrt(6.0 / (d_out + 1)), rng));
  store.add("att.W_s", uniform_tensor({d_out, d_out}, lim, rng));
  store.add("att.W_t", uniform_tensor({d_out, d_out}, lim, rng));
  store.add("att.W_r", uniform_tensor({d_out, d_out}, lim, rng));
  if (baseline) store.add("att.V_a", uniform_tensor({d_out, d_out}, lim, rng));
}

struct AttentionVars {
  Var w_e, W_s, W_t, W_r;
  Var V_a;  // baseline only
};

inline AttentionVars bind_attention(Tape& tape, ParameterStore& store, bool baseline) {
  auto p = [&](const std::string& name) {
    auto& e = store.at(name);
    return tape.param(e.value, e.grad);
  };
  AttentionVars v;
  v.w_e = p("att.w_e");
  v.W_s = p("att.W_s");
  v.W_t = p("att.W_t");
  v.W_r = p("att.W_r");
  if (baseline) v.V_a = p("att.V_a");
  return v;
}

// W_s h_j for every unmasked bank row; this factor of the score kernel does
// not depend on the hypothesis position, so it is computed once per pair.
inline std::vector<Var> project_premise(Tape& tape, const AttentionVars& att, const PremiseBankVars& bank) {
  std::vector<Var> proj(bank.rows.size());
  for (size_t j = 0; j < bank.rows.size(); ++j)
    if (bank.mask[j]) proj[j] = tape.matvec(att.W_s, bank.rows[j]);
  return proj;
}

// Score vector over NULL + premise positions for one hypothesis position:
// e_j = w_e . tanh(W_s h_j + W_t h_t + W_r h_rec). There is no bias inside
// the tanh. Masked rows get a constant zero entry that the softmax ignores.
inline Var attention_scores(Tape& tape, const PremiseBankVars& bank, const std::vector<Var>& premise_proj,
                            Var h_t_k, Var h_rec_prev, const AttentionVars& att) {
  Var common = tape.add(tape.matvec(att.W_t, h_t_k), tape.matvec(att.W_r, h_rec_prev));
  std::vector<Var> scores(bank.rows.size());
  Var zero;
  for (size_t j = 0; j < bank.rows.size(); ++j) {
    if (!bank.mask[j]) {
      if (!zero.valid()) zero = tape.zero_vector(1);
      scores[j] = zero;
      continue;
    }
    scores[j] = tape.dot(att.w_e, tape.tanh(tape.add(premise_proj[j], common)));
  }
  return tape.stack(scores);
}

inline Var attention_scores(Tape& tape, const PremiseBankVars& bank, Var h_t_k, Var h_rec_prev,
                            const AttentionVars& att) {
  return attention_scores(tape, bank, project_premise(tape, att, bank), h_t_k, h_rec_prev, att);
}

// Alignment weights alpha_k over the bank rows.
inline Var attention_weights(Tape& tape, Var scores, const std::vector<bool>& mask) {
  return tape.masked_softmax(scores, mask);
}

// a_k = sum_j alpha_kj h_j; the NULL row contributes zero by construction.
inline Var attend(Tape& tape, Var alpha, const PremiseBankVars& bank) {
  return tape.attend(alpha, bank.rows, bank.mask);
}

// Aggregation RNN of the baseline: h_a_k = a_k + tanh(V_a h_a_{k-1}).
inline Var aggregate_rnn_step(Tape& tape, Var a_k, Var h_a_prev, Var V_a) {
  return tape.add(a_k, tape.tanh(tape.matvec(V_a, h_a_prev)));
}

}  // namespace mlstm

#endif
