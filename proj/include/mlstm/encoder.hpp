#ifndef MLSTM_ENCODER_HPP
#define MLSTM_ENCODER_HPP

#include <cmath>
#include <string>
#include <vector>

#include "mlstm/errors.hpp"
#include "mlstm/params.hpp"
#include "mlstm/tape.hpp"

namespace mlstm {

enum class EncoderVariant { lstm, bilstm, identity };

struct EncoderConfig {
  int d = 0;
  EncoderVariant variant = EncoderVariant::lstm;
  bool shared = true;  // one parameter set for premise and hypothesis

  // identity passes embedding rows through, so its output width is the
  // embedding dimension; bilstm concatenates two directional passes.
  int d_out(int embed_dim) const {
    switch (variant) {
      case EncoderVariant::lstm: return d;
      case EncoderVariant::bilstm: return 2 * d;
      case EncoderVariant::identity: return embed_dim;
    }
    return d;
  }
};

// Gate parameter block: W [d x l_in], V [d x d], b [d] for each of the
// input/forget/output gates and the cell candidate. Weight matrices start
// uniform in +-sqrt(6 / (fan_in + fan_out)); biases start at zero. The
// insertion order here fixes the checkpoint layout.
inline void add_lstm_params(ParameterStore& store, const std::string& prefix, int d, int l_in,
                            std::mt19937_64& rng) {
  const double wlim = std::sqrt(6.0 / (l_in + d));
  const double vlim = std::sqrt(6.0 / (d + d));
  for (const char* gate : {"i", "f", "o", "c"}) {
    store.add(prefix + ".W_" + gate, uniform_tensor({d, l_in}, wlim, rng));
    store.add(prefix + ".V_" + gate, uniform_tensor({d, d}, vlim, rng));
    store.add(prefix + ".b_" + gate, Tensor::zeros({d}));
  }
}

// Tape handles for one gate block.
struct LstmVars {
  Var Wi, Vi, bi, Wf, Vf, bf, Wo, Vo, bo, Wc, Vc, bc;
};

inline LstmVars bind_lstm(Tape& tape, ParameterStore& store, const std::string& prefix) {
  auto p = [&](const std::string& name) {
    auto& e = store.at(prefix + "." + name);
    return tape.param(e.value, e.grad);
  };
  LstmVars v;
  v.Wi = p("W_i"); v.Vi = p("V_i"); v.bi = p("b_i");
  v.Wf = p("W_f"); v.Vf = p("V_f"); v.bf = p("b_f");
  v.Wo = p("W_o"); v.Vo = p("V_o"); v.bo = p("b_o");
  v.Wc = p("W_c"); v.Vc = p("V_c"); v.bc = p("b_c");
  return v;
}

struct LstmStepResult {
  Var h, c;
  Var gate_i, gate_f, gate_o;
};

// One recurrence step: sigmoid gates and tanh candidate from affine
// transforms of the input and the previous hidden state, then the cell and
// hidden updates. Gate vectors are returned for introspection.
inline LstmStepResult lstm_step(Tape& tape, const LstmVars& w, Var x, Var h_prev, Var c_prev) {
  Var i = tape.sigmoid(tape.add(tape.affine(x, w.Wi, w.bi), tape.matvec(w.Vi, h_prev)));
  Var f = tape.sigmoid(tape.add(tape.affine(x, w.Wf, w.bf), tape.matvec(w.Vf, h_prev)));
  Var o = tape.sigmoid(tape.add(tape.affine(x, w.Wo, w.bo), tape.matvec(w.Vo, h_prev)));
  Var cand = tape.tanh(tape.add(tape.affine(x, w.Wc, w.bc), tape.matvec(w.Vc, h_prev)));
  Var c = tape.add(tape.mul(f, c_prev), tape.mul(i, cand));
  Var h = tape.mul(o, tape.tanh(c));
  return LstmStepResult{h, c, i, f, o};
}

// Sentence states from embedded rows. xs may contain padding rows past len;
// the unidirectional pass runs over all of them from a zero initial state
// (consumers mask them out), while the right-to-left pass of the bilstm
// variant starts at the true length so that padding cannot leak into real
// positions. Rows past len in the bilstm/identity output keep zero backward
// halves.
inline std::vector<Var> encode(Tape& tape, ParameterStore& store, const EncoderConfig& cfg,
                               const std::vector<Var>& xs, int len, const std::string& prefix) {
  const int n = static_cast<int>(xs.size());
  if (len < 1 || len > n)
    throw IndexError("encode: length " + std::to_string(len) + " out of bounds for " + std::to_string(n) + " rows");
  if (cfg.variant == EncoderVariant::identity) return xs;

  if (cfg.variant == EncoderVariant::lstm) {
    LstmVars w = bind_lstm(tape, store, prefix);
    Var h = tape.zero_vector(cfg.d);
    Var c = tape.zero_vector(cfg.d);
    std::vector<Var> states;
    states.reserve(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) {
      LstmStepResult r = lstm_step(tape, w, xs[static_cast<size_t>(k)], h, c);
      h = r.h;
      c = r.c;
      states.push_back(h);
    }
    return states;
  }

  // bilstm
  LstmVars wf = bind_lstm(tape, store, prefix + ".fw");
  LstmVars wb = bind_lstm(tape, store, prefix + ".bw");
  std::vector<Var> fw(static_cast<size_t>(n));
  {
    Var h = tape.zero_vector(cfg.d), c = tape.zero_vector(cfg.d);
    for (int k = 0; k < n; ++k) {
      LstmStepResult r = lstm_step(tape, wf, xs[static_cast<size_t>(k)], h, c);
      h = r.h;
      c = r.c;
      fw[static_cast<size_t>(k)] = h;
    }
  }
  std::vector<Var> bw(static_cast<size_t>(n));
  {
    Var h = tape.zero_vector(cfg.d), c = tape.zero_vector(cfg.d);
    for (int k = len - 1; k >= 0; --k) {
      LstmStepResult r = lstm_step(tape, wb, xs[static_cast<size_t>(k)], h, c);
      h = r.h;
      c = r.c;
      bw[static_cast<size_t>(k)] = h;
    }
    for (int k = len; k < n; ++k) bw[static_cast<size_t>(k)] = tape.zero_vector(cfg.d);
  }
  std::vector<Var> states;
  states.reserve(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) states.push_back(tape.concat(fw[static_cast<size_t>(k)], bw[static_cast<size_t>(k)]));
  return states;
}

}  // namespace mlstm

#endif
