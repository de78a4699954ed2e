#ifndef MLSTM_TRAINING_HPP
#define MLSTM_TRAINING_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "mlstm/embeddings.hpp"
#include "mlstm/errors.hpp"
#include "mlstm/matcher.hpp"
#include "mlstm/snli.hpp"
#include "mlstm/tape.hpp"
#include "mlstm/vocab.hpp"

namespace mlstm {

struct TrainConfig {
  double lr0 = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double decay = 0.95;  // per-epoch learning-rate ratio
  int batch_size = 30;
  int epochs = 1;
  uint64_t seed = 0;
  bool shuffle = true;
  double clip_norm = 0.0;  // 0 disables gradient clipping

  void validate() const {
    if (!(decay > 0.0 && decay <= 1.0)) throw InvalidInputError("TrainConfig: decay must be in (0, 1]");
    if (batch_size < 1) throw InvalidInputError("TrainConfig: batch_size must be >= 1");
    if (epochs < 1) throw InvalidInputError("TrainConfig: epochs must be >= 1");
  }
};

// -log(probs[label]) with the probability clamped away from zero.
inline Var cross_entropy(Tape& tape, Var probs, int label) { return tape.pick_neg_log(probs, label); }

// First/second moment accumulators mirroring a ParameterStore, plus the
// global step count.
class AdamState {
 public:
  static AdamState init_like(const ParameterStore& store) {
    AdamState s;
    for (const auto& e : store.entries()) {
      s.m_.push_back(Tensor::zeros_like(e.value));
      s.v_.push_back(Tensor::zeros_like(e.value));
    }
    return s;
  }

  long long step_count() const { return t_; }
  const Tensor& first_moment(size_t i) const { return m_[i]; }
  const Tensor& second_moment(size_t i) const { return v_[i]; }

  friend void adam_step(ParameterStore&, AdamState&, double, const TrainConfig&);

 private:
  std::vector<Tensor> m_, v_;
  long long t_ = 0;
};

// Bias-corrected update from the accumulated gradients; gradients are zeroed
// afterwards. This is the one designated in-place mutation of parameters.
inline void adam_step(ParameterStore& store, AdamState& state, double lr, const TrainConfig& cfg) {
  if (state.m_.size() != store.count()) throw DimensionError("adam_step: state does not mirror the store");
  state.t_ += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t_));
  for (size_t pi = 0; pi < store.count(); ++pi) {
    auto& e = store.entries()[pi];
    Tensor& m = state.m_[pi];
    Tensor& v = state.v_[pi];
    for (int i = 0; i < e.value.size(); ++i) {
      const double g = e.grad.at(i);
      m.at(i) = cfg.beta1 * m.at(i) + (1.0 - cfg.beta1) * g;
      v.at(i) = cfg.beta2 * v.at(i) + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m.at(i) / bc1;
      const double v_hat = v.at(i) / bc2;
      const double upd = lr * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
      if (!std::isfinite(upd)) throw NumericError("adam_step: non-finite update for " + e.name);
      e.value.at(i) -= upd;
    }
  }
  store.zero_grads();
}

struct Batch {
  std::vector<std::vector<int>> premise_ids;  // B rows padded to the batch max
  std::vector<std::vector<int>> hyp_ids;
  std::vector<int> premise_len, hyp_len;
  std::vector<int> labels;
  size_t size() const { return labels.size(); }
};

// Deterministic batching: optional seeded shuffle, padding with the reserved
// pad id up to the per-batch maximum lengths, last batch possibly short.
inline std::vector<Batch> make_batches(const Corpus& corpus, const Vocabulary& vocab, int batch_size,
                                       uint64_t seed, bool shuffle) {
  if (corpus.pairs.empty()) throw InvalidInputError("make_batches: empty corpus");
  if (batch_size < 1) throw InvalidInputError("make_batches: batch_size must be >= 1");
  std::vector<size_t> order(corpus.pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (shuffle) {
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<Batch> batches;
  for (size_t start = 0; start < order.size(); start += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(order.size(), start + static_cast<size_t>(batch_size));
    Batch b;
    size_t max_p = 0, max_h = 0;
    for (size_t i = start; i < end; ++i) {
      const LabeledPair& pair = corpus.pairs[order[i]];
      max_p = std::max(max_p, pair.premise_tokens.size());
      max_h = std::max(max_h, pair.hypothesis_tokens.size());
    }
    for (size_t i = start; i < end; ++i) {
      const LabeledPair& pair = corpus.pairs[order[i]];
      std::vector<int> p = vocab.ids_for(pair.premise_tokens);
      std::vector<int> h = vocab.ids_for(pair.hypothesis_tokens);
      b.premise_len.push_back(static_cast<int>(p.size()));
      b.hyp_len.push_back(static_cast<int>(h.size()));
      p.resize(max_p, Vocabulary::kPad);
      h.resize(max_h, Vocabulary::kPad);
      b.premise_ids.push_back(std::move(p));
      b.hyp_ids.push_back(std::move(h));
      b.labels.push_back(static_cast<int>(pair.label));
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

struct BatchStats {
  double loss_sum = 0.0;
  int correct = 0;
};

inline int argmax3(const Tensor& probs) {
  int best = 0;
  for (int i = 1; i < probs.size(); ++i)
    if (probs.at(i) > probs.at(best)) best = i;
  return best;
}

// Forward/backward for every example of the batch. Unscaled gradients
// accumulate into the store, so the result equals the sum of per-example
// gradients exactly.
inline BatchStats accumulate_batch_gradients(Model& model, const EmbeddingTable& table, const Batch& batch) {
  BatchStats stats;
  for (size_t i = 0; i < batch.size(); ++i) {
    Tape tape;
    ForwardResult r = model.forward(tape, table, batch.premise_ids[i], batch.premise_len[i], batch.hyp_ids[i],
                                    batch.hyp_len[i]);
    Var loss = cross_entropy(tape, r.probs, batch.labels[i]);
    tape.backward(loss);
    stats.loss_sum += tape.value(loss).at(0);
    if (argmax3(tape.value(r.probs)) == batch.labels[i]) ++stats.correct;
  }
  return stats;
}

struct Evaluation {
  std::array<std::array<long long, 3>, 3> confusion{};  // [predicted][gold]
  long long total = 0;
  double accuracy = 0.0;
};

// accuracy = trace / total
inline double accuracy_from_confusion(const std::array<std::array<long long, 3>, 3>& confusion, long long total) {
  long long diag = 0;
  for (int k = 0; k < 3; ++k) diag += confusion[static_cast<size_t>(k)][static_cast<size_t>(k)];
  return total == 0 ? 0.0 : static_cast<double>(diag) / static_cast<double>(total);
}

inline double accuracy_from_confusion(const std::array<std::array<long long, 3>, 3>& confusion) {
  long long total = 0;
  for (int p = 0; p < 3; ++p)
    for (int g = 0; g < 3; ++g) total += confusion[static_cast<size_t>(p)][static_cast<size_t>(g)];
  return accuracy_from_confusion(confusion, total);
}

inline Evaluation evaluate(Model& model, const EmbeddingTable& table, const Vocabulary& vocab,
                           const Corpus& corpus) {
  Evaluation ev;
  for (const LabeledPair& pair : corpus.pairs) {
    Tape tape;
    ForwardResult r = model.forward_pair(tape, table, vocab, pair);
    const int pred = argmax3(tape.value(r.probs));
    ev.confusion[static_cast<size_t>(pred)][static_cast<size_t>(static_cast<int>(pair.label))] += 1;
    ev.total += 1;
  }
  ev.accuracy = accuracy_from_confusion(ev.confusion);
  return ev;
}

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double dev_acc = 0.0;
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string format_epoch_record(const EpochRecord& r) {
  return "epoch=" + std::to_string(r.epoch) + " lr=" + format_double(r.lr) + " train_loss=" +
         format_double(r.train_loss) + " train_acc=" + format_double(r.train_acc) + " dev_acc=" +
         format_double(r.dev_acc);
}

inline std::string format_log_header(const ModelConfig& mc, const TrainConfig& tc) {
  std::string s = "# variant=" + std::string(variant_name(mc.variant)) + " d=" + std::to_string(mc.d) +
                  " embed_dim=" + std::to_string(mc.embed_dim) +
                  " shared_encoder=" + std::to_string(mc.shared_encoder ? 1 : 0);
  s += "\n# lr=" + format_double(tc.lr0) + " beta1=" + format_double(tc.beta1) + " beta2=" +
       format_double(tc.beta2) + " adam_epsilon=" + format_double(tc.adam_epsilon) + " decay=" +
       format_double(tc.decay) + " batch_size=" + std::to_string(tc.batch_size) + " epochs=" +
       std::to_string(tc.epochs) + " seed=" + std::to_string(mc.seed) + " shuffle=" +
       std::to_string(tc.shuffle ? 1 : 0) + " clip_norm=" + format_double(tc.clip_norm);
  return s;
}

struct TrainResult {
  std::vector<EpochRecord> log;
  ParameterStore best_params;
  double best_dev_acc = -1.0;
  int best_epoch = -1;
};

// Mini-batch training with per-epoch learning-rate decay. The loss is
// averaged over the batch (gradients are scaled by 1/B before the update) so
// the learning-rate semantics do not depend on batch size. The best-dev
// parameter snapshot is retained. stop_at_train_acc short-circuits the
// remaining epochs once training accuracy reaches the bound (1.0 keeps every
// epoch unless perfect).
inline TrainResult train(Model& model, const EmbeddingTable& table, const Vocabulary& vocab,
                         const Corpus& train_corpus, const Corpus& dev_corpus, const TrainConfig& cfg,
                         std::vector<std::string>* live_log = nullptr, double stop_at_train_acc = 2.0) {
  cfg.validate();
  if (train_corpus.pairs.empty()) throw InvalidInputError("train: empty training corpus");
  const uint64_t emb_checksum = table.table_checksum();

  AdamState adam = AdamState::init_like(model.store());
  std::mt19937_64 epoch_rng(cfg.seed);
  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.lr0 * std::pow(cfg.decay, static_cast<double>(epoch));
    const uint64_t shuffle_seed = epoch_rng();
    std::vector<Batch> batches = make_batches(train_corpus, vocab, cfg.batch_size, shuffle_seed, cfg.shuffle);
    double loss_sum = 0.0;
    long long correct = 0, seen = 0;
    for (size_t bi = 0; bi < batches.size(); ++bi) {
      const Batch& batch = batches[bi];
      model.store().zero_grads();
      BatchStats stats;
      try {
        stats = accumulate_batch_gradients(model, table, batch);
        model.store().scale_grads(1.0 / static_cast<double>(batch.size()));
        if (cfg.clip_norm > 0.0) {
          double sq = 0.0;
          for (const auto& e : model.store().entries())
            for (int i = 0; i < e.grad.size(); ++i) sq += e.grad.at(i) * e.grad.at(i);
          const double norm = std::sqrt(sq);
          if (norm > cfg.clip_norm) model.store().scale_grads(cfg.clip_norm / norm);
        }
        adam_step(model.store(), adam, lr, cfg);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + " batch " + std::to_string(bi) + ": " + e.what());
      }
      loss_sum += stats.loss_sum;
      correct += stats.correct;
      seen += static_cast<long long>(batch.size());
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = loss_sum / static_cast<double>(seen);
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(seen);
    rec.dev_acc = dev_corpus.pairs.empty() ? 0.0 : evaluate(model, table, vocab, dev_corpus).accuracy;
    result.log.push_back(rec);
    if (live_log) live_log->push_back(format_epoch_record(rec));

    if (rec.dev_acc > result.best_dev_acc) {
      result.best_dev_acc = rec.dev_acc;
      result.best_epoch = epoch;
      result.best_params = model.store().clone();
    }
    if (rec.train_acc >= stop_at_train_acc) break;
  }
  if (result.best_epoch < 0) {
    result.best_params = model.store().clone();
    result.best_epoch = cfg.epochs - 1;
  }
  if (table.table_checksum() != emb_checksum)
    throw NumericError("train: frozen embedding table was modified");
  return result;
}

}  // namespace mlstm

#endif
