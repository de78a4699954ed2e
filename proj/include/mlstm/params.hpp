#ifndef MLSTM_PARAMS_HPP
#define MLSTM_PARAMS_HPP

#include <string>
#include <unordered_map>
#include <vector>

#include "mlstm/errors.hpp"
#include "mlstm/tensor.hpp"

namespace mlstm {

// Named trainable tensors with paired gradient accumulators. Iteration order
// is insertion order, which fixes the checkpoint block layout and the
// optimizer update order. Frozen word embeddings are never stored here.
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor grad;
  };

  Tensor& add(const std::string& name, Tensor init) {
    if (index_.count(name)) throw InvalidInputError("ParameterStore: duplicate parameter " + name);
    index_[name] = static_cast<int>(entries_.size());
    entries_.push_back(Entry{name, std::move(init), Tensor()});
    entries_.back().grad = Tensor::zeros_like(entries_.back().value);
    return entries_.back().value;
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  Entry& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw IndexError("ParameterStore: unknown parameter " + name);
    return entries_[static_cast<size_t>(it->second)];
  }
  const Entry& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw IndexError("ParameterStore: unknown parameter " + name);
    return entries_[static_cast<size_t>(it->second)];
  }

  const Tensor& value(const std::string& name) const { return at(name).value; }
  Tensor& grad(const std::string& name) { return at(name).grad; }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  size_t count() const { return entries_.size(); }

  void zero_grads() {
    for (auto& e : entries_) e.grad.fill(0.0);
  }

  void scale_grads(double c) {
    for (auto& e : entries_)
      for (int i = 0; i < e.grad.size(); ++i) e.grad.at(i) *= c;
  }

  // Number of trainable scalars across all entries.
  long long scalar_count() const {
    long long n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
  }

  // Deep copy (values and grads own fresh buffers).
  ParameterStore clone() const {
    ParameterStore s;
    for (const auto& e : entries_) {
      s.add(e.name, e.value.clone());
      s.at(e.name).grad = e.grad.clone();
    }
    return s;
  }

  // Copy values from another store with identical layout.
  void copy_values_from(const ParameterStore& other) {
    if (other.count() != count()) throw DimensionError("ParameterStore: layout mismatch in copy");
    for (size_t i = 0; i < entries_.size(); ++i) {
      const Entry& src = other.entries_[i];
      Entry& dst = entries_[i];
      if (src.name != dst.name || !src.value.same_shape(dst.value))
        throw DimensionError("ParameterStore: layout mismatch at " + dst.name);
      std::memcpy(dst.value.data(), src.value.data(), sizeof(double) * static_cast<size_t>(src.value.size()));
    }
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace mlstm

#endif
