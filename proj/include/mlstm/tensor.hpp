#ifndef MLSTM_TENSOR_HPP
#define MLSTM_TENSOR_HPP

#include <cmath>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "mlstm/errors.hpp"

namespace mlstm {

// Dense row-major array of doubles, 1-D or 2-D. Copies share the underlying
// buffer; use clone() when an independent copy is required. Values are meant
// to stay finite: validate_finite() is called by every tape operation.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape) {
    return Tensor(std::move(shape), 0.0);
  }

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_, 0.0); }

  static Tensor full(std::vector<int> shape, double v) {
    return Tensor(std::move(shape), v);
  }

  static Tensor row_vector(std::initializer_list<double> vals) {
    Tensor t({static_cast<int>(vals.size())}, 0.0);
    int i = 0;
    for (double v : vals) t.data()[i++] = v;
    return t;
  }

  static Tensor from(std::vector<int> shape, std::vector<double> vals) {
    Tensor t(std::move(shape), 0.0);
    if (static_cast<size_t>(t.size()) != vals.size())
      throw DimensionError("Tensor::from: data length " + std::to_string(vals.size()) +
                           " does not match shape " + t.shape_str());
    std::copy(vals.begin(), vals.end(), t.data());
    return t;
  }

  int ndim() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int size() const { return size_; }
  bool empty() const { return shape_.empty(); }

  int rows() const { return ndim() == 2 ? shape_[0] : 1; }
  int cols() const { return ndim() == 2 ? shape_[1] : (ndim() == 1 ? shape_[0] : 0); }

  double* data() { return data_->data(); }
  const double* data() const { return data_->data(); }

  double& at(int i) { return (*data_)[static_cast<size_t>(i)]; }
  double at(int i) const { return (*data_)[static_cast<size_t>(i)]; }
  double& at(int r, int c) { return (*data_)[static_cast<size_t>(r) * shape_[1] + c]; }
  double at(int r, int c) const { return (*data_)[static_cast<size_t>(r) * shape_[1] + c]; }

  // Independent deep copy of the buffer.
  Tensor clone() const {
    Tensor t(shape_, 0.0);
    std::memcpy(t.data(), data(), sizeof(double) * static_cast<size_t>(size_));
    return t;
  }

  // Copy of row r of a 2-D tensor as a 1-D vector.
  Tensor row(int r) const {
    if (ndim() != 2) throw DimensionError("Tensor::row: tensor is not 2-D");
    if (r < 0 || r >= rows()) throw IndexError("Tensor::row: row " + std::to_string(r) + " out of range");
    Tensor t({cols()}, 0.0);
    std::memcpy(t.data(), data() + static_cast<size_t>(r) * cols(), sizeof(double) * static_cast<size_t>(cols()));
    return t;
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  void fill(double v) { std::fill(data_->begin(), data_->end(), v); }

  std::string shape_str() const {
    std::string s = "[";
    for (size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += "x";
      s += std::to_string(shape_[i]);
    }
    return s + "]";
  }

  bool all_finite() const {
    for (double v : *data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void validate_finite(const char* where) const {
    if (!all_finite()) throw NumericError(std::string(where) + ": non-finite value in tensor " + shape_str());
  }

 private:
  Tensor(std::vector<int> shape, double init) : shape_(std::move(shape)) {
    if (shape_.empty() || shape_.size() > 2)
      throw DimensionError("Tensor: shape must have 1 or 2 dims, got " + std::to_string(shape_.size()));
    size_ = 1;
    for (int d : shape_) {
      if (d <= 0) throw DimensionError("Tensor: non-positive dim in shape " + shape_str());
      size_ *= d;
    }
    data_ = std::make_shared<std::vector<double>>(static_cast<size_t>(size_), init);
  }

  std::vector<int> shape_;
  int size_ = 0;
  std::shared_ptr<std::vector<double>> data_;
};

// FNV-1a over the raw bytes; used to assert the frozen-embedding contract.
inline uint64_t checksum(const Tensor& t) {
  uint64_t h = 1469598103934665603ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(t.data());
  size_t n = sizeof(double) * static_cast<size_t>(t.size());
  for (size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::mt19937_64 make_rng(uint64_t seed) { return std::mt19937_64(seed); }

inline Tensor uniform_tensor(std::vector<int> shape, double limit, std::mt19937_64& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (int i = 0; i < t.size(); ++i) t.at(i) = dist(rng);
  return t;
}

}  // namespace mlstm

#endif
