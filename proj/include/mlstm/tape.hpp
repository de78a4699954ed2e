#ifndef MLSTM_TAPE_HPP
#define MLSTM_TAPE_HPP

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mlstm/errors.hpp"
#include "mlstm/tensor.hpp"

namespace mlstm {

// Handle into a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode evaluation tape. Every operation appends a node holding the
// forward value and a backward closure; backward() sweeps the nodes in
// reverse creation order, which is a valid topological order because inputs
// always precede outputs. A tape is confined to one evaluation and freed
// afterwards. Parameter leaves carry a sink pointer; their accumulated
// gradients are added into the sink at the end of the sweep.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var input(Tensor v) {
    v.validate_finite("tape input");
    return push(std::move(v), nullptr, {});
  }

  Var param(const Tensor& value, Tensor& grad_sink) {
    if (!value.same_shape(grad_sink))
      throw DimensionError("tape param: grad sink shape " + grad_sink.shape_str() +
                           " does not match value " + value.shape_str());
    value.validate_finite("tape param");
    return push(value, &grad_sink, {});
  }

  Var zero_vector(int n) { return push(Tensor::zeros({n}), nullptr, {}); }

  // Returned tensor shares the node's buffer (cheap) and stays valid across
  // later pushes; treat it as read-only.
  Tensor value(Var v) const { return nodes_[check(v)].value; }

  Tensor& grad(Var v) {
    Node& n = nodes_[check(v)];
    if (n.grad.empty()) n.grad = Tensor::zeros_like(n.value);
    return n.grad;
  }

  bool grad_touched(Var v) const { return !nodes_[check(v)].grad.empty(); }

  // W[d x m] * x[m] + b[d]
  Var affine(Var x, Var W, Var b) {
    const Tensor& xv = value(x);
    const Tensor& Wv = value(W);
    const Tensor& bv = value(b);
    if (Wv.ndim() != 2 || xv.ndim() != 1 || bv.ndim() != 1 || Wv.cols() != xv.size() || Wv.rows() != bv.size())
      throw DimensionError("affine: incompatible operands W" + Wv.shape_str() + " x" + xv.shape_str() +
                           " b" + bv.shape_str());
    const int d = Wv.rows(), m = Wv.cols();
    Tensor out = Tensor::zeros({d});
    for (int r = 0; r < d; ++r) {
      double acc = bv.at(r);
      const double* wrow = Wv.data() + static_cast<size_t>(r) * m;
      for (int c = 0; c < m; ++c) acc += wrow[c] * xv.at(c);
      out.at(r) = acc;
    }
    return push(std::move(out), nullptr, [this, x, W, b, d, m](const Tensor& g) {
      const Tensor& xv = value(x);
      const Tensor& Wv = value(W);
      Tensor& gx = grad(x);
      Tensor& gW = grad(W);
      Tensor& gb = grad(b);
      for (int r = 0; r < d; ++r) {
        const double gr = g.at(r);
        gb.at(r) += gr;
        const double* wrow = Wv.data() + static_cast<size_t>(r) * m;
        double* gwrow = gW.data() + static_cast<size_t>(r) * m;
        for (int c = 0; c < m; ++c) {
          gwrow[c] += gr * xv.at(c);
          gx.at(c) += gr * wrow[c];
        }
      }
    });
  }

  // W[d x m] * x[m]
  Var matvec(Var W, Var x) {
    const Tensor& Wv = value(W);
    const Tensor& xv = value(x);
    if (Wv.ndim() != 2 || xv.ndim() != 1 || Wv.cols() != xv.size())
      throw DimensionError("matvec: incompatible operands W" + Wv.shape_str() + " x" + xv.shape_str());
    const int d = Wv.rows(), m = Wv.cols();
    Tensor out = Tensor::zeros({d});
    for (int r = 0; r < d; ++r) {
      double acc = 0.0;
      const double* wrow = Wv.data() + static_cast<size_t>(r) * m;
      for (int c = 0; c < m; ++c) acc += wrow[c] * xv.at(c);
      out.at(r) = acc;
    }
    return push(std::move(out), nullptr, [this, W, x, d, m](const Tensor& g) {
      const Tensor& Wv = value(W);
      const Tensor& xv = value(x);
      Tensor& gW = grad(W);
      Tensor& gx = grad(x);
      for (int r = 0; r < d; ++r) {
        const double gr = g.at(r);
        const double* wrow = Wv.data() + static_cast<size_t>(r) * m;
        double* gwrow = gW.data() + static_cast<size_t>(r) * m;
        for (int c = 0; c < m; ++c) {
          gwrow[c] += gr * xv.at(c);
          gx.at(c) += gr * wrow[c];
        }
      }
    });
  }

  Var add(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (!av.same_shape(bv))
      throw DimensionError("add: shape mismatch " + av.shape_str() + " vs " + bv.shape_str());
    Tensor out = Tensor::zeros_like(av);
    for (int i = 0; i < av.size(); ++i) out.at(i) = av.at(i) + bv.at(i);
    return push(std::move(out), nullptr, [this, a, b](const Tensor& g) {
      Tensor& ga = grad(a);
      Tensor& gb = grad(b);
      for (int i = 0; i < g.size(); ++i) {
        ga.at(i) += g.at(i);
        gb.at(i) += g.at(i);
      }
    });
  }

  Var mul(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (!av.same_shape(bv))
      throw DimensionError("multiply: shape mismatch " + av.shape_str() + " vs " + bv.shape_str());
    Tensor out = Tensor::zeros_like(av);
    for (int i = 0; i < av.size(); ++i) out.at(i) = av.at(i) * bv.at(i);
    return push(std::move(out), nullptr, [this, a, b](const Tensor& g) {
      const Tensor& av = value(a);
      const Tensor& bv = value(b);
      Tensor& ga = grad(a);
      Tensor& gb = grad(b);
      for (int i = 0; i < g.size(); ++i) {
        ga.at(i) += g.at(i) * bv.at(i);
        gb.at(i) += g.at(i) * av.at(i);
      }
    });
  }

  Var sigmoid(Var x) {
    const Tensor& xv = value(x);
    Tensor out = Tensor::zeros_like(xv);
    for (int i = 0; i < xv.size(); ++i) out.at(i) = 1.0 / (1.0 + std::exp(-xv.at(i)));
    Var y = push(std::move(out), nullptr, {});
    nodes_[static_cast<size_t>(y.id)].backward = [this, x, y](const Tensor& g) {
      const Tensor& yv = value(y);
      Tensor& gx = grad(x);
      for (int i = 0; i < g.size(); ++i) gx.at(i) += g.at(i) * yv.at(i) * (1.0 - yv.at(i));
    };
    return y;
  }

  Var tanh(Var x) {
    const Tensor& xv = value(x);
    Tensor out = Tensor::zeros_like(xv);
    for (int i = 0; i < xv.size(); ++i) out.at(i) = std::tanh(xv.at(i));
    Var y = push(std::move(out), nullptr, {});
    nodes_[static_cast<size_t>(y.id)].backward = [this, x, y](const Tensor& g) {
      const Tensor& yv = value(y);
      Tensor& gx = grad(x);
      for (int i = 0; i < g.size(); ++i) gx.at(i) += g.at(i) * (1.0 - yv.at(i) * yv.at(i));
    };
    return y;
  }

  // a[p] ++ b[q] -> [p+q]; backward splits the incoming gradient at p.
  Var concat(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.ndim() != 1 || bv.ndim() != 1)
      throw DimensionError("concat: operands must be vectors, got " + av.shape_str() + " and " + bv.shape_str());
    const int p = av.size(), q = bv.size();
    Tensor out = Tensor::zeros({p + q});
    for (int i = 0; i < p; ++i) out.at(i) = av.at(i);
    for (int i = 0; i < q; ++i) out.at(p + i) = bv.at(i);
    return push(std::move(out), nullptr, [this, a, b, p, q](const Tensor& g) {
      Tensor& ga = grad(a);
      Tensor& gb = grad(b);
      for (int i = 0; i < p; ++i) ga.at(i) += g.at(i);
      for (int i = 0; i < q; ++i) gb.at(i) += g.at(p + i);
    });
  }

  // Dot product of two equal-length vectors; result has shape [1].
  Var dot(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.ndim() != 1 || !av.same_shape(bv))
      throw DimensionError("dot: shape mismatch " + av.shape_str() + " vs " + bv.shape_str());
    double acc = 0.0;
    for (int i = 0; i < av.size(); ++i) acc += av.at(i) * bv.at(i);
    Tensor out = Tensor::zeros({1});
    out.at(0) = acc;
    return push(std::move(out), nullptr, [this, a, b](const Tensor& g) {
      const Tensor& av = value(a);
      const Tensor& bv = value(b);
      Tensor& ga = grad(a);
      Tensor& gb = grad(b);
      const double gs = g.at(0);
      for (int i = 0; i < av.size(); ++i) {
        ga.at(i) += gs * bv.at(i);
        gb.at(i) += gs * av.at(i);
      }
    });
  }

  // Assemble shape-[1] scalars into one vector.
  Var stack(const std::vector<Var>& scalars) {
    if (scalars.empty()) throw DimensionError("stack: no operands");
    Tensor out = Tensor::zeros({static_cast<int>(scalars.size())});
    for (size_t i = 0; i < scalars.size(); ++i) {
      const Tensor& sv = value(scalars[i]);
      if (sv.size() != 1) throw DimensionError("stack: operand " + std::to_string(i) + " is not scalar");
      out.at(static_cast<int>(i)) = sv.at(0);
    }
    return push(std::move(out), nullptr, [this, scalars](const Tensor& g) {
      for (size_t i = 0; i < scalars.size(); ++i) grad(scalars[i]).at(0) += g.at(static_cast<int>(i));
    });
  }

  Var sum(Var x) {
    const Tensor& xv = value(x);
    double acc = 0.0;
    for (int i = 0; i < xv.size(); ++i) acc += xv.at(i);
    Tensor out = Tensor::zeros({1});
    out.at(0) = acc;
    return push(std::move(out), nullptr, [this, x](const Tensor& g) {
      Tensor& gx = grad(x);
      for (int i = 0; i < gx.size(); ++i) gx.at(i) += g.at(0);
    });
  }

  Var scale(Var x, double c) {
    const Tensor& xv = value(x);
    Tensor out = Tensor::zeros_like(xv);
    for (int i = 0; i < xv.size(); ++i) out.at(i) = c * xv.at(i);
    return push(std::move(out), nullptr, [this, x, c](const Tensor& g) {
      Tensor& gx = grad(x);
      for (int i = 0; i < g.size(); ++i) gx.at(i) += c * g.at(i);
    });
  }

  // Exp-normalization over the positions where mask is true, stabilized by
  // max-subtraction over those positions. Masked-out entries are exactly 0.
  Var masked_softmax(Var scores, const std::vector<bool>& mask) {
    const Tensor& sv = value(scores);
    if (sv.ndim() != 1 || static_cast<size_t>(sv.size()) != mask.size())
      throw DimensionError("masked_softmax: scores " + sv.shape_str() + " vs mask length " +
                           std::to_string(mask.size()));
    const int n = sv.size();
    double mx = 0.0;
    bool any = false;
    for (int i = 0; i < n; ++i)
      if (mask[static_cast<size_t>(i)]) {
        mx = any ? std::max(mx, sv.at(i)) : sv.at(i);
        any = true;
      }
    if (!any) throw InvalidInputError("masked_softmax: mask has no true entries");
    Tensor out = Tensor::zeros({n});
    double denom = 0.0;
    for (int i = 0; i < n; ++i)
      if (mask[static_cast<size_t>(i)]) {
        out.at(i) = std::exp(sv.at(i) - mx);
        denom += out.at(i);
      }
    for (int i = 0; i < n; ++i)
      if (mask[static_cast<size_t>(i)]) out.at(i) /= denom;
    Var y = push(std::move(out), nullptr, {});
    nodes_[static_cast<size_t>(y.id)].backward = [this, scores, y, mask](const Tensor& g) {
      const Tensor& yv = value(y);
      Tensor& gs = grad(scores);
      double inner = 0.0;
      for (int i = 0; i < yv.size(); ++i)
        if (mask[static_cast<size_t>(i)]) inner += g.at(i) * yv.at(i);
      for (int i = 0; i < yv.size(); ++i)
        if (mask[static_cast<size_t>(i)]) gs.at(i) += yv.at(i) * (g.at(i) - inner);
    };
    return y;
  }

  // Weighted sum of rows: sum_j alpha[j] * rows[j] over unmasked j. Masked
  // rows are skipped entirely, so padded positions cannot perturb the result.
  Var attend(Var alpha, const std::vector<Var>& rows, const std::vector<bool>& mask) {
    const Tensor& av = value(alpha);
    if (av.ndim() != 1 || static_cast<size_t>(av.size()) != rows.size() || rows.size() != mask.size())
      throw DimensionError("attend: alpha " + av.shape_str() + " vs " + std::to_string(rows.size()) + " rows");
    int d = -1;
    for (size_t j = 0; j < rows.size(); ++j)
      if (mask[j]) {
        const Tensor& rv = value(rows[j]);
        if (d < 0)
          d = rv.size();
        else if (rv.size() != d)
          throw DimensionError("attend: row " + std::to_string(j) + " has length " + std::to_string(rv.size()) +
                               ", expected " + std::to_string(d));
      }
    if (d < 0) throw InvalidInputError("attend: mask has no true entries");
    Tensor out = Tensor::zeros({d});
    for (size_t j = 0; j < rows.size(); ++j) {
      if (!mask[j]) continue;
      const double w = av.at(static_cast<int>(j));
      const Tensor& rv = value(rows[j]);
      for (int i = 0; i < d; ++i) out.at(i) += w * rv.at(i);
    }
    return push(std::move(out), nullptr, [this, alpha, rows, mask](const Tensor& g) {
      const Tensor& av = value(alpha);
      Tensor& ga = grad(alpha);
      for (size_t j = 0; j < rows.size(); ++j) {
        if (!mask[j]) continue;
        const Tensor& rv = value(rows[j]);
        Tensor& gr = grad(rows[j]);
        double dj = 0.0;
        const double w = av.at(static_cast<int>(j));
        for (int i = 0; i < g.size(); ++i) {
          dj += g.at(i) * rv.at(i);
          gr.at(i) += w * g.at(i);
        }
        ga.at(static_cast<int>(j)) += dj;
      }
    });
  }

  // -log(max(probs[index], 1e-12)); the cross-entropy core.
  Var pick_neg_log(Var probs, int index) {
    const Tensor& pv = value(probs);
    if (index < 0 || index >= pv.size())
      throw IndexError("pick_neg_log: index " + std::to_string(index) + " out of range for " + pv.shape_str());
    const double p = std::max(pv.at(index), 1e-12);
    Tensor out = Tensor::zeros({1});
    out.at(0) = -std::log(p);
    return push(std::move(out), nullptr, [this, probs, index](const Tensor& g) {
      const Tensor& pv = value(probs);
      const double p = std::max(pv.at(index), 1e-12);
      grad(probs).at(index) += -g.at(0) / p;
    });
  }

  // Seeds d(loss)/d(loss) = seed and sweeps the tape in reverse order.
  // Gradients of parameter leaves are accumulated into their sinks.
  void backward(Var loss, double seed = 1.0) {
    const Tensor& lv = value(loss);
    if (lv.size() != 1) throw DimensionError("backward: loss must be scalar, got " + lv.shape_str());
    grad(loss).at(0) = seed;
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[static_cast<size_t>(i)];
      if (n.grad.empty()) continue;  // no downstream consumer touched this node
      n.grad.validate_finite("backward");
      if (n.backward) n.backward(n.grad);
      if (n.grad_sink) {
        Tensor& sink = *n.grad_sink;
        for (int k = 0; k < sink.size(); ++k) sink.at(k) += n.grad.at(k);
      }
    }
  }

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // empty until touched
    std::function<void(const Tensor&)> backward;
    Tensor* grad_sink = nullptr;
  };

  Var push(Tensor value, Tensor* sink, std::function<void(const Tensor&)> bw) {
    value.validate_finite("forward");
    Node n;
    n.value = std::move(value);
    n.backward = std::move(bw);
    n.grad_sink = sink;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  size_t check(Var v) const {
    if (v.id < 0 || static_cast<size_t>(v.id) >= nodes_.size()) throw IndexError("tape: invalid var handle");
    return static_cast<size_t>(v.id);
  }

  std::vector<Node> nodes_;
};

}  // namespace mlstm

#endif
