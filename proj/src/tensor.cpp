#include "cedi/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace cedi::num {

namespace {

int64_t shape_product(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

void check_vector(const TensorPtr& t, const char* op) {
  if (!t->is_vector()) {
    throw DimensionError(std::string(op) + ": expected a vector, got shape " +
                         shape_string(*t));
  }
}

TensorPtr make_output(Tape& tape, std::vector<int> shape, bool rec) {
  auto out = Tensor::zeros(std::move(shape));
  out->requires_grad = rec && tape.recording();
  return out;
}

}  // namespace

TensorPtr Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  auto t = std::make_shared<Tensor>();
  t->values.assign(static_cast<size_t>(shape_product(shape)), 0.0);
  t->shape = std::move(shape);
  t->requires_grad = requires_grad;
  return t;
}

TensorPtr Tensor::scalar(double v, bool requires_grad) {
  return vector({v}, requires_grad);
}

TensorPtr Tensor::vector(std::vector<double> v, bool requires_grad) {
  auto t = std::make_shared<Tensor>();
  t->shape = {static_cast<int>(v.size())};
  t->values = std::move(v);
  t->requires_grad = requires_grad;
  return t;
}

TensorPtr Tensor::matrix(int rows, int cols, std::vector<double> v,
                         bool requires_grad) {
  if (static_cast<int64_t>(v.size()) != int64_t(rows) * cols) {
    throw DimensionError("Tensor::matrix: " + std::to_string(v.size()) +
                         " values for " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
  auto t = std::make_shared<Tensor>();
  t->shape = {rows, cols};
  t->values = std::move(v);
  t->requires_grad = requires_grad;
  return t;
}

TensorPtr Tensor::uniform(std::vector<int> shape, double lo, double hi,
                          Rng& rng, bool requires_grad) {
  auto t = zeros(std::move(shape), requires_grad);
  for (double& v : t->values) v = rng.uniform(lo, hi);
  return t;
}

TensorPtr Tensor::glorot(int fan_out, int fan_in, Rng& rng,
                         bool requires_grad) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  return uniform({fan_out, fan_in}, -bound, bound, rng, requires_grad);
}

TensorPtr Tensor::clone() const {
  auto t = std::make_shared<Tensor>(*this);
  t->grad.clear();
  return t;
}

bool all_finite(const Tensor& t) {
  for (double v : t.values) {
    if (!std::isfinite(v)) return false;
  }
  for (double g : t.grad) {
    if (!std::isfinite(g)) return false;
  }
  return true;
}

std::string shape_string(const Tensor& t) {
  std::string s = "[";
  for (size_t i = 0; i < t.shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(t.shape[i]);
  }
  return s + "]";
}

void Tape::run_backward(const TensorPtr& loss) {
  if (backward_run_) {
    throw StateError("backward: tape already differentiated; re-run the "
                     "forward pass or clear() first");
  }
  if (!loss || !loss->is_scalar()) {
    throw DomainError("backward: loss must be a scalar tensor");
  }
  backward_run_ = true;
  loss->ensure_grad();
  loss->grad[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->output->grad.empty()) continue;  // no gradient flowed here
    it->backprop();
  }
}

void backward(Tape& tape, const TensorPtr& loss) { tape.run_backward(loss); }

// ---- ops -----------------------------------------------------------------

TensorPtr affine(Tape& tape, const TensorPtr& w, const TensorPtr& x,
                 const TensorPtr& b) {
  if (!w->is_matrix() || !x->is_vector() || !b->is_vector() ||
      w->cols() != x->shape[0] || w->rows() != b->shape[0]) {
    throw DimensionError("affine: W " + shape_string(*w) + " incompatible with x " +
                         shape_string(*x) + " and b " + shape_string(*b));
  }
  const int m = w->rows(), k = w->cols();
  const bool rec = tape.should_record({&w, &x, &b});
  auto out = make_output(tape, {m}, rec);
  for (int i = 0; i < m; ++i) {
    const double* wr = &w->values[static_cast<size_t>(i) * k];
    double acc = b->values[i];
    for (int j = 0; j < k; ++j) acc += wr[j] * x->values[j];
    out->values[i] = acc;
  }
  if (rec) {
    tape.record({w, x, b}, out, [w, x, b, out, m, k] {
      const auto& gy = out->grad;
      if (w->requires_grad) {
        auto& gw = w->ensure_grad();
        for (int i = 0; i < m; ++i) {
          double g = gy[i];
          if (g == 0.0) continue;
          double* gwr = &gw[static_cast<size_t>(i) * k];
          for (int j = 0; j < k; ++j) gwr[j] += g * x->values[j];
        }
      }
      if (x->requires_grad) {
        auto& gx = x->ensure_grad();
        for (int i = 0; i < m; ++i) {
          double g = gy[i];
          if (g == 0.0) continue;
          const double* wr = &w->values[static_cast<size_t>(i) * k];
          for (int j = 0; j < k; ++j) gx[j] += g * wr[j];
        }
      }
      if (b->requires_grad) {
        auto& gb = b->ensure_grad();
        for (int i = 0; i < m; ++i) gb[i] += gy[i];
      }
    });
  }
  return out;
}

TensorPtr matvec(Tape& tape, const TensorPtr& w, const TensorPtr& x) {
  if (!w->is_matrix() || !x->is_vector() || w->cols() != x->shape[0]) {
    throw DimensionError("matvec: W " + shape_string(*w) +
                         " incompatible with x " + shape_string(*x));
  }
  const int m = w->rows(), k = w->cols();
  const bool rec = tape.should_record({&w, &x});
  auto out = make_output(tape, {m}, rec);
  for (int i = 0; i < m; ++i) {
    const double* wr = &w->values[static_cast<size_t>(i) * k];
    double acc = 0.0;
    for (int j = 0; j < k; ++j) acc += wr[j] * x->values[j];
    out->values[i] = acc;
  }
  if (rec) {
    tape.record({w, x}, out, [w, x, out, m, k] {
      const auto& gy = out->grad;
      if (w->requires_grad) {
        auto& gw = w->ensure_grad();
        for (int i = 0; i < m; ++i) {
          double g = gy[i];
          if (g == 0.0) continue;
          double* gwr = &gw[static_cast<size_t>(i) * k];
          for (int j = 0; j < k; ++j) gwr[j] += g * x->values[j];
        }
      }
      if (x->requires_grad) {
        auto& gx = x->ensure_grad();
        for (int i = 0; i < m; ++i) {
          double g = gy[i];
          if (g == 0.0) continue;
          const double* wr = &w->values[static_cast<size_t>(i) * k];
          for (int j = 0; j < k; ++j) gx[j] += g * wr[j];
        }
      }
    });
  }
  return out;
}

TensorPtr add(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
  if (a->shape != b->shape) {
    throw DimensionError("add: shape " + shape_string(*a) + " vs " +
                         shape_string(*b));
  }
  const bool rec = tape.should_record({&a, &b});
  auto out = make_output(tape, a->shape, rec);
  for (int64_t i = 0; i < a->size(); ++i) {
    out->values[i] = a->values[i] + b->values[i];
  }
  if (rec) {
    tape.record({a, b}, out, [a, b, out] {
      const auto& gy = out->grad;
      if (a->requires_grad) {
        auto& ga = a->ensure_grad();
        for (size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
      }
      if (b->requires_grad) {
        auto& gb = b->ensure_grad();
        for (size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i];
      }
    });
  }
  return out;
}

TensorPtr mul(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
  if (a->shape != b->shape) {
    throw DimensionError("mul: shape " + shape_string(*a) + " vs " +
                         shape_string(*b));
  }
  const bool rec = tape.should_record({&a, &b});
  auto out = make_output(tape, a->shape, rec);
  for (int64_t i = 0; i < a->size(); ++i) {
    out->values[i] = a->values[i] * b->values[i];
  }
  if (rec) {
    tape.record({a, b}, out, [a, b, out] {
      const auto& gy = out->grad;
      if (a->requires_grad) {
        auto& ga = a->ensure_grad();
        for (size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * b->values[i];
      }
      if (b->requires_grad) {
        auto& gb = b->ensure_grad();
        for (size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * a->values[i];
      }
    });
  }
  return out;
}

TensorPtr scale(Tape& tape, const TensorPtr& x, double k) {
  const bool rec = tape.should_record({&x});
  auto out = make_output(tape, x->shape, rec);
  for (int64_t i = 0; i < x->size(); ++i) out->values[i] = k * x->values[i];
  if (rec) {
    tape.record({x}, out, [x, out, k] {
      auto& gx = x->ensure_grad();
      for (size_t i = 0; i < gx.size(); ++i) gx[i] += k * out->grad[i];
    });
  }
  return out;
}

TensorPtr sigmoid(Tape& tape, const TensorPtr& x) {
  const bool rec = tape.should_record({&x});
  auto out = make_output(tape, x->shape, rec);
  for (int64_t i = 0; i < x->size(); ++i) {
    const double v = x->values[i];
    // Split on sign so exp never overflows.
    out->values[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                              : std::exp(v) / (1.0 + std::exp(v));
  }
  if (rec) {
    tape.record({x}, out, [x, out] {
      auto& gx = x->ensure_grad();
      for (size_t i = 0; i < gx.size(); ++i) {
        const double y = out->values[i];
        gx[i] += out->grad[i] * y * (1.0 - y);
      }
    });
  }
  return out;
}

TensorPtr tanh(Tape& tape, const TensorPtr& x) {
  const bool rec = tape.should_record({&x});
  auto out = make_output(tape, x->shape, rec);
  for (int64_t i = 0; i < x->size(); ++i) out->values[i] = std::tanh(x->values[i]);
  if (rec) {
    tape.record({x}, out, [x, out] {
      auto& gx = x->ensure_grad();
      for (size_t i = 0; i < gx.size(); ++i) {
        const double y = out->values[i];
        gx[i] += out->grad[i] * (1.0 - y * y);
      }
    });
  }
  return out;
}

TensorPtr softmax(Tape& tape, const TensorPtr& x) {
  check_vector(x, "softmax");
  if (x->size() == 0) throw DomainError("softmax: empty vector");
  const bool rec = tape.should_record({&x});
  auto out = make_output(tape, x->shape, rec);
  const double m = *std::max_element(x->values.begin(), x->values.end());
  double z = 0.0;
  for (int64_t i = 0; i < x->size(); ++i) {
    out->values[i] = std::exp(x->values[i] - m);
    z += out->values[i];
  }
  for (double& v : out->values) v /= z;
  if (rec) {
    tape.record({x}, out, [x, out] {
      const auto& gy = out->grad;
      double dot = 0.0;
      for (size_t i = 0; i < gy.size(); ++i) dot += gy[i] * out->values[i];
      auto& gx = x->ensure_grad();
      for (size_t i = 0; i < gy.size(); ++i) {
        gx[i] += out->values[i] * (gy[i] - dot);
      }
    });
  }
  return out;
}

TensorPtr concat(Tape& tape, const std::vector<TensorPtr>& parts) {
  if (parts.empty()) throw DomainError("concat: no parts");
  int total = 0;
  bool rec = false;
  for (const auto& p : parts) {
    check_vector(p, "concat");
    total += p->shape[0];
    rec = rec || (tape.recording() && p->requires_grad);
  }
  auto out = make_output(tape, {total}, rec);
  int at = 0;
  for (const auto& p : parts) {
    std::copy(p->values.begin(), p->values.end(), out->values.begin() + at);
    at += p->shape[0];
  }
  if (rec) {
    tape.record(parts, out, [parts, out] {
      int at = 0;
      for (const auto& p : parts) {
        if (p->requires_grad) {
          auto& gp = p->ensure_grad();
          for (int i = 0; i < p->shape[0]; ++i) gp[i] += out->grad[at + i];
        }
        at += p->shape[0];
      }
    });
  }
  return out;
}

TensorPtr dropout(Tape& tape, const TensorPtr& x, double p, bool training,
                  Rng& rng) {
  if (p < 0.0 || p >= 1.0) {
    throw DomainError("dropout: p must be in [0, 1), got " + std::to_string(p));
  }
  if (!training) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  auto mask = std::make_shared<std::vector<double>>(x->values.size());
  for (double& m : *mask) m = rng.bernoulli(p) ? 0.0 : keep_scale;
  const bool rec = tape.should_record({&x});
  auto out = make_output(tape, x->shape, rec);
  for (int64_t i = 0; i < x->size(); ++i) {
    out->values[i] = x->values[i] * (*mask)[i];
  }
  if (rec) {
    tape.record({x}, out, [x, out, mask] {
      auto& gx = x->ensure_grad();
      for (size_t i = 0; i < gx.size(); ++i) gx[i] += out->grad[i] * (*mask)[i];
    });
  }
  return out;
}

TensorPtr sum(Tape& tape, const TensorPtr& x) {
  const bool rec = tape.should_record({&x});
  auto out = make_output(tape, {1}, rec);
  out->values[0] = std::accumulate(x->values.begin(), x->values.end(), 0.0);
  if (rec) {
    tape.record({x}, out, [x, out] {
      auto& gx = x->ensure_grad();
      for (double& g : gx) g += out->grad[0];
    });
  }
  return out;
}

TensorPtr dot(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
  check_vector(a, "dot");
  check_vector(b, "dot");
  if (a->shape != b->shape) {
    throw DimensionError("dot: shape " + shape_string(*a) + " vs " +
                         shape_string(*b));
  }
  const bool rec = tape.should_record({&a, &b});
  auto out = make_output(tape, {1}, rec);
  double acc = 0.0;
  for (int64_t i = 0; i < a->size(); ++i) acc += a->values[i] * b->values[i];
  out->values[0] = acc;
  if (rec) {
    tape.record({a, b}, out, [a, b, out] {
      const double g = out->grad[0];
      if (a->requires_grad) {
        auto& ga = a->ensure_grad();
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += g * b->values[i];
      }
      if (b->requires_grad) {
        auto& gb = b->ensure_grad();
        for (size_t i = 0; i < gb.size(); ++i) gb[i] += g * a->values[i];
      }
    });
  }
  return out;
}

TensorPtr logsumexp(Tape& tape, const TensorPtr& x) {
  check_vector(x, "logsumexp");
  if (x->size() == 0) throw DomainError("logsumexp: empty vector");
  const bool rec = tape.should_record({&x});
  auto out = make_output(tape, {1}, rec);
  const double m = *std::max_element(x->values.begin(), x->values.end());
  double z = 0.0;
  for (double v : x->values) z += std::exp(v - m);
  out->values[0] = m + std::log(z);
  if (rec) {
    tape.record({x}, out, [x, out] {
      const double g = out->grad[0];
      auto& gx = x->ensure_grad();
      for (size_t i = 0; i < gx.size(); ++i) {
        gx[i] += g * std::exp(x->values[i] - out->values[0]);
      }
    });
  }
  return out;
}

TensorPtr pick(Tape& tape, const TensorPtr& x, int64_t i) {
  if (i < 0 || i >= x->size()) {
    throw IndexError("pick: index " + std::to_string(i) + " out of range for " +
                     shape_string(*x));
  }
  const bool rec = tape.should_record({&x});
  auto out = make_output(tape, {1}, rec);
  out->values[0] = x->values[i];
  if (rec) {
    tape.record({x}, out, [x, out, i] {
      x->ensure_grad()[i] += out->grad[0];
    });
  }
  return out;
}

TensorPtr pick2(Tape& tape, const TensorPtr& m, int r, int c) {
  if (!m->is_matrix()) throw DimensionError("pick2: not a matrix");
  if (r < 0 || r >= m->rows() || c < 0 || c >= m->cols()) {
    throw IndexError("pick2: (" + std::to_string(r) + "," + std::to_string(c) +
                     ") out of range for " + shape_string(*m));
  }
  return pick(tape, m, static_cast<int64_t>(r) * m->cols() + c);
}

TensorPtr col(Tape& tape, const TensorPtr& m, int c) {
  if (!m->is_matrix()) throw DimensionError("col: not a matrix");
  if (c < 0 || c >= m->cols()) {
    throw IndexError("col: column " + std::to_string(c) + " out of range for " +
                     shape_string(*m));
  }
  const int rows = m->rows(), cols = m->cols();
  const bool rec = tape.should_record({&m});
  auto out = make_output(tape, {rows}, rec);
  for (int i = 0; i < rows; ++i) {
    out->values[i] = m->values[static_cast<size_t>(i) * cols + c];
  }
  if (rec) {
    tape.record({m}, out, [m, out, c, rows, cols] {
      auto& gm = m->ensure_grad();
      for (int i = 0; i < rows; ++i) {
        gm[static_cast<size_t>(i) * cols + c] += out->grad[i];
      }
    });
  }
  return out;
}

TensorPtr row(Tape& tape, const TensorPtr& m, int r, bool skip_grad) {
  if (!m->is_matrix()) throw DimensionError("row: not a matrix");
  if (r < 0 || r >= m->rows()) {
    throw IndexError("row: row " + std::to_string(r) + " out of range for " +
                     shape_string(*m));
  }
  const int cols = m->cols();
  const bool rec = !skip_grad && tape.should_record({&m});
  auto out = make_output(tape, {cols}, rec);
  const double* src = &m->values[static_cast<size_t>(r) * cols];
  std::copy(src, src + cols, out->values.begin());
  if (rec) {
    tape.record({m}, out, [m, out, r, cols] {
      auto& gm = m->ensure_grad();
      double* dst = &gm[static_cast<size_t>(r) * cols];
      for (int j = 0; j < cols; ++j) dst[j] += out->grad[j];
    });
  }
  return out;
}

TensorPtr stack(Tape& tape, const std::vector<TensorPtr>& scalars) {
  if (scalars.empty()) throw DomainError("stack: no scalars");
  bool rec = false;
  for (const auto& s : scalars) {
    if (!s->is_scalar()) throw DimensionError("stack: parts must be scalars");
    rec = rec || (tape.recording() && s->requires_grad);
  }
  auto out = make_output(tape, {static_cast<int>(scalars.size())}, rec);
  for (size_t i = 0; i < scalars.size(); ++i) {
    out->values[i] = scalars[i]->values[0];
  }
  if (rec) {
    tape.record(scalars, out, [scalars, out] {
      for (size_t i = 0; i < scalars.size(); ++i) {
        if (scalars[i]->requires_grad) {
          scalars[i]->ensure_grad()[0] += out->grad[i];
        }
      }
    });
  }
  return out;
}

TensorPtr weighted_sum(Tape& tape, const TensorPtr& weights,
                       const std::vector<TensorPtr>& states) {
  check_vector(weights, "weighted_sum");
  if (states.empty() ||
      weights->shape[0] != static_cast<int>(states.size())) {
    throw DimensionError("weighted_sum: " + std::to_string(states.size()) +
                         " states vs weights " + shape_string(*weights));
  }
  const int dim = states[0]->shape[0];
  bool rec = tape.recording() && weights->requires_grad;
  for (const auto& s : states) {
    check_vector(s, "weighted_sum");
    if (s->shape[0] != dim) {
      throw DimensionError("weighted_sum: states differ in width");
    }
    rec = rec || (tape.recording() && s->requires_grad);
  }
  auto out = make_output(tape, {dim}, rec);
  for (size_t j = 0; j < states.size(); ++j) {
    const double w = weights->values[j];
    for (int i = 0; i < dim; ++i) out->values[i] += w * states[j]->values[i];
  }
  if (rec) {
    std::vector<TensorPtr> inputs = states;
    inputs.push_back(weights);
    tape.record(std::move(inputs), out, [weights, states, out, dim] {
      const auto& gy = out->grad;
      for (size_t j = 0; j < states.size(); ++j) {
        if (weights->requires_grad) {
          double acc = 0.0;
          for (int i = 0; i < dim; ++i) acc += gy[i] * states[j]->values[i];
          weights->ensure_grad()[j] += acc;
        }
        if (states[j]->requires_grad) {
          auto& gs = states[j]->ensure_grad();
          const double w = weights->values[j];
          for (int i = 0; i < dim; ++i) gs[i] += w * gy[i];
        }
      }
    });
  }
  return out;
}

void sgd_step(const std::vector<TensorPtr>& params, double lr,
              double clip_norm) {
  bool any_grad = false;
  double sq = 0.0;
  for (const auto& p : params) {
    if (p->grad.empty()) continue;
    any_grad = true;
    for (double g : p->grad) sq += g * g;
  }
  if (!any_grad) {
    throw StateError("sgd_step: no gradients populated; run backward first");
  }
  const double norm = std::sqrt(sq);
  const double factor =
      (clip_norm > 0.0 && norm > clip_norm) ? clip_norm / norm : 1.0;
  for (const auto& p : params) {
    if (!p->grad.empty()) {
      for (size_t i = 0; i < p->values.size(); ++i) {
        p->values[i] -= lr * factor * p->grad[i];
      }
    }
    p->zero_grad();
  }
}

}  // namespace cedi::num
