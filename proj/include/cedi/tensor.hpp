#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "cedi/common.hpp"

namespace cedi::num {

struct Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Dense 64-bit float tensor. Rank 1 (vectors, shape {n}) and rank 2
// (row-major matrices, shape {r, c}) are the only shapes the engine needs;
// scalars are length-1 vectors.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until backward touches this tensor
  bool requires_grad = false;

  int64_t size() const { return static_cast<int64_t>(values.size()); }
  bool is_scalar() const { return size() == 1; }
  bool is_vector() const { return shape.size() == 1; }
  bool is_matrix() const { return shape.size() == 2; }
  int rows() const { return shape[0]; }
  int cols() const { return shape[1]; }

  double item() const {
    if (!is_scalar()) throw DomainError("Tensor::item: tensor is not scalar");
    return values[0];
  }

  // Gradient of one entry; zero when backward never reached this tensor.
  double grad_at(int64_t i) const {
    return grad.empty() ? 0.0 : grad[static_cast<size_t>(i)];
  }

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(values.size(), 0.0);
    return grad;
  }

  void zero_grad() { grad.clear(); }

  static TensorPtr zeros(std::vector<int> shape, bool requires_grad = false);
  static TensorPtr scalar(double v, bool requires_grad = false);
  static TensorPtr vector(std::vector<double> v, bool requires_grad = false);
  static TensorPtr matrix(int rows, int cols, std::vector<double> v,
                          bool requires_grad = false);
  static TensorPtr uniform(std::vector<int> shape, double lo, double hi,
                           Rng& rng, bool requires_grad = true);
  // Glorot-style bound sqrt(6 / (fan_in + fan_out)).
  static TensorPtr glorot(int fan_out, int fan_in, Rng& rng,
                          bool requires_grad = true);

  TensorPtr clone() const;
};

bool all_finite(const Tensor& t);
std::string shape_string(const Tensor& t);

// Records the forward pass for reverse-mode differentiation. A tape plus its
// tensors is a single-threaded unit of work; inference runs with a
// non-recording tape and produces no nodes.
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }
  size_t size() const { return nodes_.size(); }
  bool backward_run() const { return backward_run_; }

  // Registers an op. `backprop` reads output->grad and accumulates into the
  // inputs' grads. Only called when recording and some input requires grad.
  void record(std::vector<TensorPtr> inputs, TensorPtr output,
              std::function<void()> backprop) {
    nodes_.push_back(Node{std::move(inputs), std::move(output),
                          std::move(backprop)});
  }

  bool should_record(std::initializer_list<const TensorPtr*> inputs) const {
    if (!recording_) return false;
    for (const TensorPtr* t : inputs) {
      if (*t && (*t)->requires_grad) return true;
    }
    return false;
  }

  void run_backward(const TensorPtr& loss);

  void clear() {
    nodes_.clear();
    backward_run_ = false;
  }

 private:
  struct Node {
    std::vector<TensorPtr> inputs;
    TensorPtr output;
    std::function<void()> backprop;
  };
  std::vector<Node> nodes_;
  bool recording_ = true;
  bool backward_run_ = false;
};

// ---- Differentiable operations ------------------------------------------

// W [m x k] * x [k] + b [m].
TensorPtr affine(Tape& tape, const TensorPtr& w, const TensorPtr& x,
                 const TensorPtr& b);
// W [m x k] * x [k].
TensorPtr matvec(Tape& tape, const TensorPtr& w, const TensorPtr& x);

TensorPtr add(Tape& tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(Tape& tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr scale(Tape& tape, const TensorPtr& x, double k);

TensorPtr sigmoid(Tape& tape, const TensorPtr& x);
TensorPtr tanh(Tape& tape, const TensorPtr& x);

// Max-subtracted, sums to 1 within 1e-9 for inputs up to |1e3|.
TensorPtr softmax(Tape& tape, const TensorPtr& x);

TensorPtr concat(Tape& tape, const std::vector<TensorPtr>& parts);

// Inverted dropout: training mode zeroes entries with probability p and
// scales survivors by 1/(1-p); inference is the identity.
TensorPtr dropout(Tape& tape, const TensorPtr& x, double p, bool training,
                  Rng& rng);

TensorPtr sum(Tape& tape, const TensorPtr& x);
TensorPtr dot(Tape& tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr logsumexp(Tape& tape, const TensorPtr& x);

// Scalar view of entry i (vectors) or flat entry (matrices).
TensorPtr pick(Tape& tape, const TensorPtr& x, int64_t i);
// Matrix entry (r, c) as a scalar.
TensorPtr pick2(Tape& tape, const TensorPtr& m, int r, int c);
// Column c of a matrix as a vector.
TensorPtr col(Tape& tape, const TensorPtr& m, int c);
// Row r of a matrix as a vector; ids in `skip_grad_rows` short-circuit the
// gradient (frozen embedding rows).
TensorPtr row(Tape& tape, const TensorPtr& m, int r, bool skip_grad = false);

// Scalars -> vector.
TensorPtr stack(Tape& tape, const std::vector<TensorPtr>& scalars);

// sum_j weights[j] * states[j]; weights is a vector of |states| entries.
TensorPtr weighted_sum(Tape& tape, const TensorPtr& weights,
                       const std::vector<TensorPtr>& states);

// Seeds d(loss)/d(loss) = 1 and replays the tape once in reverse. A second
// call without clear() is rejected with StateError.
void backward(Tape& tape, const TensorPtr& loss);

// Global-norm clipping followed by p <- p - lr * g; grads cleared. Tensors
// with empty grad buffers count as zero-gradient; if no tensor in the set
// has any gradient at all the step is rejected (backward never ran).
void sgd_step(const std::vector<TensorPtr>& params, double lr,
              double clip_norm);

}  // namespace cedi::num
