#pragma once

// Reverse-mode autodiff on dense row-major tensors. A Tensor is a handle to a
// graph Node holding the value buffer, an optional grad buffer, parent links
// and a backward closure. Graphs are built eagerly by the free-function ops
// below and torn down when the handles go out of scope.
//
// Two dtypes: f32 for training, f64 for gradient-check tests. Operands of a
// binary op must share a dtype; there is no implicit promotion.
//
// Storage is shared between views: detach() aliases the value buffer of its
// source. Buffers are written only when an op materialises its output and
// when the optimizer updates a parameter in place, so aliases stay coherent
// as long as no graph outlives the optimizer step that follows it.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "dreamcc/errors.hpp"
#include "dreamcc/rng.hpp"

namespace dreamcc {

enum class DType : uint8_t { kF32 = 0, kF64 = 1 };

inline const char* dtype_name(DType d) { return d == DType::kF32 ? "f32" : "f64"; }
inline size_t dtype_size(DType d) { return d == DType::kF32 ? 4 : 8; }

using Shape = std::vector<int64_t>;

int64_t numel(const Shape& s);
std::string shape_str(const Shape& s);

// Dynamically typed storage. Exactly one of the two vectors is populated.
class Buffer {
 public:
  Buffer() = default;
  Buffer(DType dt, int64_t n);

  DType dtype() const { return dtype_; }
  int64_t size() const;
  bool empty() const { return !f32_ && !f64_; }

  float* f32() { return f32_->data(); }
  const float* f32() const { return f32_->data(); }
  double* f64() { return f64_->data(); }
  const double* f64() const { return f64_->data(); }

  double get(int64_t i) const;
  void set(int64_t i, double v);
  void fill(double v);
  void add_inplace(const Buffer& other);  // same dtype/size
  Buffer clone() const;

 private:
  DType dtype_ = DType::kF32;
  std::shared_ptr<std::vector<float>> f32_;
  std::shared_ptr<std::vector<double>> f64_;
};

struct Node {
  Shape shape;
  DType dtype = DType::kF32;
  Buffer value;
  Buffer grad;  // lazily allocated by ensure_grad()
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;  // reads this->grad, accumulates into parents

  Buffer& ensure_grad();
};

using NodePtr = std::shared_ptr<Node>;

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr n) : n_(std::move(n)) {}

  static Tensor zeros(Shape shape, DType dt = DType::kF32, bool requires_grad = false);
  static Tensor constant(Shape shape, double v, DType dt = DType::kF32);
  static Tensor scalar(double v, DType dt = DType::kF32);
  static Tensor from_vector(Shape shape, const std::vector<double>& v, DType dt = DType::kF32,
                            bool requires_grad = false);

  bool defined() const { return n_ != nullptr; }
  const Shape& shape() const { return n_->shape; }
  DType dtype() const { return n_->dtype; }
  int64_t size() const { return numel(n_->shape); }
  int ndim() const { return static_cast<int>(n_->shape.size()); }
  int64_t dim(int i) const { return n_->shape[static_cast<size_t>(i)]; }
  bool requires_grad() const { return n_->requires_grad; }
  const char* op() const { return n_->op; }
  NodePtr node() const { return n_; }

  double item() const;          // scalar tensors only
  double at(int64_t i) const;   // flat index, any dtype (slow; for tests/IO)
  void set_at(int64_t i, double v);  // leaves only
  std::vector<double> to_vector() const;

  const Buffer& buffer() const { return n_->value; }
  Buffer& buffer() { return n_->value; }

  // Leaf sharing this tensor's storage; never requires grad.
  Tensor detach() const;
  // Gradient accumulated by backward(); undefined Tensor if none.
  Tensor grad() const;
  void zero_grad();

  Tensor reshape(Shape shape) const;  // differentiable view (copy-free)

 private:
  NodePtr n_;
};

// ---------------------------------------------------------------------------
// Ops. All are pure graph builders; dtype/shape errors throw DimensionError.
// ---------------------------------------------------------------------------

// elementwise, same shape
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

// elementwise, scalar argument
Tensor add_scalar(const Tensor& x, double c);
Tensor scale(const Tensor& x, double c);
Tensor maximum(const Tensor& x, double c);  // grad passes where x >= c
// Values clamped to [lo, hi], gradient passed through unchanged.
Tensor clamp_straight_through(const Tensor& x, double lo, double hi);

// elementwise, unary
Tensor neg(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor square(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor elu(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor erf(const Tensor& x);

inline Tensor one_minus(const Tensor& x) { return add_scalar(neg(x), 1.0); }

// linear algebra
Tensor matmul(const Tensor& a, const Tensor& b);      // [M,K]x[K,N]
Tensor add_bias(const Tensor& x, const Tensor& b);    // [R,C] + [C]

// 2-D structure (trailing-axis views of higher-rank tensors are fine)
Tensor concat_cols(const Tensor& a, const Tensor& b);          // [R,Ca]|[R,Cb]
Tensor slice_cols(const Tensor& x, int64_t c0, int64_t c1);    // [R, c1-c0)

// leading-axis structure (contiguous row ranges)
Tensor slice_rows(const Tensor& x, int64_t r0, int64_t r1);    // rows [r0, r1)
Tensor concat_rows(const std::vector<Tensor>& parts);          // stack along axis 0

// convolution, NCHW, "valid" windows, cross-correlation convention,
// H_out = floor((H - k) / stride) + 1. kernels are [F, C, k, k].
Tensor conv2d(const Tensor& x, const Tensor& kernels, int stride);
// Exact adjoint of conv2d as a linear map: for all x, y
//   <conv2d(x, k), y> == <x, conv2d_transpose(y, k, out_h, out_w)>.
// out_h/out_w must satisfy floor((out - k)/stride) + 1 == in.
Tensor conv2d_transpose(const Tensor& x, const Tensor& kernels, int stride, int64_t out_h,
                        int64_t out_w);
Tensor add_channel_bias(const Tensor& x, const Tensor& b);  // NCHW + [C]

// reductions / normalisations over the last axis (leading axes flattened)
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);
Tensor sum_rows(const Tensor& x);   // [..., C] -> [...]
Tensor softmax(const Tensor& x);
Tensor log_softmax(const Tensor& x);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-3);

inline Tensor stop_grad(const Tensor& x) { return x.detach(); }

// leaves / sampling kernels (no graph)
Tensor one_hot_rows(const std::vector<int64_t>& idx, int64_t classes, DType dt);
// One draw per row of [R, C] logits; numerically stable, f64 accumulation.
std::vector<int64_t> sample_categorical_rows(const Tensor& logits, Rng& rng);
// Rows stacked along a new leading axis; inputs must share shape. Non-diff leaf.
Tensor stack_rows_leaf(const std::vector<Tensor>& rows);

// Accumulates d(loss)/d(leaf) into every reachable requires-grad node.
// loss must be scalar. Grads accumulate across calls until zero_grad().
void backward(const Tensor& loss);

// True if any node reachable from root (through parents) has the given op
// name. Used by structural tests (e.g. "imagination never touches the
// encoder").
bool graph_contains_op(const Tensor& root, std::string_view opname);

// Throws NumericError naming `what` if any element is NaN/Inf.
void check_finite(const Tensor& t, const char* what);
bool all_finite(const Buffer& b);

}  // namespace dreamcc
