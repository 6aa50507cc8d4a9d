#include "dreamcc/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <unordered_set>

namespace dreamcc {

int64_t numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

// ---------------------------------------------------------------- Buffer

Buffer::Buffer(DType dt, int64_t n) : dtype_(dt) {
  if (dt == DType::kF32)
    f32_ = std::make_shared<std::vector<float>>(static_cast<size_t>(n), 0.0f);
  else
    f64_ = std::make_shared<std::vector<double>>(static_cast<size_t>(n), 0.0);
}

int64_t Buffer::size() const {
  if (f32_) return static_cast<int64_t>(f32_->size());
  if (f64_) return static_cast<int64_t>(f64_->size());
  return 0;
}

double Buffer::get(int64_t i) const {
  return dtype_ == DType::kF32 ? static_cast<double>((*f32_)[static_cast<size_t>(i)])
                               : (*f64_)[static_cast<size_t>(i)];
}

void Buffer::set(int64_t i, double v) {
  if (dtype_ == DType::kF32)
    (*f32_)[static_cast<size_t>(i)] = static_cast<float>(v);
  else
    (*f64_)[static_cast<size_t>(i)] = v;
}

void Buffer::fill(double v) {
  if (f32_) std::fill(f32_->begin(), f32_->end(), static_cast<float>(v));
  if (f64_) std::fill(f64_->begin(), f64_->end(), v);
}

void Buffer::add_inplace(const Buffer& other) {
  if (dtype_ != other.dtype_ || size() != other.size())
    throw DimensionError("Buffer::add_inplace: mismatched buffers");
  if (dtype_ == DType::kF32) {
    float* a = f32();
    const float* b = other.f32();
    for (int64_t i = 0, n = size(); i < n; ++i) a[i] += b[i];
  } else {
    double* a = f64();
    const double* b = other.f64();
    for (int64_t i = 0, n = size(); i < n; ++i) a[i] += b[i];
  }
}

Buffer Buffer::clone() const {
  Buffer out(dtype_, size());
  if (f32_) std::copy(f32_->begin(), f32_->end(), out.f32());
  if (f64_) std::copy(f64_->begin(), f64_->end(), out.f64());
  return out;
}

bool all_finite(const Buffer& b) {
  if (b.dtype() == DType::kF32) {
    const float* p = b.f32();
    for (int64_t i = 0, n = b.size(); i < n; ++i)
      if (!std::isfinite(p[i])) return false;
  } else {
    const double* p = b.f64();
    for (int64_t i = 0, n = b.size(); i < n; ++i)
      if (!std::isfinite(p[i])) return false;
  }
  return true;
}

Buffer& Node::ensure_grad() {
  if (grad.empty()) grad = Buffer(dtype, numel(shape));
  return grad;
}

// ---------------------------------------------------------------- Tensor

namespace {

NodePtr make_node(Shape shape, DType dt, const char* op, std::vector<NodePtr> parents) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->dtype = dt;
  n->value = Buffer(dt, numel(n->shape));
  n->op = op;
  for (const auto& p : parents)
    if (p->requires_grad) n->requires_grad = true;
  n->parents = std::move(parents);
  return n;
}

template <class T>
T* ptr(Buffer& b);
template <>
float* ptr<float>(Buffer& b) {
  return b.f32();
}
template <>
double* ptr<double>(Buffer& b) {
  return b.f64();
}
template <class T>
const T* ptr(const Buffer& b);
template <>
const float* ptr<float>(const Buffer& b) {
  return b.f32();
}
template <>
const double* ptr<double>(const Buffer& b) {
  return b.f64();
}

template <class F>
void dispatch(DType dt, F&& f) {
  if (dt == DType::kF32)
    f(float{});
  else
    f(double{});
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.dtype() != b.dtype())
    throw DimensionError(std::string(op) + ": dtype mismatch");
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
}

int64_t last_dim(const Shape& s, const char* op) {
  if (s.empty()) throw DimensionError(std::string(op) + ": needs at least 1 axis");
  return s.back();
}

// fv: value map, fg: local derivative from (x, y)
template <class FV, class FG>
Tensor unary_op(const Tensor& x, const char* name, FV fv, FG fg) {
  auto n = make_node(x.shape(), x.dtype(), name, {x.node()});
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* in = ptr<T>(x.buffer());
    T* out = ptr<T>(n->value);
    for (int64_t i = 0, c = x.size(); i < c; ++i)
      out[i] = static_cast<T>(fv(static_cast<double>(in[i])));
  });
  n->backward = [fg](Node& self) {
    Node& px = *self.parents[0];
    if (!px.requires_grad) return;
    Buffer& gx = px.ensure_grad();
    dispatch(self.dtype, [&](auto tag) {
      using T = decltype(tag);
      const T* g = ptr<T>(self.grad);
      const T* xv = ptr<T>(px.value);
      const T* yv = ptr<T>(self.value);
      T* out = ptr<T>(gx);
      for (int64_t i = 0, c = self.value.size(); i < c; ++i)
        out[i] += static_cast<T>(static_cast<double>(g[i]) *
                                 fg(static_cast<double>(xv[i]), static_cast<double>(yv[i])));
    });
  };
  return Tensor(n);
}

// fv(a,b) value; fga(a,b,y) d/da; fgb(a,b,y) d/db
template <class FV, class FGA, class FGB>
Tensor binary_op(const Tensor& a, const Tensor& b, const char* name, FV fv, FGA fga, FGB fgb) {
  require_same(a, b, name);
  auto n = make_node(a.shape(), a.dtype(), name, {a.node(), b.node()});
  dispatch(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = ptr<T>(a.buffer());
    const T* pb = ptr<T>(b.buffer());
    T* out = ptr<T>(n->value);
    for (int64_t i = 0, c = a.size(); i < c; ++i)
      out[i] = static_cast<T>(fv(static_cast<double>(pa[i]), static_cast<double>(pb[i])));
  });
  n->backward = [fga, fgb](Node& self) {
    Node& na = *self.parents[0];
    Node& nb = *self.parents[1];
    dispatch(self.dtype, [&](auto tag) {
      using T = decltype(tag);
      const T* g = ptr<T>(self.grad);
      const T* pa = ptr<T>(na.value);
      const T* pb = ptr<T>(nb.value);
      const T* y = ptr<T>(self.value);
      int64_t c = self.value.size();
      if (na.requires_grad) {
        T* out = ptr<T>(na.ensure_grad());
        for (int64_t i = 0; i < c; ++i)
          out[i] += static_cast<T>(static_cast<double>(g[i]) *
                                   fga(static_cast<double>(pa[i]), static_cast<double>(pb[i]),
                                       static_cast<double>(y[i])));
      }
      if (nb.requires_grad) {
        T* out = ptr<T>(nb.ensure_grad());
        for (int64_t i = 0; i < c; ++i)
          out[i] += static_cast<T>(static_cast<double>(g[i]) *
                                   fgb(static_cast<double>(pa[i]), static_cast<double>(pb[i]),
                                       static_cast<double>(y[i])));
      }
    });
  };
  return Tensor(n);
}

template <class T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapM = Eigen::Map<MatRM<T>>;
template <class T>
using CMapM = Eigen::Map<const MatRM<T>>;

// C[M,N] (+)= op(A) * op(B); raw row-major pointers
template <class T>
void gemm(const T* A, const T* B, T* C, int64_t M, int64_t K, int64_t N, bool transA, bool transB,
          bool accum) {
  MapM<T> c(C, M, N);
  auto run = [&](const auto& a, const auto& b) {
    if (accum)
      c.noalias() += a * b;
    else
      c.noalias() = a * b;
  };
  if (!transA && !transB)
    run(CMapM<T>(A, M, K), CMapM<T>(B, K, N));
  else if (transA && !transB)
    run(CMapM<T>(A, K, M).transpose(), CMapM<T>(B, K, N));
  else if (!transA && transB)
    run(CMapM<T>(A, M, K), CMapM<T>(B, N, K).transpose());
  else
    run(CMapM<T>(A, K, M).transpose(), CMapM<T>(B, N, K).transpose());
}

}  // namespace

Tensor Tensor::zeros(Shape shape, DType dt, bool requires_grad) {
  auto n = make_node(std::move(shape), dt, "leaf", {});
  n->requires_grad = requires_grad;
  return Tensor(n);
}

Tensor Tensor::constant(Shape shape, double v, DType dt) {
  Tensor t = zeros(std::move(shape), dt, false);
  t.buffer().fill(v);
  return t;
}

Tensor Tensor::scalar(double v, DType dt) { return constant(Shape{}, v, dt); }

Tensor Tensor::from_vector(Shape shape, const std::vector<double>& v, DType dt,
                           bool requires_grad) {
  if (numel(shape) != static_cast<int64_t>(v.size()))
    throw DimensionError("from_vector: " + shape_str(shape) + " needs " +
                         std::to_string(numel(shape)) + " values, got " +
                         std::to_string(v.size()));
  Tensor t = zeros(std::move(shape), dt, requires_grad);
  for (size_t i = 0; i < v.size(); ++i) t.buffer().set(static_cast<int64_t>(i), v[i]);
  return t;
}

double Tensor::item() const {
  if (size() != 1) throw UsageError("item(): tensor has " + std::to_string(size()) + " elements");
  return n_->value.get(0);
}

double Tensor::at(int64_t i) const { return n_->value.get(i); }

void Tensor::set_at(int64_t i, double v) { n_->value.set(i, v); }

std::vector<double> Tensor::to_vector() const {
  std::vector<double> out(static_cast<size_t>(size()));
  for (int64_t i = 0; i < size(); ++i) out[static_cast<size_t>(i)] = n_->value.get(i);
  return out;
}

Tensor Tensor::detach() const {
  auto n = std::make_shared<Node>();
  n->shape = n_->shape;
  n->dtype = n_->dtype;
  n->value = n_->value;  // aliases storage
  n->op = "leaf";
  return Tensor(n);
}

Tensor Tensor::grad() const {
  if (n_->grad.empty()) return Tensor();
  auto n = std::make_shared<Node>();
  n->shape = n_->shape;
  n->dtype = n_->dtype;
  n->value = n_->grad;  // aliases grad storage
  n->op = "leaf";
  return Tensor(n);
}

void Tensor::zero_grad() { n_->grad = Buffer(); }

Tensor Tensor::reshape(Shape shape) const {
  if (numel(shape) != size())
    throw DimensionError("reshape: cannot view " + shape_str(n_->shape) + " as " +
                         shape_str(shape));
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->dtype = n_->dtype;
  n->value = n_->value;  // shared storage, no copy
  n->op = "reshape";
  n->requires_grad = n_->requires_grad;
  n->parents = {n_};
  n->backward = [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad().add_inplace(self.grad);
  };
  return Tensor(n);
}

// ---------------------------------------------------------------- ops

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; }, [](double x, double, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "div", [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double, double y, double out) { return -out / y; });
}

Tensor add_scalar(const Tensor& x, double c) {
  return unary_op(
      x, "add_scalar", [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

Tensor scale(const Tensor& x, double c) {
  return unary_op(
      x, "scale", [c](double v) { return v * c; }, [c](double, double) { return c; });
}

Tensor maximum(const Tensor& x, double c) {
  return unary_op(
      x, "maximum", [c](double v) { return v > c ? v : c; },
      [c](double v, double) { return v >= c ? 1.0 : 0.0; });
}

Tensor clamp_straight_through(const Tensor& x, double lo, double hi) {
  return unary_op(
      x, "clamp_st", [lo, hi](double v) { return std::min(std::max(v, lo), hi); },
      [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& x) {
  return unary_op(
      x, "neg", [](double v) { return -v; }, [](double, double) { return -1.0; });
}

Tensor exp(const Tensor& x) {
  return unary_op(
      x, "exp", [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  return unary_op(
      x, "log", [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor sqrt(const Tensor& x) {
  return unary_op(
      x, "sqrt", [](double v) { return std::sqrt(v); },
      [](double, double y) { return 0.5 / y; });
}

Tensor square(const Tensor& x) {
  return unary_op(
      x, "square", [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor tanh(const Tensor& x) {
  return unary_op(
      x, "tanh", [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary_op(
      x, "sigmoid",
      [](double v) { return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor elu(const Tensor& x) {
  return unary_op(
      x, "elu", [](double v) { return v > 0 ? v : std::expm1(v); },
      [](double v, double) { return v > 0 ? 1.0 : std::exp(v); });
}

Tensor softplus(const Tensor& x) {
  return unary_op(
      x, "softplus",
      [](double v) { return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); },
      [](double v, double) {
        return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
      });
}

Tensor erf(const Tensor& x) {
  constexpr double kTwoOverSqrtPi = 1.1283791670955126;
  return unary_op(
      x, "erf", [](double v) { return std::erf(v); },
      [](double v, double) { return kTwoOverSqrtPi * std::exp(-v * v); });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2)
    throw DimensionError("matmul: expects 2-D operands, got " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  if (a.dtype() != b.dtype()) throw DimensionError("matmul: dtype mismatch");
  if (a.dim(1) != b.dim(0))
    throw DimensionError("matmul: inner dims disagree " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  const int64_t M = a.dim(0), K = a.dim(1), N = b.dim(1);
  auto n = make_node({M, N}, a.dtype(), "matmul", {a.node(), b.node()});
  dispatch(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    gemm<T>(ptr<T>(a.buffer()), ptr<T>(b.buffer()), ptr<T>(n->value), M, K, N, false, false,
            false);
  });
  n->backward = [M, K, N](Node& self) {
    Node& na = *self.parents[0];
    Node& nb = *self.parents[1];
    dispatch(self.dtype, [&](auto tag) {
      using T = decltype(tag);
      const T* g = ptr<T>(self.grad);
      if (na.requires_grad)  // gA += g * B^T
        gemm<T>(g, ptr<T>(nb.value), ptr<T>(na.ensure_grad()), M, N, K, false, true, true);
      if (nb.requires_grad)  // gB += A^T * g
        gemm<T>(ptr<T>(na.value), g, ptr<T>(nb.ensure_grad()), K, M, N, true, false, true);
    });
  };
  return Tensor(n);
}

Tensor add_bias(const Tensor& x, const Tensor& b) {
  const int64_t C = last_dim(x.shape(), "add_bias");
  if (b.ndim() != 1 || b.dim(0) != C || b.dtype() != x.dtype())
    throw DimensionError("add_bias: bias " + shape_str(b.shape()) + " does not match " +
                         shape_str(x.shape()));
  const int64_t R = x.size() / C;
  auto n = make_node(x.shape(), x.dtype(), "add_bias", {x.node(), b.node()});
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* px = ptr<T>(x.buffer());
    const T* pb = ptr<T>(b.buffer());
    T* out = ptr<T>(n->value);
    for (int64_t r = 0; r < R; ++r)
      for (int64_t c = 0; c < C; ++c) out[r * C + c] = px[r * C + c] + pb[c];
  });
  n->backward = [R, C](Node& self) {
    Node& nx = *self.parents[0];
    Node& nb = *self.parents[1];
    dispatch(self.dtype, [&](auto tag) {
      using T = decltype(tag);
      const T* g = ptr<T>(self.grad);
      if (nx.requires_grad) nx.ensure_grad().add_inplace(self.grad);
      if (nb.requires_grad) {
        T* gb = ptr<T>(nb.ensure_grad());
        for (int64_t r = 0; r < R; ++r)
          for (int64_t c = 0; c < C; ++c) gb[c] += g[r * C + c];
      }
    });
  };
  return Tensor(n);
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.ndim() != b.ndim() || a.ndim() < 1 || a.dtype() != b.dtype())
    throw DimensionError("concat_cols: incompatible operands");
  for (int i = 0; i + 1 < a.ndim(); ++i)
    if (a.dim(i) != b.dim(i)) throw DimensionError("concat_cols: leading dims differ");
  const int64_t Ca = a.shape().back(), Cb = b.shape().back();
  const int64_t R = a.size() / Ca;
  Shape out_shape = a.shape();
  out_shape.back() = Ca + Cb;
  auto n = make_node(std::move(out_shape), a.dtype(), "concat_cols", {a.node(), b.node()});
  dispatch(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = ptr<T>(a.buffer());
    const T* pb = ptr<T>(b.buffer());
    T* out = ptr<T>(n->value);
    for (int64_t r = 0; r < R; ++r) {
      std::memcpy(out + r * (Ca + Cb), pa + r * Ca, sizeof(T) * static_cast<size_t>(Ca));
      std::memcpy(out + r * (Ca + Cb) + Ca, pb + r * Cb, sizeof(T) * static_cast<size_t>(Cb));
    }
  });
  n->backward = [R, Ca, Cb](Node& self) {
    Node& na = *self.parents[0];
    Node& nb = *self.parents[1];
    dispatch(self.dtype, [&](auto tag) {
      using T = decltype(tag);
      const T* g = ptr<T>(self.grad);
      if (na.requires_grad) {
        T* ga = ptr<T>(na.ensure_grad());
        for (int64_t r = 0; r < R; ++r)
          for (int64_t c = 0; c < Ca; ++c) ga[r * Ca + c] += g[r * (Ca + Cb) + c];
      }
      if (nb.requires_grad) {
        T* gb = ptr<T>(nb.ensure_grad());
        for (int64_t r = 0; r < R; ++r)
          for (int64_t c = 0; c < Cb; ++c) gb[r * Cb + c] += g[r * (Ca + Cb) + Ca + c];
      }
    });
  };
  return Tensor(n);
}

Tensor slice_cols(const Tensor& x, int64_t c0, int64_t c1) {
  const int64_t C = last_dim(x.shape(), "slice_cols");
  if (c0 < 0 || c1 > C || c0 >= c1) throw DimensionError("slice_cols: bad range");
  const int64_t R = x.size() / C;
  const int64_t W = c1 - c0;
  Shape out_shape = x.shape();
  out_shape.back() = W;
  auto n = make_node(std::move(out_shape), x.dtype(), "slice_cols", {x.node()});
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* px = ptr<T>(x.buffer());
    T* out = ptr<T>(n->value);
    for (int64_t r = 0; r < R; ++r)
      std::memcpy(out + r * W, px + r * C + c0, sizeof(T) * static_cast<size_t>(W));
  });
  n->backward = [R, C, c0, W](Node& self) {
    Node& nx = *self.parents[0];
    if (!nx.requires_grad) return;
    dispatch(self.dtype, [&](auto tag) {
      using T = decltype(tag);
      const T* g = ptr<T>(self.grad);
      T* gx = ptr<T>(nx.ensure_grad());
      for (int64_t r = 0; r < R; ++r)
        for (int64_t c = 0; c < W; ++c) gx[r * C + c0 + c] += g[r * W + c];
    });
  };
  return Tensor(n);
}

Tensor slice_rows(const Tensor& x, int64_t r0, int64_t r1) {
  if (x.ndim() < 1) throw DimensionError("slice_rows: needs at least 1 axis");
  const int64_t R = x.dim(0);
  if (r0 < 0 || r1 > R || r0 >= r1) throw DimensionError("slice_rows: bad range");
  const int64_t stride = x.size() / R;
  Shape out_shape = x.shape();
  out_shape[0] = r1 - r0;
  auto n = make_node(std::move(out_shape), x.dtype(), "slice_rows", {x.node()});
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    std::memcpy(ptr<T>(n->value), ptr<T>(x.buffer()) + r0 * stride,
                sizeof(T) * static_cast<size_t>((r1 - r0) * stride));
  });
  n->backward = [r0, stride](Node& self) {
    Node& nx = *self.parents[0];
    if (!nx.requires_grad) return;
    dispatch(self.dtype, [&](auto tag) {
      using T = decltype(tag);
      const T* g = ptr<T>(self.grad);
      T* gx = ptr<T>(nx.ensure_grad()) + r0 * stride;
      for (int64_t i = 0, c = self.value.size(); i < c; ++i) gx[i] += g[i];
    });
  };
  return Tensor(n);
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw UsageError("concat_rows: empty input");
  Shape tail(parts[0].shape().begin() + 1, parts[0].shape().end());
  const int64_t stride = numel(tail);
  int64_t rows = 0;
  std::vector<NodePtr> parent_nodes;
  for (const auto& p : parts) {
    Shape ptail(p.shape().begin() + 1, p.shape().end());
    if (ptail != tail || p.dtype() != parts[0].dtype())
      throw DimensionError("concat_rows: inhomogeneous parts");
    rows += p.dim(0);
    parent_nodes.push_back(p.node());
  }
  Shape out_shape;
  out_shape.push_back(rows);
  out_shape.insert(out_shape.end(), tail.begin(), tail.end());
  auto n = make_node(std::move(out_shape), parts[0].dtype(), "concat_rows",
                     std::move(parent_nodes));
  dispatch(parts[0].dtype(), [&](auto tag) {
    using T = decltype(tag);
    T* out = ptr<T>(n->value);
    for (const auto& p : parts) {
      const int64_t c = p.size();
      std::memcpy(out, ptr<T>(p.buffer()), sizeof(T) * static_cast<size_t>(c));
      out += c;
    }
  });
  n->backward = [](Node& self) {
    dispatch(self.dtype, [&](auto tag) {
      using T = decltype(tag);
      const T* g = ptr<T>(self.grad);
      for (auto& parent : self.parents) {
        const int64_t c = parent->value.size();
        if (parent->requires_grad) {
          T* gp = ptr<T>(parent->ensure_grad());
          for (int64_t i = 0; i < c; ++i) gp[i] += g[i];
        }
        g += c;
      }
    });
  };
  return Tensor(n);
}

// ------------------------------------------------------------ convolution

namespace {

struct ConvGeom {
  int64_t N, C, H, W;   // input image
  int64_t F, ksz;       // kernels [F,C,k,k]
  int64_t stride, Ho, Wo;
};

ConvGeom conv_geom(const Shape& xs, const Shape& ks, int stride, const char* op) {
  if (xs.size() != 4 || ks.size() != 4) throw DimensionError(std::string(op) + ": expects NCHW input and [F,C,k,k] kernels");
  ConvGeom g{xs[0], xs[1], xs[2], xs[3], ks[0], ks[2], stride, 0, 0};
  if (ks[3] != g.ksz) throw DimensionError(std::string(op) + ": kernels must be square");
  if (ks[1] != g.C)
    throw DimensionError(std::string(op) + ": kernel channels " + std::to_string(ks[1]) +
                         " vs input channels " + std::to_string(g.C));
  if (stride < 1) throw DimensionError(std::string(op) + ": stride must be >= 1");
  if (g.H < g.ksz || g.W < g.ksz)
    throw DimensionError(std::string(op) + ": input " + shape_str(xs) + " smaller than kernel");
  g.Ho = (g.H - g.ksz) / g.stride + 1;
  g.Wo = (g.W - g.ksz) / g.stride + 1;
  return g;
}

// col[(oy*Wo+ox), (c*k+ky)*k+kx] = img[c, oy*s+ky, ox*s+kx]
template <class T>
void im2col(const T* img, T* col, const ConvGeom& g) {
  const int64_t k = g.ksz, patch = g.C * k * k;
  for (int64_t oy = 0; oy < g.Ho; ++oy)
    for (int64_t ox = 0; ox < g.Wo; ++ox) {
      T* row = col + (oy * g.Wo + ox) * patch;
      for (int64_t c = 0; c < g.C; ++c)
        for (int64_t ky = 0; ky < k; ++ky) {
          const T* src = img + (c * g.H + oy * g.stride + ky) * g.W + ox * g.stride;
          std::memcpy(row + (c * k + ky) * k, src, sizeof(T) * static_cast<size_t>(k));
        }
    }
}

template <class T>
void col2im_add(const T* col, T* img, const ConvGeom& g) {
  const int64_t k = g.ksz, patch = g.C * k * k;
  for (int64_t oy = 0; oy < g.Ho; ++oy)
    for (int64_t ox = 0; ox < g.Wo; ++ox) {
      const T* row = col + (oy * g.Wo + ox) * patch;
      for (int64_t c = 0; c < g.C; ++c)
        for (int64_t ky = 0; ky < k; ++ky) {
          T* dst = img + (c * g.H + oy * g.stride + ky) * g.W + ox * g.stride;
          const T* src = row + (c * k + ky) * k;
          for (int64_t kx = 0; kx < k; ++kx) dst[kx] += src[kx];
        }
    }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& kernels, int stride) {
  if (x.dtype() != kernels.dtype()) throw DimensionError("conv2d: dtype mismatch");
  ConvGeom g = conv_geom(x.shape(), kernels.shape(), stride, "conv2d");
  auto n = make_node({g.N, g.F, g.Ho, g.Wo}, x.dtype(), "conv2d", {x.node(), kernels.node()});
  const int64_t patch = g.C * g.ksz * g.ksz, spots = g.Ho * g.Wo;
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    std::vector<T> col(static_cast<size_t>(spots * patch));
    const T* px = ptr<T>(x.buffer());
    const T* pk = ptr<T>(kernels.buffer());
    T* out = ptr<T>(n->value);
    for (int64_t i = 0; i < g.N; ++i) {
      im2col(px + i * g.C * g.H * g.W, col.data(), g);
      // out[i] as [F, spots] = K[F,patch] * col^T
      gemm<T>(pk, col.data(), out + i * g.F * spots, g.F, patch, spots, false, true, false);
    }
  });
  n->backward = [g, patch, spots](Node& self) {
    Node& nx = *self.parents[0];
    Node& nk = *self.parents[1];
    dispatch(self.dtype, [&](auto tag) {
      using T = decltype(tag);
      std::vector<T> col(static_cast<size_t>(spots * patch));
      std::vector<T> gcol(static_cast<size_t>(spots * patch));
      const T* px = ptr<T>(nx.value);
      const T* pk = ptr<T>(nk.value);
      const T* gy = ptr<T>(self.grad);
      T* gx = nx.requires_grad ? ptr<T>(nx.ensure_grad()) : nullptr;
      T* gk = nk.requires_grad ? ptr<T>(nk.ensure_grad()) : nullptr;
      for (int64_t i = 0; i < g.N; ++i) {
        const T* gy_i = gy + i * g.F * spots;  // [F, spots]
        if (gx) {
          // gcol[spots, patch] = gy_i^T * K
          gemm<T>(gy_i, pk, gcol.data(), spots, g.F, patch, true, false, false);
          col2im_add(gcol.data(), gx + i * g.C * g.H * g.W, g);
        }
        if (gk) {
          im2col(px + i * g.C * g.H * g.W, col.data(), g);
          // gK[F, patch] += gy_i * col
          gemm<T>(gy_i, col.data(), gk, g.F, spots, patch, false, false, true);
        }
      }
    });
  };
  return Tensor(n);
}

Tensor conv2d_transpose(const Tensor& x, const Tensor& kernels, int stride, int64_t out_h,
                        int64_t out_w) {
  if (x.dtype() != kernels.dtype()) throw DimensionError("conv2d_transpose: dtype mismatch");
  if (x.ndim() != 4 || kernels.ndim() != 4)
    throw DimensionError("conv2d_transpose: expects NCHW input and [F,C,k,k] kernels");
  const int64_t N = x.dim(0), F = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (kernels.dim(0) != F)
    throw DimensionError("conv2d_transpose: input channels " + std::to_string(F) +
                         " vs kernel F " + std::to_string(kernels.dim(0)));
  // The geometry of the conv this op is the adjoint of: [C,out_h,out_w] -> [F,h,w].
  ConvGeom g = conv_geom({N, kernels.dim(1), out_h, out_w}, kernels.shape(), stride,
                         "conv2d_transpose");
  if (g.Ho != h || g.Wo != w)
    throw DimensionError("conv2d_transpose: output " + std::to_string(out_h) + "x" +
                         std::to_string(out_w) + " is not adjoint-compatible with input " +
                         std::to_string(h) + "x" + std::to_string(w) + " at stride " +
                         std::to_string(stride));
  auto n = make_node({N, g.C, out_h, out_w}, x.dtype(), "conv2d_transpose",
                     {x.node(), kernels.node()});
  const int64_t patch = g.C * g.ksz * g.ksz, spots = h * w;
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    std::vector<T> col(static_cast<size_t>(spots * patch));
    const T* px = ptr<T>(x.buffer());
    const T* pk = ptr<T>(kernels.buffer());
    T* out = ptr<T>(n->value);
    for (int64_t i = 0; i < N; ++i) {
      // col[spots, patch] = x_i^T[spots,F] * K[F,patch]; scatter into the image
      gemm<T>(px + i * F * spots, pk, col.data(), spots, F, patch, true, false, false);
      col2im_add(col.data(), out + i * g.C * out_h * out_w, g);
    }
  });
  n->backward = [g, N, F, patch, spots, out_h, out_w](Node& self) {
    Node& nx = *self.parents[0];
    Node& nk = *self.parents[1];
    dispatch(self.dtype, [&](auto tag) {
      using T = decltype(tag);
      std::vector<T> gcol(static_cast<size_t>(spots * patch));
      const T* px = ptr<T>(nx.value);
      const T* pk = ptr<T>(nk.value);
      const T* gy = ptr<T>(self.grad);
      T* gx = nx.requires_grad ? ptr<T>(nx.ensure_grad()) : nullptr;
      T* gk = nk.requires_grad ? ptr<T>(nk.ensure_grad()) : nullptr;
      for (int64_t i = 0; i < N; ++i) {
        im2col(gy + i * g.C * out_h * out_w, gcol.data(), g);
        if (gx)  // gx_i[F, spots] += K * gcol^T
          gemm<T>(pk, gcol.data(), gx + i * F * spots, F, patch, spots, false, true, true);
        if (gk)  // gK[F, patch] += x_i[F,spots] * gcol
          gemm<T>(px + i * F * spots, gcol.data(), gk, F, spots, patch, false, false, true);
      }
    });
  };
  return Tensor(n);
}

Tensor add_channel_bias(const Tensor& x, const Tensor& b) {
  if (x.ndim() != 4) throw DimensionError("add_channel_bias: expects NCHW");
  const int64_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  if (b.ndim() != 1 || b.dim(0) != C || b.dtype() != x.dtype())
    throw DimensionError("add_channel_bias: bias does not match channels");
  auto n = make_node(x.shape(), x.dtype(), "add_channel_bias", {x.node(), b.node()});
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* px = ptr<T>(x.buffer());
    const T* pb = ptr<T>(b.buffer());
    T* out = ptr<T>(n->value);
    for (int64_t i = 0; i < N; ++i)
      for (int64_t c = 0; c < C; ++c) {
        const T bias = pb[c];
        const int64_t base = (i * C + c) * HW;
        for (int64_t j = 0; j < HW; ++j) out[base + j] = px[base + j] + bias;
      }
  });
  n->backward = [N, C, HW](Node& self) {
    Node& nx = *self.parents[0];
    Node& nb = *self.parents[1];
    dispatch(self.dtype, [&](auto tag) {
      using T = decltype(tag);
      const T* g = ptr<T>(self.grad);
      if (nx.requires_grad) nx.ensure_grad().add_inplace(self.grad);
      if (nb.requires_grad) {
        T* gb = ptr<T>(nb.ensure_grad());
        for (int64_t i = 0; i < N; ++i)
          for (int64_t c = 0; c < C; ++c) {
            double s = 0;
            const int64_t base = (i * C + c) * HW;
            for (int64_t j = 0; j < HW; ++j) s += static_cast<double>(g[base + j]);
            gb[c] += static_cast<T>(s);
          }
      }
    });
  };
  return Tensor(n);
}

// ------------------------------------------------------------- reductions

Tensor sum_all(const Tensor& x) {
  auto n = make_node(Shape{}, x.dtype(), "sum_all", {x.node()});
  double s = 0;
  for (int64_t i = 0; i < x.size(); ++i) s += x.at(i);
  n->value.set(0, s);
  n->backward = [](Node& self) {
    Node& nx = *self.parents[0];
    if (!nx.requires_grad) return;
    const double g = self.grad.get(0);
    Buffer& gx = nx.ensure_grad();
    for (int64_t i = 0, c = gx.size(); i < c; ++i) gx.set(i, gx.get(i) + g);
  };
  return Tensor(n);
}

Tensor mean_all(const Tensor& x) { return scale(sum_all(x), 1.0 / static_cast<double>(x.size())); }

Tensor sum_rows(const Tensor& x) {
  const int64_t C = last_dim(x.shape(), "sum_rows");
  const int64_t R = x.size() / C;
  Shape out_shape(x.shape().begin(), x.shape().end() - 1);
  auto n = make_node(std::move(out_shape), x.dtype(), "sum_rows", {x.node()});
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* px = ptr<T>(x.buffer());
    T* out = ptr<T>(n->value);
    for (int64_t r = 0; r < R; ++r) {
      double s = 0;
      for (int64_t c = 0; c < C; ++c) s += static_cast<double>(px[r * C + c]);
      out[r] = static_cast<T>(s);
    }
  });
  n->backward = [R, C](Node& self) {
    Node& nx = *self.parents[0];
    if (!nx.requires_grad) return;
    dispatch(self.dtype, [&](auto tag) {
      using T = decltype(tag);
      const T* g = ptr<T>(self.grad);
      T* gx = ptr<T>(nx.ensure_grad());
      for (int64_t r = 0; r < R; ++r)
        for (int64_t c = 0; c < C; ++c) gx[r * C + c] += g[r];
    });
  };
  return Tensor(n);
}

Tensor softmax(const Tensor& x) {
  const int64_t C = last_dim(x.shape(), "softmax");
  const int64_t R = x.size() / C;
  auto n = make_node(x.shape(), x.dtype(), "softmax", {x.node()});
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* px = ptr<T>(x.buffer());
    T* out = ptr<T>(n->value);
    for (int64_t r = 0; r < R; ++r) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int64_t c = 0; c < C; ++c) mx = std::max(mx, static_cast<double>(px[r * C + c]));
      double z = 0;
      for (int64_t c = 0; c < C; ++c) {
        double e = std::exp(static_cast<double>(px[r * C + c]) - mx);
        out[r * C + c] = static_cast<T>(e);
        z += e;
      }
      for (int64_t c = 0; c < C; ++c) out[r * C + c] = static_cast<T>(static_cast<double>(out[r * C + c]) / z);
    }
  });
  n->backward = [R, C](Node& self) {
    Node& nx = *self.parents[0];
    if (!nx.requires_grad) return;
    dispatch(self.dtype, [&](auto tag) {
      using T = decltype(tag);
      const T* g = ptr<T>(self.grad);
      const T* p = ptr<T>(self.value);
      T* gx = ptr<T>(nx.ensure_grad());
      for (int64_t r = 0; r < R; ++r) {
        double dot = 0;
        for (int64_t c = 0; c < C; ++c)
          dot += static_cast<double>(p[r * C + c]) * static_cast<double>(g[r * C + c]);
        for (int64_t c = 0; c < C; ++c)
          gx[r * C + c] += static_cast<T>(static_cast<double>(p[r * C + c]) *
                                          (static_cast<double>(g[r * C + c]) - dot));
      }
    });
  };
  return Tensor(n);
}

Tensor log_softmax(const Tensor& x) {
  const int64_t C = last_dim(x.shape(), "log_softmax");
  const int64_t R = x.size() / C;
  auto n = make_node(x.shape(), x.dtype(), "log_softmax", {x.node()});
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* px = ptr<T>(x.buffer());
    T* out = ptr<T>(n->value);
    for (int64_t r = 0; r < R; ++r) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int64_t c = 0; c < C; ++c) mx = std::max(mx, static_cast<double>(px[r * C + c]));
      double z = 0;
      for (int64_t c = 0; c < C; ++c) z += std::exp(static_cast<double>(px[r * C + c]) - mx);
      const double lz = mx + std::log(z);
      for (int64_t c = 0; c < C; ++c)
        out[r * C + c] = static_cast<T>(static_cast<double>(px[r * C + c]) - lz);
    }
  });
  n->backward = [R, C](Node& self) {
    Node& nx = *self.parents[0];
    if (!nx.requires_grad) return;
    dispatch(self.dtype, [&](auto tag) {
      using T = decltype(tag);
      const T* g = ptr<T>(self.grad);
      const T* y = ptr<T>(self.value);
      T* gx = ptr<T>(nx.ensure_grad());
      for (int64_t r = 0; r < R; ++r) {
        double gsum = 0;
        for (int64_t c = 0; c < C; ++c) gsum += static_cast<double>(g[r * C + c]);
        for (int64_t c = 0; c < C; ++c)
          gx[r * C + c] += static_cast<T>(static_cast<double>(g[r * C + c]) -
                                          std::exp(static_cast<double>(y[r * C + c])) * gsum);
      }
    });
  };
  return Tensor(n);
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const int64_t C = last_dim(x.shape(), "layer_norm");
  if (gain.ndim() != 1 || gain.dim(0) != C || bias.ndim() != 1 || bias.dim(0) != C)
    throw DimensionError("layer_norm: gain/bias must be [" + std::to_string(C) + "]");
  const int64_t R = x.size() / C;
  auto n = make_node(x.shape(), x.dtype(), "layer_norm", {x.node(), gain.node(), bias.node()});
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* px = ptr<T>(x.buffer());
    const T* pg = ptr<T>(gain.buffer());
    const T* pb = ptr<T>(bias.buffer());
    T* out = ptr<T>(n->value);
    for (int64_t r = 0; r < R; ++r) {
      double mu = 0, var = 0;
      for (int64_t c = 0; c < C; ++c) mu += static_cast<double>(px[r * C + c]);
      mu /= static_cast<double>(C);
      for (int64_t c = 0; c < C; ++c) {
        double d = static_cast<double>(px[r * C + c]) - mu;
        var += d * d;
      }
      var /= static_cast<double>(C);
      const double inv = 1.0 / std::sqrt(var + eps);
      for (int64_t c = 0; c < C; ++c) {
        double yhat = (static_cast<double>(px[r * C + c]) - mu) * inv;
        out[r * C + c] = static_cast<T>(yhat * static_cast<double>(pg[c]) + static_cast<double>(pb[c]));
      }
    }
  });
  n->backward = [R, C, eps](Node& self) {
    Node& nx = *self.parents[0];
    Node& ng = *self.parents[1];
    Node& nb = *self.parents[2];
    dispatch(self.dtype, [&](auto tag) {
      using T = decltype(tag);
      const T* g = ptr<T>(self.grad);
      const T* px = ptr<T>(nx.value);
      const T* pg = ptr<T>(ng.value);
      T* gx = nx.requires_grad ? ptr<T>(nx.ensure_grad()) : nullptr;
      T* gg = ng.requires_grad ? ptr<T>(ng.ensure_grad()) : nullptr;
      T* gb = nb.requires_grad ? ptr<T>(nb.ensure_grad()) : nullptr;
      std::vector<double> yhat(static_cast<size_t>(C));
      for (int64_t r = 0; r < R; ++r) {
        double mu = 0, var = 0;
        for (int64_t c = 0; c < C; ++c) mu += static_cast<double>(px[r * C + c]);
        mu /= static_cast<double>(C);
        for (int64_t c = 0; c < C; ++c) {
          double d = static_cast<double>(px[r * C + c]) - mu;
          var += d * d;
        }
        var /= static_cast<double>(C);
        const double inv = 1.0 / std::sqrt(var + eps);
        double m1 = 0, m2 = 0;  // mean(ghat), mean(ghat*yhat)
        for (int64_t c = 0; c < C; ++c) {
          yhat[static_cast<size_t>(c)] = (static_cast<double>(px[r * C + c]) - mu) * inv;
          double gh = static_cast<double>(g[r * C + c]) * static_cast<double>(pg[c]);
          m1 += gh;
          m2 += gh * yhat[static_cast<size_t>(c)];
        }
        m1 /= static_cast<double>(C);
        m2 /= static_cast<double>(C);
        for (int64_t c = 0; c < C; ++c) {
          const double gv = static_cast<double>(g[r * C + c]);
          if (gx) {
            double gh = gv * static_cast<double>(pg[c]);
            gx[r * C + c] +=
                static_cast<T>((gh - m1 - yhat[static_cast<size_t>(c)] * m2) * inv);
          }
          if (gg) gg[c] += static_cast<T>(gv * yhat[static_cast<size_t>(c)]);
          if (gb) gb[c] += static_cast<T>(gv);
        }
      }
    });
  };
  return Tensor(n);
}

// ------------------------------------------------------- leaves, sampling

Tensor one_hot_rows(const std::vector<int64_t>& idx, int64_t classes, DType dt) {
  Tensor t = Tensor::zeros({static_cast<int64_t>(idx.size()), classes}, dt);
  for (size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= classes) throw DomainError("one_hot_rows: index out of range");
    t.buffer().set(static_cast<int64_t>(r) * classes + idx[r], 1.0);
  }
  return t;
}

std::vector<int64_t> sample_categorical_rows(const Tensor& logits, Rng& rng) {
  const int64_t C = last_dim(logits.shape(), "sample_categorical_rows");
  const int64_t R = logits.size() / C;
  std::vector<int64_t> out(static_cast<size_t>(R));
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<double> p(static_cast<size_t>(C));
  for (int64_t r = 0; r < R; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int64_t c = 0; c < C; ++c) mx = std::max(mx, logits.at(r * C + c));
    double z = 0;
    for (int64_t c = 0; c < C; ++c) {
      p[static_cast<size_t>(c)] = std::exp(logits.at(r * C + c) - mx);
      z += p[static_cast<size_t>(c)];
    }
    double u = uni(rng) * z;
    double acc = 0;
    int64_t pick = C - 1;
    for (int64_t c = 0; c < C; ++c) {
      acc += p[static_cast<size_t>(c)];
      if (u <= acc) {
        pick = c;
        break;
      }
    }
    out[static_cast<size_t>(r)] = pick;
  }
  return out;
}

Tensor stack_rows_leaf(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw UsageError("stack_rows_leaf: empty input");
  const Shape& s0 = rows[0].shape();
  Shape out_shape;
  out_shape.push_back(static_cast<int64_t>(rows.size()));
  out_shape.insert(out_shape.end(), s0.begin(), s0.end());
  Tensor out = Tensor::zeros(out_shape, rows[0].dtype());
  const int64_t stride = rows[0].size();
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].shape() != s0 || rows[i].dtype() != rows[0].dtype())
      throw DimensionError("stack_rows_leaf: inhomogeneous rows");
    for (int64_t j = 0; j < stride; ++j)
      out.buffer().set(static_cast<int64_t>(i) * stride + j, rows[i].at(j));
  }
  return out;
}

// -------------------------------------------------------------- backward

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw UsageError("backward: loss must be a defined scalar tensor");
  if (!loss.requires_grad()) return;

  // iterative post-order over the requires-grad subgraph
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    bool descended = false;
    while (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
        descended = true;
        break;
      }
    }
    if (!descended && next >= stack.back().first->parents.size()) {
      order.push_back(stack.back().first);
      stack.pop_back();
    }
  }

  Node* root = loss.node().get();
  Buffer& g0 = root->ensure_grad();
  g0.set(0, g0.get(0) + 1.0);

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->grad.empty()) continue;  // no contribution reached this node
    if (n->backward) n->backward(*n);
    if (!n->parents.empty()) n->grad = Buffer();  // free intermediate grads
  }
}

bool graph_contains_op(const Tensor& root, std::string_view opname) {
  if (!root.defined()) return false;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{root.node().get()};
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    if (opname == n->op) return true;
    for (const auto& p : n->parents) stack.push_back(p.get());
  }
  return false;
}

void check_finite(const Tensor& t, const char* what) {
  if (!all_finite(t.buffer()))
    throw NumericError(std::string("non-finite values in ") + what);
}

}  // namespace dreamcc
