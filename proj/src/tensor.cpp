#include "rcore/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace rcore {

namespace {

std::atomic<std::uint64_t> g_seq{1};

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + a.shape_str() +
                              " and " + b.shape_str());
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const std::string& detail) {
  throw std::invalid_argument(std::string(op) + ": bad shape " + a.shape_str() + " (" + detail +
                              ")");
}

std::shared_ptr<Tensor::Node> make_node(std::vector<std::size_t> shape, std::vector<double> data,
                                        const char* op,
                                        std::vector<std::shared_ptr<Tensor::Node>> parents) {
  auto n = std::make_shared<Tensor::Node>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  n->op = op;
  n->seq = g_seq.fetch_add(1, std::memory_order_relaxed);
  bool rg = false;
  for (auto& p : parents) rg = rg || p->requires_grad;
  n->requires_grad = rg;
  if (rg) n->parents = std::move(parents);
  return n;
}

std::vector<double>& grad_buf(const std::shared_ptr<Tensor::Node>& n) {
  if (n->grad.empty()) n->grad.assign(n->data.size(), 0.0);
  return n->grad;
}

void require_matrix(const char* op, const Tensor& t) {
  if (t.rank() != 2) shape_error(op, t, "expected a matrix");
}

void require_vector(const char* op, const Tensor& t) {
  if (t.rank() != 1) shape_error(op, t, "expected a vector");
}

}  // namespace

// ---- Tensor ----------------------------------------------------------------

Tensor::Tensor(std::vector<std::size_t> shape, double fill, bool requires_grad) {
  node_ = std::make_shared<Node>();
  node_->data.assign(shape_product(shape), fill);
  node_->shape = std::move(shape);
  node_->requires_grad = requires_grad;
  node_->seq = g_seq.fetch_add(1, std::memory_order_relaxed);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values, bool requires_grad) {
  if (shape_product(shape) != values.size())
    throw std::invalid_argument("Tensor: shape " + shape_to_string(shape) + " wants " +
                                std::to_string(shape_product(shape)) + " values, got " +
                                std::to_string(values.size()));
  node_ = std::make_shared<Node>();
  node_->shape = std::move(shape);
  node_->data = std::move(values);
  node_->requires_grad = requires_grad;
  node_->seq = g_seq.fetch_add(1, std::memory_order_relaxed);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({}, std::vector<double>{value}, requires_grad);
}

std::size_t Tensor::rows() const {
  require_matrix("rows", *this);
  return node_->shape[0];
}

std::size_t Tensor::cols() const {
  require_matrix("cols", *this);
  return node_->shape[1];
}

double Tensor::item() const {
  if (size() != 1) throw std::invalid_argument("item: tensor " + shape_str() + " is not scalar");
  return node_->data[0];
}

const std::vector<double>& Tensor::grad() const {
  if (node_->grad.empty())
    throw std::logic_error("grad: no gradient accumulated for this tensor");
  return node_->grad;
}

std::vector<double>& Tensor::grad_ref() { return grad_buf(node_); }

void Tensor::zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

bool Tensor::all_finite() const {
  for (double v : node_->data)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_str() const { return shape_to_string(node_->shape); }

// ---- elementwise -----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("add", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  auto n = make_node(a.shape(), std::move(out), "add", {a.node_, b.node_});
  if (n->requires_grad) {
    auto na = a.node_, nb = b.node_;
    Tensor::Node* self = n.get();
    n->backward_fn = [na, nb, self]() {
      const auto& g = self->grad;
      if (na->requires_grad) {
        auto& ga = grad_buf(na);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (nb->requires_grad) {
        auto& gb = grad_buf(nb);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    };
  }
  return Tensor::from_node(n);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("sub", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  auto n = make_node(a.shape(), std::move(out), "sub", {a.node_, b.node_});
  if (n->requires_grad) {
    auto na = a.node_, nb = b.node_;
    Tensor::Node* self = n.get();
    n->backward_fn = [na, nb, self]() {
      const auto& g = self->grad;
      if (na->requires_grad) {
        auto& ga = grad_buf(na);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (nb->requires_grad) {
        auto& gb = grad_buf(nb);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    };
  }
  return Tensor::from_node(n);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("mul", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  auto n = make_node(a.shape(), std::move(out), "mul", {a.node_, b.node_});
  if (n->requires_grad) {
    auto na = a.node_, nb = b.node_;
    Tensor::Node* self = n.get();
    n->backward_fn = [na, nb, self]() {
      const auto& g = self->grad;
      if (na->requires_grad) {
        auto& ga = grad_buf(na);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * nb->data[i];
      }
      if (nb->requires_grad) {
        auto& gb = grad_buf(nb);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * na->data[i];
      }
    };
  }
  return Tensor::from_node(n);
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * c;
  auto n = make_node(a.shape(), std::move(out), "scale", {a.node_});
  if (n->requires_grad) {
    auto na = a.node_;
    Tensor::Node* self = n.get();
    n->backward_fn = [na, self, c]() {
      auto& ga = grad_buf(na);
      for (std::size_t i = 0; i < self->grad.size(); ++i) ga[i] += self->grad[i] * c;
    };
  }
  return Tensor::from_node(n);
}

Tensor add_scalar(const Tensor& a, double c) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + c;
  auto n = make_node(a.shape(), std::move(out), "add_scalar", {a.node_});
  if (n->requires_grad) {
    auto na = a.node_;
    Tensor::Node* self = n.get();
    n->backward_fn = [na, self]() {
      auto& ga = grad_buf(na);
      for (std::size_t i = 0; i < self->grad.size(); ++i) ga[i] += self->grad[i];
    };
  }
  return Tensor::from_node(n);
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

// ---- matmul ----------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  // Vector operands are promoted to single-row / single-column matrices.
  if (a.rank() == 1 && b.rank() == 2) {
    Tensor a2 = reshape(a, {1, a.size()});
    return reshape(matmul(a2, b), {b.cols()});
  }
  if (a.rank() == 2 && b.rank() == 1) {
    Tensor b2 = reshape(b, {b.size(), 1});
    return reshape(matmul(a, b2), {a.rows()});
  }
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) shape_error("matmul", a, b);

  const std::size_t m = a.rows(), k = a.cols(), p = b.cols();
  std::vector<double> out(m * p, 0.0);
  {
    const double* A = a.values().data();
    const double* B = b.values().data();
    double* C = out.data();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t kk = 0; kk < k; ++kk) {
        const double av = A[i * k + kk];
        const double* brow = B + kk * p;
        double* crow = C + i * p;
        for (std::size_t j = 0; j < p; ++j) crow[j] += av * brow[j];
      }
  }
  auto n = make_node({m, p}, std::move(out), "matmul", {a.node_, b.node_});
  if (n->requires_grad) {
    auto na = a.node_, nb = b.node_;
    Tensor::Node* self = n.get();
    n->backward_fn = [na, nb, self, m, k, p]() {
      const double* G = self->grad.data();
      if (na->requires_grad) {
        auto& ga = grad_buf(na);
        const double* B = nb->data.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t kk = 0; kk < k; ++kk) {
            const double* grow = G + i * p;
            const double* brow = B + kk * p;
            double acc = 0.0;
            for (std::size_t j = 0; j < p; ++j) acc += grow[j] * brow[j];
            ga[i * k + kk] += acc;
          }
      }
      if (nb->requires_grad) {
        auto& gb = grad_buf(nb);
        const double* A = na->data.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = A[i * k + kk];
            const double* grow = G + i * p;
            double* gbrow = gb.data() + kk * p;
            for (std::size_t j = 0; j < p; ++j) gbrow[j] += av * grow[j];
          }
      }
    };
  }
  return Tensor::from_node(n);
}

// ---- nonlinearities ---------------------------------------------------------

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] > 0.0 ? a.values()[i] : 0.0;
  auto n = make_node(a.shape(), std::move(out), "relu", {a.node_});
  if (n->requires_grad) {
    auto na = a.node_;
    Tensor::Node* self = n.get();
    n->backward_fn = [na, self]() {
      auto& ga = grad_buf(na);
      for (std::size_t i = 0; i < self->grad.size(); ++i)
        if (na->data[i] > 0.0) ga[i] += self->grad[i];
    };
  }
  return Tensor::from_node(n);
}

Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-a.values()[i]));
  auto n = make_node(a.shape(), std::move(out), "sigmoid", {a.node_});
  if (n->requires_grad) {
    auto na = a.node_;
    Tensor::Node* self = n.get();
    n->backward_fn = [na, self]() {
      auto& ga = grad_buf(na);
      for (std::size_t i = 0; i < self->grad.size(); ++i) {
        double s = self->data[i];
        ga[i] += self->grad[i] * s * (1.0 - s);
      }
    };
  }
  return Tensor::from_node(n);
}

Tensor exp(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(a.values()[i]);
  auto n = make_node(a.shape(), std::move(out), "exp", {a.node_});
  if (n->requires_grad) {
    auto na = a.node_;
    Tensor::Node* self = n.get();
    n->backward_fn = [na, self]() {
      auto& ga = grad_buf(na);
      for (std::size_t i = 0; i < self->grad.size(); ++i) ga[i] += self->grad[i] * self->data[i];
    };
  }
  return Tensor::from_node(n);
}

Tensor log(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(a.values()[i]);
  auto n = make_node(a.shape(), std::move(out), "log", {a.node_});
  if (n->requires_grad) {
    auto na = a.node_;
    Tensor::Node* self = n.get();
    n->backward_fn = [na, self]() {
      auto& ga = grad_buf(na);
      for (std::size_t i = 0; i < self->grad.size(); ++i) ga[i] += self->grad[i] / na->data[i];
    };
  }
  return Tensor::from_node(n);
}

// ---- reductions -------------------------------------------------------------

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  auto n = make_node({}, {acc}, "sum", {a.node_});
  if (n->requires_grad) {
    auto na = a.node_;
    Tensor::Node* self = n.get();
    n->backward_fn = [na, self]() {
      auto& ga = grad_buf(na);
      double g = self->grad[0];
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
    };
  }
  return Tensor::from_node(n);
}

Tensor mean_rows(const Tensor& a) {
  require_matrix("mean_rows", a);
  const std::size_t t = a.rows(), d = a.cols();
  // Per-column summation in sorted value order, so the result is bit-exact
  // under any permutation of the rows.
  std::vector<double> out(d, 0.0);
  std::vector<double> col(t);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < t; ++i) col[i] = a.values()[i * d + j];
    std::sort(col.begin(), col.end());
    double acc = 0.0;
    for (double v : col) acc += v;
    out[j] = acc / static_cast<double>(t);
  }
  auto n = make_node({d}, std::move(out), "mean_rows", {a.node_});
  if (n->requires_grad) {
    auto na = a.node_;
    Tensor::Node* self = n.get();
    n->backward_fn = [na, self, t, d]() {
      auto& ga = grad_buf(na);
      const double inv = 1.0 / static_cast<double>(t);
      for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < d; ++j) ga[i * d + j] += self->grad[j] * inv;
    };
  }
  return Tensor::from_node(n);
}

// ---- softmax ----------------------------------------------------------------

Tensor softmax(const Tensor& a) {
  if (a.rank() != 1 && a.rank() != 2) shape_error("softmax", a, "expected rank 1 or 2");
  const std::size_t rows = a.rank() == 2 ? a.shape()[0] : 1;
  const std::size_t cols = a.rank() == 2 ? a.shape()[1] : a.size();
  if (cols == 0) shape_error("softmax", a, "empty last axis");
  std::vector<double> out(a.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = a.values().data() + r * cols;
    double* y = out.data() + r * cols;
    double mx = x[0];
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, x[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      y[j] = std::exp(x[j] - mx);
      z += y[j];
    }
    for (std::size_t j = 0; j < cols; ++j) y[j] /= z;
  }
  auto n = make_node(a.shape(), std::move(out), "softmax", {a.node_});
  if (n->requires_grad) {
    auto na = a.node_;
    Tensor::Node* self = n.get();
    n->backward_fn = [na, self, rows, cols]() {
      auto& ga = grad_buf(na);
      for (std::size_t r = 0; r < rows; ++r) {
        const double* y = self->data.data() + r * cols;
        const double* g = self->grad.data() + r * cols;
        double dotgy = 0.0;
        for (std::size_t j = 0; j < cols; ++j) dotgy += g[j] * y[j];
        double* out = ga.data() + r * cols;
        for (std::size_t j = 0; j < cols; ++j) out[j] += y[j] * (g[j] - dotgy);
      }
    };
  }
  return Tensor::from_node(n);
}

// ---- vector products ---------------------------------------------------------

Tensor dot(const Tensor& a, const Tensor& b) {
  require_vector("dot", a);
  require_vector("dot", b);
  if (a.size() != b.size()) shape_error("dot", a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a.values()[i] * b.values()[i];
  auto n = make_node({}, {acc}, "dot", {a.node_, b.node_});
  if (n->requires_grad) {
    auto na = a.node_, nb = b.node_;
    Tensor::Node* self = n.get();
    n->backward_fn = [na, nb, self]() {
      double g = self->grad[0];
      if (na->requires_grad) {
        auto& ga = grad_buf(na);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * nb->data[i];
      }
      if (nb->requires_grad) {
        auto& gb = grad_buf(nb);
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g * na->data[i];
      }
    };
  }
  return Tensor::from_node(n);
}

namespace {
double vec_norm(const double* v, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += v[i] * v[i];
  return std::sqrt(acc);
}
}  // namespace

Tensor cosine(const Tensor& a, const Tensor& b) {
  require_vector("cosine", a);
  require_vector("cosine", b);
  if (a.size() != b.size()) shape_error("cosine", a, b);
  const std::size_t d = a.size();
  const double na_ = vec_norm(a.values().data(), d);
  const double nb_ = vec_norm(b.values().data(), d);
  if (na_ < 1e-30 || nb_ < 1e-30)
    throw std::domain_error("cosine: zero-norm operand");
  double ip = 0.0;
  for (std::size_t i = 0; i < d; ++i) ip += a.values()[i] * b.values()[i];
  const double c = ip / (na_ * nb_);
  auto n = make_node({}, {c}, "cosine", {a.node_, b.node_});
  if (n->requires_grad) {
    auto pa = a.node_, pb = b.node_;
    Tensor::Node* self = n.get();
    n->backward_fn = [pa, pb, self, na_, nb_, c, d]() {
      double g = self->grad[0];
      if (pa->requires_grad) {
        auto& ga = grad_buf(pa);
        for (std::size_t i = 0; i < d; ++i)
          ga[i] += g * (pb->data[i] / (na_ * nb_) - c * pa->data[i] / (na_ * na_));
      }
      if (pb->requires_grad) {
        auto& gb = grad_buf(pb);
        for (std::size_t i = 0; i < d; ++i)
          gb[i] += g * (pa->data[i] / (na_ * nb_) - c * pb->data[i] / (nb_ * nb_));
      }
    };
  }
  return Tensor::from_node(n);
}

Tensor cosine_rows(const Tensor& mat, const Tensor& vec) {
  require_matrix("cosine_rows", mat);
  require_vector("cosine_rows", vec);
  if (mat.cols() != vec.size()) shape_error("cosine_rows", mat, vec);
  const std::size_t rows = mat.rows(), d = mat.cols();
  const double nv = vec_norm(vec.values().data(), d);
  if (nv < 1e-30) throw std::domain_error("cosine_rows: zero-norm vector");
  std::vector<double> out(rows);
  std::vector<double> row_norms(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* m = mat.values().data() + r * d;
    double nr = vec_norm(m, d);
    if (nr < 1e-30) throw std::domain_error("cosine_rows: zero-norm row");
    double ip = 0.0;
    for (std::size_t i = 0; i < d; ++i) ip += m[i] * vec.values()[i];
    out[r] = ip / (nr * nv);
    row_norms[r] = nr;
  }
  auto n = make_node({rows}, std::move(out), "cosine_rows", {mat.node_, vec.node_});
  if (n->requires_grad) {
    auto pm = mat.node_, pv = vec.node_;
    Tensor::Node* self = n.get();
    n->backward_fn = [pm, pv, self, row_norms, nv, rows, d]() {
      for (std::size_t r = 0; r < rows; ++r) {
        const double g = self->grad[r];
        if (g == 0.0) continue;
        const double c = self->data[r];
        const double nr = row_norms[r];
        const double* m = pm->data.data() + r * d;
        if (pm->requires_grad) {
          auto& gm = grad_buf(pm);
          double* gr = gm.data() + r * d;
          for (std::size_t i = 0; i < d; ++i)
            gr[i] += g * (pv->data[i] / (nr * nv) - c * m[i] / (nr * nr));
        }
        if (pv->requires_grad) {
          auto& gv = grad_buf(pv);
          for (std::size_t i = 0; i < d; ++i)
            gv[i] += g * (m[i] / (nr * nv) - c * pv->data[i] / (nv * nv));
        }
      }
    };
  }
  return Tensor::from_node(n);
}

// ---- temporal convolution -----------------------------------------------------

Tensor conv1d_time(const Tensor& seq, const Tensor& weight, const Tensor& bias) {
  require_matrix("conv1d_time", seq);
  if (weight.rank() != 3) shape_error("conv1d_time", weight, "expected [Dout,w,Din] weight");
  require_vector("conv1d_time", bias);
  const std::size_t t = seq.rows(), din = seq.cols();
  const std::size_t dout = weight.shape()[0], w = weight.shape()[1];
  if (weight.shape()[2] != din) shape_error("conv1d_time", weight, seq);
  if (bias.size() != dout) shape_error("conv1d_time", bias, weight);
  if (w % 2 == 0) shape_error("conv1d_time", weight, "kernel width must be odd");
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(w / 2);

  std::vector<double> out(t * dout);
  const double* X = seq.values().data();
  const double* W = weight.values().data();
  for (std::size_t ti = 0; ti < t; ++ti)
    for (std::size_t o = 0; o < dout; ++o) {
      double acc = bias.values()[o];
      for (std::size_t k = 0; k < w; ++k) {
        std::ptrdiff_t src = static_cast<std::ptrdiff_t>(ti) + static_cast<std::ptrdiff_t>(k) - pad;
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(t)) continue;
        const double* xrow = X + static_cast<std::size_t>(src) * din;
        const double* wrow = W + (o * w + k) * din;
        for (std::size_t i = 0; i < din; ++i) acc += wrow[i] * xrow[i];
      }
      out[ti * dout + o] = acc;
    }
  auto n = make_node({t, dout}, std::move(out), "conv1d_time", {seq.node_, weight.node_, bias.node_});
  if (n->requires_grad) {
    auto px = seq.node_, pw = weight.node_, pb = bias.node_;
    Tensor::Node* self = n.get();
    n->backward_fn = [px, pw, pb, self, t, din, dout, w, pad]() {
      const double* G = self->grad.data();
      if (pb->requires_grad) {
        auto& gb = grad_buf(pb);
        for (std::size_t ti = 0; ti < t; ++ti)
          for (std::size_t o = 0; o < dout; ++o) gb[o] += G[ti * dout + o];
      }
      if (pw->requires_grad) {
        auto& gw = grad_buf(pw);
        for (std::size_t ti = 0; ti < t; ++ti)
          for (std::size_t o = 0; o < dout; ++o) {
            const double g = G[ti * dout + o];
            if (g == 0.0) continue;
            for (std::size_t k = 0; k < w; ++k) {
              std::ptrdiff_t src =
                  static_cast<std::ptrdiff_t>(ti) + static_cast<std::ptrdiff_t>(k) - pad;
              if (src < 0 || src >= static_cast<std::ptrdiff_t>(t)) continue;
              const double* xrow = px->data.data() + static_cast<std::size_t>(src) * din;
              double* gwrow = gw.data() + (o * w + k) * din;
              for (std::size_t i = 0; i < din; ++i) gwrow[i] += g * xrow[i];
            }
          }
      }
      if (px->requires_grad) {
        auto& gx = grad_buf(px);
        for (std::size_t ti = 0; ti < t; ++ti)
          for (std::size_t o = 0; o < dout; ++o) {
            const double g = G[ti * dout + o];
            if (g == 0.0) continue;
            for (std::size_t k = 0; k < w; ++k) {
              std::ptrdiff_t src =
                  static_cast<std::ptrdiff_t>(ti) + static_cast<std::ptrdiff_t>(k) - pad;
              if (src < 0 || src >= static_cast<std::ptrdiff_t>(t)) continue;
              const double* wrow = pw->data.data() + (o * w + k) * din;
              double* gxrow = gx.data() + static_cast<std::size_t>(src) * din;
              for (std::size_t i = 0; i < din; ++i) gxrow[i] += g * wrow[i];
            }
          }
      }
    };
  }
  return Tensor::from_node(n);
}

// ---- structural ops -------------------------------------------------------------

Tensor select_rows(const Tensor& a, const std::vector<std::size_t>& idx) {
  require_matrix("select_rows", a);
  const std::size_t d = a.cols();
  for (std::size_t i : idx)
    if (i >= a.rows())
      throw std::out_of_range("select_rows: row " + std::to_string(i) + " out of range for " +
                              a.shape_str());
  std::vector<double> out(idx.size() * d);
  for (std::size_t r = 0; r < idx.size(); ++r)
    std::copy_n(a.values().data() + idx[r] * d, d, out.data() + r * d);
  auto n = make_node({idx.size(), d}, std::move(out), "select_rows", {a.node_});
  if (n->requires_grad) {
    auto pa = a.node_;
    Tensor::Node* self = n.get();
    auto indices = idx;
    n->backward_fn = [pa, self, indices, d]() {
      auto& ga = grad_buf(pa);
      for (std::size_t r = 0; r < indices.size(); ++r) {
        const double* g = self->grad.data() + r * d;
        double* dst = ga.data() + indices[r] * d;
        for (std::size_t i = 0; i < d; ++i) dst[i] += g[i];
      }
    };
  }
  return Tensor::from_node(n);
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  require_matrix("concat_rows", a);
  require_matrix("concat_rows", b);
  if (a.cols() != b.cols()) shape_error("concat_rows", a, b);
  const std::size_t d = a.cols();
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.values().begin(), a.values().end());
  out.insert(out.end(), b.values().begin(), b.values().end());
  auto n = make_node({a.rows() + b.rows(), d}, std::move(out), "concat_rows", {a.node_, b.node_});
  if (n->requires_grad) {
    auto pa = a.node_, pb = b.node_;
    Tensor::Node* self = n.get();
    const std::size_t na = a.size();
    n->backward_fn = [pa, pb, self, na]() {
      if (pa->requires_grad) {
        auto& ga = grad_buf(pa);
        for (std::size_t i = 0; i < na; ++i) ga[i] += self->grad[i];
      }
      if (pb->requires_grad) {
        auto& gb = grad_buf(pb);
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += self->grad[na + i];
      }
    };
  }
  return Tensor::from_node(n);
}

Tensor reverse_time(const Tensor& a) {
  require_matrix("reverse_time", a);
  std::vector<std::size_t> idx(a.rows());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = a.rows() - 1 - i;
  return select_rows(a, idx);
}

Tensor permute_time(const Tensor& a, const std::vector<std::size_t>& perm) {
  require_matrix("permute_time", a);
  if (perm.size() != a.rows())
    throw std::invalid_argument("permute_time: permutation length " +
                                std::to_string(perm.size()) + " != rows of " + a.shape_str());
  std::vector<bool> hit(perm.size(), false);
  for (std::size_t i : perm) {
    if (i >= perm.size() || hit[i])
      throw std::invalid_argument("permute_time: not a permutation");
    hit[i] = true;
  }
  return select_rows(a, perm);
}

Tensor add_rowvec(const Tensor& mat, const Tensor& vec) {
  require_matrix("add_rowvec", mat);
  require_vector("add_rowvec", vec);
  if (mat.cols() != vec.size()) shape_error("add_rowvec", mat, vec);
  const std::size_t t = mat.rows(), d = mat.cols();
  std::vector<double> out(mat.size());
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = mat.values()[i * d + j] + vec.values()[j];
  auto n = make_node(mat.shape(), std::move(out), "add_rowvec", {mat.node_, vec.node_});
  if (n->requires_grad) {
    auto pm = mat.node_, pv = vec.node_;
    Tensor::Node* self = n.get();
    n->backward_fn = [pm, pv, self, t, d]() {
      if (pm->requires_grad) {
        auto& gm = grad_buf(pm);
        for (std::size_t i = 0; i < t * d; ++i) gm[i] += self->grad[i];
      }
      if (pv->requires_grad) {
        auto& gv = grad_buf(pv);
        for (std::size_t i = 0; i < t; ++i)
          for (std::size_t j = 0; j < d; ++j) gv[j] += self->grad[i * d + j];
      }
    };
  }
  return Tensor::from_node(n);
}

Tensor scale_rows(const Tensor& mat, const Tensor& per_row) {
  require_matrix("scale_rows", mat);
  require_vector("scale_rows", per_row);
  if (mat.rows() != per_row.size()) shape_error("scale_rows", mat, per_row);
  const std::size_t t = mat.rows(), d = mat.cols();
  std::vector<double> out(mat.size());
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < d; ++j)
      out[i * d + j] = mat.values()[i * d + j] * per_row.values()[i];
  auto n = make_node(mat.shape(), std::move(out), "scale_rows", {mat.node_, per_row.node_});
  if (n->requires_grad) {
    auto pm = mat.node_, ps = per_row.node_;
    Tensor::Node* self = n.get();
    n->backward_fn = [pm, ps, self, t, d]() {
      if (pm->requires_grad) {
        auto& gm = grad_buf(pm);
        for (std::size_t i = 0; i < t; ++i)
          for (std::size_t j = 0; j < d; ++j) gm[i * d + j] += self->grad[i * d + j] * ps->data[i];
      }
      if (ps->requires_grad) {
        auto& gs = grad_buf(ps);
        for (std::size_t i = 0; i < t; ++i) {
          double acc = 0.0;
          for (std::size_t j = 0; j < d; ++j) acc += self->grad[i * d + j] * pm->data[i * d + j];
          gs[i] += acc;
        }
      }
    };
  }
  return Tensor::from_node(n);
}

Tensor transpose(const Tensor& a) {
  require_matrix("transpose", a);
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a.values()[i * c + j];
  auto n = make_node({c, r}, std::move(out), "transpose", {a.node_});
  if (n->requires_grad) {
    auto pa = a.node_;
    Tensor::Node* self = n.get();
    n->backward_fn = [pa, self, r, c]() {
      auto& ga = grad_buf(pa);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += self->grad[j * r + i];
    };
  }
  return Tensor::from_node(n);
}

Tensor reshape(const Tensor& a, std::vector<std::size_t> shape) {
  if (shape_product(shape) != a.size())
    throw std::invalid_argument("reshape: shape " + shape_to_string(shape) +
                                " incompatible with tensor " + a.shape_str());
  auto n = make_node(std::move(shape), a.values(), "reshape", {a.node_});
  if (n->requires_grad) {
    auto pa = a.node_;
    Tensor::Node* self = n.get();
    n->backward_fn = [pa, self]() {
      auto& ga = grad_buf(pa);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self->grad[i];
    };
  }
  return Tensor::from_node(n);
}

Tensor pick(const Tensor& a, std::size_t flat_index) {
  if (flat_index >= a.size())
    throw std::out_of_range("pick: index " + std::to_string(flat_index) + " out of range for " +
                            a.shape_str());
  auto n = make_node({}, {a.values()[flat_index]}, "pick", {a.node_});
  if (n->requires_grad) {
    auto pa = a.node_;
    Tensor::Node* self = n.get();
    n->backward_fn = [pa, self, flat_index]() { grad_buf(pa)[flat_index] += self->grad[0]; };
  }
  return Tensor::from_node(n);
}

// ---- backward -------------------------------------------------------------------

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw std::invalid_argument("backward: loss must be a scalar tensor");
  if (!loss.requires_grad())
    throw std::invalid_argument("backward: loss has no gradient-tracked inputs");

  // Collect the reachable subgraph; creation order is a topological order.
  std::vector<std::shared_ptr<Tensor::Node>> nodes;
  std::vector<Tensor::Node*> stack{loss.node_.get()};
  std::unordered_set<const Tensor::Node*> seen{loss.node_.get()};
  nodes.push_back(loss.node_);
  while (!stack.empty()) {
    Tensor::Node* cur = stack.back();
    stack.pop_back();
    for (auto& p : cur->parents) {
      if (!p->requires_grad || !seen.insert(p.get()).second) continue;
      nodes.push_back(p);
      stack.push_back(p.get());
    }
  }
  std::sort(nodes.begin(), nodes.end(),
            [](const auto& a, const auto& b) { return a->seq > b->seq; });

  grad_buf(loss.node_)[0] += 1.0;
  for (auto& n : nodes) {
    if (n->backward_fn) n->backward_fn();
  }
  // Release the tape; leaves keep data and accumulated grads.
  for (auto& n : nodes) {
    n->backward_fn = nullptr;
    n->parents.clear();
  }
}

// ---- gradient check ----------------------------------------------------------------

GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                           double step, double tol) {
  if (step <= 0.0) throw std::invalid_argument("grad_check: step must be positive");
  GradCheckResult res;

  Tensor xg(x.shape(), x.values(), true);
  Tensor loss = f(xg);
  if (loss.size() != 1) throw std::invalid_argument("grad_check: f must be scalar-valued");
  if (!std::isfinite(loss.item())) {
    res.finite = false;
    return res;
  }
  backward(loss);
  std::vector<double> analytic = xg.has_grad() ? xg.grad() : std::vector<double>(x.size(), 0.0);

  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<double> vp = x.values(), vm = x.values();
    vp[i] += step;
    vm[i] -= step;
    double fp = f(Tensor(x.shape(), vp, false)).item();
    double fm = f(Tensor(x.shape(), vm, false)).item();
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      res.finite = false;
      return res;
    }
    double numeric = (fp - fm) / (2.0 * step);
    double disc = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
    if (disc > res.max_discrepancy) {
      res.max_discrepancy = disc;
      res.worst_index = i;
    }
  }
  res.ok = res.finite && res.max_discrepancy <= tol;
  return res;
}

}  // namespace rcore
