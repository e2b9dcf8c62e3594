#include "iur/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace iur::nn {

namespace {

thread_local Graph* g_active_graph = nullptr;

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using CMapM = Eigen::Map<const MatRM>;

MapM map2(Tensor& t, int rows, int cols) { return MapM(t.value.data(), rows, cols); }
CMapM cmap2(const Tensor& t, int rows, int cols) { return CMapM(t.value.data(), rows, cols); }

void check(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

std::int64_t product(const std::vector<int>& shape) {
  std::int64_t s = 1;
  for (int d : shape) s *= d;
  return s;
}

// Registers the backward closure when a graph is recording and any input
// carries gradients.
void attach(const TensorPtr& result, std::vector<TensorPtr> parents,
            std::function<void(Tensor&)> fn) {
  if (!g_active_graph) return;
  bool any = false;
  for (const auto& p : parents)
    if (p->requires_grad) {
      any = true;
      break;
    }
  if (!any) return;
  result->requires_grad = true;
  result->parents = std::move(parents);
  result->backward_fn = std::move(fn);
  g_active_graph->track(result);
}

void accumulate(const TensorPtr& t, const std::vector<double>& g) {
  if (!t->requires_grad) return;
  t->ensure_grad();
  for (std::size_t i = 0; i < g.size(); ++i) t->grad[i] += g[i];
}

}  // namespace

Tensor::Tensor(std::vector<int> s, double fill)
    : shape(std::move(s)), value(static_cast<std::size_t>(product(shape)), fill) {}

std::int64_t Tensor::size() const { return static_cast<std::int64_t>(value.size()); }

double Tensor::scalar() const {
  if (value.size() != 1) throw std::logic_error("Tensor::scalar: tensor is not a scalar");
  return value[0];
}

void Tensor::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
}

void Tensor::zero_grad() { grad.assign(value.size(), 0.0); }

TensorPtr make_tensor(std::vector<int> shape, double fill) {
  return std::make_shared<Tensor>(std::move(shape), fill);
}

TensorPtr make_tensor(std::vector<int> shape, std::vector<double> data) {
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  check(product(t->shape) == static_cast<std::int64_t>(data.size()),
        "make_tensor: data does not match shape");
  t->value = std::move(data);
  return t;
}

TensorPtr make_scalar(double v) { return make_tensor({1}, std::vector<double>{v}); }

void Graph::backward(const TensorPtr& loss) {
  check(loss->size() == 1, "Graph::backward: loss must be scalar");
  loss->ensure_grad();
  loss->grad[0] += 1.0;
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) {
    Tensor& t = **it;
    if (!t.backward_fn) continue;
    t.ensure_grad();
    t.backward_fn(t);
  }
}

GraphScope::GraphScope(Graph& g) : previous_(g_active_graph) { g_active_graph = &g; }
GraphScope::~GraphScope() { g_active_graph = previous_; }

Graph* active_graph() { return g_active_graph; }

TensorPtr ParamStore::create(const std::string& name, std::vector<int> shape) {
  check(!has(name), "ParamStore::create: duplicate parameter name");
  auto t = make_tensor(std::move(shape));
  t->requires_grad = true;
  items_.emplace_back(name, t);
  return t;
}

TensorPtr ParamStore::get(const std::string& name) const {
  for (const auto& [n, t] : items_)
    if (n == name) return t;
  throw std::out_of_range("ParamStore::get: unknown parameter " + name);
}

bool ParamStore::has(const std::string& name) const {
  for (const auto& [n, _] : items_)
    if (n == name) return true;
  return false;
}

std::size_t ParamStore::total_size() const {
  std::size_t s = 0;
  for (const auto& [_, t] : items_) s += t->value.size();
  return s;
}

void ParamStore::zero_grads() {
  for (auto& [_, t] : items_) t->zero_grad();
}

// ---------------------------------------------------------------------------
// Dense ops
// ---------------------------------------------------------------------------

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
  check(a->rank() == 2 && b->rank() == 2 && a->dim(1) == b->dim(0), "matmul: shape mismatch");
  const int m = a->dim(0), k = a->dim(1), n = b->dim(1);
  auto out = make_tensor({m, n});
  map2(*out, m, n).noalias() = cmap2(*a, m, k) * cmap2(*b, k, n);
  attach(out, {a, b}, [a, b, m, k, n](Tensor& self) {
    CMapM dY(self.grad.data(), m, n);
    if (a->requires_grad) {
      a->ensure_grad();
      MapM dA(a->grad.data(), m, k);
      dA.noalias() += dY * cmap2(*b, k, n).transpose();
    }
    if (b->requires_grad) {
      b->ensure_grad();
      MapM dB(b->grad.data(), k, n);
      dB.noalias() += cmap2(*a, m, k).transpose() * dY;
    }
  });
  return out;
}

TensorPtr transpose(const TensorPtr& a) {
  check(a->rank() == 2, "transpose: rank must be 2");
  const int m = a->dim(0), n = a->dim(1);
  auto out = make_tensor({n, m});
  map2(*out, n, m) = cmap2(*a, m, n).transpose();
  attach(out, {a}, [a, m, n](Tensor& self) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    MapM dA(a->grad.data(), m, n);
    dA += CMapM(self.grad.data(), n, m).transpose();
  });
  return out;
}

namespace {

template <typename Fwd, typename Bwd>
TensorPtr binary_elementwise(const TensorPtr& a, const TensorPtr& b, Fwd fwd, Bwd bwd,
                             const char* name) {
  check(a->shape == b->shape, name);
  auto out = make_tensor(a->shape);
  for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = fwd(a->value[i], b->value[i]);
  attach(out, {a, b}, [a, b, bwd](Tensor& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      auto [da, db] = bwd(a->value[i], b->value[i], self.grad[i]);
      if (a->requires_grad) {
        a->ensure_grad();
        a->grad[i] += da;
      }
      if (b->requires_grad) {
        b->ensure_grad();
        b->grad[i] += db;
      }
    }
  });
  return out;
}

template <typename Fwd, typename Dfn>
TensorPtr unary_elementwise(const TensorPtr& a, Fwd fwd, Dfn dfn) {
  auto out = make_tensor(a->shape);
  for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = fwd(a->value[i]);
  attach(out, {a}, [a, dfn](Tensor& self) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      a->grad[i] += self.grad[i] * dfn(a->value[i], self.value[i]);
  });
  return out;
}

}  // namespace

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
  return binary_elementwise(
      a, b, [](double x, double y) { return x + y; },
      [](double, double, double g) { return std::pair{g, g}; }, "add: shape mismatch");
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
  return binary_elementwise(
      a, b, [](double x, double y) { return x - y; },
      [](double, double, double g) { return std::pair{g, -g}; }, "sub: shape mismatch");
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
  return binary_elementwise(
      a, b, [](double x, double y) { return x * y; },
      [](double x, double y, double g) { return std::pair{g * y, g * x}; },
      "mul: shape mismatch");
}

TensorPtr add_scalar(const TensorPtr& a, double c) {
  return unary_elementwise(
      a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

TensorPtr mul_scalar(const TensorPtr& a, double c) {
  return unary_elementwise(
      a, [c](double x) { return x * c; }, [c](double, double) { return c; });
}

TensorPtr scale_by(const TensorPtr& a, const TensorPtr& s) {
  check(s->size() == 1, "scale_by: scale must be scalar");
  const double sv = s->value[0];
  auto out = make_tensor(a->shape);
  for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = a->value[i] * sv;
  attach(out, {a, s}, [a, s, sv](Tensor& self) {
    if (a->requires_grad) {
      a->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i] * sv;
    }
    if (s->requires_grad) {
      s->ensure_grad();
      double acc = 0.0;
      for (std::size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i] * a->value[i];
      s->grad[0] += acc;
    }
  });
  return out;
}

TensorPtr add_rowvec(const TensorPtr& m, const TensorPtr& v) {
  check(m->rank() == 2 && v->rank() == 1 && m->dim(1) == v->dim(0), "add_rowvec: shape mismatch");
  const int rows = m->dim(0), cols = m->dim(1);
  auto out = make_tensor(m->shape);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * cols + c;
      out->value[i] = m->value[i] + v->value[static_cast<std::size_t>(c)];
    }
  attach(out, {m, v}, [m, v, rows, cols](Tensor& self) {
    if (m->requires_grad) accumulate(m, self.grad);
    if (v->requires_grad) {
      v->ensure_grad();
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
          v->grad[static_cast<std::size_t>(c)] +=
              self.grad[static_cast<std::size_t>(r) * cols + c];
    }
  });
  return out;
}

TensorPtr mul_colvec(const TensorPtr& m, const TensorPtr& v) {
  check(m->rank() == 2 && v->rank() == 1 && m->dim(0) == v->dim(0), "mul_colvec: shape mismatch");
  const int rows = m->dim(0), cols = m->dim(1);
  auto out = make_tensor(m->shape);
  for (int r = 0; r < rows; ++r) {
    const double scale = v->value[static_cast<std::size_t>(r)];
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * cols + c;
      out->value[i] = m->value[i] * scale;
    }
  }
  attach(out, {m, v}, [m, v, rows, cols](Tensor& self) {
    if (m->requires_grad) {
      m->ensure_grad();
      for (int r = 0; r < rows; ++r) {
        const double scale = v->value[static_cast<std::size_t>(r)];
        for (int c = 0; c < cols; ++c) {
          const std::size_t i = static_cast<std::size_t>(r) * cols + c;
          m->grad[i] += self.grad[i] * scale;
        }
      }
    }
    if (v->requires_grad) {
      v->ensure_grad();
      for (int r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (int c = 0; c < cols; ++c) {
          const std::size_t i = static_cast<std::size_t>(r) * cols + c;
          acc += self.grad[i] * m->value[i];
        }
        v->grad[static_cast<std::size_t>(r)] += acc;
      }
    }
  });
  return out;
}

TensorPtr mul_constvec(const TensorPtr& a, std::vector<double> w) {
  check(a->value.size() == w.size(), "mul_constvec: size mismatch");
  auto out = make_tensor(a->shape);
  for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = a->value[i] * w[i];
  auto weights = std::make_shared<std::vector<double>>(std::move(w));
  attach(out, {a}, [a, weights](Tensor& self) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      a->grad[i] += self.grad[i] * (*weights)[i];
  });
  return out;
}

TensorPtr rcp(const TensorPtr& a) {
  return unary_elementwise(
      a, [](double x) { return 1.0 / x; }, [](double, double y) { return -y * y; });
}

TensorPtr sqrt_elem(const TensorPtr& a) {
  return unary_elementwise(
      a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

TensorPtr log_elem(const TensorPtr& a) {
  return unary_elementwise(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

TensorPtr gelu(const TensorPtr& a) {
  constexpr double kInvSqrt2 = 0.7071067811865475244;
  constexpr double kInvSqrt2Pi = 0.3989422804014326779;
  return unary_elementwise(
      a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); },
      [](double x, double) {
        return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
      });
}

TensorPtr sigmoid(const TensorPtr& a) {
  return unary_elementwise(
      a,
      [](double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
      [](double, double y) { return y * (1.0 - y); });
}

TensorPtr clamp_min(const TensorPtr& a, double lo) {
  return unary_elementwise(
      a, [lo](double x) { return x < lo ? lo : x; },
      [lo](double x, double) { return x >= lo ? 1.0 : 0.0; });
}

TensorPtr softmax_rows(const TensorPtr& a) {
  check(a->rank() == 1 || a->rank() == 2, "softmax_rows: rank must be 1 or 2");
  const int rows = a->rank() == 2 ? a->dim(0) : 1;
  const int cols = a->rank() == 2 ? a->dim(1) : a->dim(0);
  auto out = make_tensor(a->shape);
  for (int r = 0; r < rows; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * cols;
    double mx = a->value[base];
    for (int c = 1; c < cols; ++c) mx = std::max(mx, a->value[base + static_cast<std::size_t>(c)]);
    double sum = 0.0;
    for (int c = 0; c < cols; ++c) {
      const double e = std::exp(a->value[base + static_cast<std::size_t>(c)] - mx);
      out->value[base + static_cast<std::size_t>(c)] = e;
      sum += e;
    }
    for (int c = 0; c < cols; ++c) out->value[base + static_cast<std::size_t>(c)] /= sum;
  }
  attach(out, {a}, [a, rows, cols](Tensor& self) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (int r = 0; r < rows; ++r) {
      const std::size_t base = static_cast<std::size_t>(r) * cols;
      double dot = 0.0;
      for (int c = 0; c < cols; ++c)
        dot += self.grad[base + static_cast<std::size_t>(c)] *
               self.value[base + static_cast<std::size_t>(c)];
      for (int c = 0; c < cols; ++c) {
        const std::size_t i = base + static_cast<std::size_t>(c);
        a->grad[i] += self.value[i] * (self.grad[i] - dot);
      }
    }
  });
  return out;
}

TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                     double eps) {
  check(x->rank() == 2, "layer_norm: x must be 2-D");
  const int rows = x->dim(0), cols = x->dim(1);
  check(gamma->rank() == 1 && gamma->dim(0) == cols && beta->rank() == 1 && beta->dim(0) == cols,
        "layer_norm: parameter shape mismatch");
  auto out = make_tensor(x->shape);
  auto xhat = std::make_shared<std::vector<double>>(x->value.size());
  auto inv_std = std::make_shared<std::vector<double>>(static_cast<std::size_t>(rows));
  for (int r = 0; r < rows; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * cols;
    double mean = 0.0;
    for (int c = 0; c < cols; ++c) mean += x->value[base + static_cast<std::size_t>(c)];
    mean /= cols;
    double var = 0.0;
    for (int c = 0; c < cols; ++c) {
      const double d = x->value[base + static_cast<std::size_t>(c)] - mean;
      var += d * d;
    }
    var /= cols;
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[static_cast<std::size_t>(r)] = is;
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = base + static_cast<std::size_t>(c);
      const double xh = (x->value[i] - mean) * is;
      (*xhat)[i] = xh;
      out->value[i] = xh * gamma->value[static_cast<std::size_t>(c)] +
                      beta->value[static_cast<std::size_t>(c)];
    }
  }
  attach(out, {x, gamma, beta}, [x, gamma, beta, xhat, inv_std, rows, cols](Tensor& self) {
    if (gamma->requires_grad) gamma->ensure_grad();
    if (beta->requires_grad) beta->ensure_grad();
    if (x->requires_grad) x->ensure_grad();
    for (int r = 0; r < rows; ++r) {
      const std::size_t base = static_cast<std::size_t>(r) * cols;
      double mean_h = 0.0, mean_hx = 0.0;
      for (int c = 0; c < cols; ++c) {
        const std::size_t i = base + static_cast<std::size_t>(c);
        const double h = self.grad[i] * gamma->value[static_cast<std::size_t>(c)];
        mean_h += h;
        mean_hx += h * (*xhat)[i];
        if (gamma->requires_grad) gamma->grad[static_cast<std::size_t>(c)] += self.grad[i] * (*xhat)[i];
        if (beta->requires_grad) beta->grad[static_cast<std::size_t>(c)] += self.grad[i];
      }
      mean_h /= cols;
      mean_hx /= cols;
      if (x->requires_grad) {
        const double is = (*inv_std)[static_cast<std::size_t>(r)];
        for (int c = 0; c < cols; ++c) {
          const std::size_t i = base + static_cast<std::size_t>(c);
          const double h = self.grad[i] * gamma->value[static_cast<std::size_t>(c)];
          x->grad[i] += is * (h - mean_h - (*xhat)[i] * mean_hx);
        }
      }
    }
  });
  return out;
}

TensorPtr concat_cols(const std::vector<TensorPtr>& parts) {
  check(!parts.empty(), "concat_cols: no inputs");
  if (parts.size() == 1) return parts[0];
  const int rank = parts[0]->rank();
  check(rank == 1 || rank == 2, "concat_cols: rank must be 1 or 2");
  const int rows = rank == 2 ? parts[0]->dim(0) : 1;
  int total_cols = 0;
  for (const auto& p : parts) {
    check(p->rank() == rank && (rank == 1 || p->dim(0) == rows), "concat_cols: shape mismatch");
    total_cols += rank == 2 ? p->dim(1) : p->dim(0);
  }
  auto out = make_tensor(rank == 2 ? std::vector<int>{rows, total_cols}
                                   : std::vector<int>{total_cols});
  int offset = 0;
  for (const auto& p : parts) {
    const int cols = rank == 2 ? p->dim(1) : p->dim(0);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        out->value[static_cast<std::size_t>(r) * total_cols + offset + c] =
            p->value[static_cast<std::size_t>(r) * cols + c];
    offset += cols;
  }
  attach(out, parts, [parts, rows, total_cols, rank](Tensor& self) {
    int offset = 0;
    for (const auto& p : parts) {
      const int cols = rank == 2 ? p->dim(1) : p->dim(0);
      if (p->requires_grad) {
        p->ensure_grad();
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < cols; ++c)
            p->grad[static_cast<std::size_t>(r) * cols + c] +=
                self.grad[static_cast<std::size_t>(r) * total_cols + offset + c];
      }
      offset += cols;
    }
  });
  return out;
}

TensorPtr slice_cols(const TensorPtr& a, int c0, int c1) {
  check(a->rank() == 2 && 0 <= c0 && c0 < c1 && c1 <= a->dim(1), "slice_cols: bad range");
  const int rows = a->dim(0), cols = a->dim(1), width = c1 - c0;
  auto out = make_tensor({rows, width});
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < width; ++c)
      out->value[static_cast<std::size_t>(r) * width + c] =
          a->value[static_cast<std::size_t>(r) * cols + c0 + c];
  attach(out, {a}, [a, rows, cols, width, c0](Tensor& self) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < width; ++c)
        a->grad[static_cast<std::size_t>(r) * cols + c0 + c] +=
            self.grad[static_cast<std::size_t>(r) * width + c];
  });
  return out;
}

TensorPtr stack_rows(const std::vector<TensorPtr>& rows) {
  check(!rows.empty(), "stack_rows: no inputs");
  const int cols = rows[0]->dim(0);
  for (const auto& r : rows)
    check(r->rank() == 1 && r->dim(0) == cols, "stack_rows: shape mismatch");
  const int n = static_cast<int>(rows.size());
  auto out = make_tensor({n, cols});
  for (int r = 0; r < n; ++r)
    std::copy(rows[static_cast<std::size_t>(r)]->value.begin(),
              rows[static_cast<std::size_t>(r)]->value.end(),
              out->value.begin() + static_cast<std::ptrdiff_t>(r) * cols);
  attach(out, rows, [rows, cols](Tensor& self) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (!rows[r]->requires_grad) continue;
      rows[r]->ensure_grad();
      for (int c = 0; c < cols; ++c)
        rows[r]->grad[static_cast<std::size_t>(c)] += self.grad[r * static_cast<std::size_t>(cols) +
                                                                static_cast<std::size_t>(c)];
    }
  });
  return out;
}

TensorPtr reshape(const TensorPtr& a, std::vector<int> shape) {
  check(product(shape) == a->size(), "reshape: size mismatch");
  auto out = make_tensor(std::move(shape), a->value);
  attach(out, {a}, [a](Tensor& self) { accumulate(a, self.grad); });
  return out;
}

TensorPtr gather_rows(const TensorPtr& m, std::vector<int> rows) {
  check(m->rank() == 2, "gather_rows: rank must be 2");
  const int cols = m->dim(1);
  const int n = static_cast<int>(rows.size());
  for (int r : rows) check(0 <= r && r < m->dim(0), "gather_rows: index out of range");
  auto out = make_tensor({n, cols});
  for (int k = 0; k < n; ++k)
    std::copy_n(m->value.begin() +
                    static_cast<std::ptrdiff_t>(rows[static_cast<std::size_t>(k)]) * cols,
                cols, out->value.begin() + static_cast<std::ptrdiff_t>(k) * cols);
  auto idx = std::make_shared<std::vector<int>>(std::move(rows));
  attach(out, {m}, [m, idx, cols](Tensor& self) {
    if (!m->requires_grad) return;
    m->ensure_grad();
    for (std::size_t k = 0; k < idx->size(); ++k)
      for (int c = 0; c < cols; ++c)
        m->grad[static_cast<std::size_t>((*idx)[k]) * cols + static_cast<std::size_t>(c)] +=
            self.grad[k * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)];
  });
  return out;
}

TensorPtr gather_elems(const TensorPtr& v, std::vector<int> idx) {
  check(v->rank() == 1, "gather_elems: rank must be 1");
  for (int i : idx) check(0 <= i && i < v->dim(0), "gather_elems: index out of range");
  auto out = make_tensor({static_cast<int>(idx.size())});
  for (std::size_t k = 0; k < idx.size(); ++k)
    out->value[k] = v->value[static_cast<std::size_t>(idx[k])];
  auto indices = std::make_shared<std::vector<int>>(std::move(idx));
  attach(out, {v}, [v, indices](Tensor& self) {
    if (!v->requires_grad) return;
    v->ensure_grad();
    for (std::size_t k = 0; k < indices->size(); ++k)
      v->grad[static_cast<std::size_t>((*indices)[k])] += self.grad[k];
  });
  return out;
}

TensorPtr gather_per_row(const TensorPtr& m, std::vector<int> col) {
  check(m->rank() == 2 && static_cast<int>(col.size()) == m->dim(0),
        "gather_per_row: shape mismatch");
  const int cols = m->dim(1);
  for (int c : col) check(0 <= c && c < cols, "gather_per_row: column out of range");
  auto out = make_tensor({m->dim(0)});
  for (std::size_t r = 0; r < col.size(); ++r)
    out->value[r] = m->value[r * static_cast<std::size_t>(cols) + static_cast<std::size_t>(col[r])];
  auto idx = std::make_shared<std::vector<int>>(std::move(col));
  attach(out, {m}, [m, idx, cols](Tensor& self) {
    if (!m->requires_grad) return;
    m->ensure_grad();
    for (std::size_t r = 0; r < idx->size(); ++r)
      m->grad[r * static_cast<std::size_t>(cols) + static_cast<std::size_t>((*idx)[r])] +=
          self.grad[r];
  });
  return out;
}

TensorPtr embedding(const TensorPtr& table, const std::vector<int>& ids) {
  return gather_rows(table, ids);
}

TensorPtr mean_rows(const TensorPtr& m, int r0, int r1) {
  check(m->rank() == 2 && 0 <= r0 && r0 < r1 && r1 <= m->dim(0), "mean_rows: bad row range");
  const int cols = m->dim(1);
  const double inv = 1.0 / static_cast<double>(r1 - r0);
  auto out = make_tensor({cols});
  for (int r = r0; r < r1; ++r)
    for (int c = 0; c < cols; ++c)
      out->value[static_cast<std::size_t>(c)] +=
          m->value[static_cast<std::size_t>(r) * cols + c] * inv;
  attach(out, {m}, [m, r0, r1, cols, inv](Tensor& self) {
    if (!m->requires_grad) return;
    m->ensure_grad();
    for (int r = r0; r < r1; ++r)
      for (int c = 0; c < cols; ++c)
        m->grad[static_cast<std::size_t>(r) * cols + c] +=
            self.grad[static_cast<std::size_t>(c)] * inv;
  });
  return out;
}

TensorPtr sum_all(const TensorPtr& a) {
  auto out = make_tensor({1});
  double s = 0.0;
  for (double v : a->value) s += v;
  out->value[0] = s;
  attach(out, {a}, [a](Tensor& self) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (auto& g : a->grad) g += self.grad[0];
  });
  return out;
}

TensorPtr mean_all(const TensorPtr& a) {
  check(a->size() > 0, "mean_all: empty tensor");
  return mul_scalar(sum_all(a), 1.0 / static_cast<double>(a->size()));
}

TensorPtr dot_const(const TensorPtr& v, std::vector<double> w) {
  check(v->value.size() == w.size(), "dot_const: size mismatch");
  auto out = make_tensor({1});
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += v->value[i] * w[i];
  out->value[0] = s;
  auto weights = std::make_shared<std::vector<double>>(std::move(w));
  attach(out, {v}, [v, weights](Tensor& self) {
    if (!v->requires_grad) return;
    v->ensure_grad();
    for (std::size_t i = 0; i < weights->size(); ++i)
      v->grad[i] += self.grad[0] * (*weights)[i];
  });
  return out;
}

TensorPtr dropout(const TensorPtr& a, double p, Rng& rng) {
  check(0.0 <= p && p < 1.0, "dropout: p must be in [0,1)");
  if (p == 0.0) return a;
  const double keep = 1.0 - p;
  std::vector<double> mask(a->value.size());
  for (auto& m : mask) m = rng.next_real() < p ? 0.0 : 1.0 / keep;
  return mul_constvec(a, std::move(mask));
}

// ---------------------------------------------------------------------------
// Grid ops
// ---------------------------------------------------------------------------

TensorPtr conv2d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b, int pad) {
  check(x->rank() == 3 && w->rank() == 4, "conv2d: x must be [C,H,W], w must be [O,C,kh,kw]");
  const int ci = x->dim(0), h = x->dim(1), wd = x->dim(2);
  const int co = w->dim(0), kh = w->dim(2), kw = w->dim(3);
  check(w->dim(1) == ci, "conv2d: channel mismatch");
  check(b->rank() == 1 && b->dim(0) == co, "conv2d: bias shape mismatch");
  const int oh = h + 2 * pad - kh + 1;
  const int ow = wd + 2 * pad - kw + 1;
  check(oh > 0 && ow > 0, "conv2d: kernel larger than padded input");

  const int patch = ci * kh * kw;
  const int cells = oh * ow;
  auto col = std::make_shared<std::vector<double>>(static_cast<std::size_t>(patch) * cells, 0.0);
  for (int c = 0; c < ci; ++c)
    for (int u = 0; u < kh; ++u)
      for (int v = 0; v < kw; ++v) {
        const int prow = (c * kh + u) * kw + v;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy + u - pad;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox + v - pad;
            if (ix < 0 || ix >= wd) continue;
            (*col)[static_cast<std::size_t>(prow) * cells + oy * ow + ox] =
                x->value[(static_cast<std::size_t>(c) * h + iy) * wd + ix];
          }
        }
      }

  auto out = make_tensor({co, oh, ow});
  {
    CMapM W(w->value.data(), co, patch);
    CMapM C(col->data(), patch, cells);
    MapM Y(out->value.data(), co, cells);
    Y.noalias() = W * C;
    for (int o = 0; o < co; ++o)
      for (int i = 0; i < cells; ++i)
        out->value[static_cast<std::size_t>(o) * cells + i] += b->value[static_cast<std::size_t>(o)];
  }

  attach(out, {x, w, b}, [x, w, b, col, ci, h, wd, co, kh, kw, pad, oh, ow](Tensor& self) {
    const int patch = ci * kh * kw;
    const int cells = oh * ow;
    CMapM dY(self.grad.data(), co, cells);
    if (b->requires_grad) {
      b->ensure_grad();
      for (int o = 0; o < co; ++o) {
        double acc = 0.0;
        for (int i = 0; i < cells; ++i) acc += self.grad[static_cast<std::size_t>(o) * cells + i];
        b->grad[static_cast<std::size_t>(o)] += acc;
      }
    }
    if (w->requires_grad) {
      w->ensure_grad();
      MapM dW(w->grad.data(), co, patch);
      CMapM C(col->data(), patch, cells);
      dW.noalias() += dY * C.transpose();
    }
    if (x->requires_grad) {
      x->ensure_grad();
      MatRM dcol = cmap2(*w, co, patch).transpose() * dY;  // [patch, cells]
      for (int c = 0; c < ci; ++c)
        for (int u = 0; u < kh; ++u)
          for (int v = 0; v < kw; ++v) {
            const int prow = (c * kh + u) * kw + v;
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy + u - pad;
              if (iy < 0 || iy >= h) continue;
              for (int ox = 0; ox < ow; ++ox) {
                const int ix = ox + v - pad;
                if (ix < 0 || ix >= wd) continue;
                x->grad[(static_cast<std::size_t>(c) * h + iy) * wd + ix] += dcol(prow, oy * ow + ox);
              }
            }
          }
    }
  });
  return out;
}

TensorPtr avg_pool2(const TensorPtr& x) {
  check(x->rank() == 3 && x->dim(1) % 2 == 0 && x->dim(2) % 2 == 0,
        "avg_pool2: H and W must be even");
  const int c = x->dim(0), h = x->dim(1), w = x->dim(2);
  const int oh = h / 2, ow = w / 2;
  auto out = make_tensor({c, oh, ow});
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < oh; ++i)
      for (int j = 0; j < ow; ++j) {
        double acc = 0.0;
        for (int a = 0; a < 2; ++a)
          for (int bb = 0; bb < 2; ++bb)
            acc += x->value[(static_cast<std::size_t>(ch) * h + 2 * i + a) * w + 2 * j + bb];
        out->value[(static_cast<std::size_t>(ch) * oh + i) * ow + j] = 0.25 * acc;
      }
  attach(out, {x}, [x, c, h, w, oh, ow](Tensor& self) {
    if (!x->requires_grad) return;
    x->ensure_grad();
    for (int ch = 0; ch < c; ++ch)
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j) {
          const double g = 0.25 * self.grad[(static_cast<std::size_t>(ch) * oh + i) * ow + j];
          for (int a = 0; a < 2; ++a)
            for (int bb = 0; bb < 2; ++bb)
              x->grad[(static_cast<std::size_t>(ch) * h + 2 * i + a) * w + 2 * j + bb] += g;
        }
  });
  return out;
}

TensorPtr upsample2(const TensorPtr& x) {
  check(x->rank() == 3, "upsample2: x must be [C,H,W]");
  const int c = x->dim(0), h = x->dim(1), w = x->dim(2);
  const int oh = 2 * h, ow = 2 * w;
  auto out = make_tensor({c, oh, ow});
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < oh; ++i)
      for (int j = 0; j < ow; ++j)
        out->value[(static_cast<std::size_t>(ch) * oh + i) * ow + j] =
            x->value[(static_cast<std::size_t>(ch) * h + i / 2) * w + j / 2];
  attach(out, {x}, [x, c, h, w, oh, ow](Tensor& self) {
    if (!x->requires_grad) return;
    x->ensure_grad();
    for (int ch = 0; ch < c; ++ch)
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j)
          x->grad[(static_cast<std::size_t>(ch) * h + i / 2) * w + j / 2] +=
              self.grad[(static_cast<std::size_t>(ch) * oh + i) * ow + j];
  });
  return out;
}

TensorPtr concat_channels(const TensorPtr& a, const TensorPtr& b) {
  check(a->rank() == 3 && b->rank() == 3 && a->dim(1) == b->dim(1) && a->dim(2) == b->dim(2),
        "concat_channels: spatial shape mismatch");
  const int ca = a->dim(0), cb = b->dim(0), h = a->dim(1), w = a->dim(2);
  auto out = make_tensor({ca + cb, h, w});
  std::copy(a->value.begin(), a->value.end(), out->value.begin());
  std::copy(b->value.begin(), b->value.end(),
            out->value.begin() + static_cast<std::ptrdiff_t>(a->value.size()));
  attach(out, {a, b}, [a, b](Tensor& self) {
    if (a->requires_grad) {
      a->ensure_grad();
      for (std::size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += self.grad[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      const std::size_t off = a->value.size();
      for (std::size_t i = 0; i < b->grad.size(); ++i) b->grad[i] += self.grad[off + i];
    }
  });
  return out;
}

TensorPtr mask_hw(const TensorPtr& x, std::vector<double> mask) {
  check(x->rank() == 3, "mask_hw: x must be [C,H,W]");
  const int c = x->dim(0);
  const std::size_t hw = static_cast<std::size_t>(x->dim(1)) * static_cast<std::size_t>(x->dim(2));
  check(mask.size() == hw, "mask_hw: mask size mismatch");
  std::vector<double> full(x->value.size());
  for (int ch = 0; ch < c; ++ch)
    std::copy(mask.begin(), mask.end(), full.begin() + static_cast<std::ptrdiff_t>(ch * hw));
  return mul_constvec(x, std::move(full));
}

TensorPtr pad_hw(const TensorPtr& x, int h, int w) {
  check(x->rank() == 3 && h >= x->dim(1) && w >= x->dim(2), "pad_hw: target smaller than input");
  const int c = x->dim(0), ih = x->dim(1), iw = x->dim(2);
  if (h == ih && w == iw) return x;
  auto out = make_tensor({c, h, w});
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < ih; ++i)
      for (int j = 0; j < iw; ++j)
        out->value[(static_cast<std::size_t>(ch) * h + i) * w + j] =
            x->value[(static_cast<std::size_t>(ch) * ih + i) * iw + j];
  attach(out, {x}, [x, c, h, w, ih, iw](Tensor& self) {
    if (!x->requires_grad) return;
    x->ensure_grad();
    for (int ch = 0; ch < c; ++ch)
      for (int i = 0; i < ih; ++i)
        for (int j = 0; j < iw; ++j)
          x->grad[(static_cast<std::size_t>(ch) * ih + i) * iw + j] +=
              self.grad[(static_cast<std::size_t>(ch) * h + i) * w + j];
  });
  return out;
}

TensorPtr crop_hw(const TensorPtr& x, int h, int w) {
  check(x->rank() == 3 && h <= x->dim(1) && w <= x->dim(2) && h > 0 && w > 0,
        "crop_hw: bad crop size");
  const int c = x->dim(0), ih = x->dim(1), iw = x->dim(2);
  if (h == ih && w == iw) return x;
  auto out = make_tensor({c, h, w});
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        out->value[(static_cast<std::size_t>(ch) * h + i) * w + j] =
            x->value[(static_cast<std::size_t>(ch) * ih + i) * iw + j];
  attach(out, {x}, [x, c, h, w, ih, iw](Tensor& self) {
    if (!x->requires_grad) return;
    x->ensure_grad();
    for (int ch = 0; ch < c; ++ch)
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
          x->grad[(static_cast<std::size_t>(ch) * ih + i) * iw + j] +=
              self.grad[(static_cast<std::size_t>(ch) * h + i) * w + j];
  });
  return out;
}

TensorPtr chw_to_rows(const TensorPtr& x) {
  check(x->rank() == 3, "chw_to_rows: x must be [C,H,W]");
  const int c = x->dim(0), h = x->dim(1), w = x->dim(2);
  const int cells = h * w;
  auto out = make_tensor({cells, c});
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < cells; ++i)
      out->value[static_cast<std::size_t>(i) * c + ch] =
          x->value[static_cast<std::size_t>(ch) * cells + i];
  attach(out, {x}, [x, c, cells](Tensor& self) {
    if (!x->requires_grad) return;
    x->ensure_grad();
    for (int ch = 0; ch < c; ++ch)
      for (int i = 0; i < cells; ++i)
        x->grad[static_cast<std::size_t>(ch) * cells + i] +=
            self.grad[static_cast<std::size_t>(i) * c + ch];
  });
  return out;
}

TensorPtr pairwise_features(const TensorPtr& a, const TensorPtr& b) {
  check(a->rank() == 2 && b->rank() == 2 && a->dim(1) == b->dim(1),
        "pairwise_features: width mismatch");
  const int m = a->dim(0), n = b->dim(0), d = a->dim(1);
  auto out = make_tensor({2 * d + 1, m, n});

  std::vector<double> norm_a(static_cast<std::size_t>(m)), norm_b(static_cast<std::size_t>(n));
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int k = 0; k < d; ++k) {
      const double v = a->value[static_cast<std::size_t>(i) * d + k];
      s += v * v;
    }
    norm_a[static_cast<std::size_t>(i)] = std::sqrt(s) + 1e-12;
  }
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int k = 0; k < d; ++k) {
      const double v = b->value[static_cast<std::size_t>(j) * d + k];
      s += v * v;
    }
    norm_b[static_cast<std::size_t>(j)] = std::sqrt(s) + 1e-12;
  }

  const std::size_t plane = static_cast<std::size_t>(m) * n;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double dot = 0.0;
      for (int k = 0; k < d; ++k) {
        const double av = a->value[static_cast<std::size_t>(i) * d + k];
        const double bv = b->value[static_cast<std::size_t>(j) * d + k];
        out->value[static_cast<std::size_t>(k) * plane + static_cast<std::size_t>(i) * n + j] =
            av * bv;
        out->value[static_cast<std::size_t>(d + k) * plane + static_cast<std::size_t>(i) * n + j] =
            std::abs(av - bv);
        dot += av * bv;
      }
      out->value[static_cast<std::size_t>(2 * d) * plane + static_cast<std::size_t>(i) * n + j] =
          dot / (norm_a[static_cast<std::size_t>(i)] * norm_b[static_cast<std::size_t>(j)]);
    }

  auto na = std::make_shared<std::vector<double>>(std::move(norm_a));
  auto nb = std::make_shared<std::vector<double>>(std::move(norm_b));
  attach(out, {a, b}, [a, b, na, nb, m, n, d, plane](Tensor& self) {
    if (a->requires_grad) a->ensure_grad();
    if (b->requires_grad) b->ensure_grad();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        const std::size_t cell = static_cast<std::size_t>(i) * n + j;
        const double inv = 1.0 / ((*na)[static_cast<std::size_t>(i)] * (*nb)[static_cast<std::size_t>(j)]);
        const double cos_ij = self.value[static_cast<std::size_t>(2 * d) * plane + cell];
        const double gc = self.grad[static_cast<std::size_t>(2 * d) * plane + cell];
        for (int k = 0; k < d; ++k) {
          const double av = a->value[static_cast<std::size_t>(i) * d + k];
          const double bv = b->value[static_cast<std::size_t>(j) * d + k];
          const double gp = self.grad[static_cast<std::size_t>(k) * plane + cell];
          const double gd = self.grad[static_cast<std::size_t>(d + k) * plane + cell];
          const double sign = av > bv ? 1.0 : (av < bv ? -1.0 : 0.0);
          if (a->requires_grad) {
            double g = gp * bv + gd * sign;
            if (gc != 0.0)
              g += gc * (bv * inv -
                         cos_ij * av / ((*na)[static_cast<std::size_t>(i)] *
                                        (*na)[static_cast<std::size_t>(i)]));
            a->grad[static_cast<std::size_t>(i) * d + k] += g;
          }
          if (b->requires_grad) {
            double g = gp * av - gd * sign;
            if (gc != 0.0)
              g += gc * (av * inv -
                         cos_ij * bv / ((*nb)[static_cast<std::size_t>(j)] *
                                        (*nb)[static_cast<std::size_t>(j)]));
            b->grad[static_cast<std::size_t>(j) * d + k] += g;
          }
        }
      }
  });
  return out;
}

}  // namespace iur::nn
