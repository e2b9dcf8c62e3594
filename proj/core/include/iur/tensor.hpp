#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "iur/rng.hpp"

namespace iur::nn {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Dense row-major tensor of doubles with an optional place on a recording
// tape. Ranks used in this project: 1 (vectors), 2 (matrices), 3 (C,H,W
// feature maps), 4 (conv weights).
class Tensor {
 public:
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;  // sized on demand, same layout as value
  bool requires_grad = false;

  std::vector<TensorPtr> parents;
  std::function<void(Tensor&)> backward_fn;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, double fill = 0.0);

  std::int64_t size() const;
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  double scalar() const;  // value of a single-element tensor

  void ensure_grad();
  void zero_grad();
};

TensorPtr make_tensor(std::vector<int> shape, double fill = 0.0);
TensorPtr make_tensor(std::vector<int> shape, std::vector<double> data);
TensorPtr make_scalar(double v);

// Reverse-mode tape. Ops append results while a GraphScope is active on the
// current thread; backward() replays the tape in reverse. Without an active
// scope every op is a pure eager computation, which keeps frozen-parameter
// forward passes thread-safe.
class Graph {
 public:
  void track(TensorPtr t) { tape_.push_back(std::move(t)); }
  std::size_t size() const { return tape_.size(); }
  void backward(const TensorPtr& loss);

 private:
  std::vector<TensorPtr> tape_;
};

class GraphScope {
 public:
  explicit GraphScope(Graph& g);
  ~GraphScope();
  GraphScope(const GraphScope&) = delete;
  GraphScope& operator=(const GraphScope&) = delete;

 private:
  Graph* previous_;
};

Graph* active_graph();

// Named parameter collection with deterministic iteration order.
class ParamStore {
 public:
  TensorPtr create(const std::string& name, std::vector<int> shape);
  TensorPtr get(const std::string& name) const;
  bool has(const std::string& name) const;
  const std::vector<std::pair<std::string, TensorPtr>>& items() const { return items_; }
  std::size_t total_size() const;
  void zero_grads();

 private:
  std::vector<std::pair<std::string, TensorPtr>> items_;
};

// ---------------------------------------------------------------------------
// Ops. Unless noted, inputs must have matching shapes and results carry
// gradients to every differentiable input.
// ---------------------------------------------------------------------------

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);  // [m,k] x [k,n]
TensorPtr transpose(const TensorPtr& a);                   // 2-D

TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);

TensorPtr add_scalar(const TensorPtr& a, double c);
TensorPtr mul_scalar(const TensorPtr& a, double c);
TensorPtr scale_by(const TensorPtr& a, const TensorPtr& s);  // s is a 1-element tensor

TensorPtr add_rowvec(const TensorPtr& m, const TensorPtr& v);  // m[r,c] + v[c]
TensorPtr mul_colvec(const TensorPtr& m, const TensorPtr& v);  // m[r,c] * v[r]
TensorPtr mul_constvec(const TensorPtr& a, std::vector<double> w);  // elementwise, w constant

TensorPtr rcp(const TensorPtr& a);
TensorPtr sqrt_elem(const TensorPtr& a);
TensorPtr log_elem(const TensorPtr& a);
TensorPtr gelu(const TensorPtr& a);  // exact erf form
TensorPtr sigmoid(const TensorPtr& a);
TensorPtr clamp_min(const TensorPtr& a, double lo);  // zero gradient where clamped

TensorPtr softmax_rows(const TensorPtr& a);  // 2-D rows or a single 1-D row
TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                     double eps = 1e-5);

TensorPtr concat_cols(const std::vector<TensorPtr>& parts);  // 2-D [m,c1+..] ; 1-D concatenation
TensorPtr slice_cols(const TensorPtr& a, int c0, int c1);
TensorPtr stack_rows(const std::vector<TensorPtr>& rows);  // 1-D [d] each -> [n,d]
TensorPtr reshape(const TensorPtr& a, std::vector<int> shape);

TensorPtr gather_rows(const TensorPtr& m, std::vector<int> rows);       // [len(rows), cols]
TensorPtr gather_elems(const TensorPtr& v, std::vector<int> idx);       // 1-D gather
TensorPtr gather_per_row(const TensorPtr& m, std::vector<int> col);     // m[i, col[i]] -> [rows]
TensorPtr embedding(const TensorPtr& table, const std::vector<int>& ids);

TensorPtr mean_rows(const TensorPtr& m, int r0, int r1);  // mean over rows [r0,r1) -> 1-D
TensorPtr sum_all(const TensorPtr& a);                    // -> [1]
TensorPtr mean_all(const TensorPtr& a);                   // -> [1]
TensorPtr dot_const(const TensorPtr& v, std::vector<double> w);  // sum_i v_i w_i -> [1]

TensorPtr dropout(const TensorPtr& a, double p, Rng& rng);  // inverted dropout

// Grid ops on [C,H,W] maps.
TensorPtr conv2d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b, int pad);
TensorPtr avg_pool2(const TensorPtr& x);   // 2x2, stride 2; H and W must be even
TensorPtr upsample2(const TensorPtr& x);   // nearest-neighbour 2x
TensorPtr concat_channels(const TensorPtr& a, const TensorPtr& b);
TensorPtr mask_hw(const TensorPtr& x, std::vector<double> mask);  // mask is [H*W], broadcast over C
TensorPtr pad_hw(const TensorPtr& x, int h, int w);  // zero-pad bottom/right to [C,h,w]
TensorPtr crop_hw(const TensorPtr& x, int h, int w);
TensorPtr chw_to_rows(const TensorPtr& x);  // [(H*W), C]

// Pairwise token features between a [m,d] and b [n,d]: channels 0..d-1 carry
// a_i*b_j per dimension, d..2d-1 carry |a_i-b_j|, channel 2d the cosine
// similarity. Result is [(2d+1), m, n].
TensorPtr pairwise_features(const TensorPtr& a, const TensorPtr& b);

}  // namespace iur::nn
