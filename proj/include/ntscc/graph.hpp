// Copyright 2026 The NTSCC Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NTSCC_GRAPH_HPP_
#define NTSCC_GRAPH_HPP_

#include <functional>
#include <memory>
#include <vector>

#include "ntscc/tensor.hpp"

namespace ntscc {

// Handle into a Graph's tape.
struct Var {
  int32_t id = -1;
  bool valid() const { return id >= 0; }
};

using IndexArray = std::shared_ptr<const std::vector<int64_t>>;

IndexArray MakeIndex(std::vector<int64_t> idx);

// Eager reverse-mode autodiff tape.  Values are computed when an op is
// created, which lets model code branch on intermediate values (the bandwidth
// allocation depends on entropies computed mid-graph).  Backward replays the
// tape in reverse.  Everything is double precision; the finite-difference
// gradient tests rely on that.
class Graph {
 public:
  Graph();

  // When false, ops store values but no backward closures (evaluation mode).
  bool grad_enabled = true;

  // Leaf without gradient.
  Var Input(Tensor v);
  // Leaf whose gradient is accumulated into *sink after Backward().  The
  // value is borrowed; the caller keeps it alive for the graph's lifetime.
  Var Param(const Tensor& value, Tensor* sink);

  const Tensor& val(Var v) const;
  double scalar(Var v) const { return val(v)[0]; }
  size_t num_nodes() const { return nodes_.size(); }

  void Backward(Var loss);

  // Arithmetic, elementwise unless stated otherwise.
  Var Add(Var a, Var b);
  Var Sub(Var a, Var b);
  Var Mul(Var a, Var b);
  Var Div(Var a, Var b);
  Var AddScalar(Var a, double c);
  Var MulScalar(Var a, double c);

  // (n,k) x (k,m) -> (n,m).
  Var MatMul(Var a, Var b);
  // x:(n,k), w:(k,m), optional bias b:(m) added per row.
  Var Linear(Var x, Var w, Var b);
  // Batched matmul on rank-3 tensors with optional transposes of the last
  // two axes: (B,n,k) x (B,k,m) -> (B,n,m).
  Var Bmm(Var a, Var b, bool ta, bool tb);

  // out[i] = idx[i] < 0 ? 0 : flat(x)[idx[i]].  The workhorse for window
  // partitioning, patch merging, head splits, im2col and upsampling; the
  // backward pass is scatter-add.
  Var Gather(Var x, IndexArray idx, std::vector<int64_t> out_dims);

  // 2-D concatenation along columns (equal row counts) / rows (equal cols).
  Var ConcatCols(const std::vector<Var>& parts);
  Var ConcatRows(const std::vector<Var>& parts);

  // Same data, new shape (element count preserved).
  Var Reshape(Var a, std::vector<int64_t> dims);

  // Normalizes over the last axis; gamma/beta have that axis's length.
  Var LayerNorm(Var x, Var gamma, Var beta, double eps);
  // Softmax over the last axis.
  Var SoftmaxLast(Var x);

  Var Gelu(Var a);
  Var Relu(Var a);
  Var Softplus(Var a);
  Var Tanh(Var a);
  Var Sigmoid(Var a);
  Var Exp(Var a);
  Var Log(Var a);
  Var Sqrt(Var a);
  Var PowConst(Var a, double p);
  Var ClampMin(Var a, double c);

  Var SumAll(Var a);
  Var MeanAll(Var a);
  // (n,m) -> (n): sums each row.
  Var RowSum(Var a);
  // x * s where s is a 1-element var.
  Var ScaleBy(Var x, Var s);

  // Probability mass of a unit-width interval centered at v under
  // Normal(mu, sigma^2): Phi((v-mu+1/2)/sigma) - Phi((v-mu-1/2)/sigma),
  // computed via erfc on the tail side so large |v-mu|/sigma stays exact.
  // All three arguments share one shape.
  Var GaussBoxProb(Var v, Var mu, Var sigma);

 private:
  struct Node {
    Tensor val;
    const Tensor* ext = nullptr;
    Tensor* sink = nullptr;
    Tensor grad;
    bool rg = false;
    std::function<void(Graph&, int32_t)> back;
  };

  const Tensor& V(Var v) const {
    const Node& n = nodes_[v.id];
    return n.ext ? *n.ext : n.val;
  }
  bool RG(Var v) const { return v.valid() && nodes_[v.id].rg; }
  Tensor& GradBuf(Var v);
  bool HasGrad(Var v) const { return !nodes_[v.id].grad.empty(); }
  Var MakeOp(Tensor out, std::initializer_list<Var> parents,
             std::function<void(Graph&, int32_t)> back);
  Var MakeOpVec(Tensor out, const std::vector<Var>& parents,
                std::function<void(Graph&, int32_t)> back);

  std::vector<Node> nodes_;
  std::vector<int32_t> param_ids_;
};

}  // namespace ntscc

#endif  // NTSCC_GRAPH_HPP_
