#pragma once

#include <functional>
#include <unordered_map>
#include <vector>

#include "tensor.h"

namespace uie {

// Reverse-mode automatic differentiation over a per-forward-pass tape.
//
// Nodes are created in topological order; backward() walks them in reverse.
// Parameters enter as leaves keyed by their storage address so gradients can
// be collected per parameter after the pass. A tape is single-threaded; run
// one tape per sample and reduce gradients outside for batch parallelism.
class Tape {
 public:
  using Var = int;
  static constexpr Var kNoVar = -1;

  // Leaf with gradient tracking. `key` identifies the parameter; repeated
  // leaf() calls with the same key return the same node.
  Var leaf(const Tensor& value, const void* key);
  // Input/constant node; no gradient is propagated into it.
  Var constant(Tensor value);

  const Tensor& val(Var v) const { return nodes_[static_cast<size_t>(v)].value; }
  const Tensor& grad(Var v) const;
  // Gradient of a leaf by parameter key; zeros if the leaf was never touched.
  Tensor grad_for(const void* key) const;

  // Seeds d(root)/d(root) = 1 and accumulates gradients into every
  // grad-tracked node. `root` must be scalar.
  void backward(Var root);

  // ---- elementwise ----
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var affine(Var x, double scale, double shift);  // scale*x + shift
  Var square(Var x);
  Var sin_op(Var x);
  Var tanh_op(Var x);
  Var gelu(Var x);
  // s is a scalar node: out = s * x.
  Var scale_by(Var x, Var s);

  // ---- reductions ----
  Var sum(Var x);
  Var mean(Var x);

  // ---- convolutions (CHW) ----
  // x: {Ci,H,W}, w: {Co,Ci,kh,kw}, b: {Co} or kNoVar.
  Var conv2d(Var x, Var w, Var b, int stride, int pad);
  // x: {Ci,H,W}, w: {Ci,Co,k,k}; output {Co,(H-1)*stride+k,(W-1)*stride+k}.
  Var conv_transpose2d(Var x, Var w, Var b, int stride);
  // x: {C,H,W}, w: {C,k,k}, per-channel convolution.
  Var depthwise_conv2d(Var x, Var w, Var b, int pad);

  // Per-position normalization across channels with learnable affine.
  Var layernorm_channels(Var x, Var gamma, Var beta, double eps = 1e-6);

  // ---- matrices ----
  Var matmul(Var a, Var b);       // {m,k}x{k,n}
  Var transpose(Var a);           // {m,n} -> {n,m}
  Var softmax_rows(Var a);        // rows sum to 1; throws NumericError on non-finite logits

  // ---- structure ----
  Var reshape(Var x, std::vector<int> shape);
  Var concat_channels(Var a, Var b);
  Var slice_channels(Var x, int c0, int c1);  // [c0, c1)

  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // allocated lazily
    bool track = false;
    std::function<void(Tape&)> back;
  };

  Var push(Tensor value, bool track, std::function<void(Tape&)> back);
  bool tracked(Var v) const { return nodes_[static_cast<size_t>(v)].track; }
  Tensor& grad_buf(Var v);
  // Accumulate t into v's gradient if v is tracked.
  void accum(Var v, const Tensor& t);

  std::vector<Node> nodes_;
  std::unordered_map<const void*, Var> leaf_index_;
};

using Var = Tape::Var;

}  // namespace uie
