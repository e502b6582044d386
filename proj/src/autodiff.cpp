#include "autodiff.h"

#include <Eigen/Dense>

#include <cmath>
#include <utility>

#include "errors.h"

namespace uie {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using CMapM = Eigen::Map<const MatRM>;

int conv_out_dim(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// Gathers conv patches: col is (Ci*kh*kw) x (Ho*Wo), zero padding.
void im2col(const Tensor& x, int kh, int kw, int stride, int pad, std::vector<double>& col) {
  const int ci = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int ho = conv_out_dim(h, kh, stride, pad);
  const int wo = conv_out_dim(w, kw, stride, pad);
  col.assign(static_cast<size_t>(ci) * kh * kw * ho * wo, 0.0);
  const double* xp = x.data();
  size_t r = 0;
  for (int c = 0; c < ci; ++c) {
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx, ++r) {
        double* row = col.data() + r * static_cast<size_t>(ho) * wo;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          const double* src = xp + (static_cast<size_t>(c) * h + iy) * w;
          double* dst = row + static_cast<size_t>(oy) * wo;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w) dst[ox] = src[ix];
          }
        }
      }
    }
  }
}

// Scatter-adds a col buffer back onto the input layout (adjoint of im2col).
void col2im_add(const std::vector<double>& col, int ci, int h, int w, int kh, int kw, int stride,
                int pad, Tensor& dx) {
  const int ho = conv_out_dim(h, kh, stride, pad);
  const int wo = conv_out_dim(w, kw, stride, pad);
  double* xp = dx.data();
  size_t r = 0;
  for (int c = 0; c < ci; ++c) {
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx, ++r) {
        const double* row = col.data() + r * static_cast<size_t>(ho) * wo;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          double* dst = xp + (static_cast<size_t>(c) * h + iy) * w;
          const double* src = row + static_cast<size_t>(oy) * wo;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

double gelu_fwd(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_bwd(double x) {
  return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) +
         x * std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

}  // namespace

Var Tape::push(Tensor value, bool track, std::function<void(Tape&)> back) {
  Node n;
  n.value = std::move(value);
  n.track = track;
  if (track) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

Var Tape::leaf(const Tensor& value, const void* key) {
  if (key != nullptr) {
    auto it = leaf_index_.find(key);
    if (it != leaf_index_.end()) return it->second;
  }
  Var v = push(value, true, {});
  if (key != nullptr) leaf_index_.emplace(key, v);
  return v;
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, {}); }

const Tensor& Tape::grad(Var v) const {
  const Node& n = nodes_[static_cast<size_t>(v)];
  if (n.grad.empty())
    const_cast<Node&>(n).grad = Tensor::zeros(n.value.shape());
  return n.grad;
}

Tensor Tape::grad_for(const void* key) const {
  auto it = leaf_index_.find(key);
  if (it == leaf_index_.end()) return Tensor();
  return grad(it->second);
}

Tensor& Tape::grad_buf(Var v) {
  Node& n = nodes_[static_cast<size_t>(v)];
  if (n.grad.empty()) n.grad = Tensor::zeros(n.value.shape());
  return n.grad;
}

void Tape::accum(Var v, const Tensor& t) {
  if (!tracked(v)) return;
  Tensor& g = grad_buf(v);
  const double* s = t.data();
  double* d = g.data();
  const int64_t n = g.size();
  for (int64_t i = 0; i < n; ++i) d[i] += s[i];
}

void Tape::backward(Var root) {
  const Node& r = nodes_[static_cast<size_t>(root)];
  if (r.value.size() != 1) throw ShapeError("backward root must be scalar, got " + r.value.shape_str());
  grad_buf(root)[0] = 1.0;
  for (Var v = root; v >= 0; --v) {
    Node& n = nodes_[static_cast<size_t>(v)];
    if (n.track && n.back && !n.grad.empty()) n.back(*this);
  }
}

// ---------------------------------------------------------------------------
// elementwise

Var Tape::add(Var a, Var b) {
  const Tensor &ta = val(a), &tb = val(b);
  if (!ta.same_shape(tb)) throw ShapeError("add: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
  Tensor out = ta;
  for (int64_t i = 0; i < out.size(); ++i) out[i] += tb[i];
  bool tr = tracked(a) || tracked(b);
  return push(std::move(out), tr, [a, b, o = static_cast<Var>(nodes_.size())](Tape& t) {
    const Tensor& g = t.grad(o);
    t.accum(a, g);
    t.accum(b, g);
  });
}

Var Tape::sub(Var a, Var b) {
  const Tensor &ta = val(a), &tb = val(b);
  if (!ta.same_shape(tb)) throw ShapeError("sub: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
  Tensor out = ta;
  for (int64_t i = 0; i < out.size(); ++i) out[i] -= tb[i];
  bool tr = tracked(a) || tracked(b);
  return push(std::move(out), tr, [a, b, o = static_cast<Var>(nodes_.size())](Tape& t) {
    const Tensor& g = t.grad(o);
    t.accum(a, g);
    if (!t.tracked(b)) return;
    Tensor neg = g;
    for (int64_t i = 0; i < neg.size(); ++i) neg[i] = -neg[i];
    t.accum(b, neg);
  });
}

Var Tape::mul(Var a, Var b) {
  const Tensor &ta = val(a), &tb = val(b);
  if (!ta.same_shape(tb)) throw ShapeError("mul: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
  Tensor out = ta;
  for (int64_t i = 0; i < out.size(); ++i) out[i] *= tb[i];
  bool tr = tracked(a) || tracked(b);
  return push(std::move(out), tr, [a, b, o = static_cast<Var>(nodes_.size())](Tape& t) {
    const Tensor& g = t.grad(o);
    if (t.tracked(a)) {
      Tensor da = g;
      const Tensor& vb = t.val(b);
      for (int64_t i = 0; i < da.size(); ++i) da[i] *= vb[i];
      t.accum(a, da);
    }
    if (t.tracked(b)) {
      Tensor db = g;
      const Tensor& va = t.val(a);
      for (int64_t i = 0; i < db.size(); ++i) db[i] *= va[i];
      t.accum(b, db);
    }
  });
}

Var Tape::div(Var a, Var b) {
  const Tensor &ta = val(a), &tb = val(b);
  if (!ta.same_shape(tb)) throw ShapeError("div: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
  Tensor out = ta;
  for (int64_t i = 0; i < out.size(); ++i) out[i] /= tb[i];
  bool tr = tracked(a) || tracked(b);
  return push(std::move(out), tr, [a, b, o = static_cast<Var>(nodes_.size())](Tape& t) {
    const Tensor& g = t.grad(o);
    const Tensor& vb = t.val(b);
    if (t.tracked(a)) {
      Tensor da = g;
      for (int64_t i = 0; i < da.size(); ++i) da[i] /= vb[i];
      t.accum(a, da);
    }
    if (t.tracked(b)) {
      const Tensor& vo = t.val(o);
      Tensor db = g;
      for (int64_t i = 0; i < db.size(); ++i) db[i] *= -vo[i] / vb[i];
      t.accum(b, db);
    }
  });
}

Var Tape::affine(Var x, double scale, double shift) {
  Tensor out = val(x);
  for (int64_t i = 0; i < out.size(); ++i) out[i] = scale * out[i] + shift;
  return push(std::move(out), tracked(x), [x, scale, o = static_cast<Var>(nodes_.size())](Tape& t) {
    Tensor dx = t.grad(o);
    for (int64_t i = 0; i < dx.size(); ++i) dx[i] *= scale;
    t.accum(x, dx);
  });
}

Var Tape::square(Var x) {
  Tensor out = val(x);
  for (int64_t i = 0; i < out.size(); ++i) out[i] *= out[i];
  return push(std::move(out), tracked(x), [x, o = static_cast<Var>(nodes_.size())](Tape& t) {
    Tensor dx = t.grad(o);
    const Tensor& vx = t.val(x);
    for (int64_t i = 0; i < dx.size(); ++i) dx[i] *= 2.0 * vx[i];
    t.accum(x, dx);
  });
}

Var Tape::sin_op(Var x) {
  Tensor out = val(x);
  for (int64_t i = 0; i < out.size(); ++i) out[i] = std::sin(out[i]);
  return push(std::move(out), tracked(x), [x, o = static_cast<Var>(nodes_.size())](Tape& t) {
    Tensor dx = t.grad(o);
    const Tensor& vx = t.val(x);
    for (int64_t i = 0; i < dx.size(); ++i) dx[i] *= std::cos(vx[i]);
    t.accum(x, dx);
  });
}

Var Tape::tanh_op(Var x) {
  Tensor out = val(x);
  for (int64_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
  return push(std::move(out), tracked(x), [x, o = static_cast<Var>(nodes_.size())](Tape& t) {
    Tensor dx = t.grad(o);
    const Tensor& vo = t.val(o);
    for (int64_t i = 0; i < dx.size(); ++i) dx[i] *= 1.0 - vo[i] * vo[i];
    t.accum(x, dx);
  });
}

Var Tape::gelu(Var x) {
  Tensor out = val(x);
  for (int64_t i = 0; i < out.size(); ++i) out[i] = gelu_fwd(out[i]);
  return push(std::move(out), tracked(x), [x, o = static_cast<Var>(nodes_.size())](Tape& t) {
    Tensor dx = t.grad(o);
    const Tensor& vx = t.val(x);
    for (int64_t i = 0; i < dx.size(); ++i) dx[i] *= gelu_bwd(vx[i]);
    t.accum(x, dx);
  });
}

Var Tape::scale_by(Var x, Var s) {
  const Tensor& ts = val(s);
  if (ts.size() != 1) throw ShapeError("scale_by: scale must be scalar, got " + ts.shape_str());
  const double sv = ts[0];
  Tensor out = val(x);
  for (int64_t i = 0; i < out.size(); ++i) out[i] *= sv;
  bool tr = tracked(x) || tracked(s);
  return push(std::move(out), tr, [x, s, sv, o = static_cast<Var>(nodes_.size())](Tape& t) {
    const Tensor& g = t.grad(o);
    if (t.tracked(x)) {
      Tensor dx = g;
      for (int64_t i = 0; i < dx.size(); ++i) dx[i] *= sv;
      t.accum(x, dx);
    }
    if (t.tracked(s)) {
      const Tensor& vx = t.val(x);
      double ds = 0.0;
      for (int64_t i = 0; i < g.size(); ++i) ds += g[i] * vx[i];
      t.accum(s, Tensor::scalar(ds));
    }
  });
}

// ---------------------------------------------------------------------------
// reductions

Var Tape::sum(Var x) {
  double acc = 0.0;
  const Tensor& tx = val(x);
  for (int64_t i = 0; i < tx.size(); ++i) acc += tx[i];
  return push(Tensor::scalar(acc), tracked(x), [x, o = static_cast<Var>(nodes_.size())](Tape& t) {
    const double g = t.grad(o)[0];
    Tensor dx = Tensor::full(t.val(x).shape(), g);
    t.accum(x, dx);
  });
}

Var Tape::mean(Var x) {
  const Tensor& tx = val(x);
  double acc = 0.0;
  for (int64_t i = 0; i < tx.size(); ++i) acc += tx[i];
  const double inv_n = 1.0 / static_cast<double>(tx.size());
  return push(Tensor::scalar(acc * inv_n), tracked(x),
              [x, inv_n, o = static_cast<Var>(nodes_.size())](Tape& t) {
                const double g = t.grad(o)[0] * inv_n;
                Tensor dx = Tensor::full(t.val(x).shape(), g);
                t.accum(x, dx);
              });
}

// ---------------------------------------------------------------------------
// convolutions

Var Tape::conv2d(Var x, Var w, Var b, int stride, int pad) {
  const Tensor &tx = val(x), &tw = val(w);
  if (tx.ndim() != 3) throw ShapeError("conv2d: input must be CHW, got " + tx.shape_str());
  if (tw.ndim() != 4) throw ShapeError("conv2d: weight must be {Co,Ci,kh,kw}, got " + tw.shape_str());
  if (tx.dim(0) != tw.dim(1))
    throw ShapeError("conv2d: input channels " + std::to_string(tx.dim(0)) +
                     " != weight channels " + std::to_string(tw.dim(1)));
  const int co = tw.dim(0), ci = tw.dim(1), kh = tw.dim(2), kw = tw.dim(3);
  const int h = tx.dim(1), wdt = tx.dim(2);
  const int ho = conv_out_dim(h, kh, stride, pad), wo = conv_out_dim(wdt, kw, stride, pad);
  if (ho <= 0 || wo <= 0)
    throw ShapeError("conv2d: kernel larger than padded input, " + tx.shape_str());

  std::vector<double> col;
  im2col(tx, kh, kw, stride, pad, col);
  const int krows = ci * kh * kw, ocols = ho * wo;

  Tensor out({co, ho, wo});
  {
    CMapM wm(tw.data(), co, krows);
    CMapM cm(col.data(), krows, ocols);
    MapM om(out.data(), co, ocols);
    om.noalias() = wm * cm;
  }
  if (b != kNoVar) {
    const Tensor& tb = val(b);
    if (tb.size() != co) throw ShapeError("conv2d: bias size mismatch");
    for (int c = 0; c < co; ++c) {
      double* row = out.data() + static_cast<size_t>(c) * ocols;
      for (int i = 0; i < ocols; ++i) row[i] += tb[c];
    }
  }

  bool tr = tracked(x) || tracked(w) || (b != kNoVar && tracked(b));
  return push(std::move(out), tr,
              [x, w, b, stride, pad, o = static_cast<Var>(nodes_.size())](Tape& t) {
                const Tensor &tx = t.val(x), &tw = t.val(w), &g = t.grad(o);
                const int co = tw.dim(0), ci = tw.dim(1), kh = tw.dim(2), kw = tw.dim(3);
                const int h = tx.dim(1), wdt = tx.dim(2);
                const int ho = g.dim(1), wo = g.dim(2);
                const int krows = ci * kh * kw, ocols = ho * wo;
                CMapM gm(g.data(), co, ocols);
                if (t.tracked(w)) {
                  std::vector<double> col;
                  im2col(tx, kh, kw, stride, pad, col);
                  CMapM cm(col.data(), krows, ocols);
                  Tensor dw({co, ci, kh, kw});
                  MapM dwm(dw.data(), co, krows);
                  dwm.noalias() = gm * cm.transpose();
                  t.accum(w, dw);
                }
                if (b != kNoVar && t.tracked(b)) {
                  Tensor db({co});
                  for (int c = 0; c < co; ++c)
                    db[c] = gm.row(c).sum();
                  t.accum(b, db);
                }
                if (t.tracked(x)) {
                  CMapM wm(tw.data(), co, krows);
                  std::vector<double> dcol(static_cast<size_t>(krows) * ocols);
                  MapM dcm(dcol.data(), krows, ocols);
                  dcm.noalias() = wm.transpose() * gm;
                  Tensor dx({ci, h, wdt});
                  col2im_add(dcol, ci, h, wdt, kh, kw, stride, pad, dx);
                  t.accum(x, dx);
                }
              });
}

Var Tape::conv_transpose2d(Var x, Var w, Var b, int stride) {
  const Tensor &tx = val(x), &tw = val(w);
  if (tx.ndim() != 3 || tw.ndim() != 4)
    throw ShapeError("conv_transpose2d: expected CHW input and {Ci,Co,k,k} weight");
  if (tx.dim(0) != tw.dim(0))
    throw ShapeError("conv_transpose2d: input channels " + std::to_string(tx.dim(0)) +
                     " != weight channels " + std::to_string(tw.dim(0)));
  const int ci = tw.dim(0), co = tw.dim(1), kh = tw.dim(2), kw = tw.dim(3);
  const int h = tx.dim(1), wdt = tx.dim(2);
  const int ho = (h - 1) * stride + kh, wo = (wdt - 1) * stride + kw;

  Tensor out({co, ho, wo});
  if (b != kNoVar) {
    const Tensor& tb = val(b);
    for (int c = 0; c < co; ++c) {
      double* plane = out.data() + static_cast<size_t>(c) * ho * wo;
      for (int i = 0; i < ho * wo; ++i) plane[i] = tb[c];
    }
  }
  for (int c = 0; c < ci; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int xq = 0; xq < wdt; ++xq) {
        const double v = tx.at(c, y, xq);
        for (int oc = 0; oc < co; ++oc) {
          for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
              out.at(oc, y * stride + ky, xq * stride + kx) +=
                  tw[((static_cast<int64_t>(c) * co + oc) * kh + ky) * kw + kx] * v;
            }
          }
        }
      }
    }
  }

  bool tr = tracked(x) || tracked(w) || (b != kNoVar && tracked(b));
  return push(std::move(out), tr,
              [x, w, b, stride, o = static_cast<Var>(nodes_.size())](Tape& t) {
                const Tensor &tx = t.val(x), &tw = t.val(w), &g = t.grad(o);
                const int ci = tw.dim(0), co = tw.dim(1), kh = tw.dim(2), kw = tw.dim(3);
                const int h = tx.dim(1), wdt = tx.dim(2);
                if (t.tracked(x)) {
                  Tensor dx({ci, h, wdt});
                  for (int c = 0; c < ci; ++c)
                    for (int y = 0; y < h; ++y)
                      for (int xq = 0; xq < wdt; ++xq) {
                        double acc = 0.0;
                        for (int oc = 0; oc < co; ++oc)
                          for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx)
                              acc += tw[((static_cast<int64_t>(c) * co + oc) * kh + ky) * kw + kx] *
                                     g.at(oc, y * stride + ky, xq * stride + kx);
                        dx.at(c, y, xq) = acc;
                      }
                  t.accum(x, dx);
                }
                if (t.tracked(w)) {
                  Tensor dw({ci, co, kh, kw});
                  for (int c = 0; c < ci; ++c)
                    for (int oc = 0; oc < co; ++oc)
                      for (int ky = 0; ky < kh; ++ky)
                        for (int kx = 0; kx < kw; ++kx) {
                          double acc = 0.0;
                          for (int y = 0; y < h; ++y)
                            for (int xq = 0; xq < wdt; ++xq)
                              acc += tx.at(c, y, xq) * g.at(oc, y * stride + ky, xq * stride + kx);
                          dw[((static_cast<int64_t>(c) * co + oc) * kh + ky) * kw + kx] = acc;
                        }
                  t.accum(w, dw);
                }
                if (b != kNoVar && t.tracked(b)) {
                  Tensor db({co});
                  for (int oc = 0; oc < co; ++oc) {
                    double acc = 0.0;
                    const double* plane = g.data() + static_cast<size_t>(oc) * g.dim(1) * g.dim(2);
                    for (int i = 0; i < g.dim(1) * g.dim(2); ++i) acc += plane[i];
                    db[oc] = acc;
                  }
                  t.accum(b, db);
                }
              });
}

Var Tape::depthwise_conv2d(Var x, Var w, Var b, int pad) {
  const Tensor &tx = val(x), &tw = val(w);
  if (tx.ndim() != 3 || tw.ndim() != 3)
    throw ShapeError("depthwise_conv2d: expected CHW input and {C,k,k} weight");
  if (tx.dim(0) != tw.dim(0))
    throw ShapeError("depthwise_conv2d: channel mismatch " + std::to_string(tx.dim(0)) + " vs " +
                     std::to_string(tw.dim(0)));
  const int c = tx.dim(0), h = tx.dim(1), wdt = tx.dim(2);
  const int kh = tw.dim(1), kw = tw.dim(2);
  const int ho = conv_out_dim(h, kh, 1, pad), wo = conv_out_dim(wdt, kw, 1, pad);
  if (ho <= 0 || wo <= 0) throw ShapeError("depthwise_conv2d: kernel larger than padded input");

  Tensor out({c, ho, wo});
  for (int ch = 0; ch < c; ++ch) {
    const double bias = (b != kNoVar) ? val(b)[ch] : 0.0;
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        double acc = bias;
        for (int ky = 0; ky < kh; ++ky) {
          const int iy = oy - pad + ky;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < kw; ++kx) {
            const int ix = ox - pad + kx;
            if (ix < 0 || ix >= wdt) continue;
            acc += tw.at(ch, ky, kx) * tx.at(ch, iy, ix);
          }
        }
        out.at(ch, oy, ox) = acc;
      }
  }

  bool tr = tracked(x) || tracked(w) || (b != kNoVar && tracked(b));
  return push(std::move(out), tr, [x, w, b, pad, o = static_cast<Var>(nodes_.size())](Tape& t) {
    const Tensor &tx = t.val(x), &tw = t.val(w), &g = t.grad(o);
    const int c = tx.dim(0), h = tx.dim(1), wdt = tx.dim(2);
    const int kh = tw.dim(1), kw = tw.dim(2);
    const int ho = g.dim(1), wo = g.dim(2);
    Tensor dx, dw, db;
    if (t.tracked(x)) dx = Tensor::zeros({c, h, wdt});
    if (t.tracked(w)) dw = Tensor::zeros({c, kh, kw});
    if (b != kNoVar && t.tracked(b)) db = Tensor::zeros({c});
    for (int ch = 0; ch < c; ++ch)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) {
          const double go = g.at(ch, oy, ox);
          if (!db.empty()) db[ch] += go;
          for (int ky = 0; ky < kh; ++ky) {
            const int iy = oy - pad + ky;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < kw; ++kx) {
              const int ix = ox - pad + kx;
              if (ix < 0 || ix >= wdt) continue;
              if (!dx.empty()) dx.at(ch, iy, ix) += tw.at(ch, ky, kx) * go;
              if (!dw.empty()) dw.at(ch, ky, kx) += tx.at(ch, iy, ix) * go;
            }
          }
        }
    if (!dx.empty()) t.accum(x, dx);
    if (!dw.empty()) t.accum(w, dw);
    if (!db.empty()) t.accum(b, db);
  });
}

// ---------------------------------------------------------------------------
// normalization

Var Tape::layernorm_channels(Var x, Var gamma, Var beta, double eps) {
  const Tensor& tx = val(x);
  if (tx.ndim() != 3) throw ShapeError("layernorm_channels: input must be CHW");
  const int c = tx.dim(0), h = tx.dim(1), w = tx.dim(2);
  const Tensor &tg = val(gamma), &tb = val(beta);
  if (tg.size() != c || tb.size() != c) throw ShapeError("layernorm_channels: affine size mismatch");

  Tensor out({c, h, w});
  Tensor xhat({c, h, w});
  Tensor inv_std({h, w});
  const int hw = h * w;
  for (int p = 0; p < hw; ++p) {
    double mu = 0.0;
    for (int ch = 0; ch < c; ++ch) mu += tx[static_cast<int64_t>(ch) * hw + p];
    mu /= c;
    double var = 0.0;
    for (int ch = 0; ch < c; ++ch) {
      const double d = tx[static_cast<int64_t>(ch) * hw + p] - mu;
      var += d * d;
    }
    var /= c;
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std[p] = inv;
    for (int ch = 0; ch < c; ++ch) {
      const double xh = (tx[static_cast<int64_t>(ch) * hw + p] - mu) * inv;
      xhat[static_cast<int64_t>(ch) * hw + p] = xh;
      out[static_cast<int64_t>(ch) * hw + p] = tg[ch] * xh + tb[ch];
    }
  }

  bool tr = tracked(x) || tracked(gamma) || tracked(beta);
  return push(std::move(out), tr,
              [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std),
               o = static_cast<Var>(nodes_.size())](Tape& t) {
                const Tensor &g = t.grad(o), &tg = t.val(gamma);
                const int c = g.dim(0), hw = g.dim(1) * g.dim(2);
                if (t.tracked(gamma)) {
                  Tensor dg({c});
                  for (int ch = 0; ch < c; ++ch) {
                    double acc = 0.0;
                    for (int p = 0; p < hw; ++p)
                      acc += g[static_cast<int64_t>(ch) * hw + p] * xhat[static_cast<int64_t>(ch) * hw + p];
                    dg[ch] = acc;
                  }
                  t.accum(gamma, dg);
                }
                if (t.tracked(beta)) {
                  Tensor db({c});
                  for (int ch = 0; ch < c; ++ch) {
                    double acc = 0.0;
                    for (int p = 0; p < hw; ++p) acc += g[static_cast<int64_t>(ch) * hw + p];
                    db[ch] = acc;
                  }
                  t.accum(beta, db);
                }
                if (t.tracked(x)) {
                  Tensor dx(g.shape());
                  for (int p = 0; p < hw; ++p) {
                    double m_gh = 0.0, m_ghx = 0.0;
                    for (int ch = 0; ch < c; ++ch) {
                      const double gh = g[static_cast<int64_t>(ch) * hw + p] * tg[ch];
                      m_gh += gh;
                      m_ghx += gh * xhat[static_cast<int64_t>(ch) * hw + p];
                    }
                    m_gh /= c;
                    m_ghx /= c;
                    for (int ch = 0; ch < c; ++ch) {
                      const double gh = g[static_cast<int64_t>(ch) * hw + p] * tg[ch];
                      dx[static_cast<int64_t>(ch) * hw + p] =
                          inv_std[p] * (gh - m_gh - xhat[static_cast<int64_t>(ch) * hw + p] * m_ghx);
                    }
                  }
                  t.accum(x, dx);
                }
              });
}

// ---------------------------------------------------------------------------
// matrices

Var Tape::matmul(Var a, Var b) {
  const Tensor &ta = val(a), &tb = val(b);
  if (ta.ndim() != 2 || tb.ndim() != 2 || ta.dim(1) != tb.dim(0))
    throw ShapeError("matmul: incompatible shapes " + ta.shape_str() + " and " + tb.shape_str());
  const int m = ta.dim(0), k = ta.dim(1), n = tb.dim(1);
  Tensor out({m, n});
  {
    CMapM am(ta.data(), m, k);
    CMapM bm(tb.data(), k, n);
    MapM om(out.data(), m, n);
    om.noalias() = am * bm;
  }
  bool tr = tracked(a) || tracked(b);
  return push(std::move(out), tr, [a, b, o = static_cast<Var>(nodes_.size())](Tape& t) {
    const Tensor &ta = t.val(a), &tb = t.val(b), &g = t.grad(o);
    const int m = ta.dim(0), k = ta.dim(1), n = tb.dim(1);
    CMapM gm(g.data(), m, n);
    if (t.tracked(a)) {
      Tensor da({m, k});
      CMapM bm(tb.data(), k, n);
      MapM dam(da.data(), m, k);
      dam.noalias() = gm * bm.transpose();
      t.accum(a, da);
    }
    if (t.tracked(b)) {
      Tensor db({k, n});
      CMapM am(ta.data(), m, k);
      MapM dbm(db.data(), k, n);
      dbm.noalias() = am.transpose() * gm;
      t.accum(b, db);
    }
  });
}

Var Tape::transpose(Var a) {
  const Tensor& ta = val(a);
  if (ta.ndim() != 2) throw ShapeError("transpose: expected matrix, got " + ta.shape_str());
  const int m = ta.dim(0), n = ta.dim(1);
  Tensor out({n, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(j, i) = ta.at(i, j);
  return push(std::move(out), tracked(a), [a, o = static_cast<Var>(nodes_.size())](Tape& t) {
    const Tensor& g = t.grad(o);
    const int n = g.dim(0), m = g.dim(1);
    Tensor da({m, n});
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < m; ++i) da.at(i, j) = g.at(j, i);
    t.accum(a, da);
  });
}

Var Tape::softmax_rows(Var a) {
  const Tensor& ta = val(a);
  if (ta.ndim() != 2) throw ShapeError("softmax_rows: expected matrix, got " + ta.shape_str());
  if (!ta.all_finite()) throw NumericError("softmax_rows: non-finite logits");
  const int r = ta.dim(0), k = ta.dim(1);
  Tensor out({r, k});
  for (int i = 0; i < r; ++i) {
    double mx = ta.at(i, 0);
    for (int j = 1; j < k; ++j) mx = std::max(mx, ta.at(i, j));
    double z = 0.0;
    for (int j = 0; j < k; ++j) {
      const double e = std::exp(ta.at(i, j) - mx);
      out.at(i, j) = e;
      z += e;
    }
    for (int j = 0; j < k; ++j) out.at(i, j) /= z;
  }
  return push(std::move(out), tracked(a), [a, o = static_cast<Var>(nodes_.size())](Tape& t) {
    const Tensor &g = t.grad(o), &s = t.val(o);
    const int r = g.dim(0), k = g.dim(1);
    Tensor da({r, k});
    for (int i = 0; i < r; ++i) {
      double dot = 0.0;
      for (int j = 0; j < k; ++j) dot += g.at(i, j) * s.at(i, j);
      for (int j = 0; j < k; ++j) da.at(i, j) = s.at(i, j) * (g.at(i, j) - dot);
    }
    t.accum(a, da);
  });
}

// ---------------------------------------------------------------------------
// structure

Var Tape::reshape(Var x, std::vector<int> shape) {
  Tensor out = val(x);
  Tensor probe(shape);
  if (probe.size() != out.size())
    throw ShapeError("reshape: size mismatch " + out.shape_str() + " -> " + probe.shape_str());
  Tensor re = Tensor::from(std::move(shape), out.vec());
  return push(std::move(re), tracked(x), [x, o = static_cast<Var>(nodes_.size())](Tape& t) {
    const Tensor& g = t.grad(o);
    Tensor dx = Tensor::from(t.val(x).shape(), g.vec());
    t.accum(x, dx);
  });
}

Var Tape::concat_channels(Var a, Var b) {
  const Tensor &ta = val(a), &tb = val(b);
  if (ta.ndim() != 3 || tb.ndim() != 3 || ta.dim(1) != tb.dim(1) || ta.dim(2) != tb.dim(2))
    throw ShapeError("concat_channels: spatial mismatch " + ta.shape_str() + " vs " + tb.shape_str());
  const int ca = ta.dim(0), cb = tb.dim(0), h = ta.dim(1), w = ta.dim(2);
  Tensor out({ca + cb, h, w});
  std::copy(ta.data(), ta.data() + ta.size(), out.data());
  std::copy(tb.data(), tb.data() + tb.size(), out.data() + ta.size());
  bool tr = tracked(a) || tracked(b);
  return push(std::move(out), tr, [a, b, ca, cb, h, w, o = static_cast<Var>(nodes_.size())](Tape& t) {
    const Tensor& g = t.grad(o);
    if (t.tracked(a)) {
      Tensor da({ca, h, w});
      std::copy(g.data(), g.data() + da.size(), da.data());
      t.accum(a, da);
    }
    if (t.tracked(b)) {
      Tensor db({cb, h, w});
      std::copy(g.data() + static_cast<int64_t>(ca) * h * w, g.data() + g.size(), db.data());
      t.accum(b, db);
    }
  });
}

Var Tape::slice_channels(Var x, int c0, int c1) {
  const Tensor& tx = val(x);
  if (tx.ndim() != 3 || c0 < 0 || c1 > tx.dim(0) || c0 >= c1)
    throw ShapeError("slice_channels: bad range [" + std::to_string(c0) + "," + std::to_string(c1) +
                     ") for " + tx.shape_str());
  const int h = tx.dim(1), w = tx.dim(2);
  Tensor out({c1 - c0, h, w});
  std::copy(tx.data() + static_cast<int64_t>(c0) * h * w, tx.data() + static_cast<int64_t>(c1) * h * w,
            out.data());
  return push(std::move(out), tracked(x), [x, c0, h, w, o = static_cast<Var>(nodes_.size())](Tape& t) {
    const Tensor& g = t.grad(o);
    Tensor dx = Tensor::zeros(t.val(x).shape());
    std::copy(g.data(), g.data() + g.size(), dx.data() + static_cast<int64_t>(c0) * h * w);
    t.accum(x, dx);
  });
}

}  // namespace uie
