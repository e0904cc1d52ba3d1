#include "xltrack/layers.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstring>

#include "xltrack/errors.hpp"

namespace xltrack::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<RowMat>;
using MapCRM = Eigen::Map<const RowMat>;

bool wants(GraphNode& n, std::size_t i) { return n.parents[i]->requires_grad; }
Tensor& pgrad(GraphNode& n, std::size_t i) { return n.parents[i]->ensure_grad(); }
const Tensor& pval(GraphNode& n, std::size_t i) { return n.parents[i]->value; }

}  // namespace

// ---------------------------------------------------------------- elementwise

Variable add(const Variable& a, const Variable& b) {
  check_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return make_node(std::move(out), {a.node(), b.node()}, [](GraphNode& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (!wants(self, p)) continue;
      Tensor& g = pgrad(self, p);
      for (std::int64_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Variable sub(const Variable& a, const Variable& b) {
  check_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return make_node(std::move(out), {a.node(), b.node()}, [](GraphNode& self) {
    if (wants(self, 0)) {
      Tensor& g = pgrad(self, 0);
      for (std::int64_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (wants(self, 1)) {
      Tensor& g = pgrad(self, 1);
      for (std::int64_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Variable mul(const Variable& a, const Variable& b) {
  check_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return make_node(std::move(out), {a.node(), b.node()}, [](GraphNode& self) {
    if (wants(self, 0)) {
      Tensor& g = pgrad(self, 0);
      const Tensor& bv = pval(self, 1);
      for (std::int64_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bv[i];
    }
    if (wants(self, 1)) {
      Tensor& g = pgrad(self, 1);
      const Tensor& av = pval(self, 0);
      for (std::int64_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * av[i];
    }
  });
}

Variable scale(const Variable& a, double c) {
  Tensor out = a.value();
  for (auto& v : out.data) v *= c;
  return make_node(std::move(out), {a.node()}, [c](GraphNode& self) {
    if (!wants(self, 0)) return;
    Tensor& g = pgrad(self, 0);
    for (std::int64_t i = 0; i < g.size(); ++i) g[i] += c * self.grad[i];
  });
}

Variable sum(const Variable& a) {
  double s = 0.0;
  for (const double v : a.value().data) s += v;
  return make_node(Tensor::scalar(s), {a.node()}, [](GraphNode& self) {
    if (!wants(self, 0)) return;
    Tensor& g = pgrad(self, 0);
    const double gs = self.grad[0];
    for (auto& v : g.data) v += gs;
  });
}

Variable mean(const Variable& a) {
  const double n = static_cast<double>(a.value().size());
  double s = 0.0;
  for (const double v : a.value().data) s += v;
  return make_node(Tensor::scalar(s / n), {a.node()}, [n](GraphNode& self) {
    if (!wants(self, 0)) return;
    Tensor& g = pgrad(self, 0);
    const double gs = self.grad[0] / n;
    for (auto& v : g.data) v += gs;
  });
}

Variable relu(const Variable& a) {
  Tensor out = a.value();
  for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
  return make_node(std::move(out), {a.node()}, [](GraphNode& self) {
    if (!wants(self, 0)) return;
    Tensor& g = pgrad(self, 0);
    const Tensor& x = pval(self, 0);
    for (std::int64_t i = 0; i < g.size(); ++i) {
      if (x[i] > 0.0) g[i] += self.grad[i];
    }
  });
}

Variable sigmoid(const Variable& a) {
  Tensor out = a.value();
  for (auto& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
  return make_node(std::move(out), {a.node()}, [](GraphNode& self) {
    if (!wants(self, 0)) return;
    Tensor& g = pgrad(self, 0);
    for (std::int64_t i = 0; i < g.size(); ++i) {
      const double s = self.value[i];
      g[i] += self.grad[i] * s * (1.0 - s);
    }
  });
}

Variable tanh_op(const Variable& a) {
  Tensor out = a.value();
  for (auto& v : out.data) v = std::tanh(v);
  return make_node(std::move(out), {a.node()}, [](GraphNode& self) {
    if (!wants(self, 0)) return;
    Tensor& g = pgrad(self, 0);
    for (std::int64_t i = 0; i < g.size(); ++i) {
      const double t = self.value[i];
      g[i] += self.grad[i] * (1.0 - t * t);
    }
  });
}

Variable mse_loss(const Variable& a, const Variable& b) {
  check_same_shape(a.value(), b.value(), "mse_loss");
  const double n = static_cast<double>(a.value().size());
  double s = 0.0;
  for (std::int64_t i = 0; i < a.value().size(); ++i) {
    const double d = a.value()[i] - b.value()[i];
    s += d * d;
  }
  return make_node(Tensor::scalar(s / n), {a.node(), b.node()}, [n](GraphNode& self) {
    const Tensor& av = pval(self, 0);
    const Tensor& bv = pval(self, 1);
    const double c = 2.0 * self.grad[0] / n;
    if (wants(self, 0)) {
      Tensor& g = pgrad(self, 0);
      for (std::int64_t i = 0; i < g.size(); ++i) g[i] += c * (av[i] - bv[i]);
    }
    if (wants(self, 1)) {
      Tensor& g = pgrad(self, 1);
      for (std::int64_t i = 0; i < g.size(); ++i) g[i] -= c * (av[i] - bv[i]);
    }
  });
}

// --------------------------------------------------------------------- shape

Variable reshape(const Variable& a, std::vector<int> new_shape) {
  if (shape_size(new_shape) != a.value().size()) {
    throw ShapeError("reshape: cannot view " + shape_str(a.value().shape) +
                     " as " + shape_str(new_shape));
  }
  Tensor out(new_shape, a.value().data);
  return make_node(std::move(out), {a.node()}, [](GraphNode& self) {
    if (!wants(self, 0)) return;
    Tensor& g = pgrad(self, 0);
    for (std::int64_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Variable flatten(const Variable& a) {
  return reshape(a, {static_cast<int>(a.value().size())});
}

Variable concat(const std::vector<Variable>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const auto& ref = parts[0].value().shape;
  if (axis < 0 || axis >= static_cast<int>(ref.size())) {
    throw ShapeError("concat: axis " + std::to_string(axis) +
                     " out of range for shape " + shape_str(ref));
  }
  int axis_total = 0;
  for (const auto& p : parts) {
    const auto& s = p.value().shape;
    if (s.size() != ref.size()) {
      throw ShapeError("concat: rank mismatch " + shape_str(ref) + " vs " +
                       shape_str(s));
    }
    for (std::size_t d = 0; d < s.size(); ++d) {
      if (static_cast<int>(d) != axis && s[d] != ref[d]) {
        throw ShapeError("concat: shape mismatch " + shape_str(ref) + " vs " +
                         shape_str(s) + " on non-concat axis " + std::to_string(d));
      }
    }
    axis_total += s[axis];
  }

  std::vector<int> out_shape = ref;
  out_shape[axis] = axis_total;
  Tensor out(out_shape);

  std::int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= ref[d];
  for (std::size_t d = axis + 1; d < ref.size(); ++d) inner *= ref[d];

  std::vector<std::int64_t> part_axis(parts.size());
  std::vector<std::shared_ptr<GraphNode>> nodes;
  nodes.reserve(parts.size());
  {
    std::int64_t offset = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
      const std::int64_t pa = parts[p].value().shape[axis];
      part_axis[p] = pa;
      const double* src = parts[p].value().data.data();
      for (std::int64_t o = 0; o < outer; ++o) {
        std::memcpy(out.data.data() + (o * axis_total + offset) * inner,
                    src + o * pa * inner,
                    static_cast<std::size_t>(pa * inner) * sizeof(double));
      }
      offset += pa;
      nodes.push_back(parts[p].node());
    }
  }

  return make_node(std::move(out), std::move(nodes),
                   [outer, inner, axis_total, part_axis](GraphNode& self) {
                     std::int64_t offset = 0;
                     for (std::size_t p = 0; p < self.parents.size(); ++p) {
                       const std::int64_t pa = part_axis[p];
                       if (wants(self, p)) {
                         Tensor& g = pgrad(self, p);
                         for (std::int64_t o = 0; o < outer; ++o) {
                           const double* src =
                               self.grad.data.data() + (o * axis_total + offset) * inner;
                           double* dst = g.data.data() + o * pa * inner;
                           for (std::int64_t i = 0; i < pa * inner; ++i) dst[i] += src[i];
                         }
                       }
                       offset += pa;
                     }
                   });
}

// --------------------------------------------------------------------- dense

namespace {

void check_dense_shapes(const Tensor& x, const Tensor& W, const Tensor* b,
                        const char* who) {
  if (W.ndim() != 2) {
    throw ShapeError(std::string(who) + ": weights must be 2D, got " +
                     shape_str(W.shape));
  }
  const int n = W.dim(1);
  const int xin = (x.ndim() == 1) ? x.dim(0) : x.dim(1);
  if (x.ndim() > 2) {
    throw ShapeError(std::string(who) + ": input must be 1D or 2D, got " +
                     shape_str(x.shape));
  }
  if (xin != n) {
    throw ShapeError(std::string(who) + ": input " + shape_str(x.shape) +
                     " incompatible with weights " + shape_str(W.shape));
  }
  if (b && (b->ndim() != 1 || b->dim(0) != W.dim(0))) {
    throw ShapeError(std::string(who) + ": bias " + shape_str(b->shape) +
                     " incompatible with weights " + shape_str(W.shape));
  }
}

Variable dense_impl(const Variable& x, const Variable& W, const Variable* b) {
  const Tensor& xv = x.value();
  const Tensor& Wv = W.value();
  check_dense_shapes(xv, Wv, b ? &b->value() : nullptr, b ? "dense" : "linear");

  const int m = Wv.dim(0);
  const int n = Wv.dim(1);
  const int B = (xv.ndim() == 2) ? xv.dim(0) : 1;

  Tensor out(xv.ndim() == 2 ? std::vector<int>{B, m} : std::vector<int>{m});
  MapCRM Wm(Wv.data.data(), m, n);
  MapCRM Xm(xv.data.data(), B, n);
  MapRM Om(out.data.data(), B, m);
  Om.noalias() = Xm * Wm.transpose();
  if (b) {
    MapCRM bm(b->value().data.data(), 1, m);
    Om.rowwise() += bm.row(0);
  }

  std::vector<std::shared_ptr<GraphNode>> parents{x.node(), W.node()};
  if (b) parents.push_back(b->node());
  return make_node(std::move(out), std::move(parents), [m, n, B](GraphNode& self) {
    MapCRM G(self.grad.data.data(), B, m);
    const Tensor& xv = pval(self, 0);
    const Tensor& Wv = pval(self, 1);
    MapCRM Xm(xv.data.data(), B, n);
    MapCRM Wm(Wv.data.data(), m, n);
    if (wants(self, 0)) {
      MapRM Gx(pgrad(self, 0).data.data(), B, n);
      Gx.noalias() += G * Wm;
    }
    if (wants(self, 1)) {
      MapRM Gw(pgrad(self, 1).data.data(), m, n);
      Gw.noalias() += G.transpose() * Xm;
    }
    if (self.parents.size() > 2 && wants(self, 2)) {
      MapRM Gb(pgrad(self, 2).data.data(), 1, m);
      Gb.row(0) += G.colwise().sum();
    }
  });
}

}  // namespace

Variable dense(const Variable& x, const Variable& W, const Variable& b) {
  return dense_impl(x, W, &b);
}

Variable linear(const Variable& x, const Variable& W) {
  return dense_impl(x, W, nullptr);
}

// -------------------------------------------------------------------- conv2d

namespace {

struct ConvDims {
  int B = 1, C = 0, H = 0, W = 0;
  int C_out = 0, k = 0, stride = 1, pad = 0;
  int Hp = 0, Wp = 0;
  bool batched = false;
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
                   int pad) {
  if (w.ndim() != 4 || w.dim(2) != w.dim(3)) {
    throw ShapeError("conv2d: weights must be (C_out, C_in, k, k), got " +
                     shape_str(w.shape));
  }
  if (b.ndim() != 1 || b.dim(0) != w.dim(0)) {
    throw ShapeError("conv2d: bias " + shape_str(b.shape) +
                     " incompatible with weights " + shape_str(w.shape));
  }
  if (stride < 1 || pad < 0) {
    throw DomainError("conv2d: stride must be >= 1 and padding >= 0");
  }
  ConvDims d;
  d.batched = (x.ndim() == 4);
  if (x.ndim() != 3 && x.ndim() != 4) {
    throw ShapeError("conv2d: input must be (C,H,W) or (B,C,H,W), got " +
                     shape_str(x.shape));
  }
  const int off = d.batched ? 1 : 0;
  d.B = d.batched ? x.dim(0) : 1;
  d.C = x.dim(off);
  d.H = x.dim(off + 1);
  d.W = x.dim(off + 2);
  d.C_out = w.dim(0);
  d.k = w.dim(2);
  d.stride = stride;
  d.pad = pad;
  if (d.C != w.dim(1)) {
    throw ShapeError("conv2d: input channels " + std::to_string(d.C) +
                     " vs weight channels " + std::to_string(w.dim(1)) +
                     " (input " + shape_str(x.shape) + ", weights " +
                     shape_str(w.shape) + ")");
  }
  if (d.k > d.H + 2 * pad || d.k > d.W + 2 * pad) {
    throw ShapeError("conv2d: kernel " + std::to_string(d.k) +
                     " larger than padded input " + shape_str(x.shape));
  }
  d.Hp = (d.H + 2 * pad - d.k) / stride + 1;
  d.Wp = (d.W + 2 * pad - d.k) / stride + 1;
  return d;
}

// col is (C*k*k) x (Hp*Wp), row-major.
void im2col(const double* x, const ConvDims& d, double* col) {
  const int L = d.Hp * d.Wp;
  for (int c = 0; c < d.C; ++c) {
    for (int ki = 0; ki < d.k; ++ki) {
      for (int kj = 0; kj < d.k; ++kj) {
        double* row = col + (static_cast<std::int64_t>(c) * d.k * d.k + ki * d.k + kj) * L;
        for (int oh = 0; oh < d.Hp; ++oh) {
          const int ih = oh * d.stride - d.pad + ki;
          for (int ow = 0; ow < d.Wp; ++ow) {
            const int iw = ow * d.stride - d.pad + kj;
            row[oh * d.Wp + ow] =
                (ih >= 0 && ih < d.H && iw >= 0 && iw < d.W)
                    ? x[(static_cast<std::int64_t>(c) * d.H + ih) * d.W + iw]
                    : 0.0;
          }
        }
      }
    }
  }
}

// Scatter-add of a col-layout gradient back onto the input image.
void col2im_add(const double* col, const ConvDims& d, double* gx) {
  const int L = d.Hp * d.Wp;
  for (int c = 0; c < d.C; ++c) {
    for (int ki = 0; ki < d.k; ++ki) {
      for (int kj = 0; kj < d.k; ++kj) {
        const double* row =
            col + (static_cast<std::int64_t>(c) * d.k * d.k + ki * d.k + kj) * L;
        for (int oh = 0; oh < d.Hp; ++oh) {
          const int ih = oh * d.stride - d.pad + ki;
          if (ih < 0 || ih >= d.H) continue;
          for (int ow = 0; ow < d.Wp; ++ow) {
            const int iw = ow * d.stride - d.pad + kj;
            if (iw < 0 || iw >= d.W) continue;
            gx[(static_cast<std::int64_t>(c) * d.H + ih) * d.W + iw] +=
                row[oh * d.Wp + ow];
          }
        }
      }
    }
  }
}

}  // namespace

Variable conv2d(const Variable& x, const Variable& W, const Variable& b,
                int stride, int padding) {
  const ConvDims d = conv_dims(x.value(), W.value(), b.value(), stride, padding);
  const int K = d.C * d.k * d.k;
  const int L = d.Hp * d.Wp;

  Tensor out(d.batched ? std::vector<int>{d.B, d.C_out, d.Hp, d.Wp}
                       : std::vector<int>{d.C_out, d.Hp, d.Wp});
  {
    std::vector<double> colbuf(static_cast<std::size_t>(K) * L);
    MapCRM Wm(W.value().data.data(), d.C_out, K);
    MapCRM bm(b.value().data.data(), 1, d.C_out);
    const std::int64_t in_stride = static_cast<std::int64_t>(d.C) * d.H * d.W;
    const std::int64_t out_stride = static_cast<std::int64_t>(d.C_out) * L;
    for (int bi = 0; bi < d.B; ++bi) {
      im2col(x.value().data.data() + bi * in_stride, d, colbuf.data());
      MapCRM colm(colbuf.data(), K, L);
      MapRM outm(out.data.data() + bi * out_stride, d.C_out, L);
      outm.noalias() = Wm * colm;
      outm.colwise() += bm.row(0).transpose();
    }
  }

  return make_node(std::move(out), {x.node(), W.node(), b.node()},
                   [d, K, L](GraphNode& self) {
    const Tensor& xv = pval(self, 0);
    const Tensor& Wv = pval(self, 1);
    MapCRM Wm(Wv.data.data(), d.C_out, K);
    const std::int64_t in_stride = static_cast<std::int64_t>(d.C) * d.H * d.W;
    const std::int64_t out_stride = static_cast<std::int64_t>(d.C_out) * L;
    std::vector<double> colbuf(static_cast<std::size_t>(K) * L);
    std::vector<double> dcolbuf;
    for (int bi = 0; bi < d.B; ++bi) {
      MapCRM G(self.grad.data.data() + bi * out_stride, d.C_out, L);
      if (wants(self, 1)) {
        // dW needs the col matrix; rebuilt here instead of cached to keep
        // training memory proportional to activations, not patches.
        im2col(xv.data.data() + bi * in_stride, d, colbuf.data());
        MapCRM colm(colbuf.data(), K, L);
        MapRM Gw(pgrad(self, 1).data.data(), d.C_out, K);
        Gw.noalias() += G * colm.transpose();
      }
      if (wants(self, 2)) {
        MapRM Gb(pgrad(self, 2).data.data(), 1, d.C_out);
        Gb.row(0) += G.rowwise().sum().transpose();
      }
      if (wants(self, 0)) {
        dcolbuf.assign(static_cast<std::size_t>(K) * L, 0.0);
        MapRM dcolm(dcolbuf.data(), K, L);
        dcolm.noalias() = Wm.transpose() * G;
        col2im_add(dcolbuf.data(), d, pgrad(self, 0).data.data() + bi * in_stride);
      }
    }
  });
}

// -------------------------------------------------------------------- pool2d

Variable pool2d(const Variable& x, PoolKind kind, int k, int stride) {
  const Tensor& xv = x.value();
  if (xv.ndim() != 3 && xv.ndim() != 4) {
    throw ShapeError("pool2d: input must be (C,H,W) or (B,C,H,W), got " +
                     shape_str(xv.shape));
  }
  if (k < 1 || stride < 1) throw DomainError("pool2d: k and stride must be >= 1");
  const bool batched = (xv.ndim() == 4);
  const int off = batched ? 1 : 0;
  const int B = batched ? xv.dim(0) : 1;
  const int C = xv.dim(off);
  const int H = xv.dim(off + 1);
  const int W = xv.dim(off + 2);
  if (k > H || k > W) {
    throw ShapeError("pool2d: window " + std::to_string(k) +
                     " exceeds spatial dims of " + shape_str(xv.shape));
  }
  const int Hp = (H - k) / stride + 1;
  const int Wp = (W - k) / stride + 1;

  Tensor out(batched ? std::vector<int>{B, C, Hp, Wp}
                     : std::vector<int>{C, Hp, Wp});
  std::vector<std::int64_t> argmax;
  if (kind == PoolKind::Max) argmax.resize(out.data.size());

  const double inv_area = 1.0 / (k * k);
  std::int64_t oi = 0;
  for (std::int64_t plane = 0; plane < static_cast<std::int64_t>(B) * C; ++plane) {
    const double* src = xv.data.data() + plane * H * W;
    for (int oh = 0; oh < Hp; ++oh) {
      for (int ow = 0; ow < Wp; ++ow, ++oi) {
        const int h0 = oh * stride, w0 = ow * stride;
        if (kind == PoolKind::Max) {
          std::int64_t best = static_cast<std::int64_t>(h0) * W + w0;
          double bv = src[best];
          for (int i = 0; i < k; ++i) {
            for (int j = 0; j < k; ++j) {
              const std::int64_t idx = static_cast<std::int64_t>(h0 + i) * W + w0 + j;
              if (src[idx] > bv) {
                bv = src[idx];
                best = idx;
              }
            }
          }
          out.data[oi] = bv;
          argmax[oi] = plane * H * W + best;
        } else {
          double acc = 0.0;
          for (int i = 0; i < k; ++i) {
            for (int j = 0; j < k; ++j) {
              acc += src[static_cast<std::int64_t>(h0 + i) * W + w0 + j];
            }
          }
          out.data[oi] = acc * inv_area;
        }
      }
    }
  }

  return make_node(
      std::move(out), {x.node()},
      [kind, k, stride, B, C, H, W, Hp, Wp, inv_area,
       argmax = std::move(argmax)](GraphNode& self) {
        if (!wants(self, 0)) return;
        Tensor& g = pgrad(self, 0);
        if (kind == PoolKind::Max) {
          for (std::size_t oi = 0; oi < argmax.size(); ++oi) {
            g.data[argmax[oi]] += self.grad.data[oi];
          }
          return;
        }
        std::int64_t oi = 0;
        for (std::int64_t plane = 0; plane < static_cast<std::int64_t>(B) * C; ++plane) {
          double* dst = g.data.data() + plane * H * W;
          for (int oh = 0; oh < Hp; ++oh) {
            for (int ow = 0; ow < Wp; ++ow, ++oi) {
              const double gv = self.grad.data[oi] * inv_area;
              const int h0 = oh * stride, w0 = ow * stride;
              for (int i = 0; i < k; ++i) {
                for (int j = 0; j < k; ++j) {
                  dst[static_cast<std::int64_t>(h0 + i) * W + w0 + j] += gv;
                }
              }
            }
          }
        }
      });
}

// ------------------------------------------------------------------ upsample

namespace {

struct LinearTap {
  int i0 = 0, i1 = 0;
  double w1 = 0.0;  // weight on i1; (1 - w1) on i0
};

std::vector<LinearTap> bilinear_taps(int src, int dst) {
  std::vector<LinearTap> taps(dst);
  const double scale = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    double f = (i + 0.5) * scale - 0.5;
    if (f < 0.0) f = 0.0;
    if (f > src - 1) f = src - 1;
    const int i0 = static_cast<int>(f);
    taps[i].i0 = i0;
    taps[i].i1 = (i0 + 1 < src) ? i0 + 1 : i0;
    taps[i].w1 = f - i0;
  }
  return taps;
}

}  // namespace

Variable upsample(const Variable& x, int target_h, int target_w, UpsampleMode mode) {
  const Tensor& xv = x.value();
  if (xv.ndim() != 3 && xv.ndim() != 4) {
    throw ShapeError("upsample: input must be (C,H,W) or (B,C,H,W), got " +
                     shape_str(xv.shape));
  }
  if (target_h < 1 || target_w < 1) {
    throw DomainError("upsample: target dims must be >= 1");
  }
  const bool batched = (xv.ndim() == 4);
  const int off = batched ? 1 : 0;
  const int B = batched ? xv.dim(0) : 1;
  const int C = xv.dim(off);
  const int H = xv.dim(off + 1);
  const int W = xv.dim(off + 2);

  // Same dims: exact identity for either mode.
  if (target_h == H && target_w == W) {
    Tensor out = xv;
    return make_node(std::move(out), {x.node()}, [](GraphNode& self) {
      if (!wants(self, 0)) return;
      Tensor& g = pgrad(self, 0);
      for (std::int64_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    });
  }

  Tensor out(batched ? std::vector<int>{B, C, target_h, target_w}
                     : std::vector<int>{C, target_h, target_w});
  const std::int64_t planes = static_cast<std::int64_t>(B) * C;

  if (mode == UpsampleMode::Nearest) {
    for (std::int64_t pl = 0; pl < planes; ++pl) {
      const double* src = xv.data.data() + pl * H * W;
      double* dst = out.data.data() + pl * target_h * target_w;
      for (int i = 0; i < target_h; ++i) {
        const int si = static_cast<int>((static_cast<std::int64_t>(i) * H) / target_h);
        for (int j = 0; j < target_w; ++j) {
          const int sj = static_cast<int>((static_cast<std::int64_t>(j) * W) / target_w);
          dst[static_cast<std::int64_t>(i) * target_w + j] =
              src[static_cast<std::int64_t>(si) * W + sj];
        }
      }
    }
    return make_node(std::move(out), {x.node()},
                     [B, C, H, W, target_h, target_w](GraphNode& self) {
                       if (!wants(self, 0)) return;
                       Tensor& g = pgrad(self, 0);
                       const std::int64_t planes = static_cast<std::int64_t>(B) * C;
                       for (std::int64_t pl = 0; pl < planes; ++pl) {
                         const double* gs = self.grad.data.data() + pl * target_h * target_w;
                         double* gd = g.data.data() + pl * H * W;
                         for (int i = 0; i < target_h; ++i) {
                           const int si = static_cast<int>((static_cast<std::int64_t>(i) * H) / target_h);
                           for (int j = 0; j < target_w; ++j) {
                             const int sj = static_cast<int>((static_cast<std::int64_t>(j) * W) / target_w);
                             gd[static_cast<std::int64_t>(si) * W + sj] +=
                                 gs[static_cast<std::int64_t>(i) * target_w + j];
                           }
                         }
                       }
                     });
  }

  const auto ty = bilinear_taps(H, target_h);
  const auto tx = bilinear_taps(W, target_w);
  for (std::int64_t pl = 0; pl < planes; ++pl) {
    const double* src = xv.data.data() + pl * H * W;
    double* dst = out.data.data() + pl * target_h * target_w;
    for (int i = 0; i < target_h; ++i) {
      const auto& a = ty[i];
      for (int j = 0; j < target_w; ++j) {
        const auto& b = tx[j];
        const double v00 = src[static_cast<std::int64_t>(a.i0) * W + b.i0];
        const double v01 = src[static_cast<std::int64_t>(a.i0) * W + b.i1];
        const double v10 = src[static_cast<std::int64_t>(a.i1) * W + b.i0];
        const double v11 = src[static_cast<std::int64_t>(a.i1) * W + b.i1];
        dst[static_cast<std::int64_t>(i) * target_w + j] =
            (1 - a.w1) * ((1 - b.w1) * v00 + b.w1 * v01) +
            a.w1 * ((1 - b.w1) * v10 + b.w1 * v11);
      }
    }
  }
  return make_node(std::move(out), {x.node()},
                   [B, C, H, W, target_h, target_w, ty, tx](GraphNode& self) {
                     if (!wants(self, 0)) return;
                     Tensor& g = pgrad(self, 0);
                     const std::int64_t planes = static_cast<std::int64_t>(B) * C;
                     for (std::int64_t pl = 0; pl < planes; ++pl) {
                       const double* gs = self.grad.data.data() + pl * target_h * target_w;
                       double* gd = g.data.data() + pl * H * W;
                       for (int i = 0; i < target_h; ++i) {
                         const auto& a = ty[i];
                         for (int j = 0; j < target_w; ++j) {
                           const auto& b = tx[j];
                           const double gv = gs[static_cast<std::int64_t>(i) * target_w + j];
                           gd[static_cast<std::int64_t>(a.i0) * W + b.i0] += (1 - a.w1) * (1 - b.w1) * gv;
                           gd[static_cast<std::int64_t>(a.i0) * W + b.i1] += (1 - a.w1) * b.w1 * gv;
                           gd[static_cast<std::int64_t>(a.i1) * W + b.i0] += a.w1 * (1 - b.w1) * gv;
                           gd[static_cast<std::int64_t>(a.i1) * W + b.i1] += a.w1 * b.w1 * gv;
                         }
                       }
                     }
                   });
}

// ------------------------------------------------------------------- dropout

Variable dropout(const Variable& x, double rate, Mode mode, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw DomainError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (mode == Mode::Eval || rate == 0.0) {
    Tensor out = x.value();
    return make_node(std::move(out), {x.node()}, [](GraphNode& self) {
      if (!wants(self, 0)) return;
      Tensor& g = pgrad(self, 0);
      for (std::int64_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    });
  }

  const double keep_scale = 1.0 / (1.0 - rate);
  Tensor out = x.value();
  std::vector<double> mask(out.data.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = (rng.uniform() < rate) ? 0.0 : keep_scale;
    out.data[i] *= mask[i];
  }
  return make_node(std::move(out), {x.node()}, [mask = std::move(mask)](GraphNode& self) {
    if (!wants(self, 0)) return;
    Tensor& g = pgrad(self, 0);
    for (std::int64_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * mask[i];
  });
}

// ---------------------------------------------------------------- batch_norm

Variable batch_norm(const Variable& x, const Variable& gamma, const Variable& beta,
                    BatchNormStats& stats, Mode mode, double momentum, double eps) {
  const Tensor& xv = x.value();
  if (xv.ndim() != 3 && xv.ndim() != 4) {
    throw ShapeError("batch_norm: input must be (C,H,W) or (B,C,H,W), got " +
                     shape_str(xv.shape));
  }
  const bool batched = (xv.ndim() == 4);
  const int B = batched ? xv.dim(0) : 1;
  const int C = xv.dim(batched ? 1 : 0);
  const int HW = xv.dim(batched ? 2 : 1) * xv.dim(batched ? 3 : 2);
  if (gamma.value().ndim() != 1 || gamma.value().dim(0) != C ||
      !gamma.value().same_shape(beta.value())) {
    throw ShapeError("batch_norm: gamma " + shape_str(gamma.value().shape) +
                     " / beta " + shape_str(beta.value().shape) +
                     " must both be (" + std::to_string(C) + ")");
  }
  if (stats.running_mean.shape != std::vector<int>{C}) {
    stats.running_mean = Tensor::zeros({C});
    stats.running_var = Tensor::full({C}, 1.0);
  }

  const std::int64_t count = static_cast<std::int64_t>(B) * HW;
  const std::int64_t plane = HW;
  const std::int64_t sample = static_cast<std::int64_t>(C) * HW;

  std::vector<double> mean_c(C), var_c(C);
  if (mode == Mode::Train) {
    for (int c = 0; c < C; ++c) {
      double s = 0.0;
      for (int bi = 0; bi < B; ++bi) {
        const double* src = xv.data.data() + bi * sample + c * plane;
        for (std::int64_t i = 0; i < plane; ++i) s += src[i];
      }
      const double mu = s / count;
      double v = 0.0;
      for (int bi = 0; bi < B; ++bi) {
        const double* src = xv.data.data() + bi * sample + c * plane;
        for (std::int64_t i = 0; i < plane; ++i) {
          const double d = src[i] - mu;
          v += d * d;
        }
      }
      mean_c[c] = mu;
      var_c[c] = v / count;  // biased, used for normalization
      const double var_running =
          (count > 1) ? v / (count - 1) : var_c[c];  // unbiased for the stats
      stats.running_mean[c] = (1.0 - momentum) * stats.running_mean[c] + momentum * mu;
      stats.running_var[c] = (1.0 - momentum) * stats.running_var[c] + momentum * var_running;
    }
  } else {
    for (int c = 0; c < C; ++c) {
      mean_c[c] = stats.running_mean[c];
      var_c[c] = stats.running_var[c];
    }
  }

  std::vector<double> inv_std(C);
  for (int c = 0; c < C; ++c) inv_std[c] = 1.0 / std::sqrt(var_c[c] + eps);

  Tensor out(xv.shape);
  Tensor xhat(xv.shape);  // cached for the backward pass
  const double* gam = gamma.value().data.data();
  const double* bet = beta.value().data.data();
  for (int bi = 0; bi < B; ++bi) {
    for (int c = 0; c < C; ++c) {
      const double* src = xv.data.data() + bi * sample + c * plane;
      double* xh = xhat.data.data() + bi * sample + c * plane;
      double* dst = out.data.data() + bi * sample + c * plane;
      for (std::int64_t i = 0; i < plane; ++i) {
        xh[i] = (src[i] - mean_c[c]) * inv_std[c];
        dst[i] = gam[c] * xh[i] + bet[c];
      }
    }
  }

  const bool train = (mode == Mode::Train);
  return make_node(
      std::move(out), {x.node(), gamma.node(), beta.node()},
      [B, C, plane, sample, count, train, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](GraphNode& self) {
        const Tensor& gv = pval(self, 1);
        for (int c = 0; c < C; ++c) {
          // Per-channel reductions over the batch and spatial dims.
          double sum_g = 0.0, sum_gx = 0.0;
          for (int bi = 0; bi < B; ++bi) {
            const double* g = self.grad.data.data() + bi * sample + c * plane;
            const double* xh = xhat.data.data() + bi * sample + c * plane;
            for (std::int64_t i = 0; i < plane; ++i) {
              sum_g += g[i];
              sum_gx += g[i] * xh[i];
            }
          }
          if (wants(self, 1)) pgrad(self, 1)[c] += sum_gx;
          if (wants(self, 2)) pgrad(self, 2)[c] += sum_g;
          if (wants(self, 0)) {
            Tensor& gx = pgrad(self, 0);
            const double gamma_c = gv[c];
            const double is = inv_std[c];
            if (train) {
              // d/dx of batch-statistics normalization.
              const double m1 = sum_g / count;
              const double m2 = sum_gx / count;
              for (int bi = 0; bi < B; ++bi) {
                const double* g = self.grad.data.data() + bi * sample + c * plane;
                const double* xh = xhat.data.data() + bi * sample + c * plane;
                double* dst = gx.data.data() + bi * sample + c * plane;
                for (std::int64_t i = 0; i < plane; ++i) {
                  dst[i] += gamma_c * is * (g[i] - m1 - xh[i] * m2);
                }
              }
            } else {
              for (int bi = 0; bi < B; ++bi) {
                const double* g = self.grad.data.data() + bi * sample + c * plane;
                double* dst = gx.data.data() + bi * sample + c * plane;
                for (std::int64_t i = 0; i < plane; ++i) {
                  dst[i] += gamma_c * is * g[i];
                }
              }
            }
          }
        }
      });
}

// ---------------------------------------------------------------- containers

namespace {
Tensor uniform_tensor(std::vector<int> shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data) v = rng.uniform(-bound, bound);
  return t;
}
}  // namespace

DenseLayer::DenseLayer(const std::string& name, int in, int out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight = Parameter(name + ".weight", uniform_tensor({out, in}, bound, rng));
  bias = Parameter(name + ".bias", uniform_tensor({out}, bound, rng));
}

Conv2dLayer::Conv2dLayer(const std::string& name, int c_in, int c_out, int k,
                         int stride_, int padding_, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(c_in) * k * k);
  weight = Parameter(name + ".weight", uniform_tensor({c_out, c_in, k, k}, bound, rng));
  bias = Parameter(name + ".bias", uniform_tensor({c_out}, bound, rng));
  stride = stride_;
  padding = padding_;
}

BatchNormLayer::BatchNormLayer(const std::string& name, int channels) {
  gamma = Parameter(name + ".gamma", Tensor::full({channels}, 1.0));
  beta = Parameter(name + ".beta", Tensor::zeros({channels}));
  stats.running_mean = Tensor::zeros({channels});
  stats.running_var = Tensor::full({channels}, 1.0);
}

}  // namespace xltrack::nn
