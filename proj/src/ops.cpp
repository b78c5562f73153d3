// Copyright (c) 2026 The xconv Authors
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

#include "xconv/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "xconv/errors.hpp"

namespace xconv::ad {

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) + " and " +
                       shape_str(b.shape()));
}

void require_rank(const char* op, const Tensor& t, std::size_t rank) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_str(t.shape()));
  }
}

bool wants_grad(const Var& v) { return v && v->requires_grad; }

// c[m x n] += a[m x k] * b[k x n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// c[m x k] += g[m x n] * b[k x n]^T
void gemm_nt(const double* g, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* grow = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
      c[i * k + p] += acc;
    }
  }
}

// c[k x n] += a[m x k]^T * g[m x n]
void gemm_tn(const double* a, const double* g, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* grow = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      double* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * grow[j];
    }
  }
}

}  // namespace

BatchNormState make_batchnorm(ParamStore& store, const std::string& prefix, std::size_t channels,
                              double momentum, double epsilon) {
  BatchNormState s;
  s.scale = &store.create(prefix + ".scale", Tensor(Shape{channels}, 1.0));
  s.shift = &store.create(prefix + ".shift", Tensor(Shape{channels}, 0.0));
  s.running_mean = &store.create(prefix + ".running_mean", Tensor(Shape{channels}, 0.0), false);
  s.running_var = &store.create(prefix + ".running_var", Tensor(Shape{channels}, 1.0), false);
  s.momentum = momentum;
  s.epsilon = epsilon;
  return s;
}

Var matmul(const Var& a, const Var& b) {
  require_rank("matmul", a->value, 2);
  require_rank("matmul", b->value, 2);
  const std::size_t m = a->value.dim(0), k = a->value.dim(1), n = b->value.dim(1);
  if (b->value.dim(0) != k) shape_error("matmul", a->value, b->value);
  Tensor out(Shape{m, n});
  gemm_nn(a->value.data().data(), b->value.data().data(), out.data().data(), m, k, n);
  return make_node(std::move(out), "matmul", {a, b}, [m, k, n](Node& self) {
    const Var& a = self.parents[0];
    const Var& b = self.parents[1];
    const double* g = self.grad.data().data();
    if (wants_grad(a)) gemm_nt(g, b->value.data().data(), a->grad_buffer().data().data(), m, k, n);
    if (wants_grad(b)) gemm_tn(a->value.data().data(), g, b->grad_buffer().data().data(), m, k, n);
  });
}

Var batched_matmul(const Var& a, const Var& b) {
  require_rank("batched_matmul", a->value, 3);
  require_rank("batched_matmul", b->value, 3);
  const std::size_t bs = a->value.dim(0), m = a->value.dim(1), k = a->value.dim(2), n = b->value.dim(2);
  if (b->value.dim(0) != bs || b->value.dim(1) != k) shape_error("batched_matmul", a->value, b->value);
  Tensor out(Shape{bs, m, n});
  for (std::size_t i = 0; i < bs; ++i) {
    gemm_nn(a->value.data().data() + i * m * k, b->value.data().data() + i * k * n,
            out.data().data() + i * m * n, m, k, n);
  }
  return make_node(std::move(out), "batched_matmul", {a, b}, [bs, m, k, n](Node& self) {
    const Var& a = self.parents[0];
    const Var& b = self.parents[1];
    const double* g = self.grad.data().data();
    for (std::size_t i = 0; i < bs; ++i) {
      if (wants_grad(a)) {
        gemm_nt(g + i * m * n, b->value.data().data() + i * k * n, a->grad_buffer().data().data() + i * m * k, m,
                k, n);
      }
      if (wants_grad(b)) {
        gemm_tn(a->value.data().data() + i * m * k, g + i * m * n, b->grad_buffer().data().data() + i * k * n, m,
                k, n);
      }
    }
  });
}

Var add(const Var& a, const Var& b) {
  if (a->value.shape() != b->value.shape()) shape_error("add", a->value, b->value);
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b->value[i];
  return make_node(std::move(out), "add", {a, b}, [](Node& self) {
    for (const Var& p : self.parents) {
      if (!wants_grad(p)) continue;
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  if (a->value.shape() != b->value.shape()) shape_error("sub", a->value, b->value);
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b->value[i];
  return make_node(std::move(out), "sub", {a, b}, [](Node& self) {
    const double sign[2] = {1.0, -1.0};
    for (std::size_t k = 0; k < 2; ++k) {
      const Var& p = self.parents[k];
      if (!wants_grad(p)) continue;
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign[k] * self.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  if (a->value.shape() != b->value.shape()) shape_error("mul", a->value, b->value);
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b->value[i];
  return make_node(std::move(out), "mul", {a, b}, [](Node& self) {
    const Var& a = self.parents[0];
    const Var& b = self.parents[1];
    if (wants_grad(a)) {
      auto& g = a->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * b->value[i];
    }
    if (wants_grad(b)) {
      auto& g = b->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * a->value[i];
    }
  });
}

Var scale(const Var& x, double factor) {
  Tensor out = x->value;
  for (auto& v : out.data()) v *= factor;
  return make_node(std::move(out), "scale", {x}, [factor](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
  });
}

Var add_bias(const Var& x, const Var& bias) {
  require_rank("add_bias", bias->value, 1);
  const std::size_t c = bias->value.size();
  if (x->value.rank() == 0 || x->value.shape().back() != c) shape_error("add_bias", x->value, bias->value);
  Tensor out = x->value;
  const std::size_t rows = c ? out.size() / c : 0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] += bias->value[j];
  }
  return make_node(std::move(out), "add_bias", {x, bias}, [rows, c](Node& self) {
    const Var& x = self.parents[0];
    const Var& b = self.parents[1];
    if (wants_grad(x)) {
      auto& g = x->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (wants_grad(b)) {
      auto& g = b->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < c; ++j) g[j] += self.grad[r * c + j];
      }
    }
  });
}

Var sum(const Var& x) {
  double total = 0.0;
  for (double v : x->value.data()) total += v;
  return make_node(Tensor::scalar(total), "sum", {x}, [](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    const double up = self.grad[0];
    for (auto& v : g.data()) v += up;
  });
}

Var mean(const Var& x) {
  const std::size_t n = x->value.size();
  if (n == 0) throw DimensionError("mean of empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

Var elu(const Var& x, double alpha) {
  Tensor out = x->value;
  for (auto& v : out.data()) {
    if (v <= 0.0) v = alpha * std::expm1(v);
  }
  return make_node(std::move(out), "elu", {x}, [alpha](Node& self) {
    const Var& x = self.parents[0];
    auto& g = x->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double in = x->value[i];
      // d/dx alpha*(e^x - 1) = out + alpha
      const double d = in > 0.0 ? 1.0 : self.value[i] + alpha;
      g[i] += d * self.grad[i];
    }
  });
}

Var reshape(const Var& x, Shape shape) {
  Tensor out = x->value.reshaped(std::move(shape));
  return make_node(std::move(out), "reshape", {x}, [](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Var concat_cols(const Var& a, const Var& b) {
  const Tensor& av = a->value;
  const Tensor& bv = b->value;
  if (av.rank() != bv.rank() || av.rank() < 1 || av.rank() > 2) shape_error("concat_cols", av, bv);
  const bool vec = av.rank() == 1;
  const std::size_t rows = vec ? 1 : av.dim(0);
  if (!vec && bv.dim(0) != rows) shape_error("concat_cols", av, bv);
  const std::size_t c1 = av.shape().back(), c2 = bv.shape().back();
  Tensor out(vec ? Shape{c1 + c2} : Shape{rows, c1 + c2});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(av.data().data() + r * c1, c1, out.data().data() + r * (c1 + c2));
    std::copy_n(bv.data().data() + r * c2, c2, out.data().data() + r * (c1 + c2) + c1);
  }
  return make_node(std::move(out), "concat_cols", {a, b}, [rows, c1, c2](Node& self) {
    const Var& a = self.parents[0];
    const Var& b = self.parents[1];
    const double* g = self.grad.data().data();
    if (wants_grad(a)) {
      auto& ga = a->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < c1; ++j) ga[r * c1 + j] += g[r * (c1 + c2) + j];
      }
    }
    if (wants_grad(b)) {
      auto& gb = b->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < c2; ++j) gb[r * c2 + j] += g[r * (c1 + c2) + c1 + j];
      }
    }
  });
}

Var gather_rows(const Var& x, std::span<const std::size_t> idx) {
  require_rank("gather_rows", x->value, 2);
  const std::size_t n = x->value.dim(0), c = x->value.dim(1);
  Tensor out(Shape{idx.size(), c});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= n) {
      throw DimensionError("gather_rows: index " + std::to_string(idx[i]) + " out of range for " +
                           shape_str(x->value.shape()));
    }
    std::copy_n(x->value.data().data() + idx[i] * c, c, out.data().data() + i * c);
  }
  std::vector<std::size_t> rows(idx.begin(), idx.end());
  return make_node(std::move(out), "gather_rows", {x}, [rows = std::move(rows), c](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < c; ++j) g[rows[i] * c + j] += self.grad[i * c + j];
    }
  });
}

Var depthwise_matrix_conv(const Var& x, const Var& w) {
  const Tensor& xv = x->value;
  const Tensor& wv = w->value;
  require_rank("depthwise_matrix_conv", wv, 3);
  const bool batched = xv.rank() == 3;
  if (xv.rank() != 2 && !batched) shape_error("depthwise_matrix_conv", xv, wv);
  const std::size_t bs = batched ? xv.dim(0) : 1;
  const std::size_t r_dim = xv.dim(batched ? 1 : 0), c_dim = xv.dim(batched ? 2 : 1);
  if (wv.dim(0) != r_dim || wv.dim(1) != c_dim) shape_error("depthwise_matrix_conv", xv, wv);
  const std::size_t f_dim = wv.dim(2);
  Tensor out(batched ? Shape{bs, c_dim * f_dim} : Shape{c_dim * f_dim});
  for (std::size_t b = 0; b < bs; ++b) {
    const double* xb = xv.data().data() + b * r_dim * c_dim;
    double* ob = out.data().data() + b * c_dim * f_dim;
    for (std::size_t r = 0; r < r_dim; ++r) {
      for (std::size_t c = 0; c < c_dim; ++c) {
        const double xval = xb[r * c_dim + c];
        const double* wrow = wv.data().data() + (r * c_dim + c) * f_dim;
        for (std::size_t f = 0; f < f_dim; ++f) ob[c * f_dim + f] += xval * wrow[f];
      }
    }
  }
  return make_node(std::move(out), "depthwise_matrix_conv", {x, w}, [bs, r_dim, c_dim, f_dim](Node& self) {
    const Var& x = self.parents[0];
    const Var& w = self.parents[1];
    double* gx = wants_grad(x) ? x->grad_buffer().data().data() : nullptr;
    double* gw = wants_grad(w) ? w->grad_buffer().data().data() : nullptr;
    const double* xv = x->value.data().data();
    const double* wv = w->value.data().data();
    for (std::size_t b = 0; b < bs; ++b) {
      const double* gb = self.grad.data().data() + b * c_dim * f_dim;
      for (std::size_t r = 0; r < r_dim; ++r) {
        for (std::size_t c = 0; c < c_dim; ++c) {
          const std::size_t xi = b * r_dim * c_dim + r * c_dim + c;
          const std::size_t wi = (r * c_dim + c) * f_dim;
          if (gx) {
            double acc = 0.0;
            for (std::size_t f = 0; f < f_dim; ++f) acc += gb[c * f_dim + f] * wv[wi + f];
            gx[xi] += acc;
          }
          if (gw) {
            const double xval = xv[xi];
            for (std::size_t f = 0; f < f_dim; ++f) gw[wi + f] += xval * gb[c * f_dim + f];
          }
        }
      }
    }
  });
}

Var separable_conv(const Var& f, const Var& depthwise_w, const Var& pointwise_w, const Var& bias) {
  const bool batched = f->value.rank() == 3;
  Var depth = depthwise_matrix_conv(f, depthwise_w);
  if (!batched) depth = reshape(depth, Shape{1, depth->value.size()});
  require_rank("separable_conv", pointwise_w->value, 2);
  if (pointwise_w->value.dim(0) != depth->value.dim(1)) {
    shape_error("separable_conv", depthwise_w->value, pointwise_w->value);
  }
  Var out = fully_connected(depth, pointwise_w, bias);
  if (!batched) out = reshape(out, Shape{out->value.size()});
  return out;
}

Var fully_connected(const Var& x, const Var& w, const Var& b) {
  require_rank("fully_connected", w->value, 2);
  if (b->value.rank() != 1 || b->value.size() != w->value.dim(1)) shape_error("fully_connected", w->value, b->value);
  return add_bias(matmul(x, w), b);
}

Var batchnorm(const Var& x, BatchNormState& state, Mode mode) {
  const std::size_t c = state.channels();
  const Tensor& xv = x->value;
  if (xv.rank() == 0 || xv.shape().back() != c) shape_error("batchnorm", xv, state.scale->value());
  const std::size_t rows = c ? xv.size() / c : 0;
  if (rows == 0) throw DimensionError("batchnorm: empty batch " + shape_str(xv.shape()));

  std::vector<double> mu(c, 0.0), var(c, 0.0);
  if (mode == Mode::train) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < c; ++j) mu[j] += xv[r * c + j];
    }
    for (auto& m : mu) m /= static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < c; ++j) {
        const double d = xv[r * c + j] - mu[j];
        var[j] += d * d;
      }
    }
    for (auto& v : var) v /= static_cast<double>(rows);
    auto& rm = state.running_mean->value();
    auto& rv = state.running_var->value();
    for (std::size_t j = 0; j < c; ++j) {
      rm[j] = state.momentum * rm[j] + (1.0 - state.momentum) * mu[j];
      rv[j] = state.momentum * rv[j] + (1.0 - state.momentum) * var[j];
    }
  } else {
    for (std::size_t j = 0; j < c; ++j) {
      mu[j] = state.running_mean->value()[j];
      var[j] = state.running_var->value()[j];
    }
  }

  std::vector<double> inv_std(c);
  for (std::size_t j = 0; j < c; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + state.epsilon);
  Tensor xhat(xv.shape());
  Tensor out(xv.shape());
  const auto& gamma = state.scale->value();
  const auto& beta = state.shift->value();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < c; ++j) {
      const std::size_t i = r * c + j;
      xhat[i] = (xv[i] - mu[j]) * inv_std[j];
      out[i] = gamma[j] * xhat[i] + beta[j];
    }
  }

  const bool training = mode == Mode::train;
  return make_node(
      std::move(out), "batchnorm", {x, state.scale->node, state.shift->node},
      [rows, c, training, inv_std = std::move(inv_std), xhat = std::move(xhat)](Node& self) {
        const Var& x = self.parents[0];
        const Var& gamma = self.parents[1];
        const Var& beta = self.parents[2];
        const Tensor& g = self.grad;
        std::vector<double> sum_g(c, 0.0), sum_gx(c, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t j = 0; j < c; ++j) {
            sum_g[j] += g[r * c + j];
            sum_gx[j] += g[r * c + j] * xhat[r * c + j];
          }
        }
        if (wants_grad(gamma)) {
          auto& gg = gamma->grad_buffer();
          for (std::size_t j = 0; j < c; ++j) gg[j] += sum_gx[j];
        }
        if (wants_grad(beta)) {
          auto& gb = beta->grad_buffer();
          for (std::size_t j = 0; j < c; ++j) gb[j] += sum_g[j];
        }
        if (wants_grad(x)) {
          auto& gx = x->grad_buffer();
          const auto& gam = gamma->value;
          const double n = static_cast<double>(rows);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < c; ++j) {
              const std::size_t i = r * c + j;
              if (training) {
                gx[i] += gam[j] * inv_std[j] / n * (n * g[i] - sum_g[j] - xhat[i] * sum_gx[j]);
              } else {
                gx[i] += gam[j] * inv_std[j] * g[i];
              }
            }
          }
        }
      });
}

Var softmax_cross_entropy(const Var& logits, std::span<const int> labels) {
  require_rank("softmax_cross_entropy", logits->value, 2);
  const std::size_t b = logits->value.dim(0), c = logits->value.dim(1);
  if (labels.size() != b) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for logits " +
                         shape_str(logits->value.shape()));
  }
  if (b == 0) throw DimensionError("softmax_cross_entropy: empty batch");
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= c) {
      throw ValidationError("label " + std::to_string(label) + " outside [0, " + std::to_string(c) + ")");
    }
  }
  Tensor probs(Shape{b, c});
  double loss = 0.0;
  for (std::size_t r = 0; r < b; ++r) {
    auto row = logits->value.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      probs.at(r, j) = std::exp(row[j] - mx);
      z += probs.at(r, j);
    }
    for (std::size_t j = 0; j < c; ++j) probs.at(r, j) /= z;
    loss += std::log(z) + mx - row[static_cast<std::size_t>(labels[r])];
  }
  loss /= static_cast<double>(b);
  std::vector<int> lab(labels.begin(), labels.end());
  return make_node(Tensor::scalar(loss), "softmax_cross_entropy", {logits},
                   [b, c, probs = std::move(probs), lab = std::move(lab)](Node& self) {
                     auto& g = self.parents[0]->grad_buffer();
                     const double up = self.grad[0] / static_cast<double>(b);
                     for (std::size_t r = 0; r < b; ++r) {
                       for (std::size_t j = 0; j < c; ++j) {
                         const double target = static_cast<int>(j) == lab[r] ? 1.0 : 0.0;
                         g[r * c + j] += up * (probs.at(r, j) - target);
                       }
                     }
                   });
}

Var dropout(const Var& x, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ValidationError("dropout rate must be in [0, 1)");
  if (mode == Mode::infer || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  Tensor mask(x->value.shape());
  Tensor out = x->value;
  for (std::size_t i = 0; i < out.size(); ++i) {
    mask[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    out[i] *= mask[i];
  }
  return make_node(std::move(out), "dropout", {x}, [mask = std::move(mask)](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += mask[i] * self.grad[i];
  });
}

std::size_t default_depth_multiplier(std::size_t cin, std::size_t c2) {
  if (cin == 0) throw ValidationError("depth multiplier needs at least one input channel");
  return (c2 + cin - 1) / cin;
}

}  // namespace xconv::ad
