#include "moedti/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace moedti::ops {

namespace {

constexpr double kBceEps = 1e-7;

void check_finite(const char* op, const Tensor& t) {
  for (double v : t.data) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(op) + ": non-finite value in output");
    }
  }
}

bool want_grad(std::initializer_list<const TensorPtr*> ins) {
  if (!grad_enabled()) return false;
  for (const TensorPtr* t : ins) {
    if (*t && (*t)->requires_grad) return true;
  }
  return false;
}

TensorPtr finish(const char* op, TensorPtr out, bool rg,
                 std::function<void()> backward) {
  check_finite(op, *out);
  if (rg) {
    out->requires_grad = true;
    Tape::current().record(out, std::move(backward));
  }
  return out;
}

void require_2d(const char* op, const TensorPtr& t) {
  if (t->shape.size() != 2) {
    throw ShapeError(std::string(op) + ": expected 2-d operand, got " +
                     shape_str(t->shape));
  }
}

}  // namespace

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
  require_2d("matmul", a);
  require_2d("matmul", b);
  if (a->shape[1] != b->shape[0]) {
    throw ShapeError("matmul: inner dimensions differ: " + shape_str(a->shape) +
                     " vs " + shape_str(b->shape));
  }
  const int64_t m = a->shape[0], k = a->shape[1], n = b->shape[1];
  auto out = Tensor::zeros({m, n});
  {
    const double* A = a->data.data();
    const double* B = b->data.data();
    double* C = out->data.data();
    for (int64_t i = 0; i < m; ++i) {
      for (int64_t kk = 0; kk < k; ++kk) {
        double av = A[i * k + kk];
        if (av == 0.0) continue;
        const double* Brow = B + kk * n;
        double* Crow = C + i * n;
        for (int64_t j = 0; j < n; ++j) Crow[j] += av * Brow[j];
      }
    }
  }
  bool rg = want_grad({&a, &b});
  return finish("matmul", out, rg, [a, b, out, m, k, n]() {
    if (out->grad.empty()) return;
    const double* dC = out->grad.data();
    if (a->requires_grad) {
      a->ensure_grad();
      double* dA = a->grad.data();
      const double* B = b->data.data();
      for (int64_t i = 0; i < m; ++i) {
        for (int64_t kk = 0; kk < k; ++kk) {
          const double* Brow = B + kk * n;
          const double* dCrow = dC + i * n;
          double acc = 0.0;
          for (int64_t j = 0; j < n; ++j) acc += dCrow[j] * Brow[j];
          dA[i * k + kk] += acc;
        }
      }
    }
    if (b->requires_grad) {
      b->ensure_grad();
      double* dB = b->grad.data();
      const double* A = a->data.data();
      for (int64_t i = 0; i < m; ++i) {
        const double* dCrow = dC + i * n;
        for (int64_t kk = 0; kk < k; ++kk) {
          double av = A[i * k + kk];
          if (av == 0.0) continue;
          double* dBrow = dB + kk * n;
          for (int64_t j = 0; j < n; ++j) dBrow[j] += av * dCrow[j];
        }
      }
    }
  });
}

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
  bool same = a->shape == b->shape;
  bool bias = false;
  if (!same) {
    bias = a->shape.size() == 2 &&
           ((b->shape.size() == 1 && b->shape[0] == a->shape[1]) ||
            (b->shape.size() == 2 && b->shape[0] == 1 &&
             b->shape[1] == a->shape[1]));
    if (!bias) {
      throw ShapeError("add: shapes do not conform: " + shape_str(a->shape) +
                       " vs " + shape_str(b->shape));
    }
  }
  auto out = Tensor::zeros(a->shape);
  const int64_t n = a->numel();
  if (same) {
    for (int64_t i = 0; i < n; ++i) out->data[i] = a->data[i] + b->data[i];
  } else {
    const int64_t ncol = a->shape[1];
    for (int64_t i = 0; i < n; ++i)
      out->data[i] = a->data[i] + b->data[i % ncol];
  }
  bool rg = want_grad({&a, &b});
  return finish("add", out, rg, [a, b, out, same]() {
    if (out->grad.empty()) return;
    const int64_t n = out->numel();
    if (a->requires_grad) {
      a->ensure_grad();
      for (int64_t i = 0; i < n; ++i) a->grad[i] += out->grad[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      if (same) {
        for (int64_t i = 0; i < n; ++i) b->grad[i] += out->grad[i];
      } else {
        const int64_t ncol = out->shape[1];
        for (int64_t i = 0; i < n; ++i) b->grad[i % ncol] += out->grad[i];
      }
    }
  });
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
  if (a->shape != b->shape) {
    throw ShapeError("sub: shapes differ: " + shape_str(a->shape) + " vs " +
                     shape_str(b->shape));
  }
  auto out = Tensor::zeros(a->shape);
  const int64_t n = a->numel();
  for (int64_t i = 0; i < n; ++i) out->data[i] = a->data[i] - b->data[i];
  bool rg = want_grad({&a, &b});
  return finish("sub", out, rg, [a, b, out]() {
    if (out->grad.empty()) return;
    const int64_t n = out->numel();
    if (a->requires_grad) {
      a->ensure_grad();
      for (int64_t i = 0; i < n; ++i) a->grad[i] += out->grad[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (int64_t i = 0; i < n; ++i) b->grad[i] -= out->grad[i];
    }
  });
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
  if (a->shape != b->shape) {
    throw ShapeError("mul: shapes differ: " + shape_str(a->shape) + " vs " +
                     shape_str(b->shape));
  }
  auto out = Tensor::zeros(a->shape);
  const int64_t n = a->numel();
  for (int64_t i = 0; i < n; ++i) out->data[i] = a->data[i] * b->data[i];
  bool rg = want_grad({&a, &b});
  return finish("mul", out, rg, [a, b, out]() {
    if (out->grad.empty()) return;
    const int64_t n = out->numel();
    if (a->requires_grad) {
      a->ensure_grad();
      for (int64_t i = 0; i < n; ++i) a->grad[i] += out->grad[i] * b->data[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (int64_t i = 0; i < n; ++i) b->grad[i] += out->grad[i] * a->data[i];
    }
  });
}

TensorPtr scale(const TensorPtr& a, double k) { return affine(a, k, 0.0); }

TensorPtr affine(const TensorPtr& a, double k, double c) {
  auto out = Tensor::zeros(a->shape);
  const int64_t n = a->numel();
  for (int64_t i = 0; i < n; ++i) out->data[i] = k * a->data[i] + c;
  bool rg = want_grad({&a});
  return finish("affine", out, rg, [a, out, k]() {
    if (out->grad.empty() || !a->requires_grad) return;
    a->ensure_grad();
    const int64_t n = out->numel();
    for (int64_t i = 0; i < n; ++i) a->grad[i] += k * out->grad[i];
  });
}

TensorPtr relu(const TensorPtr& a) {
  auto out = Tensor::zeros(a->shape);
  const int64_t n = a->numel();
  for (int64_t i = 0; i < n; ++i) out->data[i] = a->data[i] > 0 ? a->data[i] : 0.0;
  bool rg = want_grad({&a});
  return finish("relu", out, rg, [a, out]() {
    if (out->grad.empty() || !a->requires_grad) return;
    a->ensure_grad();
    const int64_t n = out->numel();
    for (int64_t i = 0; i < n; ++i) {
      if (a->data[i] > 0) a->grad[i] += out->grad[i];
    }
  });
}

TensorPtr sigmoid(const TensorPtr& a) {
  auto out = Tensor::zeros(a->shape);
  const int64_t n = a->numel();
  for (int64_t i = 0; i < n; ++i) {
    double x = a->data[i];
    // Stable in both tails.
    out->data[i] = x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                          : std::exp(x) / (1.0 + std::exp(x));
  }
  bool rg = want_grad({&a});
  return finish("sigmoid", out, rg, [a, out]() {
    if (out->grad.empty() || !a->requires_grad) return;
    a->ensure_grad();
    const int64_t n = out->numel();
    for (int64_t i = 0; i < n; ++i) {
      double y = out->data[i];
      a->grad[i] += out->grad[i] * y * (1.0 - y);
    }
  });
}

TensorPtr log(const TensorPtr& a) {
  auto out = Tensor::zeros(a->shape);
  const int64_t n = a->numel();
  for (int64_t i = 0; i < n; ++i) out->data[i] = std::log(a->data[i]);
  bool rg = want_grad({&a});
  return finish("log", out, rg, [a, out]() {
    if (out->grad.empty() || !a->requires_grad) return;
    a->ensure_grad();
    const int64_t n = out->numel();
    for (int64_t i = 0; i < n; ++i) a->grad[i] += out->grad[i] / a->data[i];
  });
}

TensorPtr softmax(const TensorPtr& a, int axis) {
  if (a->shape.size() == 1) {
    if (axis != 0 && axis != 1) throw ShapeError("softmax: axis out of range");
    auto row = reshape(a, {1, a->shape[0]});
    auto sm = softmax(row, 1);
    return reshape(sm, a->shape);
  }
  require_2d("softmax", a);
  if (axis != 0 && axis != 1) throw ShapeError("softmax: axis out of range");
  const int64_t m = a->shape[0], n = a->shape[1];
  auto out = Tensor::zeros(a->shape);
  const int64_t outer = axis == 1 ? m : n;
  const int64_t inner = axis == 1 ? n : m;
  auto idx = [&](int64_t o, int64_t i) {
    return axis == 1 ? o * n + i : i * n + o;
  };
  for (int64_t o = 0; o < outer; ++o) {
    double mx = a->data[idx(o, 0)];
    for (int64_t i = 1; i < inner; ++i) mx = std::max(mx, a->data[idx(o, i)]);
    double z = 0.0;
    for (int64_t i = 0; i < inner; ++i) {
      double e = std::exp(a->data[idx(o, i)] - mx);
      out->data[idx(o, i)] = e;
      z += e;
    }
    for (int64_t i = 0; i < inner; ++i) out->data[idx(o, i)] /= z;
  }
  bool rg = want_grad({&a});
  return finish("softmax", out, rg, [a, out, axis, outer, inner, n]() {
    if (out->grad.empty() || !a->requires_grad) return;
    a->ensure_grad();
    auto idx = [&](int64_t o, int64_t i) {
      return axis == 1 ? o * n + i : i * n + o;
    };
    for (int64_t o = 0; o < outer; ++o) {
      double dot = 0.0;
      for (int64_t i = 0; i < inner; ++i)
        dot += out->grad[idx(o, i)] * out->data[idx(o, i)];
      for (int64_t i = 0; i < inner; ++i) {
        a->grad[idx(o, i)] +=
            out->data[idx(o, i)] * (out->grad[idx(o, i)] - dot);
      }
    }
  });
}

TensorPtr concat(const std::vector<TensorPtr>& parts, int axis) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  if (axis != 0 && axis != 1) throw ShapeError("concat: axis out of range");
  for (const auto& p : parts) require_2d("concat", p);
  int64_t rows = parts[0]->shape[0], cols = parts[0]->shape[1];
  int64_t total = 0;
  for (const auto& p : parts) {
    if (axis == 0 && p->shape[1] != cols) {
      throw ShapeError("concat: column counts differ: " + shape_str(parts[0]->shape) +
                       " vs " + shape_str(p->shape));
    }
    if (axis == 1 && p->shape[0] != rows) {
      throw ShapeError("concat: row counts differ: " + shape_str(parts[0]->shape) +
                       " vs " + shape_str(p->shape));
    }
    total += p->shape[axis];
  }
  Shape oshape = axis == 0 ? Shape{total, cols} : Shape{rows, total};
  auto out = Tensor::zeros(oshape);
  std::vector<int64_t> offsets(parts.size());
  {
    int64_t off = 0;
    for (size_t p = 0; p < parts.size(); ++p) {
      offsets[p] = off;
      const auto& t = parts[p];
      if (axis == 0) {
        std::memcpy(out->data.data() + off * cols, t->data.data(),
                    t->data.size() * sizeof(double));
        off += t->shape[0];
      } else {
        for (int64_t i = 0; i < rows; ++i) {
          std::memcpy(out->data.data() + i * total + off,
                      t->data.data() + i * t->shape[1],
                      t->shape[1] * sizeof(double));
        }
        off += t->shape[1];
      }
    }
  }
  bool rg = false;
  if (grad_enabled()) {
    for (const auto& p : parts) rg = rg || p->requires_grad;
  }
  return finish("concat", out, rg, [parts, offsets, out, axis, rows, cols, total]() {
    if (out->grad.empty()) return;
    for (size_t p = 0; p < parts.size(); ++p) {
      const auto& t = parts[p];
      if (!t->requires_grad) continue;
      t->ensure_grad();
      if (axis == 0) {
        const int64_t base = offsets[p] * cols;
        for (int64_t i = 0; i < t->numel(); ++i) t->grad[i] += out->grad[base + i];
      } else {
        const int64_t w = t->shape[1];
        for (int64_t i = 0; i < rows; ++i) {
          for (int64_t j = 0; j < w; ++j) {
            t->grad[i * w + j] += out->grad[i * total + offsets[p] + j];
          }
        }
      }
    }
  });
}

TensorPtr slice_cols(const TensorPtr& a, int64_t start, int64_t len) {
  require_2d("slice_cols", a);
  if (start < 0 || len <= 0 || start + len > a->shape[1]) {
    throw ShapeError("slice_cols: range [" + std::to_string(start) + "," +
                     std::to_string(start + len) + ") out of bounds for " +
                     shape_str(a->shape));
  }
  const int64_t m = a->shape[0], n = a->shape[1];
  auto out = Tensor::zeros({m, len});
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < len; ++j) out->data[i * len + j] = a->data[i * n + start + j];
  }
  bool rg = want_grad({&a});
  return finish("slice_cols", out, rg, [a, out, start, len, m, n]() {
    if (out->grad.empty() || !a->requires_grad) return;
    a->ensure_grad();
    for (int64_t i = 0; i < m; ++i) {
      for (int64_t j = 0; j < len; ++j) {
        a->grad[i * n + start + j] += out->grad[i * len + j];
      }
    }
  });
}

TensorPtr reshape(const TensorPtr& a, Shape shape) {
  auto out = Tensor::create(std::move(shape), a->data);
  if (out->numel() != a->numel()) {
    throw ShapeError("reshape: numel mismatch: " + shape_str(a->shape) + " -> " +
                     shape_str(out->shape));
  }
  bool rg = want_grad({&a});
  return finish("reshape", out, rg, [a, out]() {
    if (out->grad.empty() || !a->requires_grad) return;
    a->ensure_grad();
    const int64_t n = a->numel();
    for (int64_t i = 0; i < n; ++i) a->grad[i] += out->grad[i];
  });
}

TensorPtr max_over_rows(const TensorPtr& a) {
  require_2d("max_over_rows", a);
  const int64_t m = a->shape[0], n = a->shape[1];
  auto out = Tensor::zeros({1, n});
  auto argmax = std::make_shared<std::vector<int64_t>>(n, 0);
  for (int64_t j = 0; j < n; ++j) {
    double best = a->data[j];
    int64_t bi = 0;
    for (int64_t i = 1; i < m; ++i) {
      double v = a->data[i * n + j];
      if (v > best) {
        best = v;
        bi = i;
      }
    }
    out->data[j] = best;
    (*argmax)[j] = bi;
  }
  bool rg = want_grad({&a});
  return finish("max_over_rows", out, rg, [a, out, argmax, n]() {
    if (out->grad.empty() || !a->requires_grad) return;
    a->ensure_grad();
    for (int64_t j = 0; j < n; ++j) {
      a->grad[(*argmax)[j] * n + j] += out->grad[j];
    }
  });
}

TensorPtr mean(const TensorPtr& a) {
  const int64_t n = a->numel();
  double s = 0.0;
  for (double v : a->data) s += v;
  auto out = Tensor::scalar_val(s / static_cast<double>(n));
  bool rg = want_grad({&a});
  return finish("mean", out, rg, [a, out, n]() {
    if (out->grad.empty() || !a->requires_grad) return;
    a->ensure_grad();
    double g = out->grad[0] / static_cast<double>(n);
    for (int64_t i = 0; i < n; ++i) a->grad[i] += g;
  });
}

TensorPtr sum(const TensorPtr& a) {
  double s = 0.0;
  for (double v : a->data) s += v;
  auto out = Tensor::scalar_val(s);
  bool rg = want_grad({&a});
  return finish("sum", out, rg, [a, out]() {
    if (out->grad.empty() || !a->requires_grad) return;
    a->ensure_grad();
    const int64_t n = a->numel();
    for (int64_t i = 0; i < n; ++i) a->grad[i] += out->grad[0];
  });
}

TensorPtr l2_norm(const TensorPtr& a) {
  double s = 0.0;
  for (double v : a->data) s += v * v;
  double r = std::sqrt(s);
  auto out = Tensor::scalar_val(r);
  bool rg = want_grad({&a});
  return finish("l2_norm", out, rg, [a, out, r]() {
    if (out->grad.empty() || !a->requires_grad || r == 0.0) return;
    a->ensure_grad();
    const int64_t n = a->numel();
    for (int64_t i = 0; i < n; ++i) a->grad[i] += out->grad[0] * a->data[i] / r;
  });
}

TensorPtr conv1d(const TensorPtr& signal, const TensorPtr& kernel, int64_t stride) {
  require_2d("conv1d", signal);
  if (kernel->shape.size() != 3) {
    throw ShapeError("conv1d: kernel must be [k, c_in, c_out], got " +
                     shape_str(kernel->shape));
  }
  if (stride < 1) throw ContractError("conv1d: stride must be >= 1");
  const int64_t M = signal->shape[0], cin = signal->shape[1];
  const int64_t k = kernel->shape[0], kcin = kernel->shape[1], cout = kernel->shape[2];
  if (cin != kcin) {
    throw ShapeError("conv1d: channel mismatch: signal " + shape_str(signal->shape) +
                     " vs kernel " + shape_str(kernel->shape));
  }
  const int64_t mo = (M + stride - 1) / stride;
  const int64_t pad_total = std::max<int64_t>(0, (mo - 1) * stride + k - M);
  const int64_t pad_left = pad_total / 2;
  auto out = Tensor::zeros({mo, cout});
  {
    const double* X = signal->data.data();
    const double* W = kernel->data.data();
    double* Y = out->data.data();
    for (int64_t t = 0; t < mo; ++t) {
      for (int64_t dk = 0; dk < k; ++dk) {
        const int64_t s = t * stride + dk - pad_left;
        if (s < 0 || s >= M) continue;
        const double* xrow = X + s * cin;
        const double* wbase = W + dk * cin * cout;
        double* yrow = Y + t * cout;
        for (int64_t ci = 0; ci < cin; ++ci) {
          double xv = xrow[ci];
          if (xv == 0.0) continue;
          const double* wrow = wbase + ci * cout;
          for (int64_t o = 0; o < cout; ++o) yrow[o] += xv * wrow[o];
        }
      }
    }
  }
  bool rg = want_grad({&signal, &kernel});
  return finish("conv1d", out, rg,
                [signal, kernel, out, M, cin, k, cout, mo, stride, pad_left]() {
    if (out->grad.empty()) return;
    const double* dY = out->grad.data();
    if (signal->requires_grad) {
      signal->ensure_grad();
      double* dX = signal->grad.data();
      const double* W = kernel->data.data();
      for (int64_t t = 0; t < mo; ++t) {
        for (int64_t dk = 0; dk < k; ++dk) {
          const int64_t s = t * stride + dk - pad_left;
          if (s < 0 || s >= M) continue;
          const double* wbase = W + dk * cin * cout;
          const double* dyrow = dY + t * cout;
          double* dxrow = dX + s * cin;
          for (int64_t ci = 0; ci < cin; ++ci) {
            const double* wrow = wbase + ci * cout;
            double acc = 0.0;
            for (int64_t o = 0; o < cout; ++o) acc += dyrow[o] * wrow[o];
            dxrow[ci] += acc;
          }
        }
      }
    }
    if (kernel->requires_grad) {
      kernel->ensure_grad();
      double* dW = kernel->grad.data();
      const double* X = signal->data.data();
      for (int64_t t = 0; t < mo; ++t) {
        for (int64_t dk = 0; dk < k; ++dk) {
          const int64_t s = t * stride + dk - pad_left;
          if (s < 0 || s >= M) continue;
          const double* xrow = X + s * cin;
          const double* dyrow = dY + t * cout;
          double* dwbase = dW + dk * cin * cout;
          for (int64_t ci = 0; ci < cin; ++ci) {
            double xv = xrow[ci];
            if (xv == 0.0) continue;
            double* dwrow = dwbase + ci * cout;
            for (int64_t o = 0; o < cout; ++o) dwrow[o] += xv * dyrow[o];
          }
        }
      }
    }
  });
}

TensorPtr adaptive_max_pool(const TensorPtr& signal, int64_t out_len) {
  require_2d("adaptive_max_pool", signal);
  if (out_len < 1) throw ContractError("adaptive_max_pool: out_len must be >= 1");
  const int64_t M = signal->shape[0], c = signal->shape[1];
  auto out = Tensor::zeros({out_len, c});
  auto argmax = std::make_shared<std::vector<int64_t>>(out_len * c, 0);
  for (int64_t i = 0; i < out_len; ++i) {
    int64_t s = i * M / out_len;
    int64_t e = (i + 1) * M / out_len;
    if (e <= s) {  // M < out_len: repeat the nearest row
      s = std::min(s, M - 1);
      e = s + 1;
    }
    for (int64_t j = 0; j < c; ++j) {
      double best = signal->data[s * c + j];
      int64_t bi = s;
      for (int64_t r = s + 1; r < e; ++r) {
        double v = signal->data[r * c + j];
        if (v > best) {
          best = v;
          bi = r;
        }
      }
      out->data[i * c + j] = best;
      (*argmax)[i * c + j] = bi;
    }
  }
  bool rg = want_grad({&signal});
  return finish("adaptive_max_pool", out, rg, [signal, out, argmax, out_len, c]() {
    if (out->grad.empty() || !signal->requires_grad) return;
    signal->ensure_grad();
    for (int64_t i = 0; i < out_len * c; ++i) {
      signal->grad[(*argmax)[i] * c + i % c] += out->grad[i];
    }
  });
}

TensorPtr embedding_lookup(const TensorPtr& table,
                           const std::vector<int64_t>& indices) {
  require_2d("embedding_lookup", table);
  if (indices.empty()) throw ContractError("embedding_lookup: no indices");
  const int64_t v = table->shape[0], d = table->shape[1];
  for (int64_t ix : indices) {
    if (ix < 0 || ix >= v) {
      throw ContractError("embedding_lookup: index " + std::to_string(ix) +
                          " out of range [0," + std::to_string(v) + ")");
    }
  }
  const int64_t n = static_cast<int64_t>(indices.size());
  auto out = Tensor::zeros({n, d});
  for (int64_t i = 0; i < n; ++i) {
    std::memcpy(out->data.data() + i * d, table->data.data() + indices[i] * d,
                d * sizeof(double));
  }
  bool rg = want_grad({&table});
  auto idx = std::make_shared<std::vector<int64_t>>(indices);
  return finish("embedding_lookup", out, rg, [table, out, idx, d]() {
    if (out->grad.empty() || !table->requires_grad) return;
    table->ensure_grad();
    for (size_t i = 0; i < idx->size(); ++i) {
      double* trow = table->grad.data() + (*idx)[i] * d;
      const double* orow = out->grad.data() + i * d;
      for (int64_t j = 0; j < d; ++j) trow[j] += orow[j];
    }
  });
}

TensorPtr segment_sum(const TensorPtr& values,
                      const std::vector<int64_t>& segments,
                      int64_t num_segments) {
  require_2d("segment_sum", values);
  if (num_segments < 1) throw ContractError("segment_sum: num_segments must be >= 1");
  if (static_cast<int64_t>(segments.size()) != values->shape[0]) {
    throw ShapeError("segment_sum: got " + std::to_string(segments.size()) +
                     " segment ids for " + shape_str(values->shape));
  }
  const int64_t d = values->shape[1];
  for (int64_t s : segments) {
    if (s < 0 || s >= num_segments) {
      throw ContractError("segment_sum: segment id " + std::to_string(s) +
                          " out of range [0," + std::to_string(num_segments) + ")");
    }
  }
  auto out = Tensor::zeros({num_segments, d});
  for (size_t i = 0; i < segments.size(); ++i) {
    const double* vrow = values->data.data() + i * d;
    double* orow = out->data.data() + segments[i] * d;
    for (int64_t j = 0; j < d; ++j) orow[j] += vrow[j];
  }
  bool rg = want_grad({&values});
  auto seg = std::make_shared<std::vector<int64_t>>(segments);
  return finish("segment_sum", out, rg, [values, out, seg, d]() {
    if (out->grad.empty() || !values->requires_grad) return;
    values->ensure_grad();
    for (size_t i = 0; i < seg->size(); ++i) {
      const double* orow = out->grad.data() + (*seg)[i] * d;
      double* vrow = values->grad.data() + i * d;
      for (int64_t j = 0; j < d; ++j) vrow[j] += orow[j];
    }
  });
}

TensorPtr bce_sum(const TensorPtr& probs, const std::vector<double>& labels,
                  const std::vector<double>& weights) {
  const int64_t n = probs->numel();
  if (static_cast<int64_t>(labels.size()) != n ||
      static_cast<int64_t>(weights.size()) != n) {
    throw ShapeError("bce_sum: got " + std::to_string(labels.size()) +
                     " labels / " + std::to_string(weights.size()) +
                     " weights for " + shape_str(probs->shape));
  }
  for (double y : labels) {
    if (y < 0.0 || y > 1.0) throw ContractError("bce_sum: labels must lie in [0,1]");
  }
  double loss = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    double p = std::clamp(probs->data[i], kBceEps, 1.0 - kBceEps);
    loss -= weights[i] * (labels[i] * std::log(p) +
                          (1.0 - labels[i]) * std::log(1.0 - p));
  }
  auto out = Tensor::scalar_val(loss);
  bool rg = want_grad({&probs});
  auto y = std::make_shared<std::vector<double>>(labels);
  auto w = std::make_shared<std::vector<double>>(weights);
  return finish("bce_sum", out, rg, [probs, out, y, w, n]() {
    if (out->grad.empty() || !probs->requires_grad) return;
    probs->ensure_grad();
    for (int64_t i = 0; i < n; ++i) {
      double p = probs->data[i];
      if (p <= kBceEps || p >= 1.0 - kBceEps) continue;  // clamped: flat
      probs->grad[i] += out->grad[0] * (*w)[i] * (p - (*y)[i]) / (p * (1.0 - p));
    }
  });
}

}  // namespace moedti::ops
