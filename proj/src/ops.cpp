#include "mtgn/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mtgn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<RowMat>;
using CMapM = Eigen::Map<const RowMat>;

constexpr double kInvSqrt2Pi = 0.3989422804014327;

bool tracked(const TensorPtr& t) {
  return t->requires_grad || static_cast<bool>(t->backward_fn);
}

bool any_tracked(const std::vector<TensorPtr>& parents) {
  if (!grad_enabled()) return false;
  for (const auto& p : parents) {
    if (tracked(p)) return true;
  }
  return false;
}

// Flow buffers exist only on nodes the backward sweep visits; constants are
// skipped, so writes must be guarded.
inline bool has_flow(const TensorPtr& p) { return !p->flow.empty(); }

TensorPtr make_node(std::vector<std::int64_t> shape, std::vector<double> data,
                    std::vector<TensorPtr> parents,
                    std::function<void(const std::vector<double>&)> fn) {
  auto out = Tensor::make(std::move(shape), std::move(data));
  if (any_tracked(parents)) {
    out->parents = std::move(parents);
    out->backward_fn = std::move(fn);
  }
  return out;
}

[[noreturn]] void shape_error(const std::string& op, const TensorPtr& a,
                              const TensorPtr& b) {
  throw std::runtime_error(op + ": shape mismatch " + a->shape_str() + " vs " +
                           b->shape_str());
}

void require_2d(const std::string& op, const TensorPtr& a) {
  if (a->shape.size() != 2) {
    throw std::runtime_error(op + ": expected 2-d tensor, got " + a->shape_str());
  }
}

TensorPtr unary(const TensorPtr& a, double (*f)(double),
                double (*df)(double value, double result)) {
  std::vector<double> out(a->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a->data[i]);
  auto shape = a->shape;
  std::vector<double> saved_in = a->data;
  std::vector<double> saved_out = out;
  return make_node(std::move(shape), std::move(out), {a},
                   [a, df, saved_in = std::move(saved_in),
                    saved_out = std::move(saved_out)](const std::vector<double>& up) {
                     if (!has_flow(a)) return;
                     for (std::size_t i = 0; i < up.size(); ++i) {
                       a->flow[i] += up[i] * df(saved_in[i], saved_out[i]);
                     }
                   });
}

}  // namespace

double phi_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double phi_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double phi_inv(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::runtime_error("phi_inv: p outside (0,1): " + std::to_string(p));
  }
  // Acklam's rational approximation, |rel err| < 1.15e-9 before refinement.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // One Halley step against the exact CDF brings this to full double precision.
  const double e = phi_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
  require_2d("matmul", a);
  require_2d("matmul", b);
  if (a->shape[1] != b->shape[0]) shape_error("matmul", a, b);
  const auto m = a->shape[0], k = a->shape[1], n = b->shape[1];
  std::vector<double> out(static_cast<std::size_t>(m * n));
  {
    CMapM A(a->data.data(), m, k), B(b->data.data(), k, n);
    MapM O(out.data(), m, n);
    O.noalias() = A * B;
  }
  return make_node({m, n}, std::move(out), {a, b},
                   [a, b, m, k, n](const std::vector<double>& up) {
                     CMapM U(up.data(), m, n);
                     if (has_flow(a)) {
                       CMapM B(b->data.data(), k, n);
                       MapM FA(a->flow.data(), m, k);
                       FA.noalias() += U * B.transpose();
                     }
                     if (has_flow(b)) {
                       CMapM A(a->data.data(), m, k);
                       MapM FB(b->flow.data(), k, n);
                       FB.noalias() += A.transpose() * U;
                     }
                   });
}

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
  if (a->shape != b->shape) shape_error("add", a, b);
  std::vector<double> out(a->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] + b->data[i];
  return make_node(a->shape, std::move(out), {a, b},
                   [a, b](const std::vector<double>& up) {
                     if (has_flow(a)) {
                       for (std::size_t i = 0; i < up.size(); ++i) a->flow[i] += up[i];
                     }
                     if (has_flow(b)) {
                       for (std::size_t i = 0; i < up.size(); ++i) b->flow[i] += up[i];
                     }
                   });
}

TensorPtr add_rowwise(const TensorPtr& a, const TensorPtr& bias) {
  require_2d("add_rowwise", a);
  if (bias->rows() != 1 || bias->cols() != a->cols()) {
    shape_error("add_rowwise", a, bias);
  }
  const auto m = a->rows(), n = a->cols();
  std::vector<double> out(a->data.size());
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      out[i * n + j] = a->data[i * n + j] + bias->data[j];
    }
  }
  return make_node({m, n}, std::move(out), {a, bias},
                   [a, bias, m, n](const std::vector<double>& up) {
                     if (has_flow(a)) {
                       for (std::size_t i = 0; i < up.size(); ++i) a->flow[i] += up[i];
                     }
                     if (has_flow(bias)) {
                       for (std::int64_t i = 0; i < m; ++i) {
                         for (std::int64_t j = 0; j < n; ++j) {
                           bias->flow[j] += up[i * n + j];
                         }
                       }
                     }
                   });
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
  if (a->shape != b->shape) shape_error("sub", a, b);
  std::vector<double> out(a->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] - b->data[i];
  return make_node(a->shape, std::move(out), {a, b},
                   [a, b](const std::vector<double>& up) {
                     if (has_flow(a)) {
                       for (std::size_t i = 0; i < up.size(); ++i) a->flow[i] += up[i];
                     }
                     if (has_flow(b)) {
                       for (std::size_t i = 0; i < up.size(); ++i) b->flow[i] -= up[i];
                     }
                   });
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
  if (a->shape != b->shape) shape_error("mul", a, b);
  std::vector<double> out(a->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] * b->data[i];
  return make_node(a->shape, std::move(out), {a, b},
                   [a, b](const std::vector<double>& up) {
                     if (has_flow(a)) {
                       for (std::size_t i = 0; i < up.size(); ++i) {
                         a->flow[i] += up[i] * b->data[i];
                       }
                     }
                     if (has_flow(b)) {
                       for (std::size_t i = 0; i < up.size(); ++i) {
                         b->flow[i] += up[i] * a->data[i];
                       }
                     }
                   });
}

TensorPtr scale(const TensorPtr& a, double c) {
  std::vector<double> out(a->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] * c;
  return make_node(a->shape, std::move(out), {a},
                   [a, c](const std::vector<double>& up) {
                     if (!has_flow(a)) return;
                     for (std::size_t i = 0; i < up.size(); ++i) a->flow[i] += up[i] * c;
                   });
}

TensorPtr scale_rows(const TensorPtr& a, const std::vector<double>& w) {
  require_2d("scale_rows", a);
  const auto m = a->rows(), n = a->cols();
  if (static_cast<std::int64_t>(w.size()) != m) {
    throw std::runtime_error("scale_rows: weights length " + std::to_string(w.size()) +
                             " vs rows " + std::to_string(m));
  }
  std::vector<double> out(a->data.size());
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < n; ++j) out[i * n + j] = a->data[i * n + j] * w[i];
  }
  return make_node({m, n}, std::move(out), {a},
                   [a, w, m, n](const std::vector<double>& up) {
                     if (!has_flow(a)) return;
                     for (std::int64_t i = 0; i < m; ++i) {
                       for (std::int64_t j = 0; j < n; ++j) {
                         a->flow[i * n + j] += up[i * n + j] * w[i];
                       }
                     }
                   });
}

TensorPtr neg(const TensorPtr& a) { return scale(a, -1.0); }

TensorPtr concat_cols(const std::vector<TensorPtr>& parts) {
  if (parts.empty()) throw std::runtime_error("concat_cols: no operands");
  const auto m = parts[0]->rows();
  std::int64_t total = 0;
  for (const auto& p : parts) {
    require_2d("concat_cols", p);
    if (p->rows() != m) shape_error("concat_cols", parts[0], p);
    total += p->cols();
  }
  std::vector<double> out(static_cast<std::size_t>(m * total));
  std::int64_t off = 0;
  for (const auto& p : parts) {
    const auto n = p->cols();
    for (std::int64_t i = 0; i < m; ++i) {
      std::copy_n(p->data.begin() + i * n, n, out.begin() + i * total + off);
    }
    off += n;
  }
  return make_node({m, total}, std::move(out), parts,
                   [parts, m, total](const std::vector<double>& up) {
                     std::int64_t off = 0;
                     for (const auto& p : parts) {
                       const auto n = p->cols();
                       if (has_flow(p)) {
                         for (std::int64_t i = 0; i < m; ++i) {
                           for (std::int64_t j = 0; j < n; ++j) {
                             p->flow[i * n + j] += up[i * total + off + j];
                           }
                         }
                       }
                       off += n;
                     }
                   });
}

TensorPtr concat_rows(const std::vector<TensorPtr>& parts) {
  if (parts.empty()) throw std::runtime_error("concat_rows: no operands");
  const auto n = parts[0]->cols();
  std::int64_t total = 0;
  for (const auto& p : parts) {
    require_2d("concat_rows", p);
    if (p->cols() != n) shape_error("concat_rows", parts[0], p);
    total += p->rows();
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(total * n));
  for (const auto& p : parts) out.insert(out.end(), p->data.begin(), p->data.end());
  return make_node({total, n}, std::move(out), parts,
                   [parts, n](const std::vector<double>& up) {
                     std::size_t off = 0;
                     for (const auto& p : parts) {
                       if (has_flow(p)) {
                         for (std::size_t i = 0; i < p->data.size(); ++i) {
                           p->flow[i] += up[off + i];
                         }
                       }
                       off += p->data.size();
                     }
                   });
}

TensorPtr repeat_rows(const TensorPtr& a, std::int64_t m) {
  require_2d("repeat_rows", a);
  if (a->rows() != 1) {
    throw std::runtime_error("repeat_rows: expected single row, got " + a->shape_str());
  }
  const auto n = a->cols();
  std::vector<double> out(static_cast<std::size_t>(m * n));
  for (std::int64_t i = 0; i < m; ++i) {
    std::copy_n(a->data.begin(), n, out.begin() + i * n);
  }
  return make_node({m, n}, std::move(out), {a},
                   [a, m, n](const std::vector<double>& up) {
                     if (!has_flow(a)) return;
                     for (std::int64_t i = 0; i < m; ++i) {
                       for (std::int64_t j = 0; j < n; ++j) a->flow[j] += up[i * n + j];
                     }
                   });
}

TensorPtr take_row(const TensorPtr& a, std::int64_t i) {
  require_2d("take_row", a);
  if (i < 0 || i >= a->rows()) {
    throw std::runtime_error("take_row: index " + std::to_string(i) + " out of " +
                             a->shape_str());
  }
  const auto n = a->cols();
  std::vector<double> out(a->data.begin() + i * n, a->data.begin() + (i + 1) * n);
  return make_node({1, n}, std::move(out), {a},
                   [a, i, n](const std::vector<double>& up) {
                     if (!has_flow(a)) return;
                     for (std::int64_t j = 0; j < n; ++j) a->flow[i * n + j] += up[j];
                   });
}

TensorPtr gather_rows(const TensorPtr& a, const std::vector<std::int64_t>& idx) {
  require_2d("gather_rows", a);
  const auto n = a->cols();
  for (auto i : idx) {
    if (i < 0 || i >= a->rows()) {
      throw std::runtime_error("gather_rows: index " + std::to_string(i) + " out of " +
                               a->shape_str());
    }
  }
  const auto k = static_cast<std::int64_t>(idx.size());
  std::vector<double> out(static_cast<std::size_t>(k * n));
  for (std::int64_t r = 0; r < k; ++r) {
    std::copy_n(a->data.begin() + idx[r] * n, n, out.begin() + r * n);
  }
  return make_node({k, n}, std::move(out), {a},
                   [a, idx, k, n](const std::vector<double>& up) {
                     if (!has_flow(a)) return;
                     for (std::int64_t r = 0; r < k; ++r) {
                       for (std::int64_t j = 0; j < n; ++j) {
                         a->flow[idx[r] * n + j] += up[r * n + j];
                       }
                     }
                   });
}

TensorPtr gather_cols(const TensorPtr& a, const std::vector<std::int64_t>& idx) {
  require_2d("gather_cols", a);
  if (a->rows() != 1) {
    throw std::runtime_error("gather_cols: expected single row, got " + a->shape_str());
  }
  for (auto i : idx) {
    if (i < 0 || i >= a->cols()) {
      throw std::runtime_error("gather_cols: index " + std::to_string(i) + " out of " +
                               a->shape_str());
    }
  }
  const auto k = static_cast<std::int64_t>(idx.size());
  std::vector<double> out(static_cast<std::size_t>(k));
  for (std::int64_t j = 0; j < k; ++j) out[j] = a->data[idx[j]];
  return make_node({1, k}, std::move(out), {a},
                   [a, idx, k](const std::vector<double>& up) {
                     if (!has_flow(a)) return;
                     for (std::int64_t j = 0; j < k; ++j) a->flow[idx[j]] += up[j];
                   });
}

TensorPtr select_per_row(const TensorPtr& a, const std::vector<std::int64_t>& col) {
  require_2d("select_per_row", a);
  const auto m = a->rows(), n = a->cols();
  if (static_cast<std::int64_t>(col.size()) != m) {
    throw std::runtime_error("select_per_row: indices length " +
                             std::to_string(col.size()) + " vs rows " +
                             std::to_string(m));
  }
  for (auto c : col) {
    if (c < 0 || c >= n) {
      throw std::runtime_error("select_per_row: column " + std::to_string(c) +
                               " out of " + a->shape_str());
    }
  }
  std::vector<double> out(static_cast<std::size_t>(m));
  for (std::int64_t i = 0; i < m; ++i) out[i] = a->data[i * n + col[i]];
  return make_node({m, 1}, std::move(out), {a},
                   [a, col, m, n](const std::vector<double>& up) {
                     if (!has_flow(a)) return;
                     for (std::int64_t i = 0; i < m; ++i) {
                       a->flow[i * n + col[i]] += up[i];
                     }
                   });
}

TensorPtr segment_mean_rows(const TensorPtr& a, const std::vector<std::int64_t>& seg,
                            std::int64_t n_segments) {
  require_2d("segment_mean_rows", a);
  const auto k = a->rows(), n = a->cols();
  if (static_cast<std::int64_t>(seg.size()) != k) {
    throw std::runtime_error("segment_mean_rows: segment ids length " +
                             std::to_string(seg.size()) + " vs rows " +
                             std::to_string(k));
  }
  std::vector<double> count(static_cast<std::size_t>(n_segments), 0.0);
  for (auto s : seg) {
    if (s < 0 || s >= n_segments) {
      throw std::runtime_error("segment_mean_rows: segment id " + std::to_string(s) +
                               " out of range");
    }
    count[s] += 1.0;
  }
  std::vector<double> out(static_cast<std::size_t>(n_segments * n), 0.0);
  for (std::int64_t r = 0; r < k; ++r) {
    for (std::int64_t j = 0; j < n; ++j) out[seg[r] * n + j] += a->data[r * n + j];
  }
  for (std::int64_t s = 0; s < n_segments; ++s) {
    if (count[s] > 0.0) {
      for (std::int64_t j = 0; j < n; ++j) out[s * n + j] /= count[s];
    }
  }
  return make_node({n_segments, n}, std::move(out), {a},
                   [a, seg, count, k, n](const std::vector<double>& up) {
                     if (!has_flow(a)) return;
                     for (std::int64_t r = 0; r < k; ++r) {
                       const double inv = 1.0 / count[seg[r]];
                       for (std::int64_t j = 0; j < n; ++j) {
                         a->flow[r * n + j] += up[seg[r] * n + j] * inv;
                       }
                     }
                   });
}

TensorPtr exp(const TensorPtr& a) {
  return unary(
      a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

TensorPtr log(const TensorPtr& a) {
  for (double v : a->data) {
    if (!(v > 0.0)) {
      throw std::runtime_error("log: non-positive input " + std::to_string(v));
    }
  }
  return unary(
      a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

TensorPtr sigmoid(const TensorPtr& a) {
  return unary(
      a,
      [](double x) {
        return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                        : std::exp(x) / (1.0 + std::exp(x));
      },
      [](double, double y) { return y * (1.0 - y); });
}

TensorPtr tanh(const TensorPtr& a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

TensorPtr square(const TensorPtr& a) {
  return unary(
      a, [](double x) { return x * x; },
      [](double x, double) { return 2.0 * x; });
}

TensorPtr clamp(const TensorPtr& a, double lo, double hi) {
  std::vector<double> out(a->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::min(hi, std::max(lo, a->data[i]));
  }
  return make_node(a->shape, std::move(out), {a},
                   [a, lo, hi](const std::vector<double>& up) {
                     if (!has_flow(a)) return;
                     for (std::size_t i = 0; i < up.size(); ++i) {
                       if (a->data[i] > lo && a->data[i] < hi) a->flow[i] += up[i];
                     }
                   });
}

TensorPtr normal_cdf(const TensorPtr& a) {
  return unary(
      a, [](double x) { return phi_cdf(x); },
      [](double x, double) { return phi_pdf(x); });
}

TensorPtr apply_mask(const TensorPtr& a, const std::vector<double>& mask) {
  if (mask.size() != a->data.size()) {
    throw std::runtime_error("apply_mask: mask length " + std::to_string(mask.size()) +
                             " vs tensor " + a->shape_str());
  }
  std::vector<double> out(a->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] * mask[i];
  return make_node(a->shape, std::move(out), {a},
                   [a, mask](const std::vector<double>& up) {
                     if (!has_flow(a)) return;
                     for (std::size_t i = 0; i < up.size(); ++i) {
                       a->flow[i] += up[i] * mask[i];
                     }
                   });
}

TensorPtr softmax_rows(const TensorPtr& a) {
  require_2d("softmax_rows", a);
  const auto m = a->rows(), n = a->cols();
  std::vector<double> out(a->data.size());
  for (std::int64_t i = 0; i < m; ++i) {
    const double* x = a->data.data() + i * n;
    double mx = x[0];
    for (std::int64_t j = 1; j < n; ++j) mx = std::max(mx, x[j]);
    double z = 0.0;
    for (std::int64_t j = 0; j < n; ++j) {
      out[i * n + j] = std::exp(x[j] - mx);
      z += out[i * n + j];
    }
    for (std::int64_t j = 0; j < n; ++j) out[i * n + j] /= z;
  }
  std::vector<double> y = out;
  return make_node({m, n}, std::move(out), {a},
                   [a, y = std::move(y), m, n](const std::vector<double>& up) {
                     if (!has_flow(a)) return;
                     for (std::int64_t i = 0; i < m; ++i) {
                       double dot = 0.0;
                       for (std::int64_t j = 0; j < n; ++j) {
                         dot += up[i * n + j] * y[i * n + j];
                       }
                       for (std::int64_t j = 0; j < n; ++j) {
                         a->flow[i * n + j] += y[i * n + j] * (up[i * n + j] - dot);
                       }
                     }
                   });
}

TensorPtr log_softmax_rows(const TensorPtr& a) {
  require_2d("log_softmax_rows", a);
  const auto m = a->rows(), n = a->cols();
  std::vector<double> out(a->data.size());
  std::vector<double> soft(a->data.size());
  for (std::int64_t i = 0; i < m; ++i) {
    const double* x = a->data.data() + i * n;
    double mx = x[0];
    for (std::int64_t j = 1; j < n; ++j) mx = std::max(mx, x[j]);
    double z = 0.0;
    for (std::int64_t j = 0; j < n; ++j) z += std::exp(x[j] - mx);
    const double lse = mx + std::log(z);
    for (std::int64_t j = 0; j < n; ++j) {
      out[i * n + j] = x[j] - lse;
      soft[i * n + j] = std::exp(out[i * n + j]);
    }
  }
  return make_node({m, n}, std::move(out), {a},
                   [a, soft = std::move(soft), m, n](const std::vector<double>& up) {
                     if (!has_flow(a)) return;
                     for (std::int64_t i = 0; i < m; ++i) {
                       double tot = 0.0;
                       for (std::int64_t j = 0; j < n; ++j) tot += up[i * n + j];
                       for (std::int64_t j = 0; j < n; ++j) {
                         a->flow[i * n + j] += up[i * n + j] - soft[i * n + j] * tot;
                       }
                     }
                   });
}

TensorPtr logsumexp_rows(const TensorPtr& a) {
  require_2d("logsumexp_rows", a);
  const auto m = a->rows(), n = a->cols();
  std::vector<double> out(static_cast<std::size_t>(m));
  std::vector<double> soft(a->data.size());
  for (std::int64_t i = 0; i < m; ++i) {
    const double* x = a->data.data() + i * n;
    double mx = x[0];
    for (std::int64_t j = 1; j < n; ++j) mx = std::max(mx, x[j]);
    double z = 0.0;
    for (std::int64_t j = 0; j < n; ++j) z += std::exp(x[j] - mx);
    out[i] = mx + std::log(z);
    for (std::int64_t j = 0; j < n; ++j) soft[i * n + j] = std::exp(x[j] - out[i]);
  }
  return make_node({m, 1}, std::move(out), {a},
                   [a, soft = std::move(soft), m, n](const std::vector<double>& up) {
                     if (!has_flow(a)) return;
                     for (std::int64_t i = 0; i < m; ++i) {
                       for (std::int64_t j = 0; j < n; ++j) {
                         a->flow[i * n + j] += up[i] * soft[i * n + j];
                       }
                     }
                   });
}

TensorPtr colwise_max(const TensorPtr& a) {
  require_2d("colwise_max", a);
  const auto m = a->rows(), n = a->cols();
  if (m < 1) throw std::runtime_error("colwise_max: empty input");
  std::vector<double> out(static_cast<std::size_t>(n));
  std::vector<std::int64_t> argmax(static_cast<std::size_t>(n), 0);
  for (std::int64_t j = 0; j < n; ++j) {
    double best = a->data[j];
    std::int64_t bi = 0;
    for (std::int64_t i = 1; i < m; ++i) {
      if (a->data[i * n + j] > best) {  // ties keep the first row: deterministic
        best = a->data[i * n + j];
        bi = i;
      }
    }
    out[j] = best;
    argmax[j] = bi;
  }
  return make_node({1, n}, std::move(out), {a},
                   [a, argmax = std::move(argmax), n](const std::vector<double>& up) {
                     if (!has_flow(a)) return;
                     for (std::int64_t j = 0; j < n; ++j) {
                       a->flow[argmax[j] * n + j] += up[j];
                     }
                   });
}

TensorPtr lastdim_sum(const TensorPtr& a) {
  require_2d("lastdim_sum", a);
  const auto m = a->rows(), n = a->cols();
  std::vector<double> out(static_cast<std::size_t>(m), 0.0);
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < n; ++j) out[i] += a->data[i * n + j];
  }
  return make_node({m, 1}, std::move(out), {a},
                   [a, m, n](const std::vector<double>& up) {
                     if (!has_flow(a)) return;
                     for (std::int64_t i = 0; i < m; ++i) {
                       for (std::int64_t j = 0; j < n; ++j) a->flow[i * n + j] += up[i];
                     }
                   });
}

TensorPtr sum_all(const TensorPtr& a) {
  double s = 0.0;
  for (double v : a->data) s += v;
  return make_node({1, 1}, {s}, {a}, [a](const std::vector<double>& up) {
    if (!has_flow(a)) return;
    for (double& f : a->flow) f += up[0];
  });
}

TensorPtr mean_all(const TensorPtr& a) {
  return scale(sum_all(a), 1.0 / static_cast<double>(a->numel()));
}

}  // namespace mtgn
