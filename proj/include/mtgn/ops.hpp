#pragma once

#include <cstdint>
#include <vector>

#include "mtgn/tensor.hpp"

namespace mtgn {

// Graph-building primitives. Every op validates operand shapes and throws
// std::runtime_error carrying both shapes on mismatch. Results participate
// in the computation graph whenever grad recording is enabled and an
// operand is tracked.

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
/// a[m,n] + bias[1,n] broadcast over rows.
TensorPtr add_rowwise(const TensorPtr& a, const TensorPtr& bias);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
TensorPtr scale(const TensorPtr& a, double c);
/// Row i multiplied by constant weight w[i].
TensorPtr scale_rows(const TensorPtr& a, const std::vector<double>& w);
TensorPtr neg(const TensorPtr& a);

TensorPtr concat_cols(const std::vector<TensorPtr>& parts);
TensorPtr concat_rows(const std::vector<TensorPtr>& parts);
TensorPtr repeat_rows(const TensorPtr& a, std::int64_t m);
TensorPtr take_row(const TensorPtr& a, std::int64_t i);
TensorPtr gather_rows(const TensorPtr& a, const std::vector<std::int64_t>& idx);
/// Column gather from a single-row tensor.
TensorPtr gather_cols(const TensorPtr& a, const std::vector<std::int64_t>& idx);
/// out[i,0] = a[i, col[i]].
TensorPtr select_per_row(const TensorPtr& a, const std::vector<std::int64_t>& col);
/// Mean of rows sharing a segment id; segments with no rows yield zeros.
TensorPtr segment_mean_rows(const TensorPtr& a, const std::vector<std::int64_t>& seg,
                            std::int64_t n_segments);

TensorPtr exp(const TensorPtr& a);
/// Hard error on any non-positive entry.
TensorPtr log(const TensorPtr& a);
TensorPtr sigmoid(const TensorPtr& a);
TensorPtr tanh(const TensorPtr& a);
TensorPtr square(const TensorPtr& a);
TensorPtr clamp(const TensorPtr& a, double lo, double hi);
/// Standard normal CDF, elementwise.
TensorPtr normal_cdf(const TensorPtr& a);
/// Elementwise multiply by a constant 0/1 (or weight) mask of equal shape.
TensorPtr apply_mask(const TensorPtr& a, const std::vector<double>& mask);

TensorPtr softmax_rows(const TensorPtr& a);
TensorPtr log_softmax_rows(const TensorPtr& a);
TensorPtr logsumexp_rows(const TensorPtr& a);
/// Elementwise max over the set of row vectors: [m,n] -> [1,n].
TensorPtr colwise_max(const TensorPtr& a);
TensorPtr lastdim_sum(const TensorPtr& a);
TensorPtr sum_all(const TensorPtr& a);
TensorPtr mean_all(const TensorPtr& a);

// Standard normal helpers shared by ops and samplers.
double phi_pdf(double x);
double phi_cdf(double x);
/// Inverse standard normal CDF (Acklam's method + one Halley refinement).
double phi_inv(double p);

}  // namespace mtgn
