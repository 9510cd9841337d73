#pragma once

#include <vector>

#include "moedti/tensor.hpp"

// Differentiable tensor operations. Every op validates operand shapes,
// checks its output for non-finite values, and (when any input requires
// grad and recording is enabled) pushes a backward rule onto the
// thread's tape. Gradients accumulate: a tensor consumed twice receives
// the sum of both contributions.
namespace moedti::ops {

// [m,k] x [k,n] -> [m,n]
TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);

// Same-shape elementwise add, or row-vector bias broadcast:
// [m,n] + [n] (or [1,n]) -> [m,n].
TensorPtr add(const TensorPtr& a, const TensorPtr& b);

// Same-shape elementwise.
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);

// k * a, and k * a + c, with compile-time constants k, c.
TensorPtr scale(const TensorPtr& a, double k);
TensorPtr affine(const TensorPtr& a, double k, double c);

TensorPtr relu(const TensorPtr& a);
TensorPtr sigmoid(const TensorPtr& a);
TensorPtr log(const TensorPtr& a);

// axis 0 or 1 on 2-d input; 1-d input is treated as a single row.
TensorPtr softmax(const TensorPtr& a, int axis);

// 2-d parts stacked along axis 0 (rows) or 1 (columns).
TensorPtr concat(const std::vector<TensorPtr>& parts, int axis);

// Columns [start, start+len) of a 2-d tensor.
TensorPtr slice_cols(const TensorPtr& a, int64_t start, int64_t len);

// Same data, new shape (numel must match).
TensorPtr reshape(const TensorPtr& a, Shape shape);

// Coordinate-wise max over rows: [m,n] -> [1,n]. Ties route the
// gradient to the first maximal row.
TensorPtr max_over_rows(const TensorPtr& a);

// Full reductions to a scalar.
TensorPtr mean(const TensorPtr& a);
TensorPtr sum(const TensorPtr& a);
TensorPtr l2_norm(const TensorPtr& a);

// signal [M, c_in], kernel [k, c_in, c_out] -> [ceil(M/stride), c_out]
// with centered zero padding ("same" mode).
TensorPtr conv1d(const TensorPtr& signal, const TensorPtr& kernel,
                 int64_t stride = 1);

// [M, c] -> [out_len, c]; segment i covers rows
// [floor(i*M/out_len), floor((i+1)*M/out_len)). For M < out_len the
// (otherwise empty) segments repeat single rows so the output length
// stays fixed.
TensorPtr adaptive_max_pool(const TensorPtr& signal, int64_t out_len);

// table [V, d], indices in [0, V) -> [n, d]. Backward scatters row
// gradients into the table (rows looked up twice accumulate).
TensorPtr embedding_lookup(const TensorPtr& table,
                           const std::vector<int64_t>& indices);

// values [n, d], segment ids in [0, num_segments) -> [num_segments, d].
TensorPtr segment_sum(const TensorPtr& values,
                      const std::vector<int64_t>& segments,
                      int64_t num_segments);

// Weighted binary cross-entropy in un-averaged sum form:
//   sum_i w_i * -(y_i log p_i + (1-y_i) log(1-p_i))
// with probabilities clamped to [1e-7, 1-1e-7] for stability (zero
// gradient in the clamped range).
TensorPtr bce_sum(const TensorPtr& probs, const std::vector<double>& labels,
                  const std::vector<double>& weights);

}  // namespace moedti::ops
