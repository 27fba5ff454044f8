#ifndef PROPNET_NNCORE_OPS_HPP
#define PROPNET_NNCORE_OPS_HPP

#include <cstddef>

#include "propnet/nncore/array.hpp"

namespace propnet::nncore {

// Plain forward kernels. The GradTape reuses these; they are also the public
// single-shot API and the reference the naive test oracles are compared with.

// out[r][c] = sum_k x[r][k] * w[k][c] + b[c]
NumArray linear_forward(const NumArray& x, const NumArray& w, const NumArray& b);

// Numerically-stable softmax of a 1-D vector (max subtraction).
NumArray softmax(const NumArray& v);

// Row-wise softmax of a 2-D array.
NumArray softmax_rows(const NumArray& m);

// Valid 3x3 convolution, stride 1, ReLU activation folded in.
// input [H x W] with H,W >= 3; kernel [3 x 3]; scalar bias.
NumArray conv2d_forward(const NumArray& input, const NumArray& kernel, double bias);

// Maximum element of a nonempty array. Ties resolve to the first occurrence
// in row-major order so the backward routing is deterministic.
double global_max_pool(const NumArray& featmap);
std::size_t global_max_index(const NumArray& featmap);

// -ln(max(probs[target], 1e-12)); probs must sum to 1 within 1e-6.
double cross_entropy_loss(const NumArray& probs, std::size_t target);

constexpr double kLogClamp = 1e-12;

}  // namespace propnet::nncore

#endif  // PROPNET_NNCORE_OPS_HPP
