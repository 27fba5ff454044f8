#include "propnet/nncore/ops.hpp"

#include <algorithm>
#include <cmath>

namespace propnet::nncore {

NumArray linear_forward(const NumArray& x, const NumArray& w, const NumArray& b) {
    if (!x.is_matrix() || !w.is_matrix())
        throw_error(ErrorKind::Dimension,
                    "linear_forward: expected matrices, got " + x.shape_str() + " and " + w.shape_str());
    if (x.shape[1] != w.shape[0])
        throw_error(ErrorKind::Dimension,
                    "linear_forward: inner dimensions disagree, " + x.shape_str() + " vs " + w.shape_str());
    if (!b.is_vector() || b.shape[0] != w.shape[1])
        throw_error(ErrorKind::Dimension,
                    "linear_forward: bias shape " + b.shape_str() + " does not match weight " + w.shape_str());

    const std::size_t n = x.shape[0], inner = x.shape[1], o = w.shape[1];
    NumArray out = NumArray::zeros({n, o});
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t k = 0; k < inner; ++k) {
            const double xv = x.at(r, k);
            if (xv == 0.0) continue;
            for (std::size_t c = 0; c < o; ++c) out.at(r, c) += xv * w.at(k, c);
        }
        for (std::size_t c = 0; c < o; ++c) out.at(r, c) += b[c];
    }
    return out;
}

NumArray softmax(const NumArray& v) {
    if (v.numel() == 0) throw_error(ErrorKind::Domain, "softmax: empty input");
    double mx = *std::max_element(v.data.begin(), v.data.end());
    NumArray out = NumArray::zeros(v.shape);
    double sum = 0.0;
    for (std::size_t i = 0; i < v.numel(); ++i) {
        out[i] = std::exp(v[i] - mx);
        sum += out[i];
    }
    for (double& x : out.data) x /= sum;
    return out;
}

NumArray softmax_rows(const NumArray& m) {
    if (!m.is_matrix()) throw_error(ErrorKind::Dimension, "softmax_rows: expected matrix, got " + m.shape_str());
    NumArray out = NumArray::zeros(m.shape);
    const std::size_t r = m.shape[0], c = m.shape[1];
    if (c == 0) throw_error(ErrorKind::Domain, "softmax_rows: empty rows");
    for (std::size_t i = 0; i < r; ++i) {
        double mx = m.at(i, 0);
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, m.at(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            double e = std::exp(m.at(i, j) - mx);
            out.at(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < c; ++j) out.at(i, j) /= sum;
    }
    return out;
}

NumArray conv2d_forward(const NumArray& input, const NumArray& kernel, double bias) {
    if (!input.is_matrix())
        throw_error(ErrorKind::Dimension, "conv2d_forward: input must be 2-D, got " + input.shape_str());
    if (!kernel.is_matrix() || kernel.shape[0] != 3 || kernel.shape[1] != 3)
        throw_error(ErrorKind::Dimension, "conv2d_forward: kernel must be 3x3, got " + kernel.shape_str());
    const std::size_t h = input.shape[0], w = input.shape[1];
    if (h < 3 || w < 3)
        throw_error(ErrorKind::Dimension,
                    "conv2d_forward: input " + input.shape_str() + " smaller than kernel " + kernel.shape_str());

    NumArray out = NumArray::zeros({h - 2, w - 2});
    for (std::size_t x = 0; x + 2 < h; ++x) {
        for (std::size_t y = 0; y + 2 < w; ++y) {
            double acc = bias;
            for (std::size_t a = 0; a < 3; ++a)
                for (std::size_t b = 0; b < 3; ++b) acc += kernel.at(a, b) * input.at(x + a, y + b);
            out.at(x, y) = acc > 0.0 ? acc : 0.0;
        }
    }
    return out;
}

std::size_t global_max_index(const NumArray& featmap) {
    if (featmap.numel() == 0) throw_error(ErrorKind::Domain, "global_max_pool: empty input");
    std::size_t best = 0;
    for (std::size_t i = 1; i < featmap.numel(); ++i)
        if (featmap[i] > featmap[best]) best = i;  // strict: ties keep the first index
    return best;
}

double global_max_pool(const NumArray& featmap) { return featmap[global_max_index(featmap)]; }

double cross_entropy_loss(const NumArray& probs, std::size_t target) {
    if (target >= probs.numel())
        throw_error(ErrorKind::Domain, "cross_entropy_loss: target " + std::to_string(target) +
                                           " out of range for " + probs.shape_str());
    double sum = 0.0;
    for (double p : probs.data) sum += p;
    if (std::abs(sum - 1.0) > 1e-6)
        throw_error(ErrorKind::Domain,
                    "cross_entropy_loss: probabilities sum to " + std::to_string(sum) + ", expected 1");
    return -std::log(std::max(probs[target], kLogClamp));
}

}  // namespace propnet::nncore
