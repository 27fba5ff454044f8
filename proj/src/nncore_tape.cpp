#include "propnet/nncore/tape.hpp"

#include <algorithm>
#include <cmath>

#include "propnet/nncore/ops.hpp"

namespace propnet::nncore {

namespace {

// Interprets [c] and [1 x c] the same way.
std::size_t flat_cols(const NumArray& a) {
    if (a.is_vector()) return a.shape[0];
    if (a.is_matrix() && a.shape[0] == 1) return a.shape[1];
    throw_error(ErrorKind::Dimension, "expected a single row, got " + a.shape_str());
}

}  // namespace

GradTape::Ref GradTape::push(Op op, NumArray value, std::vector<Ref> parents, std::vector<std::size_t> aux,
                             std::vector<double> aux_data, double scalar) {
    Node node;
    node.op = op;
    node.grad = NumArray::zeros(value.shape);
    node.value = std::move(value);
    node.parents = std::move(parents);
    node.aux = std::move(aux);
    node.aux_data = std::move(aux_data);
    node.scalar = scalar;
    nodes_.push_back(std::move(node));
    return static_cast<Ref>(nodes_.size() - 1);
}

GradTape::Ref GradTape::input(NumArray value) { return push(Op::Leaf, std::move(value), {}); }
GradTape::Ref GradTape::constant(NumArray value) { return push(Op::Const, std::move(value), {}); }

GradTape::Ref GradTape::matmul(Ref a, Ref b) {
    const NumArray& A = v(a);
    const NumArray& B = v(b);
    if (!A.is_matrix() || !B.is_matrix() || A.shape[1] != B.shape[0])
        throw_error(ErrorKind::Dimension, "matmul: incompatible shapes " + A.shape_str() + " and " + B.shape_str());
    NumArray out = NumArray::zeros({A.shape[0], B.shape[1]});
    for (std::size_t r = 0; r < A.shape[0]; ++r)
        for (std::size_t k = 0; k < A.shape[1]; ++k) {
            double av = A.at(r, k);
            if (av == 0.0) continue;
            for (std::size_t c = 0; c < B.shape[1]; ++c) out.at(r, c) += av * B.at(k, c);
        }
    return push(Op::MatMul, std::move(out), {a, b});
}

GradTape::Ref GradTape::transpose(Ref a) {
    const NumArray& A = v(a);
    if (!A.is_matrix()) throw_error(ErrorKind::Dimension, "transpose: expected matrix, got " + A.shape_str());
    NumArray out = NumArray::zeros({A.shape[1], A.shape[0]});
    for (std::size_t r = 0; r < A.shape[0]; ++r)
        for (std::size_t c = 0; c < A.shape[1]; ++c) out.at(c, r) = A.at(r, c);
    return push(Op::Transpose, std::move(out), {a});
}

GradTape::Ref GradTape::add(Ref a, Ref b) {
    const NumArray& A = v(a);
    const NumArray& B = v(b);
    require_same_shape(A, B, "add");
    NumArray out = A;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += B[i];
    return push(Op::Add, std::move(out), {a, b});
}

GradTape::Ref GradTape::add_rowvec(Ref a, Ref b) {
    const NumArray& A = v(a);
    const NumArray& B = v(b);
    if (!A.is_matrix() || !B.is_vector() || B.shape[0] != A.shape[1])
        throw_error(ErrorKind::Dimension,
                    "add_rowvec: incompatible shapes " + A.shape_str() + " and " + B.shape_str());
    NumArray out = A;
    for (std::size_t r = 0; r < A.shape[0]; ++r)
        for (std::size_t c = 0; c < A.shape[1]; ++c) out.at(r, c) += B[c];
    return push(Op::AddRowVec, std::move(out), {a, b});
}

GradTape::Ref GradTape::mul(Ref a, Ref b) {
    const NumArray& A = v(a);
    const NumArray& B = v(b);
    require_same_shape(A, B, "mul");
    NumArray out = A;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= B[i];
    return push(Op::Mul, std::move(out), {a, b});
}

GradTape::Ref GradTape::scale(Ref a, double c) {
    NumArray out = v(a);
    for (double& x : out.data) x *= c;
    return push(Op::Scale, std::move(out), {a}, {}, {}, c);
}

GradTape::Ref GradTape::relu(Ref a) {
    NumArray out = v(a);
    for (double& x : out.data) x = x > 0.0 ? x : 0.0;
    return push(Op::Relu, std::move(out), {a});
}

GradTape::Ref GradTape::sigmoid(Ref a) {
    NumArray out = v(a);
    for (double& x : out.data) x = 1.0 / (1.0 + std::exp(-x));
    return push(Op::Sigmoid, std::move(out), {a});
}

GradTape::Ref GradTape::tanh(Ref a) {
    NumArray out = v(a);
    for (double& x : out.data) x = std::tanh(x);
    return push(Op::Tanh, std::move(out), {a});
}

GradTape::Ref GradTape::softmax_rows(Ref a) {
    const NumArray& A = v(a);
    NumArray out = A.is_vector() ? nncore::softmax(A) : nncore::softmax_rows(A);
    return push(Op::SoftmaxRows, std::move(out), {a});
}

GradTape::Ref GradTape::conv2d(Ref in, Ref kernel, Ref bias) {
    const NumArray& B = v(bias);
    if (B.numel() != 1) throw_error(ErrorKind::Dimension, "conv2d: bias must be a single value, got " + B.shape_str());
    NumArray out = conv2d_forward(v(in), v(kernel), B[0]);
    return push(Op::Conv2d, std::move(out), {in, kernel, bias});
}

GradTape::Ref GradTape::global_max_pool(Ref a) {
    std::size_t idx = global_max_index(v(a));
    NumArray out({1}, {v(a)[idx]});
    return push(Op::GlobalMaxPool, std::move(out), {a}, {idx});
}

GradTape::Ref GradTape::gather_rows(Ref table, std::vector<std::size_t> indices) {
    const NumArray& T = v(table);
    if (!T.is_matrix()) throw_error(ErrorKind::Dimension, "gather_rows: table must be 2-D, got " + T.shape_str());
    const std::size_t c = T.shape[1];
    NumArray out = NumArray::zeros({indices.size(), c});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= T.shape[0])
            throw_error(ErrorKind::Domain, "gather_rows: index " + std::to_string(indices[i]) + " out of range");
        for (std::size_t j = 0; j < c; ++j) out.at(i, j) = T.at(indices[i], j);
    }
    return push(Op::GatherRows, std::move(out), {table}, std::move(indices));
}

GradTape::Ref GradTape::concat_cols(Ref a, Ref b) {
    const NumArray& A = v(a);
    const NumArray& B = v(b);
    if (!A.is_matrix() || !B.is_matrix() || A.shape[0] != B.shape[0])
        throw_error(ErrorKind::Dimension,
                    "concat_cols: incompatible shapes " + A.shape_str() + " and " + B.shape_str());
    NumArray out = NumArray::zeros({A.shape[0], A.shape[1] + B.shape[1]});
    for (std::size_t r = 0; r < A.shape[0]; ++r) {
        for (std::size_t c = 0; c < A.shape[1]; ++c) out.at(r, c) = A.at(r, c);
        for (std::size_t c = 0; c < B.shape[1]; ++c) out.at(r, A.shape[1] + c) = B.at(r, c);
    }
    return push(Op::ConcatCols, std::move(out), {a, b});
}

GradTape::Ref GradTape::stack_rows(const std::vector<Ref>& rows) {
    if (rows.empty()) throw_error(ErrorKind::Domain, "stack_rows: no rows");
    const std::size_t c = flat_cols(v(rows[0]));
    NumArray out = NumArray::zeros({rows.size(), c});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const NumArray& R = v(rows[i]);
        if (flat_cols(R) != c)
            throw_error(ErrorKind::Dimension, "stack_rows: row width mismatch at row " + std::to_string(i));
        for (std::size_t j = 0; j < c; ++j) out.at(i, j) = R[j];
    }
    return push(Op::StackRows, std::move(out), rows);
}

GradTape::Ref GradTape::take_row(Ref a, std::size_t row) {
    const NumArray& A = v(a);
    if (!A.is_matrix() || row >= A.shape[0])
        throw_error(ErrorKind::Dimension, "take_row: row " + std::to_string(row) + " out of range for " + A.shape_str());
    NumArray out = NumArray::zeros({1, A.shape[1]});
    for (std::size_t j = 0; j < A.shape[1]; ++j) out.at(0, j) = A.at(row, j);
    return push(Op::TakeRow, std::move(out), {a}, {row});
}

GradTape::Ref GradTape::cross_entropy(Ref probs, std::size_t target) {
    const NumArray& P = v(probs);
    std::size_t c = flat_cols(P);
    if (target >= c)
        throw_error(ErrorKind::Domain, "cross_entropy: target " + std::to_string(target) + " out of range");
    NumArray out({1}, {-std::log(std::max(P[target], kLogClamp))});
    return push(Op::CrossEntropy, std::move(out), {probs}, {target});
}

GradTape::Ref GradTape::mean_cross_entropy_rows(Ref probs, std::vector<std::size_t> targets,
                                                std::vector<double> weights) {
    const NumArray& P = v(probs);
    if (!P.is_matrix()) throw_error(ErrorKind::Dimension, "mean_cross_entropy_rows: expected matrix");
    if (targets.size() != P.shape[0] || weights.size() != P.shape[0])
        throw_error(ErrorKind::Dimension, "mean_cross_entropy_rows: targets/weights length mismatch");
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    if (wsum <= 0.0) throw_error(ErrorKind::Domain, "mean_cross_entropy_rows: all weights zero");
    for (double& w : weights) w /= wsum;
    double loss = 0.0;
    for (std::size_t r = 0; r < P.shape[0]; ++r) {
        if (targets[r] >= P.shape[1])
            throw_error(ErrorKind::Domain, "mean_cross_entropy_rows: target out of range at row " + std::to_string(r));
        loss -= weights[r] * std::log(std::max(P.at(r, targets[r]), kLogClamp));
    }
    NumArray out({1}, {loss});
    return push(Op::MeanCeRows, std::move(out), {probs}, std::move(targets), std::move(weights));
}

void GradTape::backward(Ref loss) {
    if (v(loss).numel() != 1)
        throw_error(ErrorKind::Domain, "backward: loss must be a single element, got " + v(loss).shape_str());
    g(loss)[0] = 1.0;
    for (std::size_t i = loss + 1; i-- > 0;) backward_node(static_cast<Ref>(i));
}

void GradTape::backward_node(Ref id) {
    Node& n = nodes_[id];
    const NumArray& go = n.grad;
    switch (n.op) {
        case Op::Leaf:
        case Op::Const:
            return;
        case Op::MatMul: {
            const NumArray& A = v(n.parents[0]);
            const NumArray& B = v(n.parents[1]);
            NumArray& ga = g(n.parents[0]);
            NumArray& gb = g(n.parents[1]);
            for (std::size_t r = 0; r < A.shape[0]; ++r)
                for (std::size_t c = 0; c < B.shape[1]; ++c) {
                    double gv = go.at(r, c);
                    if (gv == 0.0) continue;
                    for (std::size_t k = 0; k < A.shape[1]; ++k) {
                        ga.at(r, k) += gv * B.at(k, c);
                        gb.at(k, c) += gv * A.at(r, k);
                    }
                }
            return;
        }
        case Op::Transpose: {
            NumArray& ga = g(n.parents[0]);
            for (std::size_t r = 0; r < n.value.shape[0]; ++r)
                for (std::size_t c = 0; c < n.value.shape[1]; ++c) ga.at(c, r) += go.at(r, c);
            return;
        }
        case Op::Add: {
            NumArray& ga = g(n.parents[0]);
            NumArray& gb = g(n.parents[1]);
            for (std::size_t i = 0; i < go.numel(); ++i) {
                ga[i] += go[i];
                gb[i] += go[i];
            }
            return;
        }
        case Op::AddRowVec: {
            NumArray& ga = g(n.parents[0]);
            NumArray& gb = g(n.parents[1]);
            for (std::size_t r = 0; r < n.value.shape[0]; ++r)
                for (std::size_t c = 0; c < n.value.shape[1]; ++c) {
                    ga.at(r, c) += go.at(r, c);
                    gb[c] += go.at(r, c);
                }
            return;
        }
        case Op::Mul: {
            const NumArray& A = v(n.parents[0]);
            const NumArray& B = v(n.parents[1]);
            NumArray& ga = g(n.parents[0]);
            NumArray& gb = g(n.parents[1]);
            for (std::size_t i = 0; i < go.numel(); ++i) {
                ga[i] += go[i] * B[i];
                gb[i] += go[i] * A[i];
            }
            return;
        }
        case Op::Scale: {
            NumArray& ga = g(n.parents[0]);
            for (std::size_t i = 0; i < go.numel(); ++i) ga[i] += go[i] * n.scalar;
            return;
        }
        case Op::Relu: {
            NumArray& ga = g(n.parents[0]);
            for (std::size_t i = 0; i < go.numel(); ++i)
                if (n.value[i] > 0.0) ga[i] += go[i];
            return;
        }
        case Op::Sigmoid: {
            NumArray& ga = g(n.parents[0]);
            for (std::size_t i = 0; i < go.numel(); ++i) {
                double s = n.value[i];
                ga[i] += go[i] * s * (1.0 - s);
            }
            return;
        }
        case Op::Tanh: {
            NumArray& ga = g(n.parents[0]);
            for (std::size_t i = 0; i < go.numel(); ++i) {
                double t = n.value[i];
                ga[i] += go[i] * (1.0 - t * t);
            }
            return;
        }
        case Op::SoftmaxRows: {
            NumArray& ga = g(n.parents[0]);
            const std::size_t rows = n.value.rows(), cols = n.value.cols();
            for (std::size_t r = 0; r < rows; ++r) {
                double dot = 0.0;
                for (std::size_t c = 0; c < cols; ++c) dot += go[r * cols + c] * n.value[r * cols + c];
                for (std::size_t c = 0; c < cols; ++c) {
                    double s = n.value[r * cols + c];
                    ga[r * cols + c] += s * (go[r * cols + c] - dot);
                }
            }
            return;
        }
        case Op::Conv2d: {
            const NumArray& in = v(n.parents[0]);
            const NumArray& k = v(n.parents[1]);
            NumArray& gin = g(n.parents[0]);
            NumArray& gk = g(n.parents[1]);
            NumArray& gb = g(n.parents[2]);
            const std::size_t oh = n.value.shape[0], ow = n.value.shape[1];
            for (std::size_t x = 0; x < oh; ++x)
                for (std::size_t y = 0; y < ow; ++y) {
                    if (n.value.at(x, y) <= 0.0) continue;  // ReLU gate
                    double gz = go.at(x, y);
                    if (gz == 0.0) continue;
                    gb[0] += gz;
                    for (std::size_t a = 0; a < 3; ++a)
                        for (std::size_t b = 0; b < 3; ++b) {
                            gk.at(a, b) += gz * in.at(x + a, y + b);
                            gin.at(x + a, y + b) += gz * k.at(a, b);
                        }
                }
            return;
        }
        case Op::GlobalMaxPool:
            g(n.parents[0])[n.aux[0]] += go[0];
            return;
        case Op::GatherRows: {
            NumArray& gt = g(n.parents[0]);
            const std::size_t c = n.value.shape[1];
            for (std::size_t i = 0; i < n.aux.size(); ++i)
                for (std::size_t j = 0; j < c; ++j) gt.at(n.aux[i], j) += go.at(i, j);
            return;
        }
        case Op::ConcatCols: {
            NumArray& ga = g(n.parents[0]);
            NumArray& gb = g(n.parents[1]);
            const std::size_t ca = ga.shape[1];
            for (std::size_t r = 0; r < n.value.shape[0]; ++r) {
                for (std::size_t c = 0; c < ca; ++c) ga.at(r, c) += go.at(r, c);
                for (std::size_t c = 0; c < gb.shape[1]; ++c) gb.at(r, c) += go.at(r, ca + c);
            }
            return;
        }
        case Op::StackRows: {
            const std::size_t c = n.value.shape[1];
            for (std::size_t i = 0; i < n.parents.size(); ++i) {
                NumArray& gr = g(n.parents[i]);
                for (std::size_t j = 0; j < c; ++j) gr[j] += go.at(i, j);
            }
            return;
        }
        case Op::TakeRow: {
            NumArray& ga = g(n.parents[0]);
            const std::size_t r = n.aux[0];
            for (std::size_t j = 0; j < n.value.shape[1]; ++j) ga.at(r, j) += go.at(0, j);
            return;
        }
        case Op::CrossEntropy: {
            const NumArray& P = v(n.parents[0]);
            NumArray& gp = g(n.parents[0]);
            std::size_t t = n.aux[0];
            if (P[t] > kLogClamp) gp[t] += -go[0] / P[t];
            return;
        }
        case Op::MeanCeRows: {
            const NumArray& P = v(n.parents[0]);
            NumArray& gp = g(n.parents[0]);
            const std::size_t cols = P.shape[1];
            for (std::size_t r = 0; r < n.aux.size(); ++r) {
                double p = P.at(r, n.aux[r]);
                if (p > kLogClamp) gp[r * cols + n.aux[r]] += -go[0] * n.aux_data[r] / p;
            }
            return;
        }
    }
}

}  // namespace propnet::nncore
