#ifndef PROPNET_NNCORE_TAPE_HPP
#define PROPNET_NNCORE_TAPE_HPP

#include <cstdint>
#include <vector>

#include "propnet/nncore/array.hpp"

namespace propnet::nncore {

// Reverse-mode tape over a fixed op vocabulary. Nodes are appended in forward
// order; backward() replays them in exact reverse order, accumulating into
// per-node gradient buffers. Values are stored by value, so a tape owns its
// whole computation.
class GradTape {
  public:
    using Ref = std::uint32_t;

    // Leaf that participates in gradients.
    Ref input(NumArray value);
    // Leaf excluded from gradient accumulation (masks, positional encodings, data).
    Ref constant(NumArray value);

    const NumArray& value(Ref r) const { return nodes_[r].value; }
    const NumArray& grad(Ref r) const { return nodes_[r].grad; }
    std::size_t size() const { return nodes_.size(); }

    Ref matmul(Ref a, Ref b);
    Ref transpose(Ref a);
    Ref add(Ref a, Ref b);          // same shape
    Ref add_rowvec(Ref a, Ref b);   // [n x o] + [o]
    Ref mul(Ref a, Ref b);          // elementwise
    Ref scale(Ref a, double c);
    Ref relu(Ref a);
    Ref sigmoid(Ref a);
    Ref tanh(Ref a);
    Ref softmax_rows(Ref a);
    Ref conv2d(Ref in, Ref kernel, Ref bias);  // 3x3 valid conv + ReLU; bias is [1]
    Ref global_max_pool(Ref a);                // -> [1]
    Ref gather_rows(Ref table, std::vector<std::size_t> indices);
    Ref concat_cols(Ref a, Ref b);
    Ref stack_rows(const std::vector<Ref>& rows);  // each [c] or [1 x c] -> [n x c]
    Ref take_row(Ref a, std::size_t row);          // -> [1 x c]
    Ref cross_entropy(Ref probs, std::size_t target);  // [c] or [1 x c] -> [1]
    // Weighted mean of per-row cross entropies; weights are normalized internally.
    Ref mean_cross_entropy_rows(Ref probs, std::vector<std::size_t> targets, std::vector<double> weights);

    // Seeds d(loss)/d(loss) = 1 and propagates. loss must be a single element.
    void backward(Ref loss);

  private:
    enum class Op : std::uint8_t {
        Leaf,
        Const,
        MatMul,
        Transpose,
        Add,
        AddRowVec,
        Mul,
        Scale,
        Relu,
        Sigmoid,
        Tanh,
        SoftmaxRows,
        Conv2d,
        GlobalMaxPool,
        GatherRows,
        ConcatCols,
        StackRows,
        TakeRow,
        CrossEntropy,
        MeanCeRows,
    };

    struct Node {
        Op op;
        NumArray value;
        NumArray grad;
        std::vector<Ref> parents;
        std::vector<std::size_t> aux;     // indices: argmax, gather rows, targets, row id
        std::vector<double> aux_data;     // normalized weights for MeanCeRows
        double scalar = 0.0;              // scale factor
    };

    Ref push(Op op, NumArray value, std::vector<Ref> parents, std::vector<std::size_t> aux = {},
             std::vector<double> aux_data = {}, double scalar = 0.0);
    void backward_node(Ref id);
    NumArray& g(Ref r) { return nodes_[r].grad; }
    const NumArray& v(Ref r) const { return nodes_[r].value; }

    std::vector<Node> nodes_;
};

}  // namespace propnet::nncore

#endif  // PROPNET_NNCORE_TAPE_HPP
