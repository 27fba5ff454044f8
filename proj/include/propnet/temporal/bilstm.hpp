#ifndef PROPNET_TEMPORAL_BILSTM_HPP
#define PROPNET_TEMPORAL_BILSTM_HPP

#include <vector>

#include "propnet/common.hpp"
#include "propnet/nncore/tape.hpp"

namespace propnet::temporal {

// One gated cell. Gate weights act on the concatenation [x_t, h_prev], so
// every matrix is [(I+H) x H] with an [H] bias. Gate order in the flat
// layout: input, forget, output, candidate.
struct LstmCellParams {
    nncore::NumArray w_input, w_forget, w_output, w_candidate;
    nncore::NumArray b_input, b_forget, b_output, b_candidate;

    std::size_t hidden_dim() const { return w_input.shape[1]; }
    std::size_t input_dim() const { return w_input.shape[0] - hidden_dim(); }

    // uniform [-0.1, 0.1] except the forget bias, which starts at 1.0
    static LstmCellParams init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);

    std::vector<nncore::NumArray> flatten() const;
    static LstmCellParams unflatten(const std::vector<nncore::NumArray>& flat, std::size_t offset = 0);
    static constexpr std::size_t kFlatCount = 8;
};

struct BiLstmParams {
    LstmCellParams forward_cell;
    LstmCellParams backward_cell;

    std::size_t hidden_dim() const { return forward_cell.hidden_dim(); }
    std::size_t input_dim() const { return forward_cell.input_dim(); }

    static BiLstmParams init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);

    std::vector<nncore::NumArray> flatten() const;  // forward cell then backward cell
    static BiLstmParams unflatten(const std::vector<nncore::NumArray>& flat);
    static constexpr std::size_t kFlatCount = 2 * LstmCellParams::kFlatCount;
};

struct LstmState {
    nncore::NumArray h;  // [1 x H]
    nncore::NumArray c;  // [1 x H]

    static LstmState zero(std::size_t hidden_dim) {
        return {nncore::NumArray::zeros({1, hidden_dim}), nncore::NumArray::zeros({1, hidden_dim})};
    }
};

// Standard gated update: i,f,o = sigmoid, g = tanh, c = f*c_prev + i*g,
// h = o * tanh(c). x is [1 x I] (or [I]); state vectors are [1 x H].
LstmState lstm_cell_step(const nncore::NumArray& x, const LstmState& prev, const LstmCellParams& cell);

// Tape version; `cell` refs follow LstmCellParams::flatten() order.
struct TapeLstmState {
    nncore::GradTape::Ref h;
    nncore::GradTape::Ref c;
};
TapeLstmState lstm_cell_step_on_tape(nncore::GradTape& tape, nncore::GradTape::Ref x, const TapeLstmState& prev,
                                     const std::vector<nncore::GradTape::Ref>& cell, std::size_t offset = 0);

struct TemporalEmbedding {
    std::vector<nncore::NumArray> states;  // one [1 x 2H] row per input position
};

// Forward pass left-to-right, backward pass right-to-left, zero initial
// states, h_t = [h^f_t, h^b_t].
TemporalEmbedding bilstm_forward(const std::vector<nncore::NumArray>& inputs, const BiLstmParams& params);

}  // namespace propnet::temporal

#endif  // PROPNET_TEMPORAL_BILSTM_HPP
