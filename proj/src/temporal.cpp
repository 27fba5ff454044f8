#include "propnet/temporal/bilstm.hpp"

namespace propnet::temporal {

LstmCellParams LstmCellParams::init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
    if (input_dim == 0 || hidden_dim == 0)
        throw_error(ErrorKind::Config, "lstm: input and hidden dims must be positive");
    LstmCellParams p;
    const std::size_t rows = input_dim + hidden_dim;
    p.w_input = nncore::random_uniform({rows, hidden_dim}, -0.1, 0.1, rng);
    p.b_input = nncore::random_uniform({hidden_dim}, -0.1, 0.1, rng);
    p.w_forget = nncore::random_uniform({rows, hidden_dim}, -0.1, 0.1, rng);
    p.b_forget = nncore::NumArray::full({hidden_dim}, 1.0);
    p.w_output = nncore::random_uniform({rows, hidden_dim}, -0.1, 0.1, rng);
    p.b_output = nncore::random_uniform({hidden_dim}, -0.1, 0.1, rng);
    p.w_candidate = nncore::random_uniform({rows, hidden_dim}, -0.1, 0.1, rng);
    p.b_candidate = nncore::random_uniform({hidden_dim}, -0.1, 0.1, rng);
    return p;
}

std::vector<nncore::NumArray> LstmCellParams::flatten() const {
    return {w_input, b_input, w_forget, b_forget, w_output, b_output, w_candidate, b_candidate};
}

LstmCellParams LstmCellParams::unflatten(const std::vector<nncore::NumArray>& flat, std::size_t offset) {
    if (flat.size() < offset + kFlatCount)
        throw_error(ErrorKind::Dimension, "lstm unflatten: not enough parameter arrays");
    LstmCellParams p;
    p.w_input = flat[offset + 0];
    p.b_input = flat[offset + 1];
    p.w_forget = flat[offset + 2];
    p.b_forget = flat[offset + 3];
    p.w_output = flat[offset + 4];
    p.b_output = flat[offset + 5];
    p.w_candidate = flat[offset + 6];
    p.b_candidate = flat[offset + 7];
    return p;
}

BiLstmParams BiLstmParams::init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
    BiLstmParams p;
    p.forward_cell = LstmCellParams::init(input_dim, hidden_dim, rng);
    p.backward_cell = LstmCellParams::init(input_dim, hidden_dim, rng);
    return p;
}

std::vector<nncore::NumArray> BiLstmParams::flatten() const {
    std::vector<nncore::NumArray> flat = forward_cell.flatten();
    for (nncore::NumArray& a : backward_cell.flatten()) flat.push_back(std::move(a));
    return flat;
}

BiLstmParams BiLstmParams::unflatten(const std::vector<nncore::NumArray>& flat) {
    BiLstmParams p;
    p.forward_cell = LstmCellParams::unflatten(flat, 0);
    p.backward_cell = LstmCellParams::unflatten(flat, LstmCellParams::kFlatCount);
    return p;
}

LstmState lstm_cell_step(const nncore::NumArray& x, const LstmState& prev, const LstmCellParams& cell) {
    nncore::GradTape tape;
    auto xr = tape.constant(x.is_matrix() ? x : nncore::NumArray({1, x.shape[0]}, x.data));
    TapeLstmState state{tape.constant(prev.h), tape.constant(prev.c)};
    std::vector<nncore::GradTape::Ref> refs;
    for (const nncore::NumArray& a : cell.flatten()) refs.push_back(tape.constant(a));
    TapeLstmState next = lstm_cell_step_on_tape(tape, xr, state, refs);
    return {tape.value(next.h), tape.value(next.c)};
}

TapeLstmState lstm_cell_step_on_tape(nncore::GradTape& tape, nncore::GradTape::Ref x, const TapeLstmState& prev,
                                     const std::vector<nncore::GradTape::Ref>& cell, std::size_t offset) {
    if (cell.size() < offset + LstmCellParams::kFlatCount)
        throw_error(ErrorKind::Dimension, "lstm cell: not enough parameter refs");
    auto z = tape.concat_cols(x, prev.h);  // [1 x (I+H)]
    auto gate = [&](std::size_t k) { return tape.add_rowvec(tape.matmul(z, cell[offset + 2 * k]), cell[offset + 2 * k + 1]); };
    auto i = tape.sigmoid(gate(0));
    auto f = tape.sigmoid(gate(1));
    auto o = tape.sigmoid(gate(2));
    auto g = tape.tanh(gate(3));
    auto c = tape.add(tape.mul(f, prev.c), tape.mul(i, g));
    auto h = tape.mul(o, tape.tanh(c));
    return {h, c};
}

TemporalEmbedding bilstm_forward(const std::vector<nncore::NumArray>& inputs, const BiLstmParams& params) {
    if (inputs.empty()) throw_error(ErrorKind::Domain, "bilstm_forward: empty sequence");
    const std::size_t hidden = params.hidden_dim();
    const std::size_t length = inputs.size();

    std::vector<nncore::NumArray> fwd(length), bwd(length);
    LstmState state = LstmState::zero(hidden);
    for (std::size_t t = 0; t < length; ++t) {
        state = lstm_cell_step(inputs[t], state, params.forward_cell);
        fwd[t] = state.h;
    }
    state = LstmState::zero(hidden);
    for (std::size_t t = length; t-- > 0;) {
        state = lstm_cell_step(inputs[t], state, params.backward_cell);
        bwd[t] = state.h;
    }

    TemporalEmbedding out;
    out.states.reserve(length);
    for (std::size_t t = 0; t < length; ++t) {
        nncore::NumArray h = nncore::NumArray::zeros({1, 2 * hidden});
        for (std::size_t j = 0; j < hidden; ++j) {
            h.at(0, j) = fwd[t].at(0, j);
            h.at(0, hidden + j) = bwd[t].at(0, j);
        }
        out.states.push_back(std::move(h));
    }
    return out;
}

}  // namespace propnet::temporal
