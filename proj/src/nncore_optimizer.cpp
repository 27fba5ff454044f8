#include "propnet/nncore/optimizer.hpp"

#include <cmath>

namespace propnet::nncore {

OptimizerState OptimizerState::for_params(const std::vector<NumArray>& params, double lr) {
    OptimizerState s;
    s.learning_rate = lr;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const NumArray& p : params) {
        s.m.push_back(NumArray::zeros(p.shape));
        s.v.push_back(NumArray::zeros(p.shape));
    }
    return s;
}

void adam_step(std::vector<NumArray>& params, const std::vector<NumArray>& grads, OptimizerState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw_error(ErrorKind::Dimension, "adam_step: parameter/gradient/state count mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        require_same_shape(params[i], grads[i], "adam_step");
        require_same_shape(params[i], state.m[i], "adam_step");
        NumArray& p = params[i];
        const NumArray& g = grads[i];
        NumArray& m = state.m[i];
        NumArray& v = state.v[i];
        for (std::size_t k = 0; k < p.numel(); ++k) {
            m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
            v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            p[k] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
}

}  // namespace propnet::nncore
