#ifndef PROPNET_NNCORE_OPTIMIZER_HPP
#define PROPNET_NNCORE_OPTIMIZER_HPP

#include <string>
#include <vector>

#include "propnet/nncore/array.hpp"

namespace propnet::nncore {

// Adam state for one parameter group. Moment arrays are shape-congruent to
// their parameters; the step counter is shared by the group.
struct OptimizerState {
    std::vector<NumArray> m;  // first moments
    std::vector<NumArray> v;  // second moments
    std::uint64_t step = 0;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static OptimizerState for_params(const std::vector<NumArray>& params, double lr = 1e-3);
};

// One bias-corrected Adam update, in place. Deterministic given identical inputs.
void adam_step(std::vector<NumArray>& params, const std::vector<NumArray>& grads, OptimizerState& state);

// Named parameter set with parallel gradient buffers. Insertion order is the
// canonical order used by the optimizer and the checkpoint writer.
class ParamStore {
  public:
    std::size_t add(const std::string& name, NumArray value) {
        names_.push_back(name);
        params_.push_back(std::move(value));
        grads_.push_back(NumArray::zeros(params_.back().shape));
        return params_.size() - 1;
    }

    std::size_t size() const { return params_.size(); }
    const std::string& name(std::size_t i) const { return names_[i]; }
    NumArray& param(std::size_t i) { return params_[i]; }
    const NumArray& param(std::size_t i) const { return params_[i]; }
    NumArray& grad(std::size_t i) { return grads_[i]; }

    std::vector<NumArray>& params() { return params_; }
    const std::vector<NumArray>& params() const { return params_; }
    std::vector<NumArray>& grads() { return grads_; }

    void zero_grads() {
        for (NumArray& g : grads_)
            for (double& x : g.data) x = 0.0;
    }

    void accumulate_grad(std::size_t i, const NumArray& g, double scale = 1.0) {
        require_same_shape(grads_[i], g, "accumulate_grad");
        for (std::size_t k = 0; k < g.numel(); ++k) grads_[i][k] += scale * g[k];
    }

    std::size_t index_of(const std::string& name) const {
        for (std::size_t i = 0; i < names_.size(); ++i)
            if (names_[i] == name) return i;
        throw_error(ErrorKind::Checkpoint, "parameter not found: " + name);
    }

  private:
    std::vector<std::string> names_;
    std::vector<NumArray> params_;
    std::vector<NumArray> grads_;
};

}  // namespace propnet::nncore

#endif  // PROPNET_NNCORE_OPTIMIZER_HPP
