#ifndef PROPNET_NNCORE_GRADCHECK_HPP
#define PROPNET_NNCORE_GRADCHECK_HPP

#include <functional>
#include <vector>

#include "propnet/nncore/tape.hpp"

namespace propnet::nncore {

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_param = 0;
    std::size_t worst_entry = 0;
};

using LossFn = std::function<double(const std::vector<NumArray>&)>;
using GradsFn = std::function<std::vector<NumArray>(const std::vector<NumArray>&)>;

// Builds the computation on the given tape from parameter leaves and returns
// the scalar loss ref. The same builder serves forward-only evaluation and
// the analytic backward pass.
using TapeBuildFn = std::function<GradTape::Ref(GradTape&, const std::vector<GradTape::Ref>&)>;

// Central-difference check: max over every parameter entry of
// |analytic - cd| / max(|analytic|, |cd|, 1e-8).
GradCheckReport grad_check(const LossFn& loss_fn, const GradsFn& grads_fn, const std::vector<NumArray>& params,
                           double epsilon = 1e-5);

// Convenience wrapper deriving both callables from a tape builder.
GradCheckReport grad_check(const TapeBuildFn& build, const std::vector<NumArray>& params, double epsilon = 1e-5);

}  // namespace propnet::nncore

#endif  // PROPNET_NNCORE_GRADCHECK_HPP
