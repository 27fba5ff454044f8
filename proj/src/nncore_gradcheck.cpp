#include "propnet/nncore/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace propnet::nncore {

GradCheckReport grad_check(const LossFn& loss_fn, const GradsFn& grads_fn, const std::vector<NumArray>& params,
                           double epsilon) {
    const double base = loss_fn(params);
    if (!std::isfinite(base)) throw_error(ErrorKind::Numeric, "grad_check: non-finite loss at base point");

    const std::vector<NumArray> analytic = grads_fn(params);
    if (analytic.size() != params.size())
        throw_error(ErrorKind::Dimension, "grad_check: gradient count does not match parameter count");

    GradCheckReport report;
    std::vector<NumArray> work = params;
    for (std::size_t p = 0; p < params.size(); ++p) {
        require_same_shape(params[p], analytic[p], "grad_check");
        for (std::size_t k = 0; k < params[p].numel(); ++k) {
            const double orig = work[p][k];
            work[p][k] = orig + epsilon;
            const double up = loss_fn(work);
            work[p][k] = orig - epsilon;
            const double down = loss_fn(work);
            work[p][k] = orig;
            if (!std::isfinite(up) || !std::isfinite(down))
                throw_error(ErrorKind::Numeric, "grad_check: non-finite loss during perturbation");
            const double cd = (up - down) / (2.0 * epsilon);
            const double a = analytic[p][k];
            const double rel = std::abs(a - cd) / std::max({std::abs(a), std::abs(cd), 1e-8});
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_param = p;
                report.worst_entry = k;
            }
        }
    }
    return report;
}

GradCheckReport grad_check(const TapeBuildFn& build, const std::vector<NumArray>& params, double epsilon) {
    auto loss_fn = [&build](const std::vector<NumArray>& p) {
        GradTape tape;
        std::vector<GradTape::Ref> leaves;
        leaves.reserve(p.size());
        for (const NumArray& a : p) leaves.push_back(tape.input(a));
        GradTape::Ref loss = build(tape, leaves);
        return tape.value(loss)[0];
    };
    auto grads_fn = [&build](const std::vector<NumArray>& p) {
        GradTape tape;
        std::vector<GradTape::Ref> leaves;
        leaves.reserve(p.size());
        for (const NumArray& a : p) leaves.push_back(tape.input(a));
        GradTape::Ref loss = build(tape, leaves);
        tape.backward(loss);
        std::vector<NumArray> grads;
        grads.reserve(p.size());
        for (GradTape::Ref r : leaves) grads.push_back(tape.grad(r));
        return grads;
    };
    return grad_check(loss_fn, grads_fn, params, epsilon);
}

}  // namespace propnet::nncore
