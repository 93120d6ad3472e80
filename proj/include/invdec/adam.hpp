#ifndef INVDEC_ADAM_HPP
#define INVDEC_ADAM_HPP

#include <cmath>

#include "invdec/model.hpp"

namespace invdec {

template <typename Real>
struct AdamState {
    Model<Real> m;  // first moments, shaped like the parameters
    Model<Real> v;  // second moments
    long step = 0;
    Real beta1 = Real(0.9);
    Real beta2 = Real(0.999);
    Real eps = Real(1e-8);
};

template <typename Real>
AdamState<Real> init_adam(const Model<Real>& model) {
    AdamState<Real> state;
    state.m = zero_clone(model);
    state.v = zero_clone(model);
    return state;
}

template <typename Real>
Real global_grad_norm(Model<Real>& grads) {
    Real sq = 0;
    for (auto& p : collect_params(grads)) sq += p.tensor->squaredNorm();
    return std::sqrt(sq);
}

// Scales all gradients by max_norm / ||g|| when the global L2 norm exceeds
// max_norm.
template <typename Real>
void clip_gradients(Model<Real>& grads, Real max_norm) {
    const Real norm = global_grad_norm(grads);
    if (norm > max_norm) {
        const Real scale = max_norm / norm;
        for (auto& p : collect_params(grads)) *p.tensor *= scale;
    }
}

// Standard bias-corrected Adam update with a constant learning rate.
template <typename Real>
void adam_step(Model<Real>& params, Model<Real>& grads, AdamState<Real>& state,
               Real lr) {
    state.step += 1;
    const Real bc1 = Real(1) - std::pow(state.beta1, static_cast<Real>(state.step));
    const Real bc2 = Real(1) - std::pow(state.beta2, static_cast<Real>(state.step));

    auto ps = collect_params(params);
    auto gs = collect_params(grads);
    auto ms = collect_params(state.m);
    auto vs = collect_params(state.v);
    for (std::size_t i = 0; i < ps.size(); ++i) {
        auto& p = *ps[i].tensor;
        const auto& g = *gs[i].tensor;
        auto& m = *ms[i].tensor;
        auto& v = *vs[i].tensor;
        m = state.beta1 * m + (Real(1) - state.beta1) * g;
        v = (state.beta2 * v.array() + (Real(1) - state.beta2) * g.array().square()).matrix();
        p.array() -= lr * (m.array() / bc1) /
                     ((v.array() / bc2).sqrt() + state.eps);
    }
}

}  // namespace invdec

#endif  // INVDEC_ADAM_HPP
