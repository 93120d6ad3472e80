#ifndef INVDEC_MODEL_HPP
#define INVDEC_MODEL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "invdec/decoder.hpp"
#include "invdec/gru.hpp"

namespace invdec {

enum class DecoderKind { kLinear, kBijective };

template <typename Real>
struct Model {
    EncoderParams<Real> encoder;
    Decoder<Real> decoder;

    int d() const { return encoder.d; }
    int d_v() const { return encoder.d_v; }
    int d_z() const { return 2 * encoder.d; }
    DecoderKind kind() const {
        return decoder.bijective() ? DecoderKind::kBijective : DecoderKind::kLinear;
    }
};

struct ModelDims {
    int d = 16;
    int d_v = 16;
    int coupling_hidden = 0;  // 0 -> d_v
};

template <typename Real>
Model<Real> init_model(const ModelDims& dims, DecoderKind kind, Real beta,
                       std::uint64_t seed) {
    Rng rng(Rng::mix(seed, 0x6d6f64656cULL));
    Model<Real> model;
    model.encoder = init_encoder<Real>(dims.d, dims.d_v, rng);
    model.decoder = init_decoder<Real>(2 * dims.d, dims.d_v,
                                       kind == DecoderKind::kBijective,
                                       dims.coupling_hidden, beta, rng);
    return model;
}

template <typename Real>
struct NamedTensor {
    std::string name;
    Mat<Real>* tensor;
};

// Canonical parameter enumeration. The order is part of the checkpoint
// format and must stay stable.
template <typename Real>
std::vector<NamedTensor<Real>> collect_params(Model<Real>& model) {
    std::vector<NamedTensor<Real>> out;
    auto dir = [&out](const std::string& prefix, GruDirection<Real>& g) {
        out.push_back({prefix + ".w_reset", &g.w_reset});
        out.push_back({prefix + ".w_update", &g.w_update});
        out.push_back({prefix + ".w_cand", &g.w_cand});
        out.push_back({prefix + ".u_reset", &g.u_reset});
        out.push_back({prefix + ".u_update", &g.u_update});
        out.push_back({prefix + ".u_cand", &g.u_cand});
        out.push_back({prefix + ".b_reset", &g.b_reset});
        out.push_back({prefix + ".b_update", &g.b_update});
        out.push_back({prefix + ".b_cand", &g.b_cand});
    };
    dir("enc.fwd", model.encoder.fwd);
    dir("enc.bwd", model.encoder.bwd);
    out.push_back({"dec.w", &model.decoder.linear.w});
    out.push_back({"dec.b", &model.decoder.linear.b});
    for (std::size_t k = 0; k < model.decoder.couplings.size(); ++k) {
        auto& layer = model.decoder.couplings[k];
        const std::string p = "dec.coupling" + std::to_string(k);
        out.push_back({p + ".s.w1", &layer.s.w1});
        out.push_back({p + ".s.b1", &layer.s.b1});
        out.push_back({p + ".s.w2", &layer.s.w2});
        out.push_back({p + ".s.b2", &layer.s.b2});
        out.push_back({p + ".t.w1", &layer.t.w1});
        out.push_back({p + ".t.b1", &layer.t.b1});
        out.push_back({p + ".t.w2", &layer.t.w2});
        out.push_back({p + ".t.b2", &layer.t.b2});
    }
    return out;
}

template <typename Real>
std::size_t parameter_count(Model<Real>& model) {
    std::size_t n = 0;
    for (auto& p : collect_params(model)) n += static_cast<std::size_t>(p.tensor->size());
    return n;
}

// Same-shaped model with every tensor zeroed; used for gradients and
// optimizer moments.
template <typename Real>
Model<Real> zero_clone(const Model<Real>& model) {
    Model<Real> clone = model;
    for (auto& p : collect_params(clone)) p.tensor->setZero();
    return clone;
}

template <typename To, typename From>
Model<To> cast_model(const Model<From>& model) {
    Model<To> out;
    out.encoder.d = model.encoder.d;
    out.encoder.d_v = model.encoder.d_v;
    out.decoder.linear.beta = static_cast<To>(model.decoder.linear.beta);
    out.decoder.couplings.resize(model.decoder.couplings.size());
    for (std::size_t k = 0; k < model.decoder.couplings.size(); ++k) {
        out.decoder.couplings[k].dim = model.decoder.couplings[k].dim;
        out.decoder.couplings[k].swap_halves = model.decoder.couplings[k].swap_halves;
    }
    Model<From> src_copy = model;
    auto src = collect_params(src_copy);
    auto dst = collect_params(out);
    for (std::size_t i = 0; i < src.size(); ++i)
        *dst[i].tensor = src[i].tensor->template cast<To>();
    return out;
}

}  // namespace invdec

#endif  // INVDEC_MODEL_HPP
