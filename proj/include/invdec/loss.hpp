#ifndef INVDEC_LOSS_HPP
#define INVDEC_LOSS_HPP

#include <type_traits>
#include <vector>

#include "invdec/corpus.hpp"
#include "invdec/model.hpp"
#include "invdec/numerics.hpp"
#include "invdec/tape.hpp"

namespace invdec {

// log sigma(x . v_target) + sum_k log sigma(-x . v_k); the expectation over
// the noise distribution is realized by the K rows of `negative_rows`.
template <typename Real>
Real negative_sampling_score(const Vec<Real>& x, const Vec<Real>& target,
                             const Mat<Real>& negative_rows) {
    Real score = log_sigmoid(x.dot(target));
    for (Eigen::Index k = 0; k < negative_rows.rows(); ++k)
        score += log_sigmoid(-x.dot(negative_rows.row(k).transpose()));
    return score;
}

// K fresh draws for every target word occurrence.
inline std::vector<std::vector<int>> draw_negatives(const NoiseTable& noise,
                                                    std::size_t n_targets, int k,
                                                    Rng& rng) {
    std::vector<std::vector<int>> out(n_targets);
    for (auto& negs : out) negs = sample_negatives(noise, k, rng);
    return out;
}

namespace detail {

template <typename Real>
struct TapeGruDir {
    typename Tape<Real>::Var wr, wu, wc, ur, uu, uc, br, bu, bc;
};

template <typename Real>
struct TapeCoupling {
    typename Tape<Real>::Var sw1, sb1, sw2, sb2, tw1, tb1, tw2, tb2;
};

// Tape handles for every model parameter, in collect_params order.
template <typename Real>
struct TapeModel {
    TapeGruDir<Real> fwd, bwd;
    typename Tape<Real>::Var w, b;
    std::vector<TapeCoupling<Real>> couplings;
};

template <typename Real>
TapeGruDir<Real> register_direction(Tape<Real>& tape, const GruDirection<Real>& g) {
    TapeGruDir<Real> v;
    v.wr = tape.param(g.w_reset);
    v.wu = tape.param(g.w_update);
    v.wc = tape.param(g.w_cand);
    v.ur = tape.param(g.u_reset);
    v.uu = tape.param(g.u_update);
    v.uc = tape.param(g.u_cand);
    v.br = tape.param(g.b_reset);
    v.bu = tape.param(g.b_update);
    v.bc = tape.param(g.b_cand);
    return v;
}

template <typename Real>
TapeModel<Real> register_model(Tape<Real>& tape, const Model<Real>& model) {
    TapeModel<Real> v;
    v.fwd = register_direction(tape, model.encoder.fwd);
    v.bwd = register_direction(tape, model.encoder.bwd);
    v.w = tape.param(model.decoder.linear.w);
    v.b = tape.param(model.decoder.linear.b);
    for (const auto& layer : model.decoder.couplings) {
        TapeCoupling<Real> c;
        c.sw1 = tape.param(layer.s.w1);
        c.sb1 = tape.param(layer.s.b1);
        c.sw2 = tape.param(layer.s.w2);
        c.sb2 = tape.param(layer.s.b2);
        c.tw1 = tape.param(layer.t.w1);
        c.tb1 = tape.param(layer.t.b1);
        c.tw2 = tape.param(layer.t.w2);
        c.tb2 = tape.param(layer.t.b2);
        v.couplings.push_back(c);
    }
    return v;
}

template <typename Real>
typename Tape<Real>::Var tape_gru_step(Tape<Real>& tape, const TapeGruDir<Real>& p,
                                       typename Tape<Real>::Var x,
                                       typename Tape<Real>::Var h) {
    using Var = typename Tape<Real>::Var;
    const Var r = tape.sigmoid(tape.add(tape.add(tape.matmul(p.wr, x), tape.matmul(p.ur, h)), p.br));
    const Var u = tape.sigmoid(tape.add(tape.add(tape.matmul(p.wu, x), tape.matmul(p.uu, h)), p.bu));
    const Var c = tape.tanh(tape.add(
        tape.add(tape.matmul(p.wc, x), tape.matmul(p.uc, tape.cmul(r, h))), p.bc));
    return tape.add(tape.cmul(tape.affine(u, Real(-1), Real(1)), h), tape.cmul(u, c));
}

// z = [forward final state; backward final state], both directions started
// from zero.
template <typename Real>
typename Tape<Real>::Var tape_encode(Tape<Real>& tape, const TapeModel<Real>& mv,
                                     const Mat<Real>& word_rows, int d) {
    using Var = typename Tape<Real>::Var;
    const Eigen::Index n = word_rows.rows();
    std::vector<Var> inputs;
    inputs.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index t = 0; t < n; ++t)
        inputs.push_back(tape.constant(word_rows.row(t).transpose()));

    Var h_fwd = tape.constant(Mat<Real>::Zero(d, 1));
    for (Eigen::Index t = 0; t < n; ++t)
        h_fwd = tape_gru_step(tape, mv.fwd, inputs[static_cast<std::size_t>(t)], h_fwd);
    Var h_bwd = tape.constant(Mat<Real>::Zero(d, 1));
    for (Eigen::Index t = n - 1; t >= 0; --t)
        h_bwd = tape_gru_step(tape, mv.bwd, inputs[static_cast<std::size_t>(t)], h_bwd);
    return tape.concat_rows(h_fwd, h_bwd);
}

template <typename Real>
typename Tape<Real>::Var tape_coupling_net(Tape<Real>& tape,
                                           typename Tape<Real>::Var w1,
                                           typename Tape<Real>::Var b1,
                                           typename Tape<Real>::Var w2,
                                           typename Tape<Real>::Var b2,
                                           typename Tape<Real>::Var x) {
    return tape.add(tape.matmul(w2, tape.relu(tape.add(tape.matmul(w1, x), b1))), b2);
}

template <typename Real>
typename Tape<Real>::Var tape_decoder_forward(Tape<Real>& tape,
                                              const TapeModel<Real>& mv,
                                              const Model<Real>& model,
                                              typename Tape<Real>::Var z) {
    using Var = typename Tape<Real>::Var;
    Var x = tape.add(tape.matmul(mv.w, z), mv.b);
    for (std::size_t k = 0; k < model.decoder.couplings.size(); ++k) {
        const auto& layer = model.decoder.couplings[k];
        const auto& cv = mv.couplings[k];
        const Var pass = tape.rows(x, layer.pass_begin(), layer.pass_size());
        const Var trans = tape.rows(x, layer.trans_begin(), layer.trans_size());
        const Var s_out = tape_coupling_net(tape, cv.sw1, cv.sb1, cv.sw2, cv.sb2, pass);
        const Var t_out = tape_coupling_net(tape, cv.tw1, cv.tb1, cv.tw2, cv.tb2, pass);
        const Var y_trans = tape.add(tape.cmul(trans, tape.exp(s_out)), t_out);
        x = layer.swap_halves ? tape.concat_rows(y_trans, pass)
                              : tape.concat_rows(pass, y_trans);
    }
    return x;
}

template <typename Real>
void accumulate_direction_grads(const Tape<Real>& tape, const TapeGruDir<Real>& v,
                                GruDirection<Real>& g) {
    auto acc = [&tape](Mat<Real>& dst, typename Tape<Real>::Var var) {
        if (tape.grad(var).size() != 0) dst += tape.grad(var);
    };
    acc(g.w_reset, v.wr);
    acc(g.w_update, v.wu);
    acc(g.w_cand, v.wc);
    acc(g.u_reset, v.ur);
    acc(g.u_update, v.uu);
    acc(g.u_cand, v.uc);
    acc(g.b_reset, v.br);
    acc(g.b_update, v.bu);
    acc(g.b_cand, v.bc);
}

}  // namespace detail

// Negated per-word-averaged negative-sampling log-likelihood of the next
// sentence given the current one. Rebuilds the graph on `tape` (reset
// internally, reusable across calls); when `grads` is non-null the parameter
// gradients of this pair are added into it.
template <typename Real>
Real pair_loss_and_grad(const Model<Real>& model, const Mat<Real>& embeddings,
                        const SentencePair& pair,
                        const std::vector<std::vector<int>>& negatives,
                        Tape<Real>& tape, std::type_identity_t<Model<Real>>* grads) {
    using Var = typename Tape<Real>::Var;
    if (pair.next.empty()) throw DataError("pair_loss: empty next sentence");
    if (pair.current.empty()) throw DataError("pair_loss: empty current sentence");

    tape.reset();
    const auto mv = detail::register_model(tape, model);

    Mat<Real> word_rows(pair.current.size(), embeddings.cols());
    for (std::size_t t = 0; t < pair.current.size(); ++t)
        word_rows.row(static_cast<Eigen::Index>(t)) = embeddings.row(pair.current[t]);

    const Var z = detail::tape_encode(tape, mv, word_rows, model.d());
    const Var x = detail::tape_decoder_forward(tape, mv, model, z);

    std::vector<Var> terms;
    terms.reserve(pair.next.size() * (1 + negatives.front().size()));
    for (std::size_t j = 0; j < pair.next.size(); ++j) {
        const Var target = tape.constant(embeddings.row(pair.next[j]).transpose());
        terms.push_back(tape.log_sigmoid(tape.dot(x, target)));
        for (int neg_id : negatives[j]) {
            const Var neg = tape.constant(embeddings.row(neg_id).transpose());
            terms.push_back(
                tape.log_sigmoid(tape.affine(tape.dot(x, neg), Real(-1), Real(0))));
        }
    }
    const Var loss = tape.affine(tape.sum(terms),
                                 Real(-1) / static_cast<Real>(pair.next.size()), Real(0));

    if (grads) {
        tape.backward(loss);
        detail::accumulate_direction_grads(tape, mv.fwd, grads->encoder.fwd);
        detail::accumulate_direction_grads(tape, mv.bwd, grads->encoder.bwd);
        if (tape.grad(mv.w).size() != 0) grads->decoder.linear.w += tape.grad(mv.w);
        if (tape.grad(mv.b).size() != 0) grads->decoder.linear.b += tape.grad(mv.b);
        for (std::size_t k = 0; k < mv.couplings.size(); ++k) {
            const auto& cv = mv.couplings[k];
            auto& layer = grads->decoder.couplings[k];
            auto acc = [&tape](Mat<Real>& dst, Var var) {
                if (tape.grad(var).size() != 0) dst += tape.grad(var);
            };
            acc(layer.s.w1, cv.sw1);
            acc(layer.s.b1, cv.sb1);
            acc(layer.s.w2, cv.sw2);
            acc(layer.s.b2, cv.sb2);
            acc(layer.t.w1, cv.tw1);
            acc(layer.t.b1, cv.tb1);
            acc(layer.t.w2, cv.tw2);
            acc(layer.t.b2, cv.tb2);
        }
    }
    return tape.value(loss)(0, 0);
}

// Loss of one pair with negatives drawn from the noise distribution.
template <typename Real>
Real pair_loss(const Model<Real>& model, const Mat<Real>& embeddings,
               const SentencePair& pair, const NoiseTable& noise, int k, Rng& rng) {
    if (pair.next.empty()) throw DataError("pair_loss: empty next sentence");
    const auto negatives = draw_negatives(noise, pair.next.size(), k, rng);
    Tape<Real> tape;
    return pair_loss_and_grad(model, embeddings, pair, negatives, tape, nullptr);
}

}  // namespace invdec

#endif  // INVDEC_LOSS_HPP
