#ifndef INVDEC_DECODER_HPP
#define INVDEC_DECODER_HPP

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "invdec/errors.hpp"
#include "invdec/gru.hpp"
#include "invdec/rng.hpp"
#include "invdec/tape.hpp"

namespace invdec {

// Linear projection x = Wz + b whose rows are driven toward orthonormality
// so that W^T acts as the inverse projection at test time.
template <typename Real>
struct LinearDecoder {
    Mat<Real> w;  // d_v x d_z
    Mat<Real> b;  // d_v x 1
    Real beta = Real(0.01);
};

// One-hidden-layer net with rectifier hidden units and linear outputs.
template <typename Real>
struct CouplingNet {
    Mat<Real> w1, b1;  // hidden x in, hidden x 1
    Mat<Real> w2, b2;  // out x hidden, out x 1
};

// Splits R^{d_v} into the first ceil(d_v/2) coordinates and the rest. The
// pass-through half alternates between consecutive layers so that four
// layers mix every input unit into both output halves.
template <typename Real>
struct CouplingLayer {
    CouplingNet<Real> s;  // log-scale net
    CouplingNet<Real> t;  // shift net
    int dim = 0;
    bool swap_halves = false;

    int split() const { return (dim + 1) / 2; }
    int pass_size() const { return swap_halves ? dim - split() : split(); }
    int trans_size() const { return dim - pass_size(); }
    int pass_begin() const { return swap_halves ? split() : 0; }
    int trans_begin() const { return swap_halves ? 0 : split(); }
};

// Full decoding function: the orthonormal-regularized projection followed by
// an optional stack of affine coupling layers. An empty stack is the plain
// linear decoder.
template <typename Real>
struct Decoder {
    LinearDecoder<Real> linear;
    std::vector<CouplingLayer<Real>> couplings;

    bool bijective() const { return !couplings.empty(); }
    int d_v() const { return static_cast<int>(linear.w.rows()); }
    int d_z() const { return static_cast<int>(linear.w.cols()); }
};

template <typename Real>
Mat<Real> coupling_net_apply(const CouplingNet<Real>& net, const Mat<Real>& x) {
    return net.w2 * (net.w1 * x + net.b1).cwiseMax(Real(0)) + net.b2;
}

template <typename Real>
Mat<Real> linear_forward(const LinearDecoder<Real>& dec, const Mat<Real>& z) {
    return dec.w * z + dec.b;
}

template <typename Real>
Mat<Real> linear_inverse(const LinearDecoder<Real>& dec, const Mat<Real>& x) {
    return dec.w.transpose() * (x - dec.b);
}

template <typename Real>
Mat<Real> coupling_apply(const CouplingLayer<Real>& layer, const Mat<Real>& x) {
    Mat<Real> y = x;
    const Mat<Real> pass = x.middleRows(layer.pass_begin(), layer.pass_size());
    const Mat<Real> trans = x.middleRows(layer.trans_begin(), layer.trans_size());
    y.middleRows(layer.trans_begin(), layer.trans_size()) =
        trans.cwiseProduct(coupling_net_apply(layer.s, pass).array().exp().matrix()) +
        coupling_net_apply(layer.t, pass);
    return y;
}

template <typename Real>
Mat<Real> coupling_invert(const CouplingLayer<Real>& layer, const Mat<Real>& y) {
    Mat<Real> x = y;
    const Mat<Real> pass = y.middleRows(layer.pass_begin(), layer.pass_size());
    const Mat<Real> trans = y.middleRows(layer.trans_begin(), layer.trans_size());
    x.middleRows(layer.trans_begin(), layer.trans_size()) =
        (trans - coupling_net_apply(layer.t, pass))
            .cwiseProduct((-coupling_net_apply(layer.s, pass)).array().exp().matrix());
    return x;
}

template <typename Real>
Mat<Real> decoder_forward(const Decoder<Real>& dec, const Mat<Real>& z) {
    Mat<Real> x = linear_forward(dec.linear, z);
    for (const auto& layer : dec.couplings) x = coupling_apply(layer, x);
    return x;
}

template <typename Real>
Mat<Real> decoder_inverse(const Decoder<Real>& dec, const Mat<Real>& x) {
    Mat<Real> h = x;
    for (auto it = dec.couplings.rbegin(); it != dec.couplings.rend(); ++it)
        h = coupling_invert(*it, h);
    return linear_inverse(dec.linear, h);
}

// Parseval retraction W := (1+beta) W - beta (W W^T) W, applied after each
// optimizer step. Orthonormal W is a fixed point.
template <typename Real>
void parseval_update(Mat<Real>& w, Real beta) {
    w = ((Real(1) + beta) * w - beta * (w * w.transpose()) * w).eval();
}

// ||W W^T - I||_F, or ||W^T W - I||_F when W has more rows than columns.
template <typename Real>
Real orthonormality_error(const Mat<Real>& w) {
    if (w.rows() <= w.cols()) {
        return (w * w.transpose() - Mat<Real>::Identity(w.rows(), w.rows())).norm();
    }
    return (w.transpose() * w - Mat<Real>::Identity(w.cols(), w.cols())).norm();
}

// The output layer starts at zero so every coupling layer is the identity at
// step 0. Nonzero random s nets make exp(-s) amplification cascade through
// the inverse stack on out-of-image inputs, which can overflow before any
// training has pulled s into a sane range.
template <typename Real>
CouplingNet<Real> init_coupling_net(int in, int hidden, int out, Rng& rng) {
    CouplingNet<Real> net;
    const Real bound1 = std::sqrt(Real(6) / static_cast<Real>(in + hidden));
    net.w1 = uniform_init<Real>(hidden, in, bound1, rng);
    net.b1 = Mat<Real>::Zero(hidden, 1);
    net.w2 = Mat<Real>::Zero(out, hidden);
    net.b2 = Mat<Real>::Zero(out, 1);
    return net;
}

// W starts with orthonormal rows so the invertibility invariant holds
// approximately from step 0; b starts at zero.
template <typename Real>
Decoder<Real> init_decoder(int d_z, int d_v, bool bijective, int coupling_hidden,
                           Real beta, Rng& rng) {
    Decoder<Real> dec;
    dec.linear.w = orthogonal_init<Real>(d_v, d_z, rng);
    dec.linear.b = Mat<Real>::Zero(d_v, 1);
    dec.linear.beta = beta;
    if (bijective) {
        if (coupling_hidden <= 0) coupling_hidden = d_v;
        dec.couplings.resize(4);
        for (int k = 0; k < 4; ++k) {
            CouplingLayer<Real>& layer = dec.couplings[static_cast<std::size_t>(k)];
            layer.dim = d_v;
            layer.swap_halves = (k % 2) == 1;
            layer.s = init_coupling_net<Real>(layer.pass_size(), coupling_hidden,
                                              layer.trans_size(), rng);
            layer.t = init_coupling_net<Real>(layer.pass_size(), coupling_hidden,
                                              layer.trans_size(), rng);
        }
    }
    return dec;
}

}  // namespace invdec

#endif  // INVDEC_DECODER_HPP
