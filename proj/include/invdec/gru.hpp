#ifndef INVDEC_GRU_HPP
#define INVDEC_GRU_HPP

#include <Eigen/Dense>
#include <cmath>

#include "invdec/errors.hpp"
#include "invdec/numerics.hpp"
#include "invdec/rng.hpp"
#include "invdec/tape.hpp"

namespace invdec {

// One direction of the encoder. All tensors are stored as matrices (biases
// are n x 1) so parameter iteration, Adam and checkpointing treat them
// uniformly.
template <typename Real>
struct GruDirection {
    Mat<Real> w_reset, w_update, w_cand;  // input weights, d x d_v
    Mat<Real> u_reset, u_update, u_cand;  // recurrent weights, d x d
    Mat<Real> b_reset, b_update, b_cand;  // biases, d x 1
};

template <typename Real>
struct EncoderParams {
    GruDirection<Real> fwd;
    GruDirection<Real> bwd;
    int d = 0;
    int d_v = 0;

    int d_z() const { return 2 * d; }
};

// Orthogonal matrix from the QR decomposition of a seeded Gaussian.
template <typename Real>
Mat<Real> orthogonal_init(int rows, int cols, Rng& rng) {
    const int big = std::max(rows, cols);
    const int small = std::min(rows, cols);
    Mat<Real> g(big, small);
    for (Eigen::Index i = 0; i < g.size(); ++i)
        g(i) = static_cast<Real>(rng.gaussian());
    Mat<Real> q = Eigen::HouseholderQR<Mat<Real>>(g).householderQ() *
                  Mat<Real>::Identity(big, small);
    if (rows >= cols) return q;
    return q.transpose();
}

template <typename Real>
Mat<Real> uniform_init(int rows, int cols, Real bound, Rng& rng) {
    Mat<Real> m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i)
        m(i) = static_cast<Real>(rng.uniform(-bound, bound));
    return m;
}

template <typename Real>
GruDirection<Real> init_gru_direction(int d, int d_v, Rng& rng) {
    GruDirection<Real> g;
    const Real bound = std::sqrt(Real(6) / static_cast<Real>(d + d_v));
    g.w_reset = uniform_init<Real>(d, d_v, bound, rng);
    g.w_update = uniform_init<Real>(d, d_v, bound, rng);
    g.w_cand = uniform_init<Real>(d, d_v, bound, rng);
    g.u_reset = orthogonal_init<Real>(d, d, rng);
    g.u_update = orthogonal_init<Real>(d, d, rng);
    g.u_cand = orthogonal_init<Real>(d, d, rng);
    g.b_reset = Mat<Real>::Zero(d, 1);
    g.b_update = Mat<Real>::Zero(d, 1);
    g.b_cand = Mat<Real>::Zero(d, 1);
    return g;
}

template <typename Real>
EncoderParams<Real> init_encoder(int d, int d_v, Rng& rng) {
    EncoderParams<Real> enc;
    enc.d = d;
    enc.d_v = d_v;
    enc.fwd = init_gru_direction<Real>(d, d_v, rng);
    enc.bwd = init_gru_direction<Real>(d, d_v, rng);
    return enc;
}

// Single GRU transition. Reset gate is applied to the previous state before
// the candidate's recurrent matmul.
template <typename Real>
Mat<Real> gru_step(const GruDirection<Real>& p, const Mat<Real>& x_t,
                   const Mat<Real>& h_prev) {
    const Mat<Real> r =
        (p.w_reset * x_t + p.u_reset * h_prev + p.b_reset)
            .unaryExpr([](Real v) { return sigmoid(v); });
    const Mat<Real> u =
        (p.w_update * x_t + p.u_update * h_prev + p.b_update)
            .unaryExpr([](Real v) { return sigmoid(v); });
    const Mat<Real> c =
        (p.w_cand * x_t + p.u_cand * r.cwiseProduct(h_prev) + p.b_cand)
            .array()
            .tanh()
            .matrix();
    return (Mat<Real>::Ones(h_prev.rows(), 1) - u).cwiseProduct(h_prev) +
           u.cwiseProduct(c);
}

// Runs both directions from zero initial states over word vectors given as
// rows (row t = vector of token t). Returns the N x 2d state sequence whose
// row t is [forward state at t, backward state at t].
template <typename Real>
Mat<Real> encode_bidirectional(const EncoderParams<Real>& enc,
                               const Mat<Real>& word_rows) {
    const Eigen::Index n = word_rows.rows();
    if (n == 0) throw DataError("encode_bidirectional: empty sentence");
    const int d = enc.d;
    Mat<Real> states(n, 2 * d);

    Mat<Real> h = Mat<Real>::Zero(d, 1);
    for (Eigen::Index t = 0; t < n; ++t) {
        const Mat<Real> x = word_rows.row(t).transpose();
        h = gru_step(enc.fwd, x, h);
        states.row(t).head(d) = h.col(0);
    }
    h.setZero();
    for (Eigen::Index t = n - 1; t >= 0; --t) {
        const Mat<Real> x = word_rows.row(t).transpose();
        h = gru_step(enc.bwd, x, h);
        states.row(t).tail(d) = h.col(0);
    }
    return states;
}

// Final state each direction reached: forward half of the last row, backward
// half of the first row.
template <typename Real>
Vec<Real> last_state(const Mat<Real>& states) {
    const Eigen::Index d = states.cols() / 2;
    Vec<Real> z(states.cols());
    z.head(d) = states.row(states.rows() - 1).head(d).transpose();
    z.tail(d) = states.row(0).tail(d).transpose();
    return z;
}

enum class Pooling { kMean, kConcat3 };

// mean: elementwise mean over timesteps. concat3: [max; min; mean].
template <typename Real>
Vec<Real> pool(const Mat<Real>& states, Pooling mode) {
    if (states.rows() == 0) throw DataError("pool: empty state sequence");
    const Vec<Real> mean = states.colwise().mean().transpose();
    if (mode == Pooling::kMean) return mean;
    Vec<Real> out(3 * states.cols());
    out.head(states.cols()) = states.colwise().maxCoeff().transpose();
    out.segment(states.cols(), states.cols()) = states.colwise().minCoeff().transpose();
    out.tail(states.cols()) = mean;
    return out;
}

}  // namespace invdec

#endif  // INVDEC_GRU_HPP
