#ifndef INVDEC_TAPE_HPP
#define INVDEC_TAPE_HPP

#include <Eigen/Core>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace invdec {

template <typename Real>
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

// Define-by-run reverse-mode tape over dense matrices. Values are computed
// eagerly as the graph is built; backward() runs the adjoint sweep. Leaves
// created with param() reference caller-owned storage, so rebuilding the
// graph per sentence pair does not copy the model.
template <typename Real>
class Tape {
  public:
    using M = Mat<Real>;

    struct Var {
        int i = -1;
    };

    void reset() {
        nodes_.clear();
        sum_args_.clear();
    }

    int size() const { return static_cast<int>(nodes_.size()); }

    Var param(const M& external) {
        Node n;
        n.op = Op::kLeaf;
        n.external = &external;
        return push(std::move(n));
    }

    Var constant(M value) {
        Node n;
        n.op = Op::kLeaf;
        n.value = std::move(value);
        return push(std::move(n));
    }

    Var matmul(Var a, Var b) {
        assert(val(a).cols() == val(b).rows());
        Node n;
        n.op = Op::kMatMul;
        n.a = a.i;
        n.b = b.i;
        n.value.noalias() = val(a) * val(b);
        return push(std::move(n));
    }

    Var add(Var a, Var b) { return binary(Op::kAdd, a, b, val(a) + val(b)); }
    Var sub(Var a, Var b) { return binary(Op::kSub, a, b, val(a) - val(b)); }

    Var cmul(Var a, Var b) {
        return binary(Op::kCMul, a, b, val(a).cwiseProduct(val(b)));
    }

    // Elementwise c0 * x + c1.
    Var affine(Var x, Real c0, Real c1) {
        Node n;
        n.op = Op::kAffine;
        n.a = x.i;
        n.c0 = c0;
        n.value = (val(x).array() * c0 + c1).matrix();
        return push(std::move(n));
    }

    Var sigmoid(Var x) {
        Node n;
        n.op = Op::kSigmoid;
        n.a = x.i;
        n.value = val(x).unaryExpr([](Real v) {
            if (v >= Real(0)) return Real(1) / (Real(1) + std::exp(-v));
            const Real e = std::exp(v);
            return e / (Real(1) + e);
        });
        return push(std::move(n));
    }

    Var tanh(Var x) {
        Node n;
        n.op = Op::kTanh;
        n.a = x.i;
        n.value = val(x).array().tanh().matrix();
        return push(std::move(n));
    }

    Var relu(Var x) {
        Node n;
        n.op = Op::kRelu;
        n.a = x.i;
        n.value = val(x).cwiseMax(Real(0));
        return push(std::move(n));
    }

    Var exp(Var x) {
        Node n;
        n.op = Op::kExp;
        n.a = x.i;
        n.value = val(x).array().exp().matrix();
        return push(std::move(n));
    }

    Var log_sigmoid(Var x) {
        Node n;
        n.op = Op::kLogSigmoid;
        n.a = x.i;
        n.value = val(x).unaryExpr([](Real v) {
            const Real m = -v > Real(0) ? -v : Real(0);
            return -(m + std::log1p(std::exp(-std::abs(v))));
        });
        return push(std::move(n));
    }

    Var concat_rows(Var a, Var b) {
        assert(val(a).cols() == val(b).cols());
        Node n;
        n.op = Op::kConcatRows;
        n.a = a.i;
        n.b = b.i;
        n.value.resize(val(a).rows() + val(b).rows(), val(a).cols());
        n.value.topRows(val(a).rows()) = val(a);
        n.value.bottomRows(val(b).rows()) = val(b);
        return push(std::move(n));
    }

    Var rows(Var x, int begin, int count) {
        assert(begin >= 0 && begin + count <= val(x).rows());
        Node n;
        n.op = Op::kRows;
        n.a = x.i;
        n.i0 = begin;
        n.i1 = count;
        n.value = val(x).middleRows(begin, count);
        return push(std::move(n));
    }

    // Inner product of two column vectors; result is 1x1.
    Var dot(Var a, Var b) {
        assert(val(a).cols() == 1 && val(b).cols() == 1);
        assert(val(a).rows() == val(b).rows());
        Node n;
        n.op = Op::kDot;
        n.a = a.i;
        n.b = b.i;
        n.value.resize(1, 1);
        n.value(0, 0) = val(a).col(0).dot(val(b).col(0));
        return push(std::move(n));
    }

    // Sum of 1x1 nodes.
    Var sum(std::span<const Var> terms) {
        Node n;
        n.op = Op::kSum;
        n.i0 = static_cast<int>(sum_args_.size());
        n.i1 = static_cast<int>(terms.size());
        Real total = 0;
        for (Var t : terms) {
            assert(val(t).size() == 1);
            sum_args_.push_back(t.i);
            total += val(t)(0, 0);
        }
        n.value.resize(1, 1);
        n.value(0, 0) = total;
        return push(std::move(n));
    }

    const M& value(Var v) const { return val(v); }

    // Valid after backward(); zero-sized if the node did not influence the loss.
    const M& grad(Var v) const { return nodes_[static_cast<std::size_t>(v.i)].grad; }

    void backward(Var loss) {
        assert(val(loss).size() == 1);
        for (auto& n : nodes_) n.grad.resize(0, 0);
        ensure_grad(loss.i);
        nodes_[static_cast<std::size_t>(loss.i)].grad(0, 0) = Real(1);

        for (int i = loss.i; i >= 0; --i) {
            Node& n = nodes_[static_cast<std::size_t>(i)];
            if (n.grad.size() == 0) continue;  // unreachable from the loss
            const M& g = n.grad;
            switch (n.op) {
                case Op::kLeaf:
                    break;
                case Op::kMatMul:
                    ensure_grad(n.a).noalias() += g * val_i(n.b).transpose();
                    ensure_grad(n.b).noalias() += val_i(n.a).transpose() * g;
                    break;
                case Op::kAdd:
                    ensure_grad(n.a) += g;
                    ensure_grad(n.b) += g;
                    break;
                case Op::kSub:
                    ensure_grad(n.a) += g;
                    ensure_grad(n.b) -= g;
                    break;
                case Op::kCMul:
                    ensure_grad(n.a) += g.cwiseProduct(val_i(n.b));
                    ensure_grad(n.b) += g.cwiseProduct(val_i(n.a));
                    break;
                case Op::kAffine:
                    ensure_grad(n.a) += g * n.c0;
                    break;
                case Op::kSigmoid:
                    ensure_grad(n.a).array() +=
                        g.array() * n.value.array() * (Real(1) - n.value.array());
                    break;
                case Op::kTanh:
                    ensure_grad(n.a).array() +=
                        g.array() * (Real(1) - n.value.array().square());
                    break;
                case Op::kRelu:
                    ensure_grad(n.a).array() +=
                        g.array() * (val_i(n.a).array() > Real(0)).template cast<Real>();
                    break;
                case Op::kExp:
                    ensure_grad(n.a).array() += g.array() * n.value.array();
                    break;
                case Op::kLogSigmoid:
                    // d/dx log sigma(x) = sigma(-x) = -expm1(log sigma(x)).
                    ensure_grad(n.a).array() +=
                        g.array() * n.value.unaryExpr([](Real y) {
                                         return -std::expm1(y);
                                     }).array();
                    break;
                case Op::kConcatRows: {
                    const auto ra = val_i(n.a).rows();
                    const auto rb = val_i(n.b).rows();
                    ensure_grad(n.a) += g.topRows(ra);
                    ensure_grad(n.b) += g.bottomRows(rb);
                    break;
                }
                case Op::kRows:
                    ensure_grad(n.a).middleRows(n.i0, n.i1) += g;
                    break;
                case Op::kDot: {
                    const Real s = g(0, 0);
                    ensure_grad(n.a) += s * val_i(n.b);
                    ensure_grad(n.b) += s * val_i(n.a);
                    break;
                }
                case Op::kSum:
                    for (int j = 0; j < n.i1; ++j)
                        ensure_grad(sum_args_[static_cast<std::size_t>(n.i0 + j)]) += g;
                    break;
            }
        }
    }

  private:
    enum class Op : std::uint8_t {
        kLeaf,
        kMatMul,
        kAdd,
        kSub,
        kCMul,
        kAffine,
        kSigmoid,
        kTanh,
        kRelu,
        kExp,
        kLogSigmoid,
        kConcatRows,
        kRows,
        kDot,
        kSum,
    };

    struct Node {
        Op op = Op::kLeaf;
        int a = -1, b = -1;
        int i0 = 0, i1 = 0;
        Real c0 = 0;
        const M* external = nullptr;
        M value;
        M grad;
    };

    Var push(Node&& n) {
        nodes_.push_back(std::move(n));
        return Var{static_cast<int>(nodes_.size()) - 1};
    }

    Var binary(Op op, Var a, Var b, M value) {
        assert(val(a).rows() == val(b).rows() && val(a).cols() == val(b).cols());
        Node n;
        n.op = op;
        n.a = a.i;
        n.b = b.i;
        n.value = std::move(value);
        return push(std::move(n));
    }

    const M& val(Var v) const { return val_i(v.i); }

    const M& val_i(int i) const {
        const Node& n = nodes_[static_cast<std::size_t>(i)];
        return n.external ? *n.external : n.value;
    }

    M& ensure_grad(int i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.grad.size() == 0) n.grad.setZero(val_i(i).rows(), val_i(i).cols());
        return n.grad;
    }

    std::vector<Node> nodes_;
    std::vector<int> sum_args_;
};

template <typename Real>
using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

}  // namespace invdec

#endif  // INVDEC_TAPE_HPP
