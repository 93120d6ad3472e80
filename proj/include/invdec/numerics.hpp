#ifndef INVDEC_NUMERICS_HPP
#define INVDEC_NUMERICS_HPP

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "invdec/errors.hpp"

namespace invdec {

template <typename Real>
Real softplus(Real x) {
    // max(x,0) + log1p(exp(-|x|)) never overflows.
    const Real a = x > Real(0) ? x : Real(0);
    return a + std::log1p(std::exp(-std::abs(x)));
}

// log sigma(x) = -softplus(-x); finite for any representable x.
template <typename Real>
Real log_sigmoid(Real x) {
    return -softplus(-x);
}

template <typename Real>
Real sigmoid(Real x) {
    if (x >= Real(0)) return Real(1) / (Real(1) + std::exp(-x));
    const Real e = std::exp(x);
    return e / (Real(1) + e);
}

// One parameter tensor entering a finite-difference gradient check.
struct FdParam {
    std::string name;
    Eigen::MatrixXd* value;                // mutated in place during the check
    const Eigen::MatrixXd* analytic_grad;  // gradient produced by the code under test
};

struct FdReport {
    double max_rel_error = 0.0;
    std::string worst_name;
    int worst_index = -1;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

// Central-difference oracle for analytic gradients. `loss` must be a
// deterministic function of the tensors behind `params`; this is verified by
// evaluating it twice up front. Relative error per coordinate is
// |a - n| / max(1e-8, |a| + |n|).
template <typename LossFn>
FdReport finite_difference_check(LossFn&& loss, std::vector<FdParam> params, double eps) {
    const double l0 = loss();
    if (loss() != l0)
        throw NumericError("finite_difference_check: loss function is not deterministic");

    FdReport report;
    for (auto& p : params) {
        Eigen::MatrixXd& value = *p.value;
        for (Eigen::Index i = 0; i < value.size(); ++i) {
            const double saved = value(i);
            value(i) = saved + eps;
            const double up = loss();
            value(i) = saved - eps;
            const double down = loss();
            value(i) = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double analytic = (*p.analytic_grad)(i);
            const double rel = std::abs(analytic - numeric) /
                               std::max(1e-8, std::abs(analytic) + std::abs(numeric));
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_name = p.name;
                report.worst_index = static_cast<int>(i);
                report.worst_analytic = analytic;
                report.worst_numeric = numeric;
            }
        }
    }
    return report;
}

}  // namespace invdec

#endif  // INVDEC_NUMERICS_HPP
