#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "mlad/numerics.hpp"

namespace mlad {

struct GradCheckReport {
    double max_rel_error = 0.0;
    Eigen::Index worst_coordinate = 0;
    double epsilon = 0.0;
};

// Compares an analytic gradient against central differences of `loss_fn`,
// coordinate by coordinate. Relative error uses max(|a|, |b|, 1e-8) as the
// denominator.
template <typename LossFn>
GradCheckReport finite_diff_check(LossFn&& loss_fn, const Vector& analytic_grad,
                                  const Vector& params, double epsilon) {
    if (!(epsilon > 0.0)) throw DataError("finite_diff_check: epsilon must be positive");
    if (analytic_grad.size() != params.size()) {
        throw DataError("finite_diff_check: gradient/parameter size mismatch");
    }
    GradCheckReport report;
    report.epsilon = epsilon;
    Vector p = params;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        const double saved = p[k];
        p[k] = saved + epsilon;
        const double up = loss_fn(static_cast<const Vector&>(p));
        p[k] = saved - epsilon;
        const double down = loss_fn(static_cast<const Vector&>(p));
        p[k] = saved;
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw NumericError("finite_diff_check: non-finite loss at coordinate " +
                               std::to_string(k));
        }
        const double numeric = (up - down) / (2.0 * epsilon);
        const double analytic = analytic_grad[k];
        const double denom =
            std::max({std::abs(numeric), std::abs(analytic), 1e-8});
        const double rel = std::abs(numeric - analytic) / denom;
        if (rel > report.max_rel_error) {
            report.max_rel_error = rel;
            report.worst_coordinate = k;
        }
    }
    return report;
}

}  // namespace mlad
