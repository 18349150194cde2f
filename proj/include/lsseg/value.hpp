#pragma once

#include "lsseg/grid.hpp"

namespace lsseg {

/// Scalar-or-grid value. The tape and the eager engine share these kernels so
/// taped forward values match eager results bit for bit.
struct Val {
    bool scalar = true;
    double s = 0.0;
    Grid g;

    Val() = default;
    explicit Val(double v) : scalar(true), s(v) {}
    explicit Val(Grid grid) : scalar(false), g(std::move(grid)) {}

    bool same_shape(const Val& o) const {
        if (scalar != o.scalar) return false;
        return scalar || g.same_shape(o.g);
    }
};

Val val_add(const Val& a, const Val& b);
Val val_sub(const Val& a, const Val& b);
Val val_mul(const Val& a, const Val& b);
Val val_div_guarded(const Val& a, const Val& b, double guard);
Val val_cmul(const Val& a, double c);
Val val_cadd(const Val& a, double c);
Val val_map(const Val& a, double (*fn)(double));
Val val_clamp(const Val& a, double lo, double hi);
Val val_sum(const Val& a);
Val val_mean(const Val& a);

// Scalar transfer functions shared by the taped map ops and eager callers.
double fn_exp(double x);
double fn_log(double x);
double fn_tanh(double x);
double fn_relu(double x);
double fn_sigmoid(double x);
double fn_arctan(double x);
double fn_sqrt(double x);
double fn_abs(double x);

}  // namespace lsseg
