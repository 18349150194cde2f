#include "lsseg/value.hpp"

#include <algorithm>
#include <cmath>

namespace lsseg {

namespace {

// Applies fn(a_i, b_i) with scalar broadcast on either side.
template <class F>
Val broadcast(const Val& a, const Val& b, F fn) {
    if (a.scalar && b.scalar) return Val(fn(a.s, b.s));
    if (a.scalar) {
        Grid out(b.g.height, b.g.width);
        for (size_t i = 0; i < out.values.size(); ++i) out.values[i] = fn(a.s, b.g.values[i]);
        return Val(std::move(out));
    }
    if (b.scalar) {
        Grid out(a.g.height, a.g.width);
        for (size_t i = 0; i < out.values.size(); ++i) out.values[i] = fn(a.g.values[i], b.s);
        return Val(std::move(out));
    }
    check_same_shape(a.g, b.g, "elementwise");
    Grid out(a.g.height, a.g.width);
    for (size_t i = 0; i < out.values.size(); ++i) out.values[i] = fn(a.g.values[i], b.g.values[i]);
    return Val(std::move(out));
}

}  // namespace

Val val_add(const Val& a, const Val& b) {
    return broadcast(a, b, [](double x, double y) { return x + y; });
}

Val val_sub(const Val& a, const Val& b) {
    return broadcast(a, b, [](double x, double y) { return x - y; });
}

Val val_mul(const Val& a, const Val& b) {
    return broadcast(a, b, [](double x, double y) { return x * y; });
}

Val val_div_guarded(const Val& a, const Val& b, double guard) {
    return broadcast(a, b, [guard](double x, double y) { return x / (y + guard); });
}

Val val_cmul(const Val& a, double c) {
    if (a.scalar) return Val(a.s * c);
    return Val(scalar_mul(a.g, c));
}

Val val_cadd(const Val& a, double c) {
    if (a.scalar) return Val(a.s + c);
    return Val(scalar_add(a.g, c));
}

Val val_map(const Val& a, double (*fn)(double)) {
    if (a.scalar) return Val(fn(a.s));
    return Val(gmap(a.g, fn));
}

Val val_clamp(const Val& a, double lo, double hi) {
    if (a.scalar) return Val(std::clamp(a.s, lo, hi));
    Grid out(a.g.height, a.g.width);
    for (size_t i = 0; i < out.values.size(); ++i) out.values[i] = std::clamp(a.g.values[i], lo, hi);
    return Val(std::move(out));
}

Val val_sum(const Val& a) {
    if (a.scalar) return a;
    return Val(gsum(a.g));
}

Val val_mean(const Val& a) {
    if (a.scalar) return a;
    return Val(gmean(a.g));
}

double fn_exp(double x) { return std::exp(x); }
double fn_log(double x) { return std::log(x); }
double fn_tanh(double x) { return std::tanh(x); }
double fn_relu(double x) { return x > 0.0 ? x : 0.0; }
double fn_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double fn_arctan(double x) { return std::atan(x); }
double fn_sqrt(double x) { return std::sqrt(x); }
double fn_abs(double x) { return std::fabs(x); }

}  // namespace lsseg
