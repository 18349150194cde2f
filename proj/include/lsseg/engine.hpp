#pragma once

#include "lsseg/tape.hpp"
#include "lsseg/value.hpp"

namespace lsseg {

// The evolution and loss expressions are written once against this engine
// interface and instantiated both eagerly and on the tape, so the two paths
// produce bit-identical forward values.

struct EagerEngine {
    using V = Val;
    V leaf(Grid g) { return Val(std::move(g)); }
    V leaf(double s) { return Val(s); }
    V constant(Grid g) { return Val(std::move(g)); }
    V constant(double s) { return Val(s); }
    V add(const V& a, const V& b) { return val_add(a, b); }
    V sub(const V& a, const V& b) { return val_sub(a, b); }
    V mul(const V& a, const V& b) { return val_mul(a, b); }
    V div_guarded(const V& a, const V& b, double guard = kDivGuard) {
        return val_div_guarded(a, b, guard);
    }
    V cmul(const V& a, double c) { return val_cmul(a, c); }
    V cadd(const V& a, double c) { return val_cadd(a, c); }
    V map_exp(const V& a) { return val_map(a, fn_exp); }
    V map_log(const V& a) { return val_map(a, fn_log); }
    V map_tanh(const V& a) { return val_map(a, fn_tanh); }
    V map_relu(const V& a) { return val_map(a, fn_relu); }
    V map_sigmoid(const V& a) { return val_map(a, fn_sigmoid); }
    V map_arctan(const V& a) { return val_map(a, fn_arctan); }
    V map_sqrt(const V& a) { return val_map(a, fn_sqrt); }
    V map_abs(const V& a) { return val_map(a, fn_abs); }
    V clamp(const V& a, double lo, double hi) { return val_clamp(a, lo, hi); }
    V central_diff(const V& a, Axis axis, PadMode pad) {
        return Val(lsseg::central_diff(a.g, axis, pad));
    }
    V diff_xx(const V& a, PadMode pad) { return Val(lsseg::diff_xx(a.g, pad)); }
    V diff_yy(const V& a, PadMode pad) { return Val(lsseg::diff_yy(a.g, pad)); }
    V diff_xy(const V& a, PadMode pad) { return Val(lsseg::diff_xy(a.g, pad)); }
    V box_mean(const V& a, int f, PadMode pad) { return Val(lsseg::box_mean(a.g, f, pad)); }
    V conv3x3(const V& a, const V& k, PadMode pad) { return Val(lsseg::conv3x3(a.g, k.g, pad)); }
    V sum(const V& a) { return val_sum(a); }
    V mean(const V& a) { return val_mean(a); }
    const Val& value(const V& a) const { return a; }
};

struct TapeEngine {
    Tape* t;
    using V = Var;
    explicit TapeEngine(Tape& tape) : t(&tape) {}
    V leaf(Grid g) { return t->leaf(std::move(g)); }
    V leaf(double s) { return t->leaf(s); }
    V constant(Grid g) { return t->constant(std::move(g)); }
    V constant(double s) { return t->constant(s); }
    V add(V a, V b) { return t->add(a, b); }
    V sub(V a, V b) { return t->sub(a, b); }
    V mul(V a, V b) { return t->mul(a, b); }
    V div_guarded(V a, V b, double guard = kDivGuard) { return t->div_guarded(a, b, guard); }
    V cmul(V a, double c) { return t->cmul(a, c); }
    V cadd(V a, double c) { return t->cadd(a, c); }
    V map_exp(V a) { return t->map_exp(a); }
    V map_log(V a) { return t->map_log(a); }
    V map_tanh(V a) { return t->map_tanh(a); }
    V map_relu(V a) { return t->map_relu(a); }
    V map_sigmoid(V a) { return t->map_sigmoid(a); }
    V map_arctan(V a) { return t->map_arctan(a); }
    V map_sqrt(V a) { return t->map_sqrt(a); }
    V map_abs(V a) { return t->map_abs(a); }
    V clamp(V a, double lo, double hi) { return t->clamp(a, lo, hi); }
    V central_diff(V a, Axis axis, PadMode pad) { return t->central_diff(a, axis, pad); }
    V diff_xx(V a, PadMode pad) { return t->diff_xx(a, pad); }
    V diff_yy(V a, PadMode pad) { return t->diff_yy(a, pad); }
    V diff_xy(V a, PadMode pad) { return t->diff_xy(a, pad); }
    V box_mean(V a, int f, PadMode pad) { return t->box_mean(a, f, pad); }
    V conv3x3(V a, V k, PadMode pad) { return t->conv3x3(a, k, pad); }
    V sum(V a) { return t->sum(a); }
    V mean(V a) { return t->mean(a); }
    const Val& value(V a) const { return t->value(a); }
};

}  // namespace lsseg
