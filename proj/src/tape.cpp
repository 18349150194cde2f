#include "lsseg/tape.hpp"

#include <stdexcept>
#include <string>

namespace lsseg {

namespace {

Val zeros_like(const Val& v) {
    if (v.scalar) return Val(0.0);
    return Val(Grid(v.g.height, v.g.width));
}

// Reduces or broadcasts a raw adjoint contribution to the operand's shape.
Val fit_shape(const Val& contribution, const Val& operand) {
    if (operand.scalar && !contribution.scalar) return val_sum(contribution);
    if (!operand.scalar && contribution.scalar) {
        Grid g(operand.g.height, operand.g.width, contribution.s);
        return Val(std::move(g));
    }
    return contribution;
}

}  // namespace

Var Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::check_owned(Var v) const {
    if (v.tape != this || v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
        throw std::invalid_argument("Var does not belong to this tape");
}

const Tape::Node& Tape::node(Var v) const {
    check_owned(v);
    return nodes_[v.id];
}

Var Tape::leaf(Grid g) {
    Node n{.op = Op::Leaf, .needs_grad = true, .val = Val(std::move(g))};
    return push(std::move(n));
}

Var Tape::leaf(double s) {
    Node n{.op = Op::Leaf, .needs_grad = true, .val = Val(s)};
    return push(std::move(n));
}

Var Tape::constant(Grid g) {
    Node n{.op = Op::Const, .needs_grad = false, .val = Val(std::move(g))};
    return push(std::move(n));
}

Var Tape::constant(double s) {
    Node n{.op = Op::Const, .needs_grad = false, .val = Val(s)};
    return push(std::move(n));
}

Var Tape::unary(Op op, Var a, Val val) {
    check_owned(a);
    Node n{.op = op, .a = a.id, .needs_grad = nodes_[a.id].needs_grad, .val = std::move(val)};
    return push(std::move(n));
}

Var Tape::binary(Op op, Var a, Var b, Val val, double guard) {
    check_owned(a);
    check_owned(b);
    Node n{.op = op,
           .a = a.id,
           .b = b.id,
           .c0 = guard,
           .needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad,
           .val = std::move(val)};
    return push(std::move(n));
}

Var Tape::add(Var a, Var b) { return binary(Op::Add, a, b, val_add(value(a), value(b))); }
Var Tape::sub(Var a, Var b) { return binary(Op::Sub, a, b, val_sub(value(a), value(b))); }
Var Tape::mul(Var a, Var b) { return binary(Op::Mul, a, b, val_mul(value(a), value(b))); }

Var Tape::div_guarded(Var a, Var b, double guard) {
    return binary(Op::DivG, a, b, val_div_guarded(value(a), value(b), guard), guard);
}

Var Tape::cmul(Var a, double c) {
    Var v = unary(Op::CMul, a, val_cmul(value(a), c));
    nodes_[v.id].c0 = c;
    return v;
}

Var Tape::cadd(Var a, double c) {
    Var v = unary(Op::CAdd, a, val_cadd(value(a), c));
    nodes_[v.id].c0 = c;
    return v;
}

Var Tape::map_exp(Var a) { return unary(Op::Exp, a, val_map(value(a), fn_exp)); }
Var Tape::map_log(Var a) { return unary(Op::Log, a, val_map(value(a), fn_log)); }
Var Tape::map_tanh(Var a) { return unary(Op::Tanh, a, val_map(value(a), fn_tanh)); }
Var Tape::map_relu(Var a) { return unary(Op::Relu, a, val_map(value(a), fn_relu)); }
Var Tape::map_sigmoid(Var a) { return unary(Op::Sigmoid, a, val_map(value(a), fn_sigmoid)); }
Var Tape::map_arctan(Var a) { return unary(Op::Arctan, a, val_map(value(a), fn_arctan)); }
Var Tape::map_sqrt(Var a) { return unary(Op::Sqrt, a, val_map(value(a), fn_sqrt)); }
Var Tape::map_abs(Var a) { return unary(Op::Abs, a, val_map(value(a), fn_abs)); }

Var Tape::clamp(Var a, double lo, double hi) {
    Var v = unary(Op::Clamp, a, val_clamp(value(a), lo, hi));
    nodes_[v.id].c0 = lo;
    nodes_[v.id].c1 = hi;
    return v;
}

namespace {
const Grid& grid_of(const Val& v, const char* what) {
    if (v.scalar) throw std::invalid_argument(std::string(what) + ": grid operand required");
    return v.g;
}
}  // namespace

Var Tape::central_diff(Var a, Axis axis, PadMode pad) {
    const Grid& g = grid_of(value(a), "central_diff");
    Var v = unary(axis == Axis::X ? Op::CDiffX : Op::CDiffY, a,
                  Val(lsseg::central_diff(g, axis, pad)));
    nodes_[v.id].pad = pad;
    return v;
}

Var Tape::diff_xx(Var a, PadMode pad) {
    Var v = unary(Op::DXX, a, Val(lsseg::diff_xx(grid_of(value(a), "diff_xx"), pad)));
    nodes_[v.id].pad = pad;
    return v;
}

Var Tape::diff_yy(Var a, PadMode pad) {
    Var v = unary(Op::DYY, a, Val(lsseg::diff_yy(grid_of(value(a), "diff_yy"), pad)));
    nodes_[v.id].pad = pad;
    return v;
}

Var Tape::diff_xy(Var a, PadMode pad) {
    Var v = unary(Op::DXY, a, Val(lsseg::diff_xy(grid_of(value(a), "diff_xy"), pad)));
    nodes_[v.id].pad = pad;
    return v;
}

Var Tape::box_mean(Var a, int f, PadMode pad) {
    Var v = unary(Op::BoxMean, a, Val(lsseg::box_mean(grid_of(value(a), "box_mean"), f, pad)));
    nodes_[v.id].f = f;
    nodes_[v.id].pad = pad;
    return v;
}

Var Tape::conv3x3(Var input, Var kernel, PadMode pad) {
    const Grid& g = grid_of(value(input), "conv3x3");
    const Grid& k = grid_of(value(kernel), "conv3x3 kernel");
    Var v = binary(Op::Conv3, input, kernel, Val(lsseg::conv3x3(g, k, pad)));
    nodes_[v.id].pad = pad;
    return v;
}

Var Tape::sum(Var a) { return unary(Op::Sum, a, val_sum(value(a))); }
Var Tape::mean(Var a) { return unary(Op::Mean, a, val_mean(value(a))); }

Var Tape::to_scalar(Var a) {
    const Val& v = value(a);
    if (v.scalar) return a;
    if (v.g.size() != 1) throw std::invalid_argument("to_scalar: grid must be 1x1");
    return unary(Op::ToScalar, a, Val(v.g.values[0]));
}

const Val& Tape::value(Var v) const { return node(v).val; }

void Tape::accumulate(int id, const Val& contribution) {
    Val fitted = fit_shape(contribution, nodes_[id].val);
    Val& slot = grads_[id];
    if (slot.scalar && slot.s == 0.0 && !nodes_[id].val.scalar && fitted.scalar == false) {
        // first grid contribution replaces the scalar-zero placeholder
        slot = fitted;
        return;
    }
    slot = val_add(slot, fitted);
}

void Tape::backward(Var loss) {
    check_owned(loss);
    if (!value(loss).scalar) throw std::invalid_argument("backward: loss must be scalar");
    grads_.assign(nodes_.size(), Val(0.0));
    grads_[loss.id] = Val(1.0);

    for (int i = loss.id; i >= 0; --i) {
        const Node& n = nodes_[i];
        if (!n.needs_grad) continue;
        const Val& go = grads_[i];
        if (go.scalar && go.s == 0.0) continue;
        auto in = [&](int id) -> const Val& { return nodes_[id].val; };
        switch (n.op) {
            case Op::Leaf:
            case Op::Const:
                break;
            case Op::Add:
                accumulate(n.a, go);
                accumulate(n.b, go);
                break;
            case Op::Sub:
                accumulate(n.a, go);
                accumulate(n.b, val_cmul(go, -1.0));
                break;
            case Op::Mul:
                accumulate(n.a, val_mul(go, in(n.b)));
                accumulate(n.b, val_mul(go, in(n.a)));
                break;
            case Op::DivG: {
                Val da = val_div_guarded(go, in(n.b), n.c0);
                accumulate(n.a, da);
                Val db = val_cmul(val_div_guarded(val_mul(go, n.val), in(n.b), n.c0), -1.0);
                accumulate(n.b, db);
                break;
            }
            case Op::CMul:
                accumulate(n.a, val_cmul(go, n.c0));
                break;
            case Op::CAdd:
                accumulate(n.a, go);
                break;
            case Op::Exp:
                accumulate(n.a, val_mul(go, n.val));
                break;
            case Op::Log:
                accumulate(n.a, val_div_guarded(go, in(n.a), 0.0));
                break;
            case Op::Tanh: {
                Val one_m = val_cadd(val_cmul(val_mul(n.val, n.val), -1.0), 1.0);
                accumulate(n.a, val_mul(go, one_m));
                break;
            }
            case Op::Relu: {
                const Val& x = in(n.a);
                if (x.scalar) {
                    accumulate(n.a, Val(x.s > 0.0 ? go.s : 0.0));
                } else {
                    Val masked = go;
                    Grid m = masked.scalar ? Grid(x.g.height, x.g.width, go.s) : masked.g;
                    for (size_t p = 0; p < m.values.size(); ++p)
                        if (x.g.values[p] <= 0.0) m.values[p] = 0.0;
                    accumulate(n.a, Val(std::move(m)));
                }
                break;
            }
            case Op::Sigmoid: {
                Val one_m = val_cadd(val_cmul(n.val, -1.0), 1.0);
                accumulate(n.a, val_mul(go, val_mul(n.val, one_m)));
                break;
            }
            case Op::Arctan: {
                Val den = val_cadd(val_mul(in(n.a), in(n.a)), 1.0);
                accumulate(n.a, val_div_guarded(go, den, 0.0));
                break;
            }
            case Op::Sqrt: {
                // guarded at sqrt(0): subgradient 0.5/(out+eta)
                Val den = val_cmul(val_cadd(n.val, kDivGuard), 2.0);
                accumulate(n.a, val_div_guarded(go, den, 0.0));
                break;
            }
            case Op::Abs: {
                const Val& x = in(n.a);
                if (x.scalar) {
                    double sg = x.s > 0.0 ? 1.0 : (x.s < 0.0 ? -1.0 : 0.0);
                    accumulate(n.a, Val(go.s * sg));
                } else {
                    Grid m = go.scalar ? Grid(x.g.height, x.g.width, go.s) : go.g;
                    for (size_t p = 0; p < m.values.size(); ++p) {
                        double xv = x.g.values[p];
                        m.values[p] *= xv > 0.0 ? 1.0 : (xv < 0.0 ? -1.0 : 0.0);
                    }
                    accumulate(n.a, Val(std::move(m)));
                }
                break;
            }
            case Op::Clamp: {
                const Val& x = in(n.a);
                if (x.scalar) {
                    accumulate(n.a, Val(x.s > n.c0 && x.s < n.c1 ? go.s : 0.0));
                } else {
                    Grid m = go.scalar ? Grid(x.g.height, x.g.width, go.s) : go.g;
                    for (size_t p = 0; p < m.values.size(); ++p)
                        if (!(x.g.values[p] > n.c0 && x.g.values[p] < n.c1)) m.values[p] = 0.0;
                    accumulate(n.a, Val(std::move(m)));
                }
                break;
            }
            case Op::CDiffX:
                accumulate(n.a, Val(central_diff_adjoint(go.g, Axis::X, n.pad)));
                break;
            case Op::CDiffY:
                accumulate(n.a, Val(central_diff_adjoint(go.g, Axis::Y, n.pad)));
                break;
            case Op::DXX:
                accumulate(n.a, Val(diff_xx_adjoint(go.g, n.pad)));
                break;
            case Op::DYY:
                accumulate(n.a, Val(diff_yy_adjoint(go.g, n.pad)));
                break;
            case Op::DXY:
                accumulate(n.a, Val(diff_xy_adjoint(go.g, n.pad)));
                break;
            case Op::BoxMean:
                accumulate(n.a, Val(box_mean_adjoint(go.g, n.f, n.pad)));
                break;
            case Op::Conv3: {
                Grid gg, gk;
                conv3x3_adjoint(in(n.a).g, in(n.b).g, go.g, n.pad, gg, gk);
                accumulate(n.a, Val(std::move(gg)));
                accumulate(n.b, Val(std::move(gk)));
                break;
            }
            case Op::Sum: {
                if (in(n.a).scalar)
                    accumulate(n.a, go);
                else
                    accumulate(n.a, Val(Grid(in(n.a).g.height, in(n.a).g.width, go.s)));
                break;
            }
            case Op::ToScalar:
                accumulate(n.a, Val(Grid(1, 1, go.s)));
                break;
            case Op::Mean: {
                if (in(n.a).scalar)
                    accumulate(n.a, go);
                else
                    accumulate(n.a, Val(Grid(in(n.a).g.height, in(n.a).g.width,
                                             go.s / in(n.a).g.size())));
                break;
            }
        }
    }
}

Val Tape::grad(Var v) const {
    check_owned(v);
    if (grads_.empty()) throw std::logic_error("grad() before backward()");
    const Val& g = grads_[v.id];
    const Val& val = nodes_[v.id].val;
    if (!val.scalar && g.scalar) return Val(Grid(val.g.height, val.g.width, g.s));
    return g;
}

void Tape::clear() {
    nodes_.clear();
    grads_.clear();
}

}  // namespace lsseg
