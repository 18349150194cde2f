#pragma once

#include <cstddef>
#include <vector>

#include "lsseg/value.hpp"

namespace lsseg {

class Tape;

/// Handle to a recorded value on a Tape.
struct Var {
    Tape* tape = nullptr;
    int id = -1;
};

/// Minimal reverse-mode tape over Grid/scalar operations. Nodes are appended
/// in topological order; backward() visits them once in reverse.
class Tape {
public:
    Var leaf(Grid g);
    Var leaf(double s);
    /// Like a leaf, but excluded from gradient propagation.
    Var constant(Grid g);
    Var constant(double s);

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var div_guarded(Var a, Var b, double guard = kDivGuard);
    Var cmul(Var a, double c);
    Var cadd(Var a, double c);
    Var map_exp(Var a);
    Var map_log(Var a);
    Var map_tanh(Var a);
    Var map_relu(Var a);
    Var map_sigmoid(Var a);
    Var map_arctan(Var a);
    Var map_sqrt(Var a);
    Var map_abs(Var a);
    Var clamp(Var a, double lo, double hi);
    Var central_diff(Var a, Axis axis, PadMode pad);
    Var diff_xx(Var a, PadMode pad);
    Var diff_yy(Var a, PadMode pad);
    Var diff_xy(Var a, PadMode pad);
    Var box_mean(Var a, int f, PadMode pad);
    Var conv3x3(Var input, Var kernel, PadMode pad);
    Var sum(Var a);
    Var mean(Var a);
    /// Extracts the single element of a 1x1 grid as a scalar Var.
    Var to_scalar(Var a);

    const Val& value(Var v) const;

    /// Accumulates gradients for every node reachable from a scalar loss.
    void backward(Var loss);
    /// Gradient of the last backward() w.r.t. v (zero-valued if unreachable).
    Val grad(Var v) const;

    size_t size() const { return nodes_.size(); }
    void clear();

private:
    enum class Op {
        Leaf, Const, Add, Sub, Mul, DivG, CMul, CAdd,
        Exp, Log, Tanh, Relu, Sigmoid, Arctan, Sqrt, Abs, Clamp,
        CDiffX, CDiffY, DXX, DYY, DXY, BoxMean, Conv3, Sum, Mean, ToScalar,
    };

    struct Node {
        Op op;
        int a = -1;
        int b = -1;
        double c0 = 0.0;
        double c1 = 0.0;
        int f = 0;
        PadMode pad = PadMode::Replicate;
        bool needs_grad = false;
        Val val;
    };

    Var push(Node n);
    Var unary(Op op, Var a, Val val);
    Var binary(Op op, Var a, Var b, Val val, double guard = 0.0);
    void check_owned(Var v) const;
    const Node& node(Var v) const;
    void accumulate(int id, const Val& contribution);

    std::vector<Node> nodes_;
    std::vector<Val> grads_;
};

}  // namespace lsseg
