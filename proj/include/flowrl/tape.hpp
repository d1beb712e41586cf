#pragma once

#include <cstddef>
#include <vector>

#include "flowrl/array.hpp"
#include "flowrl/params.hpp"

namespace flowrl::ad {

/// Handle to a value recorded on a Tape.
struct Slot {
    std::size_t index = 0;
};

/// Reverse-mode tape over dense arrays. Operations append nodes in
/// topological order; backward() walks the tape once in reverse and
/// accumulates d(loss)/d(param) into every bound ParamSet.
class Tape {
public:
    Slot constant(Array v);
    Slot param(ParamSet& ps, std::string_view name);

    // elementwise binary (shapes must match)
    Slot add(Slot a, Slot b);
    Slot sub(Slot a, Slot b);
    Slot mul(Slot a, Slot b);
    Slot minimum(Slot a, Slot b);

    // [m,k] x [k] -> [m], or [m,k] x [k,n] -> [m,n]
    Slot matmul(Slot a, Slot b);
    // [m,n] + [m] broadcast over columns
    Slot add_cols(Slot m, Slot v);
    // [m,n] -> [n], sum over rows within each column
    Slot col_sum(Slot a);

    // elementwise unary
    Slot tanh(Slot a);
    Slot sigmoid(Slot a);
    Slot exp(Slot a);
    Slot log(Slot a);
    Slot square(Slot a);
    Slot relu(Slot a);
    Slot neg(Slot a);
    Slot scale(Slot a, double c);
    Slot add_const(Slot a, double c);
    Slot clamp(Slot a, double lo, double hi);

    // reductions to a scalar
    Slot sum(Slot a);
    Slot mean(Slot a);

    // sum of equally shaped slots
    Slot add_n(const std::vector<Slot>& slots);

    const Array& value(Slot s) const { return nodes_[s.index].value; }
    double scalar(Slot s) const { return nodes_[s.index].value.scalar_value(); }

    /// Accumulates gradients of a scalar loss into all bound ParamSets.
    /// Node adjoints remain readable through grad() until the next backward().
    void backward(Slot loss);

    const Array& grad(Slot s) const;

    std::size_t size() const { return nodes_.size(); }

private:
    enum class Op {
        kConstant,
        kParam,
        kAdd,
        kSub,
        kMul,
        kMin,
        kMatMul,
        kAddCols,
        kColSum,
        kTanh,
        kSigmoid,
        kExp,
        kLog,
        kSquare,
        kRelu,
        kNeg,
        kScale,
        kAddConst,
        kClamp,
        kSum,
        kMean,
        kAddN,
    };

    struct Node {
        Op op;
        std::vector<std::size_t> inputs;
        Array value;
        Array adjoint;       // filled during backward
        double c0 = 0.0;     // op constants (scale factor, clamp lo, ...)
        double c1 = 0.0;
        ParamSet* bound = nullptr;    // kParam only
        std::size_t bound_index = 0;  // kParam only
    };

    Slot push(Node node);
    void backprop_node(std::size_t i);

    std::vector<Node> nodes_;
    bool has_adjoints_ = false;
};

}  // namespace flowrl::ad
