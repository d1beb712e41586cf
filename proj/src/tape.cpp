#include "flowrl/tape.hpp"

#include <cmath>

#include "flowrl/errors.hpp"

namespace flowrl::ad {

namespace {

void check_same_shape(const char* op, const Array& a, const Array& b) {
    require(a.same_shape(b), op, ": shape mismatch ", shape_str(a), " vs ", shape_str(b));
}

}  // namespace

Slot Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return Slot{nodes_.size() - 1};
}

Slot Tape::constant(Array v) {
    return push(Node{Op::kConstant, {}, std::move(v), {}});
}

Slot Tape::param(ParamSet& ps, std::string_view name) {
    std::size_t idx = ps.index_of(name);
    Node n{Op::kParam, {}, ps.value(idx), {}};
    n.bound = &ps;
    n.bound_index = idx;
    return push(std::move(n));
}

Slot Tape::add(Slot a, Slot b) {
    const Array& va = value(a);
    const Array& vb = value(b);
    check_same_shape("add", va, vb);
    Array out(va.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + vb[i];
    return push(Node{Op::kAdd, {a.index, b.index}, std::move(out), {}});
}

Slot Tape::sub(Slot a, Slot b) {
    const Array& va = value(a);
    const Array& vb = value(b);
    check_same_shape("sub", va, vb);
    Array out(va.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] - vb[i];
    return push(Node{Op::kSub, {a.index, b.index}, std::move(out), {}});
}

Slot Tape::mul(Slot a, Slot b) {
    const Array& va = value(a);
    const Array& vb = value(b);
    check_same_shape("mul", va, vb);
    Array out(va.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * vb[i];
    return push(Node{Op::kMul, {a.index, b.index}, std::move(out), {}});
}

Slot Tape::minimum(Slot a, Slot b) {
    const Array& va = value(a);
    const Array& vb = value(b);
    check_same_shape("minimum", va, vb);
    Array out(va.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] <= vb[i] ? va[i] : vb[i];
    return push(Node{Op::kMin, {a.index, b.index}, std::move(out), {}});
}

Slot Tape::matmul(Slot a, Slot b) {
    const Array& va = value(a);
    const Array& vb = value(b);
    require(va.rank() == 2, "matmul: left operand must be rank 2, got ", shape_str(va));
    require(vb.rank() == 1 || vb.rank() == 2, "matmul: right operand must be rank 1 or 2, got ",
            shape_str(vb));
    std::size_t m = va.rows();
    std::size_t k = va.cols();
    require(vb.rows() == k, "matmul: inner dimensions differ, ", shape_str(va), " x ",
            shape_str(vb));
    std::size_t n = vb.rank() == 2 ? vb.cols() : 1;

    Array out(vb.rank() == 2 ? std::vector<std::size_t>{m, n} : std::vector<std::size_t>{m});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < k; ++t) s += va[i * k + t] * vb[t * n + j];
            out[i * n + j] = s;
        }
    }
    return push(Node{Op::kMatMul, {a.index, b.index}, std::move(out), {}});
}

Slot Tape::add_cols(Slot m, Slot v) {
    const Array& vm = value(m);
    const Array& vv = value(v);
    require(vm.rank() == 2, "add_cols: left operand must be rank 2, got ", shape_str(vm));
    require(vv.rank() == 1 && vv.rows() == vm.rows(), "add_cols: bias shape ", shape_str(vv),
            " does not match ", shape_str(vm));
    Array out(vm.shape());
    std::size_t cols = vm.cols();
    for (std::size_t i = 0; i < vm.rows(); ++i) {
        for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = vm[i * cols + j] + vv[i];
    }
    return push(Node{Op::kAddCols, {m.index, v.index}, std::move(out), {}});
}

Slot Tape::col_sum(Slot a) {
    const Array& va = value(a);
    require(va.rank() == 2, "col_sum: operand must be rank 2, got ", shape_str(va));
    std::size_t cols = va.cols();
    Array out({cols});
    for (std::size_t j = 0; j < cols; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < va.rows(); ++i) s += va[i * cols + j];
        out[j] = s;
    }
    return push(Node{Op::kColSum, {a.index}, std::move(out), {}});
}

Slot Tape::tanh(Slot a) {
    const Array& va = value(a);
    Array out(va.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(va[i]);
    return push(Node{Op::kTanh, {a.index}, std::move(out), {}});
}

Slot Tape::sigmoid(Slot a) {
    const Array& va = value(a);
    Array out(va.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-va[i]));
    return push(Node{Op::kSigmoid, {a.index}, std::move(out), {}});
}

Slot Tape::exp(Slot a) {
    const Array& va = value(a);
    Array out(va.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(va[i]);
    return push(Node{Op::kExp, {a.index}, std::move(out), {}});
}

Slot Tape::log(Slot a) {
    const Array& va = value(a);
    Array out(va.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        require(va[i] > 0.0, "log: non-positive input ", va[i]);
        out[i] = std::log(va[i]);
    }
    return push(Node{Op::kLog, {a.index}, std::move(out), {}});
}

Slot Tape::square(Slot a) {
    const Array& va = value(a);
    Array out(va.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * va[i];
    return push(Node{Op::kSquare, {a.index}, std::move(out), {}});
}

Slot Tape::relu(Slot a) {
    const Array& va = value(a);
    Array out(va.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] > 0.0 ? va[i] : 0.0;
    return push(Node{Op::kRelu, {a.index}, std::move(out), {}});
}

Slot Tape::neg(Slot a) {
    const Array& va = value(a);
    Array out(va.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = -va[i];
    return push(Node{Op::kNeg, {a.index}, std::move(out), {}});
}

Slot Tape::scale(Slot a, double c) {
    const Array& va = value(a);
    Array out(va.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * va[i];
    Node n{Op::kScale, {a.index}, std::move(out), {}};
    n.c0 = c;
    return push(std::move(n));
}

Slot Tape::add_const(Slot a, double c) {
    const Array& va = value(a);
    Array out(va.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + c;
    Node n{Op::kAddConst, {a.index}, std::move(out), {}};
    n.c0 = c;
    return push(std::move(n));
}

Slot Tape::clamp(Slot a, double lo, double hi) {
    require(lo <= hi, "clamp: lo ", lo, " > hi ", hi);
    const Array& va = value(a);
    Array out(va.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = va[i] < lo ? lo : (va[i] > hi ? hi : va[i]);
    }
    Node n{Op::kClamp, {a.index}, std::move(out), {}};
    n.c0 = lo;
    n.c1 = hi;
    return push(std::move(n));
}

Slot Tape::sum(Slot a) {
    const Array& va = value(a);
    double s = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) s += va[i];
    return push(Node{Op::kSum, {a.index}, Array::scalar(s), {}});
}

Slot Tape::mean(Slot a) {
    const Array& va = value(a);
    require(va.size() > 0, "mean: empty operand");
    double s = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) s += va[i];
    Node n{Op::kMean, {a.index}, Array::scalar(s / static_cast<double>(va.size())), {}};
    return push(std::move(n));
}

Slot Tape::add_n(const std::vector<Slot>& slots) {
    require(!slots.empty(), "add_n: empty operand list");
    const Array& first = value(slots[0]);
    Array out(first.shape());
    std::vector<std::size_t> inputs;
    inputs.reserve(slots.size());
    for (Slot s : slots) {
        const Array& v = value(s);
        check_same_shape("add_n", first, v);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
        inputs.push_back(s.index);
    }
    return push(Node{Op::kAddN, std::move(inputs), std::move(out), {}});
}

const Array& Tape::grad(Slot s) const {
    require(has_adjoints_, "tape: grad() before backward()");
    return nodes_[s.index].adjoint;
}

void Tape::backward(Slot loss) {
    const Array& lv = value(loss);
    require(lv.is_scalar(), "backward: loss must be scalar, got shape ", shape_str(lv));

    for (auto& n : nodes_) {
        n.adjoint = Array(n.value.shape());
    }
    nodes_[loss.index].adjoint[0] = 1.0;
    has_adjoints_ = true;

    for (std::size_t i = nodes_.size(); i-- > 0;) {
        backprop_node(i);
    }

    for (auto& n : nodes_) {
        if (n.op == Op::kParam) {
            Array& g = n.bound->grad(n.bound_index);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.adjoint[i];
        }
    }
}

void Tape::backprop_node(std::size_t i) {
    Node& n = nodes_[i];
    const Array& d = n.adjoint;
    switch (n.op) {
        case Op::kConstant:
        case Op::kParam:
            break;
        case Op::kAdd: {
            Array& da = nodes_[n.inputs[0]].adjoint;
            Array& db = nodes_[n.inputs[1]].adjoint;
            for (std::size_t j = 0; j < d.size(); ++j) {
                da[j] += d[j];
                db[j] += d[j];
            }
            break;
        }
        case Op::kSub: {
            Array& da = nodes_[n.inputs[0]].adjoint;
            Array& db = nodes_[n.inputs[1]].adjoint;
            for (std::size_t j = 0; j < d.size(); ++j) {
                da[j] += d[j];
                db[j] -= d[j];
            }
            break;
        }
        case Op::kMul: {
            const Array& va = nodes_[n.inputs[0]].value;
            const Array& vb = nodes_[n.inputs[1]].value;
            Array& da = nodes_[n.inputs[0]].adjoint;
            Array& db = nodes_[n.inputs[1]].adjoint;
            for (std::size_t j = 0; j < d.size(); ++j) {
                da[j] += d[j] * vb[j];
                db[j] += d[j] * va[j];
            }
            break;
        }
        case Op::kMin: {
            const Array& va = nodes_[n.inputs[0]].value;
            const Array& vb = nodes_[n.inputs[1]].value;
            Array& da = nodes_[n.inputs[0]].adjoint;
            Array& db = nodes_[n.inputs[1]].adjoint;
            // ties route to the first operand
            for (std::size_t j = 0; j < d.size(); ++j) {
                if (va[j] <= vb[j]) {
                    da[j] += d[j];
                } else {
                    db[j] += d[j];
                }
            }
            break;
        }
        case Op::kMatMul: {
            const Array& va = nodes_[n.inputs[0]].value;
            const Array& vb = nodes_[n.inputs[1]].value;
            Array& da = nodes_[n.inputs[0]].adjoint;
            Array& db = nodes_[n.inputs[1]].adjoint;
            std::size_t m = va.rows();
            std::size_t k = va.cols();
            std::size_t cols = vb.rank() == 2 ? vb.cols() : 1;
            // dA += dC * B^T ; dB += A^T * dC
            for (std::size_t r = 0; r < m; ++r) {
                for (std::size_t t = 0; t < k; ++t) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < cols; ++j) s += d[r * cols + j] * vb[t * cols + j];
                    da[r * k + t] += s;
                }
            }
            for (std::size_t t = 0; t < k; ++t) {
                for (std::size_t j = 0; j < cols; ++j) {
                    double s = 0.0;
                    for (std::size_t r = 0; r < m; ++r) s += va[r * k + t] * d[r * cols + j];
                    db[t * cols + j] += s;
                }
            }
            break;
        }
        case Op::kAddCols: {
            Array& da = nodes_[n.inputs[0]].adjoint;
            Array& db = nodes_[n.inputs[1]].adjoint;
            std::size_t rows = n.value.rows();
            std::size_t cols = n.value.cols();
            for (std::size_t r = 0; r < rows; ++r) {
                double s = 0.0;
                for (std::size_t j = 0; j < cols; ++j) {
                    da[r * cols + j] += d[r * cols + j];
                    s += d[r * cols + j];
                }
                db[r] += s;
            }
            break;
        }
        case Op::kColSum: {
            const Array& va = nodes_[n.inputs[0]].value;
            Array& da = nodes_[n.inputs[0]].adjoint;
            std::size_t cols = va.cols();
            for (std::size_t r = 0; r < va.rows(); ++r) {
                for (std::size_t j = 0; j < cols; ++j) da[r * cols + j] += d[j];
            }
            break;
        }
        case Op::kTanh: {
            Array& da = nodes_[n.inputs[0]].adjoint;
            for (std::size_t j = 0; j < d.size(); ++j) {
                da[j] += d[j] * (1.0 - n.value[j] * n.value[j]);
            }
            break;
        }
        case Op::kSigmoid: {
            Array& da = nodes_[n.inputs[0]].adjoint;
            for (std::size_t j = 0; j < d.size(); ++j) {
                da[j] += d[j] * n.value[j] * (1.0 - n.value[j]);
            }
            break;
        }
        case Op::kExp: {
            Array& da = nodes_[n.inputs[0]].adjoint;
            for (std::size_t j = 0; j < d.size(); ++j) da[j] += d[j] * n.value[j];
            break;
        }
        case Op::kLog: {
            const Array& va = nodes_[n.inputs[0]].value;
            Array& da = nodes_[n.inputs[0]].adjoint;
            for (std::size_t j = 0; j < d.size(); ++j) da[j] += d[j] / va[j];
            break;
        }
        case Op::kSquare: {
            const Array& va = nodes_[n.inputs[0]].value;
            Array& da = nodes_[n.inputs[0]].adjoint;
            for (std::size_t j = 0; j < d.size(); ++j) da[j] += d[j] * 2.0 * va[j];
            break;
        }
        case Op::kRelu: {
            const Array& va = nodes_[n.inputs[0]].value;
            Array& da = nodes_[n.inputs[0]].adjoint;
            for (std::size_t j = 0; j < d.size(); ++j) {
                if (va[j] > 0.0) da[j] += d[j];
            }
            break;
        }
        case Op::kNeg: {
            Array& da = nodes_[n.inputs[0]].adjoint;
            for (std::size_t j = 0; j < d.size(); ++j) da[j] -= d[j];
            break;
        }
        case Op::kScale: {
            Array& da = nodes_[n.inputs[0]].adjoint;
            for (std::size_t j = 0; j < d.size(); ++j) da[j] += d[j] * n.c0;
            break;
        }
        case Op::kAddConst: {
            Array& da = nodes_[n.inputs[0]].adjoint;
            for (std::size_t j = 0; j < d.size(); ++j) da[j] += d[j];
            break;
        }
        case Op::kClamp: {
            const Array& va = nodes_[n.inputs[0]].value;
            Array& da = nodes_[n.inputs[0]].adjoint;
            for (std::size_t j = 0; j < d.size(); ++j) {
                if (va[j] >= n.c0 && va[j] <= n.c1) da[j] += d[j];
            }
            break;
        }
        case Op::kSum: {
            Array& da = nodes_[n.inputs[0]].adjoint;
            for (std::size_t j = 0; j < da.size(); ++j) da[j] += d[0];
            break;
        }
        case Op::kMean: {
            Array& da = nodes_[n.inputs[0]].adjoint;
            double w = d[0] / static_cast<double>(da.size());
            for (std::size_t j = 0; j < da.size(); ++j) da[j] += w;
            break;
        }
        case Op::kAddN: {
            for (std::size_t in : n.inputs) {
                Array& da = nodes_[in].adjoint;
                for (std::size_t j = 0; j < d.size(); ++j) da[j] += d[j];
            }
            break;
        }
    }
}

}  // namespace flowrl::ad
