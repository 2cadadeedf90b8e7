#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "jema/error.hpp"
#include "jema/matrix.hpp"

namespace jema {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

// Reverse-mode differentiation runs over an explicit tape rather than scalar
// operator overloading: the gradient penalty needs a gradient-of-gradient,
// which falls out of replaying an extended tape whose first-order gradient
// nodes are ordinary ops. Every op's vjp below is therefore expressed in the
// op vocabulary itself, which keeps the set closed under differentiation.
enum class OpKind : std::uint8_t {
    Input,
    Constant,
    Add,
    Sub,
    Mul,        // elementwise
    ScalarMul,  // (1x1 node) * matrix
    Scale,      // immediate scalar multiply
    Shift,      // immediate scalar add
    MatMul,
    Transpose,
    Sigmoid,
    Softplus,   // ln(1 + exp(gamma * (x + margin))), elementwise
    Log,
    Exp,
    Relu,
    LeakyRelu,
    StepMask,   // x > 0 ? 1 : slope; derivative treated as zero
    Reciprocal,
    Sqrt,
    L2Norm,             // whole matrix -> 1x1
    EuclideanDistance,  // two same-shape matrices -> 1x1
    ConcatRows,
    Slice,
    Pad,
    Sum,        // all elements -> 1x1
    Broadcast,  // 1x1 -> rows x cols
    RowSum,     // m x n -> m x 1
    ColSum,     // m x n -> 1 x n
    TileCols,   // m x 1 -> m x n
    TileRows,   // 1 x n -> m x n
    LogSumExp,  // column vector -> 1x1, max-shifted
};

inline const char* op_name(OpKind k) {
    switch (k) {
        case OpKind::Input: return "input";
        case OpKind::Constant: return "constant";
        case OpKind::Add: return "add";
        case OpKind::Sub: return "sub";
        case OpKind::Mul: return "mul";
        case OpKind::ScalarMul: return "scalar-mul";
        case OpKind::Scale: return "scale";
        case OpKind::Shift: return "shift";
        case OpKind::MatMul: return "matmul";
        case OpKind::Transpose: return "transpose";
        case OpKind::Sigmoid: return "sigmoid";
        case OpKind::Softplus: return "softplus";
        case OpKind::Log: return "log";
        case OpKind::Exp: return "exp";
        case OpKind::Relu: return "relu";
        case OpKind::LeakyRelu: return "leaky-relu";
        case OpKind::StepMask: return "step-mask";
        case OpKind::Reciprocal: return "reciprocal";
        case OpKind::Sqrt: return "sqrt";
        case OpKind::L2Norm: return "l2norm";
        case OpKind::EuclideanDistance: return "euclidean-distance";
        case OpKind::ConcatRows: return "concat-rows";
        case OpKind::Slice: return "slice";
        case OpKind::Pad: return "pad";
        case OpKind::Sum: return "sum";
        case OpKind::Broadcast: return "broadcast";
        case OpKind::RowSum: return "row-sum";
        case OpKind::ColSum: return "col-sum";
        case OpKind::TileCols: return "tile-cols";
        case OpKind::TileRows: return "tile-rows";
        case OpKind::LogSumExp: return "logsumexp";
    }
    return "?";
}

struct TapeNode {
    OpKind kind = OpKind::Constant;
    NodeId a = kNoNode;
    NodeId b = kNoNode;
    std::vector<NodeId> list;  // ConcatRows operands
    double c0 = 0.0;           // Scale factor / Shift offset / Softplus gamma / LeakyRelu slope
    double c1 = 0.0;           // Softplus margin
    int i0 = 0, i1 = 0, i2 = 0, i3 = 0;  // Slice/Pad/Broadcast/Tile geometry
    DenseMatrix value;         // cached forward value
    std::string name;          // Input nodes only
};

// Numerically stable sigmoid.
inline double sigmoid_scalar(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// ln(1 + exp(z)) with the large-argument guard: beyond z = 30 the correction
// term is below 1e-13, so the exact linear tail is returned.
inline double softplus_scalar(double z) {
    if (z > 30.0) return z;
    if (z < -30.0) return std::exp(z);
    return std::log1p(std::exp(z));
}

class Tape {
public:
    // ----- leaves ---------------------------------------------------------

    NodeId input(const std::string& name, DenseMatrix v) {
        if (name.empty()) fail("tape: input leaf needs a name");
        if (inputs_.count(name)) fail("tape: duplicate input leaf '", name, "'");
        TapeNode n;
        n.kind = OpKind::Input;
        n.name = name;
        n.value = std::move(v);
        const NodeId id = push_raw(std::move(n));
        inputs_[name] = id;
        return id;
    }

    NodeId constant(DenseMatrix v) {
        TapeNode n;
        n.kind = OpKind::Constant;
        n.value = std::move(v);
        return push_raw(std::move(n));
    }

    NodeId constant_scalar(double v) { return constant(DenseMatrix::scalar(v)); }

    // ----- ops ------------------------------------------------------------

    NodeId add(NodeId a, NodeId b) { return push_binary(OpKind::Add, a, b); }
    NodeId sub(NodeId a, NodeId b) { return push_binary(OpKind::Sub, a, b); }
    NodeId mul(NodeId a, NodeId b) { return push_binary(OpKind::Mul, a, b); }

    NodeId smul(NodeId scalar_node, NodeId m) {
        require_scalar(scalar_node, "scalar-mul");
        TapeNode n;
        n.kind = OpKind::ScalarMul;
        n.a = scalar_node;
        n.b = m;
        return push(std::move(n));
    }

    NodeId scale(NodeId a, double c) {
        TapeNode n;
        n.kind = OpKind::Scale;
        n.a = a;
        n.c0 = c;
        return push(std::move(n));
    }

    NodeId shift(NodeId a, double c) {
        TapeNode n;
        n.kind = OpKind::Shift;
        n.a = a;
        n.c0 = c;
        return push(std::move(n));
    }

    NodeId matmul(NodeId a, NodeId b) { return push_binary(OpKind::MatMul, a, b); }

    NodeId transpose(NodeId a) { return push_unary(OpKind::Transpose, a); }

    NodeId sigmoid(NodeId a) { return push_unary(OpKind::Sigmoid, a); }

    NodeId softplus(NodeId a, double gamma, double margin) {
        TapeNode n;
        n.kind = OpKind::Softplus;
        n.a = a;
        n.c0 = gamma;
        n.c1 = margin;
        return push(std::move(n));
    }

    NodeId log(NodeId a) { return push_unary(OpKind::Log, a); }
    NodeId exp(NodeId a) { return push_unary(OpKind::Exp, a); }
    NodeId relu(NodeId a) { return push_unary(OpKind::Relu, a); }

    NodeId leaky_relu(NodeId a, double slope) {
        TapeNode n;
        n.kind = OpKind::LeakyRelu;
        n.a = a;
        n.c0 = slope;
        return push(std::move(n));
    }

    NodeId step_mask(NodeId a, double slope) {
        TapeNode n;
        n.kind = OpKind::StepMask;
        n.a = a;
        n.c0 = slope;
        return push(std::move(n));
    }

    NodeId reciprocal(NodeId a) { return push_unary(OpKind::Reciprocal, a); }
    NodeId sqrt(NodeId a) { return push_unary(OpKind::Sqrt, a); }
    NodeId l2norm(NodeId a) { return push_unary(OpKind::L2Norm, a); }

    NodeId euclidean_distance(NodeId a, NodeId b) {
        return push_binary(OpKind::EuclideanDistance, a, b);
    }

    NodeId concat_rows(std::vector<NodeId> parts) {
        if (parts.empty()) fail("concat-rows: no operands");
        TapeNode n;
        n.kind = OpKind::ConcatRows;
        n.list = std::move(parts);
        return push(std::move(n));
    }

    NodeId slice(NodeId a, int r0, int c0, int rows, int cols) {
        TapeNode n;
        n.kind = OpKind::Slice;
        n.a = a;
        n.i0 = r0;
        n.i1 = c0;
        n.i2 = rows;
        n.i3 = cols;
        return push(std::move(n));
    }

    // Embeds the operand into an out_rows x out_cols zero matrix at (r0, c0).
    NodeId pad(NodeId a, int r0, int c0, int out_rows, int out_cols) {
        TapeNode n;
        n.kind = OpKind::Pad;
        n.a = a;
        n.i0 = r0;
        n.i1 = c0;
        n.i2 = out_rows;
        n.i3 = out_cols;
        return push(std::move(n));
    }

    NodeId sum(NodeId a) { return push_unary(OpKind::Sum, a); }

    NodeId broadcast(NodeId a, int rows, int cols) {
        require_scalar(a, "broadcast");
        TapeNode n;
        n.kind = OpKind::Broadcast;
        n.a = a;
        n.i0 = rows;
        n.i1 = cols;
        return push(std::move(n));
    }

    NodeId row_sum(NodeId a) { return push_unary(OpKind::RowSum, a); }
    NodeId col_sum(NodeId a) { return push_unary(OpKind::ColSum, a); }

    NodeId tile_cols(NodeId a, int n_cols) {
        TapeNode n;
        n.kind = OpKind::TileCols;
        n.a = a;
        n.i0 = n_cols;
        return push(std::move(n));
    }

    NodeId tile_rows(NodeId a, int n_rows) {
        TapeNode n;
        n.kind = OpKind::TileRows;
        n.a = a;
        n.i0 = n_rows;
        return push(std::move(n));
    }

    NodeId logsumexp(NodeId a) { return push_unary(OpKind::LogSumExp, a); }

    // ----- inspection ------------------------------------------------------

    NodeId size() const { return static_cast<NodeId>(nodes_.size()); }

    const TapeNode& node(NodeId id) const {
        check_id(id);
        return nodes_[static_cast<std::size_t>(id)];
    }

    const DenseMatrix& value(NodeId id) const { return node(id).value; }

    const std::map<std::string, NodeId>& input_nodes() const { return inputs_; }

    NodeId input_id(const std::string& name) const {
        auto it = inputs_.find(name);
        if (it == inputs_.end()) fail("tape: no input leaf named '", name, "'");
        return it->second;
    }

    // ----- evaluation ------------------------------------------------------

    // Rebind one leaf's value without recomputing anything downstream.
    void set_input(const std::string& name, DenseMatrix v) {
        const NodeId id = input_id(name);
        TapeNode& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.value.same_shape(v))
            fail("tape: input '", name, "' rebind shape ", v.rows, "x", v.cols,
                 " differs from ", n.value.rows, "x", n.value.cols);
        n.value = std::move(v);
    }

    // Rebinds the given leaves and recomputes every node in tape order.
    // Returns the last node's value.
    const DenseMatrix& forward_eval(const std::map<std::string, DenseMatrix>& inputs) {
        if (nodes_.empty()) fail("tape: forward_eval on empty tape");
        for (const auto& [name, v] : inputs) set_input(name, v);
        for (std::size_t i = 0; i < nodes_.size(); ++i) recompute(static_cast<NodeId>(i));
        return nodes_.back().value;
    }

    // Recompute the cached values of exactly these nodes, in the order given.
    // The caller is responsible for passing a dependency-closed, ascending
    // list (finite-difference checking uses this to re-evaluate only the
    // cone of one perturbed leaf).
    void recompute_nodes(const std::vector<NodeId>& ids) {
        for (NodeId id : ids) recompute(id);
    }

    // Ascending list of nodes in [0, limit] whose value depends on `leaf`.
    std::vector<NodeId> dependents(NodeId leaf, NodeId limit) const {
        check_id(leaf);
        check_id(limit);
        std::vector<char> hit(static_cast<std::size_t>(limit) + 1, 0);
        hit[static_cast<std::size_t>(leaf)] = 1;
        std::vector<NodeId> out;
        for (NodeId i = leaf + 1; i <= limit; ++i) {
            const TapeNode& n = nodes_[static_cast<std::size_t>(i)];
            bool dep = (n.a != kNoNode && hit[static_cast<std::size_t>(n.a)]) ||
                       (n.b != kNoNode && hit[static_cast<std::size_t>(n.b)]);
            if (!dep)
                for (NodeId x : n.list)
                    if (hit[static_cast<std::size_t>(x)]) { dep = true; break; }
            if (dep) {
                hit[static_cast<std::size_t>(i)] = 1;
                out.push_back(i);
            }
        }
        return out;
    }

    // ----- reverse pass ----------------------------------------------------

    // Appends first-order gradient nodes for dseed/dx and returns the node
    // holding the gradient for each requested id (kNoNode where seed does not
    // depend on it). The extension is itself differentiable, which is what
    // the gradient penalty replays for its second-order term.
    std::vector<NodeId> backward_nodes(NodeId seed, const std::vector<NodeId>& wrt) {
        check_id(seed);
        if (!node(seed).value.is_scalar())
            fail("backward: seed node ", seed, " (", op_name(node(seed).kind),
                 ") is ", node(seed).value.rows, "x", node(seed).value.cols,
                 ", expected a 1x1 scalar");
        const NodeId frontier = seed + 1;
        std::vector<NodeId> adj(static_cast<std::size_t>(frontier), kNoNode);
        adj[static_cast<std::size_t>(seed)] = constant_scalar(1.0);

        auto accumulate = [&](NodeId target, NodeId g) {
            if (target >= frontier) return;  // cannot happen: args precede their node
            NodeId& slot = adj[static_cast<std::size_t>(target)];
            slot = (slot == kNoNode) ? g : add(slot, g);
        };

        for (NodeId i = seed; i >= 0; --i) {
            const NodeId g = adj[static_cast<std::size_t>(i)];
            if (g == kNoNode) continue;
            // Copy the fields we need: pushing vjp nodes may reallocate nodes_.
            const TapeNode meta = shallow_meta(i);
            switch (meta.kind) {
                case OpKind::Input:
                case OpKind::Constant:
                case OpKind::StepMask:
                    break;
                case OpKind::Add:
                    accumulate(meta.a, g);
                    accumulate(meta.b, g);
                    break;
                case OpKind::Sub:
                    accumulate(meta.a, g);
                    accumulate(meta.b, scale(g, -1.0));
                    break;
                case OpKind::Mul:
                    accumulate(meta.a, mul(g, meta.b));
                    accumulate(meta.b, mul(g, meta.a));
                    break;
                case OpKind::ScalarMul:
                    accumulate(meta.a, sum(mul(g, meta.b)));
                    accumulate(meta.b, smul(meta.a, g));
                    break;
                case OpKind::Scale:
                    accumulate(meta.a, scale(g, meta.c0));
                    break;
                case OpKind::Shift:
                    accumulate(meta.a, g);
                    break;
                case OpKind::MatMul:
                    accumulate(meta.a, matmul(g, transpose(meta.b)));
                    accumulate(meta.b, matmul(transpose(meta.a), g));
                    break;
                case OpKind::Transpose:
                    accumulate(meta.a, transpose(g));
                    break;
                case OpKind::Sigmoid: {
                    const NodeId one_minus = shift(scale(i, -1.0), 1.0);
                    accumulate(meta.a, mul(g, mul(i, one_minus)));
                    break;
                }
                case OpKind::Softplus: {
                    // d/dx ln(1+exp(gamma(x+m))) = gamma * sigmoid(gamma(x+m))
                    const NodeId z = scale(shift(meta.a, meta.c1), meta.c0);
                    accumulate(meta.a, mul(g, scale(sigmoid(z), meta.c0)));
                    break;
                }
                case OpKind::Log:
                    accumulate(meta.a, mul(g, reciprocal(meta.a)));
                    break;
                case OpKind::Exp:
                    accumulate(meta.a, mul(g, i));
                    break;
                case OpKind::Relu:
                    accumulate(meta.a, mul(g, step_mask(meta.a, 0.0)));
                    break;
                case OpKind::LeakyRelu:
                    accumulate(meta.a, mul(g, step_mask(meta.a, meta.c0)));
                    break;
                case OpKind::Reciprocal:
                    accumulate(meta.a, scale(mul(g, mul(i, i)), -1.0));
                    break;
                case OpKind::Sqrt:
                    accumulate(meta.a, scale(mul(g, reciprocal(i)), 0.5));
                    break;
                case OpKind::L2Norm:
                    accumulate(meta.a, smul(mul(g, reciprocal(i)), meta.a));
                    break;
                case OpKind::EuclideanDistance: {
                    const NodeId w = smul(mul(g, reciprocal(i)), sub(meta.a, meta.b));
                    accumulate(meta.a, w);
                    accumulate(meta.b, scale(w, -1.0));
                    break;
                }
                case OpKind::ConcatRows: {
                    int off = 0;
                    for (NodeId part : meta.list) {
                        // copy dims: pushing vjp nodes reallocates nodes_
                        const int prows = value(part).rows;
                        const int pcols = value(part).cols;
                        accumulate(part, slice(g, off, 0, prows, pcols));
                        off += prows;
                    }
                    break;
                }
                case OpKind::Slice: {
                    const int arows = value(meta.a).rows;
                    const int acols = value(meta.a).cols;
                    accumulate(meta.a, pad(g, meta.i0, meta.i1, arows, acols));
                    break;
                }
                case OpKind::Pad:
                    accumulate(meta.a, slice(g, meta.i0, meta.i1,
                                             value(meta.a).rows, value(meta.a).cols));
                    break;
                case OpKind::Sum:
                    accumulate(meta.a, broadcast(g, value(meta.a).rows, value(meta.a).cols));
                    break;
                case OpKind::Broadcast:
                    accumulate(meta.a, sum(g));
                    break;
                case OpKind::RowSum:
                    accumulate(meta.a, tile_cols(g, value(meta.a).cols));
                    break;
                case OpKind::ColSum:
                    accumulate(meta.a, tile_rows(g, value(meta.a).rows));
                    break;
                case OpKind::TileCols:
                    accumulate(meta.a, row_sum(g));
                    break;
                case OpKind::TileRows:
                    accumulate(meta.a, col_sum(g));
                    break;
                case OpKind::LogSumExp: {
                    const NodeId sm = exp(sub(meta.a, broadcast(i, value(meta.a).rows, 1)));
                    accumulate(meta.a, smul(g, sm));
                    break;
                }
            }
        }

        std::vector<NodeId> out(wrt.size(), kNoNode);
        for (std::size_t k = 0; k < wrt.size(); ++k) {
            check_id(wrt[k]);
            if (wrt[k] < frontier) out[k] = adj[static_cast<std::size_t>(wrt[k])];
        }
        return out;
    }

    // Gradient values of seed wrt every named input leaf; leaves the seed
    // does not touch get zero matrices of their own shape.
    std::map<std::string, DenseMatrix> backward_grad(NodeId seed) {
        std::vector<NodeId> wrt;
        std::vector<std::string> names;
        for (const auto& [name, id] : inputs_) {
            names.push_back(name);
            wrt.push_back(id);
        }
        const std::vector<NodeId> gnodes = backward_nodes(seed, wrt);
        std::map<std::string, DenseMatrix> out;
        for (std::size_t k = 0; k < names.size(); ++k) {
            const DenseMatrix& leaf = value(wrt[k]);
            out[names[k]] = (gnodes[k] == kNoNode)
                                ? DenseMatrix(leaf.rows, leaf.cols)
                                : value(gnodes[k]);
        }
        return out;
    }

private:
    std::vector<TapeNode> nodes_;
    std::map<std::string, NodeId> inputs_;

    void check_id(NodeId id) const {
        if (id < 0 || id >= size()) fail("tape: node id ", id, " out of range");
    }

    void require_scalar(NodeId id, const char* what) const {
        if (!value(id).is_scalar())
            fail(what, ": node ", id, " is ", value(id).rows, "x", value(id).cols,
                 ", expected 1x1");
    }

    TapeNode shallow_meta(NodeId id) const {
        const TapeNode& n = nodes_[static_cast<std::size_t>(id)];
        TapeNode m;
        m.kind = n.kind;
        m.a = n.a;
        m.b = n.b;
        m.list = n.list;
        m.c0 = n.c0;
        m.c1 = n.c1;
        m.i0 = n.i0;
        m.i1 = n.i1;
        m.i2 = n.i2;
        m.i3 = n.i3;
        return m;
    }

    NodeId push_raw(TapeNode n) {
        nodes_.push_back(std::move(n));
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    NodeId push_unary(OpKind k, NodeId a) {
        TapeNode n;
        n.kind = k;
        n.a = a;
        return push(std::move(n));
    }

    NodeId push_binary(OpKind k, NodeId a, NodeId b) {
        TapeNode n;
        n.kind = k;
        n.a = a;
        n.b = b;
        return push(std::move(n));
    }

    NodeId push(TapeNode n) {
        if (n.a != kNoNode) check_id(n.a);
        if (n.b != kNoNode) check_id(n.b);
        for (NodeId x : n.list) check_id(x);
        const NodeId id = static_cast<NodeId>(nodes_.size());
        n.value = eval_node(n, id);  // evaluate first: a shape error leaves the tape unchanged
        return push_raw(std::move(n));
    }

    void recompute(NodeId id) {
        TapeNode& n = nodes_[static_cast<std::size_t>(id)];
        if (n.kind == OpKind::Input || n.kind == OpKind::Constant) return;
        n.value = eval_node(n, id);
    }

    [[noreturn]] void shape_fail(const TapeNode& n, NodeId id, const std::string& detail) const {
        std::string shapes;
        if (n.a != kNoNode)
            shapes += cat(" lhs=", value(n.a).rows, "x", value(n.a).cols);
        if (n.b != kNoNode)
            shapes += cat(" rhs=", value(n.b).rows, "x", value(n.b).cols);
        fail("tape node ", id, " (", op_name(n.kind), "): ", detail, shapes);
    }

    DenseMatrix eval_node(const TapeNode& n, NodeId id) const {
        auto A = [&]() -> const DenseMatrix& { return nodes_[static_cast<std::size_t>(n.a)].value; };
        auto B = [&]() -> const DenseMatrix& { return nodes_[static_cast<std::size_t>(n.b)].value; };
        switch (n.kind) {
            case OpKind::Input:
            case OpKind::Constant:
                return n.value;
            case OpKind::Add:
            case OpKind::Sub:
            case OpKind::Mul: {
                if (!A().same_shape(B())) shape_fail(n, id, "operand shapes differ");
                DenseMatrix out = A();
                const DenseMatrix& rhs = B();
                if (n.kind == OpKind::Add)
                    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += rhs.data[i];
                else if (n.kind == OpKind::Sub)
                    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= rhs.data[i];
                else
                    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= rhs.data[i];
                return out;
            }
            case OpKind::ScalarMul: {
                const double s = A().data[0];
                DenseMatrix out = B();
                for (double& v : out.data) v *= s;
                return out;
            }
            case OpKind::Scale: {
                DenseMatrix out = A();
                for (double& v : out.data) v *= n.c0;
                return out;
            }
            case OpKind::Shift: {
                DenseMatrix out = A();
                for (double& v : out.data) v += n.c0;
                return out;
            }
            case OpKind::MatMul: {
                if (A().cols != B().rows) shape_fail(n, id, "inner dimensions differ");
                DenseMatrix out;
                matmul_into(A(), B(), out);
                return out;
            }
            case OpKind::Transpose:
                return transposed(A());
            case OpKind::Sigmoid: {
                DenseMatrix out = A();
                for (double& v : out.data) v = sigmoid_scalar(v);
                return out;
            }
            case OpKind::Softplus: {
                DenseMatrix out = A();
                for (double& v : out.data) v = softplus_scalar(n.c0 * (v + n.c1));
                return out;
            }
            case OpKind::Log: {
                DenseMatrix out = A();
                for (double& v : out.data) v = std::log(v);
                return out;
            }
            case OpKind::Exp: {
                DenseMatrix out = A();
                for (double& v : out.data) v = std::exp(v);
                return out;
            }
            case OpKind::Relu: {
                DenseMatrix out = A();
                // Written so NaN passes through instead of clamping to zero.
                for (double& v : out.data) v = v < 0.0 ? 0.0 : v;
                return out;
            }
            case OpKind::LeakyRelu: {
                DenseMatrix out = A();
                for (double& v : out.data) v = v > 0.0 ? v : n.c0 * v;
                return out;
            }
            case OpKind::StepMask: {
                DenseMatrix out = A();
                for (double& v : out.data) v = v > 0.0 ? 1.0 : n.c0;
                return out;
            }
            case OpKind::Reciprocal: {
                DenseMatrix out = A();
                for (double& v : out.data) v = 1.0 / v;
                return out;
            }
            case OpKind::Sqrt: {
                DenseMatrix out = A();
                for (double& v : out.data) v = std::sqrt(v);
                return out;
            }
            case OpKind::L2Norm:
                return DenseMatrix::scalar(A().frobenius_norm());
            case OpKind::EuclideanDistance: {
                if (!A().same_shape(B())) shape_fail(n, id, "operand shapes differ");
                return DenseMatrix::scalar(
                    euclidean(A().data.data(), B().data.data(), static_cast<int>(A().size())));
            }
            case OpKind::ConcatRows: {
                const int cols = nodes_[static_cast<std::size_t>(n.list[0])].value.cols;
                int rows = 0;
                for (NodeId part : n.list) {
                    const DenseMatrix& pv = nodes_[static_cast<std::size_t>(part)].value;
                    if (pv.cols != cols)
                        shape_fail(n, id, cat("operand has ", pv.cols, " cols, expected ", cols));
                    rows += pv.rows;
                }
                DenseMatrix out(rows, cols);
                int off = 0;
                for (NodeId part : n.list) {
                    const DenseMatrix& pv = nodes_[static_cast<std::size_t>(part)].value;
                    for (int r = 0; r < pv.rows; ++r)
                        for (int c = 0; c < cols; ++c) out.at(off + r, c) = pv.at(r, c);
                    off += pv.rows;
                }
                return out;
            }
            case OpKind::Slice: {
                const DenseMatrix& av = A();
                if (n.i0 < 0 || n.i1 < 0 || n.i2 <= 0 || n.i3 <= 0 ||
                    n.i0 + n.i2 > av.rows || n.i1 + n.i3 > av.cols)
                    shape_fail(n, id, cat("slice [", n.i0, ",", n.i1, ",", n.i2, ",", n.i3,
                                          "] outside ", av.rows, "x", av.cols));
                DenseMatrix out(n.i2, n.i3);
                for (int r = 0; r < n.i2; ++r)
                    for (int c = 0; c < n.i3; ++c) out.at(r, c) = av.at(n.i0 + r, n.i1 + c);
                return out;
            }
            case OpKind::Pad: {
                const DenseMatrix& av = A();
                if (n.i0 < 0 || n.i1 < 0 || n.i0 + av.rows > n.i2 || n.i1 + av.cols > n.i3)
                    shape_fail(n, id, cat("pad target ", n.i2, "x", n.i3, " too small"));
                DenseMatrix out(n.i2, n.i3);
                for (int r = 0; r < av.rows; ++r)
                    for (int c = 0; c < av.cols; ++c) out.at(n.i0 + r, n.i1 + c) = av.at(r, c);
                return out;
            }
            case OpKind::Sum: {
                double s = 0.0;
                for (double v : A().data) s += v;
                return DenseMatrix::scalar(s);
            }
            case OpKind::Broadcast:
                return DenseMatrix(n.i0, n.i1, A().data[0]);
            case OpKind::RowSum: {
                const DenseMatrix& av = A();
                DenseMatrix out(av.rows, 1);
                for (int r = 0; r < av.rows; ++r) {
                    double s = 0.0;
                    const double* row = av.row(r);
                    for (int c = 0; c < av.cols; ++c) s += row[c];
                    out.at(r, 0) = s;
                }
                return out;
            }
            case OpKind::ColSum: {
                const DenseMatrix& av = A();
                DenseMatrix out(1, av.cols);
                for (int r = 0; r < av.rows; ++r) {
                    const double* row = av.row(r);
                    for (int c = 0; c < av.cols; ++c) out.at(0, c) += row[c];
                }
                return out;
            }
            case OpKind::TileCols: {
                const DenseMatrix& av = A();
                if (av.cols != 1) shape_fail(n, id, "operand must be a column vector");
                DenseMatrix out(av.rows, n.i0);
                for (int r = 0; r < av.rows; ++r)
                    for (int c = 0; c < n.i0; ++c) out.at(r, c) = av.at(r, 0);
                return out;
            }
            case OpKind::TileRows: {
                const DenseMatrix& av = A();
                if (av.rows != 1) shape_fail(n, id, "operand must be a row vector");
                DenseMatrix out(n.i0, av.cols);
                for (int r = 0; r < n.i0; ++r)
                    for (int c = 0; c < av.cols; ++c) out.at(r, c) = av.at(0, c);
                return out;
            }
            case OpKind::LogSumExp: {
                const DenseMatrix& av = A();
                if (av.cols != 1 || av.rows < 1)
                    shape_fail(n, id, "operand must be a non-empty column vector");
                double m = av.data[0];
                for (double v : av.data) m = std::max(m, v);
                double s = 0.0;
                for (double v : av.data) s += std::exp(v - m);
                return DenseMatrix::scalar(m + std::log(s));
            }
        }
        fail("tape: unhandled op kind");
    }
};

} // namespace jema
