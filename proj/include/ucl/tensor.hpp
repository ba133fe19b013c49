#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ucl/common.hpp"

// Dense row-major tensors with reverse-mode automatic differentiation over an
// explicit computation record (a tape). The scalar type is a template
// parameter: float is the training dtype, double exists for gradient checking
// and oracle tests.
//
// Tracking model: a tape hands out tracked tensors via TapeT::track(). Any op
// whose inputs include a tracked tensor appends a node to that tape and
// returns a tracked result. Tensors without a node handle are constants.
// backward() is single-shot per record and must run before any in-place
// parameter update, because nodes keep shared references to input buffers.

namespace ucl {

template <typename T>
class TapeT;
template <typename T>
class GradMapT;

template <typename T>
class TensorT {
public:
    TensorT() : shape_{0}, data_(std::make_shared<std::vector<T>>()) {}

    explicit TensorT(Shape shape)
        : shape_(std::move(shape)),
          data_(std::make_shared<std::vector<T>>(shape_numel(shape_), T(0))) {}

    TensorT(Shape shape, std::vector<T> values)
        : shape_(std::move(shape)), data_(std::make_shared<std::vector<T>>(std::move(values))) {
        if (data_->size() != shape_numel(shape_))
            throw ValidationError("tensor: " + std::to_string(data_->size()) +
                                  " values do not fill shape " + shape_str(shape_));
    }

    static TensorT zeros(Shape shape) { return TensorT(std::move(shape)); }

    static TensorT full(Shape shape, T v) {
        TensorT t(std::move(shape));
        for (T& x : *t.data_) x = v;
        return t;
    }

    static TensorT ones(Shape shape) { return full(std::move(shape), T(1)); }

    static TensorT scalar(T v) { return TensorT({1}, {v}); }

    static TensorT identity(std::size_t n) {
        TensorT t({n, n});
        for (std::size_t i = 0; i < n; ++i) (*t.data_)[i * n + i] = T(1);
        return t;
    }

    const Shape& shape() const { return shape_; }
    std::size_t ndim() const { return shape_.size(); }
    std::size_t numel() const { return data_->size(); }

    std::vector<T>& data() { return *data_; }
    const std::vector<T>& data() const { return *data_; }
    const std::shared_ptr<std::vector<T>>& storage() const { return data_; }

    T item() const {
        if (numel() != 1)
            throw ValidationError("item: tensor " + shape_str(shape_) + " is not a scalar");
        return (*data_)[0];
    }

    /// Deep copy (fresh buffer, tracking stripped).
    TensorT clone() const { return TensorT(shape_, *data_); }

    /// Same buffer, tracking stripped.
    TensorT detached() const {
        TensorT t;
        t.shape_ = shape_;
        t.data_ = data_;
        return t;
    }

    bool tracked() const { return node_ >= 0; }
    int node() const { return node_; }
    TapeT<T>* tape() const { return tape_; }

    /// For op implementations: binds this tensor to a record node.
    void bind_node(TapeT<T>* tape, int node) {
        tape_ = tape;
        node_ = node;
    }

    /// Converts between float and double tensors.
    template <typename U>
    TensorT<U> cast() const {
        std::vector<U> out(data_->size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<U>((*data_)[i]);
        return TensorT<U>(shape_, std::move(out));
    }

private:
    Shape shape_;
    std::shared_ptr<std::vector<T>> data_;
    TapeT<T>* tape_ = nullptr;
    int node_ = -1;

    friend class TapeT<T>;
};

/// Ordered record of executed operations; supports one backward replay.
template <typename T>
class TapeT {
public:
    struct Node {
        std::string op;
        Shape shape;
        std::vector<int> parents;
        std::function<void(TapeT&, const std::vector<T>&)> pull;
    };

    TapeT() = default;
    TapeT(const TapeT&) = delete;
    TapeT& operator=(const TapeT&) = delete;

    /// Registers a leaf (typically a parameter). The returned tensor shares
    /// the input's buffer and participates in differentiation.
    TensorT<T> track(const TensorT<T>& t) {
        if (t.tracked() && t.tape_ == this) return t;
        TensorT<T> out = t.detached();
        out.tape_ = this;
        out.node_ = push("leaf", out.shape(), {}, nullptr);
        return out;
    }

    int push(std::string op, Shape shape, std::vector<int> parents,
             std::function<void(TapeT&, const std::vector<T>&)> pull) {
        int id = static_cast<int>(nodes_.size());
        for (int p : parents)
            if (p >= id) throw ValidationError("record: parent does not precede node");
        nodes_.push_back(Node{std::move(op), std::move(shape), std::move(parents), std::move(pull)});
        grads_.emplace_back();
        return id;
    }

    std::size_t size() const { return nodes_.size(); }
    const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }

    /// Count of non-leaf nodes with the given op name (structural tests).
    std::size_t count_ops(std::string_view op) const {
        std::size_t n = 0;
        for (const auto& nd : nodes_)
            if (nd.op == op) ++n;
        return n;
    }

    bool spent() const { return spent_; }

    std::vector<T>& grad_buffer(int id) {
        auto& g = grads_[static_cast<std::size_t>(id)];
        if (g.empty()) g.assign(shape_numel(nodes_[static_cast<std::size_t>(id)].shape), T(0));
        return g;
    }

    bool has_grad(int id) const { return !grads_[static_cast<std::size_t>(id)].empty(); }

private:
    std::vector<Node> nodes_;
    std::vector<std::vector<T>> grads_;
    bool spent_ = false;

    template <typename U>
    friend GradMapT<U> backward(const TensorT<U>& loss);
};

/// Gradients produced by one backward pass, keyed by node handle. Valid while
/// the originating record is alive.
template <typename T>
class GradMapT {
public:
    /// Gradient of a tracked ancestor of the loss; absent otherwise.
    std::optional<TensorT<T>> find(const TensorT<T>& t) const {
        if (!t.tracked() || t.tape() != tape_) return std::nullopt;
        const auto& g = grads_[static_cast<std::size_t>(t.node())];
        if (g.empty()) return std::nullopt;
        return TensorT<T>(shapes_[static_cast<std::size_t>(t.node())], g);
    }

    TensorT<T> at(const TensorT<T>& t) const {
        auto g = find(t);
        if (!g)
            throw ValidationError("gradient map: tensor did not receive a gradient");
        return *g;
    }

    /// Gradient of a tracked tensor, zeros if it was not an ancestor.
    TensorT<T> at_or_zero(const TensorT<T>& t) const {
        if (!t.tracked() || t.tape() != tape_)
            throw ValidationError("gradient map: tensor does not belong to this record");
        auto g = find(t);
        return g ? *g : TensorT<T>(t.shape());
    }

private:
    GradMapT(const TapeT<T>* tape, std::vector<Shape> shapes, std::vector<std::vector<T>> grads)
        : tape_(tape), shapes_(std::move(shapes)), grads_(std::move(grads)) {}

    const TapeT<T>* tape_;
    std::vector<Shape> shapes_;
    std::vector<std::vector<T>> grads_;

    template <typename U>
    friend GradMapT<U> backward(const TensorT<U>& loss);
};

/// Reverse replay over the record that produced `loss`. Visits each node at
/// most once, in reverse execution order. Second call on a record is an error.
template <typename T>
GradMapT<T> backward(const TensorT<T>& loss) {
    if (!loss.tracked())
        throw ValidationError("backward: loss is detached (no computation record)");
    if (loss.numel() != 1)
        throw ValidationError("backward: loss must be a scalar, got " + shape_str(loss.shape()));
    TapeT<T>& tape = *loss.tape();
    if (tape.spent_) throw ValidationError("backward: record already consumed");
    tape.spent_ = true;

    tape.grad_buffer(loss.node())[0] = T(1);
    for (int id = static_cast<int>(tape.nodes_.size()) - 1; id >= 0; --id) {
        auto& node = tape.nodes_[static_cast<std::size_t>(id)];
        if (!node.pull) continue;
        if (!tape.has_grad(id)) continue; // not an ancestor of the loss
        node.pull(tape, tape.grads_[static_cast<std::size_t>(id)]);
    }

    std::vector<Shape> shapes;
    shapes.reserve(tape.nodes_.size());
    for (const auto& n : tape.nodes_) shapes.push_back(n.shape);
    return GradMapT<T>(&tape, std::move(shapes), std::move(tape.grads_));
}

// ---------------------------------------------------------------------------
// broadcasting (NumPy-style, aligned at trailing dimensions)

struct BroadcastPlan {
    Shape out;
    std::vector<std::size_t> stride_a;
    std::vector<std::size_t> stride_b;
    bool same_shape;
};

inline BroadcastPlan make_broadcast_plan(const char* op, const Shape& a, const Shape& b) {
    BroadcastPlan plan;
    plan.same_shape = (a == b);
    std::size_t nd = std::max(a.size(), b.size());
    plan.out.resize(nd);
    for (std::size_t d = 0; d < nd; ++d) {
        std::size_t da = d + a.size() >= nd ? a[d + a.size() - nd] : 1;
        std::size_t db = d + b.size() >= nd ? b[d + b.size() - nd] : 1;
        if (da != db && da != 1 && db != 1)
            throw ValidationError(std::string(op) + ": shapes " + shape_str(a) + " and " +
                                  shape_str(b) + " are not broadcast-compatible");
        plan.out[d] = std::max(da, db);
    }
    auto strides_for = [&](const Shape& s) {
        std::vector<std::size_t> st(nd, 0);
        std::size_t acc = 1;
        for (std::size_t d = s.size(); d-- > 0;) {
            std::size_t od = d + nd - s.size();
            st[od] = (s[d] == 1 && plan.out[od] != 1) ? 0 : acc;
            acc *= s[d];
        }
        return st;
    };
    plan.stride_a = strides_for(a);
    plan.stride_b = strides_for(b);
    return plan;
}

/// Calls fn(out_index, a_index, b_index) for every element of the broadcast
/// output, in row-major order.
template <typename Fn>
inline void for_each_broadcast(const BroadcastPlan& plan, Fn&& fn) {
    std::size_t n = shape_numel(plan.out);
    if (n == 0) return;
    std::size_t nd = plan.out.size();
    std::vector<std::size_t> idx(nd, 0);
    std::size_t oa = 0, ob = 0;
    for (std::size_t i = 0; i < n; ++i) {
        fn(i, oa, ob);
        for (std::size_t d = nd; d-- > 0;) {
            ++idx[d];
            oa += plan.stride_a[d];
            ob += plan.stride_b[d];
            if (idx[d] < plan.out[d]) break;
            oa -= plan.stride_a[d] * plan.out[d];
            ob -= plan.stride_b[d] * plan.out[d];
            idx[d] = 0;
        }
    }
}

namespace detail {

template <typename T>
TapeT<T>* merge_tapes(const char* op, const TensorT<T>& a, const TensorT<T>& b) {
    if (a.tracked() && b.tracked() && a.tape() != b.tape())
        throw ValidationError(std::string(op) + ": operands recorded on different records");
    if (a.tracked()) return a.tape();
    if (b.tracked()) return b.tape();
    return nullptr;
}

} // namespace detail

// ---------------------------------------------------------------------------
// elementwise binary ops

namespace detail {

// Shared skeleton for binary elementwise ops. Fwd computes the value;
// PullA/PullB map (gout, a, b, out) to the per-element gradient contribution.
template <typename T, typename Fwd, typename PullA, typename PullB>
TensorT<T> binary_ew(const char* name, const TensorT<T>& a, const TensorT<T>& b, Fwd fwd,
                     PullA pull_a, PullB pull_b) {
    BroadcastPlan plan = make_broadcast_plan(name, a.shape(), b.shape());
    TensorT<T> out(plan.out);
    const auto& av = a.data();
    const auto& bv = b.data();
    auto& ov = out.data();
    if (plan.same_shape) {
        for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = fwd(av[i], bv[i], i);
    } else {
        for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
            ov[i] = fwd(av[ia], bv[ib], i);
        });
    }

    TapeT<T>* tape = merge_tapes(name, a, b);
    if (!tape) return out;

    int pa = a.tracked() ? a.node() : -1;
    int pb = b.tracked() ? b.node() : -1;
    auto asave = a.storage();
    auto bsave = b.storage();
    auto osave = out.storage();
    std::vector<int> parents;
    if (pa >= 0) parents.push_back(pa);
    if (pb >= 0) parents.push_back(pb);

    auto pull = [plan, pa, pb, asave, bsave, osave, pull_a, pull_b](
                    TapeT<T>& tape_, const std::vector<T>& gout) {
        const std::vector<T>* avp = asave ? asave.get() : nullptr;
        const std::vector<T>* bvp = bsave ? bsave.get() : nullptr;
        const std::vector<T>& ovp = *osave;
        std::vector<T>* ga = pa >= 0 ? &tape_.grad_buffer(pa) : nullptr;
        std::vector<T>* gb = pb >= 0 ? &tape_.grad_buffer(pb) : nullptr;
        if (plan.same_shape) {
            for (std::size_t i = 0; i < gout.size(); ++i) {
                if (ga) (*ga)[i] += pull_a(gout[i], (*avp)[i], (*bvp)[i], ovp[i]);
                if (gb) (*gb)[i] += pull_b(gout[i], (*avp)[i], (*bvp)[i], ovp[i]);
            }
        } else {
            for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
                if (ga) (*ga)[ia] += pull_a(gout[i], (*avp)[ia], (*bvp)[ib], ovp[i]);
                if (gb) (*gb)[ib] += pull_b(gout[i], (*avp)[ia], (*bvp)[ib], ovp[i]);
            });
        }
    };
    out.bind_node(tape, tape->push(name, out.shape(), std::move(parents), std::move(pull)));
    return out;
}

// Unary skeleton; Pull maps (gout, a, out) to the gradient element.
template <typename T, typename Fwd, typename Pull>
TensorT<T> unary_ew(const char* name, const TensorT<T>& a, Fwd fwd, Pull pull_fn) {
    TensorT<T> out(a.shape());
    const auto& av = a.data();
    auto& ov = out.data();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = fwd(av[i], i);
    if (!a.tracked()) return out;

    TapeT<T>* tape = a.tape();
    int pa = a.node();
    auto asave = a.storage();
    auto osave = out.storage();
    auto pull = [pa, asave, osave, pull_fn](TapeT<T>& tape_, const std::vector<T>& gout) {
        auto& ga = tape_.grad_buffer(pa);
        const auto& av_ = *asave;
        const auto& ov_ = *osave;
        for (std::size_t i = 0; i < gout.size(); ++i) ga[i] += pull_fn(gout[i], av_[i], ov_[i]);
    };
    out.bind_node(tape, tape->push(name, out.shape(), {pa}, std::move(pull)));
    return out;
}

} // namespace detail

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
    return detail::binary_ew<T>(
        "add", a, b, [](T x, T y, std::size_t) { return x + y; },
        [](T g, T, T, T) { return g; }, [](T g, T, T, T) { return g; });
}

template <typename T>
TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b) {
    return detail::binary_ew<T>(
        "sub", a, b, [](T x, T y, std::size_t) { return x - y; },
        [](T g, T, T, T) { return g; }, [](T g, T, T, T) { return -g; });
}

template <typename T>
TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b) {
    return detail::binary_ew<T>(
        "mul", a, b, [](T x, T y, std::size_t) { return x * y; },
        [](T g, T, T y, T) { return g * y; }, [](T g, T x, T, T) { return g * x; });
}

template <typename T>
TensorT<T> div(const TensorT<T>& a, const TensorT<T>& b) {
    return detail::binary_ew<T>(
        "div", a, b,
        [](T x, T y, std::size_t i) {
            if (y == T(0))
                throw ValidationError("div: divisor is zero at flat index " + std::to_string(i));
            return x / y;
        },
        [](T g, T, T y, T) { return g / y; },
        [](T g, T x, T y, T) { return -g * x / (y * y); });
}

template <typename T>
TensorT<T> neg(const TensorT<T>& a) {
    return detail::unary_ew<T>(
        "neg", a, [](T x, std::size_t) { return -x; }, [](T g, T, T) { return -g; });
}

template <typename T>
TensorT<T> exp(const TensorT<T>& a) {
    return detail::unary_ew<T>(
        "exp", a, [](T x, std::size_t) { return std::exp(x); },
        [](T g, T, T o) { return g * o; });
}

template <typename T>
TensorT<T> log(const TensorT<T>& a) {
    return detail::unary_ew<T>(
        "log", a,
        [](T x, std::size_t i) {
            if (!(x > T(0)))
                throw ValidationError("log: non-positive input at flat index " + std::to_string(i) +
                                      " (value=" + std::to_string(static_cast<double>(x)) + ")");
            return std::log(x);
        },
        [](T g, T x, T) { return g / x; });
}

/// Elementwise power with a fixed scalar exponent.
template <typename T>
TensorT<T> pow(const TensorT<T>& a, T exponent) {
    return detail::unary_ew<T>(
        "pow", a,
        [exponent](T x, std::size_t i) {
            if (x < T(0) && exponent != std::floor(exponent))
                throw ValidationError("pow: negative base with non-integer exponent at flat index " +
                                      std::to_string(i));
            return std::pow(x, exponent);
        },
        [exponent](T g, T x, T) { return g * exponent * std::pow(x, exponent - T(1)); });
}

/// relu'(0) = 0 by convention.
template <typename T>
TensorT<T> relu(const TensorT<T>& a) {
    return detail::unary_ew<T>(
        "relu", a, [](T x, std::size_t) { return x > T(0) ? x : T(0); },
        [](T g, T x, T) { return x > T(0) ? g : T(0); });
}

/// leaky_relu'(0) = negative_slope by convention.
template <typename T>
TensorT<T> leaky_relu(const TensorT<T>& a, T negative_slope) {
    return detail::unary_ew<T>(
        "leaky_relu", a,
        [negative_slope](T x, std::size_t) { return x > T(0) ? x : negative_slope * x; },
        [negative_slope](T g, T x, T) { return x > T(0) ? g : negative_slope * g; });
}

/// max(x, floor); gradient passes only where x > floor.
template <typename T>
TensorT<T> clamp_min(const TensorT<T>& a, T floor) {
    return detail::unary_ew<T>(
        "clamp_min", a, [floor](T x, std::size_t) { return x > floor ? x : floor; },
        [floor](T g, T x, T) { return x > floor ? g : T(0); });
}

// scalar right/left-hand variants

template <typename T>
TensorT<T> add(const TensorT<T>& a, T s) {
    return detail::unary_ew<T>(
        "add", a, [s](T x, std::size_t) { return x + s; }, [](T g, T, T) { return g; });
}

template <typename T>
TensorT<T> sub(const TensorT<T>& a, T s) {
    return add(a, -s);
}

template <typename T>
TensorT<T> sub(T s, const TensorT<T>& a) {
    return detail::unary_ew<T>(
        "sub", a, [s](T x, std::size_t) { return s - x; }, [](T g, T, T) { return -g; });
}

template <typename T>
TensorT<T> mul(const TensorT<T>& a, T s) {
    return detail::unary_ew<T>(
        "mul", a, [s](T x, std::size_t) { return x * s; }, [s](T g, T, T) { return g * s; });
}

template <typename T>
TensorT<T> div(const TensorT<T>& a, T s) {
    if (s == T(0)) throw ValidationError("div: scalar divisor is zero");
    return mul(a, T(1) / s);
}

template <typename T>
TensorT<T> div(T s, const TensorT<T>& a) {
    return detail::unary_ew<T>(
        "div", a,
        [s](T x, std::size_t i) {
            if (x == T(0))
                throw ValidationError("div: divisor is zero at flat index " + std::to_string(i));
            return s / x;
        },
        [s](T g, T x, T) { return -g * s / (x * x); });
}

template <typename T>
TensorT<T> operator+(const TensorT<T>& a, const TensorT<T>& b) { return add(a, b); }
template <typename T>
TensorT<T> operator-(const TensorT<T>& a, const TensorT<T>& b) { return sub(a, b); }
template <typename T>
TensorT<T> operator*(const TensorT<T>& a, const TensorT<T>& b) { return mul(a, b); }
template <typename T>
TensorT<T> operator/(const TensorT<T>& a, const TensorT<T>& b) { return div(a, b); }
template <typename T>
TensorT<T> operator+(const TensorT<T>& a, T s) { return add(a, s); }
template <typename T>
TensorT<T> operator+(T s, const TensorT<T>& a) { return add(a, s); }
template <typename T>
TensorT<T> operator-(const TensorT<T>& a, T s) { return sub(a, s); }
template <typename T>
TensorT<T> operator-(T s, const TensorT<T>& a) { return sub(s, a); }
template <typename T>
TensorT<T> operator*(const TensorT<T>& a, T s) { return mul(a, s); }
template <typename T>
TensorT<T> operator*(T s, const TensorT<T>& a) { return mul(a, s); }
template <typename T>
TensorT<T> operator/(const TensorT<T>& a, T s) { return div(a, s); }
template <typename T>
TensorT<T> operator/(T s, const TensorT<T>& a) { return div(s, a); }
template <typename T>
TensorT<T> operator-(const TensorT<T>& a) { return neg(a); }

// ---------------------------------------------------------------------------
// dense matrix kernels (also reused by convolution)

namespace detail {

// C[m,n] += A[m,k] * B[k,n]
template <typename T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        T* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            T av = arow[p];
            const T* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[m,k] += A[m,n] * B^T where B is [k,n]
template <typename T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = a + i * n;
        T* crow = c + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const T* brow = b + p * n;
            T acc = T(0);
            for (std::size_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
            crow[p] += acc;
        }
    }
}

// C[k,n] += A^T * B where A is [m,k], B is [m,n]
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        const T* brow = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            T av = arow[p];
            T* crow = c + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

} // namespace detail

template <typename T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b) {
    if (a.ndim() != 2 || b.ndim() != 2)
        throw ValidationError("matmul: expects 2-D operands, got " + shape_str(a.shape()) +
                              " and " + shape_str(b.shape()));
    std::size_t m = a.shape()[0], k = a.shape()[1], k2 = b.shape()[0], n = b.shape()[1];
    if (k != k2)
        throw ValidationError("matmul: inner dimensions disagree: " + shape_str(a.shape()) +
                              " vs " + shape_str(b.shape()));
    TensorT<T> out({m, n});
    detail::gemm_nn(a.data().data(), b.data().data(), out.data().data(), m, k, n);

    TapeT<T>* tape = detail::merge_tapes("matmul", a, b);
    if (!tape) return out;
    int pa = a.tracked() ? a.node() : -1;
    int pb = b.tracked() ? b.node() : -1;
    auto asave = a.storage();
    auto bsave = b.storage();
    std::vector<int> parents;
    if (pa >= 0) parents.push_back(pa);
    if (pb >= 0) parents.push_back(pb);
    auto pull = [pa, pb, asave, bsave, m, k, n](TapeT<T>& tape_, const std::vector<T>& gout) {
        if (pa >= 0) // dA += G * B^T
            detail::gemm_nt(gout.data(), bsave->data(), tape_.grad_buffer(pa).data(), m, n, k);
        if (pb >= 0) // dB += A^T * G
            detail::gemm_tn(asave->data(), gout.data(), tape_.grad_buffer(pb).data(), m, k, n);
    };
    out.bind_node(tape, tape->push("matmul", out.shape(), std::move(parents), std::move(pull)));
    return out;
}

template <typename T>
TensorT<T> transpose(const TensorT<T>& a) {
    if (a.ndim() != 2)
        throw ValidationError("transpose: expects a 2-D tensor, got " + shape_str(a.shape()));
    std::size_t r = a.shape()[0], c = a.shape()[1];
    TensorT<T> out({c, r});
    const auto& av = a.data();
    auto& ov = out.data();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) ov[j * r + i] = av[i * c + j];
    if (!a.tracked()) return out;
    TapeT<T>* tape = a.tape();
    int pa = a.node();
    auto pull = [pa, r, c](TapeT<T>& tape_, const std::vector<T>& gout) {
        auto& ga = tape_.grad_buffer(pa);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += gout[j * r + i];
    };
    out.bind_node(tape, tape->push("transpose", out.shape(), {pa}, std::move(pull)));
    return out;
}

template <typename T>
TensorT<T> sum(const TensorT<T>& a) {
    T acc = T(0);
    for (T v : a.data()) acc += v;
    TensorT<T> out = TensorT<T>::scalar(acc);
    if (!a.tracked()) return out;
    TapeT<T>* tape = a.tape();
    int pa = a.node();
    auto pull = [pa](TapeT<T>& tape_, const std::vector<T>& gout) {
        auto& ga = tape_.grad_buffer(pa);
        for (T& g : ga) g += gout[0];
    };
    out.bind_node(tape, tape->push("sum", out.shape(), {pa}, std::move(pull)));
    return out;
}

template <typename T>
TensorT<T> mean(const TensorT<T>& a) {
    if (a.numel() == 0) throw ValidationError("mean: empty tensor");
    return sum(a) * (T(1) / static_cast<T>(a.numel()));
}

/// Sums a [r, c] matrix across columns into [r, 1].
template <typename T>
TensorT<T> row_sum(const TensorT<T>& a) {
    if (a.ndim() != 2)
        throw ValidationError("row_sum: expects a 2-D tensor, got " + shape_str(a.shape()));
    std::size_t r = a.shape()[0], c = a.shape()[1];
    TensorT<T> out({r, 1});
    const auto& av = a.data();
    auto& ov = out.data();
    for (std::size_t i = 0; i < r; ++i) {
        T acc = T(0);
        for (std::size_t j = 0; j < c; ++j) acc += av[i * c + j];
        ov[i] = acc;
    }
    if (!a.tracked()) return out;
    TapeT<T>* tape = a.tape();
    int pa = a.node();
    auto pull = [pa, r, c](TapeT<T>& tape_, const std::vector<T>& gout) {
        auto& ga = tape_.grad_buffer(pa);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += gout[i];
    };
    out.bind_node(tape, tape->push("row_sum", out.shape(), {pa}, std::move(pull)));
    return out;
}

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;
using Tape = TapeT<float>;
using Tape64 = TapeT<double>;
using GradMap = GradMapT<float>;
using GradMap64 = GradMapT<double>;

} // namespace ucl
