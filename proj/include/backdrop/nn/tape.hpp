// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "backdrop/core/tensor.hpp"

namespace backdrop::nn {

template <class T>
class Tape;

/// Handle to a node on a Tape. Cheap to copy; invalidated by Tape::clear().
template <class T>
struct Var {
    Tape<T>* tape = nullptr;
    int idx = -1;

    bool valid() const { return tape != nullptr && idx >= 0; }
};

/// Reverse-mode autodiff arena. Operations append nodes; backward() walks the
/// node list in reverse creation order, which is a valid topological order by
/// construction. Graphs are built fresh per forward pass and discarded.
template <class T>
class Tape {
public:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;  // allocated on first accumulation
        bool requires_grad = false;
        std::function<void(Tape&, int)> backward;  // (tape, own index); empty for leaves
    };

    Var<T> leaf(Tensor<T> value, bool requires_grad = false) {
        nodes_.push_back(Node{std::move(value), {}, requires_grad, {}});
        return Var<T>{this, static_cast<int>(nodes_.size()) - 1};
    }

    Var<T> constant(Tensor<T> value) { return leaf(std::move(value), false); }

    Var<T> make_node(Tensor<T> value, bool requires_grad, std::function<void(Tape&, int)> backward) {
        nodes_.push_back(Node{std::move(value), {}, requires_grad, requires_grad ? std::move(backward) : nullptr});
        return Var<T>{this, static_cast<int>(nodes_.size()) - 1};
    }

    const Tensor<T>& value(Var<T> v) const { return nodes_[static_cast<size_t>(v.idx)].value; }
    const Tensor<T>& value(int idx) const { return nodes_[static_cast<size_t>(idx)].value; }

    bool requires_grad(Var<T> v) const { return nodes_[static_cast<size_t>(v.idx)].requires_grad; }
    bool requires_grad(int idx) const { return nodes_[static_cast<size_t>(idx)].requires_grad; }

    /// Gradient of a node; zeros if nothing flowed into it.
    const Tensor<T>& grad(Var<T> v) { return grad_buffer(v.idx); }

    /// Accumulation buffer, allocated on demand.
    Tensor<T>& grad_buffer(int idx) {
        Node& n = nodes_[static_cast<size_t>(idx)];
        if (n.grad.empty()) n.grad = Tensor<T>::zeros(n.value.shape());
        return n.grad;
    }

    bool has_grad(int idx) const { return !nodes_[static_cast<size_t>(idx)].grad.empty(); }

    /// Backpropagate from a scalar root. Gradients accumulate across uses, so
    /// a parameter referenced several times in one graph is handled.
    void backward(Var<T> root) {
        Node& r = nodes_[static_cast<size_t>(root.idx)];
        if (r.value.size() != 1) throw ValidationError("backward root must be scalar");
        if (!r.requires_grad) throw ValidationError("backward root does not depend on any gradient leaf");
        grad_buffer(root.idx)[0] = T(1);
        for (int i = root.idx; i >= 0; --i) {
            Node& n = nodes_[static_cast<size_t>(i)];
            if (n.backward && !n.grad.empty()) n.backward(*this, i);
        }
    }

    void clear() { nodes_.clear(); }
    size_t num_nodes() const { return nodes_.size(); }

private:
    std::vector<Node> nodes_;
};

namespace detail {

template <class T>
inline void axpy(Tensor<T>& dst, const Tensor<T>& src, T alpha) {
    T* d = dst.data();
    const T* s = src.data();
    for (size_t i = 0; i < dst.size(); ++i) d[i] += alpha * s[i];
}

}  // namespace detail

// ---- elementwise ops -------------------------------------------------------

/// alpha*a + beta*b over identical shapes. The workhorse of the sampler
/// (latent updates, guidance combination are both instances of it).
template <class T>
Var<T> affine(Var<T> a, T alpha, Var<T> b, T beta) {
    Tape<T>& tape = *a.tape;
    const Tensor<T>& va = tape.value(a);
    const Tensor<T>& vb = tape.value(b);
    if (!va.same_shape(vb)) throw ValidationError("affine: shape mismatch");
    Tensor<T> out(va.shape());
    for (size_t i = 0; i < out.size(); ++i) out[i] = alpha * va[i] + beta * vb[i];
    const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
    const int ia = a.idx, ib = b.idx;
    return tape.make_node(std::move(out), rg, [ia, ib, alpha, beta](Tape<T>& t, int out_idx) {
        const Tensor<T>& g = t.grad_buffer(out_idx);
        if (t.requires_grad(ia)) detail::axpy(t.grad_buffer(ia), g, alpha);
        if (t.requires_grad(ib)) detail::axpy(t.grad_buffer(ib), g, beta);
    });
}

template <class T>
Var<T> add(Var<T> a, Var<T> b) {
    return affine(a, T(1), b, T(1));
}

template <class T>
Var<T> sub(Var<T> a, Var<T> b) {
    return affine(a, T(1), b, T(-1));
}

template <class T>
Var<T> scale(Var<T> a, T alpha) {
    Tape<T>& tape = *a.tape;
    const Tensor<T>& va = tape.value(a);
    Tensor<T> out(va.shape());
    for (size_t i = 0; i < out.size(); ++i) out[i] = alpha * va[i];
    const int ia = a.idx;
    return tape.make_node(std::move(out), tape.requires_grad(a), [ia, alpha](Tape<T>& t, int out_idx) {
        if (t.requires_grad(ia)) detail::axpy(t.grad_buffer(ia), t.grad_buffer(out_idx), alpha);
    });
}

template <class T>
Var<T> mul(Var<T> a, Var<T> b) {
    Tape<T>& tape = *a.tape;
    const Tensor<T>& va = tape.value(a);
    const Tensor<T>& vb = tape.value(b);
    if (!va.same_shape(vb)) throw ValidationError("mul: shape mismatch");
    Tensor<T> out(va.shape());
    for (size_t i = 0; i < out.size(); ++i) out[i] = va[i] * vb[i];
    const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
    const int ia = a.idx, ib = b.idx;
    return tape.make_node(std::move(out), rg, [ia, ib](Tape<T>& t, int out_idx) {
        const Tensor<T>& g = t.grad_buffer(out_idx);
        const Tensor<T>& va2 = t.value(ia);
        const Tensor<T>& vb2 = t.value(ib);
        if (t.requires_grad(ia)) {
            Tensor<T>& ga = t.grad_buffer(ia);
            for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb2[i];
        }
        if (t.requires_grad(ib)) {
            Tensor<T>& gb = t.grad_buffer(ib);
            for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va2[i];
        }
    });
}

/// x * sigmoid(x). Smooth activation; keeps the whole generation chain C^1 so
/// finite-difference checks and the attack ascent behave.
template <class T>
Var<T> silu(Var<T> a) {
    Tape<T>& tape = *a.tape;
    const Tensor<T>& va = tape.value(a);
    Tensor<T> out(va.shape());
    for (size_t i = 0; i < out.size(); ++i) {
        const T s = T(1) / (T(1) + std::exp(-va[i]));
        out[i] = va[i] * s;
    }
    const int ia = a.idx;
    return tape.make_node(std::move(out), tape.requires_grad(a), [ia](Tape<T>& t, int out_idx) {
        if (!t.requires_grad(ia)) return;
        const Tensor<T>& g = t.grad_buffer(out_idx);
        const Tensor<T>& x = t.value(ia);
        Tensor<T>& gx = t.grad_buffer(ia);
        for (size_t i = 0; i < g.size(); ++i) {
            const T s = T(1) / (T(1) + std::exp(-x[i]));
            gx[i] += g[i] * (s * (T(1) + x[i] * (T(1) - s)));
        }
    });
}

/// Per-pixel selection against plain tensors: out = keep*other + (1-keep)*x.
/// `keep` broadcasts over the channel axis when it has a single channel.
/// Gradient flows only through the (1-keep) share of x, which is exactly the
/// object-preservation contract of compositing.
template <class T>
Var<T> lerp_mask(Var<T> x, const Tensor<T>& other, const Tensor<T>& keep) {
    Tape<T>& tape = *x.tape;
    const Tensor<T>& vx = tape.value(x);
    if (vx.rank() != 4 || other.rank() != 4 || keep.rank() != 4)
        throw ValidationError("lerp_mask: rank-4 tensors expected");
    if (!vx.same_shape(other)) throw ValidationError("lerp_mask: shape mismatch");
    if (keep.dim(0) != vx.dim(0) || keep.dim(2) != vx.dim(2) || keep.dim(3) != vx.dim(3))
        throw ValidationError("lerp_mask: mask spatial shape mismatch");
    const int N = vx.dim(0), C = vx.dim(1), H = vx.dim(2), W = vx.dim(3);
    const bool bc = keep.dim(1) == 1;
    if (!bc && keep.dim(1) != C) throw ValidationError("lerp_mask: mask channels mismatch");
    Tensor<T> out(vx.shape());
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c)
            for (int h = 0; h < H; ++h)
                for (int w = 0; w < W; ++w) {
                    const T m = keep.at(n, bc ? 0 : c, h, w);
                    out.at(n, c, h, w) = m * other.at(n, c, h, w) + (T(1) - m) * vx.at(n, c, h, w);
                }
    const int ix = x.idx;
    Tensor<T> keep_copy = keep;
    return tape.make_node(std::move(out), tape.requires_grad(x),
                          [ix, keep_copy, N, C, H, W, bc](Tape<T>& t, int out_idx) {
                              if (!t.requires_grad(ix)) return;
                              const Tensor<T>& g = t.grad_buffer(out_idx);
                              Tensor<T>& gx = t.grad_buffer(ix);
                              for (int n = 0; n < N; ++n)
                                  for (int c = 0; c < C; ++c)
                                      for (int h = 0; h < H; ++h)
                                          for (int w = 0; w < W; ++w) {
                                              const T m = keep_copy.at(n, bc ? 0 : c, h, w);
                                              gx.at(n, c, h, w) += (T(1) - m) * g.at(n, c, h, w);
                                          }
                          });
}

template <class T>
Var<T> reshape(Var<T> a, std::vector<int> shape) {
    Tape<T>& tape = *a.tape;
    Tensor<T> out = tape.value(a).reshaped(shape);
    const int ia = a.idx;
    return tape.make_node(std::move(out), tape.requires_grad(a), [ia](Tape<T>& t, int out_idx) {
        if (!t.requires_grad(ia)) return;
        const Tensor<T>& g = t.grad_buffer(out_idx);
        Tensor<T>& ga = t.grad_buffer(ia);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
}

template <class T>
Var<T> sum_all(Var<T> a) {
    Tape<T>& tape = *a.tape;
    const Tensor<T>& va = tape.value(a);
    T s = T(0);
    for (size_t i = 0; i < va.size(); ++i) s += va[i];
    const int ia = a.idx;
    return tape.make_node(Tensor<T>({1}, {s}), tape.requires_grad(a), [ia](Tape<T>& t, int out_idx) {
        if (!t.requires_grad(ia)) return;
        const T g = t.grad_buffer(out_idx)[0];
        Tensor<T>& ga = t.grad_buffer(ia);
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += g;
    });
}

template <class T>
Var<T> mean_all(Var<T> a) {
    const T inv = T(1) / static_cast<T>(a.tape->value(a).size());
    return scale(sum_all(a), inv);
}

/// Mean of squared differences; the denoiser/autoencoder training loss.
template <class T>
Var<T> mse_loss(Var<T> a, Var<T> b) {
    Tape<T>& tape = *a.tape;
    const Tensor<T>& va = tape.value(a);
    const Tensor<T>& vb = tape.value(b);
    if (!va.same_shape(vb)) throw ValidationError("mse_loss: shape mismatch");
    T s = T(0);
    for (size_t i = 0; i < va.size(); ++i) {
        const T d = va[i] - vb[i];
        s += d * d;
    }
    const T inv = T(1) / static_cast<T>(va.size());
    const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
    const int ia = a.idx, ib = b.idx;
    return tape.make_node(Tensor<T>({1}, {s * inv}), rg, [ia, ib, inv](Tape<T>& t, int out_idx) {
        const T g = t.grad_buffer(out_idx)[0] * T(2) * inv;
        const Tensor<T>& va2 = t.value(ia);
        const Tensor<T>& vb2 = t.value(ib);
        if (t.requires_grad(ia)) {
            Tensor<T>& ga = t.grad_buffer(ia);
            for (size_t i = 0; i < ga.size(); ++i) ga[i] += g * (va2[i] - vb2[i]);
        }
        if (t.requires_grad(ib)) {
            Tensor<T>& gb = t.grad_buffer(ib);
            for (size_t i = 0; i < gb.size(); ++i) gb[i] -= g * (va2[i] - vb2[i]);
        }
    });
}

/// Sum of squared differences (no mean); feature-space attack objective.
template <class T>
Var<T> sq_diff_sum(Var<T> a, Var<T> b) {
    Tape<T>& tape = *a.tape;
    const T n = static_cast<T>(tape.value(a).size());
    return scale(mse_loss(a, b), n);
}

}  // namespace backdrop::nn
