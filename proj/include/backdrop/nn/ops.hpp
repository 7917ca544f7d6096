// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "backdrop/nn/tape.hpp"

namespace backdrop::nn {

namespace detail {

// Output size of a strided convolution with symmetric zero padding.
inline int conv_out(int in, int k, int stride, int pad) { return (in + 2 * pad - k) / stride + 1; }

template <class T>
using RowMajorMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Unfolds one sample into a (Ci*kh*kw) x (Ho*Wo) patch matrix.
template <class T>
void im2col(const Tensor<T>& x, int n, int kh, int kw, int stride, int pad, int Ho, int Wo, T* col) {
    const int Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int P = Ho * Wo;
    int k = 0;
    for (int ci = 0; ci < Ci; ++ci) {
        for (int fh = 0; fh < kh; ++fh) {
            for (int fw = 0; fw < kw; ++fw, ++k) {
                T* dst = col + static_cast<size_t>(k) * P;
                for (int ho = 0; ho < Ho; ++ho) {
                    const int ih = ho * stride + fh - pad;
                    T* drow = dst + ho * Wo;
                    if (ih < 0 || ih >= H) {
                        for (int wo = 0; wo < Wo; ++wo) drow[wo] = T(0);
                        continue;
                    }
                    const T* xrow = &x.at(n, ci, ih, 0);
                    for (int wo = 0; wo < Wo; ++wo) {
                        const int iw = wo * stride + fw - pad;
                        drow[wo] = (iw < 0 || iw >= W) ? T(0) : xrow[iw];
                    }
                }
            }
        }
    }
}

/// conv2d as im2col + GEMM, per sample. Eigen products run single-threaded
/// (outer parallelism is over samples), so every output element has a fixed
/// summation order and results are bit-stable for a given build.
template <class T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride, int pad) {
    const int N = x.dim(0), Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int Co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int Ho = conv_out(H, kh, stride, pad), Wo = conv_out(W, kw, stride, pad);
    const int K = Ci * kh * kw, P = Ho * Wo;
    Tensor<T> out({N, Co, Ho, Wo});
    Eigen::Map<const RowMajorMat<T>> wmat(w.data(), Co, K);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int n = 0; n < N; ++n) {
        std::vector<T> col(static_cast<size_t>(K) * P);
        im2col(x, n, kh, kw, stride, pad, Ho, Wo, col.data());
        Eigen::Map<const RowMajorMat<T>> cmat(col.data(), K, P);
        Eigen::Map<RowMajorMat<T>> omat(&out.at(n, 0, 0, 0), Co, P);
        omat.noalias() = wmat * cmat;
        for (int co = 0; co < Co; ++co) omat.row(co).array() += b[static_cast<size_t>(co)];
    }
    return out;
}

template <class T>
void conv2d_backward_input(Tensor<T>& gx, const Tensor<T>& g, const Tensor<T>& w, int stride, int pad) {
    const int N = gx.dim(0), Ci = gx.dim(1), H = gx.dim(2), W = gx.dim(3);
    const int Co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int Ho = g.dim(2), Wo = g.dim(3);
    const int K = Ci * kh * kw, P = Ho * Wo;
    Eigen::Map<const RowMajorMat<T>> wmat(w.data(), Co, K);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int n = 0; n < N; ++n) {
        RowMajorMat<T> colgrad(K, P);
        Eigen::Map<const RowMajorMat<T>> gmat(&g.at(n, 0, 0, 0), Co, P);
        colgrad.noalias() = wmat.transpose() * gmat;
        // col2im scatter-add, fixed iteration order.
        int k = 0;
        for (int ci = 0; ci < Ci; ++ci) {
            for (int fh = 0; fh < kh; ++fh) {
                for (int fw = 0; fw < kw; ++fw, ++k) {
                    const T* src = colgrad.data() + static_cast<size_t>(k) * P;
                    for (int ho = 0; ho < Ho; ++ho) {
                        const int ih = ho * stride + fh - pad;
                        if (ih < 0 || ih >= H) continue;
                        T* dst = &gx.at(n, ci, ih, 0);
                        const T* srow = src + ho * Wo;
                        for (int wo = 0; wo < Wo; ++wo) {
                            const int iw = wo * stride + fw - pad;
                            if (iw < 0 || iw >= W) continue;
                            dst[iw] += srow[wo];
                        }
                    }
                }
            }
        }
    }
}

template <class T>
void conv2d_backward_filter(Tensor<T>& gw, Tensor<T>& gb, const Tensor<T>& g, const Tensor<T>& x, int stride,
                            int pad) {
    const int N = x.dim(0), Ci = x.dim(1);
    const int Co = gw.dim(0), kh = gw.dim(2), kw = gw.dim(3);
    const int Ho = g.dim(2), Wo = g.dim(3);
    const int K = Ci * kh * kw, P = Ho * Wo;
    // Per-sample contributions land in a scratch slab and are reduced in
    // sample order afterwards, so the accumulation order never depends on
    // scheduling.
    std::vector<RowMajorMat<T>> partial(static_cast<size_t>(N));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int n = 0; n < N; ++n) {
        std::vector<T> col(static_cast<size_t>(K) * P);
        im2col(x, n, kh, kw, stride, pad, Ho, Wo, col.data());
        Eigen::Map<const RowMajorMat<T>> cmat(col.data(), K, P);
        Eigen::Map<const RowMajorMat<T>> gmat(&g.at(n, 0, 0, 0), Co, P);
        partial[static_cast<size_t>(n)].noalias() = gmat * cmat.transpose();
    }
    Eigen::Map<RowMajorMat<T>> gwmat(gw.data(), Co, K);
    for (int n = 0; n < N; ++n) gwmat += partial[static_cast<size_t>(n)];
    for (int co = 0; co < Co; ++co) {
        T acc = T(0);
        for (int n = 0; n < N; ++n) {
            const T* grow = &g.at(n, co, 0, 0);
            for (int i = 0; i < P; ++i) acc += grow[i];
        }
        gb[static_cast<size_t>(co)] += acc;
    }
}

}  // namespace detail

template <class T>
Var<T> conv2d(Var<T> x, Var<T> w, Var<T> b, int stride = 1, int pad = 1) {
    Tape<T>& tape = *x.tape;
    const Tensor<T>& vx = tape.value(x);
    const Tensor<T>& vw = tape.value(w);
    const Tensor<T>& vb = tape.value(b);
    if (vx.rank() != 4 || vw.rank() != 4) throw ValidationError("conv2d: rank-4 input and filter expected");
    if (vx.dim(1) != vw.dim(1)) throw ValidationError("conv2d: channel mismatch");
    if (vb.size() != static_cast<size_t>(vw.dim(0))) throw ValidationError("conv2d: bias size mismatch");
    Tensor<T> out = detail::conv2d_forward(vx, vw, vb, stride, pad);
    const bool rg = tape.requires_grad(x) || tape.requires_grad(w) || tape.requires_grad(b);
    const int ix = x.idx, iw = w.idx, ib = b.idx;
    return tape.make_node(std::move(out), rg, [ix, iw, ib, stride, pad](Tape<T>& t, int out_idx) {
        const Tensor<T>& g = t.grad_buffer(out_idx);
        if (t.requires_grad(ix)) detail::conv2d_backward_input(t.grad_buffer(ix), g, t.value(iw), stride, pad);
        if (t.requires_grad(iw) || t.requires_grad(ib))
            detail::conv2d_backward_filter(t.grad_buffer(iw), t.grad_buffer(ib), g, t.value(ix), stride, pad);
    });
}

/// x (N,K) * w (M,K)^T + b (M) -> (N,M)
template <class T>
Var<T> linear(Var<T> x, Var<T> w, Var<T> b) {
    Tape<T>& tape = *x.tape;
    const Tensor<T>& vx = tape.value(x);
    const Tensor<T>& vw = tape.value(w);
    const Tensor<T>& vb = tape.value(b);
    if (vx.rank() != 2 || vw.rank() != 2) throw ValidationError("linear: rank-2 input and weight expected");
    if (vx.dim(1) != vw.dim(1)) throw ValidationError("linear: inner dim mismatch");
    const int N = vx.dim(0), K = vx.dim(1), M = vw.dim(0);
    if (vb.size() != static_cast<size_t>(M)) throw ValidationError("linear: bias size mismatch");
    Tensor<T> out({N, M});
    for (int n = 0; n < N; ++n) {
        for (int m = 0; m < M; ++m) {
            T acc = vb[static_cast<size_t>(m)];
            const T* xr = vx.data() + static_cast<size_t>(n) * K;
            const T* wr = vw.data() + static_cast<size_t>(m) * K;
            for (int k = 0; k < K; ++k) acc += xr[k] * wr[k];
            out[static_cast<size_t>(n) * M + m] = acc;
        }
    }
    const bool rg = tape.requires_grad(x) || tape.requires_grad(w) || tape.requires_grad(b);
    const int ix = x.idx, iw = w.idx, ib = b.idx;
    return tape.make_node(std::move(out), rg, [ix, iw, ib, N, K, M](Tape<T>& t, int out_idx) {
        const Tensor<T>& g = t.grad_buffer(out_idx);
        const Tensor<T>& vx2 = t.value(ix);
        const Tensor<T>& vw2 = t.value(iw);
        if (t.requires_grad(ix)) {
            Tensor<T>& gx = t.grad_buffer(ix);
            for (int n = 0; n < N; ++n)
                for (int m = 0; m < M; ++m) {
                    const T gv = g[static_cast<size_t>(n) * M + m];
                    const T* wr = vw2.data() + static_cast<size_t>(m) * K;
                    T* gxr = gx.data() + static_cast<size_t>(n) * K;
                    for (int k = 0; k < K; ++k) gxr[k] += gv * wr[k];
                }
        }
        if (t.requires_grad(iw)) {
            Tensor<T>& gw = t.grad_buffer(iw);
            for (int n = 0; n < N; ++n)
                for (int m = 0; m < M; ++m) {
                    const T gv = g[static_cast<size_t>(n) * M + m];
                    const T* xr = vx2.data() + static_cast<size_t>(n) * K;
                    T* gwr = gw.data() + static_cast<size_t>(m) * K;
                    for (int k = 0; k < K; ++k) gwr[k] += gv * xr[k];
                }
        }
        if (t.requires_grad(ib)) {
            Tensor<T>& gb = t.grad_buffer(ib);
            for (int n = 0; n < N; ++n)
                for (int m = 0; m < M; ++m) gb[static_cast<size_t>(m)] += g[static_cast<size_t>(n) * M + m];
        }
    });
}

/// Feature-wise modulation: out[n,c,:,:] = x[n,c,:,:] * (1 + scale[n,c]) + shift[n,c].
template <class T>
Var<T> film(Var<T> x, Var<T> scale_nc, Var<T> shift_nc) {
    Tape<T>& tape = *x.tape;
    const Tensor<T>& vx = tape.value(x);
    const Tensor<T>& vs = tape.value(scale_nc);
    const Tensor<T>& vh = tape.value(shift_nc);
    if (vx.rank() != 4 || vs.rank() != 2 || vh.rank() != 2) throw ValidationError("film: bad ranks");
    const int N = vx.dim(0), C = vx.dim(1), HW = vx.dim(2) * vx.dim(3);
    if (vs.dim(0) != N || vs.dim(1) != C || vh.dim(0) != N || vh.dim(1) != C)
        throw ValidationError("film: modulation shape mismatch");
    Tensor<T> out(vx.shape());
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const T s = T(1) + vs[static_cast<size_t>(n) * C + c];
            const T h = vh[static_cast<size_t>(n) * C + c];
            const T* src = vx.data() + (static_cast<size_t>(n) * C + c) * HW;
            T* dst = out.data() + (static_cast<size_t>(n) * C + c) * HW;
            for (int i = 0; i < HW; ++i) dst[i] = src[i] * s + h;
        }
    const bool rg = tape.requires_grad(x) || tape.requires_grad(scale_nc) || tape.requires_grad(shift_nc);
    const int ix = x.idx, is = scale_nc.idx, ih = shift_nc.idx;
    return tape.make_node(std::move(out), rg, [ix, is, ih, N, C, HW](Tape<T>& t, int out_idx) {
        const Tensor<T>& g = t.grad_buffer(out_idx);
        const Tensor<T>& vx2 = t.value(ix);
        const Tensor<T>& vs2 = t.value(is);
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c) {
                const size_t nc = static_cast<size_t>(n) * C + c;
                const T* grow = g.data() + nc * HW;
                if (t.requires_grad(ix)) {
                    const T s = T(1) + vs2[nc];
                    T* gx = t.grad_buffer(ix).data() + nc * HW;
                    for (int i = 0; i < HW; ++i) gx[i] += grow[i] * s;
                }
                if (t.requires_grad(is)) {
                    const T* xrow = vx2.data() + nc * HW;
                    T acc = T(0);
                    for (int i = 0; i < HW; ++i) acc += grow[i] * xrow[i];
                    t.grad_buffer(is)[nc] += acc;
                }
                if (t.requires_grad(ih)) {
                    T acc = T(0);
                    for (int i = 0; i < HW; ++i) acc += grow[i];
                    t.grad_buffer(ih)[nc] += acc;
                }
            }
    });
}

/// out[n,c,:,:] = x[n,c,:,:] + v[n,c]; used to inject timestep embeddings.
template <class T>
Var<T> add_channel(Var<T> x, Var<T> v_nc) {
    Tape<T>& tape = *x.tape;
    Tensor<T> zeros = Tensor<T>::zeros(tape.value(v_nc).shape());
    Var<T> z = tape.constant(std::move(zeros));
    return film(x, z, v_nc);
}

template <class T>
Var<T> concat_channels(const std::vector<Var<T>>& parts) {
    if (parts.empty()) throw ValidationError("concat_channels: empty input");
    Tape<T>& tape = *parts[0].tape;
    const Tensor<T>& first = tape.value(parts[0]);
    if (first.rank() != 4) throw ValidationError("concat_channels: rank-4 expected");
    const int N = first.dim(0), H = first.dim(2), W = first.dim(3);
    int C = 0;
    bool rg = false;
    std::vector<int> idxs, chans;
    for (const Var<T>& p : parts) {
        const Tensor<T>& v = tape.value(p);
        if (v.dim(0) != N || v.dim(2) != H || v.dim(3) != W) throw ValidationError("concat_channels: shape mismatch");
        C += v.dim(1);
        rg = rg || tape.requires_grad(p);
        idxs.push_back(p.idx);
        chans.push_back(v.dim(1));
    }
    Tensor<T> out({N, C, H, W});
    const int HW = H * W;
    for (int n = 0; n < N; ++n) {
        int coff = 0;
        for (size_t pi = 0; pi < idxs.size(); ++pi) {
            const Tensor<T>& v = tape.value(idxs[static_cast<size_t>(pi)]);
            const int pc = chans[pi];
            std::copy_n(v.data() + static_cast<size_t>(n) * pc * HW, static_cast<size_t>(pc) * HW,
                        out.data() + (static_cast<size_t>(n) * C + coff) * HW);
            coff += pc;
        }
    }
    return tape.make_node(std::move(out), rg, [idxs, chans, N, C, HW](Tape<T>& t, int out_idx) {
        const Tensor<T>& g = t.grad_buffer(out_idx);
        for (int n = 0; n < N; ++n) {
            int coff = 0;
            for (size_t pi = 0; pi < idxs.size(); ++pi) {
                const int pc = chans[pi];
                if (t.requires_grad(idxs[pi])) {
                    Tensor<T>& gp = t.grad_buffer(idxs[pi]);
                    const T* src = g.data() + (static_cast<size_t>(n) * C + coff) * HW;
                    T* dst = gp.data() + static_cast<size_t>(n) * pc * HW;
                    for (size_t i = 0; i < static_cast<size_t>(pc) * HW; ++i) dst[i] += src[i];
                }
                coff += pc;
            }
        }
    });
}

/// Nearest-neighbour 2x upsampling.
template <class T>
Var<T> upsample2x(Var<T> x) {
    Tape<T>& tape = *x.tape;
    const Tensor<T>& vx = tape.value(x);
    if (vx.rank() != 4) throw ValidationError("upsample2x: rank-4 expected");
    const int N = vx.dim(0), C = vx.dim(1), H = vx.dim(2), W = vx.dim(3);
    Tensor<T> out({N, C, 2 * H, 2 * W});
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c)
            for (int h = 0; h < 2 * H; ++h) {
                const T* src = &vx.at(n, c, h / 2, 0);
                T* dst = &out.at(n, c, h, 0);
                for (int w = 0; w < 2 * W; ++w) dst[w] = src[w / 2];
            }
    const int ix = x.idx;
    return tape.make_node(std::move(out), tape.requires_grad(x), [ix, N, C, H, W](Tape<T>& t, int out_idx) {
        if (!t.requires_grad(ix)) return;
        const Tensor<T>& g = t.grad_buffer(out_idx);
        Tensor<T>& gx = t.grad_buffer(ix);
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c)
                for (int h = 0; h < 2 * H; ++h) {
                    const T* grow = &g.at(n, c, h, 0);
                    T* dst = &gx.at(n, c, h / 2, 0);
                    for (int w = 0; w < 2 * W; ++w) dst[w / 2] += grow[w];
                }
    });
}

/// (N,C,H,W) -> (N,C), spatial mean.
template <class T>
Var<T> global_avg_pool(Var<T> x) {
    Tape<T>& tape = *x.tape;
    const Tensor<T>& vx = tape.value(x);
    if (vx.rank() != 4) throw ValidationError("global_avg_pool: rank-4 expected");
    const int N = vx.dim(0), C = vx.dim(1), HW = vx.dim(2) * vx.dim(3);
    Tensor<T> out({N, C});
    const T inv = T(1) / static_cast<T>(HW);
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const T* src = vx.data() + (static_cast<size_t>(n) * C + c) * HW;
            T acc = T(0);
            for (int i = 0; i < HW; ++i) acc += src[i];
            out[static_cast<size_t>(n) * C + c] = acc * inv;
        }
    const int ix = x.idx;
    return tape.make_node(std::move(out), tape.requires_grad(x), [ix, N, C, HW, inv](Tape<T>& t, int out_idx) {
        if (!t.requires_grad(ix)) return;
        const Tensor<T>& g = t.grad_buffer(out_idx);
        Tensor<T>& gx = t.grad_buffer(ix);
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c) {
                const T gv = g[static_cast<size_t>(n) * C + c] * inv;
                T* dst = gx.data() + (static_cast<size_t>(n) * C + c) * HW;
                for (int i = 0; i < HW; ++i) dst[i] += gv;
            }
    });
}

/// (N,Tk,D) -> (N,D), mean over the token axis.
template <class T>
Var<T> mean_tokens(Var<T> e) {
    Tape<T>& tape = *e.tape;
    const Tensor<T>& ve = tape.value(e);
    if (ve.rank() != 3) throw ValidationError("mean_tokens: rank-3 expected");
    const int N = ve.dim(0), Tk = ve.dim(1), D = ve.dim(2);
    Tensor<T> out({N, D});
    const T inv = T(1) / static_cast<T>(Tk);
    for (int n = 0; n < N; ++n)
        for (int k = 0; k < Tk; ++k) {
            const T* src = ve.data() + (static_cast<size_t>(n) * Tk + k) * D;
            T* dst = out.data() + static_cast<size_t>(n) * D;
            for (int d = 0; d < D; ++d) dst[d] += src[d] * inv;
        }
    const int ie = e.idx;
    return tape.make_node(std::move(out), tape.requires_grad(e), [ie, N, Tk, D, inv](Tape<T>& t, int out_idx) {
        if (!t.requires_grad(ie)) return;
        const Tensor<T>& g = t.grad_buffer(out_idx);
        Tensor<T>& ge = t.grad_buffer(ie);
        for (int n = 0; n < N; ++n)
            for (int k = 0; k < Tk; ++k) {
                T* dst = ge.data() + (static_cast<size_t>(n) * Tk + k) * D;
                const T* src = g.data() + static_cast<size_t>(n) * D;
                for (int d = 0; d < D; ++d) dst[d] += src[d] * inv;
            }
    });
}

/// Row gather from an embedding matrix (V,D) by flat token ids -> (N,Tk,D).
/// Backward scatter-adds into the matrix, training the embeddings.
template <class T>
Var<T> gather_rows(Var<T> table, const std::vector<int>& ids, int batch, int tokens) {
    Tape<T>& tape = *table.tape;
    const Tensor<T>& vt = tape.value(table);
    if (vt.rank() != 2) throw ValidationError("gather_rows: rank-2 table expected");
    if (static_cast<int>(ids.size()) != batch * tokens) throw ValidationError("gather_rows: ids size mismatch");
    const int V = vt.dim(0), D = vt.dim(1);
    Tensor<T> out({batch, tokens, D});
    for (size_t i = 0; i < ids.size(); ++i) {
        const int id = ids[i];
        if (id < 0 || id >= V) throw ValidationError("gather_rows: id out of range");
        std::copy_n(vt.data() + static_cast<size_t>(id) * D, D, out.data() + i * D);
    }
    const int it = table.idx;
    std::vector<int> ids_copy = ids;
    return tape.make_node(std::move(out), tape.requires_grad(table), [it, ids_copy, D](Tape<T>& t, int out_idx) {
        if (!t.requires_grad(it)) return;
        const Tensor<T>& g = t.grad_buffer(out_idx);
        Tensor<T>& gt = t.grad_buffer(it);
        for (size_t i = 0; i < ids_copy.size(); ++i) {
            const T* src = g.data() + i * D;
            T* dst = gt.data() + static_cast<size_t>(ids_copy[i]) * D;
            for (int d = 0; d < D; ++d) dst[d] += src[d];
        }
    });
}

/// Mean cross-entropy of logits (N,K) against integer labels. Numerically
/// stabilised softmax; backward uses the cached probabilities.
template <class T>
Var<T> softmax_cross_entropy(Var<T> logits, const std::vector<int>& labels) {
    Tape<T>& tape = *logits.tape;
    const Tensor<T>& vl = tape.value(logits);
    if (vl.rank() != 2) throw ValidationError("softmax_cross_entropy: rank-2 logits expected");
    const int N = vl.dim(0), K = vl.dim(1);
    if (static_cast<int>(labels.size()) != N) throw ValidationError("softmax_cross_entropy: label count mismatch");
    Tensor<T> probs({N, K});
    T loss = T(0);
    for (int n = 0; n < N; ++n) {
        const T* row = vl.data() + static_cast<size_t>(n) * K;
        T mx = row[0];
        for (int k = 1; k < K; ++k) mx = std::max(mx, row[k]);
        T z = T(0);
        for (int k = 0; k < K; ++k) z += std::exp(row[k] - mx);
        const int y = labels[static_cast<size_t>(n)];
        if (y < 0 || y >= K) throw ValidationError("softmax_cross_entropy: label out of range");
        T* prow = probs.data() + static_cast<size_t>(n) * K;
        for (int k = 0; k < K; ++k) prow[k] = std::exp(row[k] - mx) / z;
        // Log-space form stays finite even when the true-class probability
        // underflows.
        loss -= row[y] - mx - std::log(z);
    }
    loss /= static_cast<T>(N);
    const int il = logits.idx;
    std::vector<int> labels_copy = labels;
    return tape.make_node(Tensor<T>({1}, {loss}), tape.requires_grad(logits),
                          [il, labels_copy, N, K, probs](Tape<T>& t, int out_idx) {
                              if (!t.requires_grad(il)) return;
                              const T g = t.grad_buffer(out_idx)[0] / static_cast<T>(N);
                              Tensor<T>& gl = t.grad_buffer(il);
                              for (int n = 0; n < N; ++n) {
                                  const T* prow = probs.data() + static_cast<size_t>(n) * K;
                                  T* grow = gl.data() + static_cast<size_t>(n) * K;
                                  for (int k = 0; k < K; ++k) grow[k] += g * prow[k];
                                  grow[labels_copy[static_cast<size_t>(n)]] -= g;
                              }
                          });
}

}  // namespace backdrop::nn
