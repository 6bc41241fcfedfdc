// Eager reverse-mode tape over Tensor. Each op computes its value
// immediately and records a closure that scatters gradients to its inputs.
// One Tape per forward/backward pass; parameters accumulate into
// Parameter::grad across the pass.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "lvsr/params.hpp"
#include "lvsr/tensor.hpp"

namespace lvsr {

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

namespace detail {
inline double sigmoid_scalar(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double gelu_cdf(double x) { return 0.5 * (1.0 + std::erf(x * 0.70710678118654752440)); }
inline double gelu_pdf(double x) { return std::exp(-0.5 * x * x) * 0.39894228040143267794; }
// first index i >= 0 with i*stride - pad + k >= 0
inline int conv_lo(int k, int pad, int stride) {
    int a = pad - k;
    return a <= 0 ? 0 : (a + stride - 1) / stride;
}
// first index i with i*stride - pad + k >= limit (exclusive upper bound)
inline int conv_hi(int k, int pad, int stride, int limit, int clamp_to) {
    int a = limit + pad - k;  // > 0 since limit >= 1, pad >= 0, k < kernel <= limit + pad in practice
    int hi = a <= 0 ? 0 : (a + stride - 1) / stride;
    return hi < clamp_to ? hi : clamp_to;
}
}  // namespace detail

class Tape {
    struct Node {
        Tensor value;
        Tensor grad;  // allocated on first touch
        std::function<void()> back;
    };

public:
    const Tensor& val(Var v) const { return nodes_[static_cast<size_t>(v.id)].value; }

    // gradient accumulated at a node (empty if it never received one)
    const Tensor& grad_of(Var v) const { return nodes_[static_cast<size_t>(v.id)].grad; }

    Var input(const Tensor& t) { return push(t, {}); }
    Var input(Tensor&& t) { return push(std::move(t), {}); }

    Var param(Parameter& p) {
        Var v = push(p.value, {});
        Parameter* pp = &p;
        int id = v.id;
        nodes_[static_cast<size_t>(id)].back = [this, id, pp]() {
            const Tensor& gn = nodes_[static_cast<size_t>(id)].grad;
            for (size_t i = 0; i < gn.data.size(); ++i) pp->grad.data[i] += gn.data[i];
        };
        return v;
    }

    // ---- elementwise ----

    Var add(Var a, Var b) {
        const Tensor &ta = val(a), &tb = val(b);
        check(ta.same_shape(tb), "add: shape mismatch");
        Tensor out = ta;
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += tb.data[i];
        Var o = push(std::move(out), {});
        set_back(o, [this, a, b, o]() {
            const Tensor& go = grad(o);
            axpy(g(a), go, 1.0);
            axpy(g(b), go, 1.0);
        });
        return o;
    }

    Var sub(Var a, Var b) {
        const Tensor &ta = val(a), &tb = val(b);
        check(ta.same_shape(tb), "sub: shape mismatch");
        Tensor out = ta;
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= tb.data[i];
        Var o = push(std::move(out), {});
        set_back(o, [this, a, b, o]() {
            const Tensor& go = grad(o);
            axpy(g(a), go, 1.0);
            axpy(g(b), go, -1.0);
        });
        return o;
    }

    Var mul(Var a, Var b) {
        const Tensor &ta = val(a), &tb = val(b);
        check(ta.same_shape(tb), "mul: shape mismatch");
        Tensor out = ta;
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= tb.data[i];
        Var o = push(std::move(out), {});
        set_back(o, [this, a, b, o]() {
            const Tensor& go = grad(o);
            const Tensor &ta2 = val(a), &tb2 = val(b);
            Tensor &ga = g(a), &gb = g(b);
            for (size_t i = 0; i < go.data.size(); ++i) {
                ga.data[i] += go.data[i] * tb2.data[i];
                gb.data[i] += go.data[i] * ta2.data[i];
            }
        });
        return o;
    }

    Var scale(Var a, double c) {
        Tensor out = val(a);
        for (double& v : out.data) v *= c;
        Var o = push(std::move(out), {});
        set_back(o, [this, a, o, c]() { axpy(g(a), grad(o), c); });
        return o;
    }

    Var silu(Var a) {
        Tensor out = val(a);
        for (double& v : out.data) v *= detail::sigmoid_scalar(v);
        Var o = push(std::move(out), {});
        set_back(o, [this, a, o]() {
            const Tensor& go = grad(o);
            const Tensor& x = val(a);
            Tensor& ga = g(a);
            for (size_t i = 0; i < go.data.size(); ++i) {
                double s = detail::sigmoid_scalar(x.data[i]);
                ga.data[i] += go.data[i] * s * (1.0 + x.data[i] * (1.0 - s));
            }
        });
        return o;
    }

    Var gelu(Var a) {
        Tensor out = val(a);
        for (double& v : out.data) v *= detail::gelu_cdf(v);
        Var o = push(std::move(out), {});
        set_back(o, [this, a, o]() {
            const Tensor& go = grad(o);
            const Tensor& x = val(a);
            Tensor& ga = g(a);
            for (size_t i = 0; i < go.data.size(); ++i) {
                double xv = x.data[i];
                ga.data[i] += go.data[i] * (detail::gelu_cdf(xv) + xv * detail::gelu_pdf(xv));
            }
        });
        return o;
    }

    Var sigmoid(Var a) {
        Tensor out = val(a);
        for (double& v : out.data) v = detail::sigmoid_scalar(v);
        Var o = push(std::move(out), {});
        set_back(o, [this, a, o]() {
            const Tensor& go = grad(o);
            const Tensor& y = val(o);
            Tensor& ga = g(a);
            for (size_t i = 0; i < go.data.size(); ++i)
                ga.data[i] += go.data[i] * y.data[i] * (1.0 - y.data[i]);
        });
        return o;
    }

    // ---- token-block linear algebra ----

    // x (B,N,Ci) @ W (Ci,Co) [+ b (Co)]
    Var linear(Var x, Var W, Var b = Var{}) {
        const Tensor& tx = val(x);
        const Tensor& tw = val(W);
        check(tx.ndim() == 3 && tw.ndim() == 2, "linear: expects (B,N,Ci) x (Ci,Co)");
        check(tx.dim(2) == tw.dim(0), "linear: width mismatch " + shape_str(tx.shape) + " x " + shape_str(tw.shape));
        int B = tx.dim(0), N = tx.dim(1), Ci = tx.dim(2), Co = tw.dim(1);
        if (b.valid()) check(val(b).numel() == Co, "linear: bias size mismatch");
        Tensor out({B, N, Co});
        const double* xp = tx.data.data();
        const double* wp = tw.data.data();
        double* op = out.data.data();
        for (int64_t r = 0; r < static_cast<int64_t>(B) * N; ++r) {
            const double* xr = xp + r * Ci;
            double* orow = op + r * Co;
            if (b.valid()) {
                const double* bp = val(b).data.data();
                for (int o = 0; o < Co; ++o) orow[o] = bp[o];
            }
            for (int i = 0; i < Ci; ++i) {
                double xv = xr[i];
                const double* wrow = wp + static_cast<int64_t>(i) * Co;
                for (int o = 0; o < Co; ++o) orow[o] += xv * wrow[o];
            }
        }
        Var o = push(std::move(out), {});
        set_back(o, [this, x, W, b, o, B, N, Ci, Co]() {
            const Tensor& go = grad(o);
            const Tensor& tx2 = val(x);
            const Tensor& tw2 = val(W);
            Tensor &gx = g(x), &gw = g(W);
            const double* gp = go.data.data();
            const double* xp2 = tx2.data.data();
            const double* wp2 = tw2.data.data();
            for (int64_t r = 0; r < static_cast<int64_t>(B) * N; ++r) {
                const double* grow = gp + r * Co;
                const double* xr = xp2 + r * Ci;
                double* gxr = gx.data.data() + r * Ci;
                for (int i = 0; i < Ci; ++i) {
                    const double* wrow = wp2 + static_cast<int64_t>(i) * Co;
                    double acc = 0.0;
                    double xv = xr[i];
                    double* gwrow = gw.data.data() + static_cast<int64_t>(i) * Co;
                    for (int o = 0; o < Co; ++o) {
                        acc += grow[o] * wrow[o];
                        gwrow[o] += xv * grow[o];
                    }
                    gxr[i] += acc;
                }
            }
            if (b.valid()) {
                Tensor& gb = g(b);
                for (int64_t r = 0; r < static_cast<int64_t>(B) * N; ++r) {
                    const double* grow = gp + r * Co;
                    for (int o = 0; o < Co; ++o) gb.data[static_cast<size_t>(o)] += grow[o];
                }
            }
        });
        return o;
    }

    // A (B,N,K) @ B (B,M,K)^T -> (B,N,M)
    Var bmm_nt(Var a, Var b) {
        const Tensor &ta = val(a), &tb = val(b);
        check(ta.ndim() == 3 && tb.ndim() == 3 && ta.dim(0) == tb.dim(0) && ta.dim(2) == tb.dim(2),
              "bmm_nt: shape mismatch " + shape_str(ta.shape) + " x " + shape_str(tb.shape));
        int Bn = ta.dim(0), N = ta.dim(1), K = ta.dim(2), M = tb.dim(1);
        Tensor out({Bn, N, M});
        for (int bb = 0; bb < Bn; ++bb) {
            const double* ap = ta.data.data() + static_cast<int64_t>(bb) * N * K;
            const double* bp = tb.data.data() + static_cast<int64_t>(bb) * M * K;
            double* op = out.data.data() + static_cast<int64_t>(bb) * N * M;
            for (int n = 0; n < N; ++n)
                for (int m = 0; m < M; ++m) {
                    double acc = 0.0;
                    const double* ar = ap + static_cast<int64_t>(n) * K;
                    const double* br = bp + static_cast<int64_t>(m) * K;
                    for (int k = 0; k < K; ++k) acc += ar[k] * br[k];
                    op[static_cast<int64_t>(n) * M + m] = acc;
                }
        }
        Var o = push(std::move(out), {});
        set_back(o, [this, a, b, o, Bn, N, K, M]() {
            const Tensor& go = grad(o);
            const Tensor &ta2 = val(a), &tb2 = val(b);
            Tensor &ga = g(a), &gb = g(b);
            for (int bb = 0; bb < Bn; ++bb) {
                const double* gp = go.data.data() + static_cast<int64_t>(bb) * N * M;
                const double* ap = ta2.data.data() + static_cast<int64_t>(bb) * N * K;
                const double* bp = tb2.data.data() + static_cast<int64_t>(bb) * M * K;
                double* gap = ga.data.data() + static_cast<int64_t>(bb) * N * K;
                double* gbp = gb.data.data() + static_cast<int64_t>(bb) * M * K;
                for (int n = 0; n < N; ++n)
                    for (int m = 0; m < M; ++m) {
                        double gv = gp[static_cast<int64_t>(n) * M + m];
                        if (gv == 0.0) continue;
                        const double* br = bp + static_cast<int64_t>(m) * K;
                        const double* ar = ap + static_cast<int64_t>(n) * K;
                        double* gar = gap + static_cast<int64_t>(n) * K;
                        double* gbr = gbp + static_cast<int64_t>(m) * K;
                        for (int k = 0; k < K; ++k) {
                            gar[k] += gv * br[k];
                            gbr[k] += gv * ar[k];
                        }
                    }
            }
        });
        return o;
    }

    // A (B,N,K) @ B (B,K,M) -> (B,N,M)
    Var bmm_nn(Var a, Var b) {
        const Tensor &ta = val(a), &tb = val(b);
        check(ta.ndim() == 3 && tb.ndim() == 3 && ta.dim(0) == tb.dim(0) && ta.dim(2) == tb.dim(1),
              "bmm_nn: shape mismatch " + shape_str(ta.shape) + " x " + shape_str(tb.shape));
        int Bn = ta.dim(0), N = ta.dim(1), K = ta.dim(2), M = tb.dim(2);
        Tensor out({Bn, N, M});
        for (int bb = 0; bb < Bn; ++bb) {
            const double* ap = ta.data.data() + static_cast<int64_t>(bb) * N * K;
            const double* bp = tb.data.data() + static_cast<int64_t>(bb) * K * M;
            double* op = out.data.data() + static_cast<int64_t>(bb) * N * M;
            for (int n = 0; n < N; ++n) {
                double* orow = op + static_cast<int64_t>(n) * M;
                const double* ar = ap + static_cast<int64_t>(n) * K;
                for (int k = 0; k < K; ++k) {
                    double av = ar[k];
                    const double* brow = bp + static_cast<int64_t>(k) * M;
                    for (int m = 0; m < M; ++m) orow[m] += av * brow[m];
                }
            }
        }
        Var o = push(std::move(out), {});
        set_back(o, [this, a, b, o, Bn, N, K, M]() {
            const Tensor& go = grad(o);
            const Tensor &ta2 = val(a), &tb2 = val(b);
            Tensor &ga = g(a), &gb = g(b);
            for (int bb = 0; bb < Bn; ++bb) {
                const double* gp = go.data.data() + static_cast<int64_t>(bb) * N * M;
                const double* ap = ta2.data.data() + static_cast<int64_t>(bb) * N * K;
                const double* bp = tb2.data.data() + static_cast<int64_t>(bb) * K * M;
                double* gap = ga.data.data() + static_cast<int64_t>(bb) * N * K;
                double* gbp = gb.data.data() + static_cast<int64_t>(bb) * K * M;
                for (int n = 0; n < N; ++n) {
                    const double* grow = gp + static_cast<int64_t>(n) * M;
                    const double* ar = ap + static_cast<int64_t>(n) * K;
                    double* gar = gap + static_cast<int64_t>(n) * K;
                    for (int k = 0; k < K; ++k) {
                        const double* brow = bp + static_cast<int64_t>(k) * M;
                        double* gbrow = gbp + static_cast<int64_t>(k) * M;
                        double acc = 0.0;
                        double av = ar[k];
                        for (int m = 0; m < M; ++m) {
                            acc += grow[m] * brow[m];
                            gbrow[m] += av * grow[m];
                        }
                        gar[k] += acc;
                    }
                }
            }
        });
        return o;
    }

    // softmax over the last axis
    Var softmax_lastdim(Var a) {
        const Tensor& ta = val(a);
        check(ta.ndim() >= 1, "softmax: empty tensor");
        int D = ta.dim(ta.ndim() - 1);
        int64_t rows = ta.numel() / D;
        Tensor out = ta;
        for (int64_t r = 0; r < rows; ++r) {
            double* row = out.data.data() + r * D;
            double mx = row[0];
            for (int i = 1; i < D; ++i) mx = std::max(mx, row[i]);
            double s = 0.0;
            for (int i = 0; i < D; ++i) {
                row[i] = std::exp(row[i] - mx);
                s += row[i];
            }
            for (int i = 0; i < D; ++i) row[i] /= s;
        }
        Var o = push(std::move(out), {});
        set_back(o, [this, a, o, D, rows]() {
            const Tensor& go = grad(o);
            const Tensor& p = val(o);
            Tensor& ga = g(a);
            for (int64_t r = 0; r < rows; ++r) {
                const double* gr = go.data.data() + r * D;
                const double* pr = p.data.data() + r * D;
                double* gar = ga.data.data() + r * D;
                double dot = 0.0;
                for (int i = 0; i < D; ++i) dot += gr[i] * pr[i];
                for (int i = 0; i < D; ++i) gar[i] += pr[i] * (gr[i] - dot);
            }
        });
        return o;
    }

    // normalize last axis to zero mean / unit variance (no affine)
    Var layernorm_lastdim(Var a, double eps) {
        const Tensor& ta = val(a);
        int D = ta.dim(ta.ndim() - 1);
        int64_t rows = ta.numel() / D;
        Tensor out = ta;
        std::vector<double> inv(static_cast<size_t>(rows));
        for (int64_t r = 0; r < rows; ++r) {
            double* row = out.data.data() + r * D;
            double mu = 0.0;
            for (int i = 0; i < D; ++i) mu += row[i];
            mu /= D;
            double var = 0.0;
            for (int i = 0; i < D; ++i) {
                double d = row[i] - mu;
                var += d * d;
            }
            var /= D;
            double iv = 1.0 / std::sqrt(var + eps);
            inv[static_cast<size_t>(r)] = iv;
            for (int i = 0; i < D; ++i) row[i] = (row[i] - mu) * iv;
        }
        Var o = push(std::move(out), {});
        set_back(o, [this, a, o, D, rows, inv = std::move(inv)]() {
            const Tensor& go = grad(o);
            const Tensor& xhat = val(o);
            Tensor& ga = g(a);
            for (int64_t r = 0; r < rows; ++r) {
                const double* gr = go.data.data() + r * D;
                const double* xr = xhat.data.data() + r * D;
                double* gar = ga.data.data() + r * D;
                double gmean = 0.0, gxmean = 0.0;
                for (int i = 0; i < D; ++i) {
                    gmean += gr[i];
                    gxmean += gr[i] * xr[i];
                }
                gmean /= D;
                gxmean /= D;
                double iv = inv[static_cast<size_t>(r)];
                for (int i = 0; i < D; ++i) gar[i] += iv * (gr[i] - gmean - xr[i] * gxmean);
            }
        });
        return o;
    }

    // y = x * gain[d] + bias[d] over the last axis
    Var affine_lastdim(Var x, Var gain, Var bias) {
        const Tensor& tx = val(x);
        int D = tx.dim(tx.ndim() - 1);
        check(val(gain).numel() == D && val(bias).numel() == D, "affine_lastdim: param size mismatch");
        int64_t rows = tx.numel() / D;
        Tensor out = tx;
        const double* gp = val(gain).data.data();
        const double* bp = val(bias).data.data();
        for (int64_t r = 0; r < rows; ++r) {
            double* row = out.data.data() + r * D;
            for (int i = 0; i < D; ++i) row[i] = row[i] * gp[i] + bp[i];
        }
        Var o = push(std::move(out), {});
        set_back(o, [this, x, gain, bias, o, D, rows]() {
            const Tensor& go = grad(o);
            const Tensor& tx2 = val(x);
            const double* gnp = val(gain).data.data();
            Tensor &gx = g(x), &gg = g(gain), &gb = g(bias);
            for (int64_t r = 0; r < rows; ++r) {
                const double* gr = go.data.data() + r * D;
                const double* xr = tx2.data.data() + r * D;
                double* gxr = gx.data.data() + r * D;
                for (int i = 0; i < D; ++i) {
                    gxr[i] += gr[i] * gnp[i];
                    gg.data[static_cast<size_t>(i)] += gr[i] * xr[i];
                    gb.data[static_cast<size_t>(i)] += gr[i];
                }
            }
        });
        return o;
    }

    // ---- conv ops, NCHW ----

    Var conv2d(Var x, Var w, Var b, int stride, int pad) {
        const Tensor& tx = val(x);
        const Tensor& tw = val(w);
        check(tx.ndim() == 4 && tw.ndim() == 4, "conv2d: expects NCHW input and OIHW weight");
        check(tx.dim(1) == tw.dim(1), "conv2d: channel mismatch");
        int N = tx.dim(0), Ci = tx.dim(1), H = tx.dim(2), W = tx.dim(3);
        int Co = tw.dim(0), kh = tw.dim(2), kw = tw.dim(3);
        check(val(b).numel() == Co, "conv2d: bias size mismatch");
        int Ho = (H + 2 * pad - kh) / stride + 1;
        int Wo = (W + 2 * pad - kw) / stride + 1;
        check(Ho >= 1 && Wo >= 1, "conv2d: output collapses to zero size");
        Tensor out({N, Co, Ho, Wo});
        const double* xp = tx.data.data();
        const double* wp = tw.data.data();
        const double* bp = val(b).data.data();
        double* op = out.data.data();
        for (int n = 0; n < N; ++n)
            for (int co = 0; co < Co; ++co) {
                double* oplane = op + (static_cast<int64_t>(n) * Co + co) * Ho * Wo;
                double bv = bp[co];
                for (int64_t i = 0; i < static_cast<int64_t>(Ho) * Wo; ++i) oplane[i] = bv;
                for (int ci = 0; ci < Ci; ++ci) {
                    const double* xplane = xp + (static_cast<int64_t>(n) * Ci + ci) * H * W;
                    const double* wplane = wp + (static_cast<int64_t>(co) * Ci + ci) * kh * kw;
                    for (int ky = 0; ky < kh; ++ky) {
                        int ho_lo = detail::conv_lo(ky, pad, stride);
                        int ho_hi = detail::conv_hi(ky, pad, stride, H, Ho);
                        for (int kx = 0; kx < kw; ++kx) {
                            double wv = wplane[ky * kw + kx];
                            if (wv == 0.0) continue;
                            int wo_lo = detail::conv_lo(kx, pad, stride);
                            int wo_hi = detail::conv_hi(kx, pad, stride, W, Wo);
                            for (int ho = ho_lo; ho < ho_hi; ++ho) {
                                int hi = ho * stride - pad + ky;
                                const double* xrow = xplane + static_cast<int64_t>(hi) * W - pad + kx;
                                double* orow = oplane + static_cast<int64_t>(ho) * Wo;
                                for (int wo = wo_lo; wo < wo_hi; ++wo)
                                    orow[wo] += wv * xrow[static_cast<int64_t>(wo) * stride];
                            }
                        }
                    }
                }
            }
        Var o = push(std::move(out), {});
        set_back(o, [this, x, w, b, o, N, Ci, H, W, Co, kh, kw, Ho, Wo, stride, pad]() {
            const Tensor& go = grad(o);
            const Tensor& tx2 = val(x);
            const Tensor& tw2 = val(w);
            Tensor &gx = g(x), &gw = g(w), &gb = g(b);
            const double* gp = go.data.data();
            for (int n = 0; n < N; ++n)
                for (int co = 0; co < Co; ++co) {
                    const double* gplane = gp + (static_cast<int64_t>(n) * Co + co) * Ho * Wo;
                    double acc = 0.0;
                    for (int64_t i = 0; i < static_cast<int64_t>(Ho) * Wo; ++i) acc += gplane[i];
                    gb.data[static_cast<size_t>(co)] += acc;
                    for (int ci = 0; ci < Ci; ++ci) {
                        const double* xplane = tx2.data.data() + (static_cast<int64_t>(n) * Ci + ci) * H * W;
                        double* gxplane = gx.data.data() + (static_cast<int64_t>(n) * Ci + ci) * H * W;
                        const double* wplane = tw2.data.data() + (static_cast<int64_t>(co) * Ci + ci) * kh * kw;
                        double* gwplane = gw.data.data() + (static_cast<int64_t>(co) * Ci + ci) * kh * kw;
                        for (int ky = 0; ky < kh; ++ky) {
                            int ho_lo = detail::conv_lo(ky, pad, stride);
                            int ho_hi = detail::conv_hi(ky, pad, stride, H, Ho);
                            for (int kx = 0; kx < kw; ++kx) {
                                double wv = wplane[ky * kw + kx];
                                double gwacc = 0.0;
                                int wo_lo = detail::conv_lo(kx, pad, stride);
                                int wo_hi = detail::conv_hi(kx, pad, stride, W, Wo);
                                for (int ho = ho_lo; ho < ho_hi; ++ho) {
                                    int hi = ho * stride - pad + ky;
                                    const double* grow = gplane + static_cast<int64_t>(ho) * Wo;
                                    const double* xrow = xplane + static_cast<int64_t>(hi) * W - pad + kx;
                                    double* gxrow = gxplane + static_cast<int64_t>(hi) * W - pad + kx;
                                    for (int wo = wo_lo; wo < wo_hi; ++wo) {
                                        double gv = grow[wo];
                                        gxrow[static_cast<int64_t>(wo) * stride] += gv * wv;
                                        gwacc += gv * xrow[static_cast<int64_t>(wo) * stride];
                                    }
                                }
                                gwplane[ky * kw + kx] += gwacc;
                            }
                        }
                    }
                }
        });
        return o;
    }

    // weight layout (Ci, Co, kh, kw); out size (H-1)*stride - 2*pad + kh
    Var conv_transpose2d(Var x, Var w, Var b, int stride, int pad) {
        const Tensor& tx = val(x);
        const Tensor& tw = val(w);
        check(tx.ndim() == 4 && tw.ndim() == 4, "conv_transpose2d: bad ranks");
        check(tx.dim(1) == tw.dim(0), "conv_transpose2d: channel mismatch");
        int N = tx.dim(0), Ci = tx.dim(1), H = tx.dim(2), W = tx.dim(3);
        int Co = tw.dim(1), kh = tw.dim(2), kw = tw.dim(3);
        check(val(b).numel() == Co, "conv_transpose2d: bias size mismatch");
        int Ho = (H - 1) * stride - 2 * pad + kh;
        int Wo = (W - 1) * stride - 2 * pad + kw;
        check(Ho >= 1 && Wo >= 1, "conv_transpose2d: output collapses");
        Tensor out({N, Co, Ho, Wo});
        const double* bp = val(b).data.data();
        for (int n = 0; n < N; ++n)
            for (int co = 0; co < Co; ++co) {
                double* oplane = out.data.data() + (static_cast<int64_t>(n) * Co + co) * Ho * Wo;
                for (int64_t i = 0; i < static_cast<int64_t>(Ho) * Wo; ++i) oplane[i] = bp[co];
            }
        // scatter: out[ho,wo] += x[hi,wi] * w[ky,kx] with ho = hi*s - p + ky
        for (int n = 0; n < N; ++n)
            for (int ci = 0; ci < Ci; ++ci) {
                const double* xplane = tx.data.data() + (static_cast<int64_t>(n) * Ci + ci) * H * W;
                for (int co = 0; co < Co; ++co) {
                    double* oplane = out.data.data() + (static_cast<int64_t>(n) * Co + co) * Ho * Wo;
                    const double* wplane = tw.data.data() + (static_cast<int64_t>(ci) * Co + co) * kh * kw;
                    for (int ky = 0; ky < kh; ++ky) {
                        int hi_lo = detail::conv_lo(ky, pad, stride);
                        int hi_hi = detail::conv_hi(ky, pad, stride, Ho, H);
                        for (int kx = 0; kx < kw; ++kx) {
                            double wv = wplane[ky * kw + kx];
                            if (wv == 0.0) continue;
                            int wi_lo = detail::conv_lo(kx, pad, stride);
                            int wi_hi = detail::conv_hi(kx, pad, stride, Wo, W);
                            for (int hi = hi_lo; hi < hi_hi; ++hi) {
                                int ho = hi * stride - pad + ky;
                                const double* xrow = xplane + static_cast<int64_t>(hi) * W;
                                double* orow = oplane + static_cast<int64_t>(ho) * Wo - pad + kx;
                                for (int wi = wi_lo; wi < wi_hi; ++wi)
                                    orow[static_cast<int64_t>(wi) * stride] += wv * xrow[wi];
                            }
                        }
                    }
                }
            }
        Var o = push(std::move(out), {});
        set_back(o, [this, x, w, b, o, N, Ci, H, W, Co, kh, kw, Ho, Wo, stride, pad]() {
            const Tensor& go = grad(o);
            const Tensor& tx2 = val(x);
            const Tensor& tw2 = val(w);
            Tensor &gx = g(x), &gw = g(w), &gb = g(b);
            for (int n = 0; n < N; ++n)
                for (int co = 0; co < Co; ++co) {
                    const double* gplane = go.data.data() + (static_cast<int64_t>(n) * Co + co) * Ho * Wo;
                    double acc = 0.0;
                    for (int64_t i = 0; i < static_cast<int64_t>(Ho) * Wo; ++i) acc += gplane[i];
                    gb.data[static_cast<size_t>(co)] += acc;
                }
            for (int n = 0; n < N; ++n)
                for (int ci = 0; ci < Ci; ++ci) {
                    const double* xplane = tx2.data.data() + (static_cast<int64_t>(n) * Ci + ci) * H * W;
                    double* gxplane = gx.data.data() + (static_cast<int64_t>(n) * Ci + ci) * H * W;
                    for (int co = 0; co < Co; ++co) {
                        const double* gplane = go.data.data() + (static_cast<int64_t>(n) * Co + co) * Ho * Wo;
                        const double* wplane = tw2.data.data() + (static_cast<int64_t>(ci) * Co + co) * kh * kw;
                        double* gwplane = gw.data.data() + (static_cast<int64_t>(ci) * Co + co) * kh * kw;
                        for (int ky = 0; ky < kh; ++ky) {
                            int hi_lo = detail::conv_lo(ky, pad, stride);
                            int hi_hi = detail::conv_hi(ky, pad, stride, Ho, H);
                            for (int kx = 0; kx < kw; ++kx) {
                                double wv = wplane[ky * kw + kx];
                                double gwacc = 0.0;
                                int wi_lo = detail::conv_lo(kx, pad, stride);
                                int wi_hi = detail::conv_hi(kx, pad, stride, Wo, W);
                                for (int hi = hi_lo; hi < hi_hi; ++hi) {
                                    int ho = hi * stride - pad + ky;
                                    const double* xrow = xplane + static_cast<int64_t>(hi) * W;
                                    double* gxrow = gxplane + static_cast<int64_t>(hi) * W;
                                    const double* grow = gplane + static_cast<int64_t>(ho) * Wo - pad + kx;
                                    for (int wi = wi_lo; wi < wi_hi; ++wi) {
                                        double gv = grow[static_cast<int64_t>(wi) * stride];
                                        gxrow[wi] += gv * wv;
                                        gwacc += gv * xrow[wi];
                                    }
                                }
                                gwplane[ky * kw + kx] += gwacc;
                            }
                        }
                    }
                }
        });
        return o;
    }

    Var upsample_nearest2(Var x) {
        const Tensor& tx = val(x);
        check(tx.ndim() == 4, "upsample_nearest2: expects NCHW");
        int N = tx.dim(0), C = tx.dim(1), H = tx.dim(2), W = tx.dim(3);
        Tensor out({N, C, 2 * H, 2 * W});
        for (int64_t p = 0; p < static_cast<int64_t>(N) * C; ++p) {
            const double* xplane = tx.data.data() + p * H * W;
            double* oplane = out.data.data() + p * 4 * H * W;
            for (int h = 0; h < H; ++h)
                for (int w2 = 0; w2 < W; ++w2) {
                    double v = xplane[static_cast<int64_t>(h) * W + w2];
                    double* o0 = oplane + (static_cast<int64_t>(2 * h) * 2 * W + 2 * w2);
                    o0[0] = v;
                    o0[1] = v;
                    o0[2 * W] = v;
                    o0[2 * W + 1] = v;
                }
        }
        Var o = push(std::move(out), {});
        set_back(o, [this, x, o, N, C, H, W]() {
            const Tensor& go = grad(o);
            Tensor& gx = g(x);
            for (int64_t p = 0; p < static_cast<int64_t>(N) * C; ++p) {
                const double* gplane = go.data.data() + p * 4 * H * W;
                double* gxplane = gx.data.data() + p * H * W;
                for (int h = 0; h < H; ++h)
                    for (int w2 = 0; w2 < W; ++w2) {
                        const double* g0 = gplane + (static_cast<int64_t>(2 * h) * 2 * W + 2 * w2);
                        gxplane[static_cast<int64_t>(h) * W + w2] += g0[0] + g0[1] + g0[2 * W] + g0[2 * W + 1];
                    }
            }
        });
        return o;
    }

    // normalize each (n, group) slice of NCHW (no affine)
    Var group_norm(Var x, int groups, double eps) {
        const Tensor& tx = val(x);
        check(tx.ndim() == 4, "group_norm: expects NCHW");
        int N = tx.dim(0), C = tx.dim(1), H = tx.dim(2), W = tx.dim(3);
        check(C % groups == 0, "group_norm: channels not divisible by groups");
        int Cg = C / groups;
        int64_t slice = static_cast<int64_t>(Cg) * H * W;
        Tensor out = tx;
        std::vector<double> inv(static_cast<size_t>(N) * groups);
        for (int n = 0; n < N; ++n)
            for (int gidx = 0; gidx < groups; ++gidx) {
                double* p = out.data.data() + (static_cast<int64_t>(n) * C + static_cast<int64_t>(gidx) * Cg) * H * W;
                double mu = 0.0;
                for (int64_t i = 0; i < slice; ++i) mu += p[i];
                mu /= static_cast<double>(slice);
                double var = 0.0;
                for (int64_t i = 0; i < slice; ++i) {
                    double d = p[i] - mu;
                    var += d * d;
                }
                var /= static_cast<double>(slice);
                double iv = 1.0 / std::sqrt(var + eps);
                inv[static_cast<size_t>(n) * groups + gidx] = iv;
                for (int64_t i = 0; i < slice; ++i) p[i] = (p[i] - mu) * iv;
            }
        Var o = push(std::move(out), {});
        set_back(o, [this, x, o, N, C, groups, Cg, slice, inv = std::move(inv), H, W]() {
            const Tensor& go = grad(o);
            const Tensor& xhat = val(o);
            Tensor& gx = g(x);
            for (int n = 0; n < N; ++n)
                for (int gidx = 0; gidx < groups; ++gidx) {
                    int64_t off = (static_cast<int64_t>(n) * C + static_cast<int64_t>(gidx) * Cg) * H * W;
                    const double* gr = go.data.data() + off;
                    const double* xr = xhat.data.data() + off;
                    double* gxr = gx.data.data() + off;
                    double gmean = 0.0, gxmean = 0.0;
                    for (int64_t i = 0; i < slice; ++i) {
                        gmean += gr[i];
                        gxmean += gr[i] * xr[i];
                    }
                    gmean /= static_cast<double>(slice);
                    gxmean /= static_cast<double>(slice);
                    double iv = inv[static_cast<size_t>(n) * groups + gidx];
                    for (int64_t i = 0; i < slice; ++i) gxr[i] += iv * (gr[i] - gmean - xr[i] * gxmean);
                }
        });
        return o;
    }

    // y[n,c,h,w] = x * gain[c] + bias[c]
    Var channel_affine(Var x, Var gain, Var bias) {
        const Tensor& tx = val(x);
        check(tx.ndim() == 4, "channel_affine: expects NCHW");
        int N = tx.dim(0), C = tx.dim(1), H = tx.dim(2), W = tx.dim(3);
        check(val(gain).numel() == C && val(bias).numel() == C, "channel_affine: param size mismatch");
        int64_t plane = static_cast<int64_t>(H) * W;
        Tensor out = tx;
        const double* gp = val(gain).data.data();
        const double* bp = val(bias).data.data();
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c) {
                double* p = out.data.data() + (static_cast<int64_t>(n) * C + c) * plane;
                for (int64_t i = 0; i < plane; ++i) p[i] = p[i] * gp[c] + bp[c];
            }
        Var o = push(std::move(out), {});
        set_back(o, [this, x, gain, bias, o, N, C, plane]() {
            const Tensor& go = grad(o);
            const Tensor& tx2 = val(x);
            const double* gp2 = val(gain).data.data();
            Tensor &gx = g(x), &gg = g(gain), &gb = g(bias);
            for (int n = 0; n < N; ++n)
                for (int c = 0; c < C; ++c) {
                    int64_t off = (static_cast<int64_t>(n) * C + c) * plane;
                    const double* gr = go.data.data() + off;
                    const double* xr = tx2.data.data() + off;
                    double* gxr = gx.data.data() + off;
                    double sg = 0.0, sgx = 0.0;
                    for (int64_t i = 0; i < plane; ++i) {
                        gxr[i] += gr[i] * gp2[c];
                        sg += gr[i];
                        sgx += gr[i] * xr[i];
                    }
                    gg.data[static_cast<size_t>(c)] += sgx;
                    gb.data[static_cast<size_t>(c)] += sg;
                }
        });
        return o;
    }

    // x (N,C,H,W) + v (N,C), broadcast over spatial dims
    Var add_channel_vec(Var x, Var v) {
        const Tensor& tx = val(x);
        const Tensor& tv = val(v);
        check(tx.ndim() == 4 && tv.ndim() == 2 && tv.dim(0) == tx.dim(0) && tv.dim(1) == tx.dim(1),
              "add_channel_vec: shape mismatch");
        int N = tx.dim(0), C = tx.dim(1);
        int64_t plane = static_cast<int64_t>(tx.dim(2)) * tx.dim(3);
        Tensor out = tx;
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c) {
                double add = tv(n, c);
                double* p = out.data.data() + (static_cast<int64_t>(n) * C + c) * plane;
                for (int64_t i = 0; i < plane; ++i) p[i] += add;
            }
        Var o = push(std::move(out), {});
        set_back(o, [this, x, v, o, N, C, plane]() {
            const Tensor& go = grad(o);
            Tensor &gx = g(x), &gv = g(v);
            axpy(gx, go, 1.0);
            for (int n = 0; n < N; ++n)
                for (int c = 0; c < C; ++c) {
                    const double* gr = go.data.data() + (static_cast<int64_t>(n) * C + c) * plane;
                    double s = 0.0;
                    for (int64_t i = 0; i < plane; ++i) s += gr[i];
                    gv(n, c) += s;
                }
        });
        return o;
    }

    // ---- layout ops ----

    Var concat_channels(Var a, Var b) {
        const Tensor &ta = val(a), &tb = val(b);
        check(ta.ndim() == 4 && tb.ndim() == 4 && ta.dim(0) == tb.dim(0) && ta.dim(2) == tb.dim(2) &&
                  ta.dim(3) == tb.dim(3),
              "concat_channels: shape mismatch");
        int N = ta.dim(0), Ca = ta.dim(1), Cb = tb.dim(1);
        int64_t plane = static_cast<int64_t>(ta.dim(2)) * ta.dim(3);
        Tensor out({N, Ca + Cb, ta.dim(2), ta.dim(3)});
        for (int n = 0; n < N; ++n) {
            std::memcpy(out.data.data() + static_cast<int64_t>(n) * (Ca + Cb) * plane,
                        ta.data.data() + static_cast<int64_t>(n) * Ca * plane,
                        static_cast<size_t>(Ca * plane) * sizeof(double));
            std::memcpy(out.data.data() + (static_cast<int64_t>(n) * (Ca + Cb) + Ca) * plane,
                        tb.data.data() + static_cast<int64_t>(n) * Cb * plane,
                        static_cast<size_t>(Cb * plane) * sizeof(double));
        }
        Var o = push(std::move(out), {});
        set_back(o, [this, a, b, o, N, Ca, Cb, plane]() {
            const Tensor& go = grad(o);
            Tensor &ga = g(a), &gb = g(b);
            for (int n = 0; n < N; ++n) {
                const double* gp = go.data.data() + static_cast<int64_t>(n) * (Ca + Cb) * plane;
                double* gap = ga.data.data() + static_cast<int64_t>(n) * Ca * plane;
                double* gbp = gb.data.data() + static_cast<int64_t>(n) * Cb * plane;
                for (int64_t i = 0; i < Ca * plane; ++i) gap[i] += gp[i];
                for (int64_t i = 0; i < Cb * plane; ++i) gbp[i] += gp[Ca * plane + i];
            }
        });
        return o;
    }

    Var slice_channels(Var x, int c0, int c1) {
        const Tensor& tx = val(x);
        check(tx.ndim() == 4 && 0 <= c0 && c0 < c1 && c1 <= tx.dim(1), "slice_channels: bad range");
        int N = tx.dim(0), C = tx.dim(1), Cs = c1 - c0;
        int64_t plane = static_cast<int64_t>(tx.dim(2)) * tx.dim(3);
        Tensor out({N, Cs, tx.dim(2), tx.dim(3)});
        for (int n = 0; n < N; ++n)
            std::memcpy(out.data.data() + static_cast<int64_t>(n) * Cs * plane,
                        tx.data.data() + (static_cast<int64_t>(n) * C + c0) * plane,
                        static_cast<size_t>(Cs * plane) * sizeof(double));
        Var o = push(std::move(out), {});
        set_back(o, [this, x, o, N, C, c0, Cs, plane]() {
            const Tensor& go = grad(o);
            Tensor& gx = g(x);
            for (int n = 0; n < N; ++n) {
                const double* gp = go.data.data() + static_cast<int64_t>(n) * Cs * plane;
                double* gxp = gx.data.data() + (static_cast<int64_t>(n) * C + c0) * plane;
                for (int64_t i = 0; i < Cs * plane; ++i) gxp[i] += gp[i];
            }
        });
        return o;
    }

    // (L,C,H,W) -> (L, H*W, C); tokens are spatial positions within a frame
    Var frames_to_spatial_tokens(Var x) {
        const Tensor& tx = val(x);
        check(tx.ndim() == 4, "frames_to_spatial_tokens: expects LCHW");
        int L = tx.dim(0), C = tx.dim(1), H = tx.dim(2), W = tx.dim(3);
        int64_t P = static_cast<int64_t>(H) * W;
        Tensor out({L, H * W, C});
        for (int l = 0; l < L; ++l)
            for (int c = 0; c < C; ++c) {
                const double* xp = tx.data.data() + (static_cast<int64_t>(l) * C + c) * P;
                double* op = out.data.data() + static_cast<int64_t>(l) * P * C + c;
                for (int64_t p = 0; p < P; ++p) op[p * C] = xp[p];
            }
        Var o = push(std::move(out), {});
        set_back(o, [this, x, o, L, C, P]() {
            const Tensor& go = grad(o);
            Tensor& gx = g(x);
            for (int l = 0; l < L; ++l)
                for (int c = 0; c < C; ++c) {
                    const double* gp = go.data.data() + static_cast<int64_t>(l) * P * C + c;
                    double* gxp = gx.data.data() + (static_cast<int64_t>(l) * C + c) * P;
                    for (int64_t p = 0; p < P; ++p) gxp[p] += gp[p * C];
                }
        });
        return o;
    }

    Var spatial_tokens_to_frames(Var x, int H, int W) {
        const Tensor& tx = val(x);
        check(tx.ndim() == 3 && tx.dim(1) == H * W, "spatial_tokens_to_frames: token count mismatch");
        int L = tx.dim(0), C = tx.dim(2);
        int64_t P = static_cast<int64_t>(H) * W;
        Tensor out({L, C, H, W});
        for (int l = 0; l < L; ++l)
            for (int c = 0; c < C; ++c) {
                const double* xp = tx.data.data() + static_cast<int64_t>(l) * P * C + c;
                double* op = out.data.data() + (static_cast<int64_t>(l) * C + c) * P;
                for (int64_t p = 0; p < P; ++p) op[p] = xp[p * C];
            }
        Var o = push(std::move(out), {});
        set_back(o, [this, x, o, L, C, P]() {
            const Tensor& go = grad(o);
            Tensor& gx = g(x);
            for (int l = 0; l < L; ++l)
                for (int c = 0; c < C; ++c) {
                    const double* gp = go.data.data() + (static_cast<int64_t>(l) * C + c) * P;
                    double* gxp = gx.data.data() + static_cast<int64_t>(l) * P * C + c;
                    for (int64_t p = 0; p < P; ++p) gxp[p * C] += gp[p];
                }
        });
        return o;
    }

    // (L,C,H,W) -> (H*W, L, C); tokens are frames at a fixed spatial position
    Var frames_to_temporal_tokens(Var x) {
        const Tensor& tx = val(x);
        check(tx.ndim() == 4, "frames_to_temporal_tokens: expects LCHW");
        int L = tx.dim(0), C = tx.dim(1), H = tx.dim(2), W = tx.dim(3);
        int64_t P = static_cast<int64_t>(H) * W;
        Tensor out({H * W, L, C});
        for (int l = 0; l < L; ++l)
            for (int c = 0; c < C; ++c) {
                const double* xp = tx.data.data() + (static_cast<int64_t>(l) * C + c) * P;
                double* op = out.data.data() + static_cast<int64_t>(l) * C + c;
                for (int64_t p = 0; p < P; ++p) op[p * L * C] = xp[p];
            }
        Var o = push(std::move(out), {});
        set_back(o, [this, x, o, L, C, P]() {
            const Tensor& go = grad(o);
            Tensor& gx = g(x);
            for (int l = 0; l < L; ++l)
                for (int c = 0; c < C; ++c) {
                    const double* gp = go.data.data() + static_cast<int64_t>(l) * C + c;
                    double* gxp = gx.data.data() + (static_cast<int64_t>(l) * C + c) * P;
                    for (int64_t p = 0; p < P; ++p) gxp[p] += gp[p * L * C];
                }
        });
        return o;
    }

    Var temporal_tokens_to_frames(Var x, int H, int W) {
        const Tensor& tx = val(x);
        check(tx.ndim() == 3 && tx.dim(0) == H * W, "temporal_tokens_to_frames: position count mismatch");
        int L = tx.dim(1), C = tx.dim(2);
        int64_t P = static_cast<int64_t>(H) * W;
        Tensor out({L, C, H, W});
        for (int l = 0; l < L; ++l)
            for (int c = 0; c < C; ++c) {
                const double* xp = tx.data.data() + static_cast<int64_t>(l) * C + c;
                double* op = out.data.data() + (static_cast<int64_t>(l) * C + c) * P;
                for (int64_t p = 0; p < P; ++p) op[p] = xp[p * L * C];
            }
        Var o = push(std::move(out), {});
        set_back(o, [this, x, o, L, C, P]() {
            const Tensor& go = grad(o);
            Tensor& gx = g(x);
            for (int l = 0; l < L; ++l)
                for (int c = 0; c < C; ++c) {
                    const double* gp = go.data.data() + (static_cast<int64_t>(l) * C + c) * P;
                    double* gxp = gx.data.data() + static_cast<int64_t>(l) * C + c;
                    for (int64_t p = 0; p < P; ++p) gxp[p * L * C] += gp[p];
                }
        });
        return o;
    }

    // (B, N, h*dh) -> (B*h, N, dh)
    Var split_heads(Var x, int heads) {
        const Tensor& tx = val(x);
        check(tx.ndim() == 3 && tx.dim(2) % heads == 0, "split_heads: width not divisible by heads");
        int B = tx.dim(0), N = tx.dim(1), D = tx.dim(2), dh = D / heads;
        Tensor out({B * heads, N, dh});
        for (int b = 0; b < B; ++b)
            for (int k = 0; k < heads; ++k)
                for (int n = 0; n < N; ++n) {
                    const double* src = tx.data.data() + (static_cast<int64_t>(b) * N + n) * D + static_cast<int64_t>(k) * dh;
                    double* dst = out.data.data() + (static_cast<int64_t>(b * heads + k) * N + n) * dh;
                    for (int j = 0; j < dh; ++j) dst[j] = src[j];
                }
        Var o = push(std::move(out), {});
        set_back(o, [this, x, o, B, N, D, dh, heads]() {
            const Tensor& go = grad(o);
            Tensor& gx = g(x);
            for (int b = 0; b < B; ++b)
                for (int k = 0; k < heads; ++k)
                    for (int n = 0; n < N; ++n) {
                        const double* src = go.data.data() + (static_cast<int64_t>(b * heads + k) * N + n) * dh;
                        double* dst = gx.data.data() + (static_cast<int64_t>(b) * N + n) * D + static_cast<int64_t>(k) * dh;
                        for (int j = 0; j < dh; ++j) dst[j] += src[j];
                    }
        });
        return o;
    }

    // (B*h, N, dh) -> (B, N, h*dh), inverse of split_heads
    Var merge_heads(Var x, int heads) {
        const Tensor& tx = val(x);
        check(tx.ndim() == 3 && tx.dim(0) % heads == 0, "merge_heads: batch not divisible by heads");
        int B = tx.dim(0) / heads, N = tx.dim(1), dh = tx.dim(2), D = dh * heads;
        Tensor out({B, N, D});
        for (int b = 0; b < B; ++b)
            for (int k = 0; k < heads; ++k)
                for (int n = 0; n < N; ++n) {
                    const double* src = tx.data.data() + (static_cast<int64_t>(b * heads + k) * N + n) * dh;
                    double* dst = out.data.data() + (static_cast<int64_t>(b) * N + n) * D + static_cast<int64_t>(k) * dh;
                    for (int j = 0; j < dh; ++j) dst[j] = src[j];
                }
        Var o = push(std::move(out), {});
        set_back(o, [this, x, o, B, N, D, dh, heads]() {
            const Tensor& go = grad(o);
            Tensor& gx = g(x);
            for (int b = 0; b < B; ++b)
                for (int k = 0; k < heads; ++k)
                    for (int n = 0; n < N; ++n) {
                        const double* src = go.data.data() + (static_cast<int64_t>(b) * N + n) * D + static_cast<int64_t>(k) * dh;
                        double* dst = gx.data.data() + (static_cast<int64_t>(b * heads + k) * N + n) * dh;
                        for (int j = 0; j < dh; ++j) dst[j] += src[j];
                    }
        });
        return o;
    }

    // x (B,N,d) + table rows [0..N) of (maxN, d)
    Var add_position_rows(Var x, Var table) {
        const Tensor& tx = val(x);
        const Tensor& tt = val(table);
        check(tx.ndim() == 3 && tt.ndim() == 2 && tt.dim(1) == tx.dim(2), "add_position_rows: width mismatch");
        check(tx.dim(1) <= tt.dim(0), "add_position_rows: sequence longer than position table");
        int B = tx.dim(0), N = tx.dim(1), D = tx.dim(2);
        Tensor out = tx;
        for (int b = 0; b < B; ++b)
            for (int n = 0; n < N; ++n) {
                double* row = out.data.data() + (static_cast<int64_t>(b) * N + n) * D;
                const double* trow = tt.data.data() + static_cast<int64_t>(n) * D;
                for (int d = 0; d < D; ++d) row[d] += trow[d];
            }
        Var o = push(std::move(out), {});
        set_back(o, [this, x, table, o, B, N, D]() {
            const Tensor& go = grad(o);
            Tensor &gx = g(x), &gt = g(table);
            axpy(gx, go, 1.0);
            for (int b = 0; b < B; ++b)
                for (int n = 0; n < N; ++n) {
                    const double* grow = go.data.data() + (static_cast<int64_t>(b) * N + n) * D;
                    double* trow = gt.data.data() + static_cast<int64_t>(n) * D;
                    for (int d = 0; d < D; ++d) trow[d] += grow[d];
                }
        });
        return o;
    }

    Var reshape(Var x, std::vector<int> shape) {
        const Tensor& tx = val(x);
        check(Tensor::numel_of(shape) == tx.numel(), "reshape: numel mismatch");
        Tensor out = tx;
        out.shape = std::move(shape);
        Var o = push(std::move(out), {});
        set_back(o, [this, x, o]() {
            const Tensor& go = grad(o);
            Tensor& gx = g(x);
            for (size_t i = 0; i < go.data.size(); ++i) gx.data[i] += go.data[i];
        });
        return o;
    }

    // ---- reductions ----

    Var mean_all(Var x) {
        const Tensor& tx = val(x);
        double s = 0.0;
        for (double v : tx.data) s += v;
        int64_t n = tx.numel();
        Var o = push(Tensor::scalar(s / static_cast<double>(n)), {});
        set_back(o, [this, x, o, n]() {
            double gv = grad(o).data[0] / static_cast<double>(n);
            Tensor& gx = g(x);
            for (double& v : gx.data) v += gv;
        });
        return o;
    }

    // mean squared difference over all elements
    Var mse(Var a, Var b) {
        const Tensor &ta = val(a), &tb = val(b);
        check(ta.same_shape(tb), "mse: shape mismatch");
        double s = 0.0;
        for (size_t i = 0; i < ta.data.size(); ++i) {
            double d = ta.data[i] - tb.data[i];
            s += d * d;
        }
        int64_t n = ta.numel();
        Var o = push(Tensor::scalar(s / static_cast<double>(n)), {});
        set_back(o, [this, a, b, o, n]() {
            double gv = grad(o).data[0] * 2.0 / static_cast<double>(n);
            const Tensor &ta2 = val(a), &tb2 = val(b);
            Tensor &ga = g(a), &gb = g(b);
            for (size_t i = 0; i < ta2.data.size(); ++i) {
                double d = gv * (ta2.data[i] - tb2.data[i]);
                ga.data[i] += d;
                gb.data[i] -= d;
            }
        });
        return o;
    }

    // ---- backward ----

    void backward(Var root) {
        check(root.valid() && val(root).numel() == 1, "backward: root must be a scalar");
        g(root).data[0] = 1.0;
        for (int k = root.id; k >= 0; --k) {
            Node& n = nodes_[static_cast<size_t>(k)];
            if (!n.grad.empty() && n.back) n.back();
        }
    }

    size_t size() const { return nodes_.size(); }

private:
    std::vector<Node> nodes_;

    Var push(Tensor v, std::function<void()> back) {
        nodes_.push_back(Node{std::move(v), Tensor(), std::move(back)});
        return Var{static_cast<int>(nodes_.size()) - 1};
    }

    void set_back(Var v, std::function<void()> f) { nodes_[static_cast<size_t>(v.id)].back = std::move(f); }

    Tensor& g(Var v) {
        Node& n = nodes_[static_cast<size_t>(v.id)];
        if (n.grad.empty()) n.grad = Tensor(n.value.shape);
        return n.grad;
    }

    const Tensor& grad(Var v) const { return nodes_[static_cast<size_t>(v.id)].grad; }

    static void axpy(Tensor& dst, const Tensor& src, double c) {
        for (size_t i = 0; i < src.data.size(); ++i) dst.data[i] += c * src.data[i];
    }
};

}  // namespace lvsr
