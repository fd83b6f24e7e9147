#pragma once

#include <vector>

#include "mno/common.hpp"
#include "mno/dft.hpp"
#include "mno/kernels.hpp"
#include "mno/tensor.hpp"

// Define-by-run reverse-mode tape over the handful of primitives the models
// need: affine maps, ReLU, elementwise add, the truncated DFT pair, per-mode
// complex multiplication, and MSE loss.  Values are computed eagerly; calling
// backward() fills gradient buffers indexed by the same slot ids.
//
// Leaves reference caller-owned tensors (no copies), so an optimizer can hold
// its parameters externally, rebuild the graph every step, and read gradients
// straight out of the tape.

namespace mno {

class Tape {
public:
    // ---- leaves ----------------------------------------------------------

    /// Real leaf; `t` must outlive the tape. Gradient is accumulated for it.
    int param(const RealTensor* t) { return push_rslot(t); }
    /// Complex leaf (spectral weights).
    int cparam(const ComplexTensor* t) { return push_cslot(t); }
    /// Real leaf treated as data; gradients are still defined but unused.
    int input(const RealTensor* t) { return push_rslot(t); }

    // ---- primitives -------------------------------------------------------

    /// y = x . W^T with x (..., m) and W (p, m) -> y (..., p).
    int linear(int x, int w) {
        const RealTensor& xv = rval(x);
        const RealTensor& wv = rval(w);
        if (wv.shape.size() != 2 || xv.cols() != wv.cols())
            throw ShapeError("linear: W must be (p,m) with m == x cols");
        std::vector<int> os = xv.shape;
        os.back() = wv.shape[0];
        int out = push_rslot(os);
        // y[i,o] = sum_c x[i,c] W[o,c]; go through a transposed copy of W so
        // the inner loop is a unit-stride axpy.
        const std::size_t n = xv.lead(), m = xv.cols(), p = wv.cols() ? static_cast<std::size_t>(wv.shape[0]) : 0;
        std::vector<double> wt(wv.numel());
        transpose(wv.data.data(), wt.data(), p, m);
        matmul(xv.data.data(), wt.data(), rslot(out).data.data(), n, m, p, false);
        nodes_.push_back({Op::linear, x, w, out, nullptr, nullptr});
        return out;
    }

    /// y = x + broadcast bias row b.
    int bias_add(int x, int b) {
        const RealTensor& xv = rval(x);
        const RealTensor& bv = rval(b);
        if (bv.numel() != xv.cols()) throw ShapeError("bias_add: bias length must equal x cols");
        int out = push_rslot(xv.shape);
        rslot(out).data = xv.data;
        add_bias_rows(rslot(out).data.data(), bv.data.data(), xv.lead(), xv.cols());
        nodes_.push_back({Op::bias_add, x, b, out, nullptr, nullptr});
        return out;
    }

    int relu(int x) {
        const RealTensor& xv = rval(x);
        int out = push_rslot(xv.shape);
        mno::relu(xv.data.data(), rslot(out).data.data(), xv.numel());
        nodes_.push_back({Op::relu, x, -1, out, nullptr, nullptr});
        return out;
    }

    int add(int a, int b) {
        const RealTensor& av = rval(a);
        const RealTensor& bv = rval(b);
        if (av.shape != bv.shape) throw ShapeError("add: shape mismatch");
        int out = push_rslot(av.shape);
        RealTensor& ov = rslot(out);
        for (std::size_t i = 0; i < ov.numel(); ++i) ov.data[i] = av.data[i] + bv.data[i];
        nodes_.push_back({Op::add, a, b, out, nullptr, nullptr});
        return out;
    }

    /// Truncated forward DFT over axis 1 of x (B, K, C); complex (B, k_max, C).
    int dft_fwd(int x, const DftPlan* plan) {
        const RealTensor& xv = rval(x);
        if (xv.shape.size() != 3 || xv.shape[1] != plan->K)
            throw ShapeError("dft_fwd: expected (B, K, C) with K matching the plan");
        const int B = xv.shape[0], C = xv.shape[2];
        int out = push_cslot({B, plan->k_max, C});
        std::vector<cplx> scratch(plan->scratch_len());
        const std::size_t xstride = static_cast<std::size_t>(plan->K) * C;
        const std::size_t ostride = static_cast<std::size_t>(plan->k_max) * C;
        for (int bi = 0; bi < B; ++bi)
            dft_forward(*plan, xv.data.data() + bi * xstride, C,
                        cslot(out).data.data() + bi * ostride, scratch.data());
        nodes_.push_back({Op::dft_fwd, x, -1, out, plan, nullptr});
        return out;
    }

    /// out[b,m,o] = sum_c R[m,o,c] * h[b,m,c]; the spectral convolution.
    int mode_mul(int r, int h) {
        const ComplexTensor& rv = cval(r);
        const ComplexTensor& hv = cval(h);
        if (rv.shape.size() != 3 || hv.shape.size() != 3 || rv.shape[0] != hv.shape[1] ||
            rv.shape[2] != hv.shape[2])
            throw ShapeError("mode_mul: R must be (k_max,O,C), h (B,k_max,C)");
        const int B = hv.shape[0], M = rv.shape[0], O = rv.shape[1], C = rv.shape[2];
        int out = push_cslot({B, M, O});
        ComplexTensor& ov = cslot(out);
        for (int bi = 0; bi < B; ++bi)
            for (int m = 0; m < M; ++m) {
                const cplx* hrow = hv.data.data() + (static_cast<std::size_t>(bi) * M + m) * C;
                cplx* orow = ov.data.data() + (static_cast<std::size_t>(bi) * M + m) * O;
                const cplx* rm = rv.data.data() + static_cast<std::size_t>(m) * O * C;
                for (int o = 0; o < O; ++o) {
                    cplx acc(0.0, 0.0);
                    const cplx* rrow = rm + static_cast<std::size_t>(o) * C;
                    for (int c = 0; c < C; ++c) acc += rrow[c] * hrow[c];
                    orow[o] = acc;
                }
            }
        nodes_.push_back({Op::mode_mul, r, h, out, nullptr, nullptr});
        return out;
    }

    /// Normalized inverse DFT back to the grid: h (B, k_max, C) -> (B, K, C).
    int dft_inv(int h, const DftPlan* plan) {
        const ComplexTensor& hv = cval(h);
        if (hv.shape.size() != 3 || hv.shape[1] != plan->k_max)
            throw ShapeError("dft_inv: expected (B, k_max, C) matching the plan");
        const int B = hv.shape[0], C = hv.shape[2];
        int out = push_rslot({B, plan->K, C});
        std::vector<cplx> scratch(plan->scratch_len());
        const std::size_t hstride = static_cast<std::size_t>(plan->k_max) * C;
        const std::size_t ystride = static_cast<std::size_t>(plan->K) * C;
        for (int bi = 0; bi < B; ++bi)
            dft_inverse(*plan, hv.data.data() + bi * hstride, C,
                        rslot(out).data.data() + bi * ystride, scratch.data());
        nodes_.push_back({Op::dft_inv, h, -1, out, plan, nullptr});
        return out;
    }

    /// Mean squared error against a constant target of identical shape.
    int mse(int pred, const RealTensor* target) {
        const RealTensor& pv = rval(pred);
        if (pv.shape != target->shape) throw ShapeError("mse: prediction/target shape mismatch");
        int out = push_rslot({1});
        double acc = 0.0;
        for (std::size_t i = 0; i < pv.numel(); ++i) {
            const double d = pv.data[i] - target->data[i];
            acc += d * d;
        }
        rslot(out).data[0] = acc / static_cast<double>(pv.numel());
        nodes_.push_back({Op::mse, pred, -1, out, nullptr, target});
        return out;
    }

    // ---- access ------------------------------------------------------------

    const RealTensor& rval(int id) const {
        const RSlot& s = rslots_[id];
        return s.ext ? *s.ext : s.own;
    }
    const ComplexTensor& cval(int id) const {
        const CSlot& s = cslots_[id];
        return s.ext ? *s.ext : s.own;
    }
    const RealTensor& rgrad(int id) const { return rgrads_[id]; }
    const ComplexTensor& cgrad(int id) const { return cgrads_[id]; }

    /// Reverse sweep seeding d(loss)/d(loss) = 1.
    void backward(int loss_id) {
        rgrads_.assign(rslots_.size(), RealTensor());
        cgrads_.assign(cslots_.size(), ComplexTensor());
        for (std::size_t i = 0; i < rslots_.size(); ++i) {
            rgrads_[i].shape = rval(static_cast<int>(i)).shape;
            rgrads_[i].data.assign(rval(static_cast<int>(i)).numel(), 0.0);
        }
        for (std::size_t i = 0; i < cslots_.size(); ++i) {
            cgrads_[i].shape = cval(static_cast<int>(i)).shape;
            cgrads_[i].data.assign(cval(static_cast<int>(i)).numel(), cplx(0.0, 0.0));
        }
        if (rgrads_[loss_id].numel() != 1) throw ShapeError("backward: loss must be scalar");
        rgrads_[loss_id].data[0] = 1.0;
        for (std::size_t ni = nodes_.size(); ni-- > 0;) backward_node(nodes_[ni]);
    }

private:
    enum class Op { linear, bias_add, relu, add, dft_fwd, mode_mul, dft_inv, mse };

    struct Node {
        Op op;
        int a, b, out;
        const DftPlan* plan;
        const RealTensor* target;
    };
    struct RSlot {
        const RealTensor* ext = nullptr;
        RealTensor own;
    };
    struct CSlot {
        const ComplexTensor* ext = nullptr;
        ComplexTensor own;
    };

    int push_rslot(const RealTensor* ext) {
        rslots_.push_back({ext, RealTensor()});
        return static_cast<int>(rslots_.size()) - 1;
    }
    int push_rslot(std::vector<int> shape) {
        rslots_.push_back({nullptr, RealTensor(std::move(shape))});
        return static_cast<int>(rslots_.size()) - 1;
    }
    int push_cslot(const ComplexTensor* ext) {
        cslots_.push_back({ext, ComplexTensor()});
        return static_cast<int>(cslots_.size()) - 1;
    }
    int push_cslot(std::vector<int> shape) {
        cslots_.push_back({nullptr, ComplexTensor(std::move(shape))});
        return static_cast<int>(cslots_.size()) - 1;
    }
    RealTensor& rslot(int id) { return rslots_[id].own; }
    ComplexTensor& cslot(int id) { return cslots_[id].own; }

    void backward_node(const Node& n) {
        switch (n.op) {
        case Op::linear: {
            const RealTensor& x = rval(n.a);
            const RealTensor& w = rval(n.b);
            const RealTensor& gy = rgrads_[n.out];
            const std::size_t nn = x.lead(), m = x.cols(), p = w.shape[0];
            // gx += gy . W ; gW += gy^T . x
            matmul(gy.data.data(), w.data.data(), rgrads_[n.a].data.data(), nn, p, m, true);
            matmul_at_b(gy.data.data(), x.data.data(), rgrads_[n.b].data.data(), nn, p, m);
            break;
        }
        case Op::bias_add: {
            const RealTensor& gy = rgrads_[n.out];
            const std::size_t nn = gy.lead(), p = gy.cols();
            axpy(1.0, gy.data.data(), rgrads_[n.a].data.data(), gy.numel());
            colsum_acc(gy.data.data(), rgrads_[n.b].data.data(), nn, p);
            break;
        }
        case Op::relu: {
            const RealTensor& y = rval(n.out);
            relu_backward(y.data.data(), rgrads_[n.out].data.data(), rgrads_[n.a].data.data(), y.numel());
            break;
        }
        case Op::add: {
            const RealTensor& gy = rgrads_[n.out];
            axpy(1.0, gy.data.data(), rgrads_[n.a].data.data(), gy.numel());
            axpy(1.0, gy.data.data(), rgrads_[n.b].data.data(), gy.numel());
            break;
        }
        case Op::dft_fwd: {
            const ComplexTensor& g = cgrads_[n.out];
            const int B = g.shape[0], C = g.shape[2];
            const std::size_t gstride = static_cast<std::size_t>(n.plan->k_max) * C;
            const std::size_t xstride = static_cast<std::size_t>(n.plan->K) * C;
            for (int bi = 0; bi < B; ++bi)
                dft_forward_adjoint(*n.plan, g.data.data() + bi * gstride, C,
                                    rgrads_[n.a].data.data() + bi * xstride);
            break;
        }
        case Op::mode_mul: {
            const ComplexTensor& rv = cval(n.a);
            const ComplexTensor& hv = cval(n.b);
            const ComplexTensor& g = cgrads_[n.out];
            const int B = hv.shape[0], M = rv.shape[0], O = rv.shape[1], C = rv.shape[2];
            ComplexTensor& gr = cgrads_[n.a];
            ComplexTensor& gh = cgrads_[n.b];
            for (int bi = 0; bi < B; ++bi)
                for (int m = 0; m < M; ++m) {
                    const std::size_t hoff = (static_cast<std::size_t>(bi) * M + m) * C;
                    const std::size_t goff = (static_cast<std::size_t>(bi) * M + m) * O;
                    const std::size_t roff = static_cast<std::size_t>(m) * O * C;
                    for (int o = 0; o < O; ++o) {
                        const cplx go = g.data[goff + o];
                        const cplx* rrow = rv.data.data() + roff + static_cast<std::size_t>(o) * C;
                        cplx* grrow = gr.data.data() + roff + static_cast<std::size_t>(o) * C;
                        for (int c = 0; c < C; ++c) {
                            gh.data[hoff + c] += std::conj(rrow[c]) * go;
                            grrow[c] += go * std::conj(hv.data[hoff + c]);
                        }
                    }
                }
            break;
        }
        case Op::dft_inv: {
            const RealTensor& gy = rgrads_[n.out];
            const int B = gy.shape[0], C = gy.shape[2];
            const std::size_t ystride = static_cast<std::size_t>(n.plan->K) * C;
            const std::size_t hstride = static_cast<std::size_t>(n.plan->k_max) * C;
            for (int bi = 0; bi < B; ++bi)
                dft_inverse_adjoint(*n.plan, gy.data.data() + bi * ystride, C,
                                    cgrads_[n.a].data.data() + bi * hstride);
            break;
        }
        case Op::mse: {
            const RealTensor& pv = rval(n.a);
            const double gl = rgrads_[n.out].data[0];
            const double s = 2.0 * gl / static_cast<double>(pv.numel());
            double* gx = rgrads_[n.a].data.data();
            for (std::size_t i = 0; i < pv.numel(); ++i)
                gx[i] += s * (pv.data[i] - n.target->data[i]);
            break;
        }
        }
    }

    std::vector<RSlot> rslots_;
    std::vector<CSlot> cslots_;
    std::vector<RealTensor> rgrads_;
    std::vector<ComplexTensor> cgrads_;
    std::vector<Node> nodes_;
};

} // namespace mno
