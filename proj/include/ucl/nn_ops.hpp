#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <vector>

#include "ucl/tensor.hpp"

// Structured ops on [B,C,H,W] activations: convolutions (general, depthwise,
// depthwise-separable), batch normalization, pooling, softmax and the fused
// cross-entropy loss, plus the finite-difference gradient checker.

namespace ucl {

namespace detail {

// cols[(c*kh+ky)*kw+kx, oy*ow+ox] = plane value, or zero inside padding
template <typename T>
void im2col(const T* in, std::size_t c_count, std::size_t h, std::size_t w, std::size_t kh,
            std::size_t kw, std::size_t stride, std::size_t pad, std::size_t oh, std::size_t ow,
            T* cols) {
    for (std::size_t c = 0; c < c_count; ++c) {
        const T* plane = in + c * h * w;
        for (std::size_t ky = 0; ky < kh; ++ky) {
            for (std::size_t kx = 0; kx < kw; ++kx) {
                T* crow = cols + ((c * kh + ky) * kw + kx) * oh * ow;
                for (std::size_t oy = 0; oy < oh; ++oy) {
                    std::ptrdiff_t iy =
                        static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) {
                        for (std::size_t ox = 0; ox < ow; ++ox) crow[oy * ow + ox] = T(0);
                        continue;
                    }
                    const T* irow = plane + static_cast<std::size_t>(iy) * w;
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                        std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                            static_cast<std::ptrdiff_t>(pad);
                        crow[oy * ow + ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w))
                                                 ? T(0)
                                                 : irow[static_cast<std::size_t>(ix)];
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const T* cols, std::size_t c_count, std::size_t h, std::size_t w, std::size_t kh,
                std::size_t kw, std::size_t stride, std::size_t pad, std::size_t oh,
                std::size_t ow, T* out) {
    for (std::size_t c = 0; c < c_count; ++c) {
        T* plane = out + c * h * w;
        for (std::size_t ky = 0; ky < kh; ++ky) {
            for (std::size_t kx = 0; kx < kw; ++kx) {
                const T* crow = cols + ((c * kh + ky) * kw + kx) * oh * ow;
                for (std::size_t oy = 0; oy < oh; ++oy) {
                    std::ptrdiff_t iy =
                        static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                    T* irow = plane + static_cast<std::size_t>(iy) * w;
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                        std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                            static_cast<std::ptrdiff_t>(pad);
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                        irow[static_cast<std::size_t>(ix)] += crow[oy * ow + ox];
                    }
                }
            }
        }
    }
}

inline std::size_t conv_out_extent(const char* op, std::size_t in, std::size_t k,
                                   std::size_t stride, std::size_t pad) {
    if (stride == 0) throw ValidationError(std::string(op) + ": stride must be positive");
    if (k == 0) throw ValidationError(std::string(op) + ": kernel extent must be positive");
    if (k > in + 2 * pad)
        throw ValidationError(std::string(op) + ": kernel extent " + std::to_string(k) +
                              " exceeds padded input extent " + std::to_string(in + 2 * pad));
    return (in + 2 * pad - k) / stride + 1;
}

} // namespace detail

template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const TensorT<T>& kernels, std::size_t stride,
                  std::size_t pad) {
    if (input.ndim() != 4 || kernels.ndim() != 4)
        throw ValidationError("conv2d: expects input [B,C,H,W] and kernels [F,C,kh,kw], got " +
                              shape_str(input.shape()) + " and " + shape_str(kernels.shape()));
    const std::size_t b_count = input.shape()[0], c = input.shape()[1], h = input.shape()[2],
                      w = input.shape()[3];
    const std::size_t f = kernels.shape()[0], kc = kernels.shape()[1], kh = kernels.shape()[2],
                      kw = kernels.shape()[3];
    if (kc != c)
        throw ValidationError("conv2d: kernel channels " + std::to_string(kc) +
                              " do not match input channels " + std::to_string(c));
    const std::size_t oh = detail::conv_out_extent("conv2d", h, kh, stride, pad);
    const std::size_t ow = detail::conv_out_extent("conv2d", w, kw, stride, pad);
    const std::size_t ckk = c * kh * kw, ohw = oh * ow;

    TensorT<T> out({b_count, f, oh, ow});
    {
        std::vector<T> cols(ckk * ohw);
        for (std::size_t b = 0; b < b_count; ++b) {
            detail::im2col(input.data().data() + b * c * h * w, c, h, w, kh, kw, stride, pad, oh,
                           ow, cols.data());
            detail::gemm_nn(kernels.data().data(), cols.data(), out.data().data() + b * f * ohw,
                            f, ckk, ohw);
        }
    }

    TapeT<T>* tape = detail::merge_tapes("conv2d", input, kernels);
    if (!tape) return out;
    const int pin = input.tracked() ? input.node() : -1;
    const int pker = kernels.tracked() ? kernels.node() : -1;
    auto insave = input.storage();
    auto kersave = kernels.storage();
    std::vector<int> parents;
    if (pin >= 0) parents.push_back(pin);
    if (pker >= 0) parents.push_back(pker);
    auto pull = [b_count, c, h, w, f, kh, kw, stride, pad, oh, ow, ckk, ohw, pin, pker, insave,
                 kersave](TapeT<T>& tape_, const std::vector<T>& gout) {
        std::vector<T> cols(pker >= 0 ? ckk * ohw : 0);
        std::vector<T> dcols(pin >= 0 ? ckk * ohw : 0);
        for (std::size_t b = 0; b < b_count; ++b) {
            const T* gslice = gout.data() + b * f * ohw;
            if (pker >= 0) {
                detail::im2col(insave->data() + b * c * h * w, c, h, w, kh, kw, stride, pad, oh,
                               ow, cols.data());
                detail::gemm_nt(gslice, cols.data(), tape_.grad_buffer(pker).data(), f, ohw, ckk);
            }
            if (pin >= 0) {
                std::fill(dcols.begin(), dcols.end(), T(0));
                detail::gemm_tn(kersave->data(), gslice, dcols.data(), f, ckk, ohw);
                detail::col2im_add(dcols.data(), c, h, w, kh, kw, stride, pad, oh, ow,
                                   tape_.grad_buffer(pin).data() + b * c * h * w);
            }
        }
    };
    out.bind_node(tape, tape->push("conv2d", out.shape(), std::move(parents), std::move(pull)));
    return out;
}

/// Per-channel spatial convolution: input [B,C,H,W], kernels [C,1,kh,kw].
template <typename T>
TensorT<T> depthwise_conv2d(const TensorT<T>& input, const TensorT<T>& kernels,
                            std::size_t stride, std::size_t pad) {
    if (input.ndim() != 4 || kernels.ndim() != 4 || kernels.shape()[1] != 1)
        throw ValidationError("depthwise_conv2d: expects input [B,C,H,W] and kernels [C,1,kh,kw], got " +
                              shape_str(input.shape()) + " and " + shape_str(kernels.shape()));
    const std::size_t b_count = input.shape()[0], c = input.shape()[1], h = input.shape()[2],
                      w = input.shape()[3];
    const std::size_t kc = kernels.shape()[0], kh = kernels.shape()[2], kw = kernels.shape()[3];
    if (kc != c)
        throw ValidationError("depthwise_conv2d: kernel count " + std::to_string(kc) +
                              " does not match input channels " + std::to_string(c));
    const std::size_t oh = detail::conv_out_extent("depthwise_conv2d", h, kh, stride, pad);
    const std::size_t ow = detail::conv_out_extent("depthwise_conv2d", w, kw, stride, pad);

    TensorT<T> out({b_count, c, oh, ow});
    const T* in = input.data().data();
    const T* ker = kernels.data().data();
    T* ov = out.data().data();
    for (std::size_t b = 0; b < b_count; ++b) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            const T* plane = in + (b * c + ch) * h * w;
            const T* k = ker + ch * kh * kw;
            T* oplane = ov + (b * c + ch) * oh * ow;
            for (std::size_t oy = 0; oy < oh; ++oy) {
                for (std::size_t ox = 0; ox < ow; ++ox) {
                    T acc = T(0);
                    for (std::size_t ky = 0; ky < kh; ++ky) {
                        std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                            static_cast<std::ptrdiff_t>(pad);
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                        for (std::size_t kx = 0; kx < kw; ++kx) {
                            std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                                static_cast<std::ptrdiff_t>(pad);
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                            acc += plane[static_cast<std::size_t>(iy) * w +
                                         static_cast<std::size_t>(ix)] *
                                   k[ky * kw + kx];
                        }
                    }
                    oplane[oy * ow + ox] = acc;
                }
            }
        }
    }

    TapeT<T>* tape = detail::merge_tapes("depthwise_conv2d", input, kernels);
    if (!tape) return out;
    const int pin = input.tracked() ? input.node() : -1;
    const int pker = kernels.tracked() ? kernels.node() : -1;
    auto insave = input.storage();
    auto kersave = kernels.storage();
    std::vector<int> parents;
    if (pin >= 0) parents.push_back(pin);
    if (pker >= 0) parents.push_back(pker);
    auto pull = [b_count, c, h, w, kh, kw, stride, pad, oh, ow, pin, pker, insave,
                 kersave](TapeT<T>& tape_, const std::vector<T>& gout) {
        T* din = pin >= 0 ? tape_.grad_buffer(pin).data() : nullptr;
        T* dker = pker >= 0 ? tape_.grad_buffer(pker).data() : nullptr;
        const T* in_ = insave->data();
        const T* ker_ = kersave->data();
        for (std::size_t b = 0; b < b_count; ++b) {
            for (std::size_t ch = 0; ch < c; ++ch) {
                const std::size_t base = (b * c + ch) * h * w;
                const T* k = ker_ + ch * kh * kw;
                const T* gplane = gout.data() + (b * c + ch) * oh * ow;
                for (std::size_t oy = 0; oy < oh; ++oy) {
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                        T g = gplane[oy * ow + ox];
                        if (g == T(0)) continue;
                        for (std::size_t ky = 0; ky < kh; ++ky) {
                            std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                                static_cast<std::ptrdiff_t>(pad);
                            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                            for (std::size_t kx = 0; kx < kw; ++kx) {
                                std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                                    static_cast<std::ptrdiff_t>(pad);
                                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                                std::size_t ii = base + static_cast<std::size_t>(iy) * w +
                                                 static_cast<std::size_t>(ix);
                                if (din) din[ii] += g * k[ky * kw + kx];
                                if (dker) dker[ch * kh * kw + ky * kw + kx] += g * in_[ii];
                            }
                        }
                    }
                }
            }
        }
    };
    out.bind_node(tape,
                  tape->push("depthwise_conv2d", out.shape(), std::move(parents), std::move(pull)));
    return out;
}

/// Depthwise spatial stage (stride/padding applied there) followed by a 1x1
/// cross-channel stage. Matches the two-step conv2d composition exactly.
template <typename T>
TensorT<T> depthwise_separable_conv2d(const TensorT<T>& input, const TensorT<T>& depthwise_kernels,
                                      const TensorT<T>& pointwise_kernels, std::size_t stride,
                                      std::size_t pad) {
    if (pointwise_kernels.ndim() != 4 || pointwise_kernels.shape()[2] != 1 ||
        pointwise_kernels.shape()[3] != 1)
        throw ValidationError("depthwise_separable_conv2d: pointwise kernels must be [F,C,1,1], got " +
                              shape_str(pointwise_kernels.shape()));
    if (input.ndim() == 4 && pointwise_kernels.shape()[1] != input.shape()[1])
        throw ValidationError(
            "depthwise_separable_conv2d: pointwise channels " +
            std::to_string(pointwise_kernels.shape()[1]) + " do not match input channels " +
            std::to_string(input.shape()[1]));
    TensorT<T> mid = depthwise_conv2d(input, depthwise_kernels, stride, pad);
    return conv2d(mid, pointwise_kernels, 1, 0);
}

enum class BnMode { Train, Eval };

/// Running statistics for one batch-norm layer. Lives outside the computation
/// record; train-mode forwards update it in place.
template <typename T>
struct BatchNormState {
    std::vector<T> running_mean;
    std::vector<T> running_var;
    bool initialized = false;

    explicit BatchNormState(std::size_t channels = 0)
        : running_mean(channels, T(0)), running_var(channels, T(1)) {}
};

template <typename T>
TensorT<T> batch_norm2d(const TensorT<T>& input, const TensorT<T>& gamma, const TensorT<T>& beta,
                        BnMode mode, BatchNormState<T>& state, T momentum = T(0.1),
                        T eps = T(1e-5)) {
    if (input.ndim() != 4)
        throw ValidationError("batch_norm2d: expects [B,C,H,W], got " + shape_str(input.shape()));
    const std::size_t b_count = input.shape()[0], c = input.shape()[1], h = input.shape()[2],
                      w = input.shape()[3];
    if (gamma.numel() != c || beta.numel() != c)
        throw ValidationError("batch_norm2d: gamma/beta must have " + std::to_string(c) +
                              " elements");
    if (state.running_mean.size() != c)
        throw ValidationError("batch_norm2d: running stats sized " +
                              std::to_string(state.running_mean.size()) + ", expected " +
                              std::to_string(c));
    const std::size_t n = b_count * h * w;
    const std::size_t hw = h * w;

    std::vector<T> mean(c), invstd(c);
    if (mode == BnMode::Train) {
        if (n < 2)
            throw ValidationError("batch_norm2d: train mode needs B*H*W >= 2, got " +
                                  std::to_string(n));
        for (std::size_t ch = 0; ch < c; ++ch) {
            T acc = T(0);
            for (std::size_t b = 0; b < b_count; ++b) {
                const T* plane = input.data().data() + (b * c + ch) * hw;
                for (std::size_t i = 0; i < hw; ++i) acc += plane[i];
            }
            T mu = acc / static_cast<T>(n);
            T vacc = T(0);
            for (std::size_t b = 0; b < b_count; ++b) {
                const T* plane = input.data().data() + (b * c + ch) * hw;
                for (std::size_t i = 0; i < hw; ++i) {
                    T d = plane[i] - mu;
                    vacc += d * d;
                }
            }
            T var = vacc / static_cast<T>(n);
            mean[ch] = mu;
            invstd[ch] = T(1) / std::sqrt(var + eps);
            T unbiased = n > 1 ? vacc / static_cast<T>(n - 1) : var;
            state.running_mean[ch] = (T(1) - momentum) * state.running_mean[ch] + momentum * mu;
            state.running_var[ch] = (T(1) - momentum) * state.running_var[ch] + momentum * unbiased;
        }
        state.initialized = true;
    } else {
        if (!state.initialized)
            throw ValidationError("batch_norm2d: eval mode before any running-stat update");
        for (std::size_t ch = 0; ch < c; ++ch) {
            mean[ch] = state.running_mean[ch];
            invstd[ch] = T(1) / std::sqrt(state.running_var[ch] + eps);
        }
    }

    TensorT<T> out(input.shape());
    auto xhat = std::make_shared<std::vector<T>>(input.numel());
    {
        const T* in = input.data().data();
        const T* g = gamma.data().data();
        const T* be = beta.data().data();
        T* ov = out.data().data();
        T* xh = xhat->data();
        for (std::size_t b = 0; b < b_count; ++b) {
            for (std::size_t ch = 0; ch < c; ++ch) {
                const std::size_t base = (b * c + ch) * hw;
                for (std::size_t i = 0; i < hw; ++i) {
                    T v = (in[base + i] - mean[ch]) * invstd[ch];
                    xh[base + i] = v;
                    ov[base + i] = g[ch] * v + be[ch];
                }
            }
        }
    }

    TapeT<T>* tape = nullptr;
    for (const TensorT<T>* t : {&input, &gamma, &beta}) {
        if (!t->tracked()) continue;
        if (tape && t->tape() != tape)
            throw ValidationError("batch_norm2d: operands recorded on different records");
        tape = t->tape();
    }
    if (!tape) return out;

    const int pin = input.tracked() ? input.node() : -1;
    const int pg = gamma.tracked() ? gamma.node() : -1;
    const int pb = beta.tracked() ? beta.node() : -1;
    auto gsave = gamma.storage();
    std::vector<int> parents;
    for (int p : {pin, pg, pb})
        if (p >= 0) parents.push_back(p);
    const bool train = mode == BnMode::Train;
    auto pull = [b_count, c, hw, n, pin, pg, pb, xhat, gsave, invstd, train](
                    TapeT<T>& tape_, const std::vector<T>& gout) {
        const T* xh = xhat->data();
        // per-channel reductions of gout and gout*xhat
        std::vector<T> sum_g(c, T(0)), sum_gx(c, T(0));
        for (std::size_t b = 0; b < b_count; ++b) {
            for (std::size_t ch = 0; ch < c; ++ch) {
                const std::size_t base = (b * c + ch) * hw;
                T sg = T(0), sgx = T(0);
                for (std::size_t i = 0; i < hw; ++i) {
                    sg += gout[base + i];
                    sgx += gout[base + i] * xh[base + i];
                }
                sum_g[ch] += sg;
                sum_gx[ch] += sgx;
            }
        }
        if (pg >= 0) {
            auto& dg = tape_.grad_buffer(pg);
            for (std::size_t ch = 0; ch < c; ++ch) dg[ch] += sum_gx[ch];
        }
        if (pb >= 0) {
            auto& db = tape_.grad_buffer(pb);
            for (std::size_t ch = 0; ch < c; ++ch) db[ch] += sum_g[ch];
        }
        if (pin >= 0) {
            auto& din = tape_.grad_buffer(pin);
            const T* gam = gsave->data();
            const T inv_n = T(1) / static_cast<T>(n);
            for (std::size_t b = 0; b < b_count; ++b) {
                for (std::size_t ch = 0; ch < c; ++ch) {
                    const std::size_t base = (b * c + ch) * hw;
                    const T k = gam[ch] * invstd[ch];
                    if (train) {
                        for (std::size_t i = 0; i < hw; ++i)
                            din[base + i] += k * (gout[base + i] - inv_n * sum_g[ch] -
                                                  inv_n * xh[base + i] * sum_gx[ch]);
                    } else {
                        for (std::size_t i = 0; i < hw; ++i) din[base + i] += k * gout[base + i];
                    }
                }
            }
        }
    };
    out.bind_node(tape,
                  tape->push("batch_norm2d", out.shape(), std::move(parents), std::move(pull)));
    return out;
}

/// Max pooling, no padding; ties resolve to the first maximum in scan order.
template <typename T>
TensorT<T> max_pool2d(const TensorT<T>& input, std::size_t k, std::size_t stride) {
    if (input.ndim() != 4)
        throw ValidationError("max_pool2d: expects [B,C,H,W], got " + shape_str(input.shape()));
    const std::size_t b_count = input.shape()[0], c = input.shape()[1], h = input.shape()[2],
                      w = input.shape()[3];
    const std::size_t oh = detail::conv_out_extent("max_pool2d", h, k, stride, 0);
    const std::size_t ow = detail::conv_out_extent("max_pool2d", w, k, stride, 0);
    TensorT<T> out({b_count, c, oh, ow});
    auto argmax = std::make_shared<std::vector<std::uint32_t>>(out.numel());
    const T* in = input.data().data();
    T* ov = out.data().data();
    for (std::size_t bc = 0; bc < b_count * c; ++bc) {
        const T* plane = in + bc * h * w;
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                std::size_t best = (oy * stride) * w + ox * stride;
                T bv = plane[best];
                for (std::size_t ky = 0; ky < k; ++ky) {
                    for (std::size_t kx = 0; kx < k; ++kx) {
                        std::size_t ii = (oy * stride + ky) * w + ox * stride + kx;
                        if (plane[ii] > bv) {
                            bv = plane[ii];
                            best = ii;
                        }
                    }
                }
                ov[bc * oh * ow + oy * ow + ox] = bv;
                (*argmax)[bc * oh * ow + oy * ow + ox] = static_cast<std::uint32_t>(best);
            }
        }
    }
    if (!input.tracked()) return out;
    TapeT<T>* tape = input.tape();
    const int pin = input.node();
    const std::size_t plane_in = h * w, plane_out = oh * ow;
    auto pull = [pin, argmax, plane_in, plane_out, b_count, c](TapeT<T>& tape_,
                                                               const std::vector<T>& gout) {
        auto& din = tape_.grad_buffer(pin);
        for (std::size_t bc = 0; bc < b_count * c; ++bc)
            for (std::size_t i = 0; i < plane_out; ++i)
                din[bc * plane_in + (*argmax)[bc * plane_out + i]] += gout[bc * plane_out + i];
    };
    out.bind_node(tape, tape->push("max_pool2d", out.shape(), {pin}, std::move(pull)));
    return out;
}

/// [B,C,H,W] -> [B,C], averaging each plane.
template <typename T>
TensorT<T> global_avg_pool2d(const TensorT<T>& input) {
    if (input.ndim() != 4)
        throw ValidationError("global_avg_pool2d: expects [B,C,H,W], got " +
                              shape_str(input.shape()));
    const std::size_t b_count = input.shape()[0], c = input.shape()[1],
                      hw = input.shape()[2] * input.shape()[3];
    if (hw == 0) throw ValidationError("global_avg_pool2d: empty spatial extent");
    TensorT<T> out({b_count, c});
    const T* in = input.data().data();
    T* ov = out.data().data();
    for (std::size_t bc = 0; bc < b_count * c; ++bc) {
        T acc = T(0);
        for (std::size_t i = 0; i < hw; ++i) acc += in[bc * hw + i];
        ov[bc] = acc / static_cast<T>(hw);
    }
    if (!input.tracked()) return out;
    TapeT<T>* tape = input.tape();
    const int pin = input.node();
    auto pull = [pin, b_count, c, hw](TapeT<T>& tape_, const std::vector<T>& gout) {
        auto& din = tape_.grad_buffer(pin);
        const T inv = T(1) / static_cast<T>(hw);
        for (std::size_t bc = 0; bc < b_count * c; ++bc)
            for (std::size_t i = 0; i < hw; ++i) din[bc * hw + i] += gout[bc] * inv;
    };
    out.bind_node(tape, tape->push("global_avg_pool2d", out.shape(), {pin}, std::move(pull)));
    return out;
}

/// Row-wise softmax over [B,K] logits.
template <typename T>
TensorT<T> softmax_rows(const TensorT<T>& logits) {
    if (logits.ndim() != 2)
        throw ValidationError("softmax: expects [B,K], got " + shape_str(logits.shape()));
    const std::size_t rows = logits.shape()[0], k = logits.shape()[1];
    TensorT<T> out(logits.shape());
    const T* lv = logits.data().data();
    T* ov = out.data().data();
    for (std::size_t r = 0; r < rows; ++r) {
        T m = lv[r * k];
        for (std::size_t j = 1; j < k; ++j) m = std::max(m, lv[r * k + j]);
        T z = T(0);
        for (std::size_t j = 0; j < k; ++j) {
            T e = std::exp(lv[r * k + j] - m);
            ov[r * k + j] = e;
            z += e;
        }
        for (std::size_t j = 0; j < k; ++j) ov[r * k + j] /= z;
    }
    if (!logits.tracked()) return out;
    TapeT<T>* tape = logits.tape();
    const int pin = logits.node();
    auto osave = out.storage();
    auto pull = [pin, osave, rows, k](TapeT<T>& tape_, const std::vector<T>& gout) {
        auto& din = tape_.grad_buffer(pin);
        const T* o = osave->data();
        for (std::size_t r = 0; r < rows; ++r) {
            T dot = T(0);
            for (std::size_t j = 0; j < k; ++j) dot += gout[r * k + j] * o[r * k + j];
            for (std::size_t j = 0; j < k; ++j)
                din[r * k + j] += o[r * k + j] * (gout[r * k + j] - dot);
        }
    };
    out.bind_node(tape, tape->push("softmax", out.shape(), {pin}, std::move(pull)));
    return out;
}

/// Mean cross-entropy of [B,K] logits against integer labels (log-sum-exp
/// stabilized). Returns a scalar.
template <typename T>
TensorT<T> cross_entropy_mean(const TensorT<T>& logits, const std::vector<int>& labels) {
    if (logits.ndim() != 2)
        throw ValidationError("cross_entropy: expects [B,K] logits, got " +
                              shape_str(logits.shape()));
    const std::size_t rows = logits.shape()[0], k = logits.shape()[1];
    if (labels.size() != rows)
        throw ValidationError("cross_entropy: " + std::to_string(labels.size()) +
                              " labels for " + std::to_string(rows) + " rows");
    if (rows == 0) throw ValidationError("cross_entropy: empty batch");
    for (std::size_t r = 0; r < rows; ++r)
        if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= k)
            throw ValidationError("cross_entropy: label " + std::to_string(labels[r]) +
                                  " out of range at row " + std::to_string(r));

    auto probs = std::make_shared<std::vector<T>>(rows * k);
    const T* lv = logits.data().data();
    T acc = T(0);
    for (std::size_t r = 0; r < rows; ++r) {
        T m = lv[r * k];
        for (std::size_t j = 1; j < k; ++j) m = std::max(m, lv[r * k + j]);
        T z = T(0);
        for (std::size_t j = 0; j < k; ++j) {
            T e = std::exp(lv[r * k + j] - m);
            (*probs)[r * k + j] = e;
            z += e;
        }
        for (std::size_t j = 0; j < k; ++j) (*probs)[r * k + j] /= z;
        acc += m + std::log(z) - lv[r * k + static_cast<std::size_t>(labels[r])];
    }
    TensorT<T> out = TensorT<T>::scalar(acc / static_cast<T>(rows));
    if (!logits.tracked()) return out;
    TapeT<T>* tape = logits.tape();
    const int pin = logits.node();
    auto labsave = std::make_shared<std::vector<int>>(labels);
    auto pull = [pin, probs, labsave, rows, k](TapeT<T>& tape_, const std::vector<T>& gout) {
        auto& din = tape_.grad_buffer(pin);
        const T scale = gout[0] / static_cast<T>(rows);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < k; ++j)
                din[r * k + j] += scale * ((*probs)[r * k + j] -
                                           (static_cast<std::size_t>((*labsave)[r]) == j ? T(1)
                                                                                         : T(0)));
    };
    out.bind_node(tape, tape->push("cross_entropy", out.shape(), {pin}, std::move(pull)));
    return out;
}

// ---------------------------------------------------------------------------
// gradient checking

/// Compares analytic gradients of a scalar-valued function against central
/// finite differences, coordinate by coordinate. Relative error uses
/// max(|analytic|, |numeric|, 1e-8) as denominator.
template <typename T>
double grad_check(const std::function<TensorT<T>(const std::vector<TensorT<T>>&)>& fn,
                  const std::vector<TensorT<T>>& points, T eps) {
    TapeT<T> tape;
    std::vector<TensorT<T>> tracked;
    tracked.reserve(points.size());
    for (const auto& p : points) tracked.push_back(tape.track(p.clone()));
    TensorT<T> loss = fn(tracked);
    if (loss.numel() != 1)
        throw ValidationError("grad_check: function must return a scalar");
    GradMapT<T> grads = backward(loss);

    double worst = 0.0;
    for (std::size_t pi = 0; pi < points.size(); ++pi) {
        TensorT<T> analytic = grads.at_or_zero(tracked[pi]);
        for (std::size_t i = 0; i < points[pi].numel(); ++i) {
            std::vector<TensorT<T>> probe;
            probe.reserve(points.size());
            for (const auto& p : points) probe.push_back(p.clone());
            probe[pi].data()[i] += eps;
            const double fp = static_cast<double>(fn(probe).item());
            probe[pi].data()[i] -= T(2) * eps;
            const double fm = static_cast<double>(fn(probe).item());
            const double numeric = (fp - fm) / (2.0 * static_cast<double>(eps));
            const double a = static_cast<double>(analytic.data()[i]);
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    }
    return worst;
}

} // namespace ucl
