#ifndef XMAS_LOSSES_HPP
#define XMAS_LOSSES_HPP

#include <cmath>
#include <vector>

#include "xmas/interp.hpp"
#include "xmas/tensor.hpp"
#include "xmas/volume.hpp"

namespace xmas {

struct LossConfig {
    double lambda1 = 0.3;       // weight of the smoothness regularizer
    double lambda2 = 0.2;       // weight of the invertibility penalty
    double dice_epsilon = 1e-5;
};

// One evaluation of the registration objective, split into its terms.
// dice_forward is the term driven by U (warped atlas vs target), dice_backward
// the one driven by V.
struct LossBreakdown {
    double dice_forward = 0.0;
    double dice_backward = 0.0;
    double smooth_u = 0.0;
    double smooth_v = 0.0;
    double inv_a = 0.0;
    double inv_t = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double total = 0.0;

    double loss_dice() const { return dice_forward + dice_backward + lambda1 * (smooth_u + smooth_v); }
    double loss_inv() const { return inv_a + inv_t; }
    double recompose() const { return loss_dice() + lambda2 * loss_inv(); }
};

/// Soft Dice dissimilarity 1 - (2*sum(a*b)+eps)/(sum(a)+sum(b)+eps), averaged
/// over foreground channels. 0 for identical crisp masks, ~1 for disjoint ones.
double soft_dice(const OneHotVolume& a, const OneHotVolume& b, double eps = 1e-5);

/// Mean over forward-difference sites of the squared difference vector norm.
/// Zero for constant fields; invariant to adding a global translation.
double smoothness(const DisplacementField& ddf);

/// Eq-style symmetric objective: dice(L_t, warp(L_a,U)) + dice(L_a, warp(L_t,V))
/// + lambda1 * (smoothness(U) + smoothness(V)), on trilinearly warped one-hots.
double symmetric_dice_loss(const LabelVolume& la, const LabelVolume& lt,
                           const DisplacementField& u, const DisplacementField& v,
                           const LossConfig& cfg);

/// dice(restore(warp(L_a,U),V), L_a) + dice(restore(warp(L_t,V),U), L_t);
/// zero (up to interpolation) when U and V invert each other.
double invertible_loss(const LabelVolume& la, const LabelVolume& lt,
                       const DisplacementField& u, const DisplacementField& v,
                       double eps = 1e-5);

/// Full objective with per-term breakdown.
LossBreakdown total_loss(const LabelVolume& la, const LabelVolume& lt,
                         const DisplacementField& u, const DisplacementField& v,
                         const LossConfig& cfg);

/// Crisp foreground-averaged Dice similarity between two label volumes,
/// smoothed by eps (both-empty structures count as fully similar).
double label_dice(const LabelVolume& a, const LabelVolume& b, double eps = 1e-5);

// ---------------------------------------------------------------------------
// Differentiable tensor core. The loss graph is small and fixed, so gradients
// are hand-assembled rather than taped.

namespace loss_kernels {

template <typename T>
void warp_forward(const Tensor<T>& in, const Tensor<T>& d, Tensor<T>& out) {
    const auto& n = in.dims;
    const std::size_t nvox = in.plane();
    const T* dx = d.ch(0);
    const T* dy = d.ch(1);
    const T* dz = d.ch(2);
    std::size_t i = 0;
    for (int z = 0; z < n[2]; ++z)
        for (int y = 0; y < n[1]; ++y)
            for (int x = 0; x < n[0]; ++x, ++i) {
                const auto cell = interp::locate<T>(n, x + dx[i], y + dy[i], z + dz[i]);
                for (int c = 0; c < in.channels; ++c)
                    out.v[c * nvox + i] = interp::gather(in.ch(c), n, cell);
            }
}

// Accumulates d(loss)/d(in) into gin (if non-null) and d(loss)/d(d) into gd.
template <typename T>
void warp_backward(const Tensor<T>& in, const Tensor<T>& d, const Tensor<T>& gout,
                   Tensor<T>* gin, Tensor<T>& gd) {
    const auto& n = in.dims;
    const std::size_t nvox = in.plane();
    const T* dx = d.ch(0);
    const T* dy = d.ch(1);
    const T* dz = d.ch(2);
    std::size_t i = 0;
    for (int z = 0; z < n[2]; ++z)
        for (int y = 0; y < n[1]; ++y)
            for (int x = 0; x < n[0]; ++x, ++i) {
                const auto cell = interp::locate<T>(n, x + dx[i], y + dy[i], z + dz[i]);
                T pos_grad[3] = {T(0), T(0), T(0)};
                for (int c = 0; c < in.channels; ++c) {
                    const T g = gout.v[c * nvox + i];
                    if (g == T(0)) continue;
                    if (gin) interp::scatter(gin->ch(c), n, cell, g);
                    T sg[3];
                    interp::gather_grad(in.ch(c), n, cell, sg);
                    pos_grad[0] += g * sg[0];
                    pos_grad[1] += g * sg[1];
                    pos_grad[2] += g * sg[2];
                }
                gd.v[i] += pos_grad[0];
                gd.v[nvox + i] += pos_grad[1];
                gd.v[2 * nvox + i] += pos_grad[2];
            }
}

// Soft Dice dissimilarity of `b` against fixed reference `a`, averaged over
// the listed channels. Returns the value; accumulates coeff * d/d(b) into gb
// when gb is non-null.
template <typename T>
double soft_dice_fg(const Tensor<T>& a, const Tensor<T>& b, double eps,
                    const std::vector<int>& fg_channels, double coeff, Tensor<T>* gb) {
    if (fg_channels.empty()) return 0.0;
    const std::size_t nvox = a.plane();
    double dis_sum = 0.0;
    for (int c : fg_channels) {
        const T* ac = a.ch(c);
        const T* bc = b.ch(c);
        double sab = 0.0, sa = 0.0, sb = 0.0;
        for (std::size_t i = 0; i < nvox; ++i) {
            sab += static_cast<double>(ac[i]) * bc[i];
            sa += ac[i];
            sb += bc[i];
        }
        const double num = 2.0 * sab + eps;
        const double den = sa + sb + eps;
        dis_sum += 1.0 - num / den;
        if (gb) {
            // d(1 - num/den)/d(b_i) = (num - 2*a_i*den) / den^2
            const double scale = coeff / (fg_channels.size() * den * den);
            T* gbc = gb->ch(c);
            for (std::size_t i = 0; i < nvox; ++i)
                gbc[i] += static_cast<T>(scale * (num - 2.0 * static_cast<double>(ac[i]) * den));
        }
    }
    return dis_sum / fg_channels.size();
}

template <typename T>
std::size_t diff_site_count(const std::array<int, 3>& n) {
    return static_cast<std::size_t>(n[0] - 1) * n[1] * n[2] +
           static_cast<std::size_t>(n[0]) * (n[1] - 1) * n[2] +
           static_cast<std::size_t>(n[0]) * n[1] * (n[2] - 1);
}

template <typename T>
double smoothness_value(const Tensor<T>& d) {
    const auto& n = d.dims;
    const std::size_t nvox = d.plane();
    const std::size_t strides[3] = {1, static_cast<std::size_t>(n[0]),
                                    static_cast<std::size_t>(n[0]) * n[1]};
    double sum = 0.0;
    for (int c = 0; c < 3; ++c) {
        const T* p = d.ch(c);
        for (int axis = 0; axis < 3; ++axis) {
            const std::size_t s = strides[axis];
            std::size_t i = 0;
            for (int z = 0; z < n[2]; ++z)
                for (int y = 0; y < n[1]; ++y)
                    for (int x = 0; x < n[0]; ++x, ++i) {
                        const int coord = axis == 0 ? x : (axis == 1 ? y : z);
                        if (coord >= n[axis] - 1) continue;
                        const double diff = static_cast<double>(p[i + s]) - p[i];
                        sum += diff * diff;
                    }
        }
    }
    return sum / static_cast<double>(diff_site_count<T>(n));
}

template <typename T>
void smoothness_grad(const Tensor<T>& d, double coeff, Tensor<T>& gd) {
    const auto& n = d.dims;
    const std::size_t strides[3] = {1, static_cast<std::size_t>(n[0]),
                                    static_cast<std::size_t>(n[0]) * n[1]};
    const double scale = 2.0 * coeff / static_cast<double>(diff_site_count<T>(n));
    for (int c = 0; c < 3; ++c) {
        const T* p = d.ch(c);
        T* g = gd.ch(c);
        for (int axis = 0; axis < 3; ++axis) {
            const std::size_t s = strides[axis];
            std::size_t i = 0;
            for (int z = 0; z < n[2]; ++z)
                for (int y = 0; y < n[1]; ++y)
                    for (int x = 0; x < n[0]; ++x, ++i) {
                        const int coord = axis == 0 ? x : (axis == 1 ? y : z);
                        if (coord >= n[axis] - 1) continue;
                        const T diff = static_cast<T>(scale * (static_cast<double>(p[i + s]) - p[i]));
                        g[i] -= diff;
                        g[i + s] += diff;
                    }
        }
    }
}

// Whole registration objective on tensors. When gu/gv are non-null the
// gradients w.r.t. both fields are accumulated into them.
template <typename T>
LossBreakdown total_loss_tensor(const Tensor<T>& oh_a, const Tensor<T>& oh_t,
                                const Tensor<T>& u, const Tensor<T>& v,
                                const LossConfig& cfg, const std::vector<int>& fg,
                                Tensor<T>* gu, Tensor<T>* gv) {
    LossBreakdown out;
    out.lambda1 = cfg.lambda1;
    out.lambda2 = cfg.lambda2;

    Tensor<T> warped_a(oh_a.channels, oh_a.dims);   // atlas labels pushed by U
    Tensor<T> warped_t(oh_t.channels, oh_t.dims);   // target labels pushed by V
    warp_forward(oh_a, u, warped_a);
    warp_forward(oh_t, v, warped_t);
    Tensor<T> restored_a(oh_a.channels, oh_a.dims); // warp(warp(a,U),V)
    Tensor<T> restored_t(oh_t.channels, oh_t.dims); // warp(warp(t,V),U)
    warp_forward(warped_a, v, restored_a);
    warp_forward(warped_t, u, restored_t);

    const bool want_grad = gu != nullptr && gv != nullptr;
    Tensor<T> g_warped_a, g_warped_t, g_restored_a, g_restored_t;
    if (want_grad) {
        g_warped_a = Tensor<T>(oh_a.channels, oh_a.dims);
        g_warped_t = Tensor<T>(oh_t.channels, oh_t.dims);
        g_restored_a = Tensor<T>(oh_a.channels, oh_a.dims);
        g_restored_t = Tensor<T>(oh_t.channels, oh_t.dims);
    }

    out.dice_forward = soft_dice_fg(oh_t, warped_a, cfg.dice_epsilon, fg, 1.0,
                                    want_grad ? &g_warped_a : nullptr);
    out.dice_backward = soft_dice_fg(oh_a, warped_t, cfg.dice_epsilon, fg, 1.0,
                                     want_grad ? &g_warped_t : nullptr);
    out.inv_a = soft_dice_fg(oh_a, restored_a, cfg.dice_epsilon, fg, cfg.lambda2,
                             want_grad ? &g_restored_a : nullptr);
    out.inv_t = soft_dice_fg(oh_t, restored_t, cfg.dice_epsilon, fg, cfg.lambda2,
                             want_grad ? &g_restored_t : nullptr);
    out.smooth_u = smoothness_value(u);
    out.smooth_v = smoothness_value(v);
    out.total = out.recompose();

    if (want_grad) {
        // restored_a = warp(warped_a, V): feeds g_warped_a and gv
        warp_backward(warped_a, v, g_restored_a, &g_warped_a, *gv);
        // restored_t = warp(warped_t, U): feeds g_warped_t and gu
        warp_backward(warped_t, u, g_restored_t, &g_warped_t, *gu);
        // warped_a = warp(oh_a, U); warped_t = warp(oh_t, V)
        warp_backward(oh_a, u, g_warped_a, static_cast<Tensor<T>*>(nullptr), *gu);
        warp_backward(oh_t, v, g_warped_t, static_cast<Tensor<T>*>(nullptr), *gv);
        smoothness_grad(u, cfg.lambda1, *gu);
        smoothness_grad(v, cfg.lambda1, *gv);
    }
    return out;
}

} // namespace loss_kernels

/// Channel indices of the non-background labels.
std::vector<int> foreground_channels(const std::vector<int32_t>& label_set);

} // namespace xmas

#endif
