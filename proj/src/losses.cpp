#include "xmas/losses.hpp"

#include "xmas/field_ops.hpp"

namespace xmas {

std::vector<int> foreground_channels(const std::vector<int32_t>& label_set) {
    std::vector<int> fg;
    for (std::size_t c = 0; c < label_set.size(); ++c)
        if (label_set[c] != 0) fg.push_back(static_cast<int>(c));
    return fg;
}

static void require_same_labels(const std::vector<int32_t>& a, const std::vector<int32_t>& b,
                                const char* where) {
    if (a != b) throw std::invalid_argument(std::string(where) + ": label_set mismatch");
}

double soft_dice(const OneHotVolume& a, const OneHotVolume& b, double eps) {
    require_same_grid(a.grid, b.grid, "soft_dice");
    require_same_labels(a.label_set, b.label_set, "soft_dice");
    const auto ta = tensor_from_onehot<double>(a);
    const auto tb = tensor_from_onehot<double>(b);
    return loss_kernels::soft_dice_fg<double>(ta, tb, eps, foreground_channels(a.label_set),
                                              1.0, nullptr);
}

double smoothness(const DisplacementField& ddf) {
    for (double c : ddf.vectors)
        if (!std::isfinite(c)) throw std::invalid_argument("smoothness: non-finite field");
    return loss_kernels::smoothness_value(tensor_from_field<double>(ddf));
}

static LossBreakdown eval_total(const LabelVolume& la, const LabelVolume& lt,
                                const DisplacementField& u, const DisplacementField& v,
                                const LossConfig& cfg) {
    require_same_grid(la.grid, lt.grid, "registration loss");
    require_same_grid(la.grid, u.grid, "registration loss");
    require_same_grid(la.grid, v.grid, "registration loss");
    require_same_labels(la.label_set, lt.label_set, "registration loss");
    const auto oh_a = tensor_from_onehot<double>(one_hot(la));
    const auto oh_t = tensor_from_onehot<double>(one_hot(lt));
    const auto tu = tensor_from_field<double>(u);
    const auto tv = tensor_from_field<double>(v);
    return loss_kernels::total_loss_tensor<double>(oh_a, oh_t, tu, tv, cfg,
                                                   foreground_channels(la.label_set),
                                                   nullptr, nullptr);
}

double symmetric_dice_loss(const LabelVolume& la, const LabelVolume& lt,
                           const DisplacementField& u, const DisplacementField& v,
                           const LossConfig& cfg) {
    return eval_total(la, lt, u, v, cfg).loss_dice();
}

double invertible_loss(const LabelVolume& la, const LabelVolume& lt,
                       const DisplacementField& u, const DisplacementField& v, double eps) {
    LossConfig cfg;
    cfg.dice_epsilon = eps;
    return eval_total(la, lt, u, v, cfg).loss_inv();
}

LossBreakdown total_loss(const LabelVolume& la, const LabelVolume& lt,
                         const DisplacementField& u, const DisplacementField& v,
                         const LossConfig& cfg) {
    return eval_total(la, lt, u, v, cfg);
}

double label_dice(const LabelVolume& a, const LabelVolume& b, double eps) {
    require_same_grid(a.grid, b.grid, "label_dice");
    require_same_labels(a.label_set, b.label_set, "label_dice");
    double sum = 0.0;
    int nfg = 0;
    for (int32_t l : a.label_set) {
        if (l == 0) continue;
        std::size_t ca = 0, cb = 0, inter = 0;
        for (std::size_t i = 0; i < a.labels.size(); ++i) {
            const bool ia = a.labels[i] == l;
            const bool ib = b.labels[i] == l;
            ca += ia;
            cb += ib;
            inter += ia && ib;
        }
        sum += (2.0 * inter + eps) / (static_cast<double>(ca) + cb + eps);
        ++nfg;
    }
    return nfg == 0 ? 1.0 : sum / nfg;
}

} // namespace xmas
