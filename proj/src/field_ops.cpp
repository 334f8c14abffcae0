#include "xmas/field_ops.hpp"

#include <cmath>

#include "xmas/interp.hpp"

namespace xmas {

double trilinear_sample(const ScalarVolume& vol, const std::array<double, 3>& point) {
    for (double p : point)
        if (!std::isfinite(p)) throw std::invalid_argument("trilinear_sample: non-finite point");
    const auto cell = interp::locate<double>(vol.grid.shape, point[0], point[1], point[2]);
    return interp::gather(vol.values.data(), vol.grid.shape, cell);
}

ScalarVolume warp_scalar(const ScalarVolume& vol, const DisplacementField& ddf) {
    require_same_grid(vol.grid, ddf.grid, "warp_scalar");
    const auto& n = vol.grid.shape;
    const std::size_t nvox = vol.grid.voxel_count();
    const double* dx = ddf.vectors.data();
    const double* dy = dx + nvox;
    const double* dz = dy + nvox;
    ScalarVolume out(vol.grid);
    std::size_t i = 0;
    for (int z = 0; z < n[2]; ++z)
        for (int y = 0; y < n[1]; ++y)
            for (int x = 0; x < n[0]; ++x, ++i) {
                const auto cell = interp::locate<double>(n, x + dx[i], y + dy[i], z + dz[i]);
                out.values[i] = interp::gather(vol.values.data(), n, cell);
            }
    return out;
}

LabelVolume warp_labels(const LabelVolume& lab, const DisplacementField& ddf) {
    require_same_grid(lab.grid, ddf.grid, "warp_labels");
    const auto& n = lab.grid.shape;
    const std::size_t nvox = lab.grid.voxel_count();
    const double* dx = ddf.vectors.data();
    const double* dy = dx + nvox;
    const double* dz = dy + nvox;
    LabelVolume out(lab.grid, lab.label_set);
    std::size_t i = 0;
    for (int z = 0; z < n[2]; ++z)
        for (int y = 0; y < n[1]; ++y)
            for (int x = 0; x < n[0]; ++x, ++i) {
                int q[3];
                interp::nearest(n, x + dx[i], y + dy[i], z + dz[i], q);
                out.labels[i] = lab.labels[lab.grid.index(q[0], q[1], q[2])];
            }
    return out;
}

OneHotVolume one_hot(const LabelVolume& lab) {
    OneHotVolume oh(lab.grid, lab.label_set);
    const std::size_t nvox = lab.grid.voxel_count();
    const std::size_t k = lab.label_set.size();
    for (std::size_t i = 0; i < nvox; ++i) {
        const int32_t l = lab.labels[i];
        std::size_t c = k;
        for (std::size_t j = 0; j < k; ++j)
            if (lab.label_set[j] == l) { c = j; break; }
        if (c == k) throw std::invalid_argument("one_hot: label outside label_set");
        oh.channels[c * nvox + i] = 1.0;
    }
    return oh;
}

LabelVolume argmax_labels(const OneHotVolume& oh) {
    LabelVolume out(oh.grid, oh.label_set);
    const std::size_t nvox = oh.grid.voxel_count();
    const std::size_t k = oh.label_set.size();
    for (std::size_t i = 0; i < nvox; ++i) {
        std::size_t best = 0;
        double bv = oh.channels[i];
        for (std::size_t c = 1; c < k; ++c) {
            const double v = oh.channels[c * nvox + i];
            if (v > bv) { bv = v; best = c; }
        }
        out.labels[i] = oh.label_set[best];
    }
    return out;
}

OneHotVolume warp_onehot(const OneHotVolume& oh, const DisplacementField& ddf) {
    require_same_grid(oh.grid, ddf.grid, "warp_onehot");
    const auto& n = oh.grid.shape;
    const std::size_t nvox = oh.grid.voxel_count();
    const double* dx = ddf.vectors.data();
    const double* dy = dx + nvox;
    const double* dz = dy + nvox;
    OneHotVolume out(oh.grid, oh.label_set);
    std::size_t i = 0;
    for (int z = 0; z < n[2]; ++z)
        for (int y = 0; y < n[1]; ++y)
            for (int x = 0; x < n[0]; ++x, ++i) {
                const auto cell = interp::locate<double>(n, x + dx[i], y + dy[i], z + dz[i]);
                for (std::size_t c = 0; c < oh.channel_count(); ++c)
                    out.channels[c * nvox + i] = interp::gather(oh.channel(c), n, cell);
            }
    return out;
}

OneHotVolume restore_by_composition(const OneHotVolume& warped, const DisplacementField& second_ddf) {
    return warp_onehot(warped, second_ddf);
}

double inverse_consistency_residual(const DisplacementField& U, const DisplacementField& V) {
    require_same_grid(U.grid, V.grid, "inverse_consistency_residual");
    const auto& n = U.grid.shape;
    const std::size_t nvox = U.grid.voxel_count();
    const double* ux = U.vectors.data();
    const double* uy = ux + nvox;
    const double* uz = uy + nvox;
    const double* vc[3] = {V.vectors.data(), V.vectors.data() + nvox, V.vectors.data() + 2 * nvox};
    double total = 0.0;
    std::size_t i = 0;
    for (int z = 0; z < n[2]; ++z)
        for (int y = 0; y < n[1]; ++y)
            for (int x = 0; x < n[0]; ++x, ++i) {
                const auto cell = interp::locate<double>(n, x + ux[i], y + uy[i], z + uz[i]);
                const double rx = ux[i] + interp::gather(vc[0], n, cell);
                const double ry = uy[i] + interp::gather(vc[1], n, cell);
                const double rz = uz[i] + interp::gather(vc[2], n, cell);
                total += std::sqrt(rx * rx + ry * ry + rz * rz);
            }
    return total / static_cast<double>(nvox);
}

} // namespace xmas
