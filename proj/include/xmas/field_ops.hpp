#ifndef XMAS_FIELD_OPS_HPP
#define XMAS_FIELD_OPS_HPP

#include <array>

#include "xmas/volume.hpp"

namespace xmas {

/// Trilinear blend of the 8 voxels surrounding `point` (voxel coordinates).
/// Exact at grid nodes; out-of-domain coordinates are clamped to the hull.
double trilinear_sample(const ScalarVolume& vol, const std::array<double, 3>& point);

/// output(x) = trilinear_sample(vol, x + ddf(x))
ScalarVolume warp_scalar(const ScalarVolume& vol, const DisplacementField& ddf);

/// Nearest-neighbor label pullback: output(x) = lab at nearest voxel to x + ddf(x).
LabelVolume warp_labels(const LabelVolume& lab, const DisplacementField& ddf);

/// Crisp indicator channels, one per entry of lab.label_set.
OneHotVolume one_hot(const LabelVolume& lab);

/// Per-voxel argmax over channels; ties go to the earliest label_set entry.
LabelVolume argmax_labels(const OneHotVolume& oh);

/// Channel-wise warp_scalar.
OneHotVolume warp_onehot(const OneHotVolume& oh, const DisplacementField& ddf);

/// Second-stage warp of an already-warped soft label: restored(x) = warped(x + second_ddf(x)).
OneHotVolume restore_by_composition(const OneHotVolume& warped, const DisplacementField& second_ddf);

/// Mean over voxels of || U(x) + V(x + U(x)) ||_2 with V interpolated trilinearly.
/// Zero when U and V are exact inverses; a diagnostic for field consistency.
double inverse_consistency_residual(const DisplacementField& U, const DisplacementField& V);

} // namespace xmas

#endif
