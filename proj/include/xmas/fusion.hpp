#ifndef XMAS_FUSION_HPP
#define XMAS_FUSION_HPP

#include <optional>
#include <vector>

#include "xmas/reg_net.hpp"
#include "xmas/sim_net.hpp"
#include "xmas/volume.hpp"

namespace xmas {

// Warped atlas labels (the candidate segmentations) with their warped
// intensity images, all on the target grid.
struct CandidateSet {
    std::vector<LabelVolume> labels;
    std::vector<ScalarVolume> images;

    int count() const { return static_cast<int>(labels.size()); }
    void validate() const;
};

// Per-voxel, per-atlas contribution weights; rows sum to one at every voxel.
struct FusionWeights {
    SpatialGrid grid;
    int natlases = 0;
    std::vector<double> w; // [atlas][voxel]

    FusionWeights() = default;
    FusionWeights(const SpatialGrid& g, int n)
        : grid(g), natlases(n), w(static_cast<std::size_t>(n) * g.voxel_count(), 0.0) {}

    double at(int atlas, std::size_t voxel) const {
        return w[static_cast<std::size_t>(atlas) * grid.voxel_count() + voxel];
    }
    double& at(int atlas, std::size_t voxel) {
        return w[static_cast<std::size_t>(atlas) * grid.voxel_count() + voxel];
    }
};

/// Patch-similarity weights on a stride lattice: at each lattice center the
/// target patch is the query and the co-located candidate-image patches are
/// the supports; off-lattice voxels inherit the nearest center's weights
/// (stride 1 evaluates every voxel exactly).
FusionWeights compute_weight_maps(const SimModel& sim, const ScalarVolume& target,
                                  const CandidateSet& cands, int patch_side, int stride);

/// Weighted plurality vote per voxel; ties go to the smallest label id.
LabelVolume plf_fuse(const CandidateSet& cands, const FusionWeights& w);

/// Uniform-weight vote, identical to plf_fuse with weights 1/N.
LabelVolume majority_vote(const CandidateSet& cands);

struct AtlasInput {
    ScalarVolume image; // normalized, on the target grid
    LabelVolume label;
};

enum class FusionMode { Plf, MajorityVote };

struct FusionSettings {
    int patch_side = 15;
    int stride = 4;
    FusionMode mode = FusionMode::Plf;
};

struct MasDiagnostics {
    std::vector<double> atlas_dice;          // vs gold, when provided
    std::vector<double> consistency_residual; // per atlas
    double weight_min = 0.0, weight_max = 0.0, weight_mean = 0.0;
    std::optional<double> fused_dice;        // vs gold, when provided
};

struct MasResult {
    LabelVolume fused;
    CandidateSet candidates;
    MasDiagnostics diagnostics;
};

/// Full pipeline for one target: register every atlas, build the candidate
/// set, derive fusion weights, vote.
MasResult mas_segment(const RegModel& reg, const SimModel* sim,
                      const std::vector<AtlasInput>& atlases, const ScalarVolume& target_image,
                      const FusionSettings& settings,
                      const LabelVolume* gold = nullptr);

} // namespace xmas

#endif
