#ifndef XMAS_VOLUME_HPP
#define XMAS_VOLUME_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "xmas/errors.hpp"

namespace xmas {

// Regular voxel grid over the common spatial domain. Displacements and all
// sampling coordinates are expressed in voxel units; spacing is carried as
// metadata only.
struct SpatialGrid {
    std::array<int, 3> shape{0, 0, 0};       // voxels per axis (x, y, z)
    std::array<double, 3> spacing{1.0, 1.0, 1.0};

    SpatialGrid() = default;
    SpatialGrid(int nx, int ny, int nz, double sx = 1.0, double sy = 1.0, double sz = 1.0)
        : shape{nx, ny, nz}, spacing{sx, sy, sz} {
        validate();
    }

    void validate() const {
        for (int a = 0; a < 3; ++a) {
            if (shape[a] < 2) throw ConfigError("grid shape must be >= 2 along every axis");
            if (!(spacing[a] > 0.0)) throw ConfigError("grid spacing must be positive");
        }
    }

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(shape[0]) * shape[1] * shape[2];
    }

    std::size_t index(int x, int y, int z) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(shape[0]) * (static_cast<std::size_t>(y) +
               static_cast<std::size_t>(shape[1]) * static_cast<std::size_t>(z));
    }

    bool operator==(const SpatialGrid& o) const {
        return shape == o.shape && spacing == o.spacing;
    }
    bool operator!=(const SpatialGrid& o) const { return !(*this == o); }
};

inline void require_same_grid(const SpatialGrid& a, const SpatialGrid& b, const char* where) {
    if (a != b) throw ShapeError(std::string(where) + ": grid mismatch");
}

// Real-valued intensity volume. Values are stored x-fastest.
struct ScalarVolume {
    SpatialGrid grid;
    std::vector<double> values;

    ScalarVolume() = default;
    explicit ScalarVolume(const SpatialGrid& g, double fill = 0.0)
        : grid(g), values(g.voxel_count(), fill) {}

    double& at(int x, int y, int z) { return values[grid.index(x, y, z)]; }
    double at(int x, int y, int z) const { return values[grid.index(x, y, z)]; }
};

// Discrete label volume with its admissible label set. label_set is ordered
// and always contains the background id 0.
struct LabelVolume {
    SpatialGrid grid;
    std::vector<int32_t> labels;
    std::vector<int32_t> label_set{0};

    LabelVolume() = default;
    LabelVolume(const SpatialGrid& g, std::vector<int32_t> set)
        : grid(g), labels(g.voxel_count(), 0), label_set(std::move(set)) {
        if (std::find(label_set.begin(), label_set.end(), 0) == label_set.end())
            throw ConfigError("label_set must contain background id 0");
    }

    int32_t& at(int x, int y, int z) { return labels[grid.index(x, y, z)]; }
    int32_t at(int x, int y, int z) const { return labels[grid.index(x, y, z)]; }

    bool in_label_set(int32_t l) const {
        return std::find(label_set.begin(), label_set.end(), l) != label_set.end();
    }
};

// Per-label soft indicator channels; the differentiable stand-in for a
// LabelVolume inside the losses. Channel c corresponds to label_set[c].
// Channel storage is channel-major, x-fastest within a channel.
struct OneHotVolume {
    SpatialGrid grid;
    std::vector<int32_t> label_set;
    std::vector<double> channels;

    OneHotVolume() = default;
    OneHotVolume(const SpatialGrid& g, std::vector<int32_t> set)
        : grid(g), label_set(std::move(set)),
          channels(g.voxel_count() * label_set.size(), 0.0) {}

    std::size_t channel_count() const { return label_set.size(); }
    double* channel(std::size_t c) { return channels.data() + c * grid.voxel_count(); }
    const double* channel(std::size_t c) const { return channels.data() + c * grid.voxel_count(); }
};

// Dense displacement field, one 3-vector per voxel, in voxel units.
// Component-major storage: component c of voxel (x,y,z) lives at
// c * voxel_count + grid.index(x,y,z).
struct DisplacementField {
    SpatialGrid grid;
    std::vector<double> vectors;

    DisplacementField() = default;
    explicit DisplacementField(const SpatialGrid& g)
        : grid(g), vectors(3 * g.voxel_count(), 0.0) {}

    double& comp(int c, int x, int y, int z) {
        return vectors[static_cast<std::size_t>(c) * grid.voxel_count() + grid.index(x, y, z)];
    }
    double comp(int c, int x, int y, int z) const {
        return vectors[static_cast<std::size_t>(c) * grid.voxel_count() + grid.index(x, y, z)];
    }
};

} // namespace xmas

#endif
