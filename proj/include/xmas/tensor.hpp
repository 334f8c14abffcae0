#ifndef XMAS_TENSOR_HPP
#define XMAS_TENSOR_HPP

#include <array>
#include <cstddef>
#include <vector>

#include "xmas/volume.hpp"

namespace xmas {

// Multi-channel 3D feature map used by the trainable paths. Channel-major,
// x-fastest within a channel; training instantiates T = float, gradient
// oracles T = double.
template <typename T>
struct Tensor {
    int channels = 0;
    std::array<int, 3> dims{0, 0, 0};
    std::vector<T> v;

    Tensor() = default;
    Tensor(int c, const std::array<int, 3>& d)
        : channels(c), dims(d),
          v(static_cast<std::size_t>(c) * d[0] * d[1] * d[2], T(0)) {}

    std::size_t plane() const {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    }
    std::size_t size() const { return v.size(); }
    T* ch(int c) { return v.data() + static_cast<std::size_t>(c) * plane(); }
    const T* ch(int c) const { return v.data() + static_cast<std::size_t>(c) * plane(); }

    bool same_shape(const Tensor& o) const { return channels == o.channels && dims == o.dims; }

    void zero() { std::fill(v.begin(), v.end(), T(0)); }
};

template <typename T>
Tensor<T> tensor_from_scalar(const ScalarVolume& vol) {
    Tensor<T> t(1, vol.grid.shape);
    for (std::size_t i = 0; i < vol.values.size(); ++i) t.v[i] = static_cast<T>(vol.values[i]);
    return t;
}

template <typename T>
Tensor<T> tensor_from_onehot(const OneHotVolume& oh) {
    Tensor<T> t(static_cast<int>(oh.channel_count()), oh.grid.shape);
    for (std::size_t i = 0; i < oh.channels.size(); ++i) t.v[i] = static_cast<T>(oh.channels[i]);
    return t;
}

template <typename T>
Tensor<T> tensor_from_field(const DisplacementField& f) {
    Tensor<T> t(3, f.grid.shape);
    for (std::size_t i = 0; i < f.vectors.size(); ++i) t.v[i] = static_cast<T>(f.vectors[i]);
    return t;
}

template <typename T>
DisplacementField field_from_tensor(const Tensor<T>& t, const SpatialGrid& grid) {
    DisplacementField f(grid);
    for (std::size_t i = 0; i < t.v.size(); ++i) f.vectors[i] = static_cast<double>(t.v[i]);
    return f;
}

} // namespace xmas

#endif
