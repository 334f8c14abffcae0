#ifndef XMAS_INTERP_HPP
#define XMAS_INTERP_HPP

#include <array>
#include <cmath>
#include <cstddef>

namespace xmas {
namespace interp {

// Out-of-domain coordinates are clamped to the grid hull, so border values
// are replicated rather than padded with background.
template <typename T>
struct Cell {
    int i0[3];      // low corner, clamped to [0, n-2]
    T f[3];         // fractional offset in [0, 1]
    bool live[3];   // coordinate inside the open hull: sample moves with it
};

template <typename T>
inline Cell<T> locate(const std::array<int, 3>& n, T px, T py, T pz) {
    Cell<T> c;
    const T p[3] = {px, py, pz};
    for (int a = 0; a < 3; ++a) {
        const T hi = static_cast<T>(n[a] - 1);
        T pc = p[a];
        c.live[a] = (pc >= T(0) && pc <= hi);
        if (pc < T(0)) pc = T(0);
        if (pc > hi) pc = hi;
        int i0 = static_cast<int>(pc);
        if (i0 > n[a] - 2) i0 = n[a] - 2;
        c.i0[a] = i0;
        c.f[a] = pc - static_cast<T>(i0);
    }
    return c;
}

// Trilinear blend of the 8 cell corners of a single x-fastest channel.
template <typename T>
inline T gather(const T* v, const std::array<int, 3>& n, const Cell<T>& c) {
    const std::size_t nx = static_cast<std::size_t>(n[0]);
    const std::size_t nxy = nx * static_cast<std::size_t>(n[1]);
    const std::size_t base = c.i0[0] + nx * c.i0[1] + nxy * c.i0[2];
    const T fx = c.f[0], fy = c.f[1], fz = c.f[2];
    const T gx = T(1) - fx, gy = T(1) - fy, gz = T(1) - fz;
    const T v000 = v[base],            v100 = v[base + 1];
    const T v010 = v[base + nx],       v110 = v[base + nx + 1];
    const T v001 = v[base + nxy],      v101 = v[base + nxy + 1];
    const T v011 = v[base + nxy + nx], v111 = v[base + nxy + nx + 1];
    const T c00 = v000 * gx + v100 * fx;
    const T c10 = v010 * gx + v110 * fx;
    const T c01 = v001 * gx + v101 * fx;
    const T c11 = v011 * gx + v111 * fx;
    return (c00 * gy + c10 * fy) * gz + (c01 * gy + c11 * fy) * fz;
}

// Derivative of gather() w.r.t. the sample position, zero along axes whose
// coordinate is clamped outside the hull.
template <typename T>
inline void gather_grad(const T* v, const std::array<int, 3>& n, const Cell<T>& c, T grad[3]) {
    const std::size_t nx = static_cast<std::size_t>(n[0]);
    const std::size_t nxy = nx * static_cast<std::size_t>(n[1]);
    const std::size_t base = c.i0[0] + nx * c.i0[1] + nxy * c.i0[2];
    const T fx = c.f[0], fy = c.f[1], fz = c.f[2];
    const T gx = T(1) - fx, gy = T(1) - fy, gz = T(1) - fz;
    const T v000 = v[base],            v100 = v[base + 1];
    const T v010 = v[base + nx],       v110 = v[base + nx + 1];
    const T v001 = v[base + nxy],      v101 = v[base + nxy + 1];
    const T v011 = v[base + nxy + nx], v111 = v[base + nxy + nx + 1];
    grad[0] = c.live[0] ? ((v100 - v000) * gy + (v110 - v010) * fy) * gz +
                          ((v101 - v001) * gy + (v111 - v011) * fy) * fz
                        : T(0);
    grad[1] = c.live[1] ? ((v010 - v000) * gx + (v110 - v100) * fx) * gz +
                          ((v011 - v001) * gx + (v111 - v101) * fx) * fz
                        : T(0);
    grad[2] = c.live[2] ? ((v001 - v000) * gx + (v101 - v100) * fx) * gy +
                          ((v011 - v010) * gx + (v111 - v110) * fx) * fy
                        : T(0);
}

// Transpose of gather(): scatter g into the 8 corner slots.
template <typename T>
inline void scatter(T* v, const std::array<int, 3>& n, const Cell<T>& c, T g) {
    const std::size_t nx = static_cast<std::size_t>(n[0]);
    const std::size_t nxy = nx * static_cast<std::size_t>(n[1]);
    const std::size_t base = c.i0[0] + nx * c.i0[1] + nxy * c.i0[2];
    const T fx = c.f[0], fy = c.f[1], fz = c.f[2];
    const T gx = T(1) - fx, gy = T(1) - fy, gz = T(1) - fz;
    v[base] += g * gx * gy * gz;
    v[base + 1] += g * fx * gy * gz;
    v[base + nx] += g * gx * fy * gz;
    v[base + nx + 1] += g * fx * fy * gz;
    v[base + nxy] += g * gx * gy * fz;
    v[base + nxy + 1] += g * fx * gy * fz;
    v[base + nxy + nx] += g * gx * fy * fz;
    v[base + nxy + nx + 1] += g * fx * fy * fz;
}

// Nearest voxel to a (possibly off-grid) point, clamped to the hull.
inline void nearest(const std::array<int, 3>& n, double px, double py, double pz, int out[3]) {
    const double p[3] = {px, py, pz};
    for (int a = 0; a < 3; ++a) {
        long i = std::lround(p[a]);
        if (i < 0) i = 0;
        if (i > n[a] - 1) i = n[a] - 1;
        out[a] = static_cast<int>(i);
    }
}

} // namespace interp
} // namespace xmas

#endif
