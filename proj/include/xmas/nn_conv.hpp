#ifndef XMAS_NN_CONV_HPP
#define XMAS_NN_CONV_HPP

// Kernels for the 3^3 convolution. Inputs are copied into a one-voxel
// zero-padded scratch volume so the tap loops carry no boundary branches;
// the 9 in-plane taps of one kz slice are fused into a single pass over a
// contiguous row, which is what the vectorizer wants.

#include <cstddef>
#include <vector>

namespace xmas {
namespace nn {
namespace detail {

// Zero-padded copy (+1 voxel border) of a channel-major volume.
template <typename T>
void pad_volume(const T* src, int ch, int nx, int ny, int nz, std::vector<T>& dst) {
    const std::size_t px = nx + 2, py = ny + 2, pz = nz + 2;
    dst.assign(static_cast<std::size_t>(ch) * px * py * pz, T(0));
    for (int c = 0; c < ch; ++c) {
        const T* s = src + static_cast<std::size_t>(c) * nx * ny * nz;
        T* d = dst.data() + static_cast<std::size_t>(c) * px * py * pz;
        for (int z = 0; z < nz; ++z)
            for (int y = 0; y < ny; ++y) {
                const T* srow = s + (static_cast<std::size_t>(z) * ny + y) * nx;
                T* drow = d + ((static_cast<std::size_t>(z) + 1) * py + y + 1) * px + 1;
                for (int x = 0; x < nx; ++x) drow[x] = srow[x];
            }
    }
}

// buf[x] += sum of 9 taps from three consecutive padded rows r0/r1/r2.
template <typename T>
inline void row_taps9(T* __restrict buf, const T* __restrict r0, const T* __restrict r1,
                      const T* __restrict r2, int nx, const T* __restrict w) {
    const T w0 = w[0], w1 = w[1], w2 = w[2];
    const T w3 = w[3], w4 = w[4], w5 = w[5];
    const T w6 = w[6], w7 = w[7], w8 = w[8];
    for (int x = 0; x < nx; ++x)
        buf[x] += w0 * r0[x] + w1 * r0[x + 1] + w2 * r0[x + 2] +
                  w3 * r1[x] + w4 * r1[x + 1] + w5 * r1[x + 2] +
                  w6 * r2[x] + w7 * r2[x + 1] + w8 * r2[x + 2];
}

// Stride-2 variant: buf[xo] reads padded columns 2*xo .. 2*xo+2.
template <typename T>
inline void row_taps9_s2(T* __restrict buf, const T* __restrict r0, const T* __restrict r1,
                         const T* __restrict r2, int nxo, const T* __restrict w) {
    const T w0 = w[0], w1 = w[1], w2 = w[2];
    const T w3 = w[3], w4 = w[4], w5 = w[5];
    const T w6 = w[6], w7 = w[7], w8 = w[8];
    for (int xo = 0; xo < nxo; ++xo) {
        const int p = 2 * xo;
        buf[xo] += w0 * r0[p] + w1 * r0[p + 1] + w2 * r0[p + 2] +
                   w3 * r1[p] + w4 * r1[p + 1] + w5 * r1[p + 2] +
                   w6 * r2[p] + w7 * r2[p + 1] + w8 * r2[p + 2];
    }
}

// Nine shifted dot products accumulated lane-wise; the horizontal reduction
// happens once per (co, ci, kz) in Acc9::flush rather than per row.
template <typename T>
struct Acc9 {
    static constexpr int W = 16;
    T a[9][W];

    Acc9() { zero(); }
    void zero() {
        for (auto& lane : a)
            for (T& v : lane) v = T(0);
    }
    void flush(T* __restrict gw9) {
        for (int k = 0; k < 9; ++k) {
            T s = T(0);
            for (T v : a[k]) s += v;
            gw9[k] += s;
        }
        zero();
    }
};

template <typename T>
inline void row_dots9(const T* __restrict go, const T* __restrict r0, const T* __restrict r1,
                      const T* __restrict r2, int nx, Acc9<T>& acc) {
    constexpr int W = Acc9<T>::W;
    int x = 0;
    for (; x + W <= nx; x += W) {
#pragma omp simd
        for (int j = 0; j < W; ++j) {
            const T g = go[x + j];
            acc.a[0][j] += g * r0[x + j];
            acc.a[1][j] += g * r0[x + j + 1];
            acc.a[2][j] += g * r0[x + j + 2];
            acc.a[3][j] += g * r1[x + j];
            acc.a[4][j] += g * r1[x + j + 1];
            acc.a[5][j] += g * r1[x + j + 2];
            acc.a[6][j] += g * r2[x + j];
            acc.a[7][j] += g * r2[x + j + 1];
            acc.a[8][j] += g * r2[x + j + 2];
        }
    }
    for (; x < nx; ++x) {
        const T g = go[x];
        acc.a[0][0] += g * r0[x];
        acc.a[1][0] += g * r0[x + 1];
        acc.a[2][0] += g * r0[x + 2];
        acc.a[3][0] += g * r1[x];
        acc.a[4][0] += g * r1[x + 1];
        acc.a[5][0] += g * r1[x + 2];
        acc.a[6][0] += g * r2[x];
        acc.a[7][0] += g * r2[x + 1];
        acc.a[8][0] += g * r2[x + 2];
    }
}

template <typename T>
inline void row_dots9_s2(const T* __restrict go, const T* __restrict r0, const T* __restrict r1,
                         const T* __restrict r2, int nxo, T* __restrict acc) {
    T a0 = T(0), a1 = T(0), a2 = T(0), a3 = T(0), a4 = T(0);
    T a5 = T(0), a6 = T(0), a7 = T(0), a8 = T(0);
#pragma omp simd reduction(+ : a0, a1, a2, a3, a4, a5, a6, a7, a8)
    for (int xo = 0; xo < nxo; ++xo) {
        const int p = 2 * xo;
        const T g = go[xo];
        a0 += g * r0[p];
        a1 += g * r0[p + 1];
        a2 += g * r0[p + 2];
        a3 += g * r1[p];
        a4 += g * r1[p + 1];
        a5 += g * r1[p + 2];
        a6 += g * r2[p];
        a7 += g * r2[p + 1];
        a8 += g * r2[p + 2];
    }
    acc[0] += a0; acc[1] += a1; acc[2] += a2;
    acc[3] += a3; acc[4] += a4; acc[5] += a5;
    acc[6] += a6; acc[7] += a7; acc[8] += a8;
}

// Scatter an output-gradient row into a padded input-gradient volume (stride 2).
template <typename T>
inline void row_scatter9_s2(T* __restrict g0, T* __restrict g1, T* __restrict g2,
                            const T* __restrict go, int nxo, const T* __restrict w) {
    const T w0 = w[0], w1 = w[1], w2 = w[2];
    const T w3 = w[3], w4 = w[4], w5 = w[5];
    const T w6 = w[6], w7 = w[7], w8 = w[8];
    for (int xo = 0; xo < nxo; ++xo) {
        const int p = 2 * xo;
        const T g = go[xo];
        g0[p] += w0 * g;
        g0[p + 1] += w1 * g;
        g0[p + 2] += w2 * g;
        g1[p] += w3 * g;
        g1[p + 1] += w4 * g;
        g1[p + 2] += w5 * g;
        g2[p] += w6 * g;
        g2[p + 1] += w7 * g;
        g2[p + 2] += w8 * g;
    }
}

// Crop the interior of a padded gradient volume back onto the unpadded grid,
// adding into dst.
template <typename T>
void unpad_add(const std::vector<T>& padded, int ch, int nx, int ny, int nz, T* dst) {
    const std::size_t px = nx + 2, py = ny + 2, pz = nz + 2;
    for (int c = 0; c < ch; ++c) {
        const T* s = padded.data() + static_cast<std::size_t>(c) * px * py * pz;
        T* d = dst + static_cast<std::size_t>(c) * nx * ny * nz;
        for (int z = 0; z < nz; ++z)
            for (int y = 0; y < ny; ++y) {
                const T* srow = s + ((static_cast<std::size_t>(z) + 1) * py + y + 1) * px + 1;
                T* drow = d + (static_cast<std::size_t>(z) * ny + y) * nx;
                for (int x = 0; x < nx; ++x) drow[x] += srow[x];
            }
    }
}

} // namespace detail
} // namespace nn
} // namespace xmas

#endif
