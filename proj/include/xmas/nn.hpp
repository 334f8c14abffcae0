#ifndef XMAS_NN_HPP
#define XMAS_NN_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "xmas/errors.hpp"
#include "xmas/interp.hpp"
#include "xmas/nn_conv.hpp"
#include "xmas/rng.hpp"
#include "xmas/tensor.hpp"

namespace xmas {
namespace nn {

// Named view of one trainable block; the optimizer and checkpoint writer
// iterate these without knowing the layer types.
template <typename T>
struct ParamRef {
    std::string name;
    std::vector<T>* w;
    std::vector<T>* g;
};

// ---------------------------------------------------------------------------
// 3D convolution, kernel 3 (zero pad 1, stride 1 or 2) or kernel 1 (stride 1).
// Layout matches Tensor: channel-major, x fastest. Weights are
// [out][in][kz][ky][kx].
template <typename T>
struct Conv3d {
    int in_ch = 0, out_ch = 0, ksize = 3, stride = 1;
    std::vector<T> w, b, gw, gb;
    mutable std::vector<Tensor<T>> cache;

    Conv3d() = default;
    Conv3d(int in, int out, int k, int s) : in_ch(in), out_ch(out), ksize(k), stride(s) {
        w.assign(static_cast<std::size_t>(out) * in * k * k * k, T(0));
        b.assign(out, T(0));
        gw.assign(w.size(), T(0));
        gb.assign(b.size(), T(0));
    }

    void init_he(Rng& rng) {
        const double fan_in = static_cast<double>(in_ch) * ksize * ksize * ksize;
        const double sd = std::sqrt(2.0 / fan_in);
        for (auto& x : w) x = static_cast<T>(sd * rng.normal());
        for (auto& x : b) x = T(0);
    }

    std::array<int, 3> out_dims(const std::array<int, 3>& n) const {
        if (ksize == 1) return n;
        std::array<int, 3> o;
        for (int a = 0; a < 3; ++a) o[a] = (n[a] - 1) / stride + 1;
        return o;
    }

    Tensor<T> forward(const Tensor<T>& x, bool keep) const {
        if (x.channels != in_ch) throw ShapeError("Conv3d: channel mismatch");
        Tensor<T> out(out_ch, out_dims(x.dims));
        if (ksize == 1)
            forward_k1(x, out);
        else
            forward_k3(x, out);
        if (keep) cache.push_back(x);
        return out;
    }

    // Returns grad w.r.t. the input; accumulates gw/gb.
    Tensor<T> backward(const Tensor<T>& gout) {
        const Tensor<T> x = std::move(cache.back());
        cache.pop_back();
        Tensor<T> gin(in_ch, x.dims);
        if (ksize == 1)
            backward_k1(x, gout, gin);
        else
            backward_k3(x, gout, gin);
        return gin;
    }

    void zero_grad() {
        std::fill(gw.begin(), gw.end(), T(0));
        std::fill(gb.begin(), gb.end(), T(0));
    }

    void collect(std::vector<ParamRef<T>>& out, const std::string& prefix) {
        out.push_back({prefix + ".weight", &w, &gw});
        out.push_back({prefix + ".bias", &b, &gb});
    }

private:
    const T* wk(int co, int ci, int kz, int ky) const {
        return w.data() + ((static_cast<std::size_t>(co) * in_ch + ci) * ksize * ksize +
                           static_cast<std::size_t>(kz) * ksize + ky) * ksize;
    }
    T* gwk(int co, int ci, int kz, int ky) {
        return gw.data() + ((static_cast<std::size_t>(co) * in_ch + ci) * ksize * ksize +
                            static_cast<std::size_t>(kz) * ksize + ky) * ksize;
    }

    void forward_k1(const Tensor<T>& x, Tensor<T>& out) const {
        const std::size_t nvox = x.plane();
        for (int co = 0; co < out_ch; ++co) {
            T* o = out.v.data() + co * nvox;
            for (std::size_t i = 0; i < nvox; ++i) o[i] = b[co];
            for (int ci = 0; ci < in_ch; ++ci) {
                const T wv = w[static_cast<std::size_t>(co) * in_ch + ci];
                const T* xi = x.v.data() + ci * nvox;
                for (std::size_t i = 0; i < nvox; ++i) o[i] += wv * xi[i];
            }
        }
    }

    void backward_k1(const Tensor<T>& x, const Tensor<T>& gout, Tensor<T>& gin) {
        const std::size_t nvox = x.plane();
        for (int co = 0; co < out_ch; ++co) {
            const T* go = gout.v.data() + co * nvox;
            double gbsum = 0.0;
            for (std::size_t i = 0; i < nvox; ++i) gbsum += go[i];
            gb[co] += static_cast<T>(gbsum);
            for (int ci = 0; ci < in_ch; ++ci) {
                const T* xi = x.v.data() + ci * nvox;
                T* gi = gin.v.data() + ci * nvox;
                const T wv = w[static_cast<std::size_t>(co) * in_ch + ci];
                double gwsum = 0.0;
                for (std::size_t i = 0; i < nvox; ++i) {
                    gwsum += static_cast<double>(go[i]) * xi[i];
                    gi[i] += wv * go[i];
                }
                gw[static_cast<std::size_t>(co) * in_ch + ci] += static_cast<T>(gwsum);
            }
        }
    }

    const T* wk9(int co, int ci, int kz) const {
        return w.data() + ((static_cast<std::size_t>(co) * in_ch + ci) * 3 + kz) * 9;
    }
    T* gwk9(int co, int ci, int kz) {
        return gw.data() + ((static_cast<std::size_t>(co) * in_ch + ci) * 3 + kz) * 9;
    }

    void forward_k3(const Tensor<T>& x, Tensor<T>& out) const {
        const auto& ni = x.dims;
        const auto& no = out.dims;
        const std::size_t px = ni[0] + 2, py = ni[1] + 2;
        const std::size_t pplane = px * py * (ni[2] + 2);
        std::vector<T> pad;
        detail::pad_volume(x.v.data(), in_ch, ni[0], ni[1], ni[2], pad);
        const std::size_t out_plane = out.plane();
        std::vector<T> buf(static_cast<std::size_t>(out_ch) * no[0]);
        for (int zo = 0; zo < no[2]; ++zo) {
            for (int yo = 0; yo < no[1]; ++yo) {
                for (int co = 0; co < out_ch; ++co)
                    std::fill(buf.begin() + static_cast<std::size_t>(co) * no[0],
                              buf.begin() + static_cast<std::size_t>(co + 1) * no[0], b[co]);
                for (int ci = 0; ci < in_ch; ++ci) {
                    for (int kz = 0; kz < 3; ++kz) {
                        const T* r0 = pad.data() + ci * pplane +
                                      ((static_cast<std::size_t>(zo) * stride + kz) * py +
                                       static_cast<std::size_t>(yo) * stride) * px;
                        for (int co = 0; co < out_ch; ++co) {
                            T* cbuf = buf.data() + static_cast<std::size_t>(co) * no[0];
                            if (stride == 1)
                                detail::row_taps9(cbuf, r0, r0 + px, r0 + 2 * px, no[0],
                                                  wk9(co, ci, kz));
                            else
                                detail::row_taps9_s2(cbuf, r0, r0 + px, r0 + 2 * px, no[0],
                                                     wk9(co, ci, kz));
                        }
                    }
                }
                for (int co = 0; co < out_ch; ++co) {
                    T* orow = out.v.data() + co * out_plane +
                              (static_cast<std::size_t>(zo) * no[1] + yo) * no[0];
                    const T* cbuf = buf.data() + static_cast<std::size_t>(co) * no[0];
                    for (int xo = 0; xo < no[0]; ++xo) orow[xo] = cbuf[xo];
                }
            }
        }
    }

    void backward_k3(const Tensor<T>& x, const Tensor<T>& gout, Tensor<T>& gin) {
        const auto& ni = x.dims;
        const auto& no = gout.dims;
        const std::size_t out_plane = gout.plane();
        const std::size_t px = ni[0] + 2, py = ni[1] + 2;
        const std::size_t pplane = px * py * (ni[2] + 2);

        // bias gradients
        for (int co = 0; co < out_ch; ++co) {
            const T* go = gout.v.data() + co * out_plane;
            double s = 0.0;
            for (std::size_t i = 0; i < out_plane; ++i) s += go[i];
            gb[co] += static_cast<T>(s);
        }

        // weight gradients: shifted dot products of gout rows against padded input
        std::vector<T> pad;
        detail::pad_volume(x.v.data(), in_ch, ni[0], ni[1], ni[2], pad);
        if (stride == 1) {
            detail::Acc9<T> acc;
            for (int co = 0; co < out_ch; ++co) {
                const T* go = gout.v.data() + co * out_plane;
                for (int ci = 0; ci < in_ch; ++ci) {
                    for (int kz = 0; kz < 3; ++kz) {
                        for (int zo = 0; zo < no[2]; ++zo) {
                            for (int yo = 0; yo < no[1]; ++yo) {
                                const T* gorow =
                                    go + (static_cast<std::size_t>(zo) * no[1] + yo) * no[0];
                                const T* r0 = pad.data() + ci * pplane +
                                              ((static_cast<std::size_t>(zo) + kz) * py +
                                               static_cast<std::size_t>(yo)) * px;
                                detail::row_dots9(gorow, r0, r0 + px, r0 + 2 * px, no[0], acc);
                            }
                        }
                        acc.flush(gwk9(co, ci, kz));
                    }
                }
            }
        } else {
            for (int zo = 0; zo < no[2]; ++zo) {
                for (int yo = 0; yo < no[1]; ++yo) {
                    for (int co = 0; co < out_ch; ++co) {
                        const T* gorow = gout.v.data() + co * out_plane +
                                         (static_cast<std::size_t>(zo) * no[1] + yo) * no[0];
                        for (int ci = 0; ci < in_ch; ++ci) {
                            for (int kz = 0; kz < 3; ++kz) {
                                const T* r0 = pad.data() + ci * pplane +
                                              ((static_cast<std::size_t>(zo) * 2 + kz) * py +
                                               static_cast<std::size_t>(yo) * 2) * px;
                                detail::row_dots9_s2(gorow, r0, r0 + px, r0 + 2 * px, no[0],
                                                     gwk9(co, ci, kz));
                            }
                        }
                    }
                }
            }
        }

        if (stride == 1) {
            // input gradients as a correlation of the padded output gradient
            // with the axis-flipped kernel
            std::vector<T> gpad;
            detail::pad_volume(gout.v.data(), out_ch, no[0], no[1], no[2], gpad);
            std::vector<T> wf(w.size());
            for (int co = 0; co < out_ch; ++co)
                for (int ci = 0; ci < in_ch; ++ci)
                    for (int k = 0; k < 27; ++k) {
                        const int kz = k / 9, ky = (k % 9) / 3, kx = k % 3;
                        wf[((static_cast<std::size_t>(ci) * out_ch + co) * 27) +
                           (2 - kz) * 9 + (2 - ky) * 3 + (2 - kx)] =
                            w[(static_cast<std::size_t>(co) * in_ch + ci) * 27 + k];
                    }
            const std::size_t gpplane = (no[0] + 2) * static_cast<std::size_t>(no[1] + 2) *
                                        (no[2] + 2);
            const std::size_t gpx = no[0] + 2, gpy = no[1] + 2;
            std::vector<T> buf(static_cast<std::size_t>(in_ch) * ni[0]);
            for (int zi = 0; zi < ni[2]; ++zi) {
                for (int yi = 0; yi < ni[1]; ++yi) {
                    std::fill(buf.begin(), buf.end(), T(0));
                    for (int co = 0; co < out_ch; ++co) {
                        for (int kz = 0; kz < 3; ++kz) {
                            const T* r0 = gpad.data() + co * gpplane +
                                          ((static_cast<std::size_t>(zi) + kz) * gpy + yi) * gpx;
                            for (int ci = 0; ci < in_ch; ++ci)
                                detail::row_taps9(buf.data() + static_cast<std::size_t>(ci) * ni[0],
                                                  r0, r0 + gpx, r0 + 2 * gpx, ni[0],
                                                  wf.data() +
                                                      (static_cast<std::size_t>(ci) * out_ch + co) * 27 +
                                                      kz * 9);
                        }
                    }
                    for (int ci = 0; ci < in_ch; ++ci) {
                        T* grow = gin.v.data() + ci * gin.plane() +
                                  (static_cast<std::size_t>(zi) * ni[1] + yi) * ni[0];
                        const T* cbuf = buf.data() + static_cast<std::size_t>(ci) * ni[0];
                        for (int xo = 0; xo < ni[0]; ++xo) grow[xo] = cbuf[xo];
                    }
                }
            }
        } else {
            // stride 2: scatter into a padded buffer, then crop the border off
            std::vector<T> gpad(static_cast<std::size_t>(in_ch) * pplane, T(0));
            for (int zo = 0; zo < no[2]; ++zo) {
                for (int yo = 0; yo < no[1]; ++yo) {
                    for (int co = 0; co < out_ch; ++co) {
                        const T* gorow = gout.v.data() + co * out_plane +
                                         (static_cast<std::size_t>(zo) * no[1] + yo) * no[0];
                        for (int ci = 0; ci < in_ch; ++ci) {
                            for (int kz = 0; kz < 3; ++kz) {
                                T* g0 = gpad.data() + ci * pplane +
                                        ((static_cast<std::size_t>(zo) * 2 + kz) * py +
                                         static_cast<std::size_t>(yo) * 2) * px;
                                detail::row_scatter9_s2(g0, g0 + px, g0 + 2 * px, gorow, no[0],
                                                        wk9(co, ci, kz));
                            }
                        }
                    }
                }
            }
            detail::unpad_add(gpad, in_ch, ni[0], ni[1], ni[2], gin.v.data());
        }
    }
};

// ---------------------------------------------------------------------------
template <typename T>
struct LeakyRelu {
    T slope = T(0.2);
    mutable std::vector<Tensor<T>> cache;

    Tensor<T> forward(const Tensor<T>& x, bool keep) const {
        Tensor<T> out(x.channels, x.dims);
        for (std::size_t i = 0; i < x.v.size(); ++i)
            out.v[i] = x.v[i] > T(0) ? x.v[i] : slope * x.v[i];
        if (keep) cache.push_back(x);
        return out;
    }

    Tensor<T> backward(const Tensor<T>& gout) {
        const Tensor<T> x = std::move(cache.back());
        cache.pop_back();
        Tensor<T> gin(x.channels, x.dims);
        for (std::size_t i = 0; i < x.v.size(); ++i)
            gin.v[i] = x.v[i] > T(0) ? gout.v[i] : slope * gout.v[i];
        return gin;
    }
};

// ---------------------------------------------------------------------------
// Fixed trilinear 2x upsampling; backward is the exact transpose.
template <typename T>
struct Upsample2x {
    mutable std::vector<std::array<int, 3>> cache_dims;

    static std::array<int, 3> out_dims(const std::array<int, 3>& n) {
        return {n[0] * 2, n[1] * 2, n[2] * 2};
    }

    Tensor<T> forward(const Tensor<T>& x, bool keep) const {
        const auto no = out_dims(x.dims);
        Tensor<T> out(x.channels, no);
        const std::size_t out_plane = out.plane();
        std::size_t i = 0;
        for (int z = 0; z < no[2]; ++z)
            for (int y = 0; y < no[1]; ++y)
                for (int x0 = 0; x0 < no[0]; ++x0, ++i) {
                    const auto cell = interp::locate<T>(
                        x.dims, T(0.5) * x0 - T(0.25), T(0.5) * y - T(0.25), T(0.5) * z - T(0.25));
                    for (int c = 0; c < x.channels; ++c)
                        out.v[c * out_plane + i] = interp::gather(x.ch(c), x.dims, cell);
                }
        if (keep) cache_dims.push_back(x.dims);
        return out;
    }

    Tensor<T> backward(const Tensor<T>& gout) {
        const auto ni = cache_dims.back();
        cache_dims.pop_back();
        Tensor<T> gin(gout.channels, ni);
        const auto& no = gout.dims;
        const std::size_t out_plane = gout.plane();
        std::size_t i = 0;
        for (int z = 0; z < no[2]; ++z)
            for (int y = 0; y < no[1]; ++y)
                for (int x0 = 0; x0 < no[0]; ++x0, ++i) {
                    const auto cell = interp::locate<T>(
                        ni, T(0.5) * x0 - T(0.25), T(0.5) * y - T(0.25), T(0.5) * z - T(0.25));
                    for (int c = 0; c < gout.channels; ++c)
                        interp::scatter(gin.ch(c), ni, cell, gout.v[c * out_plane + i]);
                }
        return gin;
    }
};

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.dims != b.dims) throw ShapeError("concat_channels: spatial dims mismatch");
    Tensor<T> out(a.channels + b.channels, a.dims);
    std::copy(a.v.begin(), a.v.end(), out.v.begin());
    std::copy(b.v.begin(), b.v.end(), out.v.begin() + a.v.size());
    return out;
}

template <typename T>
void split_channels(const Tensor<T>& g, int a_channels, Tensor<T>& ga, Tensor<T>& gb) {
    ga = Tensor<T>(a_channels, g.dims);
    gb = Tensor<T>(g.channels - a_channels, g.dims);
    std::copy(g.v.begin(), g.v.begin() + ga.v.size(), ga.v.begin());
    std::copy(g.v.begin() + ga.v.size(), g.v.end(), gb.v.begin());
}

// ---------------------------------------------------------------------------
// Adaptive-moment optimizer with global gradient-norm clipping.
template <typename T>
struct Adam {
    double lr = 1e-3;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double clip_norm = 1.0;     // <= 0 disables clipping
    long long t = 0;
    std::vector<std::vector<T>> m, v;

    void attach(const std::vector<ParamRef<T>>& blocks) {
        m.clear();
        v.clear();
        for (const auto& b : blocks) {
            m.emplace_back(b.w->size(), T(0));
            v.emplace_back(b.w->size(), T(0));
        }
        t = 0;
    }

    void step(const std::vector<ParamRef<T>>& blocks) {
        double norm_sq = 0.0;
        for (const auto& b : blocks)
            for (T g : *b.g) norm_sq += static_cast<double>(g) * g;
        double scale = 1.0;
        if (clip_norm > 0.0) {
            const double norm = std::sqrt(norm_sq);
            if (norm > clip_norm) scale = clip_norm / norm;
        }
        ++t;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t k = 0; k < blocks.size(); ++k) {
            auto& wv = *blocks[k].w;
            auto& gv = *blocks[k].g;
            auto& mv = m[k];
            auto& vv = v[k];
            for (std::size_t i = 0; i < wv.size(); ++i) {
                const double g = scale * static_cast<double>(gv[i]);
                const double mi = beta1 * static_cast<double>(mv[i]) + (1.0 - beta1) * g;
                const double vi = beta2 * static_cast<double>(vv[i]) + (1.0 - beta2) * g * g;
                mv[i] = static_cast<T>(mi);
                vv[i] = static_cast<T>(vi);
                const double update = lr * (mi / c1) / (std::sqrt(vi / c2) + eps);
                wv[i] = static_cast<T>(static_cast<double>(wv[i]) - update);
            }
        }
    }
};

} // namespace nn
} // namespace xmas

#endif
