#ifndef XMAS_REG_NET_HPP
#define XMAS_REG_NET_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "xmas/checkpoint.hpp"
#include "xmas/losses.hpp"
#include "xmas/nn.hpp"
#include "xmas/tensor.hpp"
#include "xmas/volume.hpp"

namespace xmas {

struct RegNetConfig {
    int levels = 3;
    int base_channels = 8;
    SpatialGrid input_grid;
    bool final_layer_zero_init = true;
    double learning_rate = 1e-3;
    int iterations = 500;
    uint64_t seed = 0;
};

// Encoder-decoder that maps a concatenated (atlas, target) image pair to the
// forward and backward displacement fields in one pass. Both heads read the
// shared full-resolution decoder features. Downsampling is a stride-2 first
// convolution per level; upsampling is fixed trilinear.
template <typename T>
struct RegNetT {
    RegNetConfig cfg;
    std::vector<nn::Conv3d<T>> enc;          // 2 per level
    std::vector<nn::Conv3d<T>> dec;          // 2 per decoder level
    std::vector<nn::Upsample2x<T>> ups;      // levels-1
    mutable std::vector<nn::LeakyRelu<T>> acts;
    nn::Conv3d<T> head_u, head_v;

    void build(const RegNetConfig& c) {
        cfg = c;
        if (cfg.levels < 1) throw ConfigError("reg net: levels must be >= 1");
        const int div = 1 << cfg.levels;
        for (int a = 0; a < 3; ++a)
            if (cfg.input_grid.shape[a] % div != 0)
                throw ConfigError("reg net: grid shape must be divisible by 2^levels");
        Rng rng(derive_seed(cfg.seed, 0x7265676eull)); // stream tag for net init

        enc.clear();
        dec.clear();
        ups.clear();
        acts.clear();
        const auto width = [&](int level) { return cfg.base_channels << level; };
        for (int l = 0; l < cfg.levels; ++l) {
            const int in = l == 0 ? 2 : width(l - 1);
            enc.emplace_back(in, width(l), 3, l == 0 ? 1 : 2);
            enc.emplace_back(width(l), width(l), 3, 1);
        }
        for (int l = cfg.levels - 2; l >= 0; --l) {
            ups.emplace_back();
            dec.emplace_back(width(l + 1) + width(l), width(l), 3, 1);
            dec.emplace_back(width(l), width(l), 3, 1);
        }
        acts.resize(enc.size() + dec.size());
        for (auto& c3 : enc) c3.init_he(rng);
        for (auto& c3 : dec) c3.init_he(rng);
        head_u = nn::Conv3d<T>(cfg.base_channels, 3, 1, 1);
        head_v = nn::Conv3d<T>(cfg.base_channels, 3, 1, 1);
        if (!cfg.final_layer_zero_init) {
            head_u.init_he(rng);
            head_v.init_he(rng);
        }
    }

    std::vector<nn::ParamRef<T>> params() {
        std::vector<nn::ParamRef<T>> out;
        for (std::size_t i = 0; i < enc.size(); ++i)
            enc[i].collect(out, "enc" + std::to_string(i / 2) + ".conv" + std::to_string(i % 2 + 1));
        for (std::size_t i = 0; i < dec.size(); ++i) {
            const int level = cfg.levels - 2 - static_cast<int>(i / 2);
            dec[i].collect(out, "dec" + std::to_string(level) + ".conv" + std::to_string(i % 2 + 1));
        }
        head_u.collect(out, "head_u");
        head_v.collect(out, "head_v");
        return out;
    }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& c3 : enc) n += c3.w.size() + c3.b.size();
        for (const auto& c3 : dec) n += c3.w.size() + c3.b.size();
        n += head_u.w.size() + head_u.b.size() + head_v.w.size() + head_v.b.size();
        return n;
    }

    // input: 2-channel (atlas, target). Returns (U, V), each 3-channel.
    std::pair<Tensor<T>, Tensor<T>> forward(const Tensor<T>& input, bool keep) const {
        if (input.dims != cfg.input_grid.shape) throw ShapeError("reg net: input grid mismatch");
        std::vector<Tensor<T>> skips;
        Tensor<T> x = input;
        std::size_t act_i = 0;
        for (int l = 0; l < cfg.levels; ++l) {
            x = acts[act_i++].forward(enc[2 * l].forward(x, keep), keep);
            x = acts[act_i++].forward(enc[2 * l + 1].forward(x, keep), keep);
            if (l + 1 < cfg.levels) skips.push_back(x);
        }
        for (std::size_t d = 0; d < ups.size(); ++d) {
            const Tensor<T> up = ups[d].forward(x, keep);
            x = nn::concat_channels(up, skips[skips.size() - 1 - d]);
            x = acts[act_i++].forward(dec[2 * d].forward(x, keep), keep);
            x = acts[act_i++].forward(dec[2 * d + 1].forward(x, keep), keep);
        }
        return {head_u.forward(x, keep), head_v.forward(x, keep)};
    }

    // Accumulates parameter gradients for a forward pass made with keep=true.
    void backward(const Tensor<T>& gu, const Tensor<T>& gv) {
        Tensor<T> g = head_u.backward(gu);
        const Tensor<T> gv_in = head_v.backward(gv);
        for (std::size_t i = 0; i < g.v.size(); ++i) g.v[i] += gv_in.v[i];

        std::size_t act_i = acts.size();
        std::vector<Tensor<T>> skip_grads; // deepest-last after reversal below
        for (std::size_t d = ups.size(); d-- > 0;) {
            g = dec[2 * d + 1].backward(acts[--act_i].backward(g));
            g = dec[2 * d].backward(acts[--act_i].backward(g));
            Tensor<T> gup, gskip;
            nn::split_channels(g, g.channels - (cfg.base_channels << (ups.size() - 1 - d)),
                               gup, gskip);
            skip_grads.push_back(std::move(gskip));
            g = ups[d].backward(gup);
        }
        for (int l = cfg.levels; l-- > 0;) {
            if (l + 1 < cfg.levels) {
                const Tensor<T>& gs = skip_grads[l]; // built full-resolution first
                for (std::size_t i = 0; i < g.v.size(); ++i) g.v[i] += gs.v[i];
            }
            g = enc[2 * l + 1].backward(acts[--act_i].backward(g));
            g = enc[2 * l].backward(acts[--act_i].backward(g));
        }
    }

    void zero_grad() {
        for (auto& c3 : enc) c3.zero_grad();
        for (auto& c3 : dec) c3.zero_grad();
        head_u.zero_grad();
        head_v.zero_grad();
    }
};

// One atlas-target training pair on the input grid, pre-normalized.
struct RegPair {
    ScalarVolume image_a;
    LabelVolume label_a;
    ScalarVolume image_t;
    LabelVolume label_t;
};

// Trainable model: network parameters plus optimizer moments and the global
// iteration counter, everything a resumed run needs.
struct RegModel {
    RegNetT<float> net;
    nn::Adam<float> adam;
    long long iteration = 0;

    const RegNetConfig& cfg() const { return net.cfg; }
};

RegModel build_regnet(const RegNetConfig& cfg);

std::pair<DisplacementField, DisplacementField>
predict_ddfs(const RegModel& model, const ScalarVolume& image_a, const ScalarVolume& image_t);

struct WarpedAtlas {
    ScalarVolume image;
    LabelVolume label;
    DisplacementField u, v;
};

WarpedAtlas register_atlas(const RegModel& model, const ScalarVolume& atlas_image,
                           const LabelVolume& atlas_label, const ScalarVolume& target_image);

/// Runs `iterations` optimizer steps, cycling the pair list in order.
/// Appends one LossBreakdown per step to the returned history. Throws
/// NumericError with a state dump if the loss stops being finite.
std::vector<LossBreakdown> train_reg(RegModel& model, const std::vector<RegPair>& pairs,
                                     int iterations, const LossConfig& loss_cfg);

Checkpoint regnet_to_checkpoint(const RegModel& model);
RegModel regnet_from_checkpoint(const Checkpoint& ck);

constexpr const char* kRegCheckpointFormat = "xmas-reg-v1";

} // namespace xmas

#endif
