#ifndef XMAS_SIM_NET_HPP
#define XMAS_SIM_NET_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xmas/checkpoint.hpp"
#include "xmas/nn.hpp"
#include "xmas/rng.hpp"
#include "xmas/tensor.hpp"
#include "xmas/volume.hpp"

namespace xmas {

// Cubic sub-volume around a center voxel, with the matching label cube.
// Extraction clamps coordinates to the hull, so centers near the border are
// valid.
struct Patch {
    int side = 15;
    std::array<int, 3> center{0, 0, 0};
    std::vector<double> intensities;
    std::vector<int32_t> labels;
    std::vector<int32_t> label_set{0};
};

struct SupportSet {
    std::vector<Patch> patches;
    std::vector<int> atlas_indices; // provenance, parallel to patches
};

struct SimNetConfig {
    int patch_side = 15;
    int embed_dim = 64;
    uint64_t seed = 0;
};

struct SimTrainConfig {
    int batch_size = 8;          // B
    int iterations = 2000;       // C
    double learning_rate = 0.02; // epsilon of the plain gradient step
    double thr1 = 0.9;
    double thr2 = 0.5;
    uint64_t seed = 0;
    int patch_side = 15;
    int boundary_structure = 1;  // label whose boundary supplies query centers
    int max_retries = 200;
    double dice_epsilon = 1e-5;

    void validate() const {
        if (batch_size < 1 || iterations < 0) throw ConfigError("sim train: B, C must be >= 1");
        if (!(0.0 <= thr2 && thr2 < thr1 && thr1 <= 1.0))
            throw ConfigError("sim train: need 0 <= thr2 < thr1 <= 1");
    }
};

// One embedding branch: three stride-2 conv blocks, global average pooling,
// linear projection.
template <typename T>
struct EmbedBranch {
    int patch_side = 15;
    int embed_dim = 64;
    nn::Conv3d<T> c1, c2, c3;
    mutable std::vector<nn::LeakyRelu<T>> acts;
    std::vector<T> lin_w, lin_b, glin_w, glin_b;
    mutable std::vector<std::pair<Tensor<T>, std::vector<T>>> gap_cache; // (conv3 act, pooled)

    static constexpr int kFeat = 64;

    void build(int side, int dim, Rng& rng) {
        patch_side = side;
        embed_dim = dim;
        c1 = nn::Conv3d<T>(1, 16, 3, 2);
        c2 = nn::Conv3d<T>(16, 32, 3, 2);
        c3 = nn::Conv3d<T>(32, kFeat, 3, 2);
        c1.init_he(rng);
        c2.init_he(rng);
        c3.init_he(rng);
        acts.assign(3, nn::LeakyRelu<T>{});
        lin_w.assign(static_cast<std::size_t>(embed_dim) * kFeat, T(0));
        lin_b.assign(embed_dim, T(0));
        const double sd = std::sqrt(1.0 / kFeat);
        for (auto& v : lin_w) v = static_cast<T>(sd * rng.normal());
        glin_w.assign(lin_w.size(), T(0));
        glin_b.assign(lin_b.size(), T(0));
    }

    std::vector<T> forward(const Tensor<T>& patch, bool keep) const {
        if (patch.channels != 1 || patch.dims[0] != patch_side || patch.dims[1] != patch_side ||
            patch.dims[2] != patch_side)
            throw ShapeError("embed: patch side mismatch");
        Tensor<T> x = acts[0].forward(c1.forward(patch, keep), keep);
        x = acts[1].forward(c2.forward(x, keep), keep);
        x = acts[2].forward(c3.forward(x, keep), keep);
        const std::size_t nvox = x.plane();
        std::vector<T> pooled(kFeat, T(0));
        for (int c = 0; c < kFeat; ++c) {
            double s = 0.0;
            const T* p = x.ch(c);
            for (std::size_t i = 0; i < nvox; ++i) s += p[i];
            pooled[c] = static_cast<T>(s / static_cast<double>(nvox));
        }
        std::vector<T> emb(embed_dim);
        for (int e = 0; e < embed_dim; ++e) {
            double s = lin_b[e];
            for (int c = 0; c < kFeat; ++c)
                s += static_cast<double>(lin_w[static_cast<std::size_t>(e) * kFeat + c]) * pooled[c];
            emb[e] = static_cast<T>(s);
        }
        if (keep) gap_cache.emplace_back(std::move(x), pooled);
        return emb;
    }

    void backward(const std::vector<T>& gemb) {
        auto [x, pooled] = std::move(gap_cache.back());
        gap_cache.pop_back();
        std::vector<T> gpooled(kFeat, T(0));
        for (int e = 0; e < embed_dim; ++e) {
            glin_b[e] += gemb[e];
            for (int c = 0; c < kFeat; ++c) {
                glin_w[static_cast<std::size_t>(e) * kFeat + c] += gemb[e] * pooled[c];
                gpooled[c] += lin_w[static_cast<std::size_t>(e) * kFeat + c] * gemb[e];
            }
        }
        const std::size_t nvox = x.plane();
        Tensor<T> gx(kFeat, x.dims);
        for (int c = 0; c < kFeat; ++c) {
            const T g = static_cast<T>(static_cast<double>(gpooled[c]) / static_cast<double>(nvox));
            T* p = gx.ch(c);
            for (std::size_t i = 0; i < nvox; ++i) p[i] = g;
        }
        Tensor<T> g3 = c3.backward(acts[2].backward(gx));
        Tensor<T> g2 = c2.backward(acts[1].backward(g3));
        c1.backward(acts[0].backward(g2)); // input gradient unused
    }

    void zero_grad() {
        c1.zero_grad();
        c2.zero_grad();
        c3.zero_grad();
        std::fill(glin_w.begin(), glin_w.end(), T(0));
        std::fill(glin_b.begin(), glin_b.end(), T(0));
    }

    void collect(std::vector<nn::ParamRef<T>>& out, const std::string& prefix) {
        c1.collect(out, prefix + ".conv1");
        c2.collect(out, prefix + ".conv2");
        c3.collect(out, prefix + ".conv3");
        out.push_back({prefix + ".proj.weight", &lin_w, &glin_w});
        out.push_back({prefix + ".proj.bias", &lin_b, &glin_b});
    }
};

// Two-branch patch similarity model: f_theta embeds atlas patches, f_phi
// target patches. The branches share architecture but never parameters.
template <typename T>
struct SimNetT {
    SimNetConfig cfg;
    EmbedBranch<T> theta; // atlas side
    EmbedBranch<T> phi;   // target side

    void build(const SimNetConfig& c) {
        cfg = c;
        if (cfg.patch_side < 3 || cfg.patch_side % 2 == 0)
            throw ConfigError("sim net: patch side must be odd and >= 3");
        Rng rt(derive_seed(cfg.seed, 0x7468657461ull));
        Rng rp(derive_seed(cfg.seed, 0x706869ull));
        theta.build(cfg.patch_side, cfg.embed_dim, rt);
        phi.build(cfg.patch_side, cfg.embed_dim, rp);
    }

    std::vector<nn::ParamRef<T>> params() {
        std::vector<nn::ParamRef<T>> out;
        theta.collect(out, "theta");
        phi.collect(out, "phi");
        return out;
    }
};

struct SimModel {
    SimNetT<float> net;
    long long iteration = 0;

    const SimNetConfig& cfg() const { return net.cfg; }
};

SimModel build_simnet(const SimNetConfig& cfg);

template <typename T>
Tensor<T> patch_tensor(const Patch& p) {
    Tensor<T> t(1, {p.side, p.side, p.side});
    for (std::size_t i = 0; i < p.intensities.size(); ++i)
        t.v[i] = static_cast<T>(p.intensities[i]);
    return t;
}

std::vector<double> embed_target(const SimModel& model, const Patch& patch);
std::vector<double> embed_atlas(const SimModel& model, const Patch& patch);

/// Softmax over negative squared Euclidean embedding distances; the returned
/// weights sum to 1.
std::vector<double> similarity_softmax(const std::vector<double>& query_embedding,
                                       const std::vector<std::vector<double>>& support_embeddings);

enum class SimilarityLabel { Dissimilar = 0, Similar = 1, Rejected };

/// Crisp foreground-averaged Dice of two label patches.
double patch_label_dice(const Patch& a, const Patch& b, double eps = 1e-5);

/// Threshold labeling of a support patch against the query patch; Dice in
/// the open band (thr2, thr1) yields Rejected and the pair is resampled.
SimilarityLabel assign_similarity_label(const Patch& query, const Patch& support, double thr1,
                                        double thr2, double eps = 1e-5);

/// Voxels of the structure adjacent to its outside: the one-voxel inner
/// boundary under 6-neighborhood erosion with out-of-grid treated as
/// background.
std::vector<std::array<int, 3>> boundary_centers(const LabelVolume& lab, int32_t structure);

Patch extract_patch(const ScalarVolume& image, const LabelVolume& labels,
                    const std::array<int, 3>& center, int side);

// A registered view: one warped atlas over one target, both with labels.
struct SimTrainView {
    ScalarVolume warped_image;
    LabelVolume warped_label;
    ScalarVolume target_image;
    LabelVolume target_label;
};

struct Triplet {
    Patch support_j, support_k, query;
    int y_j = 0, y_k = 0;
};

/// Draws (support_j, y_j), (support_k, y_k), query with y_j != y_k. The query
/// sits on a boundary voxel of the target structure; supports come from the
/// warped atlas at the same and at displaced centers.
Triplet sample_training_triplet(const SimTrainView& view, const SimTrainConfig& cfg, Rng& rng);

/// Episodic trainer: C iterations of B sampled triplets, cross-entropy on the
/// two-support softmax, plain gradient steps of size epsilon on theta and phi.
std::vector<double> train_sim(SimModel& model, const std::vector<SimTrainView>& views,
                              const SimTrainConfig& cfg);

/// True when the model ranks the y=1 support above the y=0 support.
bool classify_triplet(const SimModel& model, const Triplet& t);

Checkpoint simnet_to_checkpoint(const SimModel& model);
SimModel simnet_from_checkpoint(const Checkpoint& ck);

constexpr const char* kSimCheckpointFormat = "xmas-sim-v1";

} // namespace xmas

#endif
