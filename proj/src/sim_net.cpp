#include "xmas/sim_net.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "xmas/losses.hpp"

namespace xmas {

SimModel build_simnet(const SimNetConfig& cfg) {
    SimModel model;
    model.net.build(cfg);
    return model;
}

std::vector<double> embed_target(const SimModel& model, const Patch& patch) {
    const auto emb = model.net.phi.forward(patch_tensor<float>(patch), false);
    return std::vector<double>(emb.begin(), emb.end());
}

std::vector<double> embed_atlas(const SimModel& model, const Patch& patch) {
    const auto emb = model.net.theta.forward(patch_tensor<float>(patch), false);
    return std::vector<double>(emb.begin(), emb.end());
}

std::vector<double> similarity_softmax(const std::vector<double>& query_embedding,
                                       const std::vector<std::vector<double>>& support_embeddings) {
    if (support_embeddings.empty())
        throw std::invalid_argument("similarity_softmax: empty support set");
    std::vector<double> neg_d(support_embeddings.size());
    for (std::size_t i = 0; i < support_embeddings.size(); ++i) {
        if (support_embeddings[i].size() != query_embedding.size())
            throw std::invalid_argument("similarity_softmax: embedding length mismatch");
        double d = 0.0;
        for (std::size_t j = 0; j < query_embedding.size(); ++j) {
            const double diff = query_embedding[j] - support_embeddings[i][j];
            d += diff * diff;
        }
        neg_d[i] = -d;
    }
    const double m = *std::max_element(neg_d.begin(), neg_d.end());
    double sum = 0.0;
    std::vector<double> w(neg_d.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = std::exp(neg_d[i] - m);
        sum += w[i];
    }
    for (double& x : w) x /= sum;
    return w;
}

double patch_label_dice(const Patch& a, const Patch& b, double eps) {
    if (a.labels.size() != b.labels.size())
        throw ShapeError("patch dice: shape mismatch");
    double sum = 0.0;
    int nfg = 0;
    for (int32_t l : a.label_set) {
        if (l == 0) continue;
        std::size_t ca = 0, cb = 0, inter = 0;
        for (std::size_t i = 0; i < a.labels.size(); ++i) {
            const bool ia = a.labels[i] == l;
            const bool ib = b.labels[i] == l;
            ca += ia;
            cb += ib;
            inter += ia && ib;
        }
        sum += (2.0 * inter + eps) / (static_cast<double>(ca) + cb + eps);
        ++nfg;
    }
    return nfg == 0 ? 1.0 : sum / nfg;
}

SimilarityLabel assign_similarity_label(const Patch& query, const Patch& support, double thr1,
                                        double thr2, double eps) {
    const double dice = patch_label_dice(query, support, eps);
    if (dice > thr1) return SimilarityLabel::Similar;
    if (dice < thr2) return SimilarityLabel::Dissimilar;
    return SimilarityLabel::Rejected;
}

std::vector<std::array<int, 3>> boundary_centers(const LabelVolume& lab, int32_t structure) {
    const auto& n = lab.grid.shape;
    std::vector<std::array<int, 3>> out;
    const auto is_structure = [&](int x, int y, int z) {
        if (x < 0 || y < 0 || z < 0 || x >= n[0] || y >= n[1] || z >= n[2]) return false;
        return lab.at(x, y, z) == structure;
    };
    for (int z = 0; z < n[2]; ++z)
        for (int y = 0; y < n[1]; ++y)
            for (int x = 0; x < n[0]; ++x) {
                if (lab.at(x, y, z) != structure) continue;
                if (!is_structure(x - 1, y, z) || !is_structure(x + 1, y, z) ||
                    !is_structure(x, y - 1, z) || !is_structure(x, y + 1, z) ||
                    !is_structure(x, y, z - 1) || !is_structure(x, y, z + 1))
                    out.push_back({x, y, z});
            }
    return out;
}

Patch extract_patch(const ScalarVolume& image, const LabelVolume& labels,
                    const std::array<int, 3>& center, int side) {
    require_same_grid(image.grid, labels.grid, "extract_patch");
    const auto& n = image.grid.shape;
    Patch p;
    p.side = side;
    p.center = center;
    p.label_set = labels.label_set;
    p.intensities.resize(static_cast<std::size_t>(side) * side * side);
    p.labels.resize(p.intensities.size());
    const int h = side / 2;
    std::size_t i = 0;
    for (int dz = -h; dz <= h; ++dz)
        for (int dy = -h; dy <= h; ++dy)
            for (int dx = -h; dx <= h; ++dx, ++i) {
                const int x = std::clamp(center[0] + dx, 0, n[0] - 1);
                const int y = std::clamp(center[1] + dy, 0, n[1] - 1);
                const int z = std::clamp(center[2] + dz, 0, n[2] - 1);
                p.intensities[i] = image.at(x, y, z);
                p.labels[i] = labels.at(x, y, z);
            }
    return p;
}

Triplet sample_training_triplet(const SimTrainView& view, const SimTrainConfig& cfg, Rng& rng) {
    cfg.validate();
    require_same_grid(view.warped_image.grid, view.target_image.grid, "sample_training_triplet");
    const auto centers = boundary_centers(view.target_label, cfg.boundary_structure);
    if (centers.empty())
        throw SamplingError("sample_training_triplet: no boundary voxels for structure " +
                            std::to_string(cfg.boundary_structure));

    const int p_side = cfg.patch_side;
    for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
        const auto c = centers[rng.below(centers.size())];
        Patch query = extract_patch(view.target_image, view.target_label, c, p_side);
        Patch near = extract_patch(view.warped_image, view.warped_label, c, p_side);
        const SimilarityLabel y_near = assign_similarity_label(query, near, cfg.thr1, cfg.thr2,
                                                               cfg.dice_epsilon);
        std::array<int, 3> d = c;
        for (int a = 0; a < 3; ++a) d[a] += rng.range(-p_side, p_side);
        Patch far = extract_patch(view.warped_image, view.warped_label, d, p_side);
        const SimilarityLabel y_far = assign_similarity_label(query, far, cfg.thr1, cfg.thr2,
                                                              cfg.dice_epsilon);
        if (y_near == SimilarityLabel::Rejected || y_far == SimilarityLabel::Rejected) continue;
        if (y_near == y_far) continue;
        Triplet t;
        t.query = std::move(query);
        if (rng.below(2) == 0) {
            t.support_j = std::move(near);
            t.y_j = static_cast<int>(y_near);
            t.support_k = std::move(far);
            t.y_k = static_cast<int>(y_far);
        } else {
            t.support_j = std::move(far);
            t.y_j = static_cast<int>(y_far);
            t.support_k = std::move(near);
            t.y_k = static_cast<int>(y_near);
        }
        return t;
    }
    throw SamplingError("sample_training_triplet: retry budget exhausted");
}

std::vector<double> train_sim(SimModel& model, const std::vector<SimTrainView>& views,
                              const SimTrainConfig& cfg) {
    cfg.validate();
    if (views.empty()) throw ConfigError("train_sim: no training views");
    std::vector<double> history;
    history.reserve(cfg.iterations);
    auto& theta = model.net.theta;
    auto& phi = model.net.phi;
    const auto blocks = model.net.params();

    for (int c = 0; c < cfg.iterations; ++c) {
        theta.zero_grad();
        phi.zero_grad();
        double J = 0.0;
        for (int b = 0; b < cfg.batch_size; ++b) {
            Rng rng(derive_seed(cfg.seed, 0x73616d706cull,
                                static_cast<uint64_t>(model.iteration) * cfg.batch_size + b));
            const SimTrainView& view = views[rng.below(views.size())];
            const Triplet t = sample_training_triplet(view, cfg, rng);

            const auto eq = phi.forward(patch_tensor<float>(t.query), true);
            const auto ej = theta.forward(patch_tensor<float>(t.support_j), true);
            const auto ek = theta.forward(patch_tensor<float>(t.support_k), true);

            double dj = 0.0, dk = 0.0;
            for (std::size_t i = 0; i < eq.size(); ++i) {
                const double a = static_cast<double>(eq[i]) - ej[i];
                const double bdiff = static_cast<double>(eq[i]) - ek[i];
                dj += a * a;
                dk += bdiff * bdiff;
            }
            const double m = std::max(-dj, -dk);
            const double zj = std::exp(-dj - m), zk = std::exp(-dk - m);
            const double pj = zj / (zj + zk), pk = zk / (zj + zk);
            const double p_true = t.y_j == 1 ? pj : pk;
            J += -std::log(std::max(p_true, 1e-300)) / cfg.batch_size;

            // dJ/dd_i = (y_i - p_i) / B through the softmax over -d
            const double gdj = (t.y_j - pj) / cfg.batch_size;
            const double gdk = (t.y_k - pk) / cfg.batch_size;
            std::vector<float> geq(eq.size()), gej(eq.size()), gek(eq.size());
            for (std::size_t i = 0; i < eq.size(); ++i) {
                const double aj = 2.0 * (static_cast<double>(eq[i]) - ej[i]);
                const double ak = 2.0 * (static_cast<double>(eq[i]) - ek[i]);
                geq[i] = static_cast<float>(gdj * aj + gdk * ak);
                gej[i] = static_cast<float>(-gdj * aj);
                gek[i] = static_cast<float>(-gdk * ak);
            }
            theta.backward(gek); // LIFO: k was embedded last
            theta.backward(gej);
            phi.backward(geq);
        }
        if (!std::isfinite(J)) {
            std::ostringstream dump;
            dump << "train_sim: non-finite loss at iteration " << model.iteration;
            throw NumericError(dump.str());
        }
        for (const auto& blk : blocks)
            for (std::size_t i = 0; i < blk.w->size(); ++i)
                (*blk.w)[i] = static_cast<float>(static_cast<double>((*blk.w)[i]) -
                                                 cfg.learning_rate * (*blk.g)[i]);
        ++model.iteration;
        history.push_back(J);
    }
    return history;
}

bool classify_triplet(const SimModel& model, const Triplet& t) {
    const auto eq = embed_target(model, t.query);
    const auto w = similarity_softmax(eq, {embed_atlas(model, t.support_j),
                                           embed_atlas(model, t.support_k)});
    return t.y_j == 1 ? w[0] > w[1] : w[1] > w[0];
}

Checkpoint simnet_to_checkpoint(const SimModel& model) {
    Checkpoint ck;
    ck.format = kSimCheckpointFormat;
    ck.meta["patch_side"] = std::to_string(model.cfg().patch_side);
    ck.meta["embed_dim"] = std::to_string(model.cfg().embed_dim);
    ck.meta["seed"] = std::to_string(model.cfg().seed);
    ck.meta["iteration"] = std::to_string(model.iteration);
    auto blocks = const_cast<SimModel&>(model).net.params();
    for (const auto& b : blocks) ck.blocks.emplace_back(b.name, *b.w);
    return ck;
}

SimModel simnet_from_checkpoint(const Checkpoint& ck) {
    SimNetConfig cfg;
    cfg.patch_side = std::stoi(ck.meta_or("patch_side", "15"));
    cfg.embed_dim = std::stoi(ck.meta_or("embed_dim", "64"));
    cfg.seed = std::stoull(ck.meta_or("seed", "0"));
    SimModel model = build_simnet(cfg);
    model.iteration = std::stoll(ck.meta_or("iteration", "0"));
    auto blocks = model.net.params();
    for (auto& b : blocks) {
        const auto* w = ck.find(b.name);
        if (!w) throw MalformedHeaderError("checkpoint: missing block " + b.name);
        if (w->size() != b.w->size())
            throw MalformedHeaderError("checkpoint: size mismatch for " + b.name);
        *b.w = *w;
    }
    return model;
}

} // namespace xmas
