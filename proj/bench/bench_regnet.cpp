// Rough training-throughput probe; not part of the shipped project.
#include <chrono>
#include <cstdio>
#include "xmas/reg_net.hpp"
#include "xmas/rng.hpp"

using namespace xmas;

int main() {
    RegNetConfig cfg;
    cfg.input_grid = SpatialGrid(32, 32, 32);
    cfg.seed = 7;
    RegModel model = build_regnet(cfg);
    printf("param count: %zu\n", model.net.param_count());

    Rng rng(1);
    SpatialGrid g = cfg.input_grid;
    RegPair pair;
    pair.image_a = ScalarVolume(g);
    pair.image_t = ScalarVolume(g);
    pair.label_a = LabelVolume(g, {0, 1, 2});
    pair.label_t = LabelVolume(g, {0, 1, 2});
    for (std::size_t i = 0; i < g.voxel_count(); ++i) {
        pair.image_a.values[i] = rng.normal();
        pair.image_t.values[i] = rng.normal();
        pair.label_a.labels[i] = static_cast<int32_t>(rng.below(3));
        pair.label_t.labels[i] = static_cast<int32_t>(rng.below(3));
    }
    LossConfig lc;
    // warmup
    train_reg(model, {pair}, 2, lc);
    auto t0 = std::chrono::steady_clock::now();
    const int iters = 20;
    train_reg(model, {pair}, iters, lc);
    auto t1 = std::chrono::steady_clock::now();
    double ms = std::chrono::duration<double, std::milli>(t1 - t0).count() / iters;
    printf("train step: %.1f ms  -> 500 iters = %.1f s, 10 runs = %.1f min\n", ms,
           ms * 0.5, ms * 0.5 * 10 / 60.0);
    return 0;
}
