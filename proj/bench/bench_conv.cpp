#include <chrono>
#include <cstdio>
#include "xmas/nn.hpp"
#include "xmas/rng.hpp"
using namespace xmas;
using Clock = std::chrono::steady_clock;

template <typename F> double msr(F&& f, int reps) {
    auto t0 = Clock::now();
    for (int i = 0; i < reps; ++i) f();
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count() / reps;
}

int main() {
    Rng rng(3);
    // dec0 conv: 24 -> 8 at 32^3 (the most expensive layer)
    nn::Conv3d<float> c(24, 8, 3, 1);
    c.init_he(rng);
    Tensor<float> x(24, {32, 32, 32});
    for (auto& v : x.v) v = (float)rng.normal();
    double fwd = msr([&]{ auto o = c.forward(x, false); }, 20);
    const double macs = 32768.0 * 27 * 24 * 8;
    printf("conv24->8 fwd: %.2f ms = %.1f GMAC/s\n", fwd, macs / fwd / 1e6);

    auto out = c.forward(x, true);
    double bwd = msr([&]{
        c.zero_grad();
        auto o2 = c.forward(x, true);
        auto g = c.backward(o2);
    }, 10);
    printf("conv fwd+bwd: %.2f ms = %.1f GMAC/s (3x passes)\n", bwd, 3 * macs / bwd / 1e6);
    return 0;
}
