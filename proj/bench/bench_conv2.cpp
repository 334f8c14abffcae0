#include <chrono>
#include <cstdio>
#include "xmas/nn.hpp"
#include "xmas/nn_conv.hpp"
#include "xmas/rng.hpp"
using namespace xmas;
using namespace xmas::nn;
using Clock = std::chrono::steady_clock;
template <typename F> double msr(F&& f, int reps) {
    auto t0 = Clock::now();
    for (int i = 0; i < reps; ++i) f();
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count() / reps;
}
int main() {
    Rng rng(3);
    const int ci = 24, co = 8, N = 32;
    Tensor<float> x(ci, {N,N,N}), go(co, {N,N,N});
    for (auto& v : x.v) v = (float)rng.normal();
    for (auto& v : go.v) v = (float)rng.normal();
    std::vector<float> pad;
    detail::pad_volume(x.v.data(), ci, N, N, N, pad);
    const std::size_t px = N+2, py = N+2, pplane = px*py*(N+2);
    std::vector<float> gw(27ull*ci*co, 0.f);
    double t = msr([&]{
        for (int zo = 0; zo < N; ++zo)
          for (int yo = 0; yo < N; ++yo)
            for (int c2 = 0; c2 < co; ++c2) {
              const float* gorow = go.v.data() + c2*go.plane() + ((std::size_t)zo*N + yo)*N;
              for (int c1 = 0; c1 < ci; ++c1)
                for (int kz = 0; kz < 3; ++kz) {
                  const float* r0 = pad.data() + c1*pplane + (((std::size_t)zo+kz)*py + yo)*px;
                  detail::row_dots9(gorow, r0, r0+px, r0+2*px, N, gw.data() + ((c2*ci + c1)*3 + kz)*9);
                }
            }
    }, 10);
    const double macs = 32768.0*27*ci*co;
    printf("wgrad pass: %.2f ms = %.1f GMAC/s (sink %f)\n", t, macs/t/1e6, (double)gw[0]);
    return 0;
}
