// Serial reference kernels against their OpenMP versions on problem sizes
// taken from the worked example (3-state agent, rho = 20, box noise).

#include <random>

#include <benchmark/benchmark.h>

#include "polysync/kernels.hpp"

using namespace polysync;

namespace {

Mat random_mat(std::size_t r, std::size_t c, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Mat m(r, c);
    for (auto& x : m.data()) x = d(rng);
    return m;
}

std::vector<Mat> random_mats(std::size_t count, std::size_t r, std::size_t c) {
    std::mt19937_64 rng(7);
    std::vector<Mat> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(random_mat(r, c, rng));
    return out;
}

// 8 box vertices x rho columns, 6x6 blocks, 57 decision variables: the gain
// LMI of a 3-state follower.
std::vector<kernels::AffineBlock> gain_like_blocks(std::size_t count) {
    std::mt19937_64 rng(11);
    std::vector<kernels::AffineBlock> out;
    for (std::size_t b = 0; b < count; ++b) {
        kernels::AffineBlock blk{Mat::identity(6) * 4.0, {}};
        for (std::size_t j = 0; j < 57; ++j) blk.coeffs.push_back(symmetrize(random_mat(6, 6, rng)) * 0.05);
        out.push_back(std::move(blk));
    }
    return out;
}

template <auto Fn>
void bm_barrier(benchmark::State& state) {
    const auto blocks = gain_like_blocks(static_cast<std::size_t>(state.range(0)));
    const Vec x(57, 0.01);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(blocks, x, true));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void bm_max_step(benchmark::State& state) {
    const auto blocks = gain_like_blocks(static_cast<std::size_t>(state.range(0)));
    const Vec x(57, 0.0);
    Vec dx(57);
    for (std::size_t j = 0; j < dx.size(); ++j) dx[j] = (j % 3 == 0 ? -1.0 : 0.5);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(blocks, x, dx));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void bm_radii(benchmark::State& state) {
    const auto mats = random_mats(static_cast<std::size_t>(state.range(0)), 3, 3);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(mats));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void bm_image(benchmark::State& state) {
    const auto mats = random_mats(static_cast<std::size_t>(state.range(0)), 3, 3);
    std::vector<Vec> pts;
    for (const Mat& m : random_mats(64, 3, 1)) pts.push_back(m.col(0));
    for (auto _ : state) benchmark::DoNotOptimize(Fn(mats, pts));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void bm_map(benchmark::State& state) {
    const auto verts = random_mats(static_cast<std::size_t>(state.range(0)), 3, 23);
    std::mt19937_64 rng(3);
    const Mat left = Mat::identity(3);
    const Mat right = random_mat(23, 3, rng);
    const Mat shift = random_mat(3, 3, rng);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(verts, left, right, shift));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

} // namespace

BENCHMARK(bm_barrier<kernels::barrier_terms_serial>)->Name("barrier/serial")->Arg(40)->Arg(160);
BENCHMARK(bm_barrier<kernels::barrier_terms_omp>)->Name("barrier/omp")->Arg(40)->Arg(160);
BENCHMARK(bm_max_step<kernels::max_step_serial>)->Name("max_step/serial")->Arg(160);
BENCHMARK(bm_max_step<kernels::max_step_omp>)->Name("max_step/omp")->Arg(160);
BENCHMARK(bm_radii<kernels::spectral_radii_serial>)->Name("radii/serial")->Arg(160)->Arg(1280);
BENCHMARK(bm_radii<kernels::spectral_radii_omp>)->Name("radii/omp")->Arg(160)->Arg(1280);
BENCHMARK(bm_image<kernels::image_bounds_serial>)->Name("image/serial")->Arg(160)->Arg(1280);
BENCHMARK(bm_image<kernels::image_bounds_omp>)->Name("image/omp")->Arg(160)->Arg(1280);
BENCHMARK(bm_map<kernels::map_vertices_serial>)->Name("map/serial")->Arg(160);
BENCHMARK(bm_map<kernels::map_vertices_omp>)->Name("map/omp")->Arg(160);

BENCHMARK_MAIN();
