// Microbenchmarks for the hot paths: conv forward, mesh geodesics, patch
// rendering and the distance transform behind err_seg.

#include <benchmark/benchmark.h>

#include <geoseg/autodiff.hpp>
#include <geoseg/mesh.hpp>
#include <geoseg/rng.hpp>
#include <geoseg/segnet.hpp>
#include <geoseg/siamese.hpp>
#include <geoseg/world.hpp>

using namespace geoseg;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng) {
    Tensor t(std::move(shape));
    for (float& v : t.data) v = static_cast<float>(rng.uniform(-1, 1));
    return t;
}

const World& bench_world() {
    static World w = build_world(WorldSpec::desk_default(1));
    return w;
}

}  // namespace

static void BM_Conv2dForward(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0));
    Rng rng(1);
    ParamStore ps;
    ps.create("x", random_tensor({c, 32, 32}, rng));
    ps.create("w", random_tensor({c * 2, c, 3, 3}, rng));
    ps.create("b", random_tensor({c * 2}, rng));
    for (auto _ : state) {
        Graph g;
        Graph::NodeId out =
            g.conv2d(g.param(ps, "x"), g.param(ps, "w"), g.param(ps, "b"), 2);
        benchmark::DoNotOptimize(g.value(out).data.data());
    }
}
BENCHMARK(BM_Conv2dForward)->Arg(8)->Arg(16)->Arg(32);

static void BM_SiameseEmbed(benchmark::State& state) {
    Rng rng(2);
    SiameseModel model = init_siamese(BranchArch{}, 1);
    Tensor image = random_tensor({1, 32, 32}, rng);
    for (auto _ : state) {
        Tensor f = embed(model, image);
        benchmark::DoNotOptimize(f.data.data());
    }
}
BENCHMARK(BM_SiameseEmbed);

static void BM_GeodesicSameHemisphere(benchmark::State& state) {
    const World& w = bench_world();
    Rng rng(3);
    const int half = w.mesh.n_vertices() / 2;  // LEFT block comes first
    for (auto _ : state) {
        int a = static_cast<int>(rng.uniform_index(half));
        int b = static_cast<int>(rng.uniform_index(half));
        benchmark::DoNotOptimize(geodesic_distance(w.mesh, a, b).distance);
    }
}
BENCHMARK(BM_GeodesicSameHemisphere);

static void BM_RenderPatch(benchmark::State& state) {
    const World& w = bench_world();
    Rng rng(4);
    const bool labeled = state.range(0) != 0;
    for (auto _ : state) {
        int v = static_cast<int>(rng.uniform_index(w.mesh.n_vertices()));
        RenderedPatch p = render_patch(w, v, labeled);
        benchmark::DoNotOptimize(p.image.data.data());
    }
}
BENCHMARK(BM_RenderPatch)->Arg(0)->Arg(1);

static void BM_DistanceTransform(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(5);
    std::vector<char> mask(static_cast<size_t>(n) * n);
    for (auto& m : mask) m = rng.uniform() < 0.05 ? 1 : 0;
    for (auto _ : state) {
        auto dt = distance_transform_sq(mask, n, n);
        benchmark::DoNotOptimize(dt.data());
    }
}
BENCHMARK(BM_DistanceTransform)->Arg(32)->Arg(128)->Arg(512);

BENCHMARK_MAIN();
