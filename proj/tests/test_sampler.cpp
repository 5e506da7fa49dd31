#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include <geoseg/rng.hpp>
#include <geoseg/sampler.hpp>
#include <geoseg/world.hpp>

using namespace geoseg;

namespace {

World& default_world() {
    static World w = build_world(WorldSpec::desk_default(1));
    return w;
}

}  // namespace

TEST_CASE("sampled patches pass the obliqueness filter and carry correct metadata") {
    World& w = default_world();
    PatchDataset ds = sample_patches(w, w.mesh, 500, 0.25, 7);
    REQUIRE(ds.size() == 500);
    std::set<int> seen;
    int n_test = 0;
    for (const PatchMeta& m : ds.patches) {
        CHECK(m.obliqueness_deg >= kObliquenessMin);
        CHECK(m.obliqueness_deg <= kObliquenessMax);
        CHECK(seen.insert(m.vertex).second);  // distinct vertices
        CHECK(m.hemisphere == w.mesh.hemisphere[m.vertex]);
        CHECK(m.region == w.mesh.region[m.vertex]);
        CHECK(m.y_coord == target_coordinate(w.mesh, m.vertex));
        if (m.split == Split::TEST) ++n_test;
    }
    // strip-based holdout lands near the requested fraction
    CHECK(n_test > 500 * 0.10);
    CHECK(n_test < 500 * 0.45);
}

TEST_CASE("sampling is deterministic in the seed") {
    World& w = default_world();
    PatchDataset a = sample_patches(w, w.mesh, 200, 0.25, 5);
    PatchDataset b = sample_patches(w, w.mesh, 200, 0.25, 5);
    PatchDataset c = sample_patches(w, w.mesh, 200, 0.25, 6);
    for (int i = 0; i < 200; ++i) CHECK(a.patches[i].vertex == b.patches[i].vertex);
    bool differs = false;
    for (int i = 0; i < 200; ++i) differs |= (a.patches[i].vertex != c.patches[i].vertex);
    CHECK(differs);
}

TEST_CASE("oversampling reports the candidate shortfall") {
    World& w = default_world();
    CHECK_THROWS_WITH_AS(sample_patches(w, w.mesh, 10'000'000, 0.25, 1),
                         doctest::Contains("candidates"), std::runtime_error);
}

TEST_CASE("test strips hold out contiguous bands across the sheet") {
    World& w = default_world();
    PatchDataset ds = sample_patches(w, w.mesh, 2000, 0.25, 3);
    // both splits appear in both hemispheres
    int counts[2][2] = {};
    for (const PatchMeta& m : ds.patches)
        counts[static_cast<int>(m.hemisphere)][static_cast<int>(m.split)]++;
    for (int h = 0; h < 2; ++h)
        for (int s = 0; s < 2; ++s) CHECK(counts[h][s] > 0);
}

TEST_CASE("build_pairs satisfies the structural contract") {
    World& w = default_world();
    PatchDataset ds = sample_patches(w, w.mesh, 600, 0.25, 11);
    PairList pl = build_pairs(ds, 900, 2.5, 13);
    REQUIRE(static_cast<int>(pl.pairs.size()) == 900);
    CHECK_NOTHROW(pl.validate(ds));
    auto deg = pl.degrees(ds.size());
    long long total = 0;
    for (int d : deg) {
        CHECK(d >= 1);
        total += d;
    }
    CHECK(total == 2 * 900);

    SUBCASE("deterministic in the seed") {
        PairList again = build_pairs(ds, 900, 2.5, 13);
        REQUIRE(again.pairs.size() == pl.pairs.size());
        for (size_t i = 0; i < pl.pairs.size(); ++i) {
            CHECK(again.pairs[i].a == pl.pairs[i].a);
            CHECK(again.pairs[i].b == pl.pairs[i].b);
        }
    }
    SUBCASE("degree distribution is heavy-tailed") {
        int dmax = *std::max_element(deg.begin(), deg.end());
        double mean = 2.0 * 900 / ds.size();
        CHECK(dmax >= 3 * mean);
    }
}

TEST_CASE("pair list validation catches each violation") {
    World& w = default_world();
    PatchDataset ds = sample_patches(w, w.mesh, 40, 0.25, 17);
    // find two indices per hemisphere
    int l1 = -1, l2 = -1, r1 = -1;
    for (int i = 0; i < ds.size(); ++i) {
        if (ds.patches[i].hemisphere == Hemisphere::LEFT) (l1 < 0 ? l1 : l2) = i;
        else if (r1 < 0) r1 = i;
    }
    REQUIRE(l2 >= 0);
    REQUIRE(r1 >= 0);

    PairList self;
    self.pairs = {{l1, l1, 1.0}};
    CHECK_THROWS(self.validate(ds));

    PairList cross;
    cross.pairs = {{l1, r1, 1.0}};
    CHECK_THROWS(cross.validate(ds));

    PairList dup;
    dup.pairs = {{l1, l2, 1.0}, {l2, l1, 2.0}};
    CHECK_THROWS(dup.validate(ds));

    PairList negative;
    negative.pairs = {{l1, l2, -0.5}};
    CHECK_THROWS(negative.validate(ds));

    PairList range;
    range.pairs = {{l1, ds.size(), 1.0}};
    CHECK_THROWS(range.validate(ds));
}

TEST_CASE("annotate_distances matches direct geodesic queries") {
    World& w = default_world();
    PatchDataset ds = sample_patches(w, w.mesh, 120, 0.25, 19);
    PairList pl = build_pairs(ds, 150, 2.5, 19);
    annotate_distances(pl, ds, w.mesh);
    CHECK(pl.annotated);
    Rng rng(23);
    for (int q = 0; q < 20; ++q) {
        const Pair& p = pl.pairs[rng.uniform_index(pl.pairs.size())];
        double want = geodesic_distance(w.mesh, ds.patches[p.a].vertex, ds.patches[p.b].vertex)
                          .distance;
        CHECK(p.y_dist == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("pair and dataset files round-trip") {
    World& w = default_world();
    PatchDataset ds = sample_patches(w, w.mesh, 80, 0.25, 29);
    PairList pl = build_pairs(ds, 100, 2.5, 29);
    annotate_distances(pl, ds, w.mesh);

    auto dir = std::filesystem::temp_directory_path();
    auto ppath = (dir / "geoseg_pairs_rt.txt").string();
    auto dpath = (dir / "geoseg_dataset_rt.txt").string();
    save_pairs(pl, ppath);
    save_dataset_manifest(ds, dpath);

    PairList pl2 = load_pairs(ppath);
    REQUIRE(pl2.pairs.size() == pl.pairs.size());
    for (size_t i = 0; i < pl.pairs.size(); ++i) {
        CHECK(pl2.pairs[i].a == pl.pairs[i].a);
        CHECK(pl2.pairs[i].b == pl.pairs[i].b);
        CHECK(pl2.pairs[i].y_dist == pl.pairs[i].y_dist);
    }
    PatchDataset ds2 = load_dataset_manifest(dpath);
    REQUIRE(ds2.size() == ds.size());
    for (int i = 0; i < ds.size(); ++i) {
        CHECK(ds2.patches[i].vertex == ds.patches[i].vertex);
        CHECK(ds2.patches[i].hemisphere == ds.patches[i].hemisphere);
        CHECK(ds2.patches[i].region == ds.patches[i].region);
        CHECK(ds2.patches[i].obliqueness_deg == ds.patches[i].obliqueness_deg);
        CHECK(ds2.patches[i].split == ds.patches[i].split);
        CHECK(ds2.patches[i].y_coord == ds.patches[i].y_coord);
    }
    std::filesystem::remove(ppath);
    std::filesystem::remove(dpath);
}

TEST_CASE("infeasible pair budgets are rejected") {
    World& w = default_world();
    PatchDataset ds = sample_patches(w, w.mesh, 100, 0.25, 31);
    CHECK_THROWS(build_pairs(ds, 10, 2.5, 1));  // min degree 1 impossible
    PatchDataset empty;
    CHECK_THROWS(build_pairs(empty, 10, 2.5, 1));
}
