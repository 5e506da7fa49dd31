#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <tuple>

#include "fd_check.hpp"
#include "test_util.hpp"

using namespace geoseg;
using testutil::max_grad_mismatch;
using testutil::random_tensor;

namespace {

// random values bounded away from zero (for relu/l1 kinks)
Tensor random_nonzero(std::vector<int> shape, Rng& rng) {
    Tensor t(std::move(shape));
    for (float& v : t.data) {
        double s = rng.uniform() < 0.5 ? -1.0 : 1.0;
        v = static_cast<float>(s * rng.uniform(0.2, 1.0));
    }
    return t;
}

}  // namespace

TEST_CASE("conv2d gradients (stride 1 and 2, odd and even sizes)") {
    Rng rng(101);
    for (auto [h, w, ic, oc, stride] :
         {std::tuple{6, 6, 2, 3, 1}, {5, 7, 1, 2, 2}, {8, 8, 3, 2, 2}, {4, 4, 1, 1, 1}}) {
        ParamStore store;
        store.create("x", random_tensor({ic, h, w}, rng));
        store.create("w", random_tensor({oc, ic, 3, 3}, rng));
        store.create("b", random_tensor({oc}, rng));
        int s = stride;
        // the loss is quadratic in every checked tensor, so a large step has
        // no truncation error and drowns out float32 roundoff
        double err = max_grad_mismatch(
            store,
            [s](Graph& g, ParamStore& ps) {
                return g.sum_sq(
                    g.conv2d(g.param(ps, "x"), g.param(ps, "w"), g.param(ps, "b"), s));
            },
            2e-1);
        CHECK(err < 1e-3);
    }
}

TEST_CASE("dense, global_avg_pool and their composition gradients") {
    Rng rng(102);
    ParamStore store;
    store.create("x", random_tensor({4, 4, 4}, rng));
    store.create("w", random_tensor({5, 4}, rng));
    store.create("b", random_tensor({5}, rng));
    double err = max_grad_mismatch(store, [](Graph& g, ParamStore& ps) {
        return g.sum_sq(
            g.dense(g.global_avg_pool(g.param(ps, "x")), g.param(ps, "w"), g.param(ps, "b")));
    });
    CHECK(err < 1e-3);
}

TEST_CASE("relu gradient away from the kink") {
    Rng rng(103);
    ParamStore store;
    store.create("x", random_nonzero({3, 4, 4}, rng));
    double err = max_grad_mismatch(
        store, [](Graph& g, ParamStore& ps) { return g.sum_sq(g.relu(g.param(ps, "x"))); },
        1e-3);
    CHECK(err < 1e-3);
}

TEST_CASE("maxpool2 gradient with distinct entries") {
    Rng rng(104);
    ParamStore store;
    Tensor x({2, 4, 6});
    // values on a 1/13 lattice: within any pooling window entries stay
    // separated by >= 1/13, so a 0.03 step cannot flip the max
    for (size_t i = 0; i < x.data.size(); ++i)
        x.data[i] = static_cast<float>((7 * i % 13) / 13.0);
    store.create("x", x);
    double err = max_grad_mismatch(
        store, [](Graph& g, ParamStore& ps) { return g.sum_sq(g.maxpool2(g.param(ps, "x"))); },
        3e-2);
    CHECK(err < 1e-3);
    Graph g;
    CHECK_THROWS(g.maxpool2(g.input(Tensor({1, 3, 4}))));  // odd height
}

TEST_CASE("upsample2 and concat_channels gradients") {
    Rng rng(105);
    ParamStore store;
    store.create("a", random_tensor({2, 3, 3}, rng));
    store.create("b", random_tensor({3, 6, 6}, rng));
    double err = max_grad_mismatch(
        store,
        [](Graph& g, ParamStore& ps) {
            return g.sum_sq(g.concat_channels(g.upsample2(g.param(ps, "a")), g.param(ps, "b")));
        },
        4e-1);
    CHECK(err < 1e-3);
    Graph g;
    CHECK_THROWS(g.concat_channels(g.input(Tensor({1, 2, 2})), g.input(Tensor({1, 3, 3}))));
}

TEST_CASE("softmax cross-entropy gradients and values") {
    Rng rng(106);
    SUBCASE("vector logits") {
        ParamStore store;
        store.create("z", random_tensor({5}, rng));
        double err = max_grad_mismatch(store, [](Graph& g, ParamStore& ps) {
            return g.softmax_ce_loss(g.param(ps, "z"), {3});
        });
        CHECK(err < 1e-3);
    }
    SUBCASE("pixel map logits") {
        ParamStore store;
        store.create("z", random_tensor({3, 4, 4}, rng));
        std::vector<int> labels(16);
        for (auto& l : labels) l = static_cast<int>(rng.uniform_index(3));
        double err = max_grad_mismatch(store, [labels](Graph& g, ParamStore& ps) {
            return g.softmax_ce_loss(g.param(ps, "z"), labels);
        });
        CHECK(err < 1e-3);
    }
    SUBCASE("uniform logits cost ln(k)") {
        Graph g;
        Graph::NodeId loss = g.softmax_ce_loss(g.input(Tensor({7})), {0});
        CHECK(g.scalar(loss) == doctest::Approx(std::log(7.0)).epsilon(1e-6));
    }
    SUBCASE("two-class hand value") {
        Tensor z({2}, {1.5f, -0.5f});
        Graph g;
        double got = g.scalar(g.softmax_ce_loss(g.input(z), {0}));
        CHECK(got == doctest::Approx(std::log(1.0 + std::exp(-2.0))).epsilon(1e-6));
    }
}

TEST_CASE("elementwise helpers: add/sub/scale/sub_const/sum_sq/l1 gradients") {
    Rng rng(107);
    ParamStore store;
    store.create("a", random_nonzero({6}, rng));
    store.create("b", random_nonzero({6}, rng));
    double err = max_grad_mismatch(
        store,
        [](Graph& g, ParamStore& ps) {
            Graph::NodeId a = g.param(ps, "a");
            Graph::NodeId b = g.param(ps, "b");
            Graph::NodeId mix = g.add(g.scale(g.sub(a, b), 0.7), g.scale(b, 0.1));
            return g.add(g.l1(mix), g.sub_const(g.sum_sq(a), 2.5));
        },
        1e-3);
    CHECK(err < 1e-3);
}

TEST_CASE("softmax_channels is a per-pixel distribution") {
    Rng rng(108);
    Tensor z = random_tensor({4, 3, 3}, rng);
    Tensor p = softmax_channels(z);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) {
            double sum = 0.0;
            for (int c = 0; c < 4; ++c) sum += p.at3(c, y, x);
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
        }
}

TEST_CASE("learning-rate schedule") {
    LrSchedule s{0.01, 2.0, 3, {}};
    CHECK(s.lr(0) == doctest::Approx(0.01));
    CHECK(s.lr(2) == doctest::Approx(0.01));
    CHECK(s.lr(3) == doctest::Approx(0.005));
    CHECK(s.lr(5) == doctest::Approx(0.005));
    CHECK(s.lr(6) == doctest::Approx(0.0025));

    LrSchedule m{0.1, 10.0, 0, {2, 4}};
    CHECK(m.lr(0) == doctest::Approx(0.1));
    CHECK(m.lr(1) == doctest::Approx(0.1));
    CHECK(m.lr(2) == doctest::Approx(0.01));
    CHECK(m.lr(3) == doctest::Approx(0.01));
    CHECK(m.lr(4) == doctest::Approx(0.001));
}

TEST_CASE("sgd_step applies coupled weight decay except to exempt parameters") {
    ParamStore store;
    store.create("plain", Tensor({1}, {1.0f}));
    store.create("exempt", Tensor({1}, {1.0f}), true, true);
    for (auto& [name, p] : store) {
        p.grad = Tensor({1});
        p.has_grad = true;
    }
    LrSchedule sched{0.1, 2.0, 1000, {}};
    sgd_step(store, sched, 0, 0.05);
    // plain: 1 - 0.1 * (0 + 2*0.05*1) = 0.99; exempt: unchanged
    CHECK(store.at("plain").value.data[0] == doctest::Approx(0.99).epsilon(1e-6));
    CHECK(store.at("exempt").value.data[0] == doctest::Approx(1.0));

    ParamStore missing;
    missing.create("w", Tensor({1}, {1.0f}));
    CHECK_THROWS(sgd_step(missing, sched, 0, 0.0));
}

TEST_CASE("tape misuse is rejected") {
    SUBCASE("backward twice") {
        Graph g;
        Graph::NodeId x = g.sum_sq(g.input(Tensor({2}, {1.0f, 2.0f})));
        g.backward(x);
        CHECK_THROWS(g.backward(x));
    }
    SUBCASE("backward from a non-scalar") {
        Graph g;
        Graph::NodeId x = g.input(Tensor({2}, {1.0f, 2.0f}));
        CHECK_THROWS(g.backward(x));
    }
    SUBCASE("non-finite forward output") {
        Graph g;
        Tensor bad({1});
        bad.data[0] = std::numeric_limits<float>::infinity();
        CHECK_THROWS(g.input(bad));
    }
}

TEST_CASE("checkpoints round-trip bit-exactly with flags") {
    Rng rng(109);
    ParamStore store;
    store.create("conv/w", random_tensor({2, 1, 3, 3}, rng));
    store.create("embed/w", random_tensor({4, 2}, rng), true, true);
    store.create("meta/scale", Tensor({1}, {2.5f}), false, true);
    auto path = (std::filesystem::temp_directory_path() / "geoseg_ckpt_rt.bin").string();
    save_checkpoint(store, path);
    ParamStore l = load_checkpoint(path);
    REQUIRE(l.size() == store.size());
    for (const auto& [name, p] : store) {
        REQUIRE(l.contains(name));
        const Param& q = l.at(name);
        CHECK(q.value.shape == p.value.shape);
        CHECK(q.value.data == p.value.data);
        CHECK(q.trainable == p.trainable);
        CHECK(q.weight_decay_exempt == p.weight_decay_exempt);
    }
    std::filesystem::remove(path);
    CHECK_THROWS(load_checkpoint(path));
}
