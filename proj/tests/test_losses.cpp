#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "v2p/losses.hpp"
#include "v2p/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace v2p;

namespace {

AttentionMap make_attn(const PatchGrid& grid, std::vector<double> probs) {
    AttentionMap a;
    a.grid = grid;
    a.probs = std::move(probs);
    return a;
}

LabelMap make_target(const PatchGrid& grid, std::vector<double> values) {
    LabelMap m;
    m.grid = grid;
    m.values = std::move(values);
    return m;
}

std::vector<double> random_distribution(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    double sum = 0.0;
    for (double& x : v) {
        x = rng.uniform(1e-4, 1.0);
        sum += x;
    }
    for (double& x : v) x /= sum;
    return v;
}

} // namespace

TEST_CASE("suppression loss sums attention over the given set") {
    PatchGrid grid(32, 32, 16); // 2x2
    AttentionMap attn = make_attn(grid, {0.25, 0.25, 0.25, 0.25});
    SuppressionSet g{grid, {0, 2}};
    LossValue lv = suppression_loss(attn, g);
    CHECK(lv.value == 0.5);
    CHECK(lv.grad == std::vector<double>{1, 0, 1, 0});

    SuppressionSet empty{grid, {}};
    LossValue none = suppression_loss(attn, empty);
    CHECK(none.value == 0.0);
    CHECK(none.grad == std::vector<double>(4, 0.0));
}

TEST_CASE("suppression loss stays in [0,1] for random distributions") {
    PatchGrid grid(64, 64, 16);
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        AttentionMap attn = make_attn(grid, random_distribution(rng, grid.patch_count()));
        std::vector<std::uint32_t> idx;
        for (std::uint32_t i = 0; i < grid.patch_count(); ++i) {
            if (rng.uniform01() < 0.5) idx.push_back(i);
        }
        const double v = suppression_loss(attn, SuppressionSet{grid, idx}).value;
        CHECK(v >= 0.0);
        CHECK(v <= 1.0 + 1e-12);
    }
}

TEST_CASE("suppression loss rejects mismatched grids") {
    AttentionMap attn = make_attn(PatchGrid(32, 32, 16), std::vector<double>(4, 0.25));
    SuppressionSet g{PatchGrid(64, 64, 16), {0}};
    CHECK_THROWS_AS(suppression_loss(attn, g), std::invalid_argument);
}

TEST_CASE("kl loss against frozen hand values") {
    PatchGrid grid(32, 32, 16);
    LabelMap target = make_target(grid, {0.4, 0.3, 0.2, 0.1});
    AttentionMap attn = make_attn(grid, {0.25, 0.25, 0.25, 0.25});
    CHECK(kl_action_loss(target, attn).value ==
          doctest::Approx(0.10644013528622318).epsilon(1e-14));

    LabelMap t2 = make_target(grid, {0.7, 0.2, 0.1, 0.0});
    AttentionMap a2 = make_attn(grid, {0.1, 0.2, 0.3, 0.4});
    CHECK(kl_action_loss(t2, a2).value == doctest::Approx(1.252275875471908).epsilon(1e-14));
}

TEST_CASE("kl of a distribution with itself vanishes") {
    PatchGrid grid(64, 64, 16);
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> p = random_distribution(rng, grid.patch_count());
        LabelMap target = make_target(grid, p);
        AttentionMap attn = make_attn(grid, p);
        CHECK(std::abs(kl_action_loss(target, attn).value) <= 1e-12);
    }
}

TEST_CASE("kl is non-negative on random distribution pairs") {
    PatchGrid grid(64, 64, 16);
    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        LabelMap target = make_target(grid, random_distribution(rng, grid.patch_count()));
        AttentionMap attn = make_attn(grid, random_distribution(rng, grid.patch_count()));
        CHECK(kl_action_loss(target, attn).value >= -1e-14);
    }
}

TEST_CASE("kl conventions: zero target terms drop, zero attention is floored") {
    PatchGrid grid(32, 32, 16);
    // p has a zero entry: 0*log(0/a) contributes nothing
    LabelMap t = make_target(grid, {0.5, 0.5, 0.0, 0.0});
    AttentionMap a = make_attn(grid, {0.5, 0.5, 0.0, 0.0});
    CHECK(std::abs(kl_action_loss(t, a).value) <= 1e-12);
    // a_i = 0 under positive p_i: finite (floored), large, positive
    LabelMap t2 = make_target(grid, {1.0, 0.0, 0.0, 0.0});
    AttentionMap a2 = make_attn(grid, {0.0, 1.0, 0.0, 0.0});
    const double v = kl_action_loss(t2, a2).value;
    CHECK(std::isfinite(v));
    CHECK(v > 20.0); // log(1e12) ~ 27.6
}

TEST_CASE("kl gradient is -p/a and matches finite differences") {
    PatchGrid grid(32, 32, 16);
    LabelMap target = make_target(grid, {0.4, 0.3, 0.2, 0.1});
    std::vector<double> a{0.3, 0.3, 0.2, 0.2};
    LossValue lv = kl_action_loss(target, make_attn(grid, a));
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(lv.grad[i] == doctest::Approx(-target.values[i] / a[i]).epsilon(1e-13));
        const double h = 1e-7;
        std::vector<double> hi = a, lo = a;
        hi[i] += h;
        lo[i] -= h;
        const double fd = (kl_action_loss(target, make_attn(grid, hi)).value -
                           kl_action_loss(target, make_attn(grid, lo)).value) /
                          (2 * h);
        CHECK(lv.grad[i] == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("kl rejects negative targets and mismatched grids") {
    PatchGrid grid(32, 32, 16);
    LabelMap bad = make_target(grid, {0.5, 0.6, -0.1, 0.0});
    CHECK_THROWS_AS(kl_action_loss(bad, make_attn(grid, {0.25, 0.25, 0.25, 0.25})),
                    std::invalid_argument);
    LabelMap ok = make_target(grid, {0.25, 0.25, 0.25, 0.25});
    CHECK_THROWS_AS(
        kl_action_loss(ok, make_attn(PatchGrid(64, 64, 16), std::vector<double>(16, 0.0625))),
        std::invalid_argument);
}

TEST_CASE("combined loss recomposes affinely from its parts") {
    PatchGrid grid(64, 64, 16);
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        LabelMap target = make_target(grid, random_distribution(rng, grid.patch_count()));
        AttentionMap attn = make_attn(grid, random_distribution(rng, grid.patch_count()));
        std::vector<std::uint32_t> idx;
        for (std::uint32_t i = 0; i < grid.patch_count(); ++i) {
            if (rng.uniform01() < 0.4) idx.push_back(i);
        }
        SuppressionSet g{grid, idx};
        const double l1 = rng.uniform(0, 3), l2 = rng.uniform(0, 3);
        const double ntp = rng.uniform(0, 2);
        CombinedLoss c = combined_loss(target, attn, g, l1, l2, ntp);

        const double sup = suppression_loss(attn, g).value;
        const double kl = kl_action_loss(target, attn).value;
        CHECK(c.breakdown.l_sup == sup);
        CHECK(c.breakdown.l_attn == kl);
        CHECK(c.breakdown.l_ntp == ntp);
        CHECK(c.breakdown.lambda1 == l1);
        CHECK(c.breakdown.lambda2 == l2);
        const double recomposed = ntp + l1 * sup + l2 * kl;
        CHECK(std::abs(c.breakdown.total - recomposed) <=
              1e-15 * std::max(1.0, std::abs(recomposed)));

        LossValue sv = suppression_loss(attn, g);
        LossValue kv = kl_action_loss(target, attn);
        for (std::size_t i = 0; i < c.grad.size(); ++i) {
            const double expect = l1 * sv.grad[i] + l2 * kv.grad[i];
            CHECK(std::abs(c.grad[i] - expect) <= 1e-15 * std::max(1.0, std::abs(expect)));
        }
    }
}

TEST_CASE("combined loss rejects negative weights") {
    PatchGrid grid(32, 32, 16);
    LabelMap target = make_target(grid, {0.25, 0.25, 0.25, 0.25});
    AttentionMap attn = make_attn(grid, {0.25, 0.25, 0.25, 0.25});
    SuppressionSet g{grid, {0}};
    CHECK_THROWS_AS(combined_loss(target, attn, g, -1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(combined_loss(target, attn, g, 1.0, -0.5), std::invalid_argument);
}
