#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "v2p/eval.hpp"
#include "v2p/rng.hpp"

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

using namespace v2p;
using nlohmann::json;

namespace {

const std::string kFixtures = V2P_FIXTURES_DIR;

AttentionMap make_attn(const PatchGrid& grid, std::vector<double> probs) {
    AttentionMap a;
    a.grid = grid;
    a.probs = std::move(probs);
    return a;
}

} // namespace

TEST_CASE("decode mode names round-trip") {
    CHECK(parse_decode_mode("argmax") == DecodeMode::argmax);
    CHECK(parse_decode_mode("threshold") == DecodeMode::threshold_centroid);
    CHECK(std::string(decode_mode_name(DecodeMode::argmax)) == "argmax");
    CHECK(std::string(decode_mode_name(DecodeMode::threshold_centroid)) == "threshold");
    CHECK_THROWS_AS(parse_decode_mode("centroid"), std::invalid_argument);
}

TEST_CASE("argmax decode hits the peak patch center and breaks ties low") {
    PatchGrid grid(48, 48, 16); // 3x3
    std::vector<double> probs(9, 0.05);
    probs[4] = 0.6;
    Point p = decode_click(make_attn(grid, probs), DecodeMode::argmax, 0.8);
    CHECK(p.x == 24.0);
    CHECK(p.y == 24.0);

    // tie between index 2 and index 7: lower row-major index wins
    std::vector<double> tie(9, 0.0);
    tie[2] = 0.5;
    tie[7] = 0.5;
    Point t = decode_click(make_attn(grid, tie), DecodeMode::argmax, 0.8);
    CHECK(t.x == 40.0);
    CHECK(t.y == 8.0);
}

TEST_CASE("threshold decode averages the qualifying patch centers") {
    PatchGrid grid(48, 16, 16); // 1x3, centers at x = 8, 24, 40
    // gamma 0.5 keeps patches with prob >= 0.3: the first two
    std::vector<double> probs{0.6, 0.4, 0.0};
    Point p = decode_click(make_attn(grid, probs), DecodeMode::threshold_centroid, 0.5);
    CHECK(p.x == doctest::Approx((0.6 * 8 + 0.4 * 24) / 1.0).epsilon(1e-12));
    CHECK(p.y == 8.0);

    // gamma 0.8 keeps only the peak
    Point q = decode_click(make_attn(grid, probs), DecodeMode::threshold_centroid, 0.8);
    CHECK(q.x == 8.0);
}

TEST_CASE("gamma one reduces threshold decode to argmax on unique peaks") {
    Rng rng(23);
    PatchGrid grid(64, 64, 16);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> probs(grid.patch_count());
        double sum = 0.0;
        for (double& v : probs) {
            v = rng.uniform(1e-3, 1.0);
            sum += v;
        }
        for (double& v : probs) v /= sum;
        AttentionMap attn = make_attn(grid, probs);
        Point a = decode_click(attn, DecodeMode::argmax, 1.0);
        Point t = decode_click(attn, DecodeMode::threshold_centroid, 1.0);
        CHECK(a.x == doctest::Approx(t.x).epsilon(1e-12));
        CHECK(a.y == doctest::Approx(t.y).epsilon(1e-12));
    }
}

TEST_CASE("threshold decode validates gamma, argmax ignores it") {
    PatchGrid grid(32, 32, 16);
    AttentionMap attn = make_attn(grid, {0.7, 0.1, 0.1, 0.1});
    CHECK_THROWS_AS(decode_click(attn, DecodeMode::threshold_centroid, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(decode_click(attn, DecodeMode::threshold_centroid, 1.5),
                    std::invalid_argument);
    CHECK_NOTHROW(decode_click(attn, DecodeMode::argmax, -7.0));
}

TEST_CASE("element accuracy counts boundary hits and validates lengths") {
    std::vector<BoundingBox> targets{BoundingBox(10, 10, 20, 20), BoundingBox(30, 30, 40, 40)};
    std::vector<Point> preds{{10.0, 20.0}, {29.9, 35.0}}; // corner hit, near miss
    CHECK(element_accuracy(preds, targets) == 0.5);
    preds.pop_back();
    CHECK_THROWS_AS(element_accuracy(preds, targets), std::invalid_argument);
    CHECK(element_accuracy({}, {}) == 0.0);
}

TEST_CASE("element accuracy matches the hand-counted fixture exactly") {
    std::ifstream in(kFixtures + "/accuracy_cases.json");
    REQUIRE(in.good());
    json fixture = json::parse(in);
    std::vector<BoundingBox> targets;
    std::vector<Point> preds;
    for (const json& c : fixture["cases"]) {
        const json& b = c["box"];
        targets.emplace_back(b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                             b[3].get<double>());
        preds.push_back({c["click"][0].get<double>(), c["click"][1].get<double>()});
    }
    const double expected =
        fixture["inside_count"].get<double>() / static_cast<double>(targets.size());
    CHECK(element_accuracy(preds, targets) == expected);
}

TEST_CASE("stratified report uses provided size classes") {
    std::vector<EvalSample> samples;
    std::vector<Point> preds;
    // two small (one hit), one large (hit)
    EvalSample s1(BoundingBox(0, 0, 10, 10));
    s1.size_class = SizeClass::small;
    EvalSample s2(BoundingBox(20, 20, 30, 30));
    s2.size_class = SizeClass::small;
    EvalSample s3(BoundingBox(40, 40, 90, 90));
    s3.size_class = SizeClass::large;
    samples = {s1, s2, s3};
    preds = {{5, 5}, {0, 0}, {50, 50}};

    EvalReport r = size_stratified_report(samples, preds, DecodeMode::argmax, 0.0);
    CHECK(r.sample_count == 3);
    CHECK(r.overall == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(r.per_size_class.at("small") == 0.5);
    CHECK(r.per_size_class.at("large") == 1.0);
    CHECK(r.size_class_counts.at("small") == 2);
    // no medium samples: key absent rather than zero
    CHECK(r.per_size_class.count("medium") == 0);
}

TEST_CASE("categories stratify when present") {
    EvalSample s1(BoundingBox(0, 0, 10, 10));
    s1.size_class = SizeClass::small;
    s1.category = "button";
    EvalSample s2(BoundingBox(20, 20, 30, 30));
    s2.size_class = SizeClass::small;
    s2.category = "icon";
    std::vector<Point> preds{{5, 5}, {50, 50}};
    EvalReport r = size_stratified_report({s1, s2}, preds);
    CHECK(r.per_category.at("button") == 1.0);
    CHECK(r.per_category.at("icon") == 0.0);
    CHECK(r.category_counts.at("button") == 1);
}

TEST_CASE("area terciles split ranks into thirds with input-order ties") {
    // nine distinct areas in scrambled order
    std::vector<double> areas{400, 100, 900, 2500, 64, 1600, 49, 3600, 225};
    std::vector<SizeClass> cls = area_terciles(areas);
    REQUIRE(cls.size() == 9);
    // smallest three areas: 49, 64, 100 -> indices 6, 4, 1
    CHECK(cls[6] == SizeClass::small);
    CHECK(cls[4] == SizeClass::small);
    CHECK(cls[1] == SizeClass::small);
    CHECK(cls[0] == SizeClass::medium); // 400
    CHECK(cls[8] == SizeClass::medium); // 225
    CHECK(cls[2] == SizeClass::medium); // 900
    CHECK(cls[3] == SizeClass::large);
    CHECK(cls[5] == SizeClass::large);
    CHECK(cls[7] == SizeClass::large);

    // ties: equal areas classify by input order
    std::vector<SizeClass> tied = area_terciles({5, 5, 5});
    CHECK(tied[0] == SizeClass::small);
    CHECK(tied[1] == SizeClass::medium);
    CHECK(tied[2] == SizeClass::large);
}

TEST_CASE("report derives terciles when size classes are absent") {
    std::vector<EvalSample> samples;
    std::vector<Point> preds;
    // areas 100, 400, 900; middle one hit
    samples.emplace_back(BoundingBox(0, 0, 10, 10));
    samples.emplace_back(BoundingBox(20, 20, 40, 40));
    samples.emplace_back(BoundingBox(50, 50, 80, 80));
    preds = {{90, 90}, {30, 30}, {0, 0}};
    EvalReport r = size_stratified_report(samples, preds);
    CHECK(r.per_size_class.at("small") == 0.0);
    CHECK(r.per_size_class.at("medium") == 1.0);
    CHECK(r.per_size_class.at("large") == 0.0);
}
