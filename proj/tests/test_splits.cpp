#include <doctest.h>

#include "lsg/splits.hpp"

using namespace lsg;

namespace {

DatasetManifest fake_manifest(int layers_per_cell, int cells_z) {
    DatasetManifest m;
    m.geometry.layers_per_cell = layers_per_cell;
    m.geometry.cells_z = cells_z;
    m.specimens.push_back({"A", {0, 0}, PhotometricParams{}});
    m.specimens.push_back({"B", {10, 0}, PhotometricParams{}});
    const int total = layers_per_cell * cells_z;
    for (const auto& s : m.specimens)
        for (int layer = 1; layer <= total; ++layer) {
            ManifestEntry e;
            e.specimen_id = s.id;
            e.layer_index = layer;
            m.entries.push_back(e);
        }
    return m;
}

LayerRange find_range(const SplitPlan& plan, bool train, const std::string& id) {
    for (const auto& [specimen, range] : (train ? plan.train : plan.test))
        if (specimen == id) return range;
    throw std::runtime_error("no range for " + id);
}

} // namespace

TEST_CASE("separate training at 200 layers per cell: first 400 layers of A") {
    const auto manifest = fake_manifest(200, 4);
    const SplitPlan plan = make_splits(manifest, "separate_A", 200);
    REQUIRE(plan.train.size() == 1);
    CHECK(plan.train[0].first == "A");
    CHECK(plan.train[0].second.first == 1);
    CHECK(plan.train[0].second.last == 400);
    CHECK(find_range(plan, false, "A").first == 401);
    CHECK(find_range(plan, false, "A").last == 800);
    CHECK(find_range(plan, false, "B").first == 401);
    CHECK(find_range(plan, false, "B").last == 800);
}

TEST_CASE("joint training at 200 layers per cell: first 200 layers of each") {
    const auto manifest = fake_manifest(200, 4);
    const SplitPlan plan = make_splits(manifest, "joint", 200);
    REQUIRE(plan.train.size() == 2);
    for (const auto& id : {"A", "B"}) {
        CHECK(find_range(plan, true, id).first == 1);
        CHECK(find_range(plan, true, id).last == 200);
        CHECK(find_range(plan, false, id).first == 201);
        CHECK(find_range(plan, false, id).last == 800);
    }
}

TEST_CASE("desk scale: separate_B at 50 layers per cell") {
    const auto manifest = fake_manifest(50, 4);
    const SplitPlan plan = make_splits(manifest, "separate_B", 50);
    REQUIRE(plan.train.size() == 1);
    CHECK(plan.train[0].first == "B");
    CHECK(plan.train[0].second.first == 1);
    CHECK(plan.train[0].second.last == 100);
    CHECK(find_range(plan, false, "A").first == 101);
    CHECK(find_range(plan, false, "A").last == 200);
    CHECK(find_range(plan, false, "B").first == 101);
    CHECK(find_range(plan, false, "B").last == 200);
}

TEST_CASE("train and test ranges are disjoint per specimen") {
    const auto manifest = fake_manifest(50, 4);
    for (const char* strategy : {"separate_A", "separate_B", "joint"}) {
        const SplitPlan plan = make_splits(manifest, strategy, 50);
        for (const auto& [train_id, train_range] : plan.train)
            for (const auto& [test_id, test_range] : plan.test) {
                if (train_id != test_id) continue;
                CHECK(train_range.last < test_range.first);
            }
    }
}

TEST_CASE("insufficient layers produce an error naming the shortfall") {
    const auto manifest = fake_manifest(50, 3); // 150 layers < 4 * 50
    CHECK_THROWS_WITH_AS(make_splits(manifest, "separate_A", 50), doctest::Contains("150"),
                         ValidationError);
}

TEST_CASE("unknown strategies and specimens are rejected") {
    const auto manifest = fake_manifest(50, 4);
    CHECK_THROWS_AS(make_splits(manifest, "separate_C", 50), ValidationError);
    CHECK_THROWS_AS(make_splits(manifest, "mixed", 50), ValidationError);
}
