#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "pmafl/data.hpp"
#include "support.hpp"

using namespace pmafl;

namespace {
std::filesystem::path tmp_dir() {
    auto p = std::filesystem::temp_directory_path() / "pmafl_data_test";
    std::filesystem::create_directories(p);
    return p;
}
}  // namespace

TEST_CASE("synthetic mixture with zero spread sits on the class means") {
    Dataset ds = synth_gaussian_mixture(4, 16, 5, 0.0, 42);
    REQUIRE(ds.size() == 20);
    for (int64_t i = 0; i < ds.size(); ++i) {
        const int c = ds.labels[static_cast<size_t>(i)];
        for (int64_t j = 0; j < 16; ++j) {
            const double want = (j % 4 == c) ? 0.8 : 0.2;
            CHECK(ds.features.at(i, j) == want);
        }
    }
}

TEST_CASE("synthetic mixture label histogram is exact") {
    Dataset ds = synth_gaussian_mixture(3, 8, 17, 0.1, 7);
    std::vector<int> counts(3, 0);
    for (int y : ds.labels) counts[static_cast<size_t>(y)]++;
    for (int c : counts) CHECK(c == 17);
}

TEST_CASE("synthetic features stay in [0,1] and are deterministic in seed") {
    Dataset a = synth_gaussian_mixture(5, 12, 40, 0.5, 123);
    Dataset b = synth_gaussian_mixture(5, 12, 40, 0.5, 123);
    CHECK(testsup::bit_equal(a.features, b.features));
    for (double v : a.features.data()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("small spread is solvable by nearest centroid") {
    Dataset ds = synth_gaussian_mixture(4, 16, 100, 0.02, 9);
    // centroid oracle: distance to each class mean pattern
    int correct = 0;
    for (int64_t i = 0; i < ds.size(); ++i) {
        double best = 1e300;
        int best_c = -1;
        for (int c = 0; c < 4; ++c) {
            double d2 = 0.0;
            for (int64_t j = 0; j < 16; ++j) {
                const double mean = (j % 4 == c) ? 0.8 : 0.2;
                const double diff = ds.features.at(i, j) - mean;
                d2 += diff * diff;
            }
            if (d2 < best) {
                best = d2;
                best_c = c;
            }
        }
        correct += (best_c == ds.labels[static_cast<size_t>(i)]);
    }
    CHECK(static_cast<double>(correct) / static_cast<double>(ds.size()) >= 0.99);
}

TEST_CASE("IDX round-trip through a hand-crafted 2x2 fixture") {
    auto dir = tmp_dir();
    const auto img = (dir / "fix-images-idx3-ubyte").string();
    const auto lab = (dir / "fix-labels-idx1-ubyte").string();

    Dataset fixture;
    fixture.features = Tensor::from({2, 4}, {0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0});
    fixture.labels = {0, 1};
    fixture.num_classes = 2;
    write_idx(fixture, 2, 2, img, lab);

    Dataset loaded = load_idx(img, lab);
    REQUIRE(loaded.size() == 2);
    CHECK(testsup::bit_equal(loaded.features, fixture.features));
    CHECK(loaded.labels == fixture.labels);
}

TEST_CASE("IDX loader errors are structured and distinct") {
    auto dir = tmp_dir();
    const auto img = (dir / "bad-images").string();
    const auto lab = (dir / "bad-labels").string();

    Dataset two = synth_gaussian_mixture(2, 4, 1, 0.0, 1);
    write_idx(two, 2, 2, img, lab);

    SECTION("bad magic") {
        std::ofstream f(img, std::ios::binary);
        f.write("\x00\x00\x08\x04", 4);  // wrong type code
        f.close();
        CHECK_THROWS_WITH(load_idx(img, lab), Catch::Matchers::ContainsSubstring("magic"));
    }
    SECTION("count mismatch") {
        Dataset other = synth_gaussian_mixture(2, 4, 2, 0.0, 1);
        const auto lab4 = (dir / "four-labels").string();
        write_idx(other, 2, 2, (dir / "four-images").string(), lab4);
        CHECK_THROWS_WITH(load_idx(img, lab4), Catch::Matchers::ContainsSubstring("count"));
    }
    SECTION("truncated payload") {
        // chop the last pixel byte off
        auto bytes = std::filesystem::file_size(img);
        std::filesystem::resize_file(img, bytes - 1);
        CHECK_THROWS_WITH(load_idx(img, lab), Catch::Matchers::ContainsSubstring("truncated"));
    }
}

TEST_CASE("IDX limit takes a prefix") {
    auto dir = tmp_dir();
    const auto img = (dir / "lim-images").string();
    const auto lab = (dir / "lim-labels").string();
    Dataset ds = synth_gaussian_mixture(2, 4, 10, 0.0, 3);
    write_idx(ds, 2, 2, img, lab);
    Dataset loaded = load_idx(img, lab, 5);
    CHECK(loaded.size() == 5);
}

TEST_CASE("split is a disjoint shuffled partition, deterministic in seed") {
    Dataset ds = synth_gaussian_mixture(2, 4, 5, 0.1, 11);  // 10 examples
    auto [train, test] = split(ds, 0.5, 77);
    CHECK(train.size() == 5);
    CHECK(test.size() == 5);

    // union as multiset of rows equals the original
    auto row_key = [&](const Dataset& d, int64_t i) {
        std::string k;
        for (int64_t j = 0; j < d.dim(); ++j) k += std::to_string(d.features.at(i, j)) + ",";
        return k + "|" + std::to_string(d.labels[static_cast<size_t>(i)]);
    };
    std::multiset<std::string> orig, parts;
    for (int64_t i = 0; i < ds.size(); ++i) orig.insert(row_key(ds, i));
    for (int64_t i = 0; i < train.size(); ++i) parts.insert(row_key(train, i));
    for (int64_t i = 0; i < test.size(); ++i) parts.insert(row_key(test, i));
    CHECK(orig == parts);

    auto [train2, test2] = split(ds, 0.5, 77);
    CHECK(testsup::bit_equal(train.features, train2.features));
    CHECK(testsup::bit_equal(test.features, test2.features));

    CHECK_THROWS_AS(split(ds, 0.0, 1), ValueError);
    CHECK_THROWS_AS(split(ds, 1.0, 1), ValueError);
}
