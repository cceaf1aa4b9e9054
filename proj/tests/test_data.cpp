#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <set>

#include "neuncut/baseline.hpp"
#include "neuncut/data.hpp"
#include "neuncut/metrics.hpp"

using namespace neuncut;

namespace {
std::string temp_path(const std::string& name) { return "/tmp/neuncut_test_" + name; }
} // namespace

TEST_CASE("double rings: noiseless points sit exactly on their radii") {
    const DataMatrix d = gen_double_rings(40, {1.0, 3.0}, 0.0, 42);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double r = std::hypot(d.points(i, 0), d.points(i, 1));
        const double expected = (*d.labels)[i] == 0 ? 1.0 : 3.0;
        CHECK(r == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("double rings: deterministic and balanced") {
    const DataMatrix a = gen_double_rings(100, {1.0, 3.0}, 0.1, 9);
    const DataMatrix b = gen_double_rings(100, {1.0, 3.0}, 0.1, 9);
    CHECK(a.points == b.points);
    CHECK(*a.labels == *b.labels);
    int inner = 0;
    for (int l : *a.labels)
        if (l == 0) ++inner;
    CHECK(inner == 50);
}

TEST_CASE("double rings: bad parameters") {
    CHECK_THROWS_AS(gen_double_rings(41, {1.0, 3.0}, 0.1, 0), InvalidConfig);
    CHECK_THROWS_AS(gen_double_rings(40, {3.0, 1.0}, 0.1, 0), InvalidConfig);
    CHECK_THROWS_AS(gen_double_rings(40, {1.0, 1.0}, 0.1, 0), InvalidConfig);
    CHECK_THROWS_AS(gen_double_rings(40, {-1.0, 3.0}, 0.1, 0), InvalidConfig);
    CHECK_THROWS_AS(gen_double_rings(40, {1.0, 3.0}, -0.1, 0), InvalidConfig);
}

TEST_CASE("double rings: rings stay separated by more than 1 across seeds") {
    // radii (1, 3) with noise 0.1: the closest cross-ring pair stays far
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const DataMatrix d = gen_double_rings(1000, {1.0, 3.0}, 0.1, seed);
        double min_cross = 1e300;
        for (std::size_t i = 0; i < d.size(); ++i)
            for (std::size_t j = i + 1; j < d.size(); ++j) {
                if ((*d.labels)[i] == (*d.labels)[j]) continue;
                const double dx = d.points(i, 0) - d.points(j, 0);
                const double dy = d.points(i, 1) - d.points(j, 1);
                min_cross = std::min(min_cross, std::hypot(dx, dy));
            }
        CHECK(min_cross > 1.0);
    }
}

TEST_CASE("double C: noiseless points sit on circles around the two arc centers") {
    const double scale = 2.0;
    const DataMatrix d = gen_double_c(4, scale, 0.0, 5);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double cx = (*d.labels)[i] == 0 ? 0.0 : scale;
        const double cy = (*d.labels)[i] == 0 ? 0.0 : -0.5 * scale;
        const double r = std::hypot(d.points(i, 0) - cx, d.points(i, 1) - cy);
        CHECK(r == doctest::Approx(scale).epsilon(1e-12));
    }
}

TEST_CASE("double C: deterministic, and the arcs keep their clearance") {
    const DataMatrix a = gen_double_c(200, 2.0, 0.1, 3);
    const DataMatrix b = gen_double_c(200, 2.0, 0.1, 3);
    CHECK(a.points == b.points);

    // noiseless arcs stay at least ~0.6 * scale apart
    const DataMatrix clean = gen_double_c(2000, 2.0, 0.0, 3);
    double min_cross = 1e300;
    for (std::size_t i = 0; i < clean.size(); ++i)
        for (std::size_t j = i + 1; j < clean.size(); ++j) {
            if ((*clean.labels)[i] == (*clean.labels)[j]) continue;
            const double dx = clean.points(i, 0) - clean.points(j, 0);
            const double dy = clean.points(i, 1) - clean.points(j, 1);
            min_cross = std::min(min_cross, std::hypot(dx, dy));
        }
    CHECK(min_cross > 0.55 * 2.0);
}

TEST_CASE("double C: classical baseline solves the default geometry at n = 2000" *
          doctest::skip(false)) {
    const DataMatrix d = gen_double_c(2000, 2.0, 0.1, 7);
    const std::vector<int> labels = ncut_baseline(d.points, 2, 0.5, 0, 11);
    CHECK(accuracy(labels, *d.labels) >= 0.98);
}

TEST_CASE("csv: save then load is bit-identical") {
    DataMatrix d;
    d.points = Matrix(3, 2);
    d.points(0, 0) = 1.0 / 3.0;
    d.points(0, 1) = -2.7182818284590452;
    d.points(1, 0) = 1e-300;
    d.points(1, 1) = 12345.678901234567;
    d.points(2, 0) = -0.0;
    d.points(2, 1) = 3.0;
    d.labels = std::vector<int>{0, 1, 1};
    const std::string path = temp_path("roundtrip.csv");
    save_csv(d, path);
    const DataMatrix back = load_csv(path);
    CHECK(back.points == d.points);
    REQUIRE(back.labels.has_value());
    CHECK(*back.labels == *d.labels);
    std::remove(path.c_str());
}

TEST_CASE("csv: ragged row reports its line number") {
    const std::string path = temp_path("ragged.csv");
    detail::atomic_write_text(path, "1.0,2.0\n3.0,4.0\n5.0\n");
    try {
        load_csv(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 3);
    }
    std::remove(path.c_str());
}

TEST_CASE("csv: header is auto-detected and skipped") {
    const std::string path = temp_path("header.csv");
    detail::atomic_write_text(path, "x0,x1\n1.0,2.0\n3.0,4.0\n");
    const DataMatrix d = load_csv(path);
    CHECK(d.size() == 2);
    CHECK(d.dim() == 2);
    CHECK_FALSE(d.labels.has_value());

    detail::atomic_write_text(path, "1.0,2.0\n3.0,4.0\n");
    const DataMatrix no_header = load_csv(path);
    CHECK(no_header.points == d.points);
    std::remove(path.c_str());
}

TEST_CASE("csv: missing file and labels-only files") {
    CHECK_THROWS_AS(load_csv("/nonexistent/nowhere.csv"), InvalidInput);
    const std::string path = temp_path("labels_only.txt");
    detail::atomic_write_text(path, "0\n1\n1\n0\n");
    const DataMatrix d = load_csv(path);
    CHECK(d.size() == 4);
    CHECK(d.dim() == 1);
    std::remove(path.c_str());
}

TEST_CASE("batch sampler: epoch coverage") {
    DataMatrix d;
    d.points = Matrix(4, 1);
    BatchSampler sampler(4, 2, 0);
    CHECK(sampler.batches_per_epoch() == 2);
    sampler.begin_epoch();
    const Batch first = next_batch(sampler, d);
    const Batch second = next_batch(sampler, d);
    CHECK(first.indices.size() == 2);
    CHECK(second.indices.size() == 2);
    std::set<std::size_t> seen(first.indices.begin(), first.indices.end());
    seen.insert(second.indices.begin(), second.indices.end());
    CHECK(seen == std::set<std::size_t>{0, 1, 2, 3});
    CHECK(sampler.epoch_exhausted());
    CHECK_THROWS_AS(sampler.next_indices(), InvalidInput);
}

TEST_CASE("batch sampler: full batch and determinism") {
    BatchSampler a(7, 7, 5);
    a.begin_epoch();
    CHECK(a.next_indices().size() == 7);

    BatchSampler b(20, 6, 123), c(20, 6, 123);
    for (int epoch = 0; epoch < 3; ++epoch) {
        b.begin_epoch();
        c.begin_epoch();
        while (!b.epoch_exhausted()) CHECK(b.next_indices() == c.next_indices());
    }
}

TEST_CASE("batch sampler: property - every epoch is a disjoint cover") {
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(40);
        const std::size_t m = 1 + rng.uniform_index(n);
        BatchSampler sampler(n, m, trial);
        for (int epoch = 0; epoch < 2; ++epoch) {
            sampler.begin_epoch();
            std::set<std::size_t> seen;
            std::size_t total = 0;
            while (!sampler.epoch_exhausted()) {
                for (std::size_t idx : sampler.next_indices()) {
                    CHECK(seen.insert(idx).second);  // pairwise disjoint
                    ++total;
                }
            }
            CHECK(total == n);
        }
    }
}
