#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"

#include "eveopt/dataset.hpp"

using namespace eveopt;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

} // namespace

TEST_CASE("synth_dataset: bit-identical for identical (spec, seed)") {
    DatasetSpec spec;
    spec.n = 100;
    spec.dim = 3;
    spec.classes = 4;
    const Dataset a = synth_dataset(spec, 42);
    const Dataset b = synth_dataset(spec, 42);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);
    CHECK(a.train_idx == b.train_idx);
    CHECK(a.val_idx == b.val_idx);

    const Dataset c = synth_dataset(spec, 43);
    CHECK(a.features != c.features);
}

TEST_CASE("synth_dataset: blobs have the requested shape and all classes") {
    DatasetSpec spec;
    spec.n = 60;
    spec.dim = 5;
    spec.classes = 3;
    const Dataset ds = synth_dataset(spec, 7);
    CHECK(ds.n == 60);
    CHECK(ds.dim == 5);
    CHECK(ds.features.size() == 300);
    CHECK(ds.labels.size() == 60);
    CHECK(ds.num_classes() == 3);
    std::set<int> seen(ds.labels.begin(), ds.labels.end());
    CHECK(seen == std::set<int>{0, 1, 2});
    CHECK(ds.seed == 7);
}

TEST_CASE("synth_dataset: two-arcs is binary and two-dimensional") {
    DatasetSpec spec;
    spec.kind = DatasetSpec::Kind::TwoArcs;
    spec.n = 80;
    spec.dim = 2;
    const Dataset ds = synth_dataset(spec, 11);
    CHECK(ds.dim == 2);
    CHECK(ds.num_classes() == 2);
    for (int label : ds.labels) {
        CHECK((label == 0 || label == 1));
    }

    DatasetSpec bad = spec;
    bad.dim = 3;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("DatasetSpec validation") {
    DatasetSpec spec;
    CHECK_NOTHROW(spec.validate());
    DatasetSpec bad = spec;
    bad.n = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = spec;
    bad.dim = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = spec;
    bad.classes = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = spec;
    bad.noise = -0.1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = spec;
    bad.train_frac = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("split: disjoint, covering, train-prefix layout") {
    DatasetSpec spec;
    spec.n = 50;
    spec.train_frac = 0.8;
    const Dataset ds = synth_dataset(spec, 3);
    CHECK(ds.train_idx.size() + ds.val_idx.size() == 50);
    std::set<int> all(ds.train_idx.begin(), ds.train_idx.end());
    for (int i : ds.val_idx) {
        CHECK(all.count(i) == 0);
        all.insert(i);
    }
    CHECK(all.size() == 50);
    // training rows come first so a prefix split reproduces the generated one
    const int n_train = static_cast<int>(ds.train_idx.size());
    for (int i = 0; i < n_train; ++i) CHECK(ds.train_idx[i] == i);
    for (std::size_t i = 0; i < ds.val_idx.size(); ++i) {
        CHECK(ds.val_idx[i] == n_train + static_cast<int>(i));
    }
}

TEST_CASE("CSV round trip preserves features, labels and split") {
    DatasetSpec spec;
    spec.n = 40;
    spec.dim = 4;
    spec.classes = 2;
    const Dataset ds = synth_dataset(spec, 99);
    const auto path = temp_file("eveopt_test_dataset.csv");
    export_dataset_csv(ds, path);
    const Dataset back = import_dataset_csv(path, spec.train_frac);
    CHECK(back.n == ds.n);
    CHECK(back.dim == ds.dim);
    CHECK(back.features == ds.features); // %.17g is lossless for doubles
    CHECK(back.labels == ds.labels);
    CHECK(back.train_idx == ds.train_idx);
    CHECK(back.val_idx == ds.val_idx);
    std::filesystem::remove(path);
}

TEST_CASE("CSV import: label sits in the last column") {
    const auto path = temp_file("eveopt_test_dataset_manual.csv");
    {
        std::ofstream out(path);
        out << "0.5,-1.25,1\n2.0,3.5,0\n-0.75,0.25,1\n1.0,1.0,0\n";
    }
    const Dataset ds = import_dataset_csv(path, 0.5);
    CHECK(ds.n == 4);
    CHECK(ds.dim == 2);
    CHECK(ds.labels == std::vector<int>{1, 0, 1, 0});
    CHECK(ds.features[0] == 0.5);
    CHECK(ds.features[3] == 3.5);
    CHECK(ds.train_idx.size() == 2);
    CHECK(ds.val_idx.size() == 2);
    std::filesystem::remove(path);
}

TEST_CASE("CSV import: ragged rows are rejected") {
    const auto path = temp_file("eveopt_test_dataset_ragged.csv");
    {
        std::ofstream out(path);
        out << "0.5,1.5,1\n2.0,0\n";
    }
    CHECK_THROWS_AS((void)import_dataset_csv(path, 0.8), IoError);
    std::filesystem::remove(path);
}

TEST_CASE("CSV import: missing file is an I/O error") {
    CHECK_THROWS_AS((void)import_dataset_csv("/nonexistent/nowhere.csv", 0.8),
                    IoError);
}

TEST_CASE("noise parameter moves points; zero noise collapses blobs") {
    DatasetSpec spec;
    spec.n = 20;
    spec.dim = 2;
    spec.classes = 2;
    spec.noise = 0.0;
    const Dataset ds = synth_dataset(spec, 5);
    // with zero jitter every point of a class sits exactly on its center
    for (int i = 0; i < ds.n; ++i) {
        for (int j = i + 1; j < ds.n; ++j) {
            if (ds.labels[i] == ds.labels[j]) {
                CHECK(ds.row(i)[0] == ds.row(j)[0]);
                CHECK(ds.row(i)[1] == ds.row(j)[1]);
            }
        }
    }
}
