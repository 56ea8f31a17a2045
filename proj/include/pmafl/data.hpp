#pragma once

// Dataset acquisition: a synthetic Gaussian-mixture generator for desk-scale
// runs and an IDX reader for MNIST-style files. Features always land in
// [0,1] so l-inf attack budgets mean the same thing everywhere.

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "pmafl/errors.hpp"
#include "pmafl/rng.hpp"
#include "pmafl/tensor.hpp"

namespace pmafl {

struct Dataset {
    Tensor features;          // [n x d], values in [0,1]
    std::vector<int> labels;  // in [0, num_classes)
    int num_classes = 0;

    int64_t size() const { return features.rank() == 2 ? features.dim(0) : 0; }
    int64_t dim() const { return features.rank() == 2 ? features.dim(1) : 0; }

    // Rows `idx` as a fresh [B x d] tensor plus matching labels.
    std::pair<Tensor, std::vector<int>> batch(const std::vector<int64_t>& idx) const {
        const int64_t d = dim();
        std::vector<double> out(idx.size() * static_cast<size_t>(d));
        std::vector<int> y(idx.size());
        for (size_t i = 0; i < idx.size(); ++i) {
            const size_t src = static_cast<size_t>(idx[i] * d);
            std::copy(features.data().begin() + src, features.data().begin() + src + d,
                      out.begin() + i * static_cast<size_t>(d));
            y[i] = labels[static_cast<size_t>(idx[i])];
        }
        return {Tensor::from({static_cast<int64_t>(idx.size()), d}, std::move(out)), std::move(y)};
    }
};

// Class means sit on the {0.2, 0.8}^d hypercube corners of a block pattern
// (coordinate j is hot for class j mod C), then isotropic Gaussian noise,
// clamped back into [0,1].
inline Dataset synth_gaussian_mixture(int num_classes, int64_t dim, int64_t n_per_class,
                                      double spread, uint64_t seed) {
    if (num_classes < 2) throw ValueError("synth: need at least 2 classes");
    if (dim < 1) throw ValueError("synth: need dim >= 1");
    Rng rng(seed);
    const int64_t n = static_cast<int64_t>(num_classes) * n_per_class;
    std::vector<double> feat(static_cast<size_t>(n * dim));
    std::vector<int> labels(static_cast<size_t>(n));
    size_t row = 0;
    for (int c = 0; c < num_classes; ++c) {
        for (int64_t k = 0; k < n_per_class; ++k, ++row) {
            labels[row] = c;
            for (int64_t j = 0; j < dim; ++j) {
                const double mean = (j % num_classes == c) ? 0.8 : 0.2;
                double v = mean + spread * normal_unit(rng);
                feat[row * static_cast<size_t>(dim) + static_cast<size_t>(j)] =
                    std::min(std::max(v, 0.0), 1.0);
            }
        }
    }
    Dataset ds;
    ds.features = Tensor::from({n, dim}, std::move(feat));
    ds.labels = std::move(labels);
    ds.num_classes = num_classes;
    return ds;
}

namespace detail {

inline uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw IoError("idx: truncated header in " + path);
    }
    return (static_cast<uint32_t>(b[0]) << 24) | (static_cast<uint32_t>(b[1]) << 16) |
           (static_cast<uint32_t>(b[2]) << 8) | static_cast<uint32_t>(b[3]);
}

inline void write_be32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<char*>(b), 4);
}

}  // namespace detail

constexpr uint32_t kIdxImagesMagic = 0x00000803;
constexpr uint32_t kIdxLabelsMagic = 0x00000801;

// IDX pair decode: images magic 0x803 (count, rows, cols, u8 pixels),
// labels magic 0x801 (count, u8 labels). Pixels map to [0,1] via /255.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                        int64_t limit = -1) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw IoError("idx: cannot open " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw IoError("idx: cannot open " + labels_path);

    const uint32_t img_magic = detail::read_be32(img, images_path);
    if (img_magic != kIdxImagesMagic) {
        throw IoError("idx: bad images magic in " + images_path + " (got " +
                      std::to_string(img_magic) + ")");
    }
    const uint32_t img_count = detail::read_be32(img, images_path);
    const uint32_t rows = detail::read_be32(img, images_path);
    const uint32_t cols = detail::read_be32(img, images_path);

    const uint32_t lab_magic = detail::read_be32(lab, labels_path);
    if (lab_magic != kIdxLabelsMagic) {
        throw IoError("idx: bad labels magic in " + labels_path + " (got " +
                      std::to_string(lab_magic) + ")");
    }
    const uint32_t lab_count = detail::read_be32(lab, labels_path);
    if (img_count != lab_count) {
        throw IoError("idx: image count " + std::to_string(img_count) + " != label count " +
                      std::to_string(lab_count));
    }

    int64_t n = static_cast<int64_t>(img_count);
    if (limit >= 0) n = std::min<int64_t>(n, limit);
    const int64_t d = static_cast<int64_t>(rows) * static_cast<int64_t>(cols);

    std::vector<unsigned char> pix(static_cast<size_t>(n * d));
    if (!img.read(reinterpret_cast<char*>(pix.data()), static_cast<std::streamsize>(pix.size()))) {
        throw IoError("idx: truncated pixel payload in " + images_path);
    }
    std::vector<unsigned char> lbl(static_cast<size_t>(n));
    if (!lab.read(reinterpret_cast<char*>(lbl.data()), static_cast<std::streamsize>(lbl.size()))) {
        throw IoError("idx: truncated label payload in " + labels_path);
    }

    std::vector<double> feat(pix.size());
    for (size_t i = 0; i < pix.size(); ++i) feat[i] = static_cast<double>(pix[i]) / 255.0;
    std::vector<int> labels(lbl.size());
    int max_label = 0;
    for (size_t i = 0; i < lbl.size(); ++i) {
        labels[i] = static_cast<int>(lbl[i]);
        max_label = std::max(max_label, labels[i]);
    }

    Dataset ds;
    ds.features = Tensor::from({n, d}, std::move(feat));
    ds.labels = std::move(labels);
    ds.num_classes = max_label + 1;
    return ds;
}

// Fixture/export writer; quantizes [0,1] features back to u8. Round-trips
// exactly for values that are multiples of 1/255.
inline void write_idx(const Dataset& ds, int64_t rows, int64_t cols,
                      const std::string& images_path, const std::string& labels_path) {
    if (rows * cols != ds.dim()) {
        throw ValueError("idx write: rows*cols " + std::to_string(rows * cols) +
                         " != feature dim " + std::to_string(ds.dim()));
    }
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw IoError("idx: cannot write " + images_path);
    detail::write_be32(img, kIdxImagesMagic);
    detail::write_be32(img, static_cast<uint32_t>(ds.size()));
    detail::write_be32(img, static_cast<uint32_t>(rows));
    detail::write_be32(img, static_cast<uint32_t>(cols));
    for (double v : ds.features.data()) {
        const double scaled = v * 255.0;
        const auto q = static_cast<unsigned char>(scaled + 0.5);
        img.put(static_cast<char>(q));
    }
    if (!img) throw IoError("idx: write failed for " + images_path);

    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw IoError("idx: cannot write " + labels_path);
    detail::write_be32(lab, kIdxLabelsMagic);
    detail::write_be32(lab, static_cast<uint32_t>(ds.size()));
    for (int y : ds.labels) lab.put(static_cast<char>(static_cast<unsigned char>(y)));
    if (!lab) throw IoError("idx: write failed for " + labels_path);
}

// Disjoint shuffled split; deterministic in seed.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ValueError("split: test_fraction must be in (0,1), got " +
                         std::to_string(test_fraction));
    }
    Rng rng(seed);
    std::vector<int64_t> idx(static_cast<size_t>(ds.size()));
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int64_t>(i);
    shuffle_inplace(idx, rng);

    const auto n_test = static_cast<size_t>(static_cast<double>(ds.size()) * test_fraction + 0.5);
    std::vector<int64_t> test_idx(idx.begin(), idx.begin() + static_cast<int64_t>(n_test));
    std::vector<int64_t> train_idx(idx.begin() + static_cast<int64_t>(n_test), idx.end());

    auto take = [&](const std::vector<int64_t>& rows) {
        auto [feat, lbl] = ds.batch(rows);
        Dataset out;
        out.features = std::move(feat);
        out.labels = std::move(lbl);
        out.num_classes = ds.num_classes;
        return out;
    };
    return {take(train_idx), take(test_idx)};
}

}  // namespace pmafl
