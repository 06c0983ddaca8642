#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nnemd/matrix.hpp"

namespace nnemd {

struct Dataset {
    MatD X;                   // rows in [0, 1] after normalization
    std::vector<int> labels;  // integer class ids
    std::vector<std::uint64_t> ids;  // per-row entity ids (defaults to row index)

    std::size_t size() const { return static_cast<std::size_t>(X.rows()); }
    std::size_t features() const { return static_cast<std::size_t>(X.cols()); }
};

struct DatasetSpec {
    std::string format;  // "mnist-idx" | "csv"
    std::string images_path;
    std::string labels_path;
    std::string csv_path;
    std::string label_column;  // csv: name or 0-based index; default: last
    double normalize_divisor = 255.0;
    std::optional<std::pair<std::size_t, std::size_t>> sample_slice;   // [begin, end)
    std::optional<std::pair<std::size_t, std::size_t>> feature_slice;  // [begin, end)
};

/// Loads per spec, applying slices after normalization. MNIST images flatten
/// to length-784 rows; idx magic numbers are verified.
Dataset load_dataset(const DatasetSpec& spec);

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                       double normalize_divisor = 255.0);
Dataset load_csv(const std::string& path, const std::string& label_column = "");

/// Feature ranges assigning ceil-ish equal slices of n_features to k parts.
std::vector<std::pair<std::size_t, std::size_t>> split_features(std::size_t n_features,
                                                                std::size_t k);
/// Row ranges assigning contiguous near-equal sample blocks to k parts.
std::vector<std::pair<std::size_t, std::size_t>> split_samples(std::size_t n_samples,
                                                               std::size_t k);

}  // namespace nnemd
