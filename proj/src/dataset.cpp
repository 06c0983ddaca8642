#include "nnemd/dataset.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "nnemd/errors.hpp"

namespace nnemd {

namespace {

std::uint32_t read_be32(std::ifstream& in, const std::string& path) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) throw IoError("idx: truncated header in " + path);
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    return out;
}

}  // namespace

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                       double normalize_divisor) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw IoError("idx: cannot open " + images_path);
    if (read_be32(img, images_path) != 0x00000803)
        throw IoError("idx: bad image magic in " + images_path);
    const std::uint32_t count = read_be32(img, images_path);
    const std::uint32_t rows = read_be32(img, images_path);
    const std::uint32_t cols = read_be32(img, images_path);
    const std::size_t dim = static_cast<std::size_t>(rows) * cols;

    std::vector<unsigned char> pixels(static_cast<std::size_t>(count) * dim);
    img.read(reinterpret_cast<char*>(pixels.data()),
             static_cast<std::streamsize>(pixels.size()));
    if (!img) throw IoError("idx: truncated image data in " + images_path);

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw IoError("idx: cannot open " + labels_path);
    if (read_be32(lab, labels_path) != 0x00000801)
        throw IoError("idx: bad label magic in " + labels_path);
    const std::uint32_t lcount = read_be32(lab, labels_path);
    if (lcount != count)
        throw IoError("idx: image/label count mismatch (" + std::to_string(count) + " vs " +
                      std::to_string(lcount) + ")");
    std::vector<unsigned char> raw_labels(lcount);
    lab.read(reinterpret_cast<char*>(raw_labels.data()), lcount);
    if (!lab) throw IoError("idx: truncated label data in " + labels_path);

    Dataset ds;
    ds.X.resize(count, static_cast<Eigen::Index>(dim));
    for (std::uint32_t i = 0; i < count; ++i)
        for (std::size_t j = 0; j < dim; ++j)
            ds.X(i, static_cast<Eigen::Index>(j)) =
                static_cast<double>(pixels[i * dim + j]) / normalize_divisor;
    ds.labels.assign(raw_labels.begin(), raw_labels.end());
    ds.ids.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) ds.ids[i] = i;
    return ds;
}

Dataset load_csv(const std::string& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) throw IoError("csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("csv: empty file " + path);
    const std::vector<std::string> header = split_line(line);

    std::size_t label_idx = header.size() - 1;
    if (!label_column.empty()) {
        auto it = std::find(header.begin(), header.end(), label_column);
        if (it != header.end()) {
            label_idx = static_cast<std::size_t>(it - header.begin());
        } else {
            try {
                label_idx = std::stoul(label_column);
            } catch (...) {
                throw ConfigError("csv: label column '" + label_column + "' not found");
            }
            if (label_idx >= header.size())
                throw ConfigError("csv: label column index out of range");
        }
    }

    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size())
            throw IoError("csv: ragged row in " + path);
        std::vector<double> row;
        row.reserve(cells.size() - 1);
        for (std::size_t j = 0; j < cells.size(); ++j) {
            if (j == label_idx)
                labels.push_back(std::stoi(cells[j]));
            else
                row.push_back(std::stod(cells[j]));
        }
        rows.push_back(std::move(row));
    }

    Dataset ds;
    ds.X.resize(static_cast<Eigen::Index>(rows.size()),
                rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    ds.labels = std::move(labels);
    ds.ids.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) ds.ids[i] = i;
    return ds;
}

Dataset load_dataset(const DatasetSpec& spec) {
    Dataset ds;
    if (spec.format == "mnist-idx")
        ds = load_mnist_idx(spec.images_path, spec.labels_path, spec.normalize_divisor);
    else if (spec.format == "csv")
        ds = load_csv(spec.csv_path, spec.label_column);
    else
        throw ConfigError("dataset: unknown format '" + spec.format + "'");

    if (spec.sample_slice) {
        auto [b, e] = *spec.sample_slice;
        if (b > e || e > ds.size()) throw ConfigError("dataset: sample slice out of bounds");
        ds.X = ds.X.middleRows(static_cast<Eigen::Index>(b),
                               static_cast<Eigen::Index>(e - b))
                   .eval();
        ds.labels = std::vector<int>(ds.labels.begin() + static_cast<std::ptrdiff_t>(b),
                                     ds.labels.begin() + static_cast<std::ptrdiff_t>(e));
        ds.ids = std::vector<std::uint64_t>(ds.ids.begin() + static_cast<std::ptrdiff_t>(b),
                                            ds.ids.begin() + static_cast<std::ptrdiff_t>(e));
    }
    if (spec.feature_slice) {
        auto [b, e] = *spec.feature_slice;
        if (b > e || e > ds.features()) throw ConfigError("dataset: feature slice out of bounds");
        ds.X = ds.X.middleCols(static_cast<Eigen::Index>(b),
                               static_cast<Eigen::Index>(e - b))
                   .eval();
    }
    return ds;
}

std::vector<std::pair<std::size_t, std::size_t>> split_features(std::size_t n_features,
                                                                std::size_t k) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    const std::size_t base = n_features / k, extra = n_features % k;
    std::size_t at = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t width = base + (i < extra ? 1 : 0);
        out.emplace_back(at, at + width);
        at += width;
    }
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> split_samples(std::size_t n_samples,
                                                               std::size_t k) {
    return split_features(n_samples, k);
}

}  // namespace nnemd
