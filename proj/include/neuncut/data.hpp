#pragma once

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "neuncut/error.hpp"
#include "neuncut/matrix.hpp"
#include "neuncut/rng.hpp"

// Synthetic dataset generators, CSV I/O and deterministic mini-batch
// sampling.
//
// CSV layout: one point per row, comma-separated decimal values, an optional
// single header line, and ground-truth labels stored as a trailing integer
// column named `label` when present. A file whose rows hold a single integer
// and no `label` header parses as a plain one-column matrix; callers that
// expect labels-only files read that column.

namespace neuncut {

struct DataMatrix {
    Matrix points;                          ///< n x d, all entries finite
    std::optional<std::vector<int>> labels; ///< ground truth in [0, k), length n

    std::size_t size() const { return points.rows(); }
    std::size_t dim() const { return points.cols(); }
};

namespace detail {

// Generators emit all of cluster 0 then all of cluster 1; a final seeded
// shuffle mixes them so that any prefix of the rows is a fair subsample.
inline void shuffle_rows(DataMatrix& data, Rng& rng) {
    const std::vector<std::size_t> perm = rng.permutation(data.size());
    Matrix shuffled(data.points.rows(), data.points.cols());
    std::vector<int> labels(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t c = 0; c < data.dim(); ++c) shuffled(i, c) = data.points(perm[i], c);
        labels[i] = (*data.labels)[perm[i]];
    }
    data.points = std::move(shuffled);
    data.labels = std::move(labels);
}

inline constexpr double kPi = 3.14159265358979323846;

} // namespace detail

/// Two concentric circles of n/2 points each, radii.first < radii.second,
/// plus isotropic Gaussian noise. Labels are the ring index.
inline DataMatrix gen_double_rings(std::size_t n, std::pair<double, double> radii,
                                   double noise, std::uint64_t seed) {
    if (n < 2 || n % 2 != 0)
        throw InvalidConfig("gen_double_rings: n must be even and >= 2");
    if (!(radii.first > 0.0) || !(radii.second > 0.0) || radii.first >= radii.second)
        throw InvalidConfig("gen_double_rings: need 0 < inner radius < outer radius");
    if (noise < 0.0) throw InvalidConfig("gen_double_rings: noise must be >= 0");

    Rng rng(seed);
    DataMatrix data;
    data.points = Matrix(n, 2);
    data.labels = std::vector<int>(n);
    const std::size_t half = n / 2;
    for (std::size_t i = 0; i < n; ++i) {
        const bool outer = i >= half;
        const double radius = outer ? radii.second : radii.first;
        const double angle = rng.uniform() * 2.0 * detail::kPi;
        data.points(i, 0) = radius * std::cos(angle) + noise * rng.normal();
        data.points(i, 1) = radius * std::sin(angle) + noise * rng.normal();
        (*data.labels)[i] = outer ? 1 : 0;
    }
    detail::shuffle_rows(data, rng);
    return data;
}

/// Two interlocking C-shaped arcs. Each arc spans 3*pi/2 radians of a circle
/// of the given radius (`scale`); the second arc is the first rotated by pi
/// and recentered at (scale, -scale/2), which leaves a clearance of roughly
/// 0.64 * scale between the arcs. Labels are the arc index.
inline DataMatrix gen_double_c(std::size_t n, double scale, double noise,
                               std::uint64_t seed) {
    if (n < 2 || n % 2 != 0) throw InvalidConfig("gen_double_c: n must be even and >= 2");
    if (!(scale > 0.0)) throw InvalidConfig("gen_double_c: scale must be positive");
    if (noise < 0.0) throw InvalidConfig("gen_double_c: noise must be >= 0");

    const double arc_span = 1.5 * detail::kPi;
    const double arc_start = -0.25 * detail::kPi;
    const double offset_x = scale;
    const double offset_y = -0.5 * scale;

    Rng rng(seed);
    DataMatrix data;
    data.points = Matrix(n, 2);
    data.labels = std::vector<int>(n);
    const std::size_t half = n / 2;
    for (std::size_t i = 0; i < n; ++i) {
        const bool second = i >= half;
        const double t = arc_start + rng.uniform() * arc_span;
        double x = scale * std::cos(t);
        double y = scale * std::sin(t);
        if (second) {
            x = offset_x - x;
            y = offset_y - y;
        }
        data.points(i, 0) = x + noise * rng.normal();
        data.points(i, 1) = y + noise * rng.normal();
        (*data.labels)[i] = second ? 1 : 0;
    }
    detail::shuffle_rows(data, rng);
    return data;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

inline bool parse_double(const std::string& text, double& out) {
    const char* begin = text.c_str();
    char* end = nullptr;
    errno = 0;
    out = std::strtod(begin, &end);
    if (end == begin || errno == ERANGE) return false;
    while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
    return *end == '\0';
}

inline std::string trim(const std::string& s) {
    std::size_t first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    std::size_t last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

/// Write a file atomically: stage the content next to the target and rename.
inline void atomic_write_text(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InvalidInput("cannot open for writing: " + tmp);
        out << content;
        if (!out) throw InvalidInput("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw InvalidInput("cannot rename temporary file onto: " + path);
    }
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

/// Parse a CSV data file. A non-numeric first line is treated as a header; a
/// trailing header column named `label` marks integer ground-truth labels.
inline DataMatrix load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open file: " + path);

    std::string line;
    std::size_t line_number = 0;
    bool has_label_column = false;
    std::size_t columns = 0;
    std::vector<double> values;
    std::vector<int> labels;
    std::size_t rows = 0;

    bool first_content_line = true;
    while (std::getline(in, line)) {
        ++line_number;
        const std::string trimmed = detail::trim(line);
        if (trimmed.empty()) continue;

        std::vector<std::string> fields = detail::split_csv_line(trimmed);
        if (first_content_line) {
            double probe;
            if (!detail::parse_double(detail::trim(fields[0]), probe)) {
                // header line; only the label marker matters
                has_label_column = detail::trim(fields.back()) == "label";
                columns = fields.size();
                first_content_line = false;
                continue;
            }
            columns = fields.size();
            first_content_line = false;
        }
        if (fields.size() != columns)
            throw ParseError("row has " + std::to_string(fields.size()) +
                                 " fields, expected " + std::to_string(columns),
                             line_number);

        const std::size_t feature_count = columns - (has_label_column ? 1 : 0);
        if (feature_count == 0) throw ParseError("row has no feature columns", line_number);
        for (std::size_t c = 0; c < feature_count; ++c) {
            double v;
            if (!detail::parse_double(detail::trim(fields[c]), v) || !std::isfinite(v))
                throw ParseError("cannot parse value '" + fields[c] + "'", line_number);
            values.push_back(v);
        }
        if (has_label_column) {
            const std::string text = detail::trim(fields.back());
            char* end = nullptr;
            const long v = std::strtol(text.c_str(), &end, 10);
            if (end == text.c_str() || *end != '\0')
                throw ParseError("cannot parse label '" + text + "'", line_number);
            labels.push_back(static_cast<int>(v));
        }
        ++rows;
    }
    if (rows == 0) throw ParseError("no data rows in " + path, line_number);

    DataMatrix data;
    const std::size_t dim = values.size() / rows;
    data.points = Matrix(rows, dim);
    data.points.data() = std::move(values);
    if (has_label_column) data.labels = std::move(labels);
    return data;
}

/// Write a DataMatrix as CSV with a header line. Values are printed with 17
/// significant digits so that save followed by load is bit-identical.
inline void save_csv(const DataMatrix& data, const std::string& path) {
    std::string out;
    out.reserve(data.size() * (data.dim() + 1) * 20);
    for (std::size_t c = 0; c < data.dim(); ++c) {
        if (c) out += ',';
        out += "x" + std::to_string(c);
    }
    if (data.labels) out += ",label";
    out += '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t c = 0; c < data.dim(); ++c) {
            if (c) out += ',';
            out += detail::format_double(data.points(i, c));
        }
        if (data.labels) {
            out += ',';
            out += std::to_string((*data.labels)[i]);
        }
        out += '\n';
    }
    detail::atomic_write_text(path, out);
}

/// Mini-batch index source. Each epoch is a fresh seeded permutation of
/// [0, n) cut into consecutive slices; the last slice may be short, and every
/// index appears exactly once per epoch.
class BatchSampler {
public:
    BatchSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed)
        : n_(n), batch_size_(batch_size), rng_(seed), cursor_(n) {
        if (n == 0) throw InvalidConfig("BatchSampler: empty dataset");
        if (batch_size == 0 || batch_size > n)
            throw InvalidConfig("BatchSampler: batch size must be in [1, n]");
    }

    std::size_t batches_per_epoch() const { return (n_ + batch_size_ - 1) / batch_size_; }
    bool epoch_exhausted() const { return cursor_ >= n_; }

    void begin_epoch() {
        order_ = rng_.permutation(n_);
        cursor_ = 0;
    }

    std::vector<std::size_t> next_indices() {
        if (epoch_exhausted()) throw InvalidInput("BatchSampler: epoch exhausted");
        const std::size_t end = std::min(cursor_ + batch_size_, n_);
        std::vector<std::size_t> out(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                     order_.begin() + static_cast<std::ptrdiff_t>(end));
        cursor_ = end;
        return out;
    }

private:
    std::size_t n_;
    std::size_t batch_size_;
    Rng rng_;
    std::vector<std::size_t> order_;
    std::size_t cursor_;
};

struct Batch {
    std::vector<std::size_t> indices;
    Matrix points;
};

inline Batch next_batch(BatchSampler& sampler, const DataMatrix& data) {
    Batch batch;
    batch.indices = sampler.next_indices();
    batch.points = Matrix(batch.indices.size(), data.dim());
    for (std::size_t r = 0; r < batch.indices.size(); ++r)
        for (std::size_t c = 0; c < data.dim(); ++c)
            batch.points(r, c) = data.points(batch.indices[r], c);
    return batch;
}

} // namespace neuncut
