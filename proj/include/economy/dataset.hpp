#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "economy/errors.hpp"

namespace economy {

using Label = int;

struct LabeledSeries {
    std::vector<double> values;
    Label label = 0;

    std::size_t length() const noexcept { return values.size(); }
};

// A collection of equal-length labeled series. Construction validates the
// shared length and finiteness; after that the object is treated as immutable.
class Dataset {
public:
    Dataset() = default;

    explicit Dataset(std::vector<LabeledSeries> series) : series_(std::move(series)) {
        if (series_.empty()) {
            return;
        }
        length_ = series_.front().length();
        if (length_ < 2) {
            throw DataError("series length must be at least 2");
        }
        for (std::size_t i = 0; i < series_.size(); ++i) {
            const auto& s = series_[i];
            if (s.length() != length_) {
                throw DataError("series " + std::to_string(i) + " has length " +
                                std::to_string(s.length()) + ", expected " +
                                std::to_string(length_));
            }
            for (double v : s.values) {
                if (!std::isfinite(v)) {
                    throw DataError("series " + std::to_string(i) + " contains a non-finite value");
                }
            }
        }
    }

    const std::vector<LabeledSeries>& series() const noexcept { return series_; }
    const LabeledSeries& operator[](std::size_t i) const { return series_[i]; }
    std::size_t size() const noexcept { return series_.size(); }
    bool empty() const noexcept { return series_.empty(); }
    std::size_t length() const noexcept { return length_; }

    std::set<Label> labels() const {
        std::set<Label> out;
        for (const auto& s : series_) {
            out.insert(s.label);
        }
        return out;
    }

    std::map<Label, std::size_t> class_counts() const {
        std::map<Label, std::size_t> out;
        for (const auto& s : series_) {
            ++out[s.label];
        }
        return out;
    }

    std::size_t count(Label y) const {
        return static_cast<std::size_t>(std::count_if(
            series_.begin(), series_.end(), [y](const LabeledSeries& s) { return s.label == y; }));
    }

    // Binary datasets only: both 0 and 1 present and nothing else.
    bool is_binary() const {
        const auto l = labels();
        return l == std::set<Label>{0, 1};
    }

    Dataset subset(std::span<const std::size_t> indices) const {
        std::vector<LabeledSeries> out;
        out.reserve(indices.size());
        for (auto i : indices) {
            out.push_back(series_.at(i));
        }
        return Dataset(std::move(out));
    }

    // Plain concatenation; used to merge a repository's train and test files.
    static Dataset concat(const Dataset& a, const Dataset& b) {
        if (a.empty()) return b;
        if (b.empty()) return a;
        std::vector<LabeledSeries> out = a.series_;
        out.insert(out.end(), b.series_.begin(), b.series_.end());
        return Dataset(std::move(out));
    }

private:
    std::vector<LabeledSeries> series_;
    std::size_t length_ = 0;
};

namespace detail {

inline bool parse_double(std::string_view tok, double& out) {
    if (!tok.empty() && tok.front() == '+') {
        tok.remove_prefix(1);
    }
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == ',' ||
                                   line[i] == '\r')) {
            ++i;
        }
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != ',' &&
               line[j] != '\r') {
            ++j;
        }
        if (j > i) {
            out.push_back(line.substr(i, j - i));
        }
        i = j;
    }
    return out;
}

} // namespace detail

// Parses UCR-style text: one series per line, label first, then T values,
// separated by tabs, spaces or commas. Blank lines are skipped. Labels may be
// written as floats ("1.0") as some archive files do.
inline Dataset parse_ucr(std::istream& in, const std::string& source = "<stream>") {
    std::vector<LabeledSeries> series;
    std::string line;
    std::size_t line_no = 0;
    std::size_t expected = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto tokens = detail::split_ws(line);
        if (tokens.empty()) {
            continue;
        }
        const auto where = source + ":" + std::to_string(line_no);
        if (tokens.size() < 3) {
            throw DataError(where + ": need a label and at least 2 values");
        }
        double label_value = 0.0;
        if (!detail::parse_double(tokens[0], label_value) ||
            label_value != std::floor(label_value)) {
            throw DataError(where + ": label '" + std::string(tokens[0]) + "' is not an integer");
        }
        LabeledSeries s;
        s.label = static_cast<Label>(label_value);
        s.values.reserve(tokens.size() - 1);
        for (std::size_t k = 1; k < tokens.size(); ++k) {
            double v = 0.0;
            if (!detail::parse_double(tokens[k], v)) {
                throw DataError(where + ": non-numeric token '" + std::string(tokens[k]) + "'");
            }
            if (!std::isfinite(v)) {
                throw DataError(where + ": non-finite value");
            }
            s.values.push_back(v);
        }
        if (expected == 0) {
            expected = s.values.size();
        } else if (s.values.size() != expected) {
            throw DataError(where + ": ragged line, " + std::to_string(s.values.size()) +
                            " values where " + std::to_string(expected) + " expected");
        }
        series.push_back(std::move(s));
    }
    if (series.empty()) {
        throw DataError(source + ": empty file");
    }
    return Dataset(std::move(series));
}

inline Dataset load_ucr_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path + "'");
    }
    return parse_ucr(in, path);
}

// Tab-separated, label first. Values use `precision` significant digits.
inline void write_ucr_tsv(const Dataset& d, std::ostream& out, int precision = 17) {
    out << std::setprecision(precision);
    for (const auto& s : d.series()) {
        out << s.label;
        for (double v : s.values) {
            out << '\t' << v;
        }
        out << '\n';
    }
}

inline void write_ucr_tsv(const Dataset& d, const std::string& path, int precision = 17) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path + "'");
    }
    write_ucr_tsv(d, out, precision);
}

// Majority class becomes 1, every other class 0. Equal counts go to the
// smallest class id.
inline Dataset binarize_majority(const Dataset& d) {
    const auto counts = d.class_counts();
    if (counts.size() < 2) {
        throw DataError("cannot binarize a single-class dataset");
    }
    Label majority = counts.begin()->first;
    std::size_t best = 0;
    for (const auto& [label, n] : counts) {  // ascending label order
        if (n > best) {
            best = n;
            majority = label;
        }
    }
    std::vector<LabeledSeries> out = d.series();
    for (auto& s : out) {
        s.label = s.label == majority ? 1 : 0;
    }
    return Dataset(std::move(out));
}

inline std::vector<double> truncate(const LabeledSeries& s, std::size_t t) {
    if (t < 1 || t > s.length()) {
        throw DataError("truncation length " + std::to_string(t) + " outside [1, " +
                        std::to_string(s.length()) + "]");
    }
    return {s.values.begin(), s.values.begin() + static_cast<std::ptrdiff_t>(t)};
}

inline std::span<const double> prefix_view(const LabeledSeries& s, std::size_t t) {
    if (t < 1 || t > s.length()) {
        throw DataError("truncation length " + std::to_string(t) + " outside [1, " +
                        std::to_string(s.length()) + "]");
    }
    return std::span<const double>(s.values).first(t);
}

// Strictly increasing truncation lengths ending at T.
class TimestampGrid {
public:
    TimestampGrid() = default;

    TimestampGrid(std::vector<std::size_t> timestamps, std::size_t T)
        : timestamps_(std::move(timestamps)), T_(T) {
        if (timestamps_.empty() || timestamps_.back() != T_) {
            throw DataError("timestamp grid must end at T");
        }
        for (std::size_t i = 0; i < timestamps_.size(); ++i) {
            if (timestamps_[i] < 1 || (i > 0 && timestamps_[i] <= timestamps_[i - 1])) {
                throw DataError("timestamp grid must be strictly increasing within [1, T]");
            }
        }
    }

    // round(j*T/steps) for j = 1..steps with steps = round(1/fraction),
    // rounding half up, clamped to [1, T] and deduplicated.
    static TimestampGrid fractional(std::size_t T, double fraction = 0.05) {
        if (T < 1) {
            throw DataError("series length must be positive");
        }
        if (!(fraction > 0.0) || fraction > 1.0) {
            throw DataError("grid fraction must lie in (0, 1]");
        }
        const auto steps = static_cast<std::size_t>(std::max(1L, std::lround(1.0 / fraction)));
        std::vector<std::size_t> ts;
        for (std::size_t j = 1; j <= steps; ++j) {
            std::size_t t = (2 * j * T + steps) / (2 * steps);
            t = std::clamp<std::size_t>(t, 1, T);
            if (ts.empty() || t > ts.back()) {
                ts.push_back(t);
            }
        }
        if (ts.back() != T) {
            ts.push_back(T);
        }
        return TimestampGrid(std::move(ts), T);
    }

    const std::vector<std::size_t>& timestamps() const noexcept { return timestamps_; }
    std::size_t size() const noexcept { return timestamps_.size(); }
    std::size_t operator[](std::size_t i) const { return timestamps_[i]; }
    std::size_t length() const noexcept { return T_; }
    std::size_t front() const { return timestamps_.front(); }
    std::size_t back() const { return timestamps_.back(); }

    // Position of timestamp t in the grid; throws if t is not on it.
    std::size_t index_of(std::size_t t) const {
        auto it = std::lower_bound(timestamps_.begin(), timestamps_.end(), t);
        if (it == timestamps_.end() || *it != t) {
            throw ModelError("timestamp " + std::to_string(t) + " is not on the grid");
        }
        return static_cast<std::size_t>(it - timestamps_.begin());
    }

    bool operator==(const TimestampGrid&) const = default;

private:
    std::vector<std::size_t> timestamps_;
    std::size_t T_ = 0;
};

struct SplitBundle {
    Dataset classifier_train;  // subset a
    Dataset meta_train;        // subset b
    Dataset k_tuning;          // subset c
    Dataset test;
    std::uint64_t seed = 0;
    // Row indices into the source dataset, ascending.
    std::vector<std::size_t> a_idx, b_idx, c_idx, test_idx;
};

namespace detail {

// Hamilton apportionment of `quota` across classes proportional to their size.
inline std::vector<std::size_t> apportion(std::size_t quota, const std::vector<std::size_t>& sizes,
                                          std::size_t total) {
    std::vector<std::size_t> out(sizes.size());
    std::vector<std::pair<std::size_t, std::size_t>> remainders;  // (remainder numerator, class)
    std::size_t used = 0;
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        const std::size_t num = quota * sizes[c];
        out[c] = num / total;
        used += out[c];
        remainders.emplace_back(num % total, c);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; used < quota; ++i, ++used) {
        ++out[remainders[i].second];
    }
    return out;
}

} // namespace detail

// Stratified 70/30 split, then 40/40/20 of the training part. Subset sizes
// are floor(n*28%), floor(n*28%), floor(n*14%); the remainder is the test set.
// Each size is apportioned across classes so every subset keeps every class.
inline SplitBundle make_splits(const Dataset& d, std::uint64_t seed) {
    if (d.size() < 10) {
        throw DataError("need at least 10 series to split, got " + std::to_string(d.size()));
    }
    const auto counts = d.class_counts();
    if (counts.size() < 2) {
        throw DataError("splitting needs both classes present");
    }
    std::vector<Label> classes;
    std::vector<std::size_t> sizes;
    for (const auto& [label, n] : counts) {
        classes.push_back(label);
        sizes.push_back(n);
    }
    const std::size_t n = d.size();
    const std::array<std::size_t, 3> quotas{n * 28 / 100, n * 28 / 100, n * 14 / 100};

    std::array<std::vector<std::size_t>, 3> alloc;
    for (std::size_t s = 0; s < 3; ++s) {
        alloc[s] = detail::apportion(quotas[s], sizes, n);
        for (std::size_t c = 0; c < classes.size(); ++c) {
            if (alloc[s][c] > 0) continue;
            auto donor = static_cast<std::size_t>(
                std::max_element(alloc[s].begin(), alloc[s].end()) - alloc[s].begin());
            if (alloc[s][donor] < 2) {
                throw DataError("dataset too small to give every subset one series per class");
            }
            --alloc[s][donor];
            ++alloc[s][c];
        }
    }
    for (std::size_t c = 0; c < classes.size(); ++c) {
        if (alloc[0][c] + alloc[1][c] + alloc[2][c] + 1 > sizes[c]) {
            throw DataError("class " + std::to_string(classes[c]) +
                            " too small to appear in every subset");
        }
    }

    std::mt19937_64 rng(seed);
    SplitBundle out;
    out.seed = seed;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < n; ++i) {
            if (d[i].label == classes[c]) idx.push_back(i);
        }
        std::shuffle(idx.begin(), idx.end(), rng);
        auto it = idx.begin();
        auto take = [&](std::vector<std::size_t>& dst, std::size_t k) {
            dst.insert(dst.end(), it, it + static_cast<std::ptrdiff_t>(k));
            it += static_cast<std::ptrdiff_t>(k);
        };
        take(out.a_idx, alloc[0][c]);
        take(out.b_idx, alloc[1][c]);
        take(out.c_idx, alloc[2][c]);
        out.test_idx.insert(out.test_idx.end(), it, idx.end());
    }
    for (auto* v : {&out.a_idx, &out.b_idx, &out.c_idx, &out.test_idx}) {
        std::sort(v->begin(), v->end());
    }
    out.classifier_train = d.subset(out.a_idx);
    out.meta_train = d.subset(out.b_idx);
    out.k_tuning = d.subset(out.c_idx);
    out.test = d.subset(out.test_idx);
    return out;
}

} // namespace economy
