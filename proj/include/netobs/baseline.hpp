#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "netobs/degree.hpp"

namespace netobs {

struct BinStats {
    double mean = 0.0;
    double var = 0.0;

    friend bool operator==(const BinStats&, const BinStats&) = default;
};

/// Per-bin mean and unbiased variance of bin counts over training windows.
struct VarianceBaseline {
    Direction direction = Direction::fan_out;
    std::vector<BinStats> bins;
    std::uint64_t training_window_count = 0;
    std::int64_t window_len_us = 0;

    /// Zero stats beyond the trained bins.
    BinStats at(std::size_t k) const { return k < bins.size() ? bins[k] : BinStats{}; }

    friend bool operator==(const VarianceBaseline&, const VarianceBaseline&) = default;
};

/// Requires >= 2 windows sharing direction and window length.
VarianceBaseline train_variance_baseline(std::span<const DegreeDistribution> windows);

/// '#baseline direction=<d> windows=<n> window_len_us=<l>' then 'bin_lo bin_hi mean var'.
void write_baseline(std::ostream& out, const VarianceBaseline& b);
VarianceBaseline read_baseline(std::istream& in);
void write_baseline_file(const std::string& path, const VarianceBaseline& b);
VarianceBaseline read_baseline_file(const std::string& path);

}  // namespace netobs
