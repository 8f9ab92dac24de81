#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "netobs/node_id.hpp"
#include "netobs/traffic_matrix.hpp"

namespace netobs {

enum class Direction { fan_out, fan_in };

std::string_view to_string(Direction d);
/// Accepts "fan_out" / "fan_in"; throws ParseError otherwise.
Direction parse_direction(std::string_view text);

/// Log2 degree bins: bin 0 is [1,1], bin k >= 1 is (2^(k-1), 2^k].
namespace bins {

/// Exclusive lower bound of bin k (0 for the first bin).
constexpr std::uint64_t lo(std::size_t k) { return k == 0 ? 0 : (std::uint64_t{1} << (k - 1)); }
/// Inclusive upper bound of bin k.
constexpr std::uint64_t hi(std::size_t k) { return std::uint64_t{1} << k; }
/// Bin index holding degree d (d >= 1).
std::size_t index_of(std::uint64_t d);
/// Bin index whose bounds are exactly (lo, hi]; throws BinningMismatchError.
std::size_t index_of_bounds(std::uint64_t lo, std::uint64_t hi);

inline constexpr std::size_t kMaxBins = 64;

}  // namespace bins

/// Per-window histogram of node degrees in log2 bins.
struct DegreeDistribution {
    Direction direction = Direction::fan_out;
    std::int64_t window_len_us = 0;
    std::uint64_t active_nodes = 0;
    /// counts[k] = nodes whose degree falls in bin k; trailing zero bins trimmed.
    std::vector<std::uint64_t> counts;

    std::uint64_t count(std::size_t k) const { return k < counts.size() ? counts[k] : 0; }
    std::size_t bin_count() const { return counts.size(); }

    /// Throws BinningMismatchError unless the bins sum to active_nodes.
    void validate() const;

    friend bool operator==(const DegreeDistribution&, const DegreeDistribution&) = default;
};

/// Distinct counterparts per node (destinations per source for fan_out).
struct NodeDegree {
    NodeId node;
    std::uint64_t degree;
};

/// Node degrees, sorted by node id.
std::vector<NodeDegree> node_degrees(const TrafficMatrix& m, Direction dir);

/// Degrees of the active nodes, unordered; cheaper than node_degrees when ids
/// are not needed.
std::vector<std::uint64_t> degree_values(const TrafficMatrix& m, Direction dir);

/// Histogram of a raw degree multiset (zeros ignored).
DegreeDistribution bin_degrees(std::span<const std::uint64_t> degrees, Direction dir,
                               std::int64_t window_len_us);

DegreeDistribution degree_distribution(const TrafficMatrix& m, Direction dir);

}  // namespace netobs
