#pragma once

#include <cstdint>

#include "netobs/traffic_matrix.hpp"

namespace netobs {

/// Nominal serialized size of one post-anonymization flow line: 16-digit
/// timestamp, two 16-hex ids, two 5-digit ports, typical counts, separators.
inline constexpr std::uint64_t kFlowRecordTextBytes = 68;

struct CompressionStats {
    std::uint64_t matrix_bytes = 0;
    std::uint64_t raw_bytes_estimate = 0;
    double ratio = 1.0;  // raw / matrix; 1 for an empty matrix
};

CompressionStats compression_stats(const TrafficMatrix& m);

}  // namespace netobs
