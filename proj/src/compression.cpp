#include "netobs/compression.hpp"

namespace netobs {

CompressionStats compression_stats(const TrafficMatrix& m) {
    CompressionStats s;
    s.matrix_bytes = serialize(m).size();
    s.raw_bytes_estimate = m.raw_record_count() * kFlowRecordTextBytes;
    if (m.raw_record_count() == 0) {
        s.ratio = 1.0;
        return s;
    }
    s.ratio = static_cast<double>(s.raw_bytes_estimate) / static_cast<double>(s.matrix_bytes);
    return s;
}

}  // namespace netobs
