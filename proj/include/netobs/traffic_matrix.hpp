#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "netobs/flow.hpp"
#include "netobs/node_id.hpp"

namespace netobs {

struct MatrixEntry {
    NodeId src;
    NodeId dst;
    std::uint64_t count = 0;

    friend bool operator==(const MatrixEntry&, const MatrixEntry&) = default;
};

/// Sparse source x destination packet-count matrix over one time window.
///
/// Entries are kept sorted by (src, dst) with strictly positive counts, which
/// makes rows contiguous and serialization bit-exact. Instances are immutable
/// once built; share them freely between readers.
///
/// A default-constructed matrix has no window at all and is the identity
/// element of merge().
class TrafficMatrix {
public:
    TrafficMatrix() = default;

    /// An empty matrix that covers [start, start + len).
    static TrafficMatrix empty_window(std::int64_t start_us, std::int64_t len_us);

    /// Builds from arbitrary-order entries; duplicates are summed. Throws
    /// ParameterError on zero counts, len <= 0, or raw_records < entry count.
    static TrafficMatrix from_entries(std::int64_t start_us, std::int64_t len_us,
                                      std::vector<MatrixEntry> entries,
                                      std::uint64_t raw_record_count);

    bool has_window() const noexcept { return window_len_us_ > 0; }
    std::int64_t window_start_us() const noexcept { return window_start_us_; }
    std::int64_t window_len_us() const noexcept { return window_len_us_; }
    std::int64_t window_end_us() const noexcept { return window_start_us_ + window_len_us_; }

    std::span<const MatrixEntry> entries() const noexcept { return entries_; }
    std::size_t nnz() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    std::uint64_t total_packets() const noexcept { return total_packets_; }
    std::uint64_t raw_record_count() const noexcept { return raw_record_count_; }

    /// Packet count for (src, dst); 0 when absent.
    std::uint64_t at(NodeId src, NodeId dst) const;
    /// Contiguous entries whose source is `src`.
    std::span<const MatrixEntry> row(NodeId src) const;

    friend bool operator==(const TrafficMatrix&, const TrafficMatrix&) = default;

private:
    friend class MatrixBuilder;
    friend TrafficMatrix merge(const TrafficMatrix&, const TrafficMatrix&);

    std::int64_t window_start_us_ = 0;
    std::int64_t window_len_us_ = 0;
    std::vector<MatrixEntry> entries_;
    std::uint64_t total_packets_ = 0;
    std::uint64_t raw_record_count_ = 0;
};

/// Single-writer accumulator for one window.
///
/// Input arriving in (src, dst) order is appended directly; the first
/// out-of-order key switches to a hash table that is sorted at finish().
class MatrixBuilder {
public:
    MatrixBuilder(std::int64_t window_start_us, std::int64_t window_len_us);
    ~MatrixBuilder();
    MatrixBuilder(MatrixBuilder&&) noexcept;
    MatrixBuilder& operator=(MatrixBuilder&&) noexcept;

    /// Throws WindowError(index) when the flow is outside the window.
    void add(const FlowRecord& f, std::size_t index = 0);
    /// Adds a pre-aggregated observation without a timestamp check.
    void add(NodeId src, NodeId dst, std::uint64_t packets, std::uint64_t records = 1);

    /// Capacity hint for in-order input.
    void reserve(std::size_t entries) { sorted_.reserve(entries); }
    std::uint64_t records() const noexcept { return records_; }
    TrafficMatrix finish() &&;

private:
    struct HashState;
    void spill();

    std::int64_t start_;
    std::int64_t len_;
    std::vector<MatrixEntry> sorted_;
    std::unique_ptr<HashState> hash_;
    std::uint64_t records_ = 0;
    std::uint64_t packets_ = 0;
};

/// Throws WindowError with the index of the first flow outside the window.
TrafficMatrix build_window(std::span<const FlowRecord> flows, std::int64_t window_start_us,
                           std::int64_t window_len_us);

/// Entrywise sum. Windows must be identical (sibling shards) or adjacent;
/// overlapping or gapped windows raise MergeError.
TrafficMatrix merge(const TrafficMatrix& a, const TrafficMatrix& b);

/// Matrix text format: '#window <start> <len> <total> <raw>' then 'src dst count'.
void write_matrix(std::ostream& out, const TrafficMatrix& m);
std::string serialize(const TrafficMatrix& m);
/// Reads one matrix block; returns false at clean end of input.
bool read_matrix(std::istream& in, TrafficMatrix& out);
/// Reads consecutive matrix blocks (a window series) from one file.
std::vector<TrafficMatrix> read_matrix_file(const std::string& path);
void write_matrix_file(const std::string& path, std::span<const TrafficMatrix> windows);

}  // namespace netobs
