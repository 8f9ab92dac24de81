#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "netobs/anonymize.hpp"
#include "netobs/node_id.hpp"

namespace netobs {

/// One anonymized flow observation.
struct FlowRecord {
    std::int64_t ts_us = 0;
    NodeId src;
    NodeId dst;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    std::uint64_t packets = 1;
    std::uint64_t bytes = 1;

    friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

/// Throws ParameterError unless packets >= 1 and bytes >= packets.
void validate(const FlowRecord& f);

inline constexpr std::string_view kFlowHeader = "ts_us,src,dst,sport,dport,pkts,bytes";
inline constexpr std::int64_t kDefaultSlackUs = 5'000'000;

struct FlowReadOptions {
    /// Required when the file carries raw addresses instead of hex ids.
    std::optional<std::string> salt;
    /// Records older than (latest timestamp - slack) are rejected.
    std::int64_t slack_us = kDefaultSlackUs;
};

struct FlowReadDiagnostics {
    std::size_t lines = 0;
    std::size_t accepted = 0;
    std::size_t rejected_out_of_order = 0;
    std::vector<std::string> messages;  // first few rejections, with line numbers
};

/// Streaming reader for the delimited flow format.
///
/// Malformed lines raise ParseError with the line number and field name;
/// late records are dropped and reported through diagnostics().
class FlowReader {
public:
    FlowReader(std::istream& in, FlowReadOptions opts);
    ~FlowReader();
    FlowReader(const FlowReader&) = delete;
    FlowReader& operator=(const FlowReader&) = delete;

    bool next(FlowRecord& out);
    const FlowReadDiagnostics& diagnostics() const noexcept { return diag_; }

private:
    std::istream& in_;
    FlowReadOptions opts_;
    std::unique_ptr<Anonymizer> anon_;
    FlowReadDiagnostics diag_;
    std::optional<std::int64_t> latest_;
    std::string line_;
    bool header_seen_ = false;
};

std::vector<FlowRecord> read_flow_file(const std::string& path, const FlowReadOptions& opts,
                                       FlowReadDiagnostics* diag = nullptr);

void write_flow_header(std::ostream& out);
/// Writes the post-anonymization form (16-hex ids).
void write_flow(std::ostream& out, const FlowRecord& f);

}  // namespace netobs
