#include "netobs/flow.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "netobs/error.hpp"

namespace netobs {

void validate(const FlowRecord& f) {
    if (f.packets < 1) throw ParameterError("flow: packets must be >= 1");
    if (f.bytes < f.packets) throw ParameterError("flow: bytes must be >= packets");
}

namespace {

constexpr std::array<const char*, 7> kFieldNames = {"ts_us", "src", "dst", "sport", "dport",
                                                    "pkts", "bytes"};

[[noreturn]] void fail(std::size_t line, std::size_t field, std::string_view text,
                       std::string_view why) {
    throw ParseError("flow line " + std::to_string(line) + ": field " + kFieldNames[field] +
                     " " + std::string(why) + ": '" + std::string(text) + "'");
}

template <typename T>
T parse_number(std::string_view text, std::size_t line, std::size_t field) {
    T v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        fail(line, field, text, "is not a valid number");
    return v;
}

}  // namespace

FlowReader::FlowReader(std::istream& in, FlowReadOptions opts)
    : in_(in), opts_(std::move(opts)) {
    if (opts_.salt) anon_ = std::make_unique<Anonymizer>(*opts_.salt);
}

FlowReader::~FlowReader() = default;

bool FlowReader::next(FlowRecord& out) {
    while (std::getline(in_, line_)) {
        ++diag_.lines;
        if (!line_.empty() && line_.back() == '\r') line_.pop_back();
        if (line_.empty()) continue;
        if (!header_seen_) {
            if (line_.front() == '#') continue;  // provenance lines
            if (line_ != kFlowHeader)
                throw ParseError("flow file: expected header '" + std::string(kFlowHeader) +
                                 "', got '" + line_ + "'");
            header_seen_ = true;
            continue;
        }

        std::array<std::string_view, 7> fields;
        std::string_view rest = line_;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            auto comma = rest.find(',');
            if (i + 1 < fields.size()) {
                if (comma == std::string_view::npos)
                    throw ParseError("flow line " + std::to_string(diag_.lines) +
                                     ": expected 7 fields, missing " + kFieldNames[i + 1]);
                fields[i] = rest.substr(0, comma);
                rest.remove_prefix(comma + 1);
            } else {
                if (comma != std::string_view::npos)
                    throw ParseError("flow line " + std::to_string(diag_.lines) +
                                     ": more than 7 fields");
                fields[i] = rest;
            }
        }

        const std::size_t ln = diag_.lines;
        FlowRecord f;
        f.ts_us = parse_number<std::int64_t>(fields[0], ln, 0);
        for (std::size_t k : {1u, 2u}) {
            NodeId id;
            if (auto hex = NodeId::from_hex(fields[k])) {
                id = *hex;
            } else if (anon_) {
                try {
                    id = (*anon_)(fields[k]);
                } catch (const ParseError&) {
                    fail(ln, k, fields[k], "is not an address or 16-hex id");
                }
            } else {
                fail(ln, k, fields[k], "is a raw address but no salt was supplied");
            }
            (k == 1 ? f.src : f.dst) = id;
        }
        auto sport = parse_number<std::uint32_t>(fields[3], ln, 3);
        auto dport = parse_number<std::uint32_t>(fields[4], ln, 4);
        if (sport > 65535) fail(ln, 3, fields[3], "is out of range 0-65535");
        if (dport > 65535) fail(ln, 4, fields[4], "is out of range 0-65535");
        f.src_port = static_cast<std::uint16_t>(sport);
        f.dst_port = static_cast<std::uint16_t>(dport);
        f.packets = parse_number<std::uint64_t>(fields[5], ln, 5);
        f.bytes = parse_number<std::uint64_t>(fields[6], ln, 6);
        if (f.packets < 1) fail(ln, 5, fields[5], "must be >= 1");
        if (f.bytes < f.packets) fail(ln, 6, fields[6], "must be >= pkts");

        if (latest_ && f.ts_us < *latest_ - opts_.slack_us) {
            ++diag_.rejected_out_of_order;
            if (diag_.messages.size() < 20)
                diag_.messages.push_back("line " + std::to_string(ln) + ": ts_us " +
                                         std::to_string(f.ts_us) + " is " +
                                         std::to_string(*latest_ - f.ts_us) +
                                         " us behind the stream (slack " +
                                         std::to_string(opts_.slack_us) + ")");
            continue;
        }
        if (!latest_ || f.ts_us > *latest_) latest_ = f.ts_us;
        ++diag_.accepted;
        out = f;
        return true;
    }
    return false;
}

std::vector<FlowRecord> read_flow_file(const std::string& path, const FlowReadOptions& opts,
                                       FlowReadDiagnostics* diag) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open flow file '" + path + "'");
    FlowReader reader(in, opts);
    std::vector<FlowRecord> flows;
    FlowRecord f;
    while (reader.next(f)) flows.push_back(f);
    if (diag) *diag = reader.diagnostics();
    return flows;
}

void write_flow_header(std::ostream& out) { out << kFlowHeader << '\n'; }

void write_flow(std::ostream& out, const FlowRecord& f) {
    out << f.ts_us << ',' << f.src.hex() << ',' << f.dst.hex() << ',' << f.src_port << ','
        << f.dst_port << ',' << f.packets << ',' << f.bytes << '\n';
}

}  // namespace netobs
