#include "netobs/traffic_matrix.hpp"

#include <absl/container/flat_hash_map.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "netobs/atomic_file.hpp"
#include "netobs/error.hpp"

namespace netobs {

namespace {

struct PairKey {
    std::uint64_t src;
    std::uint64_t dst;
    friend bool operator==(const PairKey&, const PairKey&) = default;
    template <typename H>
    friend H AbslHashValue(H h, const PairKey& k) {
        return H::combine(std::move(h), k.src, k.dst);
    }
};

bool key_less(const MatrixEntry& a, const MatrixEntry& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
}

bool same_key(const MatrixEntry& a, const MatrixEntry& b) {
    return a.src == b.src && a.dst == b.dst;
}

}  // namespace

// --- TrafficMatrix ----------------------------------------------------------

TrafficMatrix TrafficMatrix::empty_window(std::int64_t start_us, std::int64_t len_us) {
    if (len_us <= 0) throw ParameterError("window length must be positive");
    TrafficMatrix m;
    m.window_start_us_ = start_us;
    m.window_len_us_ = len_us;
    return m;
}

TrafficMatrix TrafficMatrix::from_entries(std::int64_t start_us, std::int64_t len_us,
                                          std::vector<MatrixEntry> entries,
                                          std::uint64_t raw_record_count) {
    TrafficMatrix m = empty_window(start_us, len_us);
    // one pass decides whether the input is already canonical
    bool canonical = true;
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].count == 0) throw ParameterError("matrix entries must have count > 0");
        total += entries[i].count;
        if (i > 0 && !key_less(entries[i - 1], entries[i])) canonical = false;
    }
    if (canonical) {
        if (raw_record_count < entries.size())
            throw ParameterError("raw_record_count smaller than entry count");
        m.total_packets_ = total;
        m.entries_ = std::move(entries);
        m.raw_record_count_ = raw_record_count;
        return m;
    }
    std::sort(entries.begin(), entries.end(), key_less);
    for (const auto& e : entries) {
        if (e.count == 0) throw ParameterError("matrix entries must have count > 0");
        if (!m.entries_.empty() && same_key(m.entries_.back(), e))
            m.entries_.back().count += e.count;
        else
            m.entries_.push_back(e);
        m.total_packets_ += e.count;
    }
    if (raw_record_count < m.entries_.size())
        throw ParameterError("raw_record_count smaller than entry count");
    m.raw_record_count_ = raw_record_count;
    return m;
}

std::uint64_t TrafficMatrix::at(NodeId src, NodeId dst) const {
    MatrixEntry probe{src, dst, 0};
    auto it = std::lower_bound(entries_.begin(), entries_.end(), probe, key_less);
    return (it != entries_.end() && same_key(*it, probe)) ? it->count : 0;
}

std::span<const MatrixEntry> TrafficMatrix::row(NodeId src) const {
    auto lo = std::lower_bound(entries_.begin(), entries_.end(), src,
                               [](const MatrixEntry& e, NodeId s) { return e.src < s; });
    auto hi = std::upper_bound(lo, entries_.end(), src,
                               [](NodeId s, const MatrixEntry& e) { return s < e.src; });
    return {lo, hi};
}

// --- MatrixBuilder ----------------------------------------------------------

struct MatrixBuilder::HashState {
    absl::flat_hash_map<PairKey, std::uint64_t> counts;
};

MatrixBuilder::MatrixBuilder(std::int64_t window_start_us, std::int64_t window_len_us)
    : start_(window_start_us), len_(window_len_us) {
    if (len_ <= 0) throw ParameterError("window length must be positive");
}

MatrixBuilder::~MatrixBuilder() = default;
MatrixBuilder::MatrixBuilder(MatrixBuilder&&) noexcept = default;
MatrixBuilder& MatrixBuilder::operator=(MatrixBuilder&&) noexcept = default;

void MatrixBuilder::spill() {
    hash_ = std::make_unique<HashState>();
    hash_->counts.reserve(sorted_.size() * 2 + 1024);
    for (const auto& e : sorted_) hash_->counts[{e.src.value(), e.dst.value()}] = e.count;
    sorted_.clear();
    sorted_.shrink_to_fit();
}

void MatrixBuilder::add(const FlowRecord& f, std::size_t index) {
    if (f.ts_us < start_ || f.ts_us >= start_ + len_)
        throw WindowError(index, "flow " + std::to_string(index) + " at ts_us " +
                                     std::to_string(f.ts_us) + " is outside window [" +
                                     std::to_string(start_) + ", " +
                                     std::to_string(start_ + len_) + ")");
    add(f.src, f.dst, f.packets, 1);
}

void MatrixBuilder::add(NodeId src, NodeId dst, std::uint64_t packets, std::uint64_t records) {
    if (packets == 0) throw ParameterError("packets must be >= 1");
    records_ += records;
    packets_ += packets;
    if (!hash_) {
        MatrixEntry e{src, dst, packets};
        if (sorted_.empty() || key_less(sorted_.back(), e)) {
            sorted_.push_back(e);
            return;
        }
        if (same_key(sorted_.back(), e)) {
            sorted_.back().count += packets;
            return;
        }
        spill();
    }
    hash_->counts[{src.value(), dst.value()}] += packets;
}

TrafficMatrix MatrixBuilder::finish() && {
    TrafficMatrix m;
    m.window_start_us_ = start_;
    m.window_len_us_ = len_;
    if (hash_) {
        m.entries_.reserve(hash_->counts.size());
        for (const auto& [k, c] : hash_->counts)
            m.entries_.push_back({NodeId{k.src}, NodeId{k.dst}, c});
        std::sort(m.entries_.begin(), m.entries_.end(), key_less);
        hash_.reset();
    } else {
        m.entries_ = std::move(sorted_);
    }
    m.total_packets_ = packets_;
    m.raw_record_count_ = records_;
    return m;
}

TrafficMatrix build_window(std::span<const FlowRecord> flows, std::int64_t window_start_us,
                           std::int64_t window_len_us) {
    MatrixBuilder b(window_start_us, window_len_us);
    for (std::size_t i = 0; i < flows.size(); ++i) b.add(flows[i], i);
    return std::move(b).finish();
}

// --- merge ------------------------------------------------------------------

TrafficMatrix merge(const TrafficMatrix& a, const TrafficMatrix& b) {
    if (!a.has_window()) return b;
    if (!b.has_window()) return a;

    TrafficMatrix out;
    const bool identical = a.window_start_us() == b.window_start_us() &&
                           a.window_len_us() == b.window_len_us();
    if (identical) {
        out.window_start_us_ = a.window_start_us();
        out.window_len_us_ = a.window_len_us();
    } else if (a.window_end_us() == b.window_start_us() ||
               b.window_end_us() == a.window_start_us()) {
        out.window_start_us_ = std::min(a.window_start_us(), b.window_start_us());
        out.window_len_us_ = a.window_len_us() + b.window_len_us();
    } else {
        throw MergeError("cannot merge windows [" + std::to_string(a.window_start_us()) + ", " +
                         std::to_string(a.window_end_us()) + ") and [" +
                         std::to_string(b.window_start_us()) + ", " +
                         std::to_string(b.window_end_us()) +
                         "): they must be identical or adjacent");
    }

    auto ea = a.entries();
    auto eb = b.entries();
    out.entries_.reserve(ea.size() + eb.size());
    std::size_t i = 0, j = 0;
    while (i < ea.size() && j < eb.size()) {
        if (same_key(ea[i], eb[j])) {
            out.entries_.push_back({ea[i].src, ea[i].dst, ea[i].count + eb[j].count});
            ++i;
            ++j;
        } else if (key_less(ea[i], eb[j])) {
            out.entries_.push_back(ea[i++]);
        } else {
            out.entries_.push_back(eb[j++]);
        }
    }
    out.entries_.insert(out.entries_.end(), ea.begin() + static_cast<std::ptrdiff_t>(i), ea.end());
    out.entries_.insert(out.entries_.end(), eb.begin() + static_cast<std::ptrdiff_t>(j), eb.end());
    out.total_packets_ = a.total_packets() + b.total_packets();
    out.raw_record_count_ = a.raw_record_count() + b.raw_record_count();
    return out;
}

// --- text format ------------------------------------------------------------

void write_matrix(std::ostream& out, const TrafficMatrix& m) {
    out << "#window " << m.window_start_us() << ' ' << m.window_len_us() << ' '
        << m.total_packets() << ' ' << m.raw_record_count() << '\n';
    for (const auto& e : m.entries())
        out << e.src.hex() << ' ' << e.dst.hex() << ' ' << e.count << '\n';
}

std::string serialize(const TrafficMatrix& m) {
    std::ostringstream os;
    write_matrix(os, m);
    return std::move(os).str();
}

namespace {

template <typename T>
T field(std::string_view tok, const char* what) {
    T v{};
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size() || tok.empty())
        throw ParseError(std::string("matrix file: bad ") + what + " '" + std::string(tok) + "'");
    return v;
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && s[i] == ' ') ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

}  // namespace

bool read_matrix(std::istream& in, TrafficMatrix& out) {
    std::string line;
    while (std::getline(in, line) && line.empty()) {
    }
    if (!in && line.empty()) return false;
    auto head = split_ws(line);
    if (head.size() != 5 || head[0] != "#window")
        throw ParseError("matrix file: expected '#window <start> <len> <total> <raw>', got '" +
                         line + "'");
    const auto start = field<std::int64_t>(head[1], "window start");
    const auto len = field<std::int64_t>(head[2], "window length");
    const auto total = field<std::uint64_t>(head[3], "total_packets");
    const auto raw = field<std::uint64_t>(head[4], "raw_records");
    if (len <= 0) throw ParseError("matrix file: window length must be positive");

    std::vector<MatrixEntry> entries;
    while (in.peek() != std::char_traits<char>::eof() && in.peek() != '#') {
        std::getline(in, line);
        if (line.empty()) continue;
        auto tok = split_ws(line);
        if (tok.size() != 3) throw ParseError("matrix file: bad entry line '" + line + "'");
        auto s = NodeId::from_hex(tok[0]);
        auto d = NodeId::from_hex(tok[1]);
        if (!s || !d) throw ParseError("matrix file: bad node id in '" + line + "'");
        const auto c = field<std::uint64_t>(tok[2], "count");
        if (c == 0) throw ParseError("matrix file: zero count in '" + line + "'");
        MatrixEntry e{*s, *d, c};
        if (!entries.empty() && !key_less(entries.back(), e))
            throw ParseError("matrix file: entries not strictly sorted at '" + line + "'");
        entries.push_back(e);
    }
    out = TrafficMatrix::from_entries(start, len, std::move(entries), raw);
    if (out.total_packets() != total)
        throw ParseError("matrix file: header total_packets " + std::to_string(total) +
                         " does not match entries (" + std::to_string(out.total_packets()) + ")");
    return true;
}

std::vector<TrafficMatrix> read_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open matrix file '" + path + "'");
    std::vector<TrafficMatrix> out;
    TrafficMatrix m;
    while (read_matrix(in, m)) out.push_back(std::move(m));
    return out;
}

void write_matrix_file(const std::string& path, std::span<const TrafficMatrix> windows) {
    write_file_atomic(path, [&](std::ostream& os) {
        for (const auto& m : windows) write_matrix(os, m);
    });
}

}  // namespace netobs
