#include "netobs/degree.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "netobs/error.hpp"

namespace netobs {

std::string_view to_string(Direction d) { return d == Direction::fan_out ? "fan_out" : "fan_in"; }

Direction parse_direction(std::string_view text) {
    if (text == "fan_out") return Direction::fan_out;
    if (text == "fan_in") return Direction::fan_in;
    throw ParseError("unknown direction '" + std::string(text) + "' (expected fan_out|fan_in)");
}

std::size_t bins::index_of(std::uint64_t d) {
    if (d <= 1) return 0;
    return static_cast<std::size_t>(std::bit_width(d - 1));
}

std::size_t bins::index_of_bounds(std::uint64_t lo_bound, std::uint64_t hi_bound) {
    if (hi_bound == 0 || !std::has_single_bit(hi_bound))
        throw BinningMismatchError("bin (" + std::to_string(lo_bound) + "," +
                                   std::to_string(hi_bound) + "] is not a log2 bin");
    const auto k = static_cast<std::size_t>(std::countr_zero(hi_bound));
    if (lo(k) != lo_bound)
        throw BinningMismatchError("bin (" + std::to_string(lo_bound) + "," +
                                   std::to_string(hi_bound) + "] is not a log2 bin");
    return k;
}

void DegreeDistribution::validate() const {
    if (counts.size() > bins::kMaxBins)
        throw BinningMismatchError("degree distribution has more than 64 bins");
    std::uint64_t sum = 0;
    for (auto c : counts) sum += c;
    if (sum != active_nodes)
        throw BinningMismatchError("bin counts sum to " + std::to_string(sum) +
                                   " but active_nodes is " + std::to_string(active_nodes));
}

namespace {

/// Open-addressing counter keyed by NodeId. Ids are keyed-hash outputs, so a
/// multiplicative hash of the value spreads them well; a zero count marks an
/// empty slot.
class FanInTable {
public:
    explicit FanInTable(std::size_t expected) { resize(std::bit_ceil(std::max<std::size_t>(16, 2 * expected))); }

    void prefetch(NodeId id) const { __builtin_prefetch(&slots_[slot(id)]); }

    void increment(NodeId id) {
        std::size_t i = slot(id);
        while (slots_[i].count != 0 && slots_[i].id != id) i = (i + 1) & mask_;
        if (slots_[i].count == 0) {
            if (2 * (used_ + 1) > slots_.size()) {
                grow();
                increment(id);
                return;
            }
            slots_[i].id = id;
            ++used_;
        }
        ++slots_[i].count;
    }

    template <typename Fn>
    void for_each(Fn&& fn) const {
        for (const auto& s : slots_)
            if (s.count != 0) fn(s.id, s.count);
    }

private:
    struct Slot {
        NodeId id;
        std::uint64_t count = 0;
    };
    std::vector<Slot> slots_;
    std::size_t mask_ = 0, used_ = 0;
    int shift_ = 0;

    std::size_t slot(NodeId id) const {
        return static_cast<std::size_t>((id.value() * 0x9e3779b97f4a7c15ULL) >> shift_);
    }
    void resize(std::size_t cap) {
        slots_.assign(cap, Slot{});
        mask_ = cap - 1;
        shift_ = 64 - std::countr_zero(cap);
        used_ = 0;
    }
    void grow() {
        auto old = std::move(slots_);
        resize(2 * old.size());
        for (const auto& s : old)
            if (s.count != 0) {
                std::size_t j = slot(s.id);
                while (slots_[j].count != 0) j = (j + 1) & mask_;
                slots_[j] = s;
                ++used_;
            }
    }
};

/// Calls fn(node, degree) once per active node; order unspecified for fan_in.
template <typename Fn>
void for_each_degree(const TrafficMatrix& m, Direction dir, Fn&& fn) {
    auto entries = m.entries();
    if (dir == Direction::fan_out) {
        // entries are src-major, so each row is a run
        for (std::size_t i = 0; i < entries.size();) {
            std::size_t j = i;
            while (j < entries.size() && entries[j].src == entries[i].src) ++j;
            fn(entries[i].src, static_cast<std::uint64_t>(j - i));
            i = j;
        }
        return;
    }
    FanInTable fan_in(entries.size() / 8 + 16);
    // hide the random-access latency by touching slots a few entries ahead
    constexpr std::size_t kAhead = 16;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i + kAhead < entries.size()) fan_in.prefetch(entries[i + kAhead].dst);
        fan_in.increment(entries[i].dst);
    }
    fan_in.for_each(fn);
}

}  // namespace

std::vector<NodeDegree> node_degrees(const TrafficMatrix& m, Direction dir) {
    std::vector<NodeDegree> out;
    for_each_degree(m, dir, [&](NodeId n, std::uint64_t d) { out.push_back({n, d}); });
    if (dir == Direction::fan_in)
        std::sort(out.begin(), out.end(),
                  [](const NodeDegree& a, const NodeDegree& b) { return a.node < b.node; });
    return out;
}

std::vector<std::uint64_t> degree_values(const TrafficMatrix& m, Direction dir) {
    std::vector<std::uint64_t> out;
    for_each_degree(m, dir, [&](NodeId, std::uint64_t d) { out.push_back(d); });
    return out;
}

DegreeDistribution bin_degrees(std::span<const std::uint64_t> degrees, Direction dir,
                               std::int64_t window_len_us) {
    DegreeDistribution dist;
    dist.direction = dir;
    dist.window_len_us = window_len_us;
    for (auto d : degrees) {
        if (d == 0) continue;
        const auto k = bins::index_of(d);
        if (dist.counts.size() <= k) dist.counts.resize(k + 1, 0);
        ++dist.counts[k];
        ++dist.active_nodes;
    }
    return dist;
}

DegreeDistribution degree_distribution(const TrafficMatrix& m, Direction dir) {
    DegreeDistribution dist;
    dist.direction = dir;
    dist.window_len_us = m.window_len_us();
    for_each_degree(m, dir, [&](NodeId, std::uint64_t d) {
        const auto k = bins::index_of(d);
        if (dist.counts.size() <= k) dist.counts.resize(k + 1, 0);
        ++dist.counts[k];
        ++dist.active_nodes;
    });
    return dist;
}

}  // namespace netobs
