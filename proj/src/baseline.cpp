#include "netobs/baseline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "netobs/atomic_file.hpp"
#include "netobs/error.hpp"

namespace netobs {

VarianceBaseline train_variance_baseline(std::span<const DegreeDistribution> windows) {
    if (windows.size() < 2)
        throw InsufficientDataError("variance baseline needs at least 2 training windows, got " +
                                    std::to_string(windows.size()));
    VarianceBaseline b;
    b.direction = windows.front().direction;
    b.window_len_us = windows.front().window_len_us;
    b.training_window_count = windows.size();
    std::size_t nb = 0;
    for (const auto& w : windows) {
        w.validate();
        if (w.window_len_us != b.window_len_us)
            throw ParameterError("variance baseline: mixed window lengths (" +
                                 std::to_string(b.window_len_us) + " vs " +
                                 std::to_string(w.window_len_us) + ")");
        if (w.direction != b.direction)
            throw BinningMismatchError("variance baseline: mixed degree directions");
        nb = std::max(nb, w.bin_count());
    }
    b.bins.resize(nb);
    const double n = static_cast<double>(windows.size());
    for (std::size_t k = 0; k < nb; ++k) {
        // two-pass for accuracy; counts are exact integers
        double mean = 0.0;
        for (const auto& w : windows) mean += static_cast<double>(w.count(k));
        mean /= n;
        double ss = 0.0;
        for (const auto& w : windows) {
            const double dlt = static_cast<double>(w.count(k)) - mean;
            ss += dlt * dlt;
        }
        b.bins[k] = {mean, ss / (n - 1.0)};
    }
    return b;
}

void write_baseline(std::ostream& out, const VarianceBaseline& b) {
    out << "#baseline direction=" << to_string(b.direction) << " windows=" << b.training_window_count
        << " window_len_us=" << b.window_len_us << '\n';
    char buf[128];
    for (std::size_t k = 0; k < b.bins.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%llu %llu %.17g %.17g\n",
                      static_cast<unsigned long long>(bins::lo(k)),
                      static_cast<unsigned long long>(bins::hi(k)), b.bins[k].mean, b.bins[k].var);
        out << buf;
    }
}

VarianceBaseline read_baseline(std::istream& in) {
    VarianceBaseline b;
    std::string line;
    if (!std::getline(in, line) || line.rfind("#baseline", 0) != 0)
        throw ParseError("baseline file: missing '#baseline' header");
    {
        std::istringstream hs(line.substr(9));
        std::string tok;
        while (hs >> tok) {
            auto eq = tok.find('=');
            if (eq == std::string::npos) throw ParseError("baseline file: bad header token '" + tok + "'");
            const auto key = tok.substr(0, eq);
            const auto val = tok.substr(eq + 1);
            try {
                if (key == "direction")
                    b.direction = parse_direction(val);
                else if (key == "windows")
                    b.training_window_count = std::stoull(val);
                else if (key == "window_len_us")
                    b.window_len_us = std::stoll(val);
            } catch (const std::logic_error&) {
                throw ParseError("baseline file: bad header value '" + tok + "'");
            }
        }
    }
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        unsigned long long lo = 0, hi = 0;
        double mean = 0, var = 0;
        if (!(ls >> lo >> hi >> mean >> var))
            throw ParseError("baseline file: bad line '" + line + "'");
        const std::size_t k = bins::index_of_bounds(lo, hi);
        if (k != b.bins.size())
            throw BinningMismatchError("baseline file: bins must be consecutive from (0,1]");
        if (var < 0) throw ParseError("baseline file: negative variance in '" + line + "'");
        b.bins.push_back({mean, var});
    }
    return b;
}

void write_baseline_file(const std::string& path, const VarianceBaseline& b) {
    write_file_atomic(path, [&](std::ostream& os) { write_baseline(os, b); });
}

VarianceBaseline read_baseline_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open baseline file '" + path + "'");
    return read_baseline(in);
}

}  // namespace netobs
