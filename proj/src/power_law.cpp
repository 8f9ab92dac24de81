#include "netobs/power_law.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "netobs/atomic_file.hpp"
#include "netobs/error.hpp"

namespace netobs {

namespace {

constexpr std::uint64_t kExactTerms = 64;
constexpr std::uint64_t kExactRange = 512;

double golden_max(const std::function<double(double)>& f, double a, double b, double tol = 1e-9) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return (a + b) / 2.0;
}

struct Point {
    double alpha;
    double delta;
};

/// Grid search then alternating golden-section refinement within one grid step.
Point maximize(const std::function<double(double, double)>& ll, const FitOptions& o) {
    const auto na = static_cast<std::size_t>(std::llround((o.alpha_hi - o.alpha_lo) / o.step)) + 1;
    const auto nd = static_cast<std::size_t>(std::llround((o.delta_hi - o.delta_lo) / o.step)) + 1;
    Point best{o.alpha_lo, o.delta_lo};
    double best_ll = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nd; ++j) {
        const double delta = o.delta_lo + static_cast<double>(j) * o.step;
        for (std::size_t i = 0; i < na; ++i) {
            const double alpha = o.alpha_lo + static_cast<double>(i) * o.step;
            const double v = ll(alpha, delta);
            if (v > best_ll) {
                best_ll = v;
                best = {alpha, delta};
            }
        }
    }

    for (int pass = 0; pass < 200; ++pass) {
        const Point before = best;
        const double before_ll = best_ll;

        const double a = golden_max([&](double x) { return ll(x, best.delta); },
                                    std::max(o.alpha_lo, best.alpha - o.step),
                                    std::min(o.alpha_hi, best.alpha + o.step));
        if (double v = ll(a, best.delta); v >= best_ll) {
            best.alpha = a;
            best_ll = v;
        }
        const double d = golden_max([&](double x) { return ll(best.alpha, x); },
                                    std::max(o.delta_lo, best.delta - o.step),
                                    std::min(o.delta_hi, best.delta + o.step));
        if (double v = ll(best.alpha, d); v >= best_ll) {
            best.delta = d;
            best_ll = v;
        }
        const double moved = std::abs(best.alpha - before.alpha) + std::abs(best.delta - before.delta);
        if (moved < 1e-9 || best_ll - before_ll < 1e-12 * std::abs(before_ll)) break;
    }
    return best;
}

struct DegreeCounts {
    std::vector<std::uint64_t> degree;
    std::vector<std::uint64_t> count;
    std::uint64_t total = 0;
};

DegreeCounts tally(std::span<const std::uint64_t> degrees) {
    // direct counts for the dense low range, sorting only the sparse tail
    constexpr std::uint64_t kDense = 4096;
    std::vector<std::uint64_t> dense(kDense, 0);
    std::vector<std::uint64_t> tail;
    DegreeCounts t;
    for (auto d : degrees) {
        if (d == 0) continue;
        ++t.total;
        if (d < kDense) ++dense[d];
        else tail.push_back(d);
    }
    for (std::uint64_t d = 1; d < kDense; ++d)
        if (dense[d]) {
            t.degree.push_back(d);
            t.count.push_back(dense[d]);
        }
    std::sort(tail.begin(), tail.end());
    for (std::size_t i = 0; i < tail.size();) {
        std::size_t j = i;
        while (j < tail.size() && tail[j] == tail[i]) ++j;
        t.degree.push_back(tail[i]);
        t.count.push_back(j - i);
        i = j;
    }
    return t;
}

}  // namespace

double power_sum(double alpha, double delta, std::uint64_t lo, std::uint64_t hi) {
    if (hi < lo) return 0.0;
    if (hi - lo < kExactRange) {
        double s = 0.0;
        for (std::uint64_t d = hi + 1; d-- > lo;)  // small terms first
            s += std::pow(static_cast<double>(d) + delta, -alpha);
        return s;
    }
    double s = 0.0;
    const std::uint64_t a = lo + kExactTerms;
    for (std::uint64_t d = lo; d < a; ++d) s += std::pow(static_cast<double>(d) + delta, -alpha);

    // Euler-Maclaurin for sum_{d=a}^{hi} f(d), f(x) = (x + delta)^-alpha
    const double x = static_cast<double>(a) + delta;
    const double y = static_cast<double>(hi) + delta;
    const double one_minus = 1.0 - alpha;
    const double log_ratio = std::log(y / x);
    double integral;
    if (std::abs(one_minus) < 1e-14)
        integral = log_ratio;
    else
        integral = std::pow(x, one_minus) * std::expm1(one_minus * log_ratio) / one_minus;
    const auto f = [&](double t) { return std::pow(t, -alpha); };
    const auto d1 = [&](double t) { return -alpha * std::pow(t, -alpha - 1.0); };
    const auto d3 = [&](double t) {
        return -alpha * (alpha + 1.0) * (alpha + 2.0) * std::pow(t, -alpha - 3.0);
    };
    const auto d5 = [&](double t) {
        return -alpha * (alpha + 1.0) * (alpha + 2.0) * (alpha + 3.0) * (alpha + 4.0) *
               std::pow(t, -alpha - 5.0);
    };
    s += integral + 0.5 * (f(x) + f(y)) + (d1(y) - d1(x)) / 12.0 - (d3(y) - d3(x)) / 720.0 +
         (d5(y) - d5(x)) / 30240.0;
    return s;
}

PowerLawModel make_power_law(double alpha, double delta, std::uint64_t d_max) {
    if (!(alpha > 0.0)) throw ParameterError("power law: alpha must be > 0");
    if (!(delta >= 0.0)) throw ParameterError("power law: delta must be >= 0");
    if (d_max < 1) throw ParameterError("power law: d_max must be >= 1");
    long double z = 0.0L;
    if (d_max <= 50'000'000) {
        for (std::uint64_t d = d_max; d >= 1; --d)
            z += std::pow(static_cast<long double>(d) + delta, static_cast<long double>(-alpha));
    } else {
        z = power_sum(alpha, delta, 1, d_max);
    }
    PowerLawModel m;
    m.alpha = alpha;
    m.delta = delta;
    m.norm = static_cast<double>(1.0L / z);
    m.d_max = d_max;
    return m;
}

double model_pdf(const PowerLawModel& m, std::uint64_t d) {
    if (d < 1 || d > m.d_max)
        throw RangeError("model_pdf: degree " + std::to_string(d) + " outside [1, " +
                         std::to_string(m.d_max) + "]");
    return m.norm * std::pow(static_cast<double>(d) + m.delta, -m.alpha);
}

double model_cdf(const PowerLawModel& m, std::uint64_t d) {
    if (d < 1) return 0.0;
    if (d >= m.d_max) return 1.0;
    return std::min(1.0, m.norm * power_sum(m.alpha, m.delta, 1, d));
}

std::vector<double> expected_bin_counts(const PowerLawModel& m, std::uint64_t active_nodes) {
    const std::size_t nb = bins::index_of(m.d_max) + 1;
    std::vector<double> out(nb, 0.0);
    if (active_nodes == 0) return out;
    const double n = static_cast<double>(active_nodes);
    for (std::size_t k = 0; k < nb; ++k) {
        const std::uint64_t lo = std::max<std::uint64_t>(1, bins::lo(k) + 1);
        const std::uint64_t hi = std::min(bins::hi(k), m.d_max);
        double mass = 0.0;
        for (std::uint64_t d = hi + 1; d-- > lo;)
            mass += std::pow(static_cast<double>(d) + m.delta, -m.alpha);
        out[k] = n * m.norm * mass;
    }
    return out;
}

PowerLawModel fit_power_law(std::span<const std::uint64_t> degrees, const FitOptions& opts) {
    const DegreeCounts t = tally(degrees);
    if (t.total < opts.min_samples)
        throw InsufficientDataError("fit_power_law: " + std::to_string(t.total) +
                                    " samples, need at least " +
                                    std::to_string(opts.min_samples));
    if (t.degree.size() < opts.min_distinct)
        throw DegenerateDistributionError("fit_power_law: only " +
                                          std::to_string(t.degree.size()) +
                                          " distinct degree(s), need at least " +
                                          std::to_string(opts.min_distinct));
    const std::uint64_t d_max = t.degree.back();
    const double n = static_cast<double>(t.total);

    std::map<double, double> log_sum_cache;
    auto log_sum = [&](double delta) {
        if (auto it = log_sum_cache.find(delta); it != log_sum_cache.end()) return it->second;
        double s = 0.0;
        for (std::size_t i = 0; i < t.degree.size(); ++i)
            s += static_cast<double>(t.count[i]) * std::log(static_cast<double>(t.degree[i]) + delta);
        if (log_sum_cache.size() < 4096) log_sum_cache.emplace(delta, s);
        return s;
    };
    auto ll = [&](double alpha, double delta) {
        return -alpha * log_sum(delta) - n * std::log(power_sum(alpha, delta, 1, d_max));
    };
    const Point p = maximize(ll, opts);

    PowerLawModel m = make_power_law(p.alpha, p.delta, d_max);
    m.sample_count = t.total;

    // KS over the integer support
    double emp = 0.0, model = 0.0, ks = 0.0;
    std::size_t next = 0;
    for (std::uint64_t d = 1; d <= d_max; ++d) {
        model += m.norm * std::pow(static_cast<double>(d) + m.delta, -m.alpha);
        if (next < t.degree.size() && t.degree[next] == d)
            emp += static_cast<double>(t.count[next++]) / n;
        ks = std::max(ks, std::abs(emp - model));
    }
    m.gof = ks;
    return m;
}

PowerLawModel fit_power_law(const DegreeDistribution& dist, const FitOptions& opts) {
    dist.validate();
    std::size_t nonzero = 0;
    std::size_t last = 0;
    for (std::size_t k = 0; k < dist.counts.size(); ++k)
        if (dist.counts[k] > 0) {
            ++nonzero;
            last = k;
        }
    if (dist.active_nodes < opts.min_samples)
        throw InsufficientDataError("fit_power_law: " + std::to_string(dist.active_nodes) +
                                    " samples, need at least " +
                                    std::to_string(opts.min_samples));
    if (nonzero < opts.min_distinct)
        throw DegenerateDistributionError("fit_power_law: only " + std::to_string(nonzero) +
                                          " occupied bin(s), need at least " +
                                          std::to_string(opts.min_distinct));
    const std::uint64_t d_max = bins::hi(last);
    const double n = static_cast<double>(dist.active_nodes);

    auto ll = [&](double alpha, double delta) {
        double s = 0.0;
        for (std::size_t k = 0; k <= last; ++k) {
            if (dist.counts[k] == 0) continue;
            const std::uint64_t lo = std::max<std::uint64_t>(1, bins::lo(k) + 1);
            s += static_cast<double>(dist.counts[k]) * std::log(power_sum(alpha, delta, lo, bins::hi(k)));
        }
        return s - n * std::log(power_sum(alpha, delta, 1, d_max));
    };
    const Point p = maximize(ll, opts);

    PowerLawModel m = make_power_law(p.alpha, p.delta, d_max);
    m.sample_count = dist.active_nodes;
    const auto expected = expected_bin_counts(m, 1);
    double emp = 0.0, model = 0.0, ks = 0.0;
    for (std::size_t k = 0; k <= last; ++k) {
        emp += static_cast<double>(dist.counts[k]) / n;
        model += expected[k];
        ks = std::max(ks, std::abs(emp - model));
    }
    m.gof = ks;
    return m;
}

// --- model file -------------------------------------------------------------

void write_model(std::ostream& out, const PowerLawModel& m) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "alpha=%.17g delta=%.17g norm=%.17g dmax=%llu samples=%llu gof=%.17g\n",
                  m.alpha, m.delta, m.norm, static_cast<unsigned long long>(m.d_max),
                  static_cast<unsigned long long>(m.sample_count), m.gof);
    out << buf;
}

PowerLawModel read_model(std::istream& in) {
    std::string line;
    while (std::getline(in, line) && (line.empty() || line[0] == '#')) {
    }
    std::istringstream ls(line);
    std::map<std::string, std::string> kv;
    std::string tok;
    while (ls >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) throw ParseError("model file: bad token '" + tok + "'");
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    auto get = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw ParseError(std::string("model file: missing field ") + key);
        return it->second;
    };
    PowerLawModel m;
    try {
        m.alpha = std::stod(get("alpha"));
        m.delta = std::stod(get("delta"));
        m.norm = std::stod(get("norm"));
        m.d_max = std::stoull(get("dmax"));
        m.sample_count = std::stoull(get("samples"));
        m.gof = std::stod(get("gof"));
    } catch (const std::logic_error&) {
        throw ParseError("model file: non-numeric field in '" + line + "'");
    }
    if (!(m.alpha > 0) || !(m.delta >= 0) || !(m.norm > 0) || m.d_max < 1)
        throw ParseError("model file: parameters out of range in '" + line + "'");
    return m;
}

void write_model_file(const std::string& path, const PowerLawModel& m) {
    write_file_atomic(path, [&](std::ostream& os) { write_model(os, m); });
}

PowerLawModel read_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file '" + path + "'");
    return read_model(in);
}

}  // namespace netobs
