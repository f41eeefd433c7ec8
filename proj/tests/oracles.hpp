#pragma once

// Reference implementations used only by tests. They are written the slow,
// obvious way and share no code with the library.

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace oracle {

struct GridFit {
    double beta;
    double eta;
    double log_likelihood;
};

/// Exhaustive search of the profile log-likelihood over beta in
/// [lo, hi] with the given step. For fixed beta the MLE of eta is
/// (sum t^beta / r)^(1/beta), r the number of failures.
inline GridFit weibull_grid(const std::vector<double>& t, const std::vector<bool>& censored = {},
                            double lo = 0.1, double hi = 10.0, double step = 0.001) {
    std::vector<double> logs(t.size());
    double sum_log_failed = 0.0;
    double r = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        logs[i] = std::log(t[i]);
        const bool failed = censored.empty() || !censored[i];
        if (failed) {
            sum_log_failed += logs[i];
            r += 1.0;
        }
    }
    GridFit best{0, 0, -std::numeric_limits<double>::infinity()};
    const auto steps = static_cast<long>(std::llround((hi - lo) / step));
    for (long k = 0; k <= steps; ++k) {
        const double b = lo + static_cast<double>(k) * step;
        long double s = 0.0L;
        for (double lt : logs) s += std::exp(static_cast<long double>(b) * lt);
        const double ll = static_cast<double>(r * std::log(b) - r * std::log(static_cast<double>(s) / r) +
                                              (b - 1.0) * sum_log_failed - r);
        if (ll > best.log_likelihood) {
            best = {b, std::pow(static_cast<double>(s) / r, 1.0 / b), ll};
        }
    }
    return best;
}

struct Line {
    double slope;
    double intercept;
};

/// Textbook least squares in long double with centred sums.
inline Line least_squares(const std::vector<double>& t, const std::vector<double>& v) {
    long double tm = 0, vm = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        tm += t[i];
        vm += v[i];
    }
    tm /= t.size();
    vm /= v.size();
    long double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        sxy += (t[i] - tm) * (v[i] - vm);
        sxx += (t[i] - tm) * (t[i] - tm);
    }
    const long double slope = sxy / sxx;
    return {static_cast<double>(slope), static_cast<double>(vm - slope * tm)};
}

inline bool close_rel(double a, double b, double rel) {
    return std::fabs(a - b) <= rel * std::fabs(b);
}

}  // namespace oracle

namespace testutil {

inline std::string scenario(const std::string& name) { return std::string(CBM_SCENARIO_DIR) + "/" + name; }

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("cbm-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

}  // namespace testutil
