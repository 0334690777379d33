#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pifs {

// Raised for file/stream problems; everything precondition-shaped throws
// std::invalid_argument. The CLI maps the two to distinct exit codes.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Neumaier-compensated accumulator. Schedule statistics and Moran products
// target residuals near 5e-11 over ~1e3 terms, so plain summation is not used.
class CompensatedSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_total(const std::vector<double>& xs) {
    CompensatedSum acc;
    for (double x : xs) acc.add(x);
    return acc.value();
}

// All numeric file output goes through this: 17 significant digits round-trips
// IEEE doubles exactly.
inline std::string format_full(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// Chunked parallel map over [0, n). Thread count comes from
// PIFS_SCHED_THREADS (default: hardware concurrency); results must be
// written to disjoint slots so the merge order is fixed.
unsigned effective_thread_count();
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& chunk_fn);

}  // namespace pifs
