#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace meandim {

// Error taxonomy, mapped by the CLI onto exit codes 2/3/4.
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct capacity_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr double kDiamTol = 1e-12;   // absolute tolerance for diameter comparisons
constexpr double kLpFeasTol = 1e-9;  // LP feasibility / duality-gap tolerance

inline double log2_safe(double x) { return std::log2(x); }

// Deterministic RNG. std::mt19937_64 is fully specified by the standard;
// the bounded draw below avoids the implementation-defined distributions.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // uniform integer in [0, n)
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t lim = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v;
        do {
            v = gen_();
        } while (v >= lim);
        return v % n;
    }

    // uniform double in [0, 1)
    double next_unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  private:
    std::mt19937_64 gen_;
};

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double max_residual = 0.0;
    std::size_t n = 0;
};

// Weighted least squares y ~ slope*x + intercept.
inline LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys,
                        const std::vector<double>& ws = {}) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw validation_error("fit_line: need at least two (x, y) points");
    std::vector<double> w = ws.empty() ? std::vector<double>(xs.size(), 1.0) : ws;
    if (w.size() != xs.size()) throw validation_error("fit_line: weight size mismatch");
    double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sw += w[i];
        sx += w[i] * xs[i];
        sy += w[i] * ys[i];
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += w[i] * (xs[i] - mx) * (xs[i] - mx);
        sxy += w[i] * (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx <= 0) throw validation_error("fit_line: degenerate x values");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.n = xs.size();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        f.max_residual = std::max(f.max_residual, std::abs(ys[i] - f.slope * xs[i] - f.intercept));
    }
    return f;
}

// Geometric grid from a down to b (inclusive), n points.
inline std::vector<double> geometric_grid(double a, double b, std::size_t n) {
    if (n < 2 || a <= 0 || b <= 0) throw validation_error("geometric_grid: need n >= 2 and positive endpoints");
    std::vector<double> g(n);
    const double r = std::pow(b / a, 1.0 / static_cast<double>(n - 1));
    double v = a;
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = v;
        v *= r;
    }
    g.back() = b;
    return g;
}

}  // namespace meandim
