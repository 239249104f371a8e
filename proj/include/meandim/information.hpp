#pragma once

// Discrete distributions, entropy and mutual information, base-2 logs
// throughout, with the 0 log(0/a) = 0 convention handled exactly.

#include <cmath>
#include <string>
#include <vector>

#include "meandim/common.hpp"

namespace meandim {

constexpr double kMassTol = 1e-12;

struct DiscreteDistribution {
    std::vector<double> mass;

    std::size_t size() const { return mass.size(); }

    void validate() const {
        double total = 0.0;
        for (double m : mass) {
            if (m < 0.0) throw validation_error("distribution: negative mass");
            total += m;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw validation_error("distribution: mass sums to " + std::to_string(total));
    }

    static DiscreteDistribution uniform(std::size_t n) {
        DiscreteDistribution d;
        d.mass.assign(n, 1.0 / static_cast<double>(n));
        return d;
    }
    static DiscreteDistribution delta(std::size_t n, std::size_t at) {
        DiscreteDistribution d;
        d.mass.assign(n, 0.0);
        d.mass[at] = 1.0;
        return d;
    }
};

struct JointDistribution {
    std::size_t rows = 0, cols = 0;
    std::vector<double> mass;  // row-major

    double& at(std::size_t x, std::size_t y) { return mass[x * cols + y]; }
    double at(std::size_t x, std::size_t y) const { return mass[x * cols + y]; }

    void validate() const {
        if (mass.size() != rows * cols) throw validation_error("joint: shape mismatch");
        double total = 0.0;
        for (double m : mass) {
            if (m < -kMassTol) throw validation_error("joint: negative mass");
            total += m;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw validation_error("joint: mass sums to " + std::to_string(total));
    }

    DiscreteDistribution row_marginal() const {
        DiscreteDistribution d;
        d.mass.assign(rows, 0.0);
        for (std::size_t x = 0; x < rows; ++x)
            for (std::size_t y = 0; y < cols; ++y) d.mass[x] += at(x, y);
        return d;
    }
    DiscreteDistribution col_marginal() const {
        DiscreteDistribution d;
        d.mass.assign(cols, 0.0);
        for (std::size_t x = 0; x < rows; ++x)
            for (std::size_t y = 0; y < cols; ++y) d.mass[y] += at(x, y);
        return d;
    }

    // joint from source mu and channel nu(y|x) given row-major
    static JointDistribution from_channel(const DiscreteDistribution& mu,
                                          const std::vector<std::vector<double>>& channel) {
        JointDistribution j;
        j.rows = mu.size();
        j.cols = channel.empty() ? 0 : channel[0].size();
        j.mass.assign(j.rows * j.cols, 0.0);
        for (std::size_t x = 0; x < j.rows; ++x) {
            if (channel[x].size() != j.cols) throw validation_error("channel: ragged rows");
            for (std::size_t y = 0; y < j.cols; ++y) j.at(x, y) = mu.mass[x] * channel[x][y];
        }
        return j;
    }
};

inline double entropy_bits(const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log2(v);
    return h;
}

inline double entropy_bits(const DiscreteDistribution& p) { return entropy_bits(p.mass); }

// I(X;Y) = sum p(x,y) log2( p(x,y) / (p(x) p(y)) )
inline double mutual_information(const JointDistribution& j) {
    j.validate();
    const auto mx = j.row_marginal();
    const auto my = j.col_marginal();
    double I = 0.0;
    for (std::size_t x = 0; x < j.rows; ++x) {
        for (std::size_t y = 0; y < j.cols; ++y) {
            const double p = j.at(x, y);
            if (p > 0.0) I += p * std::log2(p / (mx.mass[x] * my.mass[y]));
        }
    }
    return std::max(0.0, I);
}

}  // namespace meandim
