#pragma once

#include <random>

#include "polysync/numkit.hpp"

namespace polysync::testing {

inline Mat random_mat(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    Mat m(r, c);
    for (auto& x : m.data()) x = d(rng);
    return m;
}

inline double max_abs_diff(const Mat& a, const Mat& b) { return max_abs(a - b); }

} // namespace polysync::testing
