#pragma once

// The six followers and the leader of the worked example, with hand-derived
// regulator solutions.

#include <vector>

#include "polysync/datagen.hpp"

namespace polysync::testing {

inline Mat leader_s() { return Mat{{0, 1}, {-1, 0}}; }
inline Mat leader_h() { return Mat{{1, 0}}; }

inline std::vector<TrueSystem> example_followers() {
    return {
        {Mat{{2}}, Mat{{3}}, Mat{{1}}},
        {Mat{{0, 1}, {1, -1}}, Mat{{0}, {1}}, Mat{{1, 1}}},
        {Mat{{0, 1}, {1, -2}}, Mat{{1}, {0}}, Mat{{0, 1}}},
        {Mat{{0, 1}, {-1, -3}}, Mat{{1}, {1}}, Mat{{-1, 1}}},
        {Mat{{0, 1, 0}, {0, 0, 1}, {0, 0, -4}}, Mat{{0}, {0}, {4}}, Mat{{1, 0, 0}}},
        {Mat{{0, 1, 0}, {0, 0, 1}, {0, 0, -5}}, Mat{{0}, {0}, {5}}, Mat{{2, 0, 0}}},
    };
}

struct RegulatorPair {
    Mat pi;
    Mat gamma;
};

inline std::vector<RegulatorPair> example_regulators() {
    return {
        {Mat{{1, 0}}, Mat{{-2.0 / 3.0, 1.0 / 3.0}}},
        {Mat{{0.5, -0.5}, {0.5, 0.5}}, Mat{{-0.5, 1.5}}},
        {Mat{{2, 1}, {1, 0}}, Mat{{-2, 2}}},
        {Mat{{-0.8, -0.2}, {0.2, -0.2}}, Mat{{0, -0.6}}},
        {Mat{{1, 0}, {0, 1}, {-1, 0}}, Mat{{-1, -0.25}}},
        {Mat{{0.5, 0}, {0, 0.5}, {-0.5, 0}}, Mat{{-0.5, -0.1}}},
    };
}

// Gains that make every A + B K nilpotent.
inline std::vector<Mat> deadbeat_gains() {
    return {
        Mat{{-2.0 / 3.0}},
        Mat{{-1, 1}},
        Mat{{2, -5}},
        Mat{{0.8, 2.2}},
        Mat{{0, 0, 1}},
        Mat{{0, 0, 1}},
    };
}

} // namespace polysync::testing
