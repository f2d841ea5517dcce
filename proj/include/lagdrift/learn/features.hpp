// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lagdrift/geo.hpp"

#include <array>

namespace lagdrift::learn {

inline constexpr int kFeatureChannels = 6;
inline constexpr int kOutputChannels = 2;

/// xi(t) = [u, u_e, Du/Dt] at the drifter. Channel order:
/// u_x, u_y, ue_x, ue_y, dudt_x, dudt_y. No position information.
struct FeatureVector {
    Vec2 u;
    Vec2 u_e;
    Vec2 dudt;

    std::array<double, kFeatureChannels> channels() const {
        return {u.x, u.y, u_e.x, u_e.y, dudt.x, dudt.y};
    }
    bool finite() const { return u.finite() && u_e.finite() && dudt.finite(); }
};

}  // namespace lagdrift::learn
