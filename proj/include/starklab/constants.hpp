#pragma once

#include <numbers>

namespace starklab {

/// c = (3/2)^{2/3}; x = c * xi^{2/3} inverts xi = (2/3) x^{3/2}.
inline constexpr double kLiouvilleC = 1.3103706971044483036;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace starklab
