#pragma once

namespace oxsim {

// 2019 SI exact values.
inline constexpr double kElementaryCharge = 1.602176634e-19;  // C
inline constexpr double kPlanck = 6.62607015e-34;             // J s
inline constexpr double kHbar = 1.054571817e-34;              // J s
inline constexpr double kBoltzmann = 1.380649e-23;            // J/K
inline constexpr double kPi = 3.14159265358979323846;

}  // namespace oxsim
