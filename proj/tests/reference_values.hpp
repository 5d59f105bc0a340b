// Generated by tests/oracles/make_reference_values.py — do not edit by hand.
#pragma once

namespace idem::testing {
inline constexpr double kCap53From10311Value = 1.2991610620484768;
inline constexpr double kCap53From10311ArgminP = 1.1540072882195656;
inline constexpr double kCapReverseValue = 0.6989700043360188;
inline constexpr double kCapReverseInverse = 1.4306765580733931;
inline constexpr double kRatio53From10311AtP1 = 1.3022968652028395;
inline constexpr double kL2NormOf22 = 2.8284271247461901;
inline constexpr double kChoiDistIdDephase2 = 1.414213562373095;

// Exhaustive feasibility verdicts (source dims -> target dims):
//   [2] -> [2, 1]: feasible
//   [2, 2] -> [3]: infeasible
//   [3] -> [2, 2]: infeasible
//   [1, 1, 1, 1] -> [2]: infeasible
//   [1, 1, 1, 1] -> [4]: feasible
//   [2, 1] -> [2, 1]: feasible
//   [5, 3] -> [10, 3, 1, 1]: feasible
}  // namespace idem::testing
