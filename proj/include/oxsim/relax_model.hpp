#pragma once

#include <cstdint>

#include "oxsim/analysis.hpp"
#include "oxsim/bench.hpp"

namespace oxsim::relax {

/// Random-walk-with-drift description of post-programming resistance
/// evolution: a deterministic drift per log10-decade of time plus an
/// independent Gaussian step at every readout instant.
struct RwdParams {
    double mu = 0.0;          // log10-ohm per decade
    double sigma_step = 0.0;  // log10-ohm per readout step
    double r0_median = 4.4;   // log10-ohm at the first readout
    double r0_sigma = 0.1;    // log10-ohm

    void validate() const;
};

/// Generates trajectories on the given schedule:
///   y(t_1)  ~ N(r0_median, r0_sigma^2)
///   y(t_k) = y(t_{k-1}) + mu * (log10 t_k - log10 t_{k-1}) + N(0, sigma_step^2)
/// Emitted in the bench ReadoutMatrix layout (cell 0, one cycle per
/// trajectory, readout indices 1..K), so every analysis operation runs
/// unchanged on either source.
bench::ReadoutMatrix simulate_rwd(const RwdParams& p, const bench::ReadoutSchedule& schedule,
                                  int n_trajectories, std::uint64_t seed,
                                  bench::TargetState state = bench::TargetState::Set);

/// Inverts the decomposition: mu from the logarithmic fit of the median
/// curve, sigma_step from the pooled one-step residual increments, r0 from
/// the first-readout distribution. Needs >= 100 trajectories.
RwdParams calibrate_rwd(const bench::ReadoutMatrix& m, bench::TargetState state);

}  // namespace oxsim::relax
