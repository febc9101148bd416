#include "oxsim/relax_model.hpp"

#include <cmath>
#include <map>

#include "oxsim/errors.hpp"
#include "oxsim/rng.hpp"

namespace oxsim::relax {

void RwdParams::validate() const {
    if (sigma_step < 0.0 || r0_sigma < 0.0) {
        throw Error(Errc::ConfigError, "sigma_step and r0_sigma must be >= 0");
    }
}

bench::ReadoutMatrix simulate_rwd(const RwdParams& p, const bench::ReadoutSchedule& schedule,
                                  int n_trajectories, std::uint64_t seed,
                                  bench::TargetState state) {
    p.validate();
    schedule.validate();
    if (n_trajectories < 1) {
        throw Error(Errc::ConfigError, "n_trajectories must be >= 1");
    }
    bench::ReadoutMatrix matrix;
    matrix.rows.reserve(static_cast<std::size_t>(n_trajectories) * schedule.size());
    for (int traj = 0; traj < n_trajectories; ++traj) {
        Rng rng(derive_seed(seed, 0, static_cast<std::uint64_t>(traj)));
        double y = rng.normal(p.r0_median, p.r0_sigma);
        double log_t_prev = std::log10(schedule.times_s[0]);
        for (std::size_t k = 0; k < schedule.size(); ++k) {
            const double log_t = std::log10(schedule.times_s[k]);
            if (k > 0) {
                y += p.mu * (log_t - log_t_prev) + rng.normal(0.0, p.sigma_step);
            }
            log_t_prev = log_t;
            matrix.rows.push_back({0, traj, state, static_cast<int>(k) + 1,
                                   schedule.times_s[k], std::pow(10.0, y), true, 1});
        }
    }
    return matrix;
}

RwdParams calibrate_rwd(const bench::ReadoutMatrix& m, bench::TargetState state) {
    // Per-trajectory values on the post-program readouts.
    std::map<std::pair<int, int>, std::map<int, std::pair<double, double>>> grouped;
    for (const auto& row : m.rows) {
        if (row.target_state != state || row.t_after_program_s <= 0.0) continue;
        grouped[{row.cell_id, row.cycle}][row.readout_index] = {
            row.t_after_program_s, std::log10(row.resistance_ohm)};
    }
    std::size_t max_len = 0;
    for (const auto& [key, samples] : grouped) max_len = std::max(max_len, samples.size());
    std::size_t complete = 0;
    for (const auto& [key, samples] : grouped) complete += samples.size() == max_len ? 1 : 0;
    if (complete < 100) {
        throw Error(Errc::InsufficientData, "calibrate_rwd needs >= 100 complete trajectories");
    }

    const auto stats = analysis::median_std_evolution(m, state);
    std::vector<double> times;
    std::vector<double> medians;
    for (const auto& s : stats) {
        if (s.t_s > 0.0) {
            times.push_back(s.t_s);
            medians.push_back(s.median_log10);
        }
    }
    const auto fit = analysis::fit_drift(times, medians, analysis::FitLaw::Logarithmic);

    RwdParams params;
    params.mu = fit.mu;

    // Pooled std of one-step increments after drift removal.
    std::vector<double> increments;
    std::vector<double> first_values;
    for (const auto& [key, samples] : grouped) {
        if (samples.size() != max_len) continue;
        bool first = true;
        double prev_y = 0.0;
        double prev_log_t = 0.0;
        for (const auto& [index, tv] : samples) {
            const double log_t = std::log10(tv.first);
            if (first) {
                first_values.push_back(tv.second);
                first = false;
            } else {
                increments.push_back(tv.second - prev_y - params.mu * (log_t - prev_log_t));
            }
            prev_y = tv.second;
            prev_log_t = log_t;
        }
    }
    params.sigma_step = analysis::sample_std(increments);
    params.r0_median = analysis::median_of(first_values);
    params.r0_sigma = analysis::sample_std(first_values);
    return params;
}

}  // namespace oxsim::relax
