#include "oxsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "oxsim/errors.hpp"
#include "oxsim/rng.hpp"

namespace oxsim::analysis {

namespace {

double mean_of(std::span<const double> values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

/// Trajectories of one state: values aligned to the sorted post-program
/// readout indices; only complete trajectories are retained.
struct TrajectoryTable {
    std::vector<int> readout_indices;
    std::vector<double> times_s;
    struct Trajectory {
        int cell_id;
        int cycle;
        std::vector<double> values_log10;
    };
    std::vector<Trajectory> trajectories;
};

TrajectoryTable build_trajectories(const ReadoutMatrix& m, TargetState state) {
    std::map<int, double> index_times;
    for (const auto& row : m.rows) {
        if (row.target_state == state && row.t_after_program_s > 0.0) {
            index_times.emplace(row.readout_index, row.t_after_program_s);
        }
    }
    TrajectoryTable table;
    for (const auto& [index, t] : index_times) {
        table.readout_indices.push_back(index);
        table.times_s.push_back(t);
    }

    std::map<std::pair<int, int>, std::map<int, double>> grouped;
    for (const auto& row : m.rows) {
        if (row.target_state != state || row.t_after_program_s <= 0.0) continue;
        grouped[{row.cell_id, row.cycle}][row.readout_index] =
            std::log10(row.resistance_ohm);
    }
    for (const auto& [key, values] : grouped) {
        if (values.size() != table.readout_indices.size()) continue;
        TrajectoryTable::Trajectory traj{key.first, key.second, {}};
        traj.values_log10.reserve(values.size());
        for (int index : table.readout_indices) {
            traj.values_log10.push_back(values.at(index));
        }
        table.trajectories.push_back(std::move(traj));
    }
    return table;
}

/// Trajectory order used for quantile binning: by value at the reference
/// readout, ties broken by (cell, cycle) so membership is deterministic.
std::vector<std::size_t> reference_order(const TrajectoryTable& table) {
    std::vector<std::size_t> order(table.trajectories.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ta = table.trajectories[a];
        const auto& tb = table.trajectories[b];
        if (ta.values_log10[0] != tb.values_log10[0]) {
            return ta.values_log10[0] < tb.values_log10[0];
        }
        if (ta.cell_id != tb.cell_id) return ta.cell_id < tb.cell_id;
        return ta.cycle < tb.cycle;
    });
    return order;
}

std::vector<std::pair<std::size_t, std::size_t>> bin_ranges(std::size_t n, int n_bins) {
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    for (int b = 0; b < n_bins; ++b) {
        const std::size_t lo = n * static_cast<std::size_t>(b) / static_cast<std::size_t>(n_bins);
        const std::size_t hi =
            n * static_cast<std::size_t>(b + 1) / static_cast<std::size_t>(n_bins);
        ranges.emplace_back(lo, hi);
    }
    return ranges;
}

CdfCurve cdf_from_log10(std::vector<double> values_log10) {
    std::sort(values_log10.begin(), values_log10.end());
    CdfCurve curve;
    const std::size_t n = values_log10.size();
    curve.values_log10 = std::move(values_log10);
    curve.prob.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        curve.prob[k] = static_cast<double>(k + 1) / static_cast<double>(n);
    }
    return curve;
}

}  // namespace

CdfCurve empirical_cdf(std::span<const double> resistances_ohm) {
    if (resistances_ohm.empty()) {
        throw Error(Errc::EmptySample, "empirical_cdf needs at least one sample");
    }
    std::vector<double> log_values;
    log_values.reserve(resistances_ohm.size());
    for (double r : resistances_ohm) {
        if (!(r > 0.0)) {
            throw Error(Errc::DataError, "resistance samples must be positive");
        }
        log_values.push_back(std::log10(r));
    }
    return cdf_from_log10(std::move(log_values));
}

double median_of(std::vector<double> values) {
    if (values.empty()) {
        throw Error(Errc::EmptySample, "median of empty sample");
    }
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double sample_std(std::span<const double> values) {
    if (values.size() < 2) return 0.0;
    const double mean = mean_of(values);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double pearson_of(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw Error(Errc::InsufficientData, "pearson needs paired samples, N >= 2");
    }
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw Error(Errc::ZeroVariance, "pearson undefined for a zero-variance input");
    }
    return sxy / std::sqrt(sxx * syy);
}

namespace {

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman_rank(std::span<const double> x, std::span<const double> y) {
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson_of(rx, ry);
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) {
        throw Error(Errc::EmptySample, "ks_distance needs non-empty samples");
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t ia = 0;
    std::size_t ib = 0;
    while (ia < a.size() || ib < b.size()) {
        double v;
        if (ia == a.size()) {
            v = b[ib];
        } else if (ib == b.size()) {
            v = a[ia];
        } else {
            v = std::min(a[ia], b[ib]);
        }
        while (ia < a.size() && a[ia] == v) ++ia;
        while (ib < b.size() && b[ib] == v) ++ib;
        const double fa = static_cast<double>(ia) / static_cast<double>(a.size());
        const double fb = static_cast<double>(ib) / static_cast<double>(b.size());
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

std::vector<ReadoutStats> median_std_evolution(const ReadoutMatrix& m, TargetState state) {
    std::map<int, std::pair<double, std::vector<double>>> per_readout;  // index -> (t, values)
    for (const auto& row : m.rows) {
        if (row.target_state != state) continue;
        auto& slot = per_readout[row.readout_index];
        slot.first = row.t_after_program_s;
        slot.second.push_back(std::log10(row.resistance_ohm));
    }
    if (per_readout.empty()) {
        throw Error(Errc::InsufficientData, "no rows for the requested state");
    }
    std::vector<ReadoutStats> stats;
    double reference_median = 0.0;
    bool have_reference = false;
    for (auto& [index, slot] : per_readout) {
        if (slot.second.size() < 2) {
            throw Error(Errc::InsufficientData,
                        "readout " + std::to_string(index) + " has fewer than 2 observations");
        }
        ReadoutStats row;
        row.readout_index = index;
        row.t_s = slot.first;
        row.n = slot.second.size();
        row.median_log10 = median_of(slot.second);
        row.std_log10 = sample_std(slot.second);
        if (!have_reference && slot.first > 0.0) {
            reference_median = row.median_log10;
            have_reference = true;
        }
        stats.push_back(row);
    }
    for (auto& row : stats) {
        row.delta_median = row.median_log10 - reference_median;
    }
    return stats;
}

SubpopulationTrack subpopulation_track(const ReadoutMatrix& m, TargetState state) {
    const TrajectoryTable table = build_trajectories(m, state);
    const std::size_t n = table.trajectories.size();
    const std::size_t bin = n / 10;
    if (bin < 30) {
        throw Error(Errc::InsufficientData,
                    "subpopulation_track needs >= 30 trajectories per decile");
    }
    const auto order = reference_order(table);
    // top: above the 90th percentile; low: below the 10th; mid: centered on
    // the median (45th-55th percentile band).
    std::vector<std::size_t> low(order.begin(), order.begin() + static_cast<long>(bin));
    std::vector<std::size_t> top(order.end() - static_cast<long>(bin), order.end());
    const std::size_t mid_start = (n - bin) / 2;
    std::vector<std::size_t> mid(order.begin() + static_cast<long>(mid_start),
                                 order.begin() + static_cast<long>(mid_start + bin));

    SubpopulationTrack track;
    track.members_per_bin = bin;
    auto values_at = [&](const std::vector<std::size_t>& members, std::size_t k) {
        std::vector<double> out;
        out.reserve(members.size());
        for (std::size_t idx : members) {
            out.push_back(table.trajectories[idx].values_log10[k]);
        }
        return out;
    };
    for (std::size_t k = 0; k < table.readout_indices.size(); ++k) {
        SubpopulationSnapshot snap;
        snap.readout_index = table.readout_indices[k];
        snap.t_s = table.times_s[k];
        auto top_values = values_at(top, k);
        auto mid_values = values_at(mid, k);
        auto low_values = values_at(low, k);
        snap.ks_top_mid = ks_distance(top_values, mid_values);
        snap.ks_top_low = ks_distance(top_values, low_values);
        snap.ks_mid_low = ks_distance(mid_values, low_values);
        snap.top = cdf_from_log10(std::move(top_values));
        snap.mid = cdf_from_log10(std::move(mid_values));
        snap.low = cdf_from_log10(std::move(low_values));
        track.snapshots.push_back(std::move(snap));
    }
    return track;
}

double pearson(const ReadoutMatrix& m, TargetState state, int readout_i, int readout_j) {
    std::map<std::pair<int, int>, std::pair<double, double>> pairs;
    std::map<std::pair<int, int>, std::pair<bool, bool>> seen;
    for (const auto& row : m.rows) {
        if (row.target_state != state) continue;
        if (row.readout_index != readout_i && row.readout_index != readout_j) continue;
        const std::pair<int, int> key{row.cell_id, row.cycle};
        if (row.readout_index == readout_i) {
            pairs[key].first = std::log10(row.resistance_ohm);
            seen[key].first = true;
        }
        if (row.readout_index == readout_j) {
            pairs[key].second = std::log10(row.resistance_ohm);
            seen[key].second = true;
        }
    }
    std::vector<double> x;
    std::vector<double> y;
    for (const auto& [key, flags] : seen) {
        if (flags.first && flags.second) {
            x.push_back(pairs[key].first);
            y.push_back(pairs[key].second);
        }
    }
    if (x.size() < 2) {
        throw Error(Errc::InsufficientData, "pearson needs at least 2 paired trajectories");
    }
    return pearson_of(x, y);
}

std::vector<FailedFractionPoint> failed_fraction(const ReadoutMatrix& m, TargetState state,
                                                 double threshold_ohm) {
    std::map<int, std::pair<double, std::pair<std::size_t, std::size_t>>> per_readout;
    for (const auto& row : m.rows) {
        if (row.target_state != state) continue;
        auto& slot = per_readout[row.readout_index];
        slot.first = row.t_after_program_s;
        const bool failed = state == TargetState::Set ? row.resistance_ohm > threshold_ohm
                                                      : row.resistance_ohm < threshold_ohm;
        slot.second.first += failed ? 1 : 0;
        slot.second.second += 1;
    }
    std::vector<FailedFractionPoint> points;
    for (const auto& [index, slot] : per_readout) {
        points.push_back({index, slot.first,
                          static_cast<double>(slot.second.first) /
                              static_cast<double>(slot.second.second)});
    }
    return points;
}

const char* law_name(FitLaw law) {
    switch (law) {
        case FitLaw::Linear: return "linear";
        case FitLaw::Exponential: return "exponential";
        case FitLaw::PowerLaw: return "power";
        case FitLaw::Logarithmic: return "logarithmic";
    }
    return "?";
}

double FitResult::evaluate(double t) const {
    switch (law) {
        case FitLaw::Linear: return r0 + mu * (t - t0);
        case FitLaw::Exponential: return r0 * std::exp(mu * (t - t0));
        case FitLaw::PowerLaw: return r0 * std::pow(t / t0, mu);
        case FitLaw::Logarithmic: return r0 + mu * std::log10(t / t0);
    }
    return 0.0;
}

FitResult fit_drift(std::span<const double> times_s, std::span<const double> values_log10,
                    FitLaw law) {
    const std::size_t n = times_s.size();
    if (n < 3 || values_log10.size() != n) {
        throw Error(Errc::DegenerateFit, "fit_drift needs >= 3 paired points");
    }
    for (double t : times_s) {
        if (!(t > 0.0)) {
            throw Error(Errc::DegenerateFit, "fit_drift needs strictly positive times");
        }
    }
    FitResult result;
    result.law = law;
    result.t0 = times_s[0];

    const double v_min = *std::min_element(values_log10.begin(), values_log10.end());
    const double v_max = *std::max_element(values_log10.begin(), values_log10.end());
    if (v_min == v_max) {
        // Zero-variance target: every law degenerates to the constant fit.
        result.r0 = v_min;
        result.mu = 0.0;
        result.r_square = 1.0;
        result.rms_error = 0.0;
        return result;
    }

    const bool log_target = law == FitLaw::Exponential || law == FitLaw::PowerLaw;
    if (log_target && v_min <= 0.0) {
        throw Error(Errc::DegenerateFit,
                    "multiplicative laws need positive fitted values");
    }

    std::vector<double> x(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        switch (law) {
            case FitLaw::Linear:
            case FitLaw::Exponential: x[i] = times_s[i] - result.t0; break;
            case FitLaw::PowerLaw: x[i] = std::log(times_s[i] / result.t0); break;
            case FitLaw::Logarithmic: x[i] = std::log10(times_s[i] / result.t0); break;
        }
        y[i] = log_target ? std::log(values_log10[i]) : values_log10[i];
    }

    const double mx = mean_of(x);
    const double my = mean_of(y);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) {
        throw Error(Errc::DegenerateFit, "singular normal equations (no spread in time)");
    }
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    result.mu = slope;
    result.r0 = log_target ? std::exp(intercept) : intercept;

    std::vector<double> fitted(n);
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        fitted[i] = result.evaluate(times_s[i]);
        const double e = values_log10[i] - fitted[i];
        ss_res += e * e;
    }
    result.rms_error = std::sqrt(ss_res / static_cast<double>(n));
    const double fit_min = *std::min_element(fitted.begin(), fitted.end());
    const double fit_max = *std::max_element(fitted.begin(), fitted.end());
    if (fit_min == fit_max) {
        result.r_square = 0.0;  // constant prediction of a varying target
    } else {
        const double r = pearson_of(values_log10, fitted);
        result.r_square = r * r;
    }
    return result;
}

std::vector<FitResult> select_best_fit(std::span<const double> times_s,
                                       std::span<const double> values_log10) {
    std::vector<FitResult> fits;
    for (FitLaw law :
         {FitLaw::Linear, FitLaw::Exponential, FitLaw::PowerLaw, FitLaw::Logarithmic}) {
        try {
            fits.push_back(fit_drift(times_s, values_log10, law));
        } catch (const Error&) {
            // law inapplicable to this data; omit from the ranking
        }
    }
    std::stable_sort(fits.begin(), fits.end(), [](const FitResult& a, const FitResult& b) {
        if (a.rms_error != b.rms_error) return a.rms_error < b.rms_error;
        return a.r_square > b.r_square;
    });
    return fits;
}

namespace {

FitResult fit_bin_medians(const TrajectoryTable& table,
                          const std::vector<std::size_t>& members, FitLaw law) {
    std::vector<double> medians(table.times_s.size());
    std::vector<double> column(members.size());
    for (std::size_t k = 0; k < table.times_s.size(); ++k) {
        for (std::size_t i = 0; i < members.size(); ++i) {
            column[i] = table.trajectories[members[i]].values_log10[k];
        }
        medians[k] = median_of(column);
    }
    return fit_drift(table.times_s, medians, law);
}

}  // namespace

BinnedFit binned_fit(const ReadoutMatrix& m, TargetState state, int n_bins, FitLaw law,
                     int bootstrap_reps, std::uint64_t seed) {
    if (n_bins < 1) {
        throw Error(Errc::ConfigError, "n_bins must be >= 1");
    }
    const TrajectoryTable table = build_trajectories(m, state);
    const std::size_t n = table.trajectories.size();
    if (n < static_cast<std::size_t>(n_bins) * 30) {
        throw Error(Errc::InsufficientData, "binned_fit needs >= 30 trajectories per bin");
    }
    const auto order = reference_order(table);
    const auto ranges = bin_ranges(n, n_bins);

    BinnedFit result;
    for (const auto& [lo, hi] : ranges) {
        std::vector<std::size_t> members(order.begin() + static_cast<long>(lo),
                                         order.begin() + static_cast<long>(hi));
        result.per_bin.push_back(fit_bin_medians(table, members, law));
        result.bin_sizes.push_back(members.size());

        // Bootstrap standard error of mu by trajectory resampling.
        std::vector<double> mus;
        if (bootstrap_reps > 1) {
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(result.per_bin.size()),
                                0xb001));
            std::vector<std::size_t> resampled(members.size());
            for (int rep = 0; rep < bootstrap_reps; ++rep) {
                for (auto& idx : resampled) {
                    idx = members[rng.below(members.size())];
                }
                mus.push_back(fit_bin_medians(table, resampled, law).mu);
            }
        }
        result.mu_boot_se.push_back(sample_std(mus));
    }
    double mu_min = result.per_bin.front().mu;
    double mu_max = mu_min;
    for (const auto& fit : result.per_bin) {
        mu_min = std::min(mu_min, fit.mu);
        mu_max = std::max(mu_max, fit.mu);
    }
    result.mu_spread = mu_max - mu_min;
    return result;
}

namespace {

ResidualSeries residuals_with(const ReadoutMatrix& m, TargetState state,
                              const std::vector<FitResult>& bin_fits) {
    const TrajectoryTable table = build_trajectories(m, state);
    const std::size_t n = table.trajectories.size();
    const int n_bins = static_cast<int>(bin_fits.size());
    const auto order = reference_order(table);
    const auto ranges = bin_ranges(n, n_bins);
    std::vector<int> bin_of(n, 0);
    for (int b = 0; b < n_bins; ++b) {
        for (std::size_t i = ranges[static_cast<std::size_t>(b)].first;
             i < ranges[static_cast<std::size_t>(b)].second; ++i) {
            bin_of[order[i]] = b;
        }
    }
    ResidualSeries series;
    series.entries.reserve(n * table.times_s.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto& traj = table.trajectories[i];
        const FitResult& fit = bin_fits[static_cast<std::size_t>(bin_of[i])];
        for (std::size_t k = 0; k < table.times_s.size(); ++k) {
            const double fitted = fit.evaluate(table.times_s[k]);
            series.entries.push_back({traj.cell_id, traj.cycle, table.readout_indices[k],
                                      table.times_s[k], traj.values_log10[k] - fitted});
        }
    }
    return series;
}

}  // namespace

ResidualSeries extract_residuals(const ReadoutMatrix& m, TargetState state,
                                 const BinnedFit& fits) {
    if (fits.per_bin.empty()) {
        throw Error(Errc::InsufficientData, "no fits supplied");
    }
    return residuals_with(m, state, fits.per_bin);
}

ResidualSeries extract_residuals(const ReadoutMatrix& m, TargetState state,
                                 const FitResult& fit) {
    return residuals_with(m, state, {fit});
}

std::vector<ZeroMeanRow> zero_mean_test(const ResidualSeries& residuals) {
    std::map<int, std::vector<double>> per_readout;
    for (const auto& entry : residuals.entries) {
        per_readout[entry.readout_index].push_back(entry.residual);
    }
    if (per_readout.empty()) {
        throw Error(Errc::InsufficientData, "no residuals supplied");
    }
    std::vector<ZeroMeanRow> rows;
    for (const auto& [index, values] : per_readout) {
        if (values.size() < 30) {
            throw Error(Errc::InsufficientData,
                        "zero_mean_test needs >= 30 residuals per readout");
        }
        ZeroMeanRow row;
        row.readout_index = index;
        row.n = values.size();
        row.mean = mean_of(values);
        row.stddev = sample_std(values);
        row.within_gate =
            std::abs(row.mean) <= 3.0 * row.stddev / std::sqrt(static_cast<double>(row.n));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace oxsim::analysis
