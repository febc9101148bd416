#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "oxsim/bench.hpp"

namespace oxsim::analysis {

using bench::ReadoutMatrix;
using bench::TargetState;

/// All statistics operate on log10 resistance.

/// Empirical CDF over sorted log10 values, probabilities k/N.
struct CdfCurve {
    std::vector<double> values_log10;
    std::vector<double> prob;
};

CdfCurve empirical_cdf(std::span<const double> resistances_ohm);

/// Basic sample helpers shared by the metrics and test suites.
double median_of(std::vector<double> values);
double sample_std(std::span<const double> values);
double pearson_of(std::span<const double> x, std::span<const double> y);
double spearman_rank(std::span<const double> x, std::span<const double> y);
/// Two-sample Kolmogorov-Smirnov distance; inputs need not be sorted.
double ks_distance(std::vector<double> a, std::vector<double> b);

/// Per-readout median / standard deviation of log10 R, with the median
/// shift against the reference readout (first post-program time).
struct ReadoutStats {
    int readout_index = 0;
    double t_s = 0.0;
    std::size_t n = 0;
    double median_log10 = 0.0;
    double std_log10 = 0.0;
    double delta_median = 0.0;
};

std::vector<ReadoutStats> median_std_evolution(const ReadoutMatrix& m, TargetState state);

/// Top/mid/low 10% subpopulations picked at the reference readout and
/// tracked (same members) at every later readout, with pairwise KS
/// distances per readout.
struct SubpopulationSnapshot {
    int readout_index = 0;
    double t_s = 0.0;
    CdfCurve top;
    CdfCurve mid;
    CdfCurve low;
    double ks_top_mid = 0.0;
    double ks_top_low = 0.0;
    double ks_mid_low = 0.0;
};

struct SubpopulationTrack {
    std::vector<SubpopulationSnapshot> snapshots;
    std::size_t members_per_bin = 0;
};

SubpopulationTrack subpopulation_track(const ReadoutMatrix& m, TargetState state);

/// Pearson correlation of log10 R between two readout indices, paired per
/// (cell, cycle) trajectory.
double pearson(const ReadoutMatrix& m, TargetState state, int readout_i, int readout_j);

/// Fraction of rows violating the state's verify threshold per readout
/// (SET fails above threshold, RESET fails below).
struct FailedFractionPoint {
    int readout_index = 0;
    double t_s = 0.0;
    double fraction = 0.0;
};

std::vector<FailedFractionPoint> failed_fraction(const ReadoutMatrix& m, TargetState state,
                                                 double threshold_ohm);

enum class FitLaw { Linear, Exponential, PowerLaw, Logarithmic };

const char* law_name(FitLaw law);

/// Drift-law fit of log10 R against time:
///   Linear       y = r0 + mu * (t - t0)
///   Exponential  y = r0 * exp(mu * (t - t0))
///   PowerLaw     y = r0 * (t / t0)^mu
///   Logarithmic  y = r0 + mu * log10(t / t0)
/// t0 is the first supplied time. r_square follows the
/// squared-correlation definition (1 by convention for zero-variance
/// targets); rms_error is in log10-ohm.
struct FitResult {
    FitLaw law = FitLaw::Logarithmic;
    double r0 = 0.0;
    double mu = 0.0;
    double t0 = 0.0;
    double r_square = 0.0;
    double rms_error = 0.0;

    [[nodiscard]] double evaluate(double t) const;
};

FitResult fit_drift(std::span<const double> times_s, std::span<const double> values_log10,
                    FitLaw law);

/// All four laws fitted and ranked by RMSE ascending (R-square descending
/// as tiebreak).
std::vector<FitResult> select_best_fit(std::span<const double> times_s,
                                       std::span<const double> values_log10);

/// Equal-count binning by the reference-readout value; each bin's
/// per-readout median curve is fitted separately. mu_boot_se holds a
/// bootstrap standard error per bin (trajectory resampling).
struct BinnedFit {
    std::vector<FitResult> per_bin;
    std::vector<double> mu_boot_se;
    std::vector<std::size_t> bin_sizes;
    double mu_spread = 0.0;  // max - min fitted mu across bins
};

BinnedFit binned_fit(const ReadoutMatrix& m, TargetState state, int n_bins = 10,
                     FitLaw law = FitLaw::Logarithmic, int bootstrap_reps = 200,
                     std::uint64_t seed = 1);

/// Residuals e = log10 R - log10 R_fit per trajectory per readout, against
/// the trajectory's own bin fit (or one global fit).
struct ResidualEntry {
    int cell_id = 0;
    int cycle = 0;
    int readout_index = 0;
    double t_s = 0.0;
    double residual = 0.0;
};

struct ResidualSeries {
    std::vector<ResidualEntry> entries;
};

ResidualSeries extract_residuals(const ReadoutMatrix& m, TargetState state,
                                 const BinnedFit& fits);
ResidualSeries extract_residuals(const ReadoutMatrix& m, TargetState state,
                                 const FitResult& fit);

/// Per-readout residual mean with the |mean| <= 3 std/sqrt(N) gate.
struct ZeroMeanRow {
    int readout_index = 0;
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t n = 0;
    bool within_gate = false;
};

std::vector<ZeroMeanRow> zero_mean_test(const ResidualSeries& residuals);

}  // namespace oxsim::analysis
