#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "oxsim/analysis.hpp"
#include "oxsim/errors.hpp"
#include "oxsim/relax_model.hpp"

using namespace oxsim;
using namespace oxsim::analysis;
using bench::ReadoutMatrix;
using bench::ReadoutRow;

namespace {

const std::vector<double> kPorTimes = {1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1, 1.0};

bench::ReadoutSchedule por() { return bench::ReadoutSchedule{kPorTimes}; }

/// Matrix with one trajectory per cycle following y(t) = f(t) exactly.
ReadoutMatrix synthetic_matrix(int n_traj, const std::function<double(int, double)>& f) {
    ReadoutMatrix m;
    for (int traj = 0; traj < n_traj; ++traj) {
        for (std::size_t k = 0; k < kPorTimes.size(); ++k) {
            m.rows.push_back({0, traj, TargetState::Set, static_cast<int>(k) + 1,
                              kPorTimes[k], std::pow(10.0, f(traj, kPorTimes[k])), true, 1});
        }
    }
    return m;
}

}  // namespace

TEST_CASE("empirical_cdf basics") {
    SUBCASE("hand-counted probabilities") {
        const std::vector<double> samples = {1e3, 2e3, 3e3};
        const CdfCurve cdf = empirical_cdf(samples);
        REQUIRE(cdf.values_log10.size() == 3);
        // CDF at the 2 kohm sample = 2/3
        CHECK(cdf.values_log10[1] == doctest::Approx(std::log10(2e3)));
        CHECK(cdf.prob[1] == doctest::Approx(2.0 / 3.0));
        // CDF at the maximum sample = 1
        CHECK(cdf.prob.back() == doctest::Approx(1.0));
        // nondecreasing
        for (std::size_t i = 1; i < cdf.prob.size(); ++i) {
            CHECK(cdf.prob[i] >= cdf.prob[i - 1]);
            CHECK(cdf.values_log10[i] >= cdf.values_log10[i - 1]);
        }
    }
    SUBCASE("all-equal samples step at the common value") {
        const std::vector<double> samples(5, 12.5e3);
        const CdfCurve cdf = empirical_cdf(samples);
        CHECK(cdf.values_log10.front() == cdf.values_log10.back());
        CHECK(cdf.prob.back() == doctest::Approx(1.0));
    }
    SUBCASE("empty input rejected") {
        CHECK_THROWS_AS(empirical_cdf(std::vector<double>{}), Error);
    }
}

TEST_CASE("median_std_evolution on synthetic data") {
    SUBCASE("constant trajectories freeze the metrics") {
        const ReadoutMatrix m = synthetic_matrix(40, [](int, double) { return 4.4; });
        const auto stats = median_std_evolution(m, TargetState::Set);
        for (const auto& s : stats) {
            CHECK(s.median_log10 == doctest::Approx(4.4));
            CHECK(s.delta_median == doctest::Approx(0.0));
            CHECK(s.std_log10 == doctest::Approx(0.0));
        }
    }
    SUBCASE("log-drift data gives a median linear in log10 t") {
        const ReadoutMatrix m = synthetic_matrix(
            10, [](int, double t) { return 4.2 + 0.05 * std::log10(t / 1e-4); });
        const auto stats = median_std_evolution(m, TargetState::Set);
        for (const auto& s : stats) {
            CHECK(s.median_log10 ==
                  doctest::Approx(4.2 + 0.05 * std::log10(s.t_s / 1e-4)).epsilon(1e-12));
        }
        // delta median is relative to the first schedule readout
        CHECK(stats.front().delta_median == doctest::Approx(0.0));
        CHECK(stats.back().delta_median == doctest::Approx(0.2).epsilon(1e-9));
    }
    SUBCASE("insufficient data rejected") {
        const ReadoutMatrix m = synthetic_matrix(1, [](int, double) { return 4.4; });
        CHECK_THROWS_AS(median_std_evolution(m, TargetState::Set), Error);
    }
}

TEST_CASE("pearson correlation") {
    SUBCASE("hand oracle") {
        // x = [1,2,3], y = [1,2,4]: r = 9 / sqrt(84) = 0.981980...
        const std::vector<double> x = {1, 2, 3};
        const std::vector<double> y = {1, 2, 4};
        CHECK(pearson_of(x, y) == doctest::Approx(0.9819805060619659).epsilon(1e-12));
    }
    SUBCASE("perfect and inverse correlation") {
        const std::vector<double> x = {1, 2, 5, 9};
        std::vector<double> y = x;
        CHECK(pearson_of(x, y) == doctest::Approx(1.0));
        for (auto& v : y) v = -v;
        CHECK(pearson_of(x, y) == doctest::Approx(-1.0));
    }
    SUBCASE("invariant under positive affine transforms") {
        const std::vector<double> x = {1.3, 2.7, 3.1, 5.9, 4.4};
        const std::vector<double> y = {0.4, 1.9, 1.7, 3.8, 3.1};
        const double base = pearson_of(x, y);
        std::vector<double> xt(x.size());
        std::vector<double> yt(y.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            xt[i] = 2.5 * x[i] + 7.0;
            yt[i] = 0.3 * y[i] - 2.0;
        }
        CHECK(pearson_of(xt, yt) == doctest::Approx(base).epsilon(1e-12));
    }
    SUBCASE("zero variance rejected") {
        const std::vector<double> x = {1, 1, 1};
        const std::vector<double> y = {1, 2, 3};
        CHECK_THROWS_AS(pearson_of(x, y), Error);
    }
    SUBCASE("matrix-level pairing by trajectory") {
        const ReadoutMatrix m = synthetic_matrix(50, [](int traj, double t) {
            return 4.0 + 0.01 * traj + (t > 1e-3 ? 0.001 * (traj % 7) : 0.0);
        });
        const double r = pearson(m, TargetState::Set, 1, 5);
        CHECK(r > 0.99);
        CHECK(r <= 1.0);
    }
}

TEST_CASE("failed_fraction counts threshold violations") {
    ReadoutMatrix m;
    m.rows.push_back({0, 0, TargetState::Set, 0, 0.0, 10e3, true, 1});
    m.rows.push_back({0, 1, TargetState::Set, 0, 0.0, 15e3, true, 1});
    m.rows.push_back({0, 2, TargetState::Set, 0, 0.0, 25e3, false, 1});
    const auto points = failed_fraction(m, TargetState::Set, 20e3);
    REQUIRE(points.size() == 1);
    CHECK(points[0].fraction == doctest::Approx(1.0 / 3.0));

    // RESET fails below its threshold
    ReadoutMatrix hrs;
    hrs.rows.push_back({0, 0, TargetState::Reset, 1, 1e-4, 150e3, true, 1});
    hrs.rows.push_back({0, 1, TargetState::Reset, 1, 1e-4, 250e3, true, 1});
    const auto rp = failed_fraction(hrs, TargetState::Reset, 200e3);
    CHECK(rp[0].fraction == doctest::Approx(0.5));
}

TEST_CASE("fit_drift recovers noiseless laws exactly") {
    const std::vector<double> times = kPorTimes;

    SUBCASE("logarithmic") {
        std::vector<double> values;
        for (double t : times) values.push_back(4.2 + 0.05 * std::log10(t / 1e-4));
        const FitResult fit = fit_drift(times, values, FitLaw::Logarithmic);
        CHECK(fit.mu == doctest::Approx(0.05).epsilon(1e-9));
        CHECK(fit.r0 == doctest::Approx(4.2).epsilon(1e-9));
        CHECK(fit.r_square == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(fit.rms_error < 1e-9);
    }
    SUBCASE("linear") {
        std::vector<double> values;
        for (double t : times) values.push_back(4.0 + 0.3 * (t - 1e-4));
        const FitResult fit = fit_drift(times, values, FitLaw::Linear);
        CHECK(fit.mu == doctest::Approx(0.3).epsilon(1e-9));
        CHECK(fit.r0 == doctest::Approx(4.0).epsilon(1e-9));
        CHECK(fit.r_square == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("power") {
        std::vector<double> values;
        for (double t : times) values.push_back(4.1 * std::pow(t / 1e-4, 0.03));
        const FitResult fit = fit_drift(times, values, FitLaw::PowerLaw);
        CHECK(fit.mu == doctest::Approx(0.03).epsilon(1e-9));
        CHECK(fit.r0 == doctest::Approx(4.1).epsilon(1e-9));
        CHECK(fit.r_square == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("exponential") {
        std::vector<double> values;
        for (double t : times) values.push_back(4.3 * std::exp(0.08 * (t - 1e-4)));
        const FitResult fit = fit_drift(times, values, FitLaw::Exponential);
        CHECK(fit.mu == doctest::Approx(0.08).epsilon(1e-9));
        CHECK(fit.r0 == doctest::Approx(4.3).epsilon(1e-9));
        CHECK(fit.r_square == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("constant values: mu = 0 and r_square = 1 by convention") {
        const std::vector<double> values(times.size(), 4.4);
        for (FitLaw law : {FitLaw::Linear, FitLaw::Exponential, FitLaw::PowerLaw,
                           FitLaw::Logarithmic}) {
            const FitResult fit = fit_drift(times, values, law);
            CHECK(fit.mu == 0.0);
            CHECK(fit.r0 == doctest::Approx(4.4));
            CHECK(fit.r_square == 1.0);
            CHECK(fit.rms_error == 0.0);
        }
    }
    SUBCASE("preconditions") {
        const std::vector<double> two_t = {1e-4, 1e-3};
        const std::vector<double> two_v = {4.0, 4.1};
        CHECK_THROWS_AS(fit_drift(two_t, two_v, FitLaw::Linear), Error);
        const std::vector<double> bad_t = {0.0, 1e-3, 1e-2};
        const std::vector<double> v3 = {4.0, 4.1, 4.2};
        CHECK_THROWS_AS(fit_drift(bad_t, v3, FitLaw::Linear), Error);
    }
}

TEST_CASE("select_best_fit ranks the laws") {
    const std::vector<double> times = kPorTimes;

    SUBCASE("log-drift data puts Logarithmic first, Linear/Exponential behind") {
        std::vector<double> values;
        for (double t : times) values.push_back(4.2 + 0.06 * std::log10(t / 1e-4));
        const auto ranked = select_best_fit(times, values);
        REQUIRE(ranked.size() == 4);
        CHECK(ranked.front().law == FitLaw::Logarithmic);
        double log_r2 = 0.0;
        double lin_r2 = 0.0;
        double exp_r2 = 0.0;
        for (const auto& fit : ranked) {
            if (fit.law == FitLaw::Logarithmic) log_r2 = fit.r_square;
            if (fit.law == FitLaw::Linear) lin_r2 = fit.r_square;
            if (fit.law == FitLaw::Exponential) exp_r2 = fit.r_square;
        }
        CHECK(lin_r2 < log_r2);
        CHECK(exp_r2 < log_r2);
    }
    SUBCASE("power-law data puts PowerLaw first") {
        std::vector<double> values;
        for (double t : times) values.push_back(4.2 * std::pow(t / 1e-4, 0.03));
        const auto ranked = select_best_fit(times, values);
        CHECK(ranked.front().law == FitLaw::PowerLaw);
    }
    SUBCASE("short-window data scores both log-like laws high without forcing a winner") {
        // three decades only, tiny drift: log and power nearly coincide
        std::vector<double> short_times(times.begin(), times.begin() + 5);
        std::vector<double> values;
        for (double t : short_times) values.push_back(4.4 + 0.02 * std::log10(t / 1e-4));
        const auto ranked = select_best_fit(short_times, values);
        double log_r2 = 0.0;
        double pow_r2 = 0.0;
        for (const auto& fit : ranked) {
            if (fit.law == FitLaw::Logarithmic) log_r2 = fit.r_square;
            if (fit.law == FitLaw::PowerLaw) pow_r2 = fit.r_square;
        }
        CHECK(log_r2 > 0.99);
        CHECK(pow_r2 > 0.99);
    }
}

TEST_CASE("binned_fit and residual pipeline") {
    SUBCASE("n_bins = 1 reduces to the global median fit") {
        relax::RwdParams p;
        p.mu = 0.05;
        p.sigma_step = 0.03;
        p.r0_median = 4.4;
        p.r0_sigma = 0.08;
        const ReadoutMatrix m = relax::simulate_rwd(p, por(), 400, 11);
        const BinnedFit global = binned_fit(m, TargetState::Set, 1, FitLaw::Logarithmic, 0, 1);
        const auto stats = median_std_evolution(m, TargetState::Set);
        std::vector<double> times;
        std::vector<double> medians;
        for (const auto& s : stats) {
            times.push_back(s.t_s);
            medians.push_back(s.median_log10);
        }
        const FitResult direct = fit_drift(times, medians, FitLaw::Logarithmic);
        REQUIRE(global.per_bin.size() == 1);
        CHECK(global.per_bin[0].mu == doctest::Approx(direct.mu).epsilon(1e-12));
        CHECK(global.per_bin[0].r0 == doctest::Approx(direct.r0).epsilon(1e-12));
    }

    SUBCASE("R0-independent drift keeps the per-bin mu spread within noise") {
        relax::RwdParams p;
        p.mu = 0.05;
        p.sigma_step = 0.05;
        p.r0_median = 4.4;
        p.r0_sigma = 0.1;
        const ReadoutMatrix m = relax::simulate_rwd(p, por(), 600, 21);
        const BinnedFit fits = binned_fit(m, TargetState::Set, 10, FitLaw::Logarithmic, 120, 5);
        REQUIRE(fits.per_bin.size() == 10);
        // every bin recovers a mu consistent with its own bootstrap error
        double mu_mean = 0.0;
        for (const auto& fit : fits.per_bin) mu_mean += fit.mu;
        mu_mean /= 10.0;
        for (std::size_t b = 0; b < fits.per_bin.size(); ++b) {
            CHECK(std::abs(fits.per_bin[b].mu - mu_mean) <= 4.0 * fits.mu_boot_se[b]);
        }
    }

    SUBCASE("mu proportional to R0 is detected (negative control)") {
        bench::ReadoutSchedule schedule = por();
        ReadoutMatrix m;
        Rng rng(5);
        for (int traj = 0; traj < 600; ++traj) {
            const double y0 = 4.4 + 0.1 * rng.normal(0.0, 1.0);
            const double mu = 0.05 + 0.8 * (y0 - 4.4);  // drift tied to the start value
            double y = y0;
            double prev = std::log10(schedule.times_s[0]);
            for (std::size_t k = 0; k < schedule.size(); ++k) {
                const double lt = std::log10(schedule.times_s[k]);
                if (k > 0) y += mu * (lt - prev) + rng.normal(0.0, 0.02);
                prev = lt;
                m.rows.push_back({0, traj, TargetState::Set, static_cast<int>(k) + 1,
                                  schedule.times_s[k], std::pow(10.0, y), true, 1});
            }
        }
        const BinnedFit fits = binned_fit(m, TargetState::Set, 10, FitLaw::Logarithmic, 120, 7);
        double mu_mean = 0.0;
        for (const auto& fit : fits.per_bin) mu_mean += fit.mu;
        mu_mean /= 10.0;
        bool detected = false;
        for (std::size_t b = 0; b < fits.per_bin.size(); ++b) {
            if (std::abs(fits.per_bin[b].mu - mu_mean) > 3.0 * fits.mu_boot_se[b]) {
                detected = true;
            }
        }
        CHECK(detected);
    }

    SUBCASE("residuals of noiseless drift data vanish") {
        // identical trajectories: the fit reproduces the data exactly
        const ReadoutMatrix pure = synthetic_matrix(
            300, [](int, double t) { return 4.2 + 0.05 * std::log10(t / 1e-4); });
        const BinnedFit exact = binned_fit(pure, TargetState::Set, 10, FitLaw::Logarithmic, 0, 1);
        for (const auto& e : extract_residuals(pure, TargetState::Set, exact).entries) {
            CHECK(std::abs(e.residual) < 1e-9);
        }

        // per-trajectory offsets: per-readout residual means stay tiny
        const ReadoutMatrix m = synthetic_matrix(
            300, [](int traj, double t) {
                return 4.2 + 0.001 * (traj % 50) + 0.05 * std::log10(t / 1e-4);
            });
        const BinnedFit fits = binned_fit(m, TargetState::Set, 10, FitLaw::Logarithmic, 0, 1);
        const ResidualSeries res = extract_residuals(m, TargetState::Set, fits);
        const auto gate = zero_mean_test(res);
        for (const auto& row : gate) {
            CHECK(std::abs(row.mean) < 2e-3);
        }
    }

    SUBCASE("rwd residual variance grows with readout index") {
        int grew = 0;
        for (int seed = 0; seed < 10; ++seed) {
            relax::RwdParams p;
            p.mu = 0.04;
            p.sigma_step = 0.05;
            p.r0_median = 4.4;
            p.r0_sigma = 0.05;
            const ReadoutMatrix m = relax::simulate_rwd(p, por(), 400, 100 + seed);
            const BinnedFit fits =
                binned_fit(m, TargetState::Set, 10, FitLaw::Logarithmic, 0, 1);
            const ResidualSeries res = extract_residuals(m, TargetState::Set, fits);
            double var_first = 0.0;
            double var_last = 0.0;
            std::vector<double> first;
            std::vector<double> last;
            for (const auto& e : res.entries) {
                if (e.readout_index == 1) first.push_back(e.residual);
                if (e.readout_index == 9) last.push_back(e.residual);
            }
            var_first = sample_std(first);
            var_last = sample_std(last);
            if (var_last > var_first) ++grew;
        }
        CHECK(grew == 10);
    }
}

TEST_CASE("zero_mean_test gates") {
    SUBCASE("rwd residuals pass at every readout") {
        relax::RwdParams p;
        p.mu = 0.05;
        p.sigma_step = 0.05;
        p.r0_median = 4.4;
        p.r0_sigma = 0.1;
        const ReadoutMatrix m = relax::simulate_rwd(p, por(), 800, 3);
        const BinnedFit fits = binned_fit(m, TargetState::Set, 10, FitLaw::Logarithmic, 0, 1);
        const auto gate = zero_mean_test(extract_residuals(m, TargetState::Set, fits));
        int passed = 0;
        for (const auto& row : gate) passed += row.within_gate ? 1 : 0;
        CHECK(passed == static_cast<int>(gate.size()));
    }
    SUBCASE("a shifted residual cloud fails the gate") {
        relax::RwdParams p;
        p.mu = 0.0;
        p.sigma_step = 0.05;
        p.r0_median = 4.4;
        p.r0_sigma = 0.1;
        const ReadoutMatrix m = relax::simulate_rwd(p, por(), 400, 9);
        const BinnedFit fits = binned_fit(m, TargetState::Set, 10, FitLaw::Logarithmic, 0, 1);
        ResidualSeries res = extract_residuals(m, TargetState::Set, fits);
        for (auto& e : res.entries) e.residual += 0.1;
        const auto gate = zero_mean_test(res);
        for (const auto& row : gate) {
            CHECK_FALSE(row.within_gate);
        }
    }
    SUBCASE("single trajectory rejected") {
        ResidualSeries res;
        for (int k = 1; k <= 9; ++k) {
            res.entries.push_back({0, 0, k, kPorTimes[k - 1], 0.01});
        }
        CHECK_THROWS_AS(zero_mean_test(res), Error);
    }
}

TEST_CASE("subpopulation tracking") {
    SUBCASE("disjoint deciles at the reference readout") {
        relax::RwdParams p;
        p.mu = 0.0;
        p.sigma_step = 0.05;
        p.r0_median = 4.4;
        p.r0_sigma = 0.05;
        const ReadoutMatrix m = relax::simulate_rwd(p, por(), 500, 17);
        const SubpopulationTrack track = subpopulation_track(m, TargetState::Set);
        REQUIRE(track.snapshots.size() == kPorTimes.size());
        CHECK(track.snapshots.front().ks_top_low == doctest::Approx(1.0));
        CHECK(track.members_per_bin == 50);
    }

    SUBCASE("frozen trajectories keep their KS distances") {
        const ReadoutMatrix m = synthetic_matrix(
            400, [](int traj, double) { return 4.0 + 0.002 * traj; });
        const SubpopulationTrack track = subpopulation_track(m, TargetState::Set);
        for (const auto& snap : track.snapshots) {
            CHECK(snap.ks_top_low == doctest::Approx(track.snapshots.front().ks_top_low));
        }
    }

    SUBCASE("random-walk data mixes the tails (KS decreasing trend, 10 seeds)") {
        int decreasing = 0;
        for (int seed = 0; seed < 10; ++seed) {
            relax::RwdParams p;
            p.mu = 0.0;
            p.sigma_step = 0.05;
            p.r0_median = 4.4;
            p.r0_sigma = 0.05;
            const ReadoutMatrix m = relax::simulate_rwd(p, por(), 500, 40 + seed);
            const SubpopulationTrack track = subpopulation_track(m, TargetState::Set);
            std::vector<double> ks;
            std::vector<double> order;
            for (const auto& snap : track.snapshots) {
                ks.push_back(snap.ks_top_low);
                order.push_back(static_cast<double>(order.size()));
            }
            // strong downward trend over the nine readouts
            if (spearman_rank(order, ks) < -0.9 && ks.back() < ks.front()) ++decreasing;
        }
        CHECK(decreasing >= 8);
    }

    SUBCASE("membership union is constant across readouts") {
        relax::RwdParams p;
        p.mu = 0.02;
        p.sigma_step = 0.04;
        p.r0_median = 4.4;
        p.r0_sigma = 0.06;
        const ReadoutMatrix m = relax::simulate_rwd(p, por(), 400, 23);
        const SubpopulationTrack track = subpopulation_track(m, TargetState::Set);
        for (const auto& snap : track.snapshots) {
            CHECK(snap.top.values_log10.size() == track.members_per_bin);
            CHECK(snap.mid.values_log10.size() == track.members_per_bin);
            CHECK(snap.low.values_log10.size() == track.members_per_bin);
        }
    }

    SUBCASE("too few trajectories rejected") {
        relax::RwdParams p;
        const ReadoutMatrix m = relax::simulate_rwd(p, por(), 100, 2);
        CHECK_THROWS_AS(subpopulation_track(m, TargetState::Set), Error);
    }
}

TEST_CASE("ks_distance and spearman helpers") {
    // identical samples -> 0
    std::vector<double> a = {1, 2, 3, 4, 5};
    CHECK(ks_distance(a, a) == doctest::Approx(0.0));
    // disjoint supports -> 1
    std::vector<double> b = {10, 11, 12};
    CHECK(ks_distance(a, b) == doctest::Approx(1.0));
    // shifted halves
    std::vector<double> c = {1, 2, 3, 10, 11, 12};
    CHECK(ks_distance(a, c) > 0.0);

    const std::vector<double> x = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::vector<double> monotone;
    for (double v : x) monotone.push_back(std::exp(v));
    CHECK(spearman_rank(x, monotone) == doctest::Approx(1.0));
    std::vector<double> tied = {1, 1, 1, 2, 3, 4, 5, 6, 7};
    CHECK(spearman_rank(x, tied) > 0.95);
}
