#include "oxsim/hourglass.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "oxsim/constants.hpp"
#include "oxsim/errors.hpp"

namespace oxsim::hourglass {

namespace {

double softplus(double x) {
    if (x > 35.0) return x;
    if (x < -35.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

/// Rate exponents are clamped so that a strongly over-driven cell saturates
/// at a finite (instantaneous) rate instead of overflowing.
double bounded_exp(double exponent) { return std::exp(std::min(exponent, 200.0)); }

}  // namespace

void HourglassParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) {
            throw Error(Errc::ConfigError, std::string(name) + " must be > 0");
        }
    };
    positive(e_a_ev, "e_a_ev");
    positive(attempt_rate, "attempt_rate");
    positive(omega_y_min, "omega_y_min");
    positive(omega_x, "omega_x");
    positive(m_eff, "m_eff");
    positive(r_th, "r_th");
    positive(t_ambient, "t_ambient");
    positive(v_forming_mean, "v_forming_mean");
    if (v_forming_sigma < 0.0) {
        throw Error(Errc::ConfigError, "v_forming_sigma must be >= 0");
    }
    if (alpha0 <= 0.0 || m_n < 0.0) {
        throw Error(Errc::ConfigError, "alpha0 must be > 0 and m_n >= 0");
    }
    if (n_tr_cap < 1 || n_br_cap < 1) {
        throw Error(Errc::ConfigError, "reservoir capacities must be >= 1");
    }
    if (n_c_min < 1) {
        throw Error(Errc::ConfigError, "n_c_min must be >= 1");
    }
    if (n_total < n_tr_cap + n_br_cap + n_c_min) {
        throw Error(Errc::ConfigError,
                    "n_total too small: reservoirs full would push n_C below n_c_min");
    }
    if (n_total > n_tr_cap + n_br_cap + kMaxConstriction) {
        throw Error(Errc::ConfigError, "n_total exceeds the practical constriction cap");
    }
}

std::vector<double> mode_energies(int n_c, double v, const HourglassParams& p) {
    const double av = std::abs(v);
    const double ev0 = kElementaryCharge * av;
    const double hbar_wy = kHbar * p.omega_y_min / static_cast<double>(n_c);
    const double cutoff = 0.5 * kElementaryCharge * av + 10.0 * kHbar * p.omega_x;
    std::vector<double> energies;
    for (int n = 0;; ++n) {
        const double e_n = ev0 + hbar_wy * (static_cast<double>(n) + 0.5);
        if (n > 0 && e_n > cutoff) break;
        energies.push_back(e_n);
    }
    return energies;
}

double conduction_current(double v, int n_c, const HourglassParams& p) {
    if (v == 0.0) return 0.0;
    const double av = std::abs(v);
    const double ev0 = kElementaryCharge * av;
    const double half_window = 0.5 * kElementaryCharge * av;
    const double s = kHbar * p.omega_x / (2.0 * kPi);  // transmission energy scale, J
    const double hbar_wy = kHbar * p.omega_y_min / static_cast<double>(n_c);
    const double cutoff = half_window + 10.0 * kHbar * p.omega_x;

    double integral = 0.0;  // sum over modes of the windowed transmission, J
    for (int n = 0;; ++n) {
        const double e_n = ev0 + hbar_wy * (static_cast<double>(n) + 0.5);
        if (n > 0 && e_n > cutoff) break;
        integral +=
            s * (softplus((half_window - e_n) / s) - softplus((-half_window - e_n) / s));
    }
    const double magnitude = (2.0 * kElementaryCharge / kPlanck) * integral;
    return v > 0.0 ? magnitude : -magnitude;
}

double resistance_of(int n_c, const HourglassParams& p) {
    return kReadVoltage / conduction_current(kReadVoltage, n_c, p);
}

double read_resistance(const CellState& state, const HourglassParams& p) {
    if (!state.formed) {
        throw Error(Errc::Unformed, "read_resistance requires a formed cell");
    }
    return resistance_of(state.n_c, p);
}

double barrier_alpha(int n_c, const HourglassParams& p) {
    return p.alpha0 + p.m_n / static_cast<double>(n_c);
}

double local_temperature(double v, double i, int n_c, const HourglassParams& p) {
    const double alpha = barrier_alpha(n_c, p);
    return p.t_ambient + (alpha * v * i / static_cast<double>(n_c)) * p.r_th;
}

RateSet transition_rates(const CellState& state, double v, double t_kelvin,
                         const HourglassParams& p) {
    const double f_tr = static_cast<double>(state.n_tr) / static_cast<double>(p.n_tr_cap);
    const double f_br = static_cast<double>(state.n_br) / static_cast<double>(p.n_br_cap);
    const double alpha = barrier_alpha(state.n_c, p);
    const double kt_ev = kBoltzmann * t_kelvin / kElementaryCharge;
    const double assisted = bounded_exp(-(p.e_a_ev - alpha * v) / kt_ev);
    const double opposed = bounded_exp(-(p.e_a_ev + alpha * v) / kt_ev);
    const double base = p.attempt_rate * static_cast<double>(state.n_c);

    RateSet rates;
    rates.r1 = base * (1.0 - f_tr) * assisted;
    rates.r2 = base * f_tr * opposed;
    rates.r3 = base * f_br * assisted;
    rates.r4 = base * (1.0 - f_br) * opposed;
    return rates;
}

BiasModel direct_bias(const HourglassParams& p) {
    return [p](double v_applied, const CellState& state) {
        return BiasPoint{v_applied, conduction_current(v_applied, state.n_c, p)};
    };
}

BiasModel ideal_compliance_bias(const HourglassParams& p, double compliance_a) {
    // Resistance lookup by n_C; the divider works with the read-scale R.
    auto table = std::make_shared<std::vector<double>>();
    table->resize(static_cast<std::size_t>(p.n_total) + 1, 0.0);
    for (int n_c = 1; n_c <= p.n_total; ++n_c) {
        (*table)[static_cast<std::size_t>(n_c)] = resistance_of(n_c, p);
    }
    return [table, compliance_a](double v_applied, const CellState& state) {
        const double r_cell = (*table)[static_cast<std::size_t>(state.n_c)];
        const double sign = v_applied < 0.0 ? -1.0 : 1.0;
        const double v_rme = sign * std::min(std::abs(v_applied), compliance_a * r_cell);
        return BiasPoint{v_rme, v_rme / r_cell};
    };
}

long advance(CellState& state, double v_applied, double dt, const BiasModel& bias,
             const HourglassParams& p, Rng& rng) {
    if (!state.formed) {
        throw Error(Errc::Unformed, "advance requires a formed cell");
    }
    double t = 0.0;
    long fired = 0;
    for (;;) {
        const BiasPoint bp = bias(v_applied, state);
        const double t_local = local_temperature(bp.v_rme, bp.i, state.n_c, p);
        const RateSet rates = transition_rates(state, bp.v_rme, t_local, p);

        // Event table; the n_C floor suppresses constriction-draining events.
        const bool above_floor = state.n_c > p.n_c_min;
        const double r[4] = {above_floor ? rates.r1 : 0.0, rates.r2, rates.r3,
                             above_floor ? rates.r4 : 0.0};
        const double lambda = r[0] + r[1] + r[2] + r[3];
        if (lambda <= 0.0) break;

        const double wait = rng.exponential(lambda);
        if (t + wait >= dt) break;
        t += wait;

        double u = rng.uniform() * lambda;
        int event = -1;
        for (int k = 0; k < 4; ++k) {
            if (r[k] <= 0.0) continue;
            if (u < r[k] || k == 3) {
                event = k;
                break;
            }
            u -= r[k];
        }
        if (event == -1) {  // rounding fell past the last positive channel
            for (int k = 3; k >= 0; --k) {
                if (r[k] > 0.0) {
                    event = k;
                    break;
                }
            }
        }
        switch (event) {
            case 0: --state.n_c; ++state.n_tr; break;  // C -> TR
            case 1: --state.n_tr; ++state.n_c; break;  // TR -> C
            case 2: --state.n_br; ++state.n_c; break;  // BR -> C
            case 3: --state.n_c; ++state.n_br; break;  // C -> BR
            default: break;
        }
        ++fired;
    }
    return fired;
}

long kmc_step(CellState& state, double v, double dt, const HourglassParams& p, Rng& rng) {
    return advance(state, v, dt, direct_bias(p), p, rng);
}

void apply_waveform(CellState& state, const pulse::Waveform& w, const BiasModel& bias,
                    const HourglassParams& p, Rng& rng, std::vector<TracePoint>* trace) {
    const auto& points = w.breakpoints;
    for (std::size_t i = 1; i < points.size(); ++i) {
        const double t0 = points[i - 1].time_s;
        const double t1 = points[i].time_s;
        const double v0 = points[i - 1].voltage_v;
        const double v1 = points[i].voltage_v;
        const double dv = std::abs(v1 - v0);
        const int substeps = std::max(1, static_cast<int>(std::ceil(dv / kMaxSubstepDeltaV)));
        const double sub_dt = (t1 - t0) / substeps;
        for (int k = 0; k < substeps; ++k) {
            const double frac = (static_cast<double>(k) + 0.5) / substeps;
            const double v_applied = v0 + frac * (v1 - v0);
            advance(state, v_applied, sub_dt, bias, p, rng);
            if (trace != nullptr) {
                const BiasPoint bp = bias(v_applied, state);
                trace->push_back({t0 + (k + 1) * sub_dt, bp.v_rme, bp.i, state.n_tr, state.n_c,
                                  state.n_br});
            }
        }
    }
}

void apply_waveform(CellState& state, const pulse::Waveform& w, double compliance_a,
                    const HourglassParams& p, Rng& rng, std::vector<TracePoint>* trace) {
    apply_waveform(state, w, ideal_compliance_bias(p, compliance_a), p, rng, trace);
}

int constriction_for_resistance(double r_target_ohm, const HourglassParams& p) {
    const int lo = std::max(p.n_c_min, p.n_total - p.n_tr_cap - p.n_br_cap);
    const double target_log = std::log10(r_target_ohm);
    int best = lo;
    double best_err = std::abs(std::log10(resistance_of(lo, p)) - target_log);
    for (int n_c = lo + 1; n_c <= p.n_total; ++n_c) {
        const double err = std::abs(std::log10(resistance_of(n_c, p)) - target_log);
        if (err < best_err) {
            best = n_c;
            best_err = err;
        }
    }
    return best;
}

CellState form(const HourglassParams& p, double ramp_top_v, double compliance_a, Rng& rng) {
    const double v_f = rng.normal(p.v_forming_mean, p.v_forming_sigma);
    if (ramp_top_v < v_f) {
        throw Error(Errc::FormingFailed, "forming ramp topped out below the sampled V_f");
    }
    // Soft breakdown: the fresh filament's constriction matches the
    // compliance-limited LRS; the top reservoir fills first.
    CellState state;
    state.formed = true;
    state.n_c = constriction_for_resistance(1.0 / compliance_a, p);
    state.n_tr = std::min(p.n_tr_cap, p.n_total - state.n_c);
    state.n_br = p.n_total - state.n_c - state.n_tr;
    return state;
}

}  // namespace oxsim::hourglass
