#pragma once

#include <functional>
#include <string>
#include <vector>

#include "oxsim/pulse_engine.hpp"
#include "oxsim/rng.hpp"

namespace oxsim::hourglass {

/// Model constants of the hourglass filament: QPC conduction, vacancy
/// exchange kinetics, thermal feedback and forming statistics. Energies in
/// eV, frequencies in rad/s, everything else SI.
struct HourglassParams {
    double e_a_ev = 0.65;        // activation energy of a vacancy hop
    double alpha0 = 0.15;        // field-coupling offset
    double m_n = 3.0;            // constriction coupling constant
    double attempt_rate = 1e13;  // prefactor c, 1/s

    int n_tr_cap = 10;   // top reservoir capacity N_TR
    int n_br_cap = 46;   // bottom reservoir capacity N_BR
    int n_total = 60;    // conserved vacancy count
    int n_c_min = 1;     // constriction floor once formed

    double omega_y_min = 2.0e16;  // transverse confinement at n_C = 1, rad/s
    double omega_x = 2.4e15;      // longitudinal barrier curvature, rad/s
    double m_eff = 9.11e-31;      // effective mass, kg
    double r_th = 5e7;            // thermal resistance, K/W
    double t_ambient = 298.0;     // K

    double v_forming_mean = 3.2;   // V
    double v_forming_sigma = 0.08; // V

    /// Throws ConfigError when a constant is non-physical or the vacancy
    /// budget cannot satisfy the reservoir/constriction bounds.
    void validate() const;
};

/// Highest constriction occupancy the validator admits
/// (n_total <= N_TR + N_BR + kMaxConstriction).
inline constexpr int kMaxConstriction = 256;

/// Vacancy occupancies of the filament. n_TR + n_BR + n_C == n_total is
/// preserved by every operation once formed.
struct CellState {
    int n_tr = 0;
    int n_br = 0;
    int n_c = 0;
    bool formed = false;

    [[nodiscard]] int total() const { return n_tr + n_br + n_c; }
};

/// The four event rates 1/tau1..1/tau4 (1/s):
///   r1: C -> TR   gated by free TR space,  field-assisted for V > 0
///   r2: TR -> C   gated by TR filling,     field-assisted for V < 0
///   r3: BR -> C   gated by BR filling,     field-assisted for V > 0
///   r4: C -> BR   gated by free BR space,  field-assisted for V < 0
struct RateSet {
    double r1 = 0.0;
    double r2 = 0.0;
    double r3 = 0.0;
    double r4 = 0.0;

    [[nodiscard]] double total() const { return r1 + r2 + r3 + r4; }
};

/// Transverse mode energies E_n = eV0 + hbar*omega_y(n_C)*(n + 1/2) in
/// joules, with omega_y(n_C) = omega_y_min / n_C. The list always contains
/// the fundamental mode and is truncated once E_n exceeds the bias window
/// top by 10*hbar*omega_x.
std::vector<double> mode_energies(int n_c, double v, const HourglassParams& p);

/// Landauer current through the constriction: saddle-point transmission per
/// mode integrated over the symmetric bias window [-qV/2, +qV/2]. Odd in V,
/// strictly increasing in n_C for V > 0.
double conduction_current(double v, int n_c, const HourglassParams& p);

/// Bit-line read at 0.1 V.
inline constexpr double kReadVoltage = 0.1;

/// R = 0.1 V / I(0.1 V, n_C); strictly decreasing in n_C.
double resistance_of(int n_c, const HourglassParams& p);

/// Same as resistance_of but requires a formed cell (throws Unformed).
double read_resistance(const CellState& state, const HourglassParams& p);

/// Constriction-dependent barrier lowering alpha = alpha0 + m_n / n_C.
double barrier_alpha(int n_c, const HourglassParams& p);

/// Local filament temperature T = T_ambient + (alpha*V*I/n_C)*R_th.
double local_temperature(double v, double i, int n_c, const HourglassParams& p);

/// The four kinetic rates at the given RME bias and temperature.
RateSet transition_rates(const CellState& state, double v, double t_kelvin,
                         const HourglassParams& p);

/// Voltage/current operating point seen by the cell for a given applied
/// bias. Implementations resolve compliance and series-partition effects.
struct BiasPoint {
    double v_rme = 0.0;
    double i = 0.0;
};

using BiasModel = std::function<BiasPoint(double v_applied, const CellState& state)>;

/// Direct bias: the applied voltage lands on the RME unattenuated.
BiasModel direct_bias(const HourglassParams& p);

/// Ideal current limiter: V_RME = V_applied until the cell would draw more
/// than the compliance current, then V_RME = I_comp * R(n_C).
BiasModel ideal_compliance_bias(const HourglassParams& p, double compliance_a);

/// Gillespie update over a fixed-bias interval. Rates, self-heating and the
/// bias point are recomputed after every fired event; each event moves one
/// vacancy and respects the n_C floor and reservoir capacities. Returns the
/// number of fired events.
long advance(CellState& state, double v_applied, double dt, const BiasModel& bias,
             const HourglassParams& p, Rng& rng);

/// advance() with the bias applied directly across the RME.
long kmc_step(CellState& state, double v, double dt, const HourglassParams& p, Rng& rng);

struct TracePoint {
    double t_s = 0.0;
    double v_rme_v = 0.0;
    double i_a = 0.0;
    int n_tr = 0;
    int n_c = 0;
    int n_br = 0;
};

/// Drives the cell with a piecewise-linear waveform. Ramps are discretized
/// into substeps of at most kMaxSubstepDeltaV applied-voltage change; within
/// a substep the event loop recomputes the bias point per event.
/// Appends one trace sample per substep when trace is non-null.
void apply_waveform(CellState& state, const pulse::Waveform& w, const BiasModel& bias,
                    const HourglassParams& p, Rng& rng,
                    std::vector<TracePoint>* trace = nullptr);

/// Spec-level overload with an ideal compliance limiter.
void apply_waveform(CellState& state, const pulse::Waveform& w, double compliance_a,
                    const HourglassParams& p, Rng& rng,
                    std::vector<TracePoint>* trace = nullptr);

inline constexpr double kMaxSubstepDeltaV = 0.010;  // V

/// Pre-forming leakage of the pristine stack.
inline constexpr double kPristineLeakage = 1e-10;  // A

/// DC forming ramp: pristine leakage until the per-cell forming voltage
/// (drawn from N(v_forming_mean, v_forming_sigma)) is exceeded, then the
/// filament appears with n_C matched to the compliance-limited LRS.
/// Throws FormingFailed when the ramp tops out below the sampled V_f.
CellState form(const HourglassParams& p, double ramp_top_v, double compliance_a, Rng& rng);

/// n_C whose read resistance is closest (in log10) to the target.
int constriction_for_resistance(double r_target_ohm, const HourglassParams& p);

}  // namespace oxsim::hourglass
