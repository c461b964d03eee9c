#pragma once

#include <cmath>
#include <cstdint>
#include <optional>

#include "qcoex/bb84.hpp"
#include "qcoex/detection.hpp"
#include "qcoex/emitter.hpp"
#include "qcoex/errors.hpp"
#include "qcoex/link.hpp"
#include "qcoex/montecarlo.hpp"
#include "qcoex/spectrum.hpp"
#include "qcoex/units.hpp"

namespace qcoex {

// Receiver-side protocol and post-processing choices.
struct ProtocolParams {
    double window_fraction = 0.5;
    double signal_window_acceptance = 1.0;  // signal fraction inside the window
    double sift_factor = 0.5;               // P(arriving photon projects onto the detector)
    Basis receiver_basis = Basis::circular;
    int receiver_bit = 0;
    double qber_threshold = 0.11;
    DistillationModel distillation = DistillationModel::ideal_asymptotic();
    std::size_t frame_length = 1024;
    std::uint64_t pattern_seed = 20260817;  // public pattern; independent of run seeds
};

// Classical OOK channel at the short wavelength. The receive bandpass is
// a spectral guard; no in-model light falls outside it, so only its width
// is recorded.
struct ClassicalChannel {
    Wavelength wavelength = Wavelength::from_nm(852.0);
    PinTiaSpec receiver;
    double bandpass_width_nm = 7.0;
};

enum class ChannelConfig { back_to_back, fiber };

// Complete bidirectional-coexistence link model. Fields marked
// "calibrated" are normally filled by calibrate_all against the anchor
// measurements; until then they hold placeholder zeros.
struct SystemModel {
    EmitterSpec emitter;
    double drive_current_ma = 20.0;
    TxBudget tx;                        // tx_path_loss_db: calibrated
    FiberSpec fiber;
    WdmSpec wdm;                        // classical_to_quantum_isolation_db: calibrated
    FlatTopFilter cleanup_filter = FlatTopFilter::from_width_ghz(
        Wavelength::from_nm(1550.12), 200.0, 1.5, 40.0);
    double rx_link_loss_db = 0.0;       // calibrated: demux-to-detector residual
    SpadSpec spad;
    ClassicalChannel classical;         // receiver.noise_current_rms_a: calibrated
    RamanModel raman;                   // beta: calibrated
    double e_opt = 0.0;                 // calibrated intrinsic polarization error
    ProtocolParams protocol;

    // Mean photon number per symbol at the transmitter output.
    double mu_tx() const { return mean_photons_per_symbol(emitter, tx, drive_current_ma); }

    // Quantum receive-path loss after the transmitter, in dB. The quantum
    // budget is held fixed across channel configurations: rx_link_loss_db
    // absorbs the span-dependent part at calibration time, so inserting
    // the fiber changes only the noise environment, not the signal.
    double quantum_path_loss_db() const {
        return wdm.mux_insertion_loss_quantum_db + cleanup_filter.insertion_loss_db() +
               rx_link_loss_db;
    }

    double mu_arrival() const {
        return mu_tx() * transmittance_from_loss_db(quantum_path_loss_db());
    }

    // Classical path loss from launch to the classical receiver (ROP
    // plane): lumped mux/demux insertion plus fiber attenuation.
    double classical_path_loss_db(ChannelConfig cfg) const {
        double loss = wdm.mux_insertion_loss_classical_db;
        if (cfg == ChannelConfig::fiber)
            loss += fiber.loss_db(true);
        return loss;
    }

    double classical_launch_dbm(ChannelConfig cfg, double rop_dbm) const {
        return rop_dbm + classical_path_loss_db(cfg);
    }
};

// Analytic quantum operating point at one classical power setting.
struct QuantumOperatingPoint {
    double mu_tx = 0.0;
    double mu_arrival = 0.0;
    double raman_photon_cps = 0.0;      // receiver-input photon rates
    double leakage_photon_cps = 0.0;
    WindowRates rates;
    double observed_rate_cps = 0.0;     // in-window, dead-time corrected
    double qber = 0.0;
    double secure_rate_bps = 0.0;
};

// rop_dbm empty means the classical transmitter is off.
inline QuantumOperatingPoint evaluate_quantum(const SystemModel& m, ChannelConfig cfg,
                                              std::optional<double> rop_dbm) {
    QuantumOperatingPoint op;
    op.mu_tx = m.mu_tx();
    op.mu_arrival = m.mu_arrival();

    if (rop_dbm.has_value()) {
        const PowerLevel rop = PowerLevel::from_dbm(*rop_dbm);
        // Calibrated isolation is referenced to the ROP plane.
        op.leakage_photon_cps =
            leakage_noise_rate_cps(m.wdm, rop, m.cleanup_filter, m.classical.wavelength);
        if (cfg == ChannelConfig::fiber) {
            const PowerLevel launch =
                PowerLevel::from_dbm(m.classical_launch_dbm(cfg, *rop_dbm));
            op.raman_photon_cps = raman_noise_rate_cps(m.raman, launch, m.fiber,
                                                       m.cleanup_filter.width_nm());
        }
    }

    op.rates = expected_window_rates(
        op.mu_arrival, m.spad, m.tx.symbol_rate_baud, m.protocol.window_fraction,
        op.raman_photon_cps + op.leakage_photon_cps, m.protocol.sift_factor,
        m.protocol.signal_window_acceptance);
    op.observed_rate_cps = op.rates.observed_in_window_cps(m.spad.dead_time_s);
    op.qber = qber_analytic(op.rates.signal_in_window_cps,
                            op.rates.dark_in_window_cps + op.rates.noise_in_window_cps,
                            m.e_opt);
    op.secure_rate_bps =
        secure_key_rate_bps(op.observed_rate_cps, op.qber, m.protocol.distillation);
    return op;
}

// Joint operating point of both channels at one received classical power.
struct CoexPoint {
    double rop_dbm = 0.0;
    double launch_dbm = 0.0;
    QuantumOperatingPoint quantum;
    double classical_ber = 0.0;
};

inline CoexPoint evaluate_coexistence(const SystemModel& m, ChannelConfig cfg,
                                      double rop_dbm) {
    CoexPoint p;
    p.rop_dbm = rop_dbm;
    p.launch_dbm = m.classical_launch_dbm(cfg, rop_dbm);
    p.quantum = evaluate_quantum(m, cfg, rop_dbm);
    p.classical_ber = classical_ber(m.classical.receiver, PowerLevel::from_dbm(rop_dbm));
    return p;
}

// ROP at which the QBER reaches the threshold, by bisection on the
// monotone QBER(ROP) map. Throws UncoveredRangeError when the bracket
// does not straddle the threshold.
inline double find_qber_crossing_rop_dbm(const SystemModel& m, ChannelConfig cfg,
                                         double threshold, double lo_dbm, double hi_dbm) {
    if (!(lo_dbm < hi_dbm))
        throw DomainError("find_qber_crossing_rop_dbm: need lo < hi");
    const auto qber_at = [&](double rop) { return evaluate_quantum(m, cfg, rop).qber; };
    double q_lo = qber_at(lo_dbm);
    double q_hi = qber_at(hi_dbm);
    if (q_lo >= threshold)
        throw UncoveredRangeError(
            "find_qber_crossing_rop_dbm: QBER already above threshold at range start");
    if (q_hi < threshold)
        throw UncoveredRangeError(
            "find_qber_crossing_rop_dbm: QBER never reaches threshold in range");
    double lo = lo_dbm;
    double hi = hi_dbm;
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        (qber_at(mid) < threshold ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Builds a Monte Carlo acquisition matching the analytic operating point.
inline RunConfig make_run_config(const SystemModel& m, ChannelConfig cfg,
                                 std::optional<double> rop_dbm, std::uint64_t n_symbols,
                                 std::uint64_t seed, std::uint64_t clock_phase_ps = 0,
                                 unsigned threads = 0) {
    const QuantumOperatingPoint op = evaluate_quantum(m, cfg, rop_dbm);
    RunConfig rc;
    rc.seed = seed;
    rc.n_symbols = n_symbols;
    rc.symbol_period_ps = static_cast<std::uint64_t>(
        std::llround(1.0e12 / m.tx.symbol_rate_baud));
    rc.clock_phase_ps = clock_phase_ps;
    rc.frame = make_random_frame(m.protocol.frame_length, m.protocol.pattern_seed);
    rc.physics.mu_arrival = op.mu_arrival;
    rc.physics.spad = m.spad;
    rc.physics.raman_photon_cps = op.raman_photon_cps;
    rc.physics.leakage_photon_cps = op.leakage_photon_cps;
    rc.physics.e_opt = m.e_opt;
    rc.physics.window_fraction = m.protocol.window_fraction;
    rc.physics.signal_window_acceptance = m.protocol.signal_window_acceptance;
    rc.physics.receiver_basis = m.protocol.receiver_basis;
    rc.physics.receiver_bit = m.protocol.receiver_bit;
    rc.threads = threads;
    return rc;
}

} // namespace qcoex
