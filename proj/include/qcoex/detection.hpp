#pragma once

#include <cmath>

#include "qcoex/errors.hpp"
#include "qcoex/units.hpp"

namespace qcoex {

// Single-photon avalanche diode, non-paralyzable dead-time model.
struct SpadSpec {
    double efficiency = 0.10;
    double dead_time_s = 25.0e-6;
    double dark_rate_cps = 485.0;

    void validate() const {
        if (!(efficiency >= 0.0 && efficiency <= 1.0))
            throw DomainError("SpadSpec: efficiency must be in [0, 1]");
        if (!(dead_time_s >= 0.0) || !std::isfinite(dead_time_s))
            throw DomainError("SpadSpec: dead time must be finite and >= 0");
        if (!(dark_rate_cps >= 0.0) || !std::isfinite(dark_rate_cps))
            throw DomainError("SpadSpec: dark rate must be finite and >= 0");
    }
};

// Observed rate of a non-paralyzable counter fed a Poissonian true rate:
//   R_obs = R / (1 + R * tau).   Saturates at 1/tau.
inline double dead_time_observed_rate(double true_rate_cps, double dead_time_s) {
    if (!(true_rate_cps >= 0.0) || !std::isfinite(true_rate_cps))
        throw DomainError("dead_time_observed_rate: rate must be finite and >= 0");
    if (!(dead_time_s >= 0.0) || !std::isfinite(dead_time_s))
        throw DomainError("dead_time_observed_rate: dead time must be finite and >= 0");
    return true_rate_cps / (1.0 + true_rate_cps * dead_time_s);
}

// Inverse of the dead-time law. Throws when the observed rate is at or
// beyond the 1/tau saturation ceiling.
inline double dead_time_true_rate(double observed_rate_cps, double dead_time_s) {
    if (!(observed_rate_cps >= 0.0) || !std::isfinite(observed_rate_cps))
        throw DomainError("dead_time_true_rate: rate must be finite and >= 0");
    if (!(dead_time_s >= 0.0) || !std::isfinite(dead_time_s))
        throw DomainError("dead_time_true_rate: dead time must be finite and >= 0");
    const double x = observed_rate_cps * dead_time_s;
    if (x >= 1.0)
        throw DomainError("dead_time_true_rate: observed rate at or above 1/tau saturation");
    return observed_rate_cps / (1.0 - x);
}

// PIN photodiode + transimpedance amplifier for OOK reception.
struct PinTiaSpec {
    double responsivity_a_per_w = 0.56;
    double noise_current_rms_a = 0.0;

    void validate() const {
        if (!(responsivity_a_per_w > 0.0))
            throw DomainError("PinTiaSpec: responsivity must be > 0");
        if (!(noise_current_rms_a >= 0.0))
            throw DomainError("PinTiaSpec: noise current must be >= 0");
    }
};

// OOK bit error rate under additive Gaussian noise:
//   Q = responsivity * P_avg / sigma,   BER = erfc(Q / sqrt(2)) / 2.
inline double classical_ber(const PinTiaSpec& rx, PowerLevel received) {
    rx.validate();
    if (!(rx.noise_current_rms_a > 0.0))
        throw DomainError("classical_ber: noise current must be > 0");
    const double q = rx.responsivity_a_per_w * received.watts() / rx.noise_current_rms_a;
    return 0.5 * std::erfc(q / std::sqrt(2.0));
}

// Q factor that produces the target BER, by bisection on the strictly
// decreasing map Q -> erfc(Q/sqrt 2)/2. Valid targets lie in (0, 0.5).
inline double q_factor_for_ber(double target_ber) {
    if (!(target_ber > 0.0 && target_ber < 0.5))
        throw DomainError("q_factor_for_ber: target must be in (0, 0.5)");
    double lo = 0.0;
    double hi = 50.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double ber = 0.5 * std::erfc(mid / std::sqrt(2.0));
        (ber > target_ber ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// RMS noise current (A) such that the receiver reaches target_ber exactly
// at the given sensitivity power.
inline double calibrate_rx_noise(const PinTiaSpec& rx, PowerLevel sensitivity,
                                 double target_ber) {
    rx.validate();
    if (!(sensitivity.watts() > 0.0))
        throw InfeasibleCalibration("rx_noise",
                                    "calibrate_rx_noise: sensitivity power must be > 0");
    const double q = q_factor_for_ber(target_ber);
    return rx.responsivity_a_per_w * sensitivity.watts() / q;
}

// Expected single-photon counting rates, split by origin, for a receiver
// that accepts a centered temporal window covering window_fraction of each
// symbol period. All inputs are rates at the detector input; the SPAD
// efficiency applies to photon rates (signal and optical noise), not to
// dark counts. sift_factor is the probability that an arriving signal
// photon projects onto the monitored detector at all.
struct WindowRates {
    double signal_in_window_cps = 0.0;   // signal clicks inside the window
    double signal_full_cps = 0.0;        // all signal clicks at the detector
    double dark_in_window_cps = 0.0;
    double noise_in_window_cps = 0.0;    // optical background inside the window
    double detector_total_cps = 0.0;     // everything hitting the counter, full time

    double in_window_total_cps() const noexcept {
        return signal_in_window_cps + dark_in_window_cps + noise_in_window_cps;
    }

    // Dead-time survival is governed by the full stream; the surviving
    // fraction applies uniformly to the in-window subset.
    double observed_in_window_cps(double dead_time_s) const {
        if (!(dead_time_s >= 0.0) || !std::isfinite(dead_time_s))
            throw DomainError("WindowRates: dead time must be finite and >= 0");
        return in_window_total_cps() / (1.0 + detector_total_cps * dead_time_s);
    }
};

inline WindowRates expected_window_rates(double mu_arrival, const SpadSpec& spad,
                                         double symbol_rate_baud, double window_fraction,
                                         double optical_noise_photon_cps, double sift_factor,
                                         double signal_window_acceptance = 1.0) {
    spad.validate();
    if (!(mu_arrival >= 0.0) || !std::isfinite(mu_arrival))
        throw DomainError("expected_window_rates: mu must be finite and >= 0");
    if (!(symbol_rate_baud > 0.0))
        throw DomainError("expected_window_rates: symbol rate must be > 0");
    if (!(window_fraction > 0.0 && window_fraction <= 1.0))
        throw DomainError("expected_window_rates: window fraction must be in (0, 1]");
    if (!(sift_factor > 0.0 && sift_factor <= 1.0))
        throw DomainError("expected_window_rates: sift factor must be in (0, 1]");
    if (!(signal_window_acceptance > 0.0 && signal_window_acceptance <= 1.0))
        throw DomainError("expected_window_rates: window acceptance must be in (0, 1]");
    if (!(optical_noise_photon_cps >= 0.0))
        throw DomainError("expected_window_rates: noise rate must be >= 0");

    WindowRates r;
    r.signal_full_cps = mu_arrival * spad.efficiency * sift_factor * symbol_rate_baud;
    r.signal_in_window_cps = r.signal_full_cps * signal_window_acceptance;
    r.dark_in_window_cps = spad.dark_rate_cps * window_fraction;
    const double noise_full = optical_noise_photon_cps * spad.efficiency;
    r.noise_in_window_cps = noise_full * window_fraction;
    r.detector_total_cps = r.signal_full_cps + spad.dark_rate_cps + noise_full;
    return r;
}

} // namespace qcoex
