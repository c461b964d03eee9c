#pragma once

#include <cmath>

#include "qcoex/errors.hpp"
#include "qcoex/spectrum.hpp"
#include "qcoex/units.hpp"

namespace qcoex {

// Single-mode fiber span with per-band attenuation slopes. The quantum
// channel runs in the C-band; the classical channel runs far below the
// cable's design band and sees a much higher slope.
struct FiberSpec {
    double length_km = 1.0;
    double attenuation_quantum_db_per_km = 0.21;
    double attenuation_classical_db_per_km = 2.2;

    double loss_db(bool classical) const {
        if (!(length_km >= 0.0) || !std::isfinite(length_km))
            throw DomainError("FiberSpec: length must be finite and >= 0");
        return length_km *
               (classical ? attenuation_classical_db_per_km : attenuation_quantum_db_per_km);
    }
};

// Wavelength mux/demux pair: per-band insertion losses plus the finite
// isolation of the quantum port against the classical carrier.
struct WdmSpec {
    double mux_insertion_loss_quantum_db = 1.0;
    double mux_insertion_loss_classical_db = 1.0;
    double classical_to_quantum_isolation_db = 60.0;
};

enum class Band { quantum, classical };

// End-to-end linear power transmittance of one band through mux, fiber
// and (quantum band only) the receive-side cleanup filter insertion loss.
inline double link_transmittance(const FiberSpec& fiber, const WdmSpec& wdm, Band band,
                                 double cleanup_filter_il_db = 0.0) {
    const bool classical = band == Band::classical;
    double loss_db = fiber.loss_db(classical);
    loss_db += classical ? wdm.mux_insertion_loss_classical_db
                         : wdm.mux_insertion_loss_quantum_db;
    if (!classical)
        loss_db += cleanup_filter_il_db;
    if (loss_db < 0.0)
        throw DomainError("link_transmittance: negative total loss");
    return transmittance_from_loss_db(loss_db);
}

// Spontaneous-scattering noise from the classical carrier into the quantum
// band, linear in launch power, span length and collection bandwidth:
//   rate = beta * P_launch_mW * L_km * B_nm   [photons/s at the quantum
// receiver input, detector efficiency not yet applied]. beta absorbs the
// propagation/capture physics and receive-path constants; it comes from
// calibration against a measured coexistence operating point.
struct RamanModel {
    double beta_cps_per_mw_km_nm = 0.0;
};

inline double raman_noise_rate_cps(const RamanModel& raman, PowerLevel launch,
                                   const FiberSpec& fiber, double collection_bandwidth_nm) {
    if (raman.beta_cps_per_mw_km_nm < 0.0)
        throw DomainError("raman_noise_rate_cps: beta must be >= 0");
    if (!(collection_bandwidth_nm > 0.0))
        throw DomainError("raman_noise_rate_cps: bandwidth must be > 0");
    return raman.beta_cps_per_mw_km_nm * launch.milliwatts() * fiber.length_km *
           collection_bandwidth_nm;
}

// Residual classical carrier bleeding into the quantum port, converted to
// a photon rate at the classical wavelength (quantum receiver input plane,
// detector efficiency not yet applied). The classical power is the level
// arriving at the demux input; the total suppression stacks the demux port
// isolation and the cleanup filter's out-of-band floor.
inline double leakage_noise_rate_cps(const WdmSpec& wdm, PowerLevel classical_at_demux,
                                     const FlatTopFilter& cleanup,
                                     Wavelength classical_wavelength) {
    const double iso_db =
        wdm.classical_to_quantum_isolation_db + cleanup.out_of_band_isolation_db();
    if (iso_db < 0.0)
        throw DomainError("leakage_noise_rate_cps: negative total isolation");
    const double leaked_w = classical_at_demux.watts() * transmittance_from_loss_db(iso_db);
    return leaked_w / photon_energy_j(classical_wavelength);
}

} // namespace qcoex
