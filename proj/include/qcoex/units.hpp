#pragma once

#include <cmath>
#include <limits>

#include "qcoex/errors.hpp"

namespace qcoex {

namespace phys {

// CODATA exact values.
inline constexpr double speed_of_light_m_s = 299'792'458.0;
inline constexpr double planck_j_s = 6.62607015e-34;

} // namespace phys

inline double dbm_to_watts(double dbm) {
    if (!std::isfinite(dbm))
        throw DomainError("dbm_to_watts: level must be finite");
    return 1.0e-3 * std::pow(10.0, dbm / 10.0);
}

inline double watts_to_dbm(double watts) {
    if (!(watts > 0.0))
        throw DomainError("watts_to_dbm: power must be positive");
    return 10.0 * std::log10(watts * 1.0e3);
}

// Loss in dB -> linear power transmittance.
inline double transmittance_from_loss_db(double loss_db) {
    if (!std::isfinite(loss_db))
        throw DomainError("transmittance_from_loss_db: loss must be finite");
    return std::pow(10.0, -loss_db / 10.0);
}

// Optical power, stored in watts. Invariant: finite and >= 0.
class PowerLevel {
public:
    PowerLevel() = default;

    static PowerLevel from_watts(double watts) {
        if (!std::isfinite(watts) || watts < 0.0)
            throw DomainError("PowerLevel: watts must be finite and >= 0");
        return PowerLevel(watts);
    }

    static PowerLevel from_milliwatts(double mw) { return from_watts(mw * 1.0e-3); }
    static PowerLevel from_dbm(double dbm) { return from_watts(dbm_to_watts(dbm)); }
    static PowerLevel zero() noexcept { return PowerLevel(0.0); }

    double watts() const noexcept { return watts_; }
    double milliwatts() const noexcept { return watts_ * 1.0e3; }

    // Zero power maps to -inf dBm; callers that print handle it.
    double dbm() const noexcept {
        return watts_ > 0.0 ? 10.0 * std::log10(watts_ * 1.0e3)
                            : -std::numeric_limits<double>::infinity();
    }

    PowerLevel attenuated_db(double loss_db) const {
        return PowerLevel(watts_ * transmittance_from_loss_db(loss_db));
    }

    friend bool operator==(PowerLevel a, PowerLevel b) noexcept { return a.watts_ == b.watts_; }

private:
    explicit PowerLevel(double watts) noexcept : watts_(watts) {}

    double watts_ = 0.0;
};

// Vacuum wavelength, stored in meters. Invariant: finite and > 0.
// Stored in nanometers so values given in nm survive round trips exactly.
class Wavelength {
public:
    Wavelength() = default;

    static Wavelength from_nm(double nm) {
        if (!std::isfinite(nm) || nm <= 0.0)
            throw DomainError("Wavelength: must be finite and > 0");
        return Wavelength(nm);
    }

    static Wavelength from_meters(double m) { return from_nm(m * 1.0e9); }

    double meters() const noexcept { return nm_ * 1.0e-9; }
    double nm() const noexcept { return nm_; }
    double frequency_hz() const noexcept { return phys::speed_of_light_m_s / meters(); }

    friend bool operator==(Wavelength a, Wavelength b) noexcept { return a.nm_ == b.nm_; }

private:
    explicit Wavelength(double nm) noexcept : nm_(nm) {}

    double nm_ = 1550.0;
};

// Energy of one photon at the given vacuum wavelength, in joules.
inline double photon_energy_j(Wavelength lambda) {
    return phys::planck_j_s * phys::speed_of_light_m_s / lambda.meters();
}

} // namespace qcoex
