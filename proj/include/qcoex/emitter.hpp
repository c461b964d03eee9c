#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "qcoex/errors.hpp"
#include "qcoex/spectrum.hpp"
#include "qcoex/units.hpp"

namespace qcoex {

// One VLI (voltage/light/current) table row: fiber-coupled optical power
// at a forward drive current. Voltage is optional bookkeeping.
struct VliPoint {
    double current_ma = 0.0;
    double power_w = 0.0;
    double voltage_v = 0.0;
};

// Piecewise-linear emitter VLI characteristic.
// Invariants: >= 2 points, currents strictly increasing, powers >= 0.
class EmitterVli {
public:
    explicit EmitterVli(std::vector<VliPoint> points) : points_(std::move(points)) {
        if (points_.size() < 2)
            throw DomainError("EmitterVli: need at least two table points");
        for (std::size_t i = 0; i < points_.size(); ++i) {
            const VliPoint& p = points_[i];
            if (!std::isfinite(p.current_ma) || !std::isfinite(p.power_w) || p.power_w < 0.0)
                throw DomainError("EmitterVli: powers must be finite and >= 0");
            if (i > 0 && !(p.current_ma > points_[i - 1].current_ma))
                throw DomainError("EmitterVli: currents must be strictly increasing");
        }
    }

    // Two-point default: dark at 0 mA, 32 uW fiber-coupled at 20 mA.
    static EmitterVli default_table() {
        return EmitterVli({{0.0, 0.0, 0.0}, {20.0, 32.0e-6, 1.1}});
    }

    const std::vector<VliPoint>& points() const noexcept { return points_; }

    PowerLevel power_at(double current_ma) const {
        if (!std::isfinite(current_ma) || current_ma < points_.front().current_ma ||
            current_ma > points_.back().current_ma)
            throw OutOfRangeError("EmitterVli: drive current " + std::to_string(current_ma) +
                                  " mA outside tabulated range");
        auto hi = std::lower_bound(points_.begin(), points_.end(), current_ma,
                                   [](const VliPoint& p, double c) { return p.current_ma < c; });
        if (hi == points_.begin())
            return PowerLevel::from_watts(points_.front().power_w);
        const VliPoint& b = *hi;
        const VliPoint& a = *(hi - 1);
        const double t = (current_ma - a.current_ma) / (b.current_ma - a.current_ma);
        return PowerLevel::from_watts(a.power_w + t * (b.power_w - a.power_w));
    }

private:
    std::vector<VliPoint> points_;
};

// Broadband emitter: VLI table plus a Gaussian spectral envelope.
struct EmitterSpec {
    EmitterVli vli = EmitterVli::default_table();
    Wavelength spectrum_center = Wavelength::from_nm(1548.0);
    double spectrum_fwhm_nm = 58.0;

    GaussianSpectrum spectrum_at(double current_ma) const {
        return GaussianSpectrum(spectrum_center, spectrum_fwhm_nm, vli.power_at(current_ma));
    }
};

// Transmitter budget downstream of the emitter: spectral slicing filter,
// then intensity modulation at the symbol rate, then a lumped path loss.
struct TxBudget {
    FlatTopFilter slicing_filter = FlatTopFilter::from_width_ghz(
        Wavelength::from_nm(1550.12), 200.0, 0.0, 40.0);
    double modulator_insertion_loss_db = 0.0;
    double tx_path_loss_db = 0.0;
    double symbol_rate_baud = 0.1e9;
};

inline PowerLevel emitter_output_power(const EmitterSpec& e, double current_ma) {
    return e.vli.power_at(current_ma);
}

// Mean photon number per symbol at the modulator output, i.e. after the
// slicing filter, modulator insertion loss, and lumped TX path loss:
//   mu = P * f_inband * T_filter * T_mod * T_path / (h*nu_filter * R_sym).
inline double mean_photons_per_symbol(const EmitterSpec& e, const TxBudget& b,
                                      double current_ma) {
    if (!(b.symbol_rate_baud > 0.0) || !std::isfinite(b.symbol_rate_baud))
        throw DomainError("mean_photons_per_symbol: symbol rate must be > 0");
    const GaussianSpectrum s = e.spectrum_at(current_ma);
    const double frac = inband_fraction(s, b.slicing_filter);
    const double t = transmittance_from_loss_db(b.slicing_filter.insertion_loss_db()) *
                     transmittance_from_loss_db(b.modulator_insertion_loss_db) *
                     transmittance_from_loss_db(b.tx_path_loss_db);
    const double e_photon = photon_energy_j(b.slicing_filter.center());
    return s.total_power().watts() * frac * t / (e_photon * b.symbol_rate_baud);
}

// Lumped TX path loss (dB) that brings the budget to target_mu, holding
// every other budget term fixed. Throws if the target is unreachable
// (would need gain) or not positive.
inline double calibrate_tx_loss(const EmitterSpec& e, const TxBudget& b, double target_mu,
                                double current_ma) {
    if (!(target_mu > 0.0) || !std::isfinite(target_mu))
        throw DomainError("calibrate_tx_loss: target mu must be > 0");
    TxBudget open = b;
    open.tx_path_loss_db = 0.0;
    const double mu_open = mean_photons_per_symbol(e, open, current_ma);
    if (!(mu_open > 0.0))
        throw InfeasibleCalibration("tx_loss",
                                    "calibrate_tx_loss: no emitter power at this drive current");
    const double loss_db = 10.0 * std::log10(mu_open / target_mu);
    if (loss_db < 0.0)
        throw InfeasibleCalibration("tx_loss",
                                    "calibrate_tx_loss: target mu exceeds the lossless budget");
    return loss_db;
}

// Margin (dB) between the operating mean photon number and a target
// (e.g. a security ceiling): positive when mu_actual is below mu_target.
inline double mu_headroom_db(double mu_actual, double mu_target) {
    if (!(mu_actual > 0.0) || !(mu_target > 0.0))
        throw DomainError("mu_headroom_db: photon numbers must be > 0");
    return 10.0 * std::log10(mu_target / mu_actual);
}

} // namespace qcoex
