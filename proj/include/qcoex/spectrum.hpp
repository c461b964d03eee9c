#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "qcoex/errors.hpp"
#include "qcoex/units.hpp"

namespace qcoex {

// FWHM = 2*sqrt(2*ln 2) * sigma for a Gaussian.
inline constexpr double k_fwhm_per_sigma = 2.3548200450309493;

// Gaussian spectral power density normalized to a fixed total power.
// density integrates to total_power over (-inf, inf); the constructor
// self-checks the normalization numerically over +/-6 sigma.
class GaussianSpectrum {
public:
    GaussianSpectrum(Wavelength center, double fwhm_nm, PowerLevel total_power)
        : center_(center), fwhm_nm_(fwhm_nm), total_(total_power) {
        if (!std::isfinite(fwhm_nm) || fwhm_nm <= 0.0)
            throw DomainError("GaussianSpectrum: FWHM must be finite and > 0");
        check_normalization();
    }

    Wavelength center() const noexcept { return center_; }
    double fwhm_nm() const noexcept { return fwhm_nm_; }
    PowerLevel total_power() const noexcept { return total_; }
    double sigma_m() const noexcept { return fwhm_nm_ * 1.0e-9 / k_fwhm_per_sigma; }

    // Spectral density in W/m at vacuum wavelength lambda_m.
    double density_w_per_m(double lambda_m) const noexcept {
        const double s = sigma_m();
        const double z = (lambda_m - center_.meters()) / s;
        const double norm = total_.watts() / (s * std::sqrt(2.0 * 3.14159265358979323846));
        return norm * std::exp(-0.5 * z * z);
    }

private:
    void check_normalization() const {
        if (total_.watts() == 0.0)
            return;
        const double s = sigma_m();
        const double a = center_.meters() - 6.0 * s;
        const double b = center_.meters() + 6.0 * s;
        const std::size_t n = 4096;
        const double h = (b - a) / static_cast<double>(n);
        double sum = 0.5 * (density_w_per_m(a) + density_w_per_m(b));
        for (std::size_t i = 1; i < n; ++i)
            sum += density_w_per_m(a + h * static_cast<double>(i));
        const double integral = sum * h;
        const double rel = std::fabs(integral - total_.watts()) / total_.watts();
        if (rel > 1.0e-6)
            throw DomainError("GaussianSpectrum: density normalization self-check failed");
    }

    Wavelength center_;
    double fwhm_nm_;
    PowerLevel total_;
};

// Ideal flat-top bandpass filter: unity-shape passband with an insertion
// loss, and a constant out-of-band isolation floor below that.
class FlatTopFilter {
public:
    static FlatTopFilter from_width_nm(Wavelength center, double width_nm,
                                       double insertion_loss_db,
                                       double out_of_band_isolation_db) {
        if (!std::isfinite(width_nm) || width_nm <= 0.0)
            throw DomainError("FlatTopFilter: width must be finite and > 0");
        if (!std::isfinite(insertion_loss_db) || insertion_loss_db < 0.0)
            throw DomainError("FlatTopFilter: insertion loss must be >= 0 dB");
        if (!std::isfinite(out_of_band_isolation_db) || out_of_band_isolation_db < 0.0)
            throw DomainError("FlatTopFilter: isolation must be >= 0 dB");
        return FlatTopFilter(center, width_nm, insertion_loss_db, out_of_band_isolation_db);
    }

    // Passband width given in frequency; converted about the center
    // wavelength as d_lambda = lambda^2 * d_nu / c.
    static FlatTopFilter from_width_ghz(Wavelength center, double width_ghz,
                                        double insertion_loss_db,
                                        double out_of_band_isolation_db) {
        if (!std::isfinite(width_ghz) || width_ghz <= 0.0)
            throw DomainError("FlatTopFilter: width must be finite and > 0");
        const double lm = center.meters();
        const double width_m = lm * lm * (width_ghz * 1.0e9) / phys::speed_of_light_m_s;
        return from_width_nm(center, width_m * 1.0e9, insertion_loss_db,
                             out_of_band_isolation_db);
    }

    Wavelength center() const noexcept { return center_; }
    double width_nm() const noexcept { return width_nm_; }
    double insertion_loss_db() const noexcept { return il_db_; }
    double out_of_band_isolation_db() const noexcept { return iso_db_; }

    double passband_lo_m() const noexcept { return center_.meters() - 0.5e-9 * width_nm_; }
    double passband_hi_m() const noexcept { return center_.meters() + 0.5e-9 * width_nm_; }

    bool in_passband(double lambda_m) const noexcept {
        return lambda_m >= passband_lo_m() && lambda_m <= passband_hi_m();
    }

    // Power transmission at lambda_m, insertion loss included.
    double transmission(double lambda_m) const noexcept {
        const double t_il = std::pow(10.0, -il_db_ / 10.0);
        return in_passband(lambda_m) ? t_il : t_il * std::pow(10.0, -iso_db_ / 10.0);
    }

private:
    FlatTopFilter(Wavelength center, double width_nm, double il_db, double iso_db) noexcept
        : center_(center), width_nm_(width_nm), il_db_(il_db), iso_db_(iso_db) {}

    Wavelength center_;
    double width_nm_;
    double il_db_;
    double iso_db_;
};

// Fraction of the spectrum's total power passed by the filter SHAPE
// (isolation floor included, insertion loss excluded: the IL applies
// uniformly and is accounted for separately in budget chains).
inline double inband_fraction(const GaussianSpectrum& spectrum, const FlatTopFilter& filter) {
    // The fraction is a shape property; evaluate on a unit-power copy so a
    // dark emitter still has a well-defined slicing fraction.
    if (spectrum.total_power().watts() == 0.0) {
        const GaussianSpectrum unit(spectrum.center(), spectrum.fwhm_nm(),
                                    PowerLevel::from_watts(1.0));
        return inband_fraction(unit, filter);
    }
    const double sigma = spectrum.sigma_m();
    const double a = spectrum.center().meters() - 4.0 * sigma;
    const double b = spectrum.center().meters() + 4.0 * sigma;
    const double floor_t = std::pow(10.0, -filter.out_of_band_isolation_db() / 10.0);

    const double e1 = std::clamp(filter.passband_lo_m(), a, b);
    const double e2 = std::clamp(filter.passband_hi_m(), std::min(e1, b), b);

    struct Segment {
        double lo, hi, t;
    };
    const Segment segs[3] = {{a, e1, floor_t}, {e1, e2, 1.0}, {e2, b, floor_t}};

    const std::size_t n_total = 8192;
    double integral = 0.0;
    for (const Segment& seg : segs) {
        const double len = seg.hi - seg.lo;
        if (len <= 0.0)
            continue;
        auto n = static_cast<std::size_t>(n_total * len / (b - a));
        n = std::max<std::size_t>(n, 32);
        const double h = len / static_cast<double>(n);
        double sum = 0.5 * (spectrum.density_w_per_m(seg.lo) + spectrum.density_w_per_m(seg.hi));
        for (std::size_t i = 1; i < n; ++i)
            sum += spectrum.density_w_per_m(seg.lo + h * static_cast<double>(i));
        integral += seg.t * sum * h;
    }

    return std::min(integral / spectrum.total_power().watts(), 1.0);
}

} // namespace qcoex
