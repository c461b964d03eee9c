#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qcoex/emitter.hpp"
#include "qcoex/spectrum.hpp"
#include "qcoex/units.hpp"

using namespace qcoex;
using Catch::Approx;

TEST_CASE("power level unit conversions", "[photonics]") {
    REQUIRE(PowerLevel::from_dbm(0.0).milliwatts() == Approx(1.0));
    REQUIRE(PowerLevel::from_dbm(-30.0).watts() == Approx(1.0e-6));
    REQUIRE(PowerLevel::from_milliwatts(2.0).dbm() == Approx(10.0 * std::log10(2.0)));
    REQUIRE(PowerLevel::from_watts(1.0e-3).attenuated_db(3.0).milliwatts() ==
            Approx(std::pow(10.0, -0.3)));
    REQUIRE(std::isinf(PowerLevel::zero().dbm()));
    REQUIRE_THROWS_AS(PowerLevel::from_watts(-1.0), DomainError);
}

TEST_CASE("photon energy from exact constants", "[photonics]") {
    // Independent evaluation of h*c/lambda with the defined SI constants.
    const double h = 6.62607015e-34;
    const double c = 299'792'458.0;
    REQUIRE(photon_energy_j(Wavelength::from_nm(1550.12)) ==
            Approx(h * c / 1550.12e-9).epsilon(1e-12));
    REQUIRE(photon_energy_j(Wavelength::from_nm(852.0)) ==
            Approx(h * c / 852.0e-9).epsilon(1e-12));
    // Frozen values used throughout the rate chain.
    REQUIRE(photon_energy_j(Wavelength::from_nm(1550.12)) ==
            Approx(1.28147876e-19).epsilon(1e-8));
    REQUIRE(photon_energy_j(Wavelength::from_nm(852.0)) ==
            Approx(2.33150922e-19).epsilon(1e-8));
    REQUIRE_THROWS_AS(Wavelength::from_nm(0.0), DomainError);
    REQUIRE_THROWS_AS(Wavelength::from_nm(-1.0), DomainError);
}

TEST_CASE("gaussian spectrum shape and normalization", "[photonics]") {
    const GaussianSpectrum s(Wavelength::from_nm(1548.0), 58.0,
                             PowerLevel::from_watts(32.0e-6));
    REQUIRE(s.sigma_m() * 2.3548200450309493 == Approx(58.0e-9).epsilon(1e-12));

    // Trapezoid integral over +-4 sigma recovers erf(4/sqrt(2)) of the power.
    const double a = s.center().meters() - 4.0 * s.sigma_m();
    const double b = s.center().meters() + 4.0 * s.sigma_m();
    const std::size_t n = 20000;
    const double h = (b - a) / static_cast<double>(n);
    double sum = 0.5 * (s.density_w_per_m(a) + s.density_w_per_m(b));
    for (std::size_t i = 1; i < n; ++i)
        sum += s.density_w_per_m(a + h * static_cast<double>(i));
    const double mass = sum * h / s.total_power().watts();
    REQUIRE(mass == Approx(std::erf(4.0 / std::sqrt(2.0))).epsilon(1e-6));

    REQUIRE_THROWS_AS(
        GaussianSpectrum(Wavelength::from_nm(1548.0), 0.0, PowerLevel::from_watts(1.0)),
        DomainError);
}

TEST_CASE("flat top filter width from optical bandwidth", "[photonics]") {
    const auto f =
        FlatTopFilter::from_width_ghz(Wavelength::from_nm(1550.12), 200.0, 1.5, 40.0);
    // delta_lambda = lambda^2 * delta_nu / c.
    const double expect_nm = 1550.12e-9 * 1550.12e-9 * 200.0e9 / 299'792'458.0 * 1.0e9;
    REQUIRE(f.width_nm() == Approx(expect_nm).epsilon(1e-12));
    REQUIRE(f.width_nm() == Approx(1.60302366).epsilon(1e-8));

    const double t_in = f.transmission(1550.12e-9);
    const double t_out = f.transmission(1540.0e-9);
    REQUIRE(t_in == Approx(std::pow(10.0, -0.15)));
    REQUIRE(t_out == Approx(t_in * 1.0e-4));
    REQUIRE(f.in_passband(f.passband_lo_m()));
    REQUIRE(f.in_passband(f.passband_hi_m()));
    REQUIRE_FALSE(f.in_passband(f.passband_hi_m() + 1.0e-12));
    REQUIRE_THROWS_AS(
        FlatTopFilter::from_width_nm(Wavelength::from_nm(1550.0), -1.0, 0.0, 40.0),
        DomainError);
}

TEST_CASE("slicing fraction of the broadband spectrum", "[photonics]") {
    const GaussianSpectrum s(Wavelength::from_nm(1548.0), 58.0,
                             PowerLevel::from_watts(32.0e-6));
    const auto f =
        FlatTopFilter::from_width_ghz(Wavelength::from_nm(1550.12), 200.0, 1.5, 40.0);
    const double frac = inband_fraction(s, f);

    // Closed-form pass fraction: band mass plus the isolation-floor leak,
    // both relative to the untruncated total.
    const double sig = s.sigma_m();
    const double root2 = std::sqrt(2.0);
    const double zl = (f.passband_lo_m() - s.center().meters()) / (sig * root2);
    const double zh = (f.passband_hi_m() - s.center().meters()) / (sig * root2);
    const double p_band = 0.5 * (std::erf(zh) - std::erf(zl));
    const double p4 = std::erf(4.0 / root2);
    const double expect = p_band + 1.0e-4 * (p4 - p_band);
    REQUIRE(frac == Approx(expect).epsilon(5e-4));
    REQUIRE(frac == Approx(0.0259613588).epsilon(1e-5));

    // Shape property: independent of total power and of insertion loss.
    const GaussianSpectrum dark(Wavelength::from_nm(1548.0), 58.0, PowerLevel::zero());
    REQUIRE(inband_fraction(dark, f) == Approx(frac).epsilon(1e-12));
    const auto lossless =
        FlatTopFilter::from_width_ghz(Wavelength::from_nm(1550.12), 200.0, 0.0, 40.0);
    REQUIRE(inband_fraction(s, lossless) == Approx(frac).epsilon(1e-12));

    // A filter much wider than the spectrum passes everything.
    const auto wide = FlatTopFilter::from_width_nm(Wavelength::from_nm(1548.0), 1000.0,
                                                   0.0, 40.0);
    REQUIRE(inband_fraction(s, wide) == Approx(1.0).epsilon(1e-3));
}

TEST_CASE("emitter table interpolation and range checks", "[photonics]") {
    const EmitterVli vli = EmitterVli::default_table();
    REQUIRE(vli.power_at(0.0).watts() == Approx(0.0).margin(1e-18));
    REQUIRE(vli.power_at(20.0).watts() == Approx(32.0e-6));
    REQUIRE(vli.power_at(10.0).watts() == Approx(16.0e-6));
    REQUIRE_THROWS_AS(vli.power_at(25.0), OutOfRangeError);
    REQUIRE_THROWS_AS(vli.power_at(-1.0), OutOfRangeError);
    REQUIRE_THROWS_AS(EmitterVli({{0.0, 0.0, 0.0}}), DomainError);
    REQUIRE_THROWS_AS(EmitterVli({{0.0, 0.0, 0.0}, {0.0, 1.0, 0.0}}), DomainError);
}

TEST_CASE("transmit photon number calibration", "[photonics]") {
    const EmitterSpec e;
    TxBudget b;
    const double loss = calibrate_tx_loss(e, b, 0.0148, 20.0);
    REQUIRE(loss == Approx(66.4150427).epsilon(1e-6));
    b.tx_path_loss_db = loss;
    REQUIRE(mean_photons_per_symbol(e, b, 20.0) == Approx(0.0148).margin(1e-9));

    // Doubling the symbol rate halves the per-symbol photon number.
    TxBudget fast = b;
    fast.symbol_rate_baud *= 2.0;
    REQUIRE(mean_photons_per_symbol(e, fast, 20.0) == Approx(0.0074).margin(1e-9));

    // A target beyond the lossless budget needs gain: infeasible.
    REQUIRE_THROWS_AS(calibrate_tx_loss(e, b, 1.0e7, 20.0), InfeasibleCalibration);
    try {
        calibrate_tx_loss(e, b, 1.0e7, 20.0);
    } catch (const InfeasibleCalibration& ex) {
        REQUIRE(ex.step() == "tx_loss");
    }
    REQUIRE_THROWS_AS(calibrate_tx_loss(e, b, 0.0148, 0.0), InfeasibleCalibration);
}

TEST_CASE("photon number headroom", "[photonics]") {
    REQUIRE(mu_headroom_db(0.0148, 0.1) == Approx(8.29738285).margin(1e-6));
    REQUIRE(mu_headroom_db(0.1, 0.1) == Approx(0.0).margin(1e-12));
    REQUIRE(mu_headroom_db(0.2, 0.1) < 0.0);
    REQUIRE_THROWS_AS(mu_headroom_db(0.0, 0.1), DomainError);
}
