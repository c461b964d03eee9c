#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "qcoex/bb84.hpp"
#include "qcoex/errors.hpp"
#include "qcoex/system.hpp"

namespace qcoex {

// Quantum-only operating point plus the derived key figures.
struct BackToBackReport {
    QuantumOperatingPoint op;
    double aes_capacity_bps = 0.0;
};

inline BackToBackReport run_back_to_back(const SystemModel& m) {
    BackToBackReport rep;
    rep.op = evaluate_quantum(m, ChannelConfig::back_to_back, {});
    rep.aes_capacity_bps = aes_secured_capacity_bps(rep.op.secure_rate_bps);
    return rep;
}

// One row of the received-power sweep: both channel configurations
// evaluated at the same classical receiver power.
struct SweepPoint {
    double rop_dbm = 0.0;
    double launch_fiber_dbm = 0.0;
    double classical_ber = 0.0;
    double qber_b2b = 0.0;
    double qber_fiber = 0.0;
    double observed_b2b_cps = 0.0;
    double observed_fiber_cps = 0.0;
    double secure_b2b_bps = 0.0;
    double secure_fiber_bps = 0.0;
};

struct SweepParams {
    double rop_start_dbm = -40.0;
    double rop_stop_dbm = -15.0;
    double rop_step_db = 0.1;

    void validate() const {
        if (!(rop_start_dbm < rop_stop_dbm))
            throw DomainError("SweepParams: start must be below stop");
        if (!(rop_step_db > 0.0))
            throw DomainError("SweepParams: step must be > 0");
        if ((rop_stop_dbm - rop_start_dbm) / rop_step_db > 1.0e6)
            throw DomainError("SweepParams: more than 1e6 grid points");
    }
};

struct SweepResult {
    SweepParams params;
    std::vector<SweepPoint> points;
};

inline SweepResult run_coexistence_sweep(const SystemModel& m, const SweepParams& p) {
    p.validate();
    SweepResult res;
    res.params = p;
    const auto n = static_cast<std::size_t>(
        std::floor((p.rop_stop_dbm - p.rop_start_dbm) / p.rop_step_db + 0.5)) + 1;
    res.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double rop = p.rop_start_dbm + static_cast<double>(i) * p.rop_step_db;
        const CoexPoint b2b = evaluate_coexistence(m, ChannelConfig::back_to_back, rop);
        const CoexPoint fib = evaluate_coexistence(m, ChannelConfig::fiber, rop);
        SweepPoint row;
        row.rop_dbm = rop;
        row.launch_fiber_dbm = fib.launch_dbm;
        row.classical_ber = fib.classical_ber;
        row.qber_b2b = b2b.quantum.qber;
        row.qber_fiber = fib.quantum.qber;
        row.observed_b2b_cps = b2b.quantum.observed_rate_cps;
        row.observed_fiber_cps = fib.quantum.observed_rate_cps;
        row.secure_b2b_bps = b2b.quantum.secure_rate_bps;
        row.secure_fiber_bps = fib.quantum.secure_rate_bps;
        res.points.push_back(row);
    }
    return res;
}

// One edge of the simultaneous operation window, with the fiber-channel
// figures at that received power.
struct SoaxBound {
    double rop_dbm = 0.0;
    double classical_ber = 0.0;
    double qber_fiber = 0.0;
    double secure_fiber_bps = 0.0;
    double aes_capacity_bps = 0.0;
};

// Simultaneous-operation window: received powers where the classical
// channel meets its BER target while the fiber-configuration QBER stays
// below the abort threshold.
struct SoaxReport {
    bool empty = false;
    double lower_rop_dbm = 0.0;   // classical BER first meets the target
    double upper_rop_dbm = 0.0;   // QBER reaches the threshold
    double width_db = 0.0;
    SoaxBound lower;
    SoaxBound upper;
    double classical_target_ber = 0.0;
    double qber_threshold = 0.0;
};

// Scans the grid and refines both edges by interpolation: log-linear in
// BER for the classical edge, linear in QBER for the quantum edge. A
// window edge falling outside the swept range is an error; a classical
// requirement meeting the quantum limit in the wrong order is an empty
// window, reported as such.
inline SoaxReport compute_soax(const SystemModel& m, const SweepParams& p,
                               double classical_target_ber, double qber_threshold) {
    p.validate();
    if (!(classical_target_ber > 0.0 && classical_target_ber < 0.5))
        throw DomainError("compute_soax: BER target must be in (0, 0.5)");
    if (!(qber_threshold > 0.0 && qber_threshold < 0.5))
        throw DomainError("compute_soax: QBER threshold must be in (0, 0.5)");

    const auto n = static_cast<std::size_t>(
        std::floor((p.rop_stop_dbm - p.rop_start_dbm) / p.rop_step_db + 0.5)) + 1;
    std::vector<double> rop(n);
    std::vector<double> ber(n);
    std::vector<double> qber(n);
    for (std::size_t i = 0; i < n; ++i) {
        rop[i] = p.rop_start_dbm + static_cast<double>(i) * p.rop_step_db;
        ber[i] = classical_ber(m.classical.receiver, PowerLevel::from_dbm(rop[i]));
        qber[i] = evaluate_quantum(m, ChannelConfig::fiber, rop[i]).qber;
    }

    // Classical edge: BER falls with power; find the first grid point at
    // or under the target.
    std::size_t ic = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (ber[i] <= classical_target_ber) {
            ic = i;
            break;
        }
    }
    if (ic == n)
        throw UncoveredRangeError(
            "compute_soax: classical BER target not reached within the swept range");
    if (ic == 0)
        throw UncoveredRangeError(
            "compute_soax: classical edge lies below the swept range");
    const double lb1 = std::log10(ber[ic - 1]);
    const double lb2 = std::log10(std::max(ber[ic], 1.0e-300));
    const double lt = std::log10(classical_target_ber);
    const double lower =
        rop[ic - 1] + (rop[ic] - rop[ic - 1]) * (lb1 - lt) / (lb1 - lb2);

    // Quantum edge: QBER grows with power; find the first grid point at
    // or over the threshold.
    std::size_t iq = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (qber[i] >= qber_threshold) {
            iq = i;
            break;
        }
    }
    if (iq == n)
        throw UncoveredRangeError(
            "compute_soax: QBER threshold not reached within the swept range");
    if (iq == 0)
        throw UncoveredRangeError("compute_soax: quantum edge lies below the swept range");
    const double upper = rop[iq - 1] + (rop[iq] - rop[iq - 1]) *
                                           (qber_threshold - qber[iq - 1]) /
                                           (qber[iq] - qber[iq - 1]);

    SoaxReport rep;
    rep.classical_target_ber = classical_target_ber;
    rep.qber_threshold = qber_threshold;
    rep.lower_rop_dbm = lower;
    rep.upper_rop_dbm = upper;
    rep.width_db = upper - lower;
    rep.empty = !(lower < upper);

    const auto bound_at = [&](double r) {
        SoaxBound b;
        b.rop_dbm = r;
        b.classical_ber = classical_ber(m.classical.receiver, PowerLevel::from_dbm(r));
        const QuantumOperatingPoint op = evaluate_quantum(m, ChannelConfig::fiber, r);
        b.qber_fiber = op.qber;
        b.secure_fiber_bps = op.secure_rate_bps;
        b.aes_capacity_bps = aes_secured_capacity_bps(op.secure_rate_bps);
        return b;
    };
    rep.lower = bound_at(lower);
    rep.upper = bound_at(upper);
    return rep;
}

} // namespace qcoex
