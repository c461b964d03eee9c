#pragma once

#include <cmath>
#include <cstdint>

#include "qcoex/errors.hpp"

namespace qcoex {

// Polarization alphabet. R/L are the circular-basis states, D/A the
// diagonal-basis states. Bit mapping: R = 0, L = 1, D = 0, A = 1.
enum class PolState : std::uint8_t { R = 0, L = 1, D = 2, A = 3 };

enum class Basis : std::uint8_t { circular = 0, diagonal = 1 };

constexpr Basis basis_of(PolState s) noexcept {
    return (s == PolState::R || s == PolState::L) ? Basis::circular : Basis::diagonal;
}

constexpr int bit_of(PolState s) noexcept {
    return (s == PolState::L || s == PolState::A) ? 1 : 0;
}

constexpr PolState pol_state_from(Basis b, int bit) noexcept {
    return b == Basis::circular ? (bit ? PolState::L : PolState::R)
                                : (bit ? PolState::A : PolState::D);
}

constexpr char pol_state_symbol(PolState s) noexcept {
    switch (s) {
    case PolState::R: return 'R';
    case PolState::L: return 'L';
    case PolState::D: return 'D';
    default: return 'A';
    }
}

// Binary Shannon entropy, h2(p), with h2(0) = h2(1) = 0.
inline double binary_entropy(double p) {
    if (!(p >= 0.0 && p <= 1.0))
        throw DomainError("binary_entropy: argument must be in [0, 1]");
    if (p == 0.0 || p == 1.0)
        return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

// Probability that a photon transmitted in state tx produces outcome
// rx_bit when measured in rx_basis, with intrinsic optical error e_opt.
// A conjugate-basis measurement is an unbiased coin toss.
inline double projection_probability(PolState tx, Basis rx_basis, int rx_bit, double e_opt) {
    if (!(e_opt >= 0.0 && e_opt <= 0.5))
        throw DomainError("projection_probability: e_opt must be in [0, 0.5]");
    if (rx_bit != 0 && rx_bit != 1)
        throw DomainError("projection_probability: bit must be 0 or 1");
    if (basis_of(tx) != rx_basis)
        return 0.5;
    return bit_of(tx) == rx_bit ? 1.0 - e_opt : e_opt;
}

// Single measurement outcome (0/1) of state tx in rx_basis.
template <class Rng>
int measure(PolState tx, Basis rx_basis, double e_opt, Rng&& uniform01) {
    const double p1 = projection_probability(tx, rx_basis, 1, e_opt);
    return uniform01() < p1 ? 1 : 0;
}

// Secret-fraction models applied to the sifted key.
struct DistillationModel {
    enum class Kind {
        ideal_asymptotic,  // 1 - 2 h2(q), clamped at 0
        ec_efficiency,     // 1 - (1 + f) h2(q), clamped at 0; param = f >= 1
        fixed_fraction,    // param = r while q is below the abort threshold
    };

    Kind kind = Kind::ideal_asymptotic;
    double param = 0.0;

    static DistillationModel ideal_asymptotic() { return {Kind::ideal_asymptotic, 0.0}; }

    static DistillationModel ec_efficiency(double f) {
        if (!(f >= 1.0) || !std::isfinite(f))
            throw DomainError("DistillationModel: error correction efficiency must be >= 1");
        return {Kind::ec_efficiency, f};
    }

    static DistillationModel fixed_fraction(double r) {
        if (!(r >= 0.0 && r <= 1.0))
            throw DomainError("DistillationModel: fixed fraction must be in [0, 1]");
        return {Kind::fixed_fraction, r};
    }
};

// Abort threshold used by the fixed_fraction model (the entropy-based
// models hit zero on their own below this point).
inline constexpr double k_qber_abort_threshold = 0.11;

// Secure fraction of the sifted key at quantum bit error rate q.
inline double secure_fraction(double qber, const DistillationModel& model) {
    if (!(qber >= 0.0 && qber <= 0.5))
        throw DomainError("secure_fraction: QBER must be in [0, 0.5]");
    switch (model.kind) {
    case DistillationModel::Kind::ideal_asymptotic:
        return std::max(0.0, 1.0 - 2.0 * binary_entropy(qber));
    case DistillationModel::Kind::ec_efficiency:
        return std::max(0.0, 1.0 - (1.0 + model.param) * binary_entropy(qber));
    default:
        return qber < k_qber_abort_threshold ? model.param : 0.0;
    }
}

// Secure key rate (bit/s): one raw key bit per accepted click, scaled by
// the distillation fraction at the estimated QBER.
inline double secure_key_rate_bps(double raw_rate_cps, double qber,
                                  const DistillationModel& model) {
    if (!(raw_rate_cps >= 0.0))
        throw DomainError("secure_key_rate_bps: rate must be >= 0");
    return raw_rate_cps * secure_fraction(qber, model);
}

// Classical throughput an OTP-free AES link secures when every key_bits
// of fresh secret key re-keys one chunk_gbytes block of traffic:
//   capacity = secure_bps / key_bits * (chunk_gbytes * 8e9)   [bit/s].
inline double aes_secured_capacity_bps(double secure_bps, double key_bits = 256.0,
                                       double chunk_gbytes = 64.0) {
    if (!(secure_bps >= 0.0))
        throw DomainError("aes_secured_capacity_bps: key rate must be >= 0");
    if (!(key_bits > 0.0) || !(chunk_gbytes > 0.0))
        throw DomainError("aes_secured_capacity_bps: key size and chunk must be > 0");
    return secure_bps / key_bits * (chunk_gbytes * 8.0e9);
}

// Sifted-key QBER of the windowed single-detector receiver. Signal clicks
// carry the optical error rate; background clicks (dark + optical noise)
// land on either bit with equal probability. Dead time cancels out.
//   qber = (e_opt * S + B/2) / (S + B),  S = sifted signal, B = background.
inline double qber_analytic(double signal_in_window_cps, double background_in_window_cps,
                            double e_opt) {
    if (!(e_opt >= 0.0 && e_opt <= 0.5))
        throw DomainError("qber_analytic: e_opt must be in [0, 0.5]");
    if (!(signal_in_window_cps >= 0.0) || !(background_in_window_cps >= 0.0))
        throw DomainError("qber_analytic: rates must be >= 0");
    const double total = signal_in_window_cps + background_in_window_cps;
    if (total <= 0.0)
        throw UndefinedQber("qber_analytic: no clicks, QBER undefined");
    return (e_opt * signal_in_window_cps + 0.5 * background_in_window_cps) / total;
}

} // namespace qcoex
