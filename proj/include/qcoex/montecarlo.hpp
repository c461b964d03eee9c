#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

#include "qcoex/bb84.hpp"
#include "qcoex/detection.hpp"
#include "qcoex/errors.hpp"
#include "qcoex/tagstream.hpp"

namespace qcoex {

enum class TagOrigin : std::uint8_t { signal = 0, dark = 1, raman = 2, leakage = 3 };

// Ground-truth detection event, kept alongside the public tag stream so
// tests can compare reconstruction against what actually happened.
struct TruthTag {
    std::uint64_t timestamp_ps = 0;
    TagOrigin origin = TagOrigin::signal;
    std::int64_t symbol_index = 0;
    PolState tx_state = PolState::R;
    bool survived_dead_time = false;
};

// Physics at the receiver for one simulated acquisition. Photon rates are
// at the receiver input (detector efficiency applied inside the engine);
// the dark rate fires the counter directly.
struct McPhysics {
    double mu_arrival = 0.0;            // mean photons/symbol at the receiver
    SpadSpec spad;
    double raman_photon_cps = 0.0;
    double leakage_photon_cps = 0.0;
    double e_opt = 0.0;
    double window_fraction = 0.5;       // temporal acceptance window / period
    double signal_window_acceptance = 1.0;  // fraction of signal inside that window
    Basis receiver_basis = Basis::circular;
    int receiver_bit = 0;

    void validate() const {
        spad.validate();
        if (!(mu_arrival >= 0.0) || !std::isfinite(mu_arrival))
            throw DomainError("McPhysics: mu must be finite and >= 0");
        if (!(raman_photon_cps >= 0.0) || !(leakage_photon_cps >= 0.0))
            throw DomainError("McPhysics: noise rates must be >= 0");
        if (!(e_opt >= 0.0 && e_opt <= 0.5))
            throw DomainError("McPhysics: e_opt must be in [0, 0.5]");
        if (!(window_fraction > 0.0 && window_fraction <= 1.0))
            throw DomainError("McPhysics: window fraction must be in (0, 1]");
        if (!(signal_window_acceptance > 0.0 && signal_window_acceptance <= 1.0))
            throw DomainError("McPhysics: window acceptance must be in (0, 1]");
        if (receiver_bit != 0 && receiver_bit != 1)
            throw DomainError("McPhysics: receiver bit must be 0 or 1");
    }
};

// One simulated acquisition. Results are a pure function of this struct;
// thread count only changes wall time, never output.
struct RunConfig {
    std::uint64_t seed = 1;
    std::uint64_t n_symbols = 0;
    std::uint64_t symbol_period_ps = 10'000;
    std::uint64_t clock_phase_ps = 0;   // symbol-boundary offset, in [0, period)
    std::vector<PolState> frame;        // transmitted pattern, repeated cyclically
    McPhysics physics;
    std::uint32_t batch_symbols = 65'536;
    unsigned threads = 0;               // 0 = hardware concurrency

    void validate() const {
        physics.validate();
        if (n_symbols == 0)
            throw DomainError("RunConfig: need at least one symbol");
        if (symbol_period_ps == 0)
            throw DomainError("RunConfig: symbol period must be > 0");
        if (clock_phase_ps >= symbol_period_ps)
            throw DomainError("RunConfig: clock phase must lie inside one period");
        if (frame.empty())
            throw DomainError("RunConfig: frame must be non-empty");
        if (batch_symbols == 0)
            throw DomainError("RunConfig: batch size must be > 0");
    }
};

struct RunTruth {
    std::vector<PolState> frame;
    std::uint64_t clock_phase_ps = 0;
    std::uint64_t symbol_period_ps = 0;
    std::uint64_t n_symbols = 0;
    std::vector<TruthTag> tags;         // every detection, pre-dead-time, time-ordered
    std::uint64_t count_signal = 0;
    std::uint64_t count_dark = 0;
    std::uint64_t count_raman = 0;
    std::uint64_t count_leakage = 0;
    std::uint64_t count_survived = 0;

    double duration_s() const noexcept {
        return static_cast<double>(n_symbols) * static_cast<double>(symbol_period_ps) * 1.0e-12;
    }
};

struct McRun {
    TagStream stream;
    RunTruth truth;
};

namespace detail {

// splitmix64 finalizer over (seed, stream); decorrelates per-batch
// generators without any sequential state.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Uniform double in the open interval (0, 1); safe for logarithms.
inline double uniform_open01(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

// Uniform integer in [0, n) via 128-bit multiply; bias is O(n / 2^64).
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(rng()) * static_cast<unsigned __int128>(n)) >> 64);
}

// Poisson count conditioned on >= 1, by inversion of the truncated CDF.
inline int truncated_poisson_ge1(double mean, std::mt19937_64& rng) {
    const double total = -std::expm1(-mean);       // P(k >= 1)
    const double target = uniform_open01(rng) * total;
    double term = std::exp(-mean);
    double cum = 0.0;
    int k = 0;
    while (k < 64) {
        ++k;
        term *= mean / k;
        cum += term;
        if (cum >= target)
            break;
    }
    return k;
}

} // namespace detail

// Random 4-state pattern of the given length: state counts as equal as the
// length allows (exactly equal when length % 4 == 0), order shuffled. The
// balanced composition makes the ensemble sift factor exactly 1/2, so the
// analytic rate model applies to the pattern without composition bias.
// Seeded independently of the acquisition seed so the public pattern is
// reproducible on its own.
inline std::vector<PolState> make_random_frame(std::size_t length, std::uint64_t pattern_seed) {
    if (length == 0)
        throw DomainError("make_random_frame: length must be > 0");
    std::vector<PolState> frame(length);
    for (std::size_t i = 0; i < length; ++i)
        frame[i] = static_cast<PolState>(i & 3u);
    std::mt19937_64 rng(detail::mix_seed(pattern_seed, 0x70617474u));
    for (std::size_t i = length - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(detail::uniform_below(rng, i + 1));
        std::swap(frame[i], frame[j]);
    }
    return frame;
}

// Non-paralyzable dead-time pass over a time-ordered tag list. Returns the
// surviving tags; equal timestamps collapse to the first occurrence even
// at zero dead time.
inline std::vector<TagRecord> apply_dead_time(const std::vector<TagRecord>& tags,
                                              std::uint64_t dead_time_ps) {
    std::vector<TagRecord> out;
    out.reserve(tags.size());
    bool armed = true;
    std::uint64_t last = 0;
    for (const TagRecord& t : tags) {
        if (!armed) {
            if (t.timestamp_ps <= last || t.timestamp_ps - last < dead_time_ps)
                continue;
        }
        out.push_back(t);
        last = t.timestamp_ps;
        armed = false;
    }
    return out;
}

namespace detail {

struct BatchOutput {
    std::vector<TruthTag> tags;
};

inline void simulate_batch(const RunConfig& cfg, std::uint64_t batch_index,
                           std::uint64_t sym_begin, std::uint64_t sym_end, BatchOutput& out) {
    std::mt19937_64 rng(mix_seed(cfg.seed, batch_index));
    const McPhysics& ph = cfg.physics;
    const std::uint64_t T = cfg.symbol_period_ps;
    const std::uint64_t W = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(std::llround(ph.window_fraction * static_cast<double>(T))));
    const std::uint64_t win_lo = (T - W) / 2;
    const std::uint64_t t0 = cfg.clock_phase_ps + sym_begin * T;
    const std::uint64_t t1 = cfg.clock_phase_ps + sym_end * T;
    const std::size_t frame_len = cfg.frame.size();

    // Signal clicks: thinned geometric skipping over symbols. Each state
    // has click probability 1 - exp(-mu * eta * projection).
    double p_state[4];
    double m_state[4];
    double p_max = 0.0;
    for (int s = 0; s < 4; ++s) {
        const double proj = projection_probability(static_cast<PolState>(s), ph.receiver_basis,
                                                   ph.receiver_bit, ph.e_opt);
        m_state[s] = ph.mu_arrival * ph.spad.efficiency * proj;
        p_state[s] = -std::expm1(-m_state[s]);
        p_max = std::max(p_max, p_state[s]);
    }
    if (p_max > 0.0) {
        const double log_q = std::log1p(-p_max);    // -inf when p_max == 1
        std::uint64_t i = sym_begin;
        while (i < sym_end) {
            if (p_max < 1.0) {
                const double g = std::floor(std::log(uniform_open01(rng)) / log_q);
                if (g >= static_cast<double>(sym_end - i))
                    break;
                i += static_cast<std::uint64_t>(g);
            }
            const PolState tx = cfg.frame[static_cast<std::size_t>(i % frame_len)];
            const int s = static_cast<int>(tx);
            if (uniform_open01(rng) * p_max < p_state[s]) {
                const int k = truncated_poisson_ge1(m_state[s], rng);
                const std::uint64_t sym_start = cfg.clock_phase_ps + i * T;
                for (int j = 0; j < k; ++j) {
                    std::uint64_t offset;
                    if (uniform_open01(rng) < ph.signal_window_acceptance) {
                        offset = win_lo + uniform_below(rng, W);
                    } else {
                        const std::uint64_t v = uniform_below(rng, T - W);
                        offset = v < win_lo ? v : v + W;
                    }
                    out.tags.push_back({sym_start + offset, TagOrigin::signal,
                                        static_cast<std::int64_t>(i), tx, false});
                }
            }
            ++i;
        }
    }

    // Background processes: homogeneous Poisson via exponential gaps.
    struct Process {
        TagOrigin origin;
        double rate_cps;
    };
    const Process procs[3] = {
        {TagOrigin::dark, ph.spad.dark_rate_cps},
        {TagOrigin::raman, ph.raman_photon_cps * ph.spad.efficiency},
        {TagOrigin::leakage, ph.leakage_photon_cps * ph.spad.efficiency},
    };
    for (const Process& pr : procs) {
        if (!(pr.rate_cps > 0.0))
            continue;
        double t = static_cast<double>(t0);
        const double scale = 1.0e12 / pr.rate_cps;  // mean gap in ps
        while (true) {
            t += -std::log(uniform_open01(rng)) * scale;
            if (!(t < static_cast<double>(t1)))
                break;
            const auto ts = static_cast<std::uint64_t>(t);
            if (ts >= t1)
                break;
            const auto sym = static_cast<std::uint64_t>((ts - cfg.clock_phase_ps) / T);
            out.tags.push_back({ts, pr.origin, static_cast<std::int64_t>(sym),
                                cfg.frame[static_cast<std::size_t>(sym % frame_len)], false});
        }
    }

    std::sort(out.tags.begin(), out.tags.end(), [](const TruthTag& a, const TruthTag& b) {
        if (a.timestamp_ps != b.timestamp_ps)
            return a.timestamp_ps < b.timestamp_ps;
        if (a.origin != b.origin)
            return a.origin < b.origin;
        return a.symbol_index < b.symbol_index;
    });
}

} // namespace detail

// Simulates one acquisition: per-symbol signal clicks on the monitored
// detector plus dark/Raman/leakage background, merged, then passed through
// the non-paralyzable dead time. Work is split into fixed-size symbol
// batches, each with its own counter-seeded generator, so the output is
// identical for any thread count.
inline McRun simulate_quantum_run(const RunConfig& cfg) {
    cfg.validate();

    const std::uint64_t n_batches =
        (cfg.n_symbols + cfg.batch_symbols - 1) / cfg.batch_symbols;
    std::vector<detail::BatchOutput> batches(static_cast<std::size_t>(n_batches));

    unsigned n_threads = cfg.threads != 0 ? cfg.threads : std::thread::hardware_concurrency();
    n_threads = std::max(1u, std::min<unsigned>(n_threads, 64));
    if (static_cast<std::uint64_t>(n_threads) > n_batches)
        n_threads = static_cast<unsigned>(n_batches);

    std::atomic<std::uint64_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::uint64_t b = next.fetch_add(1, std::memory_order_relaxed);
            if (b >= n_batches)
                return;
            const std::uint64_t sym_begin = b * cfg.batch_symbols;
            const std::uint64_t sym_end =
                std::min<std::uint64_t>(sym_begin + cfg.batch_symbols, cfg.n_symbols);
            detail::simulate_batch(cfg, b, sym_begin, sym_end,
                                   batches[static_cast<std::size_t>(b)]);
        }
    };
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (unsigned t = 0; t < n_threads; ++t)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }

    McRun run;
    run.truth.frame = cfg.frame;
    run.truth.clock_phase_ps = cfg.clock_phase_ps;
    run.truth.symbol_period_ps = cfg.symbol_period_ps;
    run.truth.n_symbols = cfg.n_symbols;

    std::size_t total = 0;
    for (const auto& b : batches)
        total += b.tags.size();
    run.truth.tags.reserve(total);
    for (auto& b : batches) {
        run.truth.tags.insert(run.truth.tags.end(), b.tags.begin(), b.tags.end());
        b.tags.clear();
        b.tags.shrink_to_fit();
    }

    // Sequential dead-time pass over the merged, time-ordered stream.
    const auto dead_ps = static_cast<std::uint64_t>(
        std::llround(cfg.physics.spad.dead_time_s * 1.0e12));
    run.stream.symbol_period_ps = cfg.symbol_period_ps;
    run.stream.channel_count = 1;
    bool armed = true;
    std::uint64_t last = 0;
    for (TruthTag& t : run.truth.tags) {
        switch (t.origin) {
        case TagOrigin::signal: ++run.truth.count_signal; break;
        case TagOrigin::dark: ++run.truth.count_dark; break;
        case TagOrigin::raman: ++run.truth.count_raman; break;
        case TagOrigin::leakage: ++run.truth.count_leakage; break;
        }
        if (!armed && (t.timestamp_ps <= last || t.timestamp_ps - last < dead_ps))
            continue;
        t.survived_dead_time = true;
        ++run.truth.count_survived;
        run.stream.tags.push_back({t.timestamp_ps, 0});
        last = t.timestamp_ps;
        armed = false;
    }
    return run;
}

} // namespace qcoex
