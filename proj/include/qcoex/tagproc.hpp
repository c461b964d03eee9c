#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <string>
#include <vector>

#include "qcoex/bb84.hpp"
#include "qcoex/errors.hpp"
#include "qcoex/tagstream.hpp"

namespace qcoex {

// Symbol-boundary clock phase recovered from the arrival-time histogram.
// phase_ps is in [0, period); contrast is 1 for a perfectly gated stream
// and ~0 for phase-less (uniform) arrivals.
struct PhaseEstimate {
    double phase_ps = 0.0;
    double contrast = 0.0;
    std::size_t tag_count = 0;
};

// Minimum number of tags for any statistical stage of the pipeline.
inline constexpr std::size_t k_min_tags_for_estimate = 100;

// Folds arrivals into one symbol period, finds the contiguous window of
// bins holding the most counts, and takes the circular mean of the tag
// offsets inside it as the window center. The symbol boundary sits half a
// period away from that center.
inline PhaseEstimate recover_clock_phase(std::span<const TagRecord> tags,
                                         std::uint64_t period_ps, double window_fraction = 0.5,
                                         unsigned n_bins = 64) {
    if (period_ps == 0)
        throw DomainError("recover_clock_phase: period must be > 0");
    if (!(window_fraction > 0.0 && window_fraction <= 1.0))
        throw DomainError("recover_clock_phase: window fraction must be in (0, 1]");
    if (n_bins < 2)
        throw DomainError("recover_clock_phase: need at least 2 bins");
    if (tags.size() < k_min_tags_for_estimate)
        throw InsufficientStatistics("recover_clock_phase: " + std::to_string(tags.size()) +
                                         " tags, need " +
                                         std::to_string(k_min_tags_for_estimate),
                                     tags.size());

    const auto bin_of = [&](std::uint64_t offset) {
        return static_cast<unsigned>((static_cast<unsigned __int128>(offset) * n_bins) /
                                     period_ps);
    };

    std::vector<std::uint64_t> counts(n_bins, 0);
    for (const TagRecord& t : tags)
        ++counts[bin_of(t.timestamp_ps % period_ps)];

    const unsigned w_bins = std::clamp<unsigned>(
        static_cast<unsigned>(std::llround(window_fraction * n_bins)), 1, n_bins);
    unsigned best_start = 0;
    std::uint64_t best_sum = 0;
    for (unsigned s = 0; s < n_bins; ++s) {
        std::uint64_t sum = 0;
        for (unsigned j = 0; j < w_bins; ++j)
            sum += counts[(s + j) % n_bins];
        if (sum > best_sum) {
            best_sum = sum;
            best_start = s;
        }
    }

    const auto in_window = [&](unsigned bin) {
        return (bin + n_bins - best_start) % n_bins < w_bins;
    };

    // Circular mean of in-window tag offsets; robust to the window
    // straddling the period boundary.
    const double two_pi = 2.0 * 3.14159265358979323846;
    double sum_sin = 0.0;
    double sum_cos = 0.0;
    std::size_t m_in = 0;
    for (const TagRecord& t : tags) {
        const std::uint64_t offset = t.timestamp_ps % period_ps;
        if (!in_window(bin_of(offset)))
            continue;
        const double theta = two_pi * static_cast<double>(offset) / static_cast<double>(period_ps);
        sum_sin += std::sin(theta);
        sum_cos += std::cos(theta);
        ++m_in;
    }

    PhaseEstimate est;
    est.tag_count = tags.size();
    const double w_eff = static_cast<double>(w_bins) / n_bins;
    if (w_eff < 1.0) {
        const double expected = w_eff * static_cast<double>(tags.size());
        est.contrast = (static_cast<double>(m_in) - expected) /
                       (static_cast<double>(tags.size()) * (1.0 - w_eff));
    }

    double center = 0.0;
    if (m_in > 0 && (sum_sin != 0.0 || sum_cos != 0.0)) {
        double angle = std::atan2(sum_sin, sum_cos);
        if (angle < 0.0)
            angle += two_pi;
        center = angle / two_pi * static_cast<double>(period_ps);
    }
    double phase = center - 0.5 * static_cast<double>(period_ps);
    if (phase < 0.0)
        phase += static_cast<double>(period_ps);
    est.phase_ps = phase;
    return est;
}

// A tag that passed the temporal filter, annotated with the index of the
// symbol it fell in (relative to the supplied clock phase).
struct FilteredTag {
    std::uint64_t timestamp_ps = 0;
    std::int64_t symbol_index = 0;
};

struct FilterResult {
    std::vector<FilteredTag> accepted;
    std::size_t rejected = 0;
    std::uint64_t window_ps = 0;
    std::uint64_t window_lo_ps = 0;     // window start within the symbol
};

// Keeps tags inside the centered acceptance window of each symbol. The
// phase is quantized to 1 ps (tag resolution); window membership is exact
// integer arithmetic, closed at the lower edge and open at the upper one.
// Symbol i spans [phase + i*period, phase + (i+1)*period).
inline FilterResult temporal_filter(std::span<const TagRecord> tags, double phase_ps,
                                    double window_fraction, std::uint64_t period_ps) {
    if (period_ps == 0)
        throw DomainError("temporal_filter: period must be > 0");
    if (!(window_fraction > 0.0 && window_fraction <= 1.0))
        throw DomainError("temporal_filter: window fraction must be in (0, 1]");
    if (!std::isfinite(phase_ps))
        throw DomainError("temporal_filter: phase must be finite");

    const auto t_period = static_cast<std::int64_t>(period_ps);
    std::int64_t phase = static_cast<std::int64_t>(std::llround(phase_ps)) % t_period;
    if (phase < 0)
        phase += t_period;

    const std::int64_t w = std::max<std::int64_t>(
        1, std::llround(window_fraction * static_cast<double>(period_ps)));
    const std::int64_t lo = (t_period - w) / 2;

    FilterResult res;
    res.window_ps = static_cast<std::uint64_t>(w);
    res.window_lo_ps = static_cast<std::uint64_t>(lo);
    res.accepted.reserve(tags.size());
    for (const TagRecord& t : tags) {
        const std::int64_t d = static_cast<std::int64_t>(t.timestamp_ps) - phase;
        std::int64_t r = d % t_period;
        if (r < 0)
            r += t_period;
        if (r >= lo && r < lo + w)
            res.accepted.push_back({t.timestamp_ps, (d - r) / t_period});
        else
            ++res.rejected;
    }
    return res;
}

// Cyclic alignment of click symbol indices against the reference frame.
// offset means: the click at symbol index i was transmitted as
// frame[(i + offset) mod frame_len]. score is the fraction of same-basis
// clicks that land on the monitored detector's bit, i.e. 1 - QBER at the
// true shift and ~0.5 at wrong shifts.
struct FrameAlignment {
    std::size_t offset = 0;
    double score = 0.0;
    std::size_t clicked_symbols = 0;
};

inline FrameAlignment frame_align(std::span<const FilteredTag> clicks,
                                  const std::vector<PolState>& frame, Basis rx_basis,
                                  int rx_bit, double score_floor = 0.6) {
    if (frame.empty())
        throw DomainError("frame_align: frame must be non-empty");
    if (rx_bit != 0 && rx_bit != 1)
        throw DomainError("frame_align: bit must be 0 or 1");
    if (clicks.size() < k_min_tags_for_estimate)
        throw InsufficientStatistics("frame_align: " + std::to_string(clicks.size()) +
                                         " clicks, need " +
                                         std::to_string(k_min_tags_for_estimate),
                                     clicks.size());

    const auto F = static_cast<std::int64_t>(frame.size());
    std::vector<std::uint64_t> cnt(frame.size(), 0);
    std::int64_t prev_sym = 0;
    bool have_prev = false;
    std::size_t clicked = 0;
    for (const FilteredTag& c : clicks) {
        if (have_prev && c.symbol_index == prev_sym)
            continue;                   // one click per symbol
        prev_sym = c.symbol_index;
        have_prev = true;
        ++clicked;
        std::int64_t r = c.symbol_index % F;
        if (r < 0)
            r += F;
        ++cnt[static_cast<std::size_t>(r)];
    }

    std::vector<bool> match(frame.size());
    std::vector<bool> sift(frame.size());
    for (std::size_t j = 0; j < frame.size(); ++j) {
        sift[j] = basis_of(frame[j]) == rx_basis;
        match[j] = sift[j] && bit_of(frame[j]) == rx_bit;
    }

    FrameAlignment best;
    best.score = -1.0;
    best.clicked_symbols = clicked;
    for (std::size_t s = 0; s < frame.size(); ++s) {
        std::uint64_t num = 0;
        std::uint64_t den = 0;
        for (std::size_t r = 0; r < frame.size(); ++r) {
            const std::size_t j = (r + s) % frame.size();
            if (sift[j]) {
                den += cnt[r];
                if (match[j])
                    num += cnt[r];
            }
        }
        if (den == 0)
            continue;
        const double score = static_cast<double>(num) / static_cast<double>(den);
        if (score > best.score) {
            best.score = score;
            best.offset = s;
        }
    }
    if (best.score < score_floor)
        throw SyncFailure("frame_align: best correlation score " + std::to_string(best.score) +
                              " below floor " + std::to_string(score_floor),
                          best.score);
    return best;
}

// Sifted-key statistics of an aligned, filtered click stream.
struct EstimationReport {
    std::size_t accepted = 0;           // tags inside the temporal window
    std::size_t rejected = 0;
    std::size_t clicked_symbols = 0;    // after first-tag-wins dedupe
    std::size_t sifted_bits = 0;
    std::size_t error_bits = 0;
    double qber = 0.0;
    double raw_rate_cps = 0.0;          // accepted clicks / duration
    double duration_s = 0.0;
};

inline EstimationReport estimate_qber(const FilterResult& filtered,
                                      const FrameAlignment& alignment,
                                      const std::vector<PolState>& frame, Basis rx_basis,
                                      int rx_bit, double duration_s) {
    if (frame.empty())
        throw DomainError("estimate_qber: frame must be non-empty");
    if (!(duration_s > 0.0) || !std::isfinite(duration_s))
        throw DomainError("estimate_qber: duration must be > 0");

    const auto F = static_cast<std::int64_t>(frame.size());
    EstimationReport rep;
    rep.accepted = filtered.accepted.size();
    rep.rejected = filtered.rejected;
    rep.duration_s = duration_s;
    rep.raw_rate_cps = static_cast<double>(rep.accepted) / duration_s;

    std::int64_t prev_sym = 0;
    bool have_prev = false;
    for (const FilteredTag& c : filtered.accepted) {
        if (have_prev && c.symbol_index == prev_sym)
            continue;
        prev_sym = c.symbol_index;
        have_prev = true;
        ++rep.clicked_symbols;
        std::int64_t r = c.symbol_index % F;
        if (r < 0)
            r += F;
        const std::size_t j =
            (static_cast<std::size_t>(r) + alignment.offset) % frame.size();
        if (basis_of(frame[j]) != rx_basis)
            continue;
        ++rep.sifted_bits;
        if (bit_of(frame[j]) != rx_bit)
            ++rep.error_bits;
    }
    if (rep.sifted_bits == 0)
        throw UndefinedQber("estimate_qber: no sifted bits");
    rep.qber = static_cast<double>(rep.error_bits) / static_cast<double>(rep.sifted_bits);
    return rep;
}

// Full receiver pipeline: clock recovery, temporal filtering, frame
// alignment, QBER estimation.
struct AnalysisReport {
    PhaseEstimate phase;
    FrameAlignment alignment;
    EstimationReport estimation;
};

// duration_s <= 0 derives the acquisition length from the tag span,
// rounded up to whole symbols; pass the true duration when it is known.
inline AnalysisReport analyze_tag_stream(const TagStream& stream,
                                         const std::vector<PolState>& frame, Basis rx_basis,
                                         int rx_bit, double window_fraction = 0.5,
                                         unsigned n_bins = 64, double score_floor = 0.6,
                                         double duration_s = 0.0) {
    AnalysisReport rep;
    rep.phase = recover_clock_phase(stream.tags, stream.symbol_period_ps, window_fraction,
                                    n_bins);
    const FilterResult filtered =
        temporal_filter(stream.tags, rep.phase.phase_ps, window_fraction,
                        stream.symbol_period_ps);
    rep.alignment = frame_align(filtered.accepted, frame, rx_basis, rx_bit, score_floor);
    double duration = duration_s;
    if (!(duration > 0.0)) {
        if (stream.tags.empty())
            throw InsufficientStatistics("analyze_tag_stream: empty stream", 0);
        const std::uint64_t span =
            stream.tags.back().timestamp_ps - stream.tags.front().timestamp_ps;
        const std::uint64_t symbols = span / stream.symbol_period_ps + 1;
        duration = static_cast<double>(symbols) *
                   static_cast<double>(stream.symbol_period_ps) * 1.0e-12;
    }
    rep.estimation = estimate_qber(filtered, rep.alignment, frame, rx_basis, rx_bit, duration);
    return rep;
}

} // namespace qcoex
