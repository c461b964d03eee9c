#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "qcoex/montecarlo.hpp"

using namespace qcoex;
using Catch::Approx;

namespace {

RunConfig base_run(double mu_arrival, double dark_cps, std::uint64_t n_symbols,
                   std::uint64_t seed, std::uint64_t phase_ps = 0) {
    RunConfig rc;
    rc.seed = seed;
    rc.n_symbols = n_symbols;
    rc.symbol_period_ps = 10'000;
    rc.clock_phase_ps = phase_ps;
    rc.frame = make_random_frame(1024, 20260817);
    rc.physics.mu_arrival = mu_arrival;
    rc.physics.spad.efficiency = 0.1;
    rc.physics.spad.dead_time_s = 25.0e-6;
    rc.physics.spad.dark_rate_cps = dark_cps;
    return rc;
}

} // namespace

TEST_CASE("seed mixing separates batch streams", "[montecarlo]") {
    REQUIRE(detail::mix_seed(1, 0) == detail::mix_seed(1, 0));
    REQUIRE(detail::mix_seed(1, 0) != detail::mix_seed(1, 1));
    REQUIRE(detail::mix_seed(1, 0) != detail::mix_seed(2, 0));
}

TEST_CASE("open interval uniforms never touch the endpoints", "[montecarlo]") {
    std::mt19937_64 rng(7);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 100'000; ++i) {
        const double u = detail::uniform_open01(rng);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    REQUIRE(lo > 0.0);
    REQUIRE(hi < 1.0);
    REQUIRE(lo < 1.0e-3);
    REQUIRE(hi > 1.0 - 1.0e-3);
}

TEST_CASE("truncated poisson matches its conditional mean", "[montecarlo]") {
    std::mt19937_64 rng(11);
    const double mean = 2.0;
    const int n = 100'000;
    long long sum = 0;
    int min_k = 99;
    for (int i = 0; i < n; ++i) {
        const int k = detail::truncated_poisson_ge1(mean, rng);
        REQUIRE(k >= 1);
        sum += k;
        min_k = std::min(min_k, k);
    }
    REQUIRE(min_k == 1);
    const double expect = mean / (1.0 - std::exp(-mean));
    REQUIRE(static_cast<double>(sum) / n == Approx(expect).margin(0.02));

    // Vanishing mean: nearly all draws are exactly one photon.
    long long ones = 0;
    for (int i = 0; i < 10'000; ++i)
        ones += detail::truncated_poisson_ge1(1.0e-6, rng) == 1 ? 1 : 0;
    REQUIRE(ones >= 9'995);
}

TEST_CASE("random frame is balanced and reproducible", "[montecarlo]") {
    const auto frame = make_random_frame(1024, 20260817);
    REQUIRE(frame.size() == 1024);
    std::array<int, 4> counts{};
    for (PolState s : frame)
        ++counts[static_cast<int>(s)];
    for (int c : counts)
        REQUIRE(c == 256);

    REQUIRE(make_random_frame(1024, 20260817) == frame);
    REQUIRE(make_random_frame(1024, 1) != frame);

    const auto odd = make_random_frame(6, 3);
    std::array<int, 4> oc{};
    for (PolState s : odd)
        ++oc[static_cast<int>(s)];
    for (int c : oc) {
        REQUIRE(c >= 1);
        REQUIRE(c <= 2);
    }
    REQUIRE_THROWS_AS(make_random_frame(0, 1), DomainError);
}

TEST_CASE("dead time pass drops events inside the hold off", "[montecarlo]") {
    const std::uint64_t tau = 25'000'000;  // 25 us in ps
    const std::vector<TagRecord> tags = {
        {0, 0},          {1'000'000, 0},  {24'999'999, 0},
        {25'000'000, 0}, {25'000'001, 0}, {50'000'000, 0},
    };
    const auto out = apply_dead_time(tags, tau);
    REQUIRE(out.size() == 3);
    REQUIRE(out[0].timestamp_ps == 0);
    REQUIRE(out[1].timestamp_ps == 25'000'000);
    REQUIRE(out[2].timestamp_ps == 50'000'000);

    // Zero dead time still collapses duplicate timestamps.
    const std::vector<TagRecord> dup = {{5, 0}, {5, 0}, {6, 0}};
    const auto out2 = apply_dead_time(dup, 0);
    REQUIRE(out2.size() == 2);
}

TEST_CASE("signal generation respects projection and window geometry", "[montecarlo]") {
    // Elevated photon number, no noise: every tag is signal, inside the
    // centered window, and never from the orthogonal state.
    RunConfig rc = base_run(0.02, 0.0, 2'000'000, 123);
    rc.physics.spad.dead_time_s = 0.0;  // keep every click for counting
    const McRun run = simulate_quantum_run(rc);

    const std::uint64_t T = rc.symbol_period_ps;
    std::uint64_t n_d = 0, n_a = 0;
    for (const TruthTag& t : run.truth.tags) {
        REQUIRE(t.origin == TagOrigin::signal);
        REQUIRE(t.tx_state != PolState::L);
        const std::uint64_t off = t.timestamp_ps - static_cast<std::uint64_t>(t.symbol_index) * T;
        REQUIRE(off >= 2'500);
        REQUIRE(off < 7'500);
        if (t.tx_state == PolState::D)
            ++n_d;
        else if (t.tx_state == PolState::A)
            ++n_a;
    }

    // Expected tag count equals the mean arriving photon number that
    // projects onto the monitored detector: n/4 * mu*eta * (1 + 1/2 + 1/2).
    const double expect = 2'000'000.0 / 4.0 * 0.002 * 2.0;
    const double sigma = std::sqrt(expect);
    REQUIRE(std::abs(static_cast<double>(run.truth.tags.size()) - expect) < 5.0 * sigma);

    // Conjugate-basis states click equally often.
    const double chi2 = static_cast<double>((n_d - n_a) * (n_d - n_a)) /
                        static_cast<double>(n_d + n_a);
    REQUIRE(chi2 < 10.828);
}

TEST_CASE("background only run reproduces the dead time law", "[montecarlo]") {
    for (double r_tau : {0.05, 0.5, 2.0}) {
        const double tau = 250.0e-9;
        const double rate = r_tau / tau;
        const double observed_expect = rate / (1.0 + rate * tau);
        // Enough symbols for about 2e5 surviving events.
        const double duration_s = 2.0e5 / observed_expect;
        const auto n_symbols =
            static_cast<std::uint64_t>(std::ceil(duration_s * 1.0e8));
        RunConfig rc = base_run(0.0, rate, n_symbols, 97 + static_cast<int>(r_tau * 10));
        rc.physics.spad.dead_time_s = tau;
        const McRun run = simulate_quantum_run(rc);
        const double observed = static_cast<double>(run.truth.count_survived) /
                                run.truth.duration_s();
        REQUIRE(observed == Approx(observed_expect).epsilon(0.01));
        REQUIRE(run.truth.count_dark == run.truth.tags.size());
    }
}

TEST_CASE("clock phase shifts every timestamp", "[montecarlo]") {
    RunConfig a = base_run(0.02, 0.0, 100'000, 5, 0);
    RunConfig b = base_run(0.02, 0.0, 100'000, 5, 1'234);
    const McRun ra = simulate_quantum_run(a);
    const McRun rb = simulate_quantum_run(b);
    REQUIRE(ra.truth.tags.size() == rb.truth.tags.size());
    for (std::size_t i = 0; i < ra.truth.tags.size(); ++i)
        REQUIRE(rb.truth.tags[i].timestamp_ps == ra.truth.tags[i].timestamp_ps + 1'234);
}

TEST_CASE("output is a pure function of seed, not thread count", "[montecarlo]") {
    RunConfig rc = base_run(3.0e-4, 485.0, 2'000'000, 31, 777);
    rc.physics.raman_photon_cps = 5.0e4;
    rc.physics.leakage_photon_cps = 2.0e4;
    rc.threads = 1;
    const McRun one = simulate_quantum_run(rc);
    rc.threads = 3;
    const McRun three = simulate_quantum_run(rc);
    rc.threads = 8;
    const McRun eight = simulate_quantum_run(rc);

    REQUIRE(one.stream.tags == three.stream.tags);
    REQUIRE(one.stream.tags == eight.stream.tags);
    REQUIRE(one.truth.count_signal == three.truth.count_signal);
    REQUIRE(one.truth.count_dark == three.truth.count_dark);
    REQUIRE(one.truth.count_raman == three.truth.count_raman);
    REQUIRE(one.truth.count_leakage == three.truth.count_leakage);
    REQUIRE(one.truth.count_survived == three.truth.count_survived);

    // Same seed reproduces; a different seed does not.
    rc.threads = 2;
    const McRun again = simulate_quantum_run(rc);
    REQUIRE(again.stream.tags == one.stream.tags);
    rc.seed = 32;
    const McRun other = simulate_quantum_run(rc);
    REQUIRE(other.stream.tags != one.stream.tags);
}

TEST_CASE("public stream is the surviving truth on channel zero", "[montecarlo]") {
    RunConfig rc = base_run(3.0e-4, 485.0, 1'000'000, 8);
    const McRun run = simulate_quantum_run(rc);
    REQUIRE(run.stream.channel_count == 1);
    REQUIRE(run.stream.symbol_period_ps == rc.symbol_period_ps);
    REQUIRE(run.stream.tags.size() == run.truth.count_survived);
    std::size_t j = 0;
    std::uint64_t prev = 0;
    for (const TruthTag& t : run.truth.tags) {
        if (!t.survived_dead_time)
            continue;
        REQUIRE(run.stream.tags[j].timestamp_ps == t.timestamp_ps);
        REQUIRE(run.stream.tags[j].channel == 0);
        if (j > 0)
            REQUIRE(t.timestamp_ps > prev);
        prev = t.timestamp_ps;
        ++j;
    }
    REQUIRE(j == run.stream.tags.size());

    const std::uint64_t total = run.truth.count_signal + run.truth.count_dark +
                                run.truth.count_raman + run.truth.count_leakage;
    REQUIRE(total == run.truth.tags.size());
}

TEST_CASE("run configuration is validated", "[montecarlo]") {
    RunConfig rc = base_run(0.01, 0.0, 1'000, 1);
    rc.clock_phase_ps = rc.symbol_period_ps;  // phase must stay inside one period
    REQUIRE_THROWS_AS(simulate_quantum_run(rc), DomainError);
    rc = base_run(0.01, 0.0, 0, 1);
    REQUIRE_THROWS_AS(simulate_quantum_run(rc), DomainError);
    rc = base_run(-0.01, 0.0, 1'000, 1);
    REQUIRE_THROWS_AS(simulate_quantum_run(rc), DomainError);
    rc = base_run(0.01, 0.0, 1'000, 1);
    rc.frame.clear();
    REQUIRE_THROWS_AS(simulate_quantum_run(rc), DomainError);
}
