#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qcoex/config.hpp"
#include "qcoex/report.hpp"
#include "qcoex/tagproc.hpp"
#include "qcoex/tagstream.hpp"

namespace {

qcoex::ExperimentConfig load_or_default(const std::string& path) {
    if (path.empty())
        return qcoex::default_experiment_config();
    return qcoex::load_experiment_config(path);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f)
        throw qcoex::Error("cannot open " + path + " for writing");
    return f;
}

int cmd_calibrate(const std::string& config_path, const std::string& out_path) {
    qcoex::ExperimentConfig cfg = load_or_default(config_path);
    const qcoex::CalibrationOutcome out = qcoex::apply_calibration(cfg);
    const qcoex::ClosureReport closure = qcoex::verify_closure(cfg.model, cfg.anchors);
    std::cout << qcoex::render_calibration_text(out, closure);
    if (!out_path.empty()) {
        auto f = open_out(out_path);
        qcoex::write_calibration_csv(f, out, closure);
        std::cout << "wrote " << out_path << "\n";
    }
    if (!closure.all_pass) {
        std::cerr << "error: closure failed for:";
        for (const qcoex::AnchorCheck& c : closure.checks)
            if (!c.pass)
                std::cerr << ' ' << c.name;
        std::cerr << "\n";
        return 3;
    }
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& mode,
              const std::string& out_path, const std::string& plot_path) {
    qcoex::ExperimentConfig cfg = load_or_default(config_path);
    qcoex::apply_calibration(cfg);
    const qcoex::SweepResult sw = qcoex::run_coexistence_sweep(cfg.model, cfg.sweep);
    qcoex::SweepColumns cols = qcoex::SweepColumns::both;
    if (mode == "b2b")
        cols = qcoex::SweepColumns::b2b_only;
    else if (mode == "fiber")
        cols = qcoex::SweepColumns::fiber_only;
    {
        auto f = open_out(out_path);
        qcoex::write_sweep_csv(f, sw, cols);
    }
    std::cout << "wrote " << sw.points.size() << " rows to " << out_path << "\n";
    if (!plot_path.empty()) {
        auto f = open_out(plot_path);
        f << qcoex::render_sweep_svg(sw, cfg.model.protocol.qber_threshold);
        std::cout << "wrote " << plot_path << "\n";
    }
    return 0;
}

int cmd_soax(const std::string& config_path, const std::string& csv_path,
             const std::string& text_path) {
    qcoex::ExperimentConfig cfg = load_or_default(config_path);
    qcoex::apply_calibration(cfg);
    const qcoex::SoaxReport rep =
        qcoex::compute_soax(cfg.model, cfg.sweep, cfg.anchors.classical_target_ber,
                            cfg.model.protocol.qber_threshold);
    const std::string text =
        qcoex::render_soax_text(rep, qcoex::key_rate_convention_note(cfg.model, cfg.anchors));
    std::cout << text;
    if (!csv_path.empty()) {
        auto f = open_out(csv_path);
        qcoex::write_soax_csv(f, rep);
        std::cout << "wrote " << csv_path << "\n";
    }
    if (!text_path.empty()) {
        auto f = open_out(text_path);
        f << text;
        std::cout << "wrote " << text_path << "\n";
    }
    return 0;
}

int cmd_simulate(const qcoex::ExperimentConfig& cfg, const std::string& channel,
                 std::optional<double> rop_dbm, const std::string& out_path) {
    const qcoex::ChannelConfig ch = channel == "fiber" ? qcoex::ChannelConfig::fiber
                                                       : qcoex::ChannelConfig::back_to_back;
    qcoex::RunConfig rc =
        qcoex::make_run_config(cfg.model, ch, rop_dbm, cfg.mc.n_symbols, cfg.mc.seed,
                               cfg.mc.clock_phase_ps, cfg.mc.threads);
    rc.batch_symbols = cfg.mc.batch_symbols;
    const qcoex::McRun run = qcoex::simulate_quantum_run(rc);
    qcoex::write_tag_stream(run.stream, out_path);
    const qcoex::RunTruth& t = run.truth;
    std::cout << "simulated " << t.n_symbols << " symbols (" << qcoex::fmt_g(t.duration_s())
              << " s) on channel " << channel << "\n";
    std::cout << "detections: " << t.tags.size() << " (signal " << t.count_signal << ", dark "
              << t.count_dark << ", raman " << t.count_raman << ", leakage "
              << t.count_leakage << "), " << t.count_survived << " after dead time\n";
    std::cout << "wrote " << run.stream.tags.size() << " tags to " << out_path << "\n";
    return 0;
}

int cmd_analyze(const std::string& config_path, const std::string& tags_path,
                double duration_s, const std::string& out_path) {
    const qcoex::ExperimentConfig cfg = load_or_default(config_path);
    const qcoex::TagStream stream = qcoex::read_tag_stream(tags_path);
    const auto frame = qcoex::make_random_frame(cfg.model.protocol.frame_length,
                                                cfg.model.protocol.pattern_seed);
    const qcoex::AnalysisReport rep = qcoex::analyze_tag_stream(
        stream, frame, cfg.model.protocol.receiver_basis, cfg.model.protocol.receiver_bit,
        cfg.model.protocol.window_fraction, 64, 0.6, duration_s);
    std::cout << qcoex::render_analysis_text(rep);
    if (!out_path.empty()) {
        auto f = open_out(out_path);
        qcoex::write_analysis_csv(f, rep);
        std::cout << "wrote " << out_path << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"BB84 coexistence link simulator and analysis toolkit"};
    app.require_subcommand(1);

    std::string cal_config, cal_out;
    CLI::App* cal = app.add_subcommand(
        "calibrate", "fit model parameters to the anchors and verify closure");
    cal->add_option("--config", cal_config, "configuration file (built-in defaults if absent)");
    cal->add_option("--out", cal_out, "write the calibration table as CSV");

    std::string sw_config, sw_mode = "both", sw_out = "sweep.csv", sw_plot;
    CLI::App* swc = app.add_subcommand(
        "sweep", "evaluate both channel configurations across classical received power");
    swc->add_option("--config", sw_config, "configuration file");
    swc->add_option("--mode", sw_mode, "columns to emit: both, b2b or fiber")
        ->check(CLI::IsMember({"both", "b2b", "fiber"}));
    swc->add_option("--out", sw_out, "output CSV path")->capture_default_str();
    swc->add_option("--plot", sw_plot, "also render the sweep as an SVG plot");

    std::string sx_config, sx_csv = "soax.csv", sx_text;
    CLI::App* sox = app.add_subcommand(
        "soax", "locate the simultaneous classical/quantum operating window");
    sox->add_option("--config", sx_config, "configuration file");
    sox->add_option("--out-csv", sx_csv, "output CSV path (empty to skip)")
        ->capture_default_str();
    sox->add_option("--out-text", sx_text, "also write the text report to a file");

    std::string sim_config, sim_channel = "b2b", sim_out;
    std::uint64_t sim_seed = 0, sim_symbols = 0, sim_phase = 0;
    unsigned sim_threads = 0;
    double sim_rop = 0.0;
    CLI::App* sim = app.add_subcommand(
        "simulate", "run the photon-by-photon model and write a timestamp file");
    sim->add_option("--config", sim_config, "configuration file");
    sim->add_option("--out", sim_out, "output tag stream path")->required();
    sim->add_option("--seed", sim_seed, "random seed (overrides config)");
    sim->add_option("--symbols", sim_symbols, "number of symbols (overrides config)");
    sim->add_option("--channel", sim_channel, "channel configuration: b2b or fiber")
        ->check(CLI::IsMember({"b2b", "fiber"}))
        ->capture_default_str();
    sim->add_option("--rop", sim_rop,
                    "classical received power in dBm (omit for classical channel off)");
    sim->add_option("--phase", sim_phase, "clock phase offset in ps (overrides config)");
    sim->add_option("--threads", sim_threads, "worker threads (overrides config; 0 = auto)");

    std::string an_config, an_tags, an_out;
    double an_duration = 0.0;
    CLI::App* ana = app.add_subcommand(
        "analyze", "recover clock, alignment and error rate from a timestamp file");
    ana->add_option("--tags", an_tags, "input tag stream path")->required();
    ana->add_option("--config", an_config, "configuration file");
    ana->add_option("--duration-s", an_duration,
                    "acquisition length in seconds (default: derive from the tag span)");
    ana->add_option("--out", an_out, "write the estimation report as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (cal->parsed())
            return cmd_calibrate(cal_config, cal_out);
        if (swc->parsed())
            return cmd_sweep(sw_config, sw_mode, sw_out, sw_plot);
        if (sox->parsed())
            return cmd_soax(sx_config, sx_csv, sx_text);
        if (sim->parsed()) {
            qcoex::ExperimentConfig cfg = load_or_default(sim_config);
            qcoex::apply_calibration(cfg);
            if (sim->count("--seed"))
                cfg.mc.seed = sim_seed;
            if (sim->count("--symbols"))
                cfg.mc.n_symbols = sim_symbols;
            if (sim->count("--phase"))
                cfg.mc.clock_phase_ps = sim_phase;
            if (sim->count("--threads"))
                cfg.mc.threads = sim_threads;
            std::optional<double> rop;
            if (sim->count("--rop"))
                rop = sim_rop;
            return cmd_simulate(cfg, sim_channel, rop, sim_out);
        }
        if (ana->parsed())
            return cmd_analyze(an_config, an_tags, an_duration, an_out);
    } catch (const qcoex::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const qcoex::InfeasibleCalibration& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const qcoex::UncoveredRangeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const qcoex::TagParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const qcoex::SyncFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const qcoex::InsufficientStatistics& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const qcoex::UndefinedQber& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const qcoex::DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const qcoex::OutOfRangeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
