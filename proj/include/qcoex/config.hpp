#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

#include "qcoex/calibration.hpp"
#include "qcoex/errors.hpp"
#include "qcoex/experiments.hpp"
#include "qcoex/system.hpp"

namespace qcoex {

// Monte Carlo acquisition parameters (symbol period derives from the
// transmitter symbol rate).
struct McParams {
    std::uint64_t seed = 1;
    std::uint64_t n_symbols = 10'000'000;
    std::uint64_t clock_phase_ps = 0;
    std::uint32_t batch_symbols = 65'536;
    unsigned threads = 0;
};

// Everything an experiment needs: the physical model, which parameters
// calibration should fit (the ones left "auto"), the anchors to fit
// against, and the sweep/acquisition settings.
struct ExperimentConfig {
    SystemModel model;
    CalibrationSelect autos;
    CalibrationAnchors anchors;
    SweepParams sweep;
    McParams mc;
};

inline ExperimentConfig default_experiment_config() { return {}; }

// Fits the "auto" parameters; pinned values are left untouched.
inline CalibrationOutcome apply_calibration(ExperimentConfig& cfg) {
    return calibrate_all(cfg.model, cfg.anchors, cfg.autos);
}

namespace cfgdetail {

using nlohmann::json;

inline std::string joined(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

inline void require_keys(const json& obj, const std::string& path,
                         std::initializer_list<const char*> allowed) {
    if (!obj.is_object())
        throw ConfigError("config: '" + path + "' must be an object");
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* k : allowed) {
            if (item.key() == k) {
                known = true;
                break;
            }
        }
        if (!known)
            throw ConfigError("config: unknown key '" + joined(path, item.key()) + "'");
    }
}

inline double get_num(const json& obj, const std::string& path, const char* key,
                      double fallback) {
    if (!obj.contains(key))
        return fallback;
    const json& v = obj.at(key);
    if (!v.is_number())
        throw ConfigError("config: '" + joined(path, key) + "' must be a number");
    return v.get<double>();
}

inline std::uint64_t get_u64(const json& obj, const std::string& path, const char* key,
                             std::uint64_t fallback) {
    if (!obj.contains(key))
        return fallback;
    const json& v = obj.at(key);
    if (v.is_number_unsigned())
        return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
        const auto i = v.get<std::int64_t>();
        if (i >= 0)
            return static_cast<std::uint64_t>(i);
    }
    throw ConfigError("config: '" + joined(path, key) + "' must be a non-negative integer");
}

inline std::string get_str(const json& obj, const std::string& path, const char* key,
                           const std::string& fallback) {
    if (!obj.contains(key))
        return fallback;
    const json& v = obj.at(key);
    if (!v.is_string())
        throw ConfigError("config: '" + joined(path, key) + "' must be a string");
    return v.get<std::string>();
}

// Calibrated fields accept a number (pinned) or the string "auto".
// Returns true when the field stays automatic.
inline bool get_auto_or(const json& obj, const std::string& path, const char* key,
                        double& value) {
    if (!obj.contains(key))
        return true;
    const json& v = obj.at(key);
    if (v.is_string()) {
        if (v.get<std::string>() != "auto")
            throw ConfigError("config: '" + joined(path, key) +
                              "' must be a number or \"auto\"");
        return true;
    }
    if (!v.is_number())
        throw ConfigError("config: '" + joined(path, key) + "' must be a number or \"auto\"");
    value = v.get<double>();
    return false;
}

inline FlatTopFilter parse_filter(const json& obj, const std::string& path,
                                  const FlatTopFilter& fallback) {
    require_keys(obj, path,
                 {"center_nm", "width_ghz", "width_nm", "insertion_loss_db",
                  "out_of_band_isolation_db"});
    const double center_nm = get_num(obj, path, "center_nm", fallback.center().nm());
    const double il = get_num(obj, path, "insertion_loss_db", fallback.insertion_loss_db());
    const double iso =
        get_num(obj, path, "out_of_band_isolation_db", fallback.out_of_band_isolation_db());
    if (obj.contains("width_ghz") && obj.contains("width_nm"))
        throw ConfigError("config: '" + path + "' sets both width_ghz and width_nm");
    if (obj.contains("width_nm"))
        return FlatTopFilter::from_width_nm(Wavelength::from_nm(center_nm),
                                            get_num(obj, path, "width_nm", 0.0), il, iso);
    if (obj.contains("width_ghz"))
        return FlatTopFilter::from_width_ghz(Wavelength::from_nm(center_nm),
                                             get_num(obj, path, "width_ghz", 0.0), il, iso);
    return FlatTopFilter::from_width_nm(Wavelength::from_nm(center_nm), fallback.width_nm(),
                                        il, iso);
}

} // namespace cfgdetail

inline ExperimentConfig parse_experiment_config(const nlohmann::json& root) {
    using cfgdetail::get_auto_or;
    using cfgdetail::get_num;
    using cfgdetail::get_str;
    using cfgdetail::get_u64;
    using cfgdetail::require_keys;
    using nlohmann::json;

    ExperimentConfig cfg;
    try {
        require_keys(root, "",
                     {"emitter", "transmitter", "fiber", "wdm", "cleanup_filter", "receiver",
                      "classical", "raman", "protocol", "anchors", "sweep", "montecarlo"});

        if (root.contains("emitter")) {
            const json& e = root.at("emitter");
            require_keys(e, "emitter", {"vli_table", "spectrum_center_nm", "spectrum_fwhm_nm"});
            if (e.contains("vli_table")) {
                const json& tbl = e.at("vli_table");
                if (!tbl.is_array())
                    throw ConfigError("config: 'emitter.vli_table' must be an array");
                std::vector<VliPoint> pts;
                for (std::size_t i = 0; i < tbl.size(); ++i) {
                    const std::string p = "emitter.vli_table[" + std::to_string(i) + "]";
                    require_keys(tbl[i], p, {"current_ma", "power_w", "voltage_v"});
                    VliPoint pt;
                    pt.current_ma = get_num(tbl[i], p, "current_ma", 0.0);
                    pt.power_w = get_num(tbl[i], p, "power_w", 0.0);
                    pt.voltage_v = get_num(tbl[i], p, "voltage_v", 0.0);
                    pts.push_back(pt);
                }
                cfg.model.emitter.vli = EmitterVli(std::move(pts));
            }
            cfg.model.emitter.spectrum_center = Wavelength::from_nm(get_num(
                e, "emitter", "spectrum_center_nm", cfg.model.emitter.spectrum_center.nm()));
            cfg.model.emitter.spectrum_fwhm_nm =
                get_num(e, "emitter", "spectrum_fwhm_nm", cfg.model.emitter.spectrum_fwhm_nm);
        }

        if (root.contains("transmitter")) {
            const json& t = root.at("transmitter");
            require_keys(t, "transmitter",
                         {"drive_current_ma", "symbol_rate_baud", "modulator_insertion_loss_db",
                          "tx_path_loss_db", "slicing_filter"});
            cfg.model.drive_current_ma =
                get_num(t, "transmitter", "drive_current_ma", cfg.model.drive_current_ma);
            cfg.model.tx.symbol_rate_baud =
                get_num(t, "transmitter", "symbol_rate_baud", cfg.model.tx.symbol_rate_baud);
            cfg.model.tx.modulator_insertion_loss_db =
                get_num(t, "transmitter", "modulator_insertion_loss_db",
                        cfg.model.tx.modulator_insertion_loss_db);
            cfg.autos.tx_loss = get_auto_or(t, "transmitter", "tx_path_loss_db",
                                            cfg.model.tx.tx_path_loss_db);
            if (t.contains("slicing_filter"))
                cfg.model.tx.slicing_filter = cfgdetail::parse_filter(
                    t.at("slicing_filter"), "transmitter.slicing_filter",
                    cfg.model.tx.slicing_filter);
        }

        if (root.contains("fiber")) {
            const json& f = root.at("fiber");
            require_keys(f, "fiber",
                         {"length_km", "attenuation_quantum_db_per_km",
                          "attenuation_classical_db_per_km"});
            cfg.model.fiber.length_km =
                get_num(f, "fiber", "length_km", cfg.model.fiber.length_km);
            cfg.model.fiber.attenuation_quantum_db_per_km =
                get_num(f, "fiber", "attenuation_quantum_db_per_km",
                        cfg.model.fiber.attenuation_quantum_db_per_km);
            cfg.model.fiber.attenuation_classical_db_per_km =
                get_num(f, "fiber", "attenuation_classical_db_per_km",
                        cfg.model.fiber.attenuation_classical_db_per_km);
        }

        if (root.contains("wdm")) {
            const json& w = root.at("wdm");
            require_keys(w, "wdm",
                         {"mux_insertion_loss_quantum_db", "mux_insertion_loss_classical_db",
                          "classical_to_quantum_isolation_db"});
            cfg.model.wdm.mux_insertion_loss_quantum_db =
                get_num(w, "wdm", "mux_insertion_loss_quantum_db",
                        cfg.model.wdm.mux_insertion_loss_quantum_db);
            cfg.model.wdm.mux_insertion_loss_classical_db =
                get_num(w, "wdm", "mux_insertion_loss_classical_db",
                        cfg.model.wdm.mux_insertion_loss_classical_db);
            cfg.autos.isolation =
                get_auto_or(w, "wdm", "classical_to_quantum_isolation_db",
                            cfg.model.wdm.classical_to_quantum_isolation_db);
        }

        if (root.contains("cleanup_filter"))
            cfg.model.cleanup_filter = cfgdetail::parse_filter(
                root.at("cleanup_filter"), "cleanup_filter", cfg.model.cleanup_filter);

        if (root.contains("receiver")) {
            const json& r = root.at("receiver");
            require_keys(r, "receiver", {"rx_link_loss_db", "e_opt", "spad"});
            cfg.autos.rx_link_loss =
                get_auto_or(r, "receiver", "rx_link_loss_db", cfg.model.rx_link_loss_db);
            cfg.autos.e_opt = get_auto_or(r, "receiver", "e_opt", cfg.model.e_opt);
            if (r.contains("spad")) {
                const json& s = r.at("spad");
                require_keys(s, "receiver.spad",
                             {"efficiency", "dead_time_us", "dark_rate_cps"});
                cfg.model.spad.efficiency =
                    get_num(s, "receiver.spad", "efficiency", cfg.model.spad.efficiency);
                // Divide: scaling by the inexact 1.0e-6 would not round trip.
                cfg.model.spad.dead_time_s =
                    get_num(s, "receiver.spad", "dead_time_us",
                            cfg.model.spad.dead_time_s * 1.0e6) /
                    1.0e6;
                cfg.model.spad.dark_rate_cps =
                    get_num(s, "receiver.spad", "dark_rate_cps", cfg.model.spad.dark_rate_cps);
            }
        }

        if (root.contains("classical")) {
            const json& c = root.at("classical");
            require_keys(c, "classical",
                         {"wavelength_nm", "responsivity_a_per_w", "noise_current_rms_a",
                          "bandpass_width_nm"});
            cfg.model.classical.wavelength = Wavelength::from_nm(
                get_num(c, "classical", "wavelength_nm", cfg.model.classical.wavelength.nm()));
            cfg.model.classical.receiver.responsivity_a_per_w =
                get_num(c, "classical", "responsivity_a_per_w",
                        cfg.model.classical.receiver.responsivity_a_per_w);
            cfg.autos.rx_noise = get_auto_or(c, "classical", "noise_current_rms_a",
                                             cfg.model.classical.receiver.noise_current_rms_a);
            cfg.model.classical.bandpass_width_nm = get_num(
                c, "classical", "bandpass_width_nm", cfg.model.classical.bandpass_width_nm);
        }

        if (root.contains("raman")) {
            const json& r = root.at("raman");
            require_keys(r, "raman", {"beta_cps_per_mw_km_nm"});
            cfg.autos.raman_beta = get_auto_or(r, "raman", "beta_cps_per_mw_km_nm",
                                               cfg.model.raman.beta_cps_per_mw_km_nm);
        }

        if (root.contains("protocol")) {
            const json& p = root.at("protocol");
            require_keys(p, "protocol",
                         {"window_fraction", "signal_window_acceptance", "sift_factor",
                          "receiver_basis", "receiver_bit", "qber_threshold", "distillation",
                          "frame_length", "pattern_seed"});
            ProtocolParams& pp = cfg.model.protocol;
            pp.window_fraction = get_num(p, "protocol", "window_fraction", pp.window_fraction);
            pp.signal_window_acceptance =
                get_num(p, "protocol", "signal_window_acceptance", pp.signal_window_acceptance);
            pp.sift_factor = get_num(p, "protocol", "sift_factor", pp.sift_factor);
            const std::string basis = get_str(p, "protocol", "receiver_basis", "circular");
            if (basis == "circular")
                pp.receiver_basis = Basis::circular;
            else if (basis == "diagonal")
                pp.receiver_basis = Basis::diagonal;
            else
                throw ConfigError(
                    "config: 'protocol.receiver_basis' must be \"circular\" or \"diagonal\"");
            const auto bit = get_u64(p, "protocol", "receiver_bit",
                                     static_cast<std::uint64_t>(pp.receiver_bit));
            if (bit > 1)
                throw ConfigError("config: 'protocol.receiver_bit' must be 0 or 1");
            pp.receiver_bit = static_cast<int>(bit);
            pp.qber_threshold = get_num(p, "protocol", "qber_threshold", pp.qber_threshold);
            if (p.contains("distillation")) {
                const json& d = p.at("distillation");
                require_keys(d, "protocol.distillation", {"kind", "param"});
                const std::string kind = get_str(d, "protocol.distillation", "kind",
                                                 "ideal_asymptotic");
                const double param = get_num(d, "protocol.distillation", "param", 0.0);
                if (kind == "ideal_asymptotic")
                    pp.distillation = DistillationModel::ideal_asymptotic();
                else if (kind == "ec_efficiency")
                    pp.distillation = DistillationModel::ec_efficiency(param);
                else if (kind == "fixed_fraction")
                    pp.distillation = DistillationModel::fixed_fraction(param);
                else
                    throw ConfigError("config: 'protocol.distillation.kind' must be "
                                      "\"ideal_asymptotic\", \"ec_efficiency\" or "
                                      "\"fixed_fraction\"");
            }
            pp.frame_length = static_cast<std::size_t>(
                get_u64(p, "protocol", "frame_length", pp.frame_length));
            pp.pattern_seed = get_u64(p, "protocol", "pattern_seed", pp.pattern_seed);
        }

        if (root.contains("anchors")) {
            const json& a = root.at("anchors");
            require_keys(a, "anchors",
                         {"target_mu", "observed_rate_cps", "qber",
                          "classical_sensitivity_dbm", "classical_target_ber",
                          "b2b_crossing_rop_dbm", "fiber_crossing_rop_dbm"});
            CalibrationAnchors& an = cfg.anchors;
            an.target_mu = get_num(a, "anchors", "target_mu", an.target_mu);
            an.observed_rate_cps =
                get_num(a, "anchors", "observed_rate_cps", an.observed_rate_cps);
            an.qber = get_num(a, "anchors", "qber", an.qber);
            an.classical_sensitivity_dbm =
                get_num(a, "anchors", "classical_sensitivity_dbm", an.classical_sensitivity_dbm);
            an.classical_target_ber =
                get_num(a, "anchors", "classical_target_ber", an.classical_target_ber);
            an.b2b_crossing_rop_dbm =
                get_num(a, "anchors", "b2b_crossing_rop_dbm", an.b2b_crossing_rop_dbm);
            an.fiber_crossing_rop_dbm =
                get_num(a, "anchors", "fiber_crossing_rop_dbm", an.fiber_crossing_rop_dbm);
        }

        if (root.contains("sweep")) {
            const json& s = root.at("sweep");
            require_keys(s, "sweep", {"rop_start_dbm", "rop_stop_dbm", "rop_step_db"});
            cfg.sweep.rop_start_dbm =
                get_num(s, "sweep", "rop_start_dbm", cfg.sweep.rop_start_dbm);
            cfg.sweep.rop_stop_dbm = get_num(s, "sweep", "rop_stop_dbm", cfg.sweep.rop_stop_dbm);
            cfg.sweep.rop_step_db = get_num(s, "sweep", "rop_step_db", cfg.sweep.rop_step_db);
        }

        if (root.contains("montecarlo")) {
            const json& mc = root.at("montecarlo");
            require_keys(mc, "montecarlo",
                         {"seed", "n_symbols", "clock_phase_ps", "batch_symbols", "threads"});
            cfg.mc.seed = get_u64(mc, "montecarlo", "seed", cfg.mc.seed);
            cfg.mc.n_symbols = get_u64(mc, "montecarlo", "n_symbols", cfg.mc.n_symbols);
            cfg.mc.clock_phase_ps =
                get_u64(mc, "montecarlo", "clock_phase_ps", cfg.mc.clock_phase_ps);
            cfg.mc.batch_symbols = static_cast<std::uint32_t>(
                get_u64(mc, "montecarlo", "batch_symbols", cfg.mc.batch_symbols));
            cfg.mc.threads =
                static_cast<unsigned>(get_u64(mc, "montecarlo", "threads", cfg.mc.threads));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        // Domain validation raised while building model objects.
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f)
        throw ConfigError("config: cannot open " + path.string());
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(f, nullptr, true, true);  // allow comments
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: " + path.string() + ": " + e.what());
    }
    return parse_experiment_config(root);
}

// Emits the full configuration in its canonical file form; calibrated
// fields that are still automatic appear as "auto".
inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    using nlohmann::json;
    const SystemModel& m = cfg.model;

    json vli = json::array();
    for (const VliPoint& p : m.emitter.vli.points())
        vli.push_back({{"current_ma", p.current_ma},
                       {"power_w", p.power_w},
                       {"voltage_v", p.voltage_v}});

    const auto auto_or = [](bool is_auto, double v) {
        return is_auto ? json("auto") : json(v);
    };
    const auto filter_json = [](const FlatTopFilter& f) {
        return json{{"center_nm", f.center().nm()},
                    {"width_nm", f.width_nm()},
                    {"insertion_loss_db", f.insertion_loss_db()},
                    {"out_of_band_isolation_db", f.out_of_band_isolation_db()}};
    };

    const char* kind = "ideal_asymptotic";
    if (m.protocol.distillation.kind == DistillationModel::Kind::ec_efficiency)
        kind = "ec_efficiency";
    else if (m.protocol.distillation.kind == DistillationModel::Kind::fixed_fraction)
        kind = "fixed_fraction";

    return json{
        {"emitter",
         {{"vli_table", vli},
          {"spectrum_center_nm", m.emitter.spectrum_center.nm()},
          {"spectrum_fwhm_nm", m.emitter.spectrum_fwhm_nm}}},
        {"transmitter",
         {{"drive_current_ma", m.drive_current_ma},
          {"symbol_rate_baud", m.tx.symbol_rate_baud},
          {"modulator_insertion_loss_db", m.tx.modulator_insertion_loss_db},
          {"tx_path_loss_db", auto_or(cfg.autos.tx_loss, m.tx.tx_path_loss_db)},
          {"slicing_filter", filter_json(m.tx.slicing_filter)}}},
        {"fiber",
         {{"length_km", m.fiber.length_km},
          {"attenuation_quantum_db_per_km", m.fiber.attenuation_quantum_db_per_km},
          {"attenuation_classical_db_per_km", m.fiber.attenuation_classical_db_per_km}}},
        {"wdm",
         {{"mux_insertion_loss_quantum_db", m.wdm.mux_insertion_loss_quantum_db},
          {"mux_insertion_loss_classical_db", m.wdm.mux_insertion_loss_classical_db},
          {"classical_to_quantum_isolation_db",
           auto_or(cfg.autos.isolation, m.wdm.classical_to_quantum_isolation_db)}}},
        {"cleanup_filter", filter_json(m.cleanup_filter)},
        {"receiver",
         {{"rx_link_loss_db", auto_or(cfg.autos.rx_link_loss, m.rx_link_loss_db)},
          {"e_opt", auto_or(cfg.autos.e_opt, m.e_opt)},
          {"spad",
           {{"efficiency", m.spad.efficiency},
            {"dead_time_us", m.spad.dead_time_s * 1.0e6},
            {"dark_rate_cps", m.spad.dark_rate_cps}}}}},
        {"classical",
         {{"wavelength_nm", m.classical.wavelength.nm()},
          {"responsivity_a_per_w", m.classical.receiver.responsivity_a_per_w},
          {"noise_current_rms_a",
           auto_or(cfg.autos.rx_noise, m.classical.receiver.noise_current_rms_a)},
          {"bandpass_width_nm", m.classical.bandpass_width_nm}}},
        {"raman",
         {{"beta_cps_per_mw_km_nm",
           auto_or(cfg.autos.raman_beta, m.raman.beta_cps_per_mw_km_nm)}}},
        {"protocol",
         {{"window_fraction", m.protocol.window_fraction},
          {"signal_window_acceptance", m.protocol.signal_window_acceptance},
          {"sift_factor", m.protocol.sift_factor},
          {"receiver_basis",
           m.protocol.receiver_basis == Basis::circular ? "circular" : "diagonal"},
          {"receiver_bit", m.protocol.receiver_bit},
          {"qber_threshold", m.protocol.qber_threshold},
          {"distillation", {{"kind", kind}, {"param", m.protocol.distillation.param}}},
          {"frame_length", m.protocol.frame_length},
          {"pattern_seed", m.protocol.pattern_seed}}},
        {"anchors",
         {{"target_mu", cfg.anchors.target_mu},
          {"observed_rate_cps", cfg.anchors.observed_rate_cps},
          {"qber", cfg.anchors.qber},
          {"classical_sensitivity_dbm", cfg.anchors.classical_sensitivity_dbm},
          {"classical_target_ber", cfg.anchors.classical_target_ber},
          {"b2b_crossing_rop_dbm", cfg.anchors.b2b_crossing_rop_dbm},
          {"fiber_crossing_rop_dbm", cfg.anchors.fiber_crossing_rop_dbm}}},
        {"sweep",
         {{"rop_start_dbm", cfg.sweep.rop_start_dbm},
          {"rop_stop_dbm", cfg.sweep.rop_stop_dbm},
          {"rop_step_db", cfg.sweep.rop_step_db}}},
        {"montecarlo",
         {{"seed", cfg.mc.seed},
          {"n_symbols", cfg.mc.n_symbols},
          {"clock_phase_ps", cfg.mc.clock_phase_ps},
          {"batch_symbols", cfg.mc.batch_symbols},
          {"threads", cfg.mc.threads}}}};
}

} // namespace qcoex
