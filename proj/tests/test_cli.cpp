#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qcoex/config.hpp"
#include "qcoex/tagstream.hpp"

using namespace qcoex;
using Catch::Approx;

namespace {

namespace fs = std::filesystem;

const fs::path& work_dir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "qcoex_cli_work";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& bytes) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

struct CmdResult {
    int code = -1;
    std::string out;
    std::string err;
};

CmdResult run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path so = work_dir() / ("stdout_" + std::to_string(counter) + ".txt");
    const fs::path se = work_dir() / ("stderr_" + std::to_string(counter) + ".txt");
    ++counter;
    const std::string cmd = std::string("\"") + QCOEX_CLI_PATH + "\" " + args + " > \"" +
                            so.string() + "\" 2> \"" + se.string() + "\"";
    const int status = std::system(cmd.c_str());
    CmdResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(so);
    r.err = slurp(se);
    return r;
}

// Default configuration with one JSON field replaced, written to disk.
template <typename V>
fs::path config_with(const std::string& name, std::initializer_list<const char*> keys,
                     const V& value) {
    nlohmann::json j = config_to_json(default_experiment_config());
    nlohmann::json* node = &j;
    for (const char* k : keys)
        node = &(*node)[k];
    *node = value;
    const fs::path p = work_dir() / name;
    spit(p, j.dump(2));
    return p;
}

// std::stod rejects subnormals (glibc strtod flags ERANGE); parse directly.
double parse_num(const std::string& cell) {
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    REQUIRE(end != cell.c_str());
    return v;
}

std::vector<std::vector<double>> parse_csv_rows(const std::string& text,
                                                std::string* header = nullptr) {
    std::vector<std::vector<double>> rows;
    std::istringstream ss(text);
    std::string line;
    bool first = true;
    while (std::getline(ss, line)) {
        if (line.empty())
            continue;
        if (first) {
            if (header)
                *header = line;
            first = false;
            continue;
        }
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            row.push_back(parse_num(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

// ROP at which column `qcol` crosses `level`, linear between grid rows.
double csv_crossing(const std::vector<std::vector<double>>& rows, std::size_t qcol,
                    double level) {
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i - 1][qcol] < level && rows[i][qcol] >= level) {
            const double x0 = rows[i - 1][0], x1 = rows[i][0];
            const double y0 = rows[i - 1][qcol], y1 = rows[i][qcol];
            return x0 + (x1 - x0) * (level - y0) / (y1 - y0);
        }
    }
    return 1.0e9;
}

} // namespace

TEST_CASE("help and usage errors", "[cli]") {
    REQUIRE(run_cli("--help").code == 0);
    const CmdResult help = run_cli("--help");
    REQUIRE(help.out.find("calibrate") != std::string::npos);
    REQUIRE(help.out.find("simulate") != std::string::npos);

    REQUIRE(run_cli("frobnicate").code == 2);
    REQUIRE(run_cli("").code == 2);                    // subcommand required
    REQUIRE(run_cli("simulate").code == 2);            // --out required
    REQUIRE(run_cli("sweep --mode sideways").code == 2);
}

TEST_CASE("calibrate reports closure and writes the table", "[cli]") {
    const fs::path csv = work_dir() / "calibration.csv";
    const CmdResult r = run_cli("calibrate --out \"" + csv.string() + "\"");
    REQUIRE(r.code == 0);
    REQUIRE(r.out.find("closure: PASS") != std::string::npos);
    REQUIRE(r.err.empty());

    const std::string table = slurp(csv);
    REQUIRE(table.rfind("section,name,value,target,tolerance,pass", 0) == 0);
    REQUIRE(table.find("parameter,tx_path_loss_db,") != std::string::npos);
    REQUIRE(table.find("closure,quantum_only_qber,") != std::string::npos);
}

TEST_CASE("calibrate fails closure loudly when a pinned value is wrong", "[cli]") {
    const fs::path cfg = config_with("pinned_bad.json", {"receiver", "e_opt"}, 0.01);
    const CmdResult r = run_cli("calibrate --config \"" + cfg.string() + "\"");
    REQUIRE(r.code == 3);
    REQUIRE(r.out.find("closure: FAIL") != std::string::npos);
    REQUIRE(r.err.find("closure failed for: quantum_only_qber") != std::string::npos);
}

TEST_CASE("configuration errors exit with the parse code", "[cli]") {
    const fs::path cfg =
        config_with("typo.json", {"receiver", "spad", "effciency"}, 0.1);
    const CmdResult r = run_cli("calibrate --config \"" + cfg.string() + "\"");
    REQUIRE(r.code == 2);
    REQUIRE(r.err.find("receiver.spad.effciency") != std::string::npos);

    const fs::path missing = work_dir() / "does_not_exist.json";
    REQUIRE(run_cli("calibrate --config \"" + missing.string() + "\"").code == 2);
}

TEST_CASE("configuration files may carry comments", "[cli]") {
    const fs::path p = work_dir() / "commented.json";
    spit(p, "{\n  // keep the defaults, shrink the sweep\n"
            "  \"sweep\": {\"rop_start_dbm\": -31.0, \"rop_stop_dbm\": -22.0,"
            " \"rop_step_db\": 0.5}\n}\n");
    const fs::path csv = work_dir() / "commented_sweep.csv";
    const CmdResult r = run_cli("sweep --config \"" + p.string() + "\" --out \"" +
                                csv.string() + "\"");
    REQUIRE(r.code == 0);
    REQUIRE(parse_csv_rows(slurp(csv)).size() == 19);
}

TEST_CASE("sweep emits the grid and is byte stable", "[cli]") {
    const fs::path f1 = work_dir() / "sweep_fiber_1.csv";
    const fs::path f2 = work_dir() / "sweep_fiber_2.csv";
    const CmdResult r1 =
        run_cli("sweep --mode fiber --out \"" + f1.string() + "\"");
    REQUIRE(r1.code == 0);
    REQUIRE(r1.out.find("251 rows") != std::string::npos);
    REQUIRE(run_cli("sweep --mode fiber --out \"" + f2.string() + "\"").code == 0);
    REQUIRE(slurp(f1) == slurp(f2));

    std::string header;
    const auto rows = parse_csv_rows(slurp(f1), &header);
    REQUIRE(header == "rop_dbm,launch_dbm,classical_ber,qber,raw_cps,secure_bps");
    REQUIRE(rows.size() == 251);
    const double crossing = csv_crossing(rows, 3, 0.11);
    REQUIRE(crossing > -28.5);
    REQUIRE(crossing < -28.3);
}

TEST_CASE("reference sweep puts the crossing at the calibrated power", "[cli]") {
    const fs::path f = work_dir() / "sweep_b2b.csv";
    REQUIRE(run_cli("sweep --mode b2b --out \"" + f.string() + "\"").code == 0);
    std::string header;
    const auto rows = parse_csv_rows(slurp(f), &header);
    REQUIRE(header == "rop_dbm,classical_ber,qber,raw_cps,secure_bps");
    const double crossing = csv_crossing(rows, 2, 0.11);
    REQUIRE(crossing > -23.6);
    REQUIRE(crossing < -23.4);
}

TEST_CASE("sweep renders a self contained plot", "[cli]") {
    const fs::path csv = work_dir() / "sweep_both.csv";
    const fs::path svg = work_dir() / "sweep.svg";
    const CmdResult r = run_cli("sweep --out \"" + csv.string() + "\" --plot \"" +
                                svg.string() + "\"");
    REQUIRE(r.code == 0);
    std::string header;
    parse_csv_rows(slurp(csv), &header);
    REQUIRE(header ==
            "rop_dbm,launch_fiber_dbm,classical_ber,qber_b2b,qber_fiber,"
            "raw_b2b_cps,raw_fiber_cps,secure_b2b_bps,secure_fiber_bps");
    const std::string plot = slurp(svg);
    REQUIRE(plot.rfind("<svg", 0) == 0);
    REQUIRE(plot.find("</svg>") != std::string::npos);
    REQUIRE(plot.find("classical received power (dBm)") != std::string::npos);
}

TEST_CASE("soax reports the operating window and the rate convention", "[cli]") {
    const fs::path csv = work_dir() / "soax.csv";
    const CmdResult r = run_cli("soax --out-csv \"" + csv.string() + "\"");
    REQUIRE(r.code == 0);
    REQUIRE(r.out.find("simultaneous operation window") != std::string::npos);
    REQUIRE(r.out.find("lower edge") != std::string::npos);
    REQUIRE(r.out.find("upper edge") != std::string::npos);
    REQUIRE(r.out.find("0.2797") != std::string::npos);
    REQUIRE(r.out.find("differ by design") != std::string::npos);

    double width = 0.0, lower = 0.0, upper = 0.0;
    std::istringstream ss(slurp(csv));
    std::string line;
    while (std::getline(ss, line)) {
        std::istringstream ls(line);
        std::string name, value;
        std::getline(ls, name, ',');
        std::getline(ls, value, ',');
        if (name == "width_db")
            width = parse_num(value);
        else if (name == "lower_rop_dbm")
            lower = parse_num(value);
        else if (name == "upper_rop_dbm")
            upper = parse_num(value);
    }
    REQUIRE(lower == Approx(-29.9).margin(1.0e-3));
    REQUIRE(upper == Approx(-28.4).margin(1.0e-3));
    REQUIRE(width == Approx(1.5).margin(2.0e-3));
}

TEST_CASE("soax outside the swept range exits with the range code", "[cli]") {
    const fs::path cfg =
        config_with("high_sweep.json", {"sweep", "rop_start_dbm"}, -20.0);
    const CmdResult r = run_cli("soax --config \"" + cfg.string() + "\" --out-csv \"\"");
    REQUIRE(r.code == 3);
    REQUIRE(r.err.find("error:") != std::string::npos);
}

TEST_CASE("simulate is deterministic across reruns and thread counts", "[cli]") {
    const fs::path a = work_dir() / "det_a.qtag";
    const fs::path b = work_dir() / "det_b.qtag";
    const fs::path c = work_dir() / "det_c.qtag";
    const std::string base =
        " --seed 5 --symbols 1000000 --channel fiber --rop=-28.4";
    REQUIRE(run_cli("simulate --out \"" + a.string() + "\"" + base).code == 0);
    REQUIRE(run_cli("simulate --out \"" + b.string() + "\"" + base).code == 0);
    REQUIRE(run_cli("simulate --out \"" + c.string() + "\"" + base + " --threads 3").code ==
            0);
    const std::string bytes = slurp(a);
    REQUIRE(!bytes.empty());
    REQUIRE(bytes == slurp(b));
    REQUIRE(bytes == slurp(c));

    const fs::path d = work_dir() / "det_d.qtag";
    REQUIRE(run_cli("simulate --out \"" + d.string() + "\" --seed 6" +
                    " --symbols 1000000 --channel fiber --rop=-28.4")
                .code == 0);
    REQUIRE(slurp(d) != bytes);
}

TEST_CASE("simulate then analyze round trips the frozen acquisition", "[cli]") {
    const fs::path tags = work_dir() / "frozen.qtag";
    const CmdResult sim = run_cli("simulate --out \"" + tags.string() +
                                  "\" --seed 42 --symbols 10000000 --phase 1234");
    REQUIRE(sim.code == 0);
    REQUIRE(sim.out.find("signal 98, dark 42") != std::string::npos);
    REQUIRE(sim.out.find("139 after dead time") != std::string::npos);

    const fs::path rep = work_dir() / "frozen_report.csv";
    const CmdResult ana = run_cli("analyze --tags \"" + tags.string() +
                                  "\" --duration-s 0.1 --out \"" + rep.string() + "\"");
    REQUIRE(ana.code == 0);
    REQUIRE(ana.out.find("frame offset: 0") != std::string::npos);
    REQUIRE(ana.out.find("qber = 0.0172413793") != std::string::npos);
    REQUIRE(ana.out.find("raw rate = 1200 cps") != std::string::npos);

    const std::string table = slurp(rep);
    REQUIRE(table.rfind("name,value", 0) == 0);
    REQUIRE(table.find("sifted_bits,58") != std::string::npos);
    REQUIRE(table.find("error_bits,1") != std::string::npos);
    REQUIRE(table.find("qber,0.0172413793") != std::string::npos);
}

TEST_CASE("analyze rejects malformed tag files with the parse code", "[cli]") {
    const fs::path tags = work_dir() / "frozen.qtag";  // from the previous case
    REQUIRE(fs::exists(tags));
    const std::string bytes = slurp(tags);
    REQUIRE(bytes.size() > 29);

    const fs::path cut = work_dir() / "truncated.qtag";
    spit(cut, bytes.substr(0, 29));
    const CmdResult r = run_cli("analyze --tags \"" + cut.string() + "\"");
    REQUIRE(r.code == 4);
    REQUIRE(r.err.find("truncated record at byte offset 25") != std::string::npos);

    const fs::path missing = work_dir() / "missing.qtag";
    REQUIRE(run_cli("analyze --tags \"" + missing.string() + "\"").code == 4);

    // Too few tags for clock recovery: statistics code, not parse code.
    TagStream thin;
    thin.symbol_period_ps = 10'000;
    for (std::uint64_t i = 0; i < 10; ++i)
        thin.tags.push_back({5'000 + i * 10'000, 0});
    const fs::path thin_path = work_dir() / "thin.qtag";
    write_tag_stream(thin, thin_path);
    REQUIRE(run_cli("analyze --tags \"" + thin_path.string() + "\"").code == 5);
}
