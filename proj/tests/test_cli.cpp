#include <catch2/catch.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "djt/estimator.hpp"
#include "djt/specfit.hpp"
#include "djt/sweep.hpp"

namespace fs = std::filesystem;
using namespace djt;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

RunResult run_cli(const std::string& args) {
    const fs::path dir = fs::temp_directory_path() / "djt_cli_io";
    fs::create_directories(dir);
    const std::string out_file = (dir / "stdout.txt").string();
    const std::string err_file = (dir / "stderr.txt").string();
    const std::string cmd =
        std::string(DJTSIM_BIN) + " " + args + " > " + out_file + " 2> " + err_file;
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    auto slurp = [](const std::string& path) {
        std::ifstream in(path);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
}

std::string data_file(const std::string& name) {
    return std::string(DJT_DATA_DIR) + "/" + name;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t line_count(const std::string& text) {
    std::size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

} // namespace

TEST_CASE("cli: version") {
    const RunResult r = run_cli("version");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("djtsim") != std::string::npos);
}

TEST_CASE("cli: spectrum sweeps") {
    const fs::path dir = fresh_dir("djt_cli_spectrum");
    const RunResult r =
        run_cli("spectrum --params " + data_file("cd2.json") +
                " --flux 0 0.4 5 --model two-mode --model reduced --nc 13 --out " +
                dir.string());
    REQUIRE(r.exit_code == 0);

    const std::string tm = slurp(dir / "spectrum_two-mode.csv");
    CHECK(line_count(tm) == 6); // header + 5 rows
    CHECK(tm.rfind("phi_e_phi0,f01_GHz,f02h_GHz,f03t_GHz,f04q_GHz,fint_GHz,alpha_GHz,model",
                   0) == 0);
    CHECK(fs::exists(dir / "spectrum_reduced.csv"));

    // identical config and inputs give byte-identical output
    const RunResult again =
        run_cli("spectrum --params " + data_file("cd2.json") +
                " --flux 0 0.4 5 --model two-mode --model reduced --nc 13 --out " +
                dir.string());
    REQUIRE(again.exit_code == 0);
    CHECK(slurp(dir / "spectrum_two-mode.csv") == tm);

    // single-point grid
    const RunResult one = run_cli("spectrum --params " + data_file("cd2.json") +
                                  " --flux 0 0 1 --nc 10 --out " + dir.string());
    REQUIRE(one.exit_code == 0);
    CHECK(line_count(slurp(dir / "spectrum_two-mode.csv")) == 2);
}

TEST_CASE("cli: spectrum error paths") {
    const fs::path dir = fresh_dir("djt_cli_spectrum_err");
    CHECK(run_cli("spectrum --params /nonexistent.json --out " + dir.string()).exit_code == 2);
    CHECK(run_cli("spectrum --params " + data_file("cd2.json") +
                  " --model nonsense --out " + dir.string())
              .exit_code == 2);
    CHECK(run_cli("spectrum --params " + data_file("cd2.json") + " --flux 0 0.5 0 --out " +
                  dir.string())
              .exit_code == 2);
}

TEST_CASE("cli: dispersive sweep with sign change and flagged window") {
    const fs::path dir = fresh_dir("djt_cli_chi");
    const RunResult r = run_cli("chi --params " + data_file("cd1.json") +
                                " --flux 0.40 0.50 11 --out " + dir.string());
    REQUIRE(r.exit_code == 0);
    const std::string csv = slurp(dir / "chi_sweep.csv");
    CHECK(csv.rfind("phi_e_phi0,chi_q_MHz,chi_int_MHz,chi_0_MHz,flagged", 0) == 0);

    bool pos = false, neg = false, flagged = false;
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) {
        std::stringstream ss(line);
        std::string phi, cq, ci, c0, flag;
        std::getline(ss, phi, ',');
        std::getline(ss, cq, ',');
        std::getline(ss, ci, ',');
        std::getline(ss, c0, ',');
        std::getline(ss, flag, ',');
        if (flag == "1") {
            flagged = true;
            CHECK(c0 == "nan"); // flagged rows never carry numbers
        } else {
            const double v = std::stod(c0);
            pos = pos || v > 0.0;
            neg = neg || v < 0.0;
        }
    }
    CHECK(pos);
    CHECK(neg);
    CHECK(flagged);
}

TEST_CASE("cli: dispersive sweep with a decoupled resonator") {
    const fs::path dir = fresh_dir("djt_cli_chi0");
    DeviceParams p = load_device_params(data_file("cd1.json"));
    p.Cg = 0.0;
    const fs::path params = dir / "decoupled.json";
    {
        std::ofstream out(params);
        out << nlohmann::json(p).dump(2);
    }
    const RunResult r = run_cli("chi --params " + params.string() +
                                " --flux 0 0.3 4 --nc 10 --out " + dir.string());
    REQUIRE(r.exit_code == 0);
    const std::string csv = slurp(dir / "chi_sweep.csv");
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) {
        std::stringstream ss(line);
        std::string phi, cq;
        std::getline(ss, phi, ',');
        std::getline(ss, cq, ',');
        CHECK(std::stod(cq) == 0.0);
    }
}

TEST_CASE("cli: analyze extracts transitions from a scan file") {
    const fs::path dir = fresh_dir("djt_cli_analyze");

    // synthetic scan: one moving peak per window
    TwoToneScan scan;
    scan.flux = {0.0, 0.1, 0.2};
    scan.amp = {0.5, 1.0};
    for (double f = 4.0; f <= 4.4; f += 0.001) scan.freq.push_back(f);
    for (double f = 8.2; f <= 8.8; f += 0.001) scan.freq.push_back(f);
    scan.response.resize(scan.flux.size() * scan.amp.size() * scan.freq.size());
    auto c1 = [](double phi0) { return 4.2 - 0.3 * phi0; };
    auto c2 = [](double phi0) { return 8.6 - 0.5 * phi0; };
    for (std::size_t i = 0; i < scan.flux.size(); ++i)
        for (std::size_t j = 0; j < scan.amp.size(); ++j)
            for (std::size_t k = 0; k < scan.freq.size(); ++k)
                scan.response[scan.index(i, j, k)] =
                    lorentzian(scan.freq[k], c1(scan.flux[i]), 0.003, 1.0, 0.02) +
                    lorentzian(scan.freq[k], c2(scan.flux[i]), 0.003, 0.7, 0.0);
    const fs::path scan_path = dir / "scan.csv";
    save_scan(scan, scan_path.string());

    ExtractionConfig cfg;
    cfg.windows.push_back({"f01", 4.0, 4.4, 0.0, 2.0, 1});
    cfg.windows.push_back({"f02/2", 8.2, 8.8, 0.0, 2.0, 2});
    const fs::path cfg_path = dir / "extract.json";
    {
        nlohmann::json j;
        j["windows"] = cfg.windows;
        std::ofstream out(cfg_path);
        out << j.dump(2);
    }

    const RunResult r = run_cli("analyze --scan " + scan_path.string() + " --extract-config " +
                                cfg_path.string() + " --out " + dir.string());
    REQUIRE(r.exit_code == 0);
    const TransitionTable table = load_transition_table((dir / "transitions.csv").string());
    REQUIRE(table.rows.size() == 6);
    for (const TransitionRow& row : table.rows) {
        const double expected =
            row.label == "f01" ? c1(row.phi0) : c2(row.phi0) / 2.0;
        CHECK(row.freq == Approx(expected).margin(0.0003));
    }
    CHECK(fs::exists(dir / "analyze_failures.csv"));

    // header-only scan file
    {
        std::ofstream out(dir / "empty.csv");
        out << "phi_e_phi0,amp,freq_GHz,response\n";
    }
    CHECK(run_cli("analyze --scan " + (dir / "empty.csv").string() + " --extract-config " +
                  cfg_path.string() + " --out " + dir.string())
              .exit_code == 2);

    // misordered scan file reports the offending row
    {
        std::ofstream out(dir / "misordered.csv");
        out << "phi_e_phi0,amp,freq_GHz,response\n";
        out << "0,1,4.0,0.1\n0,1,4.2,0.1\n0,1,4.1,0.1\n0,1,4.3,0.1\n";
    }
    const RunResult bad = run_cli("analyze --scan " + (dir / "misordered.csv").string() +
                                  " --extract-config " + cfg_path.string() + " --out " +
                                  dir.string());
    CHECK(bad.exit_code == 2);
    CHECK(bad.err.find("row") != std::string::npos);
}

TEST_CASE("cli: fit runs the estimation workflow end to end") {
    const fs::path dir = fresh_dir("djt_cli_fit");
    const DeviceParams truth = load_device_params(data_file("cd2.json"));
    const Truncation trunc{13, 0, 0};

    TransitionTable table;
    for (const SpectrumResult& s :
         sweep_spectrum(ModelKind::TwoMode, truth, linspace(0.0, 0.4, 6), trunc)) {
        table.rows.push_back({s.flux.in_phi0(), "f01", s.transition_over_k(1), 1e-4});
        table.rows.push_back({s.flux.in_phi0(), "f02/2", s.transition_over_k(2), 1e-4});
    }
    const fs::path table_path = dir / "table.csv";
    transition_table_csv(table).write(table_path.string());

    FitSpec spec;
    spec.kind = ModelKind::TwoMode;
    spec.free = {"EJ1"};
    spec.init = truth;
    spec.init.EJ1 *= 1.03;
    spec.transitions = {"f01", "f02/2"};
    spec.bounds["EJ1"] = {0.8 * truth.EJ1, 1.2 * truth.EJ1};
    const fs::path spec_path = dir / "fitspec.json";
    {
        nlohmann::json j = spec;
        j["table"] = table_path.string();
        std::ofstream out(spec_path);
        out << j.dump(2);
    }

    const RunResult r = run_cli("fit --fit-spec " + spec_path.string() + " --nc 13 --out " +
                                dir.string());
    REQUIRE(r.exit_code == 0);
    REQUIRE(fs::exists(dir / "fit_report.json"));
    nlohmann::json rep;
    std::ifstream(dir / "fit_report.json") >> rep;
    CHECK(rep.at("converged").get<bool>());
    CHECK(rep.at("fitted").at("EJ1_GHz").get<double>() == Approx(truth.EJ1).epsilon(0.01));
    CHECK(fs::exists(dir / "fit_residuals.csv"));
    CHECK(fs::exists(dir / "discrepancy_residuals.csv"));
    CHECK(fs::exists(dir / "discrepancy_alpha.csv"));

    // under-determined spec: three free parameters, two usable rows
    TransitionTable tiny;
    tiny.rows = {table.rows[0], table.rows[1]};
    transition_table_csv(tiny).write((dir / "tiny.csv").string());
    FitSpec wide = spec;
    wide.free = {"EJ1", "EJA", "EJB"};
    wide.bounds["EJA"] = {0.8 * truth.EJA, 1.2 * truth.EJA};
    wide.bounds["EJB"] = {0.8 * truth.EJB, 1.2 * truth.EJB};
    {
        nlohmann::json j = wide;
        j["table"] = (dir / "tiny.csv").string();
        std::ofstream out(dir / "bad_spec.json");
        out << j.dump(2);
    }
    CHECK(run_cli("fit --fit-spec " + (dir / "bad_spec.json").string() + " --nc 13 --out " +
                  dir.string())
              .exit_code == 2);
}

TEST_CASE("cli: harmonics in fit and potential modes") {
    const fs::path dir = fresh_dir("djt_cli_harmonics");

    // fit mode round trip
    HarmonicSpec gen;
    gen.EC = 0.305;
    gen.U = {12.0, 0.18, 0.132, 0.06};
    const SpectrumResult s = harmonic_transmon_spectrum(gen, ChargeBasis{15});
    std::ostringstream cmd;
    cmd << "harmonics --transitions " << format_g9(s.transition_over_k(1)) << " "
        << format_g9(s.transition_over_k(2)) << " " << format_g9(s.transition_over_k(3)) << " "
        << format_g9(s.transition_over_k(4)) << " --ec-init 0.305 --out " << dir.string();
    const RunResult r = run_cli(cmd.str());
    REQUIRE(r.exit_code == 0);
    const std::string csv = slurp(dir / "harmonics_fit.csv");
    CHECK(csv.rfind("k,c_k", 0) == 0);
    // U2/U1 = 0.015 recovered in the second data row
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    std::getline(lines, line); // k=1
    std::getline(lines, line); // k=2
    CHECK(std::stod(line.substr(2)) == Approx(0.015).margin(1e-3));

    // potential mode at the matched-junction flux: |c2| near 0.2
    const RunResult pot = run_cli("harmonics --params " + data_file("cd2.json") +
                                  " --model reduced --flux 0.3593 0.3593 1 --out " +
                                  dir.string());
    REQUIRE(pot.exit_code == 0);
    const std::string pot_csv = slurp(dir / "harmonics_potential_reduced.csv");
    std::istringstream pot_lines(pot_csv);
    std::getline(pot_lines, line);
    CHECK(line == "phi_e_phi0,c2,c3,c4");
    std::getline(pot_lines, line);
    std::stringstream ss(line);
    std::string phi, c2;
    std::getline(ss, phi, ',');
    std::getline(ss, c2, ',');
    CHECK(std::stod(c2) == Approx(-0.2).margin(0.002));

    // vanishing-lambda device: higher harmonics near zero
    DeviceParams soft = load_device_params(data_file("cd2.json"));
    soft.EJA = 0.05;
    soft.EJB = 0.04;
    const fs::path soft_path = dir / "soft.json";
    {
        std::ofstream out(soft_path);
        out << nlohmann::json(soft).dump(2);
    }
    const RunResult flat = run_cli("harmonics --params " + soft_path.string() +
                                   " --model reduced --flux 0 0 1 --out " + dir.string());
    REQUIRE(flat.exit_code == 0);
    const std::string flat_csv = slurp(dir / "harmonics_potential_reduced.csv");
    std::istringstream flat_lines(flat_csv);
    std::getline(flat_lines, line);
    std::getline(flat_lines, line);
    std::stringstream fs2(line);
    std::getline(fs2, phi, ',');
    std::getline(fs2, c2, ',');
    CHECK(std::abs(std::stod(c2)) < 0.01);
}
