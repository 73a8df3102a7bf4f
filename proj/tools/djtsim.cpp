// djtsim — simulate double-junction transmon spectra, dispersive shifts and
// harmonic content; analyze two-tone scans; fit circuit parameters.
//
// Exit codes: 0 success, 2 configuration/input error, 3 numeric failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <vector>

#include <CLI11.hpp>

#include "djt/dispersive.hpp"
#include "djt/estimator.hpp"
#include "djt/specfit.hpp"
#include "djt/sweep.hpp"

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "djtsim 0.1.0";

struct CommonOpts {
    std::string params_path;
    std::vector<double> flux{0.0, 0.5, 51};
    std::string out_dir = ".";
    std::size_t workers = djt::default_workers();
    int nc = 0;
    int nf = 0;
};

void add_flux_option(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--flux", o.flux, "flux grid: START STOP COUNT in units of Phi_0")
        ->expected(3);
}

std::vector<double> flux_grid(const CommonOpts& o) {
    if (o.flux.size() != 3) throw djt::ConfigError("--flux expects START STOP COUNT");
    const double count = o.flux[2];
    if (count < 1 || count != std::floor(count))
        throw djt::ConfigError("flux grid count must be a positive integer");
    return djt::linspace(o.flux[0], o.flux[1], std::size_t(count));
}

fs::path ensure_out_dir(const CommonOpts& o) {
    fs::path dir(o.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec && !fs::exists(dir))
        throw djt::ConfigError("cannot create output directory " + dir.string());
    return dir;
}

int cmd_spectrum(const CommonOpts& o, const std::vector<std::string>& models) {
    const djt::DeviceParams params = djt::load_device_params(o.params_path);
    const std::vector<double> grid = flux_grid(o);
    const fs::path dir = ensure_out_dir(o);
    djt::Truncation trunc{o.nc, o.nf, 0};
    for (const std::string& name : models) {
        const djt::ModelKind kind = djt::parse_model_kind(name);
        const auto results = djt::sweep_spectrum(kind, params, grid, trunc, o.workers);
        const fs::path file = dir / ("spectrum_" + djt::model_kind_name(kind) + ".csv");
        djt::spectrum_sweep_csv(results).write(file.string());
        std::cout << "wrote " << file.string() << "\n";
    }
    return 0;
}

int cmd_chi(const CommonOpts& o) {
    const djt::DeviceParams params = djt::load_device_params(o.params_path);
    const std::vector<double> grid = flux_grid(o);
    const fs::path dir = ensure_out_dir(o);
    const djt::ChargeBasis basis{o.nc > 0 ? o.nc : 15};

    struct Row {
        double phi0;
        bool flagged;
        djt::ChiResult chi;
    };
    const auto rows = djt::parallel_map<Row>(grid.size(), o.workers, [&](std::size_t i) {
        Row row{grid[i], false, {}};
        try {
            row.chi = djt::chi_components(params, djt::FluxBias::from_phi0(grid[i]), basis);
        } catch (const djt::NumericError&) {
            row.flagged = true;
        }
        return row;
    });

    djt::CsvWriter csv({"phi_e_phi0", "chi_q_MHz", "chi_int_MHz", "chi_0_MHz", "flagged"});
    for (const Row& r : rows) {
        if (r.flagged) {
            csv.row({djt::format_g9(r.phi0), "nan", "nan", "nan", "1"});
        } else {
            csv.row({djt::format_g9(r.phi0), djt::format_g9(r.chi.chi_q * 1e3),
                     djt::format_g9(r.chi.chi_int * 1e3), djt::format_g9(r.chi.chi_0 * 1e3),
                     "0"});
        }
    }
    const fs::path file = dir / "chi_sweep.csv";
    csv.write(file.string());
    std::cout << "wrote " << file.string() << "\n";
    return 0;
}

int cmd_analyze(const CommonOpts& o, const std::string& scan_path,
                const std::string& config_path) {
    const djt::TwoToneScan scan = djt::load_scan(scan_path);
    const djt::ExtractionConfig cfg = djt::load_extraction_config(config_path);
    const fs::path dir = ensure_out_dir(o);

    const djt::ExtractionOutcome outcome = djt::extract_transitions(scan, cfg);
    const fs::path table_file = dir / "transitions.csv";
    djt::transition_table_csv(outcome.table).write(table_file.string());

    djt::CsvWriter failures({"phi_e_phi0", "label", "reason"});
    for (const auto& f : outcome.failures)
        failures.row({djt::format_g9(f.phi0), f.label, f.reason});
    const fs::path failure_file = dir / "analyze_failures.csv";
    failures.write(failure_file.string());

    std::cout << "wrote " << table_file.string() << " (" << outcome.table.rows.size()
              << " rows, " << outcome.failures.size() << " failures)\n";
    return 0;
}

int cmd_fit(const CommonOpts& o, const std::string& spec_path, std::string table_path) {
    const djt::FitSpec spec = djt::load_fit_spec(spec_path);
    if (table_path.empty()) {
        // the fit spec JSON may carry the table path
        std::ifstream in(spec_path);
        nlohmann::json j;
        in >> j;
        table_path = j.value("table", std::string());
    }
    if (table_path.empty())
        throw djt::ConfigError("no transition table given (--table or \"table\" in the fit spec)");
    const djt::TransitionTable table = djt::load_transition_table(table_path);
    const fs::path dir = ensure_out_dir(o);
    const djt::Truncation trunc{o.nc, o.nf, 0};

    const djt::FitReport report = djt::fit_device_parameters(spec, table, trunc, o.workers);

    std::ofstream out(dir / "fit_report.json");
    out << djt::fit_report_json(report).dump(2) << "\n";

    djt::CsvWriter rescsv({"index", "residual_GHz"});
    for (std::size_t i = 0; i < report.residuals.size(); ++i)
        rescsv.row({std::to_string(i), djt::format_g9(report.residuals[i])});
    rescsv.write((dir / "fit_residuals.csv").string());

    const djt::ModelDiscrepancyReport disc =
        djt::model_discrepancy_report(report.fitted, table, trunc, o.workers);
    djt::discrepancy_residuals_csv(disc, table).write((dir / "discrepancy_residuals.csv").string());
    djt::discrepancy_alpha_csv(disc).write((dir / "discrepancy_alpha.csv").string());

    std::cout << "fit " << (report.converged ? "converged" : "did not converge") << ", mean |residual| "
              << djt::format_g9(report.mean_abs_residual * 1e3) << " MHz over "
              << report.residuals.size() << " rows\n";
    for (const auto& [name, err] : report.std_errors)
        std::cout << "  " << name << " = "
                  << djt::format_g9(report.fitted.*djt::detail::device_field(name)) << " +- "
                  << djt::format_g9(err) << "\n";
    std::cout << "wrote " << (dir / "fit_report.json").string() << "\n";
    return 0;
}

int cmd_harmonics(const CommonOpts& o, const std::vector<double>& transitions, double ec_init,
                  const std::string& model) {
    const fs::path dir = ensure_out_dir(o);
    if (!transitions.empty()) {
        // fit mode: four measured transitions -> U_k
        if (transitions.size() != 4)
            throw djt::ConfigError("--transitions expects f01 f02/2 f03/3 f04/4");
        if (!(ec_init > 0.0)) throw djt::ConfigError("--ec-init must be positive");
        const djt::HarmonicFitResult fit = djt::fit_harmonic_content(
            {transitions[0], transitions[1], transitions[2], transitions[3]}, ec_init);
        djt::CsvWriter csv({"k", "c_k"});
        for (std::size_t k = 0; k < fit.content.normalized.size(); ++k)
            csv.row({std::to_string(k + 1), djt::format_g9(fit.content.normalized[k])});
        const fs::path file = dir / "harmonics_fit.csv";
        csv.write(file.string());
        std::cout << "EC_GHz " << djt::format_g9(fit.EC) << "\nU1_GHz " << djt::format_g9(fit.U1)
                  << "\nwrote " << file.string() << "\n";
        return 0;
    }
    // potential mode: Fourier content of the BO/reduced potential over flux
    if (o.params_path.empty())
        throw djt::ConfigError("potential mode needs --params (or use --transitions)");
    const djt::ModelKind kind = djt::parse_model_kind(model);
    if (kind != djt::ModelKind::BornOppenheimer && kind != djt::ModelKind::Reduced)
        throw djt::ConfigError("potential mode supports born-oppenheimer or reduced");
    const djt::DeviceParams params = djt::load_device_params(o.params_path);
    const djt::EnergySetBO ebo = djt::energies_bo(params);
    const std::vector<double> grid = flux_grid(o);

    djt::CsvWriter csv({"phi_e_phi0", "c2", "c3", "c4"});
    for (double phi0 : grid) {
        const djt::SquidParams squid =
            djt::squid_at_flux(params, djt::FluxBias::from_phi0(phi0));
        const auto potential = [&](double phi) {
            return kind == djt::ModelKind::BornOppenheimer
                       ? djt::bo_potential(phi, squid, ebo.ECint)
                       : djt::reduced_potential(phi, squid);
        };
        const djt::HarmonicContent content = djt::potential_fourier(potential, 4);
        csv.row({djt::format_g9(phi0), djt::format_g9(content.normalized[1]),
                 djt::format_g9(content.normalized[2]), djt::format_g9(content.normalized[3])});
    }
    const fs::path file = dir / ("harmonics_potential_" + djt::model_kind_name(kind) + ".csv");
    csv.write(file.string());
    std::cout << "wrote " << file.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"double-junction transmon simulation and analysis"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::vector<std::string> models{"two-mode"};
    std::string scan_path, extract_config_path, fit_spec_path, table_path;
    std::vector<double> transitions;
    double ec_init = 0.0;
    std::string harmonics_model = "reduced";

    auto add_common = [&](CLI::App* cmd, bool needs_params) {
        auto* p = cmd->add_option("--params", opts.params_path, "device parameter JSON");
        if (needs_params) p->required();
        cmd->add_option("--out", opts.out_dir, "output directory");
        cmd->add_option("--workers", opts.workers, "worker threads for flux grids");
        cmd->add_option("--nc", opts.nc, "charge-basis cutoff override");
        cmd->add_option("--nf", opts.nf, "resonator Fock cutoff override");
    };

    CLI::App* spectrum = app.add_subcommand("spectrum", "simulate transition-frequency sweeps");
    add_common(spectrum, true);
    add_flux_option(spectrum, opts);
    spectrum->add_option("--model", models, "model kinds (repeatable)");

    CLI::App* chi = app.add_subcommand("chi", "simulate the dispersive-shift decomposition");
    add_common(chi, true);
    add_flux_option(chi, opts);

    CLI::App* analyze = app.add_subcommand("analyze", "extract transitions from a two-tone scan");
    add_common(analyze, false);
    analyze->add_option("--scan", scan_path, "scan CSV")->required();
    analyze->add_option("--extract-config", extract_config_path, "extraction config JSON")
        ->required();

    CLI::App* fit = app.add_subcommand("fit", "fit device parameters to a transition table");
    add_common(fit, false);
    fit->add_option("--fit-spec", fit_spec_path, "fit specification JSON")->required();
    fit->add_option("--table", table_path, "transition table CSV");

    CLI::App* harmonics = app.add_subcommand("harmonics", "harmonic content: fit or potential mode");
    add_common(harmonics, false);
    add_flux_option(harmonics, opts);
    harmonics->add_option("--transitions", transitions,
                          "fit mode: measured f01 f02/2 f03/3 f04/4 [GHz]")
        ->expected(4);
    harmonics->add_option("--ec-init", ec_init, "fit mode: charging-energy seed [GHz]");
    harmonics->add_option("--model", harmonics_model, "potential mode: born-oppenheimer|reduced");

    CLI::App* version = app.add_subcommand("version", "print version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (version->parsed()) {
            std::cout << kVersion << "\n";
            return 0;
        }
        if (spectrum->parsed()) return cmd_spectrum(opts, models);
        if (chi->parsed()) return cmd_chi(opts);
        if (analyze->parsed()) return cmd_analyze(opts, scan_path, extract_config_path);
        if (fit->parsed()) return cmd_fit(opts, fit_spec_path, table_path);
        if (harmonics->parsed()) return cmd_harmonics(opts, transitions, ec_init, harmonics_model);
    } catch (const djt::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const djt::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
