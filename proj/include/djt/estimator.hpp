// estimator.hpp — circuit-parameter estimation, harmonic-content fits,
// potential Fourier analysis and model-discrepancy reports

#pragma once

#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "djt/dispersive.hpp"
#include "djt/levmar.hpp"
#include "djt/parallel.hpp"
#include "djt/specfit.hpp"
#include "djt/sweep.hpp"

namespace djt {

namespace detail {

struct ParamField {
    const char* name;
    double DeviceParams::*member;
};

inline const std::array<ParamField, 10>& device_fields() {
    static const std::array<ParamField, 10> fields = {{
        {"C", &DeviceParams::C},
        {"EJ1", &DeviceParams::EJ1},
        {"CJ1", &DeviceParams::CJ1},
        {"EJA", &DeviceParams::EJA},
        {"CJA", &DeviceParams::CJA},
        {"EJB", &DeviceParams::EJB},
        {"CJB", &DeviceParams::CJB},
        {"fres_bare", &DeviceParams::fres_bare},
        {"Cg", &DeviceParams::Cg},
        {"Cr", &DeviceParams::Cr},
    }};
    return fields;
}

inline double DeviceParams::* device_field(const std::string& name) {
    for (const auto& f : device_fields())
        if (name == f.name) return f.member;
    throw ConfigError("unknown device parameter '" + name + "'");
}

// transition label -> photon-number divisor; "f_res" handled separately
inline int label_divisor(const std::string& label) {
    if (label == "f01") return 1;
    if (label == "f02/2") return 2;
    if (label == "f03/3") return 3;
    if (label == "f04/4") return 4;
    throw ConfigError("unknown transition label '" + label + "'");
}

} // namespace detail

// Which parameters to fit, from where to start, and which transitions enter
// the objective.
struct FitSpec {
    ModelKind kind = ModelKind::TwoMode;
    std::vector<std::string> free;                         // subset of DeviceParams fields
    DeviceParams init;                                     // fixed values + initial guesses
    std::map<std::string, std::pair<double, double>> bounds; // per free parameter
    std::vector<std::string> transitions;                  // labels used in the fit

    void validate() const {
        init.validate();
        std::set<std::string> seen;
        for (const std::string& f : free) {
            detail::device_field(f);
            if (!seen.insert(f).second) throw ConfigError("duplicate free parameter " + f);
            if (!bounds.count(f))
                throw ConfigError("free parameter " + f + " has no bounds");
            const auto [lo, hi] = bounds.at(f);
            if (!(lo < hi)) throw ConfigError("invalid bounds for " + f);
        }
        if (transitions.empty()) throw ConfigError("fit spec selects no transitions");
        for (const std::string& t : transitions)
            if (t != "f_res") detail::label_divisor(t);
    }
};

inline void from_json(const nlohmann::json& j, FitSpec& s) {
    s.kind = parse_model_kind(j.value("model", std::string("two-mode")));
    s.free = j.at("free").get<std::vector<std::string>>();
    s.init = j.at("init").get<DeviceParams>();
    s.transitions = j.at("transitions").get<std::vector<std::string>>();
    if (j.contains("bounds"))
        for (const auto& [key, val] : j.at("bounds").items())
            s.bounds[key] = {val.at(0).get<double>(), val.at(1).get<double>()};
}

inline void to_json(nlohmann::json& j, const FitSpec& s) {
    j = nlohmann::json{{"model", model_kind_name(s.kind)},
                       {"free", s.free},
                       {"init", s.init},
                       {"transitions", s.transitions}};
    nlohmann::json b = nlohmann::json::object();
    for (const auto& [key, val] : s.bounds) b[key] = {val.first, val.second};
    j["bounds"] = b;
}

inline FitSpec load_fit_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open fit spec: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("invalid JSON in " + path + ": " + e.what());
    }
    FitSpec s;
    try {
        s = j.get<FitSpec>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("malformed fit spec " + path + ": " + e.what());
    }
    s.validate();
    return s;
}

// Model-minus-data residuals, one per usable table row, in GHz. Rows whose
// spectrum evaluation fails are excluded and counted, never silently zeroed
// into the objective.
struct ResidualReport {
    std::vector<double> values;      // aligned with used_rows
    std::vector<std::size_t> used_rows;
    std::vector<std::size_t> skipped_rows;
};

inline ResidualReport residuals(const DeviceParams& p, const TransitionTable& table,
                                ModelKind kind, Truncation trunc = {},
                                std::size_t workers = default_workers()) {
    if (table.rows.empty()) throw ConfigError("transition table is empty");
    // group rows by flux so each flux point is solved once
    std::map<double, std::vector<std::size_t>> by_flux;
    for (std::size_t r = 0; r < table.rows.size(); ++r)
        by_flux[table.rows[r].phi0].push_back(r);
    std::vector<double> fluxes;
    for (const auto& [phi0, rows] : by_flux) fluxes.push_back(phi0);

    const ModelKind spectrum_kind =
        kind == ModelKind::TwoModeWithResonator ? ModelKind::TwoMode : kind;

    struct PointResult {
        bool ok = false;
        SpectrumResult spec;
        double f_res = 0.0;
        bool has_res = false;
        std::string error;
    };
    const bool wants_res = kind == ModelKind::TwoModeWithResonator;
    const std::vector<PointResult> points =
        parallel_map<PointResult>(fluxes.size(), workers, [&](std::size_t i) {
            PointResult out;
            const FluxBias flux = FluxBias::from_phi0(fluxes[i]);
            try {
                out.spec = spectrum(spectrum_kind, p, flux, trunc);
                if (wants_res) {
                    out.f_res = dressed_resonator_frequency(
                        p, flux, ChargeBasis{trunc.charge_cutoff(ModelKind::TwoMode)});
                    out.has_res = true;
                }
                out.ok = true;
            } catch (const NumericError& e) {
                // numeric failure at one flux flags its rows; configuration
                // errors are deterministic and propagate
                out.error = e.what();
            }
            return out;
        });

    ResidualReport rep;
    for (std::size_t i = 0; i < fluxes.size(); ++i) {
        const auto& rows = by_flux.at(fluxes[i]);
        if (!points[i].ok) {
            rep.skipped_rows.insert(rep.skipped_rows.end(), rows.begin(), rows.end());
            continue;
        }
        for (std::size_t r : rows) {
            const TransitionRow& row = table.rows[r];
            double model = 0.0;
            if (row.label == "f_res") {
                if (!points[i].has_res) {
                    rep.skipped_rows.push_back(r);
                    continue;
                }
                model = points[i].f_res;
            } else {
                const int k = detail::label_divisor(row.label);
                model = points[i].spec.transition_over_k(k);
            }
            rep.values.push_back(model - row.freq);
            rep.used_rows.push_back(r);
        }
    }
    return rep;
}

struct FitReport {
    DeviceParams fitted;
    std::vector<double> residuals; // unweighted, GHz, at the optimum
    double mean_abs_residual = 0.0;
    std::map<std::string, double> std_errors;
    bool converged = false;
    int iterations = 0;
    bool at_bounds = false;
    bool rank_deficient = false;
    std::size_t skipped_rows = 0;
};

inline nlohmann::json fit_report_json(const FitReport& rep) {
    nlohmann::json j;
    j["fitted"] = rep.fitted;
    j["residuals_GHz"] = rep.residuals;
    j["mean_abs_residual_GHz"] = rep.mean_abs_residual;
    j["std_errors"] = rep.std_errors;
    j["converged"] = rep.converged;
    j["iterations"] = rep.iterations;
    j["at_bounds"] = rep.at_bounds;
    j["rank_deficient"] = rep.rank_deficient;
    j["skipped_rows"] = rep.skipped_rows;
    return j;
}

// Least-squares fit of the free device parameters to a transition table.
// Rows are weighted by 1/err when the table carries errors.
inline FitReport fit_device_parameters(const FitSpec& spec, const TransitionTable& full_table,
                                       Truncation trunc = {},
                                       std::size_t workers = default_workers(),
                                       const LeastSquaresOptions& opts = {}) {
    spec.validate();
    TransitionTable table;
    for (const TransitionRow& r : full_table.rows)
        if (std::find(spec.transitions.begin(), spec.transitions.end(), r.label) !=
            spec.transitions.end())
            table.rows.push_back(r);
    if (table.rows.size() < spec.free.size() + 2)
        throw ConfigError("not enough table rows for the requested free parameters");

    bool weighted = true;
    for (const TransitionRow& r : table.rows)
        if (!(r.err > 0.0)) weighted = false;

    auto apply = [&](const Eigen::VectorXd& x) {
        DeviceParams p = spec.init;
        for (std::size_t i = 0; i < spec.free.size(); ++i)
            p.*detail::device_field(spec.free[i]) = x(Eigen::Index(i));
        return p;
    };

    auto residual_fn = [&](const Eigen::VectorXd& x) {
        const ResidualReport rep = residuals(apply(x), table, spec.kind, trunc, workers);
        Eigen::VectorXd r(Eigen::Index(table.rows.size()));
        r.setZero();
        for (std::size_t i = 0; i < rep.values.size(); ++i) {
            const double w = weighted ? 1.0 / table.rows[rep.used_rows[i]].err : 1.0;
            r(Eigen::Index(rep.used_rows[i])) = rep.values[i] * w;
        }
        return r;
    };

    Eigen::VectorXd x0(Eigen::Index(spec.free.size()));
    Eigen::VectorXd lo(x0.size()), hi(x0.size());
    for (std::size_t i = 0; i < spec.free.size(); ++i) {
        x0(Eigen::Index(i)) = spec.init.*detail::device_field(spec.free[i]);
        lo(Eigen::Index(i)) = spec.bounds.at(spec.free[i]).first;
        hi(Eigen::Index(i)) = spec.bounds.at(spec.free[i]).second;
    }

    FitReport rep;
    if (spec.free.empty()) {
        // residual evaluation only
        const ResidualReport rr = residuals(spec.init, table, spec.kind, trunc, workers);
        rep.fitted = spec.init;
        rep.residuals = rr.values;
        rep.skipped_rows = rr.skipped_rows.size();
        rep.converged = true;
    } else {
        const LeastSquaresResult res = fit_least_squares(residual_fn, x0, lo, hi, opts);
        rep.fitted = apply(res.params);
        const ResidualReport rr = residuals(rep.fitted, table, spec.kind, trunc, workers);
        rep.residuals = rr.values;
        rep.skipped_rows = rr.skipped_rows.size();
        rep.converged = res.converged;
        rep.iterations = res.iterations;
        rep.at_bounds = res.at_bounds;
        rep.rank_deficient = res.rank_deficient;
        for (std::size_t i = 0; i < spec.free.size(); ++i)
            rep.std_errors[spec.free[i]] = res.std_errors(Eigen::Index(i));
    }
    double acc = 0.0;
    for (double v : rep.residuals) acc += std::abs(v);
    rep.mean_abs_residual = rep.residuals.empty() ? 0.0 : acc / double(rep.residuals.size());
    return rep;
}

// Cosine-series content of a periodic potential, normalized to the
// fundamental: c_k = (1/pi) int V cos(k phi) dphi, reported as c_k / c_1.
struct HarmonicContent {
    std::vector<double> normalized; // normalized[k-1] = c_k / c_1
    std::vector<double> raw;        // raw[k-1] = c_k
};

inline HarmonicContent potential_fourier(const std::function<double(double)>& potential, int kmax,
                                         std::size_t quad_points = 4096) {
    if (kmax < 1) throw ConfigError("potential_fourier needs kmax >= 1");
    if (quad_points < 2048) quad_points = 2048;

    // double the node count until every normalized coefficient is stable to
    // 1e-8; kinked potentials need deeper grids than smooth ones
    std::vector<double> coarse = cosine_series(potential, kmax, quad_points);
    std::vector<double> fine;
    bool converged = false;
    for (std::size_t n = 2 * quad_points; n <= (std::size_t(1) << 19); n *= 2) {
        fine = cosine_series(potential, kmax, n);
        const double scale = std::max(std::abs(fine[1]), 1e-300);
        converged = true;
        for (int k = 1; k <= kmax; ++k)
            if (std::abs(coarse[std::size_t(k)] - fine[std::size_t(k)]) / scale > 1e-8)
                converged = false;
        if (converged) break;
        coarse = fine;
    }
    if (!converged) throw NumericError("potential Fourier quadrature not converged");

    HarmonicContent out;
    const double c1 = fine[1];
    if (c1 == 0.0) throw NumericError("potential has no fundamental cosine component");
    for (int k = 1; k <= kmax; ++k) {
        out.raw.push_back(fine[std::size_t(k)]);
        out.normalized.push_back(fine[std::size_t(k)] / c1);
    }
    return out;
}

struct HarmonicFitResult {
    HarmonicContent content; // U_k normalized to U_1
    double EC = 0.0;
    double U1 = 0.0;
    double residual_rms = 0.0;
};

// Fits (E_C, U_1..U_4) of 4 E_C n^2 - sum U_k cos(k phi) to the four reduced
// transitions {f01, f02/2, f03/3, f04/4}. Five parameters against four
// observables leave one soft direction; a weak pull of E_C toward ec_init
// (weight ec_regularization, GHz per GHz) selects the solution nearest the
// provided charging energy.
inline HarmonicFitResult fit_harmonic_content(const std::array<double, 4>& transitions_over_k,
                                              double ec_init, ChargeBasis basis = {15},
                                              double ec_regularization = 1e-2) {
    if (!(ec_init > 0.0)) throw ConfigError("ec_init must be positive");
    for (double t : transitions_over_k)
        if (!(t > 0.0)) throw ConfigError("harmonic fit needs positive transition frequencies");

    const double u1_seed =
        std::pow(transitions_over_k[0] + ec_init, 2) / (8.0 * ec_init);

    Eigen::VectorXd x0(5), lo(5), hi(5);
    x0 << ec_init, u1_seed, 0.0, 0.0, 0.0;
    lo << ec_init / 4.0, u1_seed / 6.0, -0.25 * u1_seed, -0.25 * u1_seed, -0.25 * u1_seed;
    hi << ec_init * 4.0, u1_seed * 6.0, 0.25 * u1_seed, 0.25 * u1_seed, 0.25 * u1_seed;

    const auto residual = [&](const Eigen::VectorXd& p) {
        HarmonicSpec spec;
        spec.EC = p(0);
        spec.U = {p(1), p(2), p(3), p(4)};
        Eigen::VectorXd r(5);
        try {
            const SpectrumResult s = harmonic_transmon_spectrum(spec, basis);
            for (int k = 1; k <= 4; ++k)
                r(k - 1) = s.transition_over_k(k) - transitions_over_k[std::size_t(k - 1)];
        } catch (const std::exception&) {
            r.setConstant(1e6);
        }
        r(4) = ec_regularization * (p(0) - ec_init);
        return r;
    };
    const LeastSquaresResult res = fit_least_squares(residual, x0, lo, hi);

    HarmonicFitResult out;
    out.EC = res.params(0);
    out.U1 = res.params(1);
    for (int k = 0; k < 4; ++k) {
        out.content.raw.push_back(res.params(k + 1));
        out.content.normalized.push_back(res.params(k + 1) / res.params(1));
    }
    out.residual_rms = std::sqrt(res.cost / 4.0);
    return out;
}

struct ModelDiscrepancy {
    ModelKind kind;
    std::vector<double> residuals;
    std::vector<std::size_t> used_rows;
    std::size_t skipped = 0;
    double mean_abs = 0.0;
    std::vector<double> alpha; // per unique table flux, model anharmonicity
};

struct ModelDiscrepancyReport {
    std::vector<double> flux_grid; // unique fluxes of the table
    std::vector<ModelDiscrepancy> models;
};

// Residual summary and anharmonicity curves of the two-mode, BO and reduced
// models against one measured (or synthesized) transition table.
inline ModelDiscrepancyReport model_discrepancy_report(const DeviceParams& p,
                                                       const TransitionTable& table,
                                                       Truncation trunc = {},
                                                       std::size_t workers = default_workers()) {
    if (table.rows.empty()) throw ConfigError("transition table is empty");
    ModelDiscrepancyReport rep;
    {
        std::set<double> fluxes;
        for (const TransitionRow& r : table.rows) fluxes.insert(r.phi0);
        rep.flux_grid.assign(fluxes.begin(), fluxes.end());
    }
    for (ModelKind kind :
         {ModelKind::TwoMode, ModelKind::BornOppenheimer, ModelKind::Reduced}) {
        ModelDiscrepancy d;
        d.kind = kind;
        const ResidualReport rr = residuals(p, table, kind, trunc, workers);
        d.residuals = rr.values;
        d.used_rows = rr.used_rows;
        d.skipped = rr.skipped_rows.size();
        double acc = 0.0;
        for (double v : rr.values) acc += std::abs(v);
        d.mean_abs = rr.values.empty() ? 0.0 : acc / double(rr.values.size());
        const std::vector<SpectrumResult> sweep =
            sweep_spectrum(kind, p, rep.flux_grid, trunc, workers);
        for (const SpectrumResult& s : sweep) d.alpha.push_back(s.anharmonicity);
        rep.models.push_back(std::move(d));
    }
    return rep;
}

inline CsvWriter discrepancy_residuals_csv(const ModelDiscrepancyReport& rep,
                                           const TransitionTable& table) {
    CsvWriter csv({"model", "phi_e_phi0", "label", "residual_GHz"});
    for (const ModelDiscrepancy& d : rep.models)
        for (std::size_t i = 0; i < d.residuals.size(); ++i) {
            const TransitionRow& row = table.rows[d.used_rows[i]];
            csv.row({model_kind_name(d.kind), format_g9(row.phi0), row.label,
                     format_g9(d.residuals[i])});
        }
    return csv;
}

inline CsvWriter discrepancy_alpha_csv(const ModelDiscrepancyReport& rep) {
    CsvWriter csv({"phi_e_phi0", "alpha_two_mode_GHz", "alpha_bo_GHz", "alpha_reduced_GHz"});
    for (std::size_t i = 0; i < rep.flux_grid.size(); ++i)
        csv.row({format_g9(rep.flux_grid[i]), format_g9(rep.models[0].alpha[i]),
                 format_g9(rep.models[1].alpha[i]), format_g9(rep.models[2].alpha[i])});
    return csv;
}

} // namespace djt
