#include <catch2/catch.hpp>

#include <random>

#include "djt/estimator.hpp"

using namespace djt;

namespace {

DeviceParams cd2() {
    DeviceParams p;
    p.C = 63.3;
    p.EJ1 = 23.4;
    p.CJ1 = 27.8;
    p.EJA = 30.0;
    p.CJA = 34.5;
    p.EJB = 22.2;
    p.CJB = 25.6;
    p.fres_bare = 6.3783;
    p.Cg = 7.3;
    p.Cr = 1200.0;
    return p;
}

// forward-generate a transition table from the two-mode model
TransitionTable synth_table(const DeviceParams& p, const std::vector<double>& fluxes,
                            double noise_GHz, unsigned seed, Truncation trunc) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, noise_GHz);
    TransitionTable table;
    for (double phi0 : fluxes) {
        const SpectrumResult s = spectrum(ModelKind::TwoMode, p, FluxBias::from_phi0(phi0), trunc);
        for (int k : {1, 2}) {
            TransitionRow row;
            row.phi0 = phi0;
            row.label = k == 1 ? "f01" : "f02/2";
            row.freq = s.transition_over_k(k) + (noise_GHz > 0.0 ? gauss(rng) : 0.0);
            row.err = noise_GHz;
            table.rows.push_back(row);
        }
    }
    return table;
}

std::vector<double> flux_points(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * double(i) / double(n - 1);
    return out;
}

} // namespace

TEST_CASE("residuals vanish on a self-generated table") {
    const DeviceParams p = cd2();
    const Truncation trunc{10, 0, 0};
    const TransitionTable table = synth_table(p, flux_points(0.0, 0.4, 5), 0.0, 0, trunc);
    const ResidualReport rep = residuals(p, table, ModelKind::TwoMode, trunc, 2);
    REQUIRE(rep.values.size() == table.rows.size());
    CHECK(rep.skipped_rows.empty());
    for (double r : rep.values) CHECK(std::abs(r) < 1e-9);
}

TEST_CASE("6 MHz noise shows up as a few-MHz mean residual") {
    const DeviceParams p = cd2();
    const Truncation trunc{10, 0, 0};
    const TransitionTable table = synth_table(p, flux_points(0.0, 0.4, 8), 6e-3, 1, trunc);
    const ResidualReport rep = residuals(p, table, ModelKind::TwoMode, trunc, 2);
    double mean = 0.0;
    for (double r : rep.values) mean += std::abs(r);
    mean /= double(rep.values.size());
    CHECK(mean * 1e3 > 3.0);
    CHECK(mean * 1e3 < 9.0);
}

TEST_CASE("reduced model misses a two-mode-generated table by over 0.1 GHz") {
    const DeviceParams p = cd2();
    const Truncation trunc{}; // defaults: the 1D kinds need 2*nc >= kpot + 5
    const TransitionTable table = synth_table(p, flux_points(0.0, 0.5, 6), 0.0, 0, trunc);
    const ResidualReport rep = residuals(p, table, ModelKind::Reduced, trunc, 2);
    CHECK(rep.skipped_rows.empty());
    double mean = 0.0;
    for (double r : rep.values) mean += std::abs(r);
    mean /= double(rep.values.size());
    CHECK(mean > 0.1);
}

TEST_CASE("device-parameter fit recovers the generating Josephson energies") {
    const DeviceParams truth = cd2();
    const Truncation trunc{10, 0, 0};
    const TransitionTable table =
        synth_table(truth, flux_points(0.0, 0.45, 12), 1e-3, 2, trunc);

    FitSpec spec;
    spec.kind = ModelKind::TwoMode;
    spec.free = {"EJ1", "EJA", "EJB"};
    spec.init = truth;
    spec.init.EJ1 *= 1.08;
    spec.init.EJA *= 0.93;
    spec.init.EJB *= 1.07;
    spec.transitions = {"f01", "f02/2"};
    for (const std::string& name : spec.free) {
        const double v = truth.*detail::device_field(name);
        spec.bounds[name] = {0.7 * v, 1.3 * v};
    }

    const FitReport rep = fit_device_parameters(spec, table, trunc, 2);
    CHECK(rep.converged);
    CHECK(!rep.at_bounds);
    CHECK(rep.fitted.EJ1 == Approx(truth.EJ1).epsilon(0.01));
    CHECK(rep.fitted.EJA == Approx(truth.EJA).epsilon(0.01));
    CHECK(rep.fitted.EJB == Approx(truth.EJB).epsilon(0.01));
    CHECK(rep.mean_abs_residual < 5e-3);
    CHECK(rep.std_errors.at("EJ1") > 0.0);
}

TEST_CASE("zero free parameters degenerate to a residual evaluation") {
    const DeviceParams p = cd2();
    const Truncation trunc{10, 0, 0};
    const TransitionTable table = synth_table(p, flux_points(0.0, 0.3, 4), 0.0, 0, trunc);
    FitSpec spec;
    spec.kind = ModelKind::TwoMode;
    spec.init = p;
    spec.transitions = {"f01", "f02/2"};
    const FitReport rep = fit_device_parameters(spec, table, trunc, 2);
    CHECK(rep.converged);
    CHECK(rep.mean_abs_residual < 1e-9);
    CHECK(rep.std_errors.empty());
}

TEST_CASE("fit result is invariant under table row permutation") {
    const DeviceParams truth = cd2();
    const Truncation trunc{8, 0, 0};
    TransitionTable table = synth_table(truth, flux_points(0.0, 0.4, 7), 1e-4, 3, trunc);

    FitSpec spec;
    spec.kind = ModelKind::TwoMode;
    spec.free = {"EJ1"};
    spec.init = truth;
    spec.init.EJ1 *= 1.05;
    spec.transitions = {"f01", "f02/2"};
    spec.bounds["EJ1"] = {0.8 * truth.EJ1, 1.2 * truth.EJ1};

    const FitReport a = fit_device_parameters(spec, table, trunc, 2);
    TransitionTable shuffled = table;
    std::mt19937 rng(4);
    std::shuffle(shuffled.rows.begin(), shuffled.rows.end(), rng);
    const FitReport b = fit_device_parameters(spec, shuffled, trunc, 2);
    CHECK(a.fitted.EJ1 == Approx(b.fitted.EJ1).epsilon(1e-9));
}

TEST_CASE("identifiability: vanishing noise recovers parameters to 1e-4 relative") {
    const DeviceParams truth = cd2();
    const Truncation trunc{8, 0, 0};
    const TransitionTable table =
        synth_table(truth, flux_points(0.0, 0.4, 8), 1e-6, 5, trunc);

    FitSpec spec;
    spec.kind = ModelKind::TwoMode;
    spec.free = {"EJ1", "EJA"};
    spec.init = truth;
    spec.init.EJ1 *= 1.03;
    spec.init.EJA *= 0.97;
    spec.transitions = {"f01", "f02/2"};
    spec.bounds["EJ1"] = {0.8 * truth.EJ1, 1.2 * truth.EJ1};
    spec.bounds["EJA"] = {0.8 * truth.EJA, 1.2 * truth.EJA};

    const FitReport rep = fit_device_parameters(spec, table, trunc, 2);
    CHECK(rep.fitted.EJ1 == Approx(truth.EJ1).epsilon(1e-4));
    CHECK(rep.fitted.EJA == Approx(truth.EJA).epsilon(1e-4));
}

TEST_CASE("fit spec validation") {
    FitSpec spec;
    spec.init = cd2();
    spec.transitions = {"f01"};
    spec.free = {"EJ1"};
    CHECK_THROWS_AS(spec.validate(), ConfigError); // no bounds
    spec.bounds["EJ1"] = {10.0, 40.0};
    CHECK_NOTHROW(spec.validate());
    spec.free.push_back("EJ1");
    CHECK_THROWS_AS(spec.validate(), ConfigError); // duplicate
    spec.free = {"nope"};
    CHECK_THROWS_AS(spec.validate(), ConfigError); // unknown name
    spec.free = {};
    spec.transitions = {"f05"};
    CHECK_THROWS_AS(spec.validate(), ConfigError); // unknown label

    // too few rows for the requested parameters
    FitSpec ok;
    ok.init = cd2();
    ok.free = {"EJ1", "EJA", "EJB"};
    for (const std::string& n : ok.free) ok.bounds[n] = {1.0, 60.0};
    ok.transitions = {"f01"};
    TransitionTable tiny;
    tiny.rows = {{0.0, "f01", 5.0, 0.0}, {0.1, "f01", 5.0, 0.0}};
    CHECK_THROWS_AS(fit_device_parameters(ok, tiny, Truncation{8, 0, 0}, 1), ConfigError);
}

TEST_CASE("fit spec JSON round trip") {
    FitSpec spec;
    spec.kind = ModelKind::TwoMode;
    spec.free = {"EJ1", "EJA"};
    spec.init = cd2();
    spec.transitions = {"f01", "f02/2"};
    spec.bounds["EJ1"] = {10.0, 40.0};
    spec.bounds["EJA"] = {10.0, 40.0};
    const nlohmann::json j = spec;
    const FitSpec back = j.get<FitSpec>();
    CHECK(back.free == spec.free);
    CHECK(back.transitions == spec.transitions);
    CHECK(back.init.EJ1 == Approx(spec.init.EJ1));
    CHECK(back.bounds.at("EJA").second == Approx(40.0));
}

TEST_CASE("potential Fourier analysis") {
    SECTION("pure cosine potential") {
        const HarmonicContent c = potential_fourier([](double phi) { return -std::cos(phi); }, 4);
        CHECK(c.normalized[0] == Approx(1.0));
        for (int k = 2; k <= 4; ++k) CHECK(std::abs(c.normalized[std::size_t(k - 1)]) < 1e-10);
    }
    SECTION("matched-junction reduced potential reproduces the |cos| series") {
        const SquidParams s = series_junction_params(20.0, 20.0);
        REQUIRE(s.lambda == Approx(1.0));
        const HarmonicContent c =
            potential_fourier([&](double phi) { return reduced_potential(phi, s); }, 4);
        // |cos(phi/2)| has cosine coefficients prop. to (-1)^{k+1}/(4k^2-1)
        for (int k = 2; k <= 4; ++k) {
            const double expected = 3.0 * ((k % 2 == 1) ? 1.0 : -1.0) / (4.0 * k * k - 1.0);
            CHECK(c.normalized[std::size_t(k - 1)] == Approx(expected).margin(1e-6));
        }
        CHECK(std::abs(c.normalized[1]) == Approx(0.2).margin(1e-6));
    }
    SECTION("linear and exact on finite cosine sums") {
        const HarmonicContent c = potential_fourier(
            [](double phi) { return 2.5 * std::cos(phi) - 0.3 * std::cos(3.0 * phi); }, 4);
        CHECK(c.raw[0] == Approx(2.5).margin(1e-10));
        CHECK(c.raw[1] == Approx(0.0).margin(1e-10));
        CHECK(c.raw[2] == Approx(-0.3).margin(1e-10));
        CHECK(c.normalized[2] == Approx(-0.12).margin(1e-10));
    }
    SECTION("second-harmonic fraction grows monotonically with lambda") {
        double prev = 0.0;
        for (double lam : {0.2, 0.4, 0.6, 0.8, 0.95, 1.0}) {
            SquidParams s;
            s.EJSigma = 40.0;
            s.lambda = lam;
            const HarmonicContent c =
                potential_fourier([&](double phi) { return reduced_potential(phi, s); }, 2);
            const double frac = std::abs(c.normalized[1]);
            CHECK(frac > prev);
            prev = frac;
        }
    }
    SECTION("a discontinuous potential fails the convergence check") {
        CHECK_THROWS_AS(potential_fourier(
                            [](double phi) { return phi < constants::pi ? -1.0 : 0.5; }, 3),
                        NumericError);
    }
}

TEST_CASE("harmonic-content fit: round trip and degeneracies") {
    const double ec = 0.305, u1 = 12.0;

    SECTION("a weak harmonic mix is recovered to 1e-3") {
        HarmonicSpec gen;
        gen.EC = ec;
        gen.U = {u1, 0.015 * u1, 0.011 * u1, 0.005 * u1};
        const SpectrumResult s = harmonic_transmon_spectrum(gen, ChargeBasis{15});
        const HarmonicFitResult fit = fit_harmonic_content(
            {s.transition_over_k(1), s.transition_over_k(2), s.transition_over_k(3),
             s.transition_over_k(4)},
            ec);
        CHECK(fit.content.normalized[0] == Approx(1.0));
        CHECK(fit.content.normalized[1] == Approx(0.015).margin(1e-3));
        CHECK(fit.content.normalized[2] == Approx(0.011).margin(1e-3));
        CHECK(fit.content.normalized[3] == Approx(0.005).margin(1e-3));
        CHECK(fit.EC == Approx(ec).epsilon(0.02));
    }
    SECTION("pure cosine transitions give vanishing higher harmonics") {
        HarmonicSpec gen;
        gen.EC = ec;
        gen.U = {u1, 0.0, 0.0, 0.0};
        const SpectrumResult s = harmonic_transmon_spectrum(gen, ChargeBasis{15});
        const HarmonicFitResult fit = fit_harmonic_content(
            {s.transition_over_k(1), s.transition_over_k(2), s.transition_over_k(3),
             s.transition_over_k(4)},
            ec);
        for (int k = 2; k <= 4; ++k)
            CHECK(std::abs(fit.content.normalized[std::size_t(k - 1)]) < 1e-6);
    }
    SECTION("1 MHz noise: U2 within 0.005 in at least 95 of 100 trials") {
        HarmonicSpec gen;
        gen.EC = ec;
        gen.U = {u1, 0.015 * u1, 0.011 * u1, 0.005 * u1};
        const SpectrumResult s = harmonic_transmon_spectrum(gen, ChargeBasis{15});
        std::mt19937 rng(6);
        std::normal_distribution<double> gauss(0.0, 1e-3);
        int good = 0;
        for (int trial = 0; trial < 100; ++trial) {
            const HarmonicFitResult fit = fit_harmonic_content(
                {s.transition_over_k(1) + gauss(rng), s.transition_over_k(2) + gauss(rng),
                 s.transition_over_k(3) + gauss(rng), s.transition_over_k(4) + gauss(rng)},
                ec);
            if (std::abs(fit.content.normalized[1] - 0.015) < 0.005) ++good;
        }
        CHECK(good >= 95);
    }
    SECTION("a perturbed charging-energy seed walks the known soft direction") {
        // five parameters against four exact observables leave a solution
        // curve; the fit lands on it at the point nearest the seed, trading
        // U2 against EC with slope dU2/d(EC/EC) close to -1/2
        HarmonicSpec gen;
        gen.EC = ec;
        gen.U = {u1, 0.015 * u1, 0.011 * u1, 0.005 * u1};
        const SpectrumResult s = harmonic_transmon_spectrum(gen, ChargeBasis{15});
        const HarmonicFitResult fit = fit_harmonic_content(
            {s.transition_over_k(1), s.transition_over_k(2), s.transition_over_k(3),
             s.transition_over_k(4)},
            ec * 1.02);
        CHECK(fit.residual_rms < 1e-6); // still an exact fit of the data
        CHECK(fit.content.normalized[1] == Approx(0.015 - 0.5 * 0.02).margin(3e-3));
    }
}

TEST_CASE("model discrepancy report orders the model hierarchy") {
    const DeviceParams p = cd2();
    const Truncation trunc{};
    const TransitionTable table =
        synth_table(p, flux_points(0.0, 0.5, 6), 1e-4, 7, trunc);
    const ModelDiscrepancyReport rep = model_discrepancy_report(p, table, trunc, 2);
    REQUIRE(rep.models.size() == 3);
    CHECK(rep.models[0].kind == ModelKind::TwoMode);
    CHECK(rep.models[0].mean_abs < 1e-3);
    CHECK(rep.models[1].mean_abs > rep.models[0].mean_abs); // BO worse than two-mode
    CHECK(rep.models[2].mean_abs > 0.08);                   // reduced worst
    for (const ModelDiscrepancy& d : rep.models)
        CHECK(d.alpha.size() == rep.flux_grid.size());

    // degenerate single-flux table still yields a report
    TransitionTable single;
    single.rows = {table.rows[0], table.rows[1]};
    const ModelDiscrepancyReport one = model_discrepancy_report(p, single, trunc, 1);
    CHECK(one.flux_grid.size() == 1);

    const CsvWriter res_csv = discrepancy_residuals_csv(rep, table);
    CHECK(res_csv.str().find("two-mode") != std::string::npos);
    const CsvWriter alpha_csv = discrepancy_alpha_csv(rep);
    CHECK(alpha_csv.str().rfind("phi_e_phi0,alpha_two_mode_GHz", 0) == 0);
}
