// specfit.hpp — two-tone scan reduction: amplitude averaging, Lorentzian peak
// extraction, transition tables, and T1 / Ramsey coherence fits

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "djt/constants.hpp"
#include "djt/csv.hpp"
#include "djt/levmar.hpp"

namespace djt {

// Raw spectroscopy cube indexed [flux][amplitude][frequency].
struct TwoToneScan {
    std::vector<double> flux; // Phi_0 units, strictly increasing
    std::vector<double> amp;  // drive amplitude, strictly increasing
    std::vector<double> freq; // GHz, strictly increasing
    std::vector<double> response;

    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
        return (i * amp.size() + j) * freq.size() + k;
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return response[index(i, j, k)];
    }
    bool empty() const { return flux.empty(); }

    void validate() const {
        auto strictly_increasing = [](const std::vector<double>& v, const char* name) {
            for (std::size_t i = 0; i + 1 < v.size(); ++i)
                if (!(v[i] < v[i + 1]))
                    throw ConfigError(std::string("scan ") + name + " axis not strictly increasing");
        };
        strictly_increasing(flux, "flux");
        strictly_increasing(amp, "amplitude");
        strictly_increasing(freq, "frequency");
        if (response.size() != flux.size() * amp.size() * freq.size())
            throw ConfigError("scan response size does not match axes");
        for (double r : response)
            if (!std::isfinite(r)) throw ConfigError("scan response contains non-finite values");
    }
};

inline void save_scan(const TwoToneScan& scan, const std::string& path) {
    scan.validate();
    CsvWriter csv({"phi_e_phi0", "amp", "freq_GHz", "response"});
    for (std::size_t i = 0; i < scan.flux.size(); ++i)
        for (std::size_t j = 0; j < scan.amp.size(); ++j)
            for (std::size_t k = 0; k < scan.freq.size(); ++k)
                csv.row({format_g9(scan.flux[i]), format_g9(scan.amp[j]),
                         format_g9(scan.freq[k]), format_g9(scan.at(i, j, k))});
    csv.write(path);
}

// Long-form CSV loader. Rows must enumerate a complete grid in canonical
// order (flux outer, amplitude, frequency inner); any deviation reports the
// offending file row.
inline TwoToneScan load_scan(const std::string& path) {
    const CsvTable table = read_csv(path);
    const std::vector<std::string> expected = {"phi_e_phi0", "amp", "freq_GHz", "response"};
    if (table.header != expected)
        throw ParseError("scan header must be phi_e_phi0,amp,freq_GHz,response in " + path, 1);
    if (table.rows.empty()) throw ParseError("scan file has no data rows: " + path, 1);

    struct Row {
        double phi0, amp, freq, resp;
    };
    std::vector<Row> rows(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::size_t file_row = r + 2;
        rows[r] = {parse_double(table.rows[r][0], file_row),
                   parse_double(table.rows[r][1], file_row),
                   parse_double(table.rows[r][2], file_row),
                   parse_double(table.rows[r][3], file_row)};
    }

    TwoToneScan scan;
    // frequency block length = run of strictly increasing freq at fixed (flux, amp)
    std::size_t nfreq = 1;
    while (nfreq < rows.size() && rows[nfreq].phi0 == rows[0].phi0 &&
           rows[nfreq].amp == rows[0].amp && rows[nfreq].freq > rows[nfreq - 1].freq)
        ++nfreq;
    std::size_t namp = 1;
    while (namp * nfreq < rows.size() && rows[namp * nfreq].phi0 == rows[0].phi0) ++namp;
    if (rows.size() % (namp * nfreq) != 0)
        throw ParseError("scan rows do not form a complete flux x amp x freq grid",
                         rows.size() + 1);
    const std::size_t nflux = rows.size() / (namp * nfreq);

    scan.freq.resize(nfreq);
    for (std::size_t k = 0; k < nfreq; ++k) scan.freq[k] = rows[k].freq;
    scan.amp.resize(namp);
    for (std::size_t j = 0; j < namp; ++j) scan.amp[j] = rows[j * nfreq].amp;
    scan.flux.resize(nflux);
    for (std::size_t i = 0; i < nflux; ++i) scan.flux[i] = rows[i * namp * nfreq].phi0;
    scan.response.resize(rows.size());

    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::size_t k = r % nfreq;
        const std::size_t j = (r / nfreq) % namp;
        const std::size_t i = r / (nfreq * namp);
        if (rows[r].phi0 != scan.flux[i] || rows[r].amp != scan.amp[j] ||
            rows[r].freq != scan.freq[k])
            throw ParseError("scan rows out of canonical flux/amp/freq order", r + 2);
        scan.response[scan.index(i, j, k)] = rows[r].resp;
    }
    try {
        scan.validate();
    } catch (const ConfigError& e) {
        throw ParseError(std::string(e.what()) + " in " + path, 2);
    }
    return scan;
}

// Mean response over the amplitude rows inside [amp_lo, amp_hi].
inline std::vector<double> average_over_amplitude(const TwoToneScan& scan,
                                                  std::size_t flux_index, double amp_lo,
                                                  double amp_hi) {
    if (flux_index >= scan.flux.size()) throw ConfigError("flux index out of range");
    std::vector<std::size_t> sel;
    for (std::size_t j = 0; j < scan.amp.size(); ++j)
        if (scan.amp[j] >= amp_lo && scan.amp[j] <= amp_hi) sel.push_back(j);
    if (sel.empty()) throw ConfigError("amplitude window selects no scan rows");
    std::vector<double> trace(scan.freq.size(), 0.0);
    for (std::size_t j : sel)
        for (std::size_t k = 0; k < scan.freq.size(); ++k)
            trace[k] += scan.at(flux_index, j, k);
    for (double& t : trace) t /= double(sel.size());
    return trace;
}

// Lorentzian A / (1 + ((f - f0)/gamma)^2) + B; gamma is the HWHM and A may be
// negative (dips).
struct PeakFit {
    double f0 = 0.0, gamma = 0.0, amplitude = 0.0, offset = 0.0;
    double f0_err = 0.0, gamma_err = 0.0, amplitude_err = 0.0, offset_err = 0.0;
    double residual_rms = 0.0;
};

inline double lorentzian(double f, double f0, double gamma, double a, double b) {
    const double x = (f - f0) / gamma;
    return a / (1.0 + x * x) + b;
}

inline PeakFit fit_lorentzian(std::span<const double> freq, std::span<const double> response,
                              std::optional<PeakFit> init = std::nullopt) {
    const std::size_t n = freq.size();
    if (n < 5 || response.size() != n)
        throw ConfigError("Lorentzian fit needs at least 5 samples");

    double f0, gamma, a, b;
    if (init) {
        f0 = init->f0;
        gamma = init->gamma;
        a = init->amplitude;
        b = init->offset;
    } else {
        std::vector<double> sorted(response.begin(), response.end());
        std::sort(sorted.begin(), sorted.end());
        const double median = sorted[n / 2];
        const double vmax = sorted.back(), vmin = sorted.front();
        if (vmax == vmin) throw FitError("flat trace: no peak to fit");
        const bool peak_up = (vmax - median) >= (median - vmin);
        const double extremum = peak_up ? vmax : vmin;
        std::size_t imax = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (response[i] == extremum) imax = i;
        f0 = freq[imax];
        b = median;
        a = extremum - b;
        // half-width from the half-maximum crossing around the extremum
        const double half = b + 0.5 * a;
        std::size_t w = 1;
        while (imax + w < n && ((peak_up && response[imax + w] > half) ||
                                (!peak_up && response[imax + w] < half)))
            ++w;
        gamma = std::max(std::abs(freq[std::min(imax + w, n - 1)] - f0),
                         (freq[n - 1] - freq[0]) / double(4 * n));
    }

    const double span = freq[n - 1] - freq[0];
    const double vmin = *std::min_element(response.begin(), response.end());
    const double vmax = *std::max_element(response.begin(), response.end());
    const double range = std::max(vmax - vmin, 1e-300);

    Eigen::VectorXd x0(4), lo(4), hi(4);
    x0 << f0, gamma, a, b;
    lo << freq[0] - span, span * 1e-9, -20.0 * range, vmin - 10.0 * range;
    hi << freq[n - 1] + span, span * 10.0, 20.0 * range, vmax + 10.0 * range;

    const auto residual = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
            r(Eigen::Index(i)) = lorentzian(freq[i], p(0), p(1), p(2), p(3)) - response[i];
        return r;
    };
    const LeastSquaresResult res = fit_least_squares(residual, x0, lo, hi);

    PeakFit fit;
    fit.f0 = res.params(0);
    fit.gamma = std::abs(res.params(1));
    fit.amplitude = res.params(2);
    fit.offset = res.params(3);
    fit.f0_err = res.std_errors(0);
    fit.gamma_err = res.std_errors(1);
    fit.amplitude_err = res.std_errors(2);
    fit.offset_err = res.std_errors(3);
    fit.residual_rms = std::sqrt(res.cost / double(n));
    if (std::abs(fit.amplitude) < 2.0 * fit.residual_rms)
        throw FitError("no discernible peak above the residual level");
    return fit;
}

struct TransitionRow {
    double phi0 = 0.0;
    std::string label;
    double freq = 0.0; // already divided by the transition's photon number
    double err = 0.0;
};

struct TransitionTable {
    std::vector<TransitionRow> rows;
};

inline CsvWriter transition_table_csv(const TransitionTable& table) {
    CsvWriter csv({"phi_e_phi0", "label", "freq_GHz", "err_GHz"});
    for (const TransitionRow& r : table.rows)
        csv.row({format_g9(r.phi0), r.label, format_g9(r.freq), format_g9(r.err)});
    return csv;
}

inline TransitionTable load_transition_table(const std::string& path) {
    const CsvTable csv = read_csv(path);
    const std::vector<std::string> expected = {"phi_e_phi0", "label", "freq_GHz", "err_GHz"};
    if (csv.header != expected)
        throw ParseError("transition table header must be phi_e_phi0,label,freq_GHz,err_GHz", 1);
    TransitionTable table;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const std::size_t file_row = r + 2;
        TransitionRow row;
        row.phi0 = parse_double(csv.rows[r][0], file_row);
        row.label = csv.rows[r][1];
        row.freq = parse_double(csv.rows[r][2], file_row);
        row.err = parse_double(csv.rows[r][3], file_row);
        if (!(row.freq > 0.0)) throw ParseError("transition frequency must be positive", file_row);
        table.rows.push_back(std::move(row));
    }
    return table;
}

// Per-transition extraction window; the fitted peak position is divided by
// `divisor` so the table carries f_0k/k.
struct ExtractionWindow {
    std::string label;
    double freq_lo = 0.0, freq_hi = 0.0;
    double amp_lo = 0.0, amp_hi = 0.0;
    int divisor = 1;
};

struct ExtractionConfig {
    std::vector<ExtractionWindow> windows;

    void validate() const {
        if (windows.empty()) throw ConfigError("extraction config has no windows");
        for (const auto& w : windows) {
            if (w.label.empty()) throw ConfigError("extraction window without label");
            if (!(w.freq_lo < w.freq_hi))
                throw ConfigError("empty frequency window for label " + w.label);
            if (!(w.amp_lo <= w.amp_hi))
                throw ConfigError("empty amplitude window for label " + w.label);
            if (w.divisor < 1) throw ConfigError("divisor must be >= 1 for label " + w.label);
        }
        for (std::size_t i = 0; i < windows.size(); ++i)
            for (std::size_t j = i + 1; j < windows.size(); ++j) {
                if (windows[i].label == windows[j].label)
                    throw ConfigError("duplicate extraction label " + windows[i].label);
                if (windows[i].freq_lo < windows[j].freq_hi &&
                    windows[j].freq_lo < windows[i].freq_hi)
                    throw ConfigError("frequency windows overlap: " + windows[i].label + " and " +
                                      windows[j].label);
            }
    }
};

inline void from_json(const nlohmann::json& j, ExtractionWindow& w) {
    w.label = j.at("label").get<std::string>();
    const auto f = j.at("freq_GHz");
    w.freq_lo = f.at(0).get<double>();
    w.freq_hi = f.at(1).get<double>();
    const auto a = j.at("amp");
    w.amp_lo = a.at(0).get<double>();
    w.amp_hi = a.at(1).get<double>();
    w.divisor = j.value("divisor", 1);
}

inline void to_json(nlohmann::json& j, const ExtractionWindow& w) {
    j = nlohmann::json{{"label", w.label},
                       {"freq_GHz", {w.freq_lo, w.freq_hi}},
                       {"amp", {w.amp_lo, w.amp_hi}},
                       {"divisor", w.divisor}};
}

inline ExtractionConfig load_extraction_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open extraction config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("invalid JSON in " + path + ": " + e.what());
    }
    ExtractionConfig cfg;
    try {
        for (const auto& wj : j.at("windows")) cfg.windows.push_back(wj.get<ExtractionWindow>());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("malformed extraction config " + path + ": " + e.what());
    }
    cfg.validate();
    return cfg;
}

struct ExtractionFailure {
    double phi0 = 0.0;
    std::string label;
    std::string reason;
};

struct ExtractionOutcome {
    TransitionTable table;
    std::vector<ExtractionFailure> failures;
};

// Per flux and label: average over the amplitude window, restrict to the
// frequency window, fit a Lorentzian, tabulate f0/divisor. Failures are
// recorded per cell and never poison other cells.
inline ExtractionOutcome extract_transitions(const TwoToneScan& scan,
                                             const ExtractionConfig& cfg) {
    cfg.validate();
    if (!scan.empty()) scan.validate();

    ExtractionOutcome out;
    for (std::size_t i = 0; i < scan.flux.size(); ++i) {
        for (const ExtractionWindow& w : cfg.windows) {
            try {
                const std::vector<double> trace =
                    average_over_amplitude(scan, i, w.amp_lo, w.amp_hi);
                std::vector<double> fs, vs;
                for (std::size_t k = 0; k < scan.freq.size(); ++k)
                    if (scan.freq[k] >= w.freq_lo && scan.freq[k] <= w.freq_hi) {
                        fs.push_back(scan.freq[k]);
                        vs.push_back(trace[k]);
                    }
                const PeakFit fit = fit_lorentzian(fs, vs);
                out.table.rows.push_back({scan.flux[i], w.label, fit.f0 / double(w.divisor),
                                          fit.f0_err / double(w.divisor)});
            } catch (const std::exception& e) {
                out.failures.push_back({scan.flux[i], w.label, e.what()});
            }
        }
    }
    return out;
}

// A exp(-t/T1) + B. Times in microseconds.
struct DecayFit {
    double T1 = 0.0, amplitude = 0.0, offset = 0.0;
    double T1_err = 0.0, amplitude_err = 0.0, offset_err = 0.0;
    double residual_rms = 0.0;
};

inline DecayFit fit_exponential_decay(std::span<const double> times,
                                      std::span<const double> values) {
    const std::size_t n = times.size();
    if (n < 5 || values.size() != n) throw ConfigError("decay fit needs at least 5 samples");
    const double span = times[n - 1] - times[0];
    if (!(span > 0.0)) throw ConfigError("decay fit needs increasing times");

    const double vmin = *std::min_element(values.begin(), values.end());
    const double vmax = *std::max_element(values.begin(), values.end());
    const double range = vmax - vmin;
    if (range == 0.0) throw FitError("constant data: no decay to fit");

    // tail mean as offset seed
    double tail = 0.0;
    const std::size_t ntail = std::max<std::size_t>(1, n / 10);
    for (std::size_t i = n - ntail; i < n; ++i) tail += values[i];
    tail /= double(ntail);

    Eigen::VectorXd x0(3), lo(3), hi(3);
    x0 << span / 3.0, values[0] - tail, tail;
    lo << span * 1e-4, -20.0 * range, vmin - 10.0 * range;
    hi << span * 1e4, 20.0 * range, vmax + 10.0 * range;

    const auto residual = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
            r(Eigen::Index(i)) = p(1) * std::exp(-times[i] / p(0)) + p(2) - values[i];
        return r;
    };
    const LeastSquaresResult res = fit_least_squares(residual, x0, lo, hi);

    DecayFit fit;
    fit.T1 = res.params(0);
    fit.amplitude = res.params(1);
    fit.offset = res.params(2);
    fit.T1_err = res.std_errors(0);
    fit.amplitude_err = res.std_errors(1);
    fit.offset_err = res.std_errors(2);
    fit.residual_rms = std::sqrt(res.cost / double(n));
    if (fit.T1 > 100.0 * span)
        throw FitError("decay time beyond the data span: T1 effectively infinite");
    if (std::abs(fit.amplitude) < 2.0 * fit.residual_rms)
        throw FitError("no decay resolved above the residual level");
    return fit;
}

// A exp(-t/T2*) cos(2 pi delta t + phase) + B. Times in microseconds,
// detuning in MHz (cycles per microsecond).
struct RamseyFit {
    double T2star = 0.0, detuning = 0.0, phase = 0.0, amplitude = 0.0, offset = 0.0;
    double T2star_err = 0.0, detuning_err = 0.0, phase_err = 0.0, amplitude_err = 0.0,
           offset_err = 0.0;
    double residual_rms = 0.0;
};

inline RamseyFit fit_ramsey(std::span<const double> times, std::span<const double> values) {
    const std::size_t n = times.size();
    if (n < 8 || values.size() != n) throw ConfigError("Ramsey fit needs at least 8 samples");
    const double span = times[n - 1] - times[0];
    if (!(span > 0.0)) throw ConfigError("Ramsey fit needs increasing times");

    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= double(n);
    const double vmin = *std::min_element(values.begin(), values.end());
    const double vmax = *std::max_element(values.begin(), values.end());
    const double range = vmax - vmin;
    if (range == 0.0) throw FitError("constant data: no oscillation to fit");

    // coarse periodogram for the detuning seed
    const double dt_min = span / double(n - 1);
    const double nyquist = 0.5 / dt_min;
    double best_delta = 0.0, best_power = -1.0;
    std::complex<double> best_sum;
    for (int s = 1; s <= 400; ++s) {
        const double delta = nyquist * double(s) / 400.0;
        std::complex<double> acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            acc += (values[i] - mean) *
                   std::polar(1.0, -2.0 * constants::pi * delta * times[i]);
        if (std::norm(acc) > best_power) {
            best_power = std::norm(acc);
            best_delta = delta;
            best_sum = acc;
        }
    }

    Eigen::VectorXd x0(5), lo(5), hi(5);
    x0 << span / 2.0, best_delta, std::arg(best_sum), range / 2.0, mean;
    lo << span * 1e-3, 0.0, -2.0 * constants::pi, -10.0 * range, vmin - 10.0 * range;
    hi << span * 1e4, 2.0 * nyquist, 2.0 * constants::pi, 10.0 * range, vmax + 10.0 * range;

    const auto residual = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
            r(Eigen::Index(i)) = p(3) * std::exp(-times[i] / p(0)) *
                                     std::cos(2.0 * constants::pi * p(1) * times[i] + p(2)) +
                                 p(4) - values[i];
        return r;
    };
    const LeastSquaresResult res = fit_least_squares(residual, x0, lo, hi);

    RamseyFit fit;
    fit.T2star = res.params(0);
    fit.detuning = res.params(1);
    fit.phase = res.params(2);
    fit.amplitude = res.params(3);
    fit.offset = res.params(4);
    fit.T2star_err = res.std_errors(0);
    fit.detuning_err = res.std_errors(1);
    fit.phase_err = res.std_errors(2);
    fit.amplitude_err = res.std_errors(3);
    fit.offset_err = res.std_errors(4);
    fit.residual_rms = std::sqrt(res.cost / double(n));
    if (std::abs(fit.amplitude) < 2.0 * fit.residual_rms)
        throw FitError("zero-amplitude oscillation: Ramsey fit degenerate");
    return fit;
}

} // namespace djt
