// dispersive.hpp — Schrieffer-Wolff resonator physics: charge matrix elements,
// the chi_q / chi_int decomposition, flux sweeps and the chi_0 = 0 point
//
// chi_q   = (f_r / 16 E_C^r) |g_1r mu_10,1 + g_2r mu_10,2|^2 / Delta_10
// chi_int = (f_r / 16 E_C^r) |g_1r mu_01,1 + g_2r mu_01,2|^2 / Delta_01
// with mu_ij,k = <i_q j_int| n_k |0_q 0_int>, Delta_ij = f_r - f_ij and
// f_r = sqrt(8 E_C^r E_L) anchored to the bare resonator. The formulas are
// second-order perturbation theory; they are refused (flagged) inside
// avoided-crossing windows and below a minimum detuning.

#pragma once

#include <complex>
#include <optional>

#include "djt/models.hpp"

namespace djt {

struct ChiConfig {
    double delta_min = 0.05;  // smallest usable |detuning| [GHz]
    double overlap_min = 0.5; // label ambiguity threshold (squared overlap)
    // avoided-crossing detector: flag when a required trial state splits over
    // two eigenstates with second/first squared-overlap above this ratio
    double crossing_split_max = 0.35;
};

struct ChargeMatrixElements {
    std::complex<double> mu10_1, mu10_2; // <1_q 0_int| n_k |0,0>
    std::complex<double> mu01_1, mu01_2; // <0_q 1_int| n_k |0,0>
    double f10 = 0.0;                    // qubit transition [GHz]
    double f01int = 0.0;                 // internal-mode transition [GHz]
    std::vector<StateLabel> labels;
};

struct ChiResult {
    FluxBias flux;
    double chi_q = 0.0;   // [GHz], signed
    double chi_int = 0.0; // [GHz], signed
    double chi_0 = 0.0;   // chi_q + chi_int
    double delta10 = 0.0; // f_r - f_10 [GHz]
    double delta01 = 0.0; // f_r - f_01int [GHz]
    std::complex<double> mu10_1, mu10_2, mu01_1, mu01_2;
};

// Charge matrix elements between labeled two-mode eigenstates. Throws
// FluxWindowError when a required label is ambiguous or when its trial weight
// splits across two eigenstates (avoided crossing).
inline ChargeMatrixElements charge_matrix_elements(const DeviceParams& p, FluxBias flux,
                                                   ChargeBasis basis,
                                                   const ChiConfig& cfg = {}) {
    const OperatorMatrix h = build_two_mode(p, flux, basis);
    const Eigen::Index nlev = std::min<Eigen::Index>(18, h.dim());
    const EigenSolution sol = eigensolve(h, nlev);

    const ProductLabelBasis trials(p, flux, basis);
    const std::vector<StateLabel> labels = trials.assign(sol.vectors);

    const int ground = detail::find_label(labels, 0, 0);
    const int qubit = detail::find_label(labels, 1, 0);
    const int internal = detail::find_label(labels, 0, 1);
    if (ground < 0 || qubit < 0 || internal < 0)
        throw FluxWindowError("required state labels not identified", flux.in_phi0());
    for (int idx : {ground, qubit, internal})
        if (labels[std::size_t(idx)].overlap < cfg.overlap_min)
            throw FluxWindowError("state labels ambiguous near an avoided crossing",
                                  flux.in_phi0());
    // avoided crossing: the (1,0) or (0,1) trial weight splits over two
    // eigenstates instead of concentrating on one
    const Eigen::MatrixXd weight =
        (trials.trial_vectors().adjoint() * sol.vectors).cwiseAbs2(); // trial x state
    for (std::size_t t = 0; t < trials.size(); ++t) {
        const auto [iq, jint] = trials.trial_label(t);
        if (!((iq == 1 && jint == 0) || (iq == 0 && jint == 1))) continue;
        double first = 0.0, second = 0.0;
        for (Eigen::Index st = 0; st < weight.cols(); ++st) {
            const double w = weight(Eigen::Index(t), st);
            if (w > first) {
                second = first;
                first = w;
            } else if (w > second) {
                second = w;
            }
        }
        if (second > cfg.crossing_split_max * first)
            throw FluxWindowError("avoided crossing: state weight split across levels",
                                  flux.in_phi0());
    }

    const int d = basis.dim();
    const TensorSpace ts({d, d});
    const OperatorMatrix n = charge_op(basis);
    const MatrixXc n1 = ts.embed(0, n).mat;
    const MatrixXc n2 = ts.embed(1, n).mat;

    const Eigen::VectorXcd v0 = sol.vectors.col(ground);
    const Eigen::VectorXcd vq = sol.vectors.col(qubit);
    const Eigen::VectorXcd vi = sol.vectors.col(internal);

    ChargeMatrixElements out;
    out.mu10_1 = vq.dot(n1 * v0);
    out.mu10_2 = vq.dot(n2 * v0);
    out.mu01_1 = vi.dot(n1 * v0);
    out.mu01_2 = vi.dot(n2 * v0);
    out.f10 = sol.values(qubit) - sol.values(ground);
    out.f01int = sol.values(internal) - sol.values(ground);
    out.labels = labels;
    return out;
}

inline ChiResult chi_components(const DeviceParams& p, FluxBias flux, ChargeBasis basis,
                                const ChiConfig& cfg = {}) {
    const EnergySetFull e = energies_full(p);
    const double el = resonator_inductive_energy(p.fres_bare, e.ECr);
    const double fr = std::sqrt(8.0 * e.ECr * el); // equals fres_bare by construction

    const ChargeMatrixElements mu = charge_matrix_elements(p, flux, basis, cfg);
    ChiResult r;
    r.flux = flux;
    r.delta10 = fr - mu.f10;
    r.delta01 = fr - mu.f01int;
    if (std::abs(r.delta10) < cfg.delta_min || std::abs(r.delta01) < cfg.delta_min)
        throw DispersiveBreakdownError("detuning below the dispersive guard");

    const double prefactor = fr / (16.0 * e.ECr);
    r.chi_q = prefactor * std::norm(e.g1r * mu.mu10_1 + e.g2r * mu.mu10_2) / r.delta10;
    r.chi_int = prefactor * std::norm(e.g1r * mu.mu01_1 + e.g2r * mu.mu01_2) / r.delta01;
    r.chi_0 = r.chi_q + r.chi_int;
    r.mu10_1 = mu.mu10_1;
    r.mu10_2 = mu.mu10_2;
    r.mu01_1 = mu.mu01_1;
    r.mu01_2 = mu.mu01_2;
    return r;
}

// Bisection root of chi_0(Phi_e) on [phi0_lo, phi0_hi], resolved to tol_phi0.
// Returns nullopt when chi_0 does not change sign over the usable part of the
// range; throws ConfigError when chi_0 vanishes identically (decoupled input).
inline std::optional<FluxBias> find_chi_zero(const DeviceParams& p, double phi0_lo,
                                             double phi0_hi, ChargeBasis basis,
                                             const ChiConfig& cfg = {},
                                             double tol_phi0 = 1e-4,
                                             std::size_t coarse = 16) {
    if (!(phi0_hi > phi0_lo)) throw ConfigError("empty flux range");
    if (coarse < 3) throw ConfigError("coarse scan needs at least 3 points");

    auto chi0_at = [&](double phi0) -> std::optional<double> {
        try {
            return chi_components(p, FluxBias::from_phi0(phi0), basis, cfg).chi_0;
        } catch (const NumericError&) {
            return std::nullopt; // flagged window
        }
    };

    double prev_phi0 = 0.0;
    std::optional<double> prev;
    double lo = 0.0, hi = 0.0, flo = 0.0;
    bool bracketed = false;
    double max_abs = 0.0;
    for (std::size_t i = 0; i < coarse; ++i) {
        const double phi0 = phi0_lo + (phi0_hi - phi0_lo) * double(i) / double(coarse - 1);
        const std::optional<double> val = chi0_at(phi0);
        if (val) {
            max_abs = std::max(max_abs, std::abs(*val));
            if (prev && *prev * *val < 0.0) {
                lo = prev_phi0;
                hi = phi0;
                flo = *prev;
                bracketed = true;
                break;
            }
            prev = val;
            prev_phi0 = phi0;
        } else {
            prev.reset();
        }
    }
    if (max_abs < 1e-12)
        throw ConfigError("dispersive shift is identically zero over the range");
    if (!bracketed) return std::nullopt;

    while (hi - lo > tol_phi0) {
        const double mid = 0.5 * (lo + hi);
        const std::optional<double> val = chi0_at(mid);
        if (!val)
            throw NumericError("chi_0 root search entered a flagged flux window");
        if (flo * *val <= 0.0) {
            hi = mid;
        } else {
            lo = mid;
            flo = *val;
        }
    }
    return FluxBias::from_phi0(0.5 * (lo + hi));
}

// Second-order dressed resonator frequency with the qubit modes in their
// ground state; used for f_res residuals without the triple-mode solve.
inline double dressed_resonator_frequency(const DeviceParams& p, FluxBias flux,
                                          ChargeBasis basis, Eigen::Index sum_levels = 14) {
    const EnergySetFull e = energies_full(p);
    const double el = resonator_inductive_energy(p.fres_bare, e.ECr);
    const double fr = std::sqrt(8.0 * e.ECr * el);
    const double nzp2 = fr / (16.0 * e.ECr);

    const OperatorMatrix h = build_two_mode(p, flux, basis);
    const EigenSolution sol = eigensolve(h, std::min(sum_levels, h.dim()));

    const int d = basis.dim();
    const TensorSpace ts({d, d});
    const OperatorMatrix n = charge_op(basis);
    const MatrixXc coupling = e.g1r * ts.embed(0, n).mat + e.g2r * ts.embed(1, n).mat;

    const Eigen::VectorXcd g0 = sol.vectors.col(0);
    double shift = 0.0;
    for (Eigen::Index m = 1; m < sol.values.size(); ++m) {
        const double fm0 = sol.values(m) - sol.values(0);
        const double denom = fr * fr - fm0 * fm0;
        if (std::abs(denom) < 1e-6)
            throw DispersiveBreakdownError("resonator resonant with a qubit transition");
        const double g2 = std::norm(sol.vectors.col(m).dot(coupling * g0));
        shift += g2 * 2.0 * fm0 / denom;
    }
    return fr + nzp2 * shift;
}

} // namespace djt
