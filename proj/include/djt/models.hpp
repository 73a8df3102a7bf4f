// models.hpp — spectral models of the double-junction transmon
//
// Four model families share one spectrum interface:
//   TwoMode               exact diagonalization in the (n1, n2) charge basis
//   TwoModeWithResonator  validation-only triple-mode product solve
//   BornOppenheimer       1D qubit mode with the internal mode integrated out,
//                         including its zero-point correction
//   Reduced               1D qubit mode with only the classically minimized
//                         potential (no zero-point term)
//   HarmonicTransmon      phenomenological 4 E_C n^2 - sum_k U_k cos(k phi)
//
// Two-mode eigenstates are labeled (i_q, j_int) by maximum squared overlap
// with product trial states built from separately solved single-mode
// Hamiltonians in the (phi_q, phi_int) coordinates.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "djt/circuit.hpp"
#include "djt/operators.hpp"

namespace djt {

enum class ModelKind { TwoMode, TwoModeWithResonator, BornOppenheimer, Reduced, HarmonicTransmon };

inline std::string model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::TwoMode: return "two-mode";
        case ModelKind::TwoModeWithResonator: return "two-mode-resonator";
        case ModelKind::BornOppenheimer: return "born-oppenheimer";
        case ModelKind::Reduced: return "reduced";
        case ModelKind::HarmonicTransmon: return "harmonic-transmon";
    }
    throw ConfigError("unknown model kind");
}

inline ModelKind parse_model_kind(const std::string& name) {
    if (name == "two-mode") return ModelKind::TwoMode;
    if (name == "two-mode-resonator") return ModelKind::TwoModeWithResonator;
    if (name == "born-oppenheimer" || name == "bo") return ModelKind::BornOppenheimer;
    if (name == "reduced") return ModelKind::Reduced;
    if (name == "harmonic-transmon") return ModelKind::HarmonicTransmon;
    throw ConfigError("unknown model '" + name +
                      "' (expected two-mode, two-mode-resonator, born-oppenheimer, "
                      "reduced or harmonic-transmon)");
}

// Truncation overrides; zero fields fall back to the model defaults.
// The triple-mode product space is the expensive validation path, hence its
// reduced default charge cutoff.
struct Truncation {
    int nc = 0;   // charge cutoff per junction mode
    int nf = 0;   // resonator Fock cutoff
    int kpot = 0; // cosine harmonics kept in 1D potentials

    int charge_cutoff(ModelKind kind) const {
        if (nc > 0) return nc;
        return kind == ModelKind::TwoModeWithResonator ? 10 : 15;
    }
    int fock_cutoff() const { return nf > 0 ? nf : 8; }
    int potential_harmonics() const { return kpot > 0 ? kpot : 20; }
};

struct StateLabel {
    int iq = -1;
    int jint = -1;
    int nr = 0;
    double overlap = 0.0; // squared overlap with the assigned trial state
    bool ambiguous = true;
};

struct SpectrumResult {
    FluxBias flux;
    ModelKind kind = ModelKind::TwoMode;
    std::vector<double> levels;              // ground-referenced, ascending
    std::array<double, 4> transitions{};     // f01..f04 [GHz]
    std::optional<double> f_int;             // internal-mode first excitation
    std::optional<double> f_res_dressed;     // dressed resonator (triple-mode only)
    double anharmonicity = 0.0;              // f12 - f01 [GHz]
    std::vector<StateLabel> labels;          // two-mode kinds only

    double transition_over_k(int k) const {
        if (k < 1 || k > 4) throw ConfigError("transition index must be 1..4");
        return transitions[std::size_t(k - 1)] / double(k);
    }
};

// -E_JSigma sqrt(1 - lambda sin^2(phi_q/2)): classically minimized potential
// of the series junction pair.
inline double reduced_potential(double phi_q, const SquidParams& s) {
    const double half = std::sin(0.5 * phi_q);
    const double u = std::max(1.0 - s.lambda * half * half, 0.0);
    return -s.EJSigma * std::sqrt(u);
}

// Reduced potential plus the zero-point energy of the fast internal mode,
// +sqrt(2 E_C^int E_JSigma) (1 - lambda sin^2(phi_q/2))^(1/4), i.e. half the
// local internal-mode frequency. The positive sign is required for the BO
// spectrum to track the two-mode spectrum at low flux.
inline double bo_potential(double phi_q, const SquidParams& s, double ecint) {
    const double half = std::sin(0.5 * phi_q);
    const double u = std::max(1.0 - s.lambda * half * half, 0.0);
    return -s.EJSigma * std::sqrt(u) +
           std::sqrt(2.0 * ecint * s.EJSigma) * std::pow(u, 0.25);
}

// Uniform-grid cosine series of a 2pi-periodic potential:
// out[0] is the mean, out[k] = (1/pi) int_0^{2pi} V(phi) cos(k phi) dphi.
inline std::vector<double> cosine_series(const std::function<double(double)>& v, int kmax,
                                         std::size_t nodes = 2048) {
    if (kmax < 0) throw ConfigError("cosine series order must be non-negative");
    if (nodes < std::size_t(2 * (kmax + 1)))
        throw ConfigError("too few quadrature nodes for requested harmonics");
    std::vector<double> samples(nodes);
    for (std::size_t j = 0; j < nodes; ++j)
        samples[j] = v(2.0 * constants::pi * double(j) / double(nodes));
    std::vector<double> out(std::size_t(kmax) + 1, 0.0);
    for (std::size_t j = 0; j < nodes; ++j) out[0] += samples[j];
    out[0] /= double(nodes);
    for (int k = 1; k <= kmax; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < nodes; ++j)
            acc += samples[j] * std::cos(k * 2.0 * constants::pi * double(j) / double(nodes));
        out[std::size_t(k)] = 2.0 * acc / double(nodes);
    }
    return out;
}

// H = 4 ec n^2 + coeffs[0] + sum_k coeffs[k] cos(k phi) in the charge basis.
inline OperatorMatrix build_1d_hamiltonian(double ec, const std::vector<double>& coeffs,
                                           ChargeBasis basis) {
    const int d = basis.dim();
    MatrixXc h = MatrixXc::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        const double n = double(i - basis.cutoff);
        h(i, i) = 4.0 * ec * n * n + (coeffs.empty() ? 0.0 : coeffs[0]);
    }
    for (int k = 1; k < int(coeffs.size()); ++k) {
        if (coeffs[std::size_t(k)] == 0.0) continue;
        const OperatorMatrix ck = cos_k_phi_op(basis, k);
        h += coeffs[std::size_t(k)] * ck.mat;
    }
    return {std::move(h), true};
}

struct HarmonicSpec {
    double EC = 0.0;       // [GHz]
    std::vector<double> U; // U[k-1] multiplies cos(k phi) [GHz]

    void validate() const {
        if (!(EC > 0.0)) throw ConfigError("harmonic model charging energy must be positive");
        if (U.empty() || U[0] == 0.0)
            throw ConfigError("harmonic model requires a non-zero fundamental U1");
    }
};

inline OperatorMatrix build_harmonic_transmon(const HarmonicSpec& spec, ChargeBasis basis) {
    spec.validate();
    std::vector<double> coeffs(spec.U.size() + 1, 0.0);
    for (std::size_t k = 0; k < spec.U.size(); ++k) coeffs[k + 1] = -spec.U[k];
    return build_1d_hamiltonian(spec.EC, coeffs, basis);
}

// Assembles the two-junction charge Hamiltonian from explicit energies, so
// tests can zero couplings by hand.
inline OperatorMatrix build_two_mode_from_energies(const EnergySetFull& e, double ej1, double ej2,
                                                   ChargeBasis basis) {
    const int d = basis.dim();
    const TensorSpace ts({d, d});
    const OperatorMatrix c1 = cos_k_phi_op(basis, 1);

    MatrixXc h = MatrixXc::Zero(d * d, d * d);
    // all charge terms are diagonal in this basis
    for (int a = 0; a < d; ++a) {
        const double n1 = double(a - basis.cutoff);
        for (int b = 0; b < d; ++b) {
            const double n2 = double(b - basis.cutoff);
            h(a * d + b, a * d + b) =
                4.0 * e.EC1 * n1 * n1 + 4.0 * e.EC2 * n2 * n2 + e.g12 * n1 * n2;
        }
    }
    h -= ej1 * ts.embed(0, c1).mat;
    h -= ej2 * ts.embed(1, c1).mat;
    return {std::move(h), true};
}

inline OperatorMatrix build_two_mode(const DeviceParams& p, FluxBias flux, ChargeBasis basis) {
    const EnergySetFull e = energies_full(p);
    const double ej2 = squid_effective_ej(p.EJA, p.EJB, flux);
    return build_two_mode_from_energies(e, p.EJ1, ej2, basis);
}

// 1D qubit Hamiltonian with the internal mode integrated out, potential
// expanded in cos(k phi_q) up to kpot harmonics.
inline OperatorMatrix build_bo(const DeviceParams& p, FluxBias flux, Truncation trunc = {}) {
    const EnergySetBO e = energies_bo(p);
    const SquidParams squid = squid_at_flux(p, flux);
    const auto coeffs = cosine_series(
        [&](double phi) { return bo_potential(phi, squid, e.ECint); },
        trunc.potential_harmonics());
    return build_1d_hamiltonian(e.ECq, coeffs,
                                ChargeBasis{trunc.charge_cutoff(ModelKind::BornOppenheimer)});
}

// Same, with only the classically minimized potential (no zero-point term).
inline OperatorMatrix build_reduced(const DeviceParams& p, FluxBias flux, Truncation trunc = {}) {
    const EnergySetBO e = energies_bo(p);
    const SquidParams squid = squid_at_flux(p, flux);
    const auto coeffs = cosine_series(
        [&](double phi) { return reduced_potential(phi, squid); }, trunc.potential_harmonics());
    return build_1d_hamiltonian(e.ECq, coeffs,
                                ChargeBasis{trunc.charge_cutoff(ModelKind::Reduced)});
}

// Triple-mode product Hamiltonian. Internally the resonator charge is gauged
// real (Fock phases i^m), which leaves the spectrum and the |overlap| labels
// unchanged but allows the real-symmetric eigensolver path.
inline OperatorMatrix build_two_mode_with_resonator(const DeviceParams& p, FluxBias flux,
                                                    ChargeBasis basis, FockBasis fock) {
    const EnergySetFull e = energies_full(p);
    const double ej2 = squid_effective_ej(p.EJA, p.EJB, flux);
    const double el = resonator_inductive_energy(p.fres_bare, e.ECr);

    const int d = basis.dim();
    const int df = fock.dim();
    const double n_zp = std::pow(el / (32.0 * e.ECr), 0.25);
    const double phi_zp = std::pow(2.0 * e.ECr / el, 0.25);

    // real-gauged quadratures
    Eigen::MatrixXd nr = Eigen::MatrixXd::Zero(df, df);
    Eigen::MatrixXd phir_sq = Eigen::MatrixXd::Zero(df, df);
    for (int m = 0; m + 1 < df; ++m) {
        nr(m, m + 1) = n_zp * std::sqrt(double(m + 1));
        nr(m + 1, m) = nr(m, m + 1);
    }
    // phi_r = phi_zp (a + adag) in the twisted gauge is antisymmetric; only
    // phi_r^2 enters, computed here directly.
    {
        Eigen::MatrixXd am = Eigen::MatrixXd::Zero(df, df);
        for (int m = 0; m + 1 < df; ++m) am(m, m + 1) = std::sqrt(double(m + 1));
        const Eigen::MatrixXd x = am - am.transpose();
        phir_sq = -phi_zp * phi_zp * (x * x);
    }

    const Eigen::MatrixXd cos1 = cos_k_phi_op(basis, 1).mat.real();
    const Eigen::Index dim = Eigen::Index(d) * d * df;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);

    auto idx = [&](int a, int b, int m) { return (Eigen::Index(a) * d + b) * df + m; };

    // diagonal charge terms of the junction modes
    for (int a = 0; a < d; ++a) {
        const double n1 = double(a - basis.cutoff);
        for (int b = 0; b < d; ++b) {
            const double n2 = double(b - basis.cutoff);
            const double diag = 4.0 * e.EC1 * n1 * n1 + 4.0 * e.EC2 * n2 * n2 + e.g12 * n1 * n2;
            for (int m = 0; m < df; ++m) h(idx(a, b, m), idx(a, b, m)) += diag;
        }
    }
    // resonator block and charge couplings
    const Eigen::MatrixXd res_block = 4.0 * e.ECr * (nr * nr) + 0.5 * el * phir_sq;
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            const double n1 = double(a - basis.cutoff);
            const double n2 = double(b - basis.cutoff);
            h.block(idx(a, b, 0), idx(a, b, 0), df, df) +=
                res_block + (e.g1r * n1 + e.g2r * n2) * nr;
        }
    // Josephson terms
    for (int a = 0; a < d; ++a)
        for (int ap = 0; ap < d; ++ap) {
            if (cos1(a, ap) == 0.0) continue;
            for (int b = 0; b < d; ++b)
                for (int m = 0; m < df; ++m)
                    h(idx(a, b, m), idx(ap, b, m)) -= p.EJ1 * cos1(a, ap);
        }
    for (int b = 0; b < d; ++b)
        for (int bp = 0; bp < d; ++bp) {
            if (cos1(b, bp) == 0.0) continue;
            for (int a = 0; a < d; ++a)
                for (int m = 0; m < df; ++m)
                    h(idx(a, b, m), idx(a, bp, m)) -= ej2 * cos1(b, bp);
        }
    return {h.cast<Complex>(), true};
}

namespace detail {

// 1D mode solved in its own charge basis; eigenvectors kept as charge-space
// Fourier coefficients so the wavefunction can be evaluated at any phase.
struct ModeSolution {
    Eigen::VectorXd energies;
    Eigen::MatrixXcd vectors; // charge components, column per state

    Complex wavefunction(int state, double phi, int cutoff) const {
        const Complex z = std::polar(1.0, phi);
        Complex w = std::polar(1.0, -double(cutoff) * phi);
        Complex acc = 0.0;
        for (Eigen::Index n = 0; n < vectors.rows(); ++n) {
            acc += vectors(n, state) * w;
            w *= z;
        }
        return acc;
    }
};

inline ModeSolution solve_mode(double ec, const std::vector<double>& coeffs, ChargeBasis basis,
                               int nstates) {
    const OperatorMatrix h = build_1d_hamiltonian(ec, coeffs, basis);
    const EigenSolution sol = eigensolve(h, std::min<Eigen::Index>(nstates, h.dim()));
    return {sol.values, sol.vectors};
}

} // namespace detail

// Product trial states |i_q> x |j_int> expressed in the (n1, n2) charge basis.
//
// The qubit mode is solved with the BO potential and E_C^q, the internal mode
// with a cosine potential of depth E_JSigma(phi_e) and E_C^int. Trials are
// formed on a phase grid via phi_q = phi_1 + phi_2,
// phi_int = (CJ2 phi_2 - CJ1 phi_1)/(CJ1 + CJ2), then projected back onto
// charge states. The coordinate change is not torus-periodic, but both mode
// functions are exponentially localized, so the seam mismatch is negligible
// for labeling purposes.
class ProductLabelBasis {
public:
    ProductLabelBasis(const DeviceParams& p, FluxBias flux, ChargeBasis basis, int max_iq = 6,
                      int max_jint = 2, int kpot = 20) {
        const EnergySetBO ebo = energies_bo(p);
        const SquidParams squid = squid_at_flux(p, flux);

        const int nq = max_iq + 1;
        const int nj = max_jint + 1;
        // trial quality is insensitive to the potential tail; clamp to what
        // the charge basis can represent
        const int kpot_used = std::min(kpot, 2 * basis.cutoff);
        const auto bo_coeffs = cosine_series(
            [&](double phi) { return bo_potential(phi, squid, ebo.ECint); }, kpot_used);
        const detail::ModeSolution qubit = detail::solve_mode(ebo.ECq, bo_coeffs, basis, nq);
        const detail::ModeSolution internal =
            detail::solve_mode(ebo.ECint, {0.0, -squid.EJSigma}, basis, nj);

        const int d = basis.dim();
        const int grid = std::max(128, 3 * d);
        const double cj1 = p.CJ1;
        const double cj2 = p.CJ2();
        const double s = cj1 + cj2;

        std::vector<double> phi(grid);
        for (int g = 0; g < grid; ++g)
            phi[std::size_t(g)] = -constants::pi + 2.0 * constants::pi * double(g) / double(grid);

        // trial values on the grid, one (i_q, j_int) pair at a time
        Eigen::MatrixXcd fourier(grid, d); // e^{i n phi_g}
        for (int g = 0; g < grid; ++g)
            for (int n = 0; n < d; ++n)
                fourier(g, n) = std::polar(1.0, double(n - basis.cutoff) * phi[std::size_t(g)]);

        trials_.resize(Eigen::Index(d) * d, Eigen::Index(nq) * nj);
        labels_.reserve(std::size_t(nq) * nj);

        // internal-mode factor on the (g1, g2) grid, shared across all iq
        std::vector<Eigen::MatrixXcd> chi_grid(std::size_t(nj),
                                               Eigen::MatrixXcd(grid, grid));
        for (int g1 = 0; g1 < grid; ++g1)
            for (int g2 = 0; g2 < grid; ++g2) {
                const double phi_int =
                    (cj2 * phi[std::size_t(g2)] - cj1 * phi[std::size_t(g1)]) / s;
                for (int jint = 0; jint < nj; ++jint)
                    chi_grid[std::size_t(jint)](g1, g2) =
                        internal.wavefunction(jint, phi_int, basis.cutoff);
            }

        Eigen::MatrixXcd tgrid(grid, grid);
        for (int iq = 0; iq < nq; ++iq) {
            // qubit factor depends on (g1 + g2) only
            std::vector<Complex> psi_sum(std::size_t(2 * grid));
            for (int t = 0; t < 2 * grid; ++t) {
                const double phi_q = -2.0 * constants::pi +
                                     2.0 * constants::pi * double(t) / double(grid);
                psi_sum[std::size_t(t)] = qubit.wavefunction(iq, phi_q, basis.cutoff);
            }
            for (int jint = 0; jint < nj; ++jint) {
                for (int g1 = 0; g1 < grid; ++g1)
                    for (int g2 = 0; g2 < grid; ++g2)
                        tgrid(g1, g2) =
                            psi_sum[std::size_t(g1 + g2)] * chi_grid[std::size_t(jint)](g1, g2);
                // project onto charge states and normalize
                const Eigen::MatrixXcd coeff =
                    (fourier.adjoint() * tgrid * fourier.conjugate()) /
                    (double(grid) * double(grid));
                Eigen::VectorXcd flat(Eigen::Index(d) * d);
                for (int a = 0; a < d; ++a)
                    for (int b = 0; b < d; ++b) flat(Eigen::Index(a) * d + b) = coeff(a, b);
                const double norm = flat.norm();
                if (norm < 0.5)
                    throw NumericError("product trial state lost in charge truncation");
                trials_.col(labels_.size()) = flat / norm;
                labels_.emplace_back(iq, jint);
            }
        }
    }

    std::size_t size() const { return labels_.size(); }
    std::pair<int, int> trial_label(std::size_t t) const { return labels_.at(t); }
    const Eigen::MatrixXcd& trial_vectors() const { return trials_; }

    // Greedy bijective assignment by descending squared overlap.
    std::vector<StateLabel> assign(const Eigen::MatrixXcd& eigvecs,
                                   double ambiguity_threshold = 0.5) const {
        if (eigvecs.rows() != trials_.rows())
            throw ConfigError("eigenvector dimension does not match label basis");
        const Eigen::Index nstates = eigvecs.cols();
        const Eigen::MatrixXd overlap =
            (trials_.adjoint() * eigvecs).cwiseAbs2().transpose(); // state x trial

        struct Cand {
            double o;
            Eigen::Index state;
            std::size_t trial;
        };
        std::vector<Cand> cands;
        cands.reserve(std::size_t(nstates) * labels_.size());
        for (Eigen::Index st = 0; st < nstates; ++st)
            for (std::size_t t = 0; t < labels_.size(); ++t)
                cands.push_back({overlap(st, Eigen::Index(t)), st, t});
        std::sort(cands.begin(), cands.end(),
                  [](const Cand& a, const Cand& b) { return a.o > b.o; });

        std::vector<StateLabel> out(static_cast<std::size_t>(nstates));
        std::vector<bool> state_used(std::size_t(nstates), false);
        std::vector<bool> trial_used(labels_.size(), false);
        for (const Cand& c : cands) {
            if (state_used[std::size_t(c.state)] || trial_used[c.trial]) continue;
            state_used[std::size_t(c.state)] = true;
            trial_used[c.trial] = true;
            StateLabel& l = out[std::size_t(c.state)];
            l.iq = labels_[c.trial].first;
            l.jint = labels_[c.trial].second;
            l.overlap = c.o;
            l.ambiguous = c.o < ambiguity_threshold;
        }
        return out;
    }

private:
    Eigen::MatrixXcd trials_;
    std::vector<std::pair<int, int>> labels_;
};

inline std::vector<StateLabel> label_states(const Eigen::MatrixXcd& eigvecs,
                                            const DeviceParams& p, FluxBias flux,
                                            ChargeBasis basis) {
    return ProductLabelBasis(p, flux, basis).assign(eigvecs);
}

namespace detail {

inline int find_label(const std::vector<StateLabel>& labels, int iq, int jint, int nr = 0) {
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i].iq == iq && labels[i].jint == jint && labels[i].nr == nr) return int(i);
    return -1;
}

inline SpectrumResult spectrum_from_1d(const Eigen::VectorXd& values, FluxBias flux,
                                       ModelKind kind) {
    SpectrumResult r;
    r.flux = flux;
    r.kind = kind;
    r.levels.resize(std::size_t(values.size()));
    for (Eigen::Index i = 0; i < values.size(); ++i)
        r.levels[std::size_t(i)] = values(i) - values(0);
    for (int k = 1; k <= 4; ++k) {
        if (k >= values.size()) throw NumericError("not enough levels for transitions");
        r.transitions[std::size_t(k - 1)] = r.levels[std::size_t(k)];
    }
    r.anharmonicity = r.levels[2] - 2.0 * r.levels[1];
    return r;
}

} // namespace detail

inline SpectrumResult harmonic_transmon_spectrum(const HarmonicSpec& spec, ChargeBasis basis) {
    const OperatorMatrix h = build_harmonic_transmon(spec, basis);
    const EigenSolution sol = eigensolve(h, std::min<Eigen::Index>(8, h.dim()));
    return detail::spectrum_from_1d(sol.values, FluxBias{0.0}, ModelKind::HarmonicTransmon);
}

// Spectrum of the requested model at one flux point.
inline SpectrumResult spectrum(ModelKind kind, const DeviceParams& p, FluxBias flux,
                               Truncation trunc = {}) {
    p.validate();
    const ChargeBasis basis{trunc.charge_cutoff(kind)};

    if (kind == ModelKind::BornOppenheimer || kind == ModelKind::Reduced) {
        const int kpot = trunc.potential_harmonics();
        auto solve_levels = [&](int kmax) {
            Truncation t = trunc;
            t.kpot = kmax;
            const OperatorMatrix h = kind == ModelKind::BornOppenheimer
                                         ? build_bo(p, flux, t)
                                         : build_reduced(p, flux, t);
            return eigensolve(h, std::min<Eigen::Index>(8, h.dim())).values;
        };
        const Eigen::VectorXd lo = solve_levels(kpot);
        const Eigen::VectorXd hi = solve_levels(kpot + 5);
        for (Eigen::Index i = 0; i < lo.size(); ++i)
            if (std::abs((lo(i) - lo(0)) - (hi(i) - hi(0))) > 1e-6)
                throw ConfigError("1D potential Fourier truncation not converged; raise kpot");
        return detail::spectrum_from_1d(hi, flux, kind);
    }

    if (kind == ModelKind::TwoMode) {
        const OperatorMatrix h = build_two_mode(p, flux, basis);
        const Eigen::Index nlev = std::min<Eigen::Index>(18, h.dim());
        const EigenSolution sol = eigensolve(h, nlev);
        const std::vector<StateLabel> labels = label_states(sol.vectors, p, flux, basis);

        SpectrumResult r;
        r.flux = flux;
        r.kind = kind;
        r.labels = labels;
        r.levels.resize(std::size_t(nlev));
        for (Eigen::Index i = 0; i < nlev; ++i)
            r.levels[std::size_t(i)] = sol.values(i) - sol.values(0);
        const int ground = detail::find_label(labels, 0, 0);
        if (ground < 0) throw NumericError("ground state (0,0) not identified");
        for (int k = 1; k <= 4; ++k) {
            const int li = detail::find_label(labels, k, 0);
            if (li < 0)
                throw NumericError("qubit state (" + std::to_string(k) +
                                   ",0) not identified; raise the level count");
            r.transitions[std::size_t(k - 1)] =
                r.levels[std::size_t(li)] - r.levels[std::size_t(ground)];
        }
        const int internal = detail::find_label(labels, 0, 1);
        if (internal >= 0)
            r.f_int = r.levels[std::size_t(internal)] - r.levels[std::size_t(ground)];
        r.anharmonicity = r.transitions[1] - 2.0 * r.transitions[0];
        return r;
    }

    if (kind == ModelKind::TwoModeWithResonator) {
        const FockBasis fock{trunc.fock_cutoff()};
        const OperatorMatrix h = build_two_mode_with_resonator(p, flux, basis, fock);
        const Eigen::Index nlev = std::min<Eigen::Index>(24, h.dim());
        const EigenSolution sol = eigensolve(h, nlev);

        // label against (two-mode trial) x (Fock state); the trial for
        // (iq, jint, m) is trial_{iq,jint} ⊗ e_m, so the overlap amplitudes
        // are trials^H * reshape(v).
        const ProductLabelBasis product(p, flux, basis);
        const Eigen::Index d2 = Eigen::Index(basis.dim()) * basis.dim();
        const int df = fock.dim();

        struct Cand {
            double o;
            Eigen::Index state;
            std::size_t trial;
            int m;
        };
        std::vector<Cand> cands;
        for (Eigen::Index st = 0; st < nlev; ++st) {
            Eigen::MatrixXcd reshaped(d2, df);
            for (Eigen::Index i = 0; i < d2; ++i)
                for (int m = 0; m < df; ++m) reshaped(i, m) = sol.vectors(i * df + m, st);
            const Eigen::MatrixXd o = (product.trial_vectors().adjoint() * reshaped).cwiseAbs2();
            for (std::size_t t = 0; t < product.size(); ++t)
                for (int m = 0; m < df; ++m) cands.push_back({o(Eigen::Index(t), m), st, t, m});
        }
        std::sort(cands.begin(), cands.end(),
                  [](const Cand& a, const Cand& b) { return a.o > b.o; });

        std::vector<StateLabel> labels(static_cast<std::size_t>(nlev));
        std::vector<bool> state_used(std::size_t(nlev), false);
        std::vector<bool> trial_used(product.size() * std::size_t(df), false);
        for (const Cand& c : cands) {
            const std::size_t slot = c.trial * std::size_t(df) + std::size_t(c.m);
            if (state_used[std::size_t(c.state)] || trial_used[slot]) continue;
            state_used[std::size_t(c.state)] = true;
            trial_used[slot] = true;
            StateLabel& l = labels[std::size_t(c.state)];
            l.iq = product.trial_label(c.trial).first;
            l.jint = product.trial_label(c.trial).second;
            l.nr = c.m;
            l.overlap = c.o;
            l.ambiguous = c.o < 0.5;
        }

        SpectrumResult r;
        r.flux = flux;
        r.kind = kind;
        r.labels = labels;
        r.levels.resize(std::size_t(nlev));
        for (Eigen::Index i = 0; i < nlev; ++i)
            r.levels[std::size_t(i)] = sol.values(i) - sol.values(0);
        const int ground = detail::find_label(labels, 0, 0, 0);
        if (ground < 0) throw NumericError("ground state (0,0,0) not identified");
        const double e0 = r.levels[std::size_t(ground)];
        for (int k = 1; k <= 4; ++k) {
            const int li = detail::find_label(labels, k, 0, 0);
            if (li < 0)
                throw NumericError("qubit state (" + std::to_string(k) +
                                   ",0,0) not identified; raise the level count");
            r.transitions[std::size_t(k - 1)] = r.levels[std::size_t(li)] - e0;
        }
        const int internal = detail::find_label(labels, 0, 1, 0);
        if (internal >= 0) r.f_int = r.levels[std::size_t(internal)] - e0;
        const int photon = detail::find_label(labels, 0, 0, 1);
        if (photon >= 0) r.f_res_dressed = r.levels[std::size_t(photon)] - e0;
        r.anharmonicity = r.transitions[1] - 2.0 * r.transitions[0];
        return r;
    }

    throw ConfigError("spectrum: use harmonic_transmon_spectrum for the harmonic model");
}

} // namespace djt
