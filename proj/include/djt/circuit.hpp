// circuit.hpp — capacitance matrices and closed-form circuit energies
//
// Two phase bases are used:
//   junction basis  (phi_1, phi_2, phi_r): phases across the single junction,
//                   the SQUID and the resonator
//   BO basis        (phi_q, phi_int, phi_r): collective qubit mode
//                   phi_q = phi_1 + phi_2 and fast internal mode
//                   phi_int = (CJ2*phi_2 - CJ1*phi_1)/(CJ1 + CJ2)
//
// Charging energies and charge-charge couplings follow from the inverse
// capacitance matrix: E_C = (e^2/2) [C^-1]_ii, g = 4 e^2 [C^-1]_ij. The
// matrix-inverse route is authoritative. The closed-form route reproduces a
// set of printed expressions whose E_C1/E_C2 numerators and whose BO-basis
// C'+C'' denominators are known to disagree with the matrix inverse (see
// energies_discrepancy); it exists for cross-checking, not for production use.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "djt/constants.hpp"
#include "djt/device.hpp"
#include "djt/errors.hpp"

namespace djt {

using Matrix3 = Eigen::Matrix3d;

// Charging energies and couplings in the junction basis [GHz].
struct EnergySetFull {
    double EC1 = 0.0;
    double EC2 = 0.0;
    double ECr = 0.0;
    double g12 = 0.0; // negative by construction
    double g1r = 0.0;
    double g2r = 0.0;
};

// Charging energies and coupling in the BO basis [GHz].
struct EnergySetBO {
    double ECq = 0.0;
    double ECint = 0.0;
    double ECr = 0.0;
    double g = 0.0;
};

// Flux-dependent effective SQUID Josephson energy and series-combination
// parameters of the double junction.
struct SquidParams {
    double EJ2 = 0.0;     // effective SQUID Josephson energy at this flux [GHz]
    double lambda = 0.0;  // junction matching parameter, in [0, 1]
    double EJSigma = 0.0; // EJ1 + EJ2 [GHz]
};

enum class EnergyRoute { MatrixInverse, ClosedForm };

inline double island_charging_energy(double c_fF) {
    if (!(c_fF > 0.0)) throw ConfigError("island capacitance must be positive");
    return constants::charging_energy_1fF_GHz / c_fF;
}

inline Matrix3 capacitance_matrix_junction_basis(const DeviceParams& p) {
    p.validate();
    Matrix3 c;
    c << p.C + p.CJ1 + p.Cg, p.C + p.Cg, -p.Cg,
         p.C + p.Cg, p.C + p.CJ2() + p.Cg, -p.Cg,
         -p.Cg, -p.Cg, p.Cr + p.Cg;
    return c;
}

inline Matrix3 capacitance_matrix_bo_basis(const DeviceParams& p) {
    p.validate();
    const double cj_series = p.CJ1 * p.CJ2() / (p.CJ1 + p.CJ2());
    Matrix3 c;
    c << p.C + cj_series + p.Cg, 0.0, -p.Cg,
         0.0, p.CJ1 + p.CJ2(), 0.0,
         -p.Cg, 0.0, p.Cr + p.Cg;
    return c;
}

// Linear map sending BO-basis phases to junction-basis phases,
// (phi_q, phi_int, phi_r) -> (phi_1, phi_2, phi_r). The two capacitance
// matrices are congruent under it: M^T C_junction M = C_bo.
inline Matrix3 bo_to_junction_phase_map(const DeviceParams& p) {
    const double s = p.CJ1 + p.CJ2();
    Matrix3 m;
    m << p.CJ2() / s, -1.0, 0.0,
         p.CJ1 / s, 1.0, 0.0,
         0.0, 0.0, 1.0;
    return m;
}

namespace detail {

inline Matrix3 inverse_capacitance(const Matrix3& c) {
    Eigen::FullPivLU<Matrix3> lu(c);
    if (!lu.isInvertible()) throw NumericError("capacitance matrix is singular");
    return lu.inverse();
}

// C' and C'' shorthands of the closed forms.
inline double c_prime(const DeviceParams& p) {
    return p.C + p.Cg * p.Cr / (p.Cg + p.Cr);
}
inline double c_dprime(const DeviceParams& p) {
    return p.C + p.CJ1 * p.CJ2() / (p.CJ1 + p.CJ2());
}

} // namespace detail

inline EnergySetFull energies_full(const DeviceParams& p,
                                   EnergyRoute route = EnergyRoute::MatrixInverse) {
    p.validate();
    const double k = constants::charging_energy_1fF_GHz; // e^2/2 in GHz*fF
    EnergySetFull e;
    if (route == EnergyRoute::MatrixInverse) {
        const Matrix3 inv = detail::inverse_capacitance(capacitance_matrix_junction_basis(p));
        e.EC1 = k * inv(0, 0);
        e.EC2 = k * inv(1, 1);
        e.ECr = k * inv(2, 2);
        e.g12 = 8.0 * k * inv(0, 1);
        e.g1r = 8.0 * k * inv(0, 2);
        e.g2r = 8.0 * k * inv(1, 2);
    } else {
        const double cp = detail::c_prime(p);
        const double cpp = detail::c_dprime(p);
        const double den = cp * (p.CJ1 + p.CJ2()) + p.CJ1 * p.CJ2();
        e.EC1 = k * (p.C + p.CJ2()) / den;
        e.EC2 = k * (p.C + p.CJ1) / den;
        e.ECr = k * (cpp + p.Cg) / (cpp * (p.Cg + p.Cr) + p.Cg * p.Cr);
        e.g12 = -8.0 * k * cp / den;
        e.g1r = 8.0 * k * p.CJ2() * p.Cg / ((p.Cg + p.Cr) * den);
        e.g2r = 8.0 * k * p.CJ1 * p.Cg / ((p.Cg + p.Cr) * den);
    }
    return e;
}

inline EnergySetBO energies_bo(const DeviceParams& p,
                               EnergyRoute route = EnergyRoute::MatrixInverse) {
    p.validate();
    const double k = constants::charging_energy_1fF_GHz;
    EnergySetBO e;
    if (route == EnergyRoute::MatrixInverse) {
        const Matrix3 inv = detail::inverse_capacitance(capacitance_matrix_bo_basis(p));
        e.ECq = k * inv(0, 0);
        e.ECint = k * inv(1, 1);
        e.ECr = k * inv(2, 2);
        e.g = 8.0 * k * inv(0, 2);
    } else {
        const double cp = detail::c_prime(p);
        const double cpp = detail::c_dprime(p);
        e.ECq = k / (cp + cpp);
        e.ECint = k / (p.CJ1 + p.CJ2());
        e.ECr = k * (cpp + p.Cg) / ((cp + cpp) * (p.Cg + p.Cr));
        e.g = 8.0 * k * p.Cg / ((cp + cpp) * (p.Cg + p.Cr));
    }
    return e;
}

// One energy component where the closed-form route deviates from the
// matrix-inverse route beyond the tolerance.
struct EnergyDeviation {
    std::string component;
    double closed_form = 0.0;
    double matrix_inverse = 0.0;
    double relative = 0.0;
};

// Compares both routes component by component. With exact arithmetic the
// deviating set is {EC1, EC2, ECq, ECr_bo, g_bo} whenever Cg > 0; the
// remaining components agree identically.
inline std::vector<EnergyDeviation> energies_discrepancy(const DeviceParams& p,
                                                         double tol = 1e-9) {
    const EnergySetFull fi = energies_full(p, EnergyRoute::MatrixInverse);
    const EnergySetFull ff = energies_full(p, EnergyRoute::ClosedForm);
    const EnergySetBO bi = energies_bo(p, EnergyRoute::MatrixInverse);
    const EnergySetBO bf = energies_bo(p, EnergyRoute::ClosedForm);

    std::vector<EnergyDeviation> out;
    auto compare = [&](const std::string& name, double closed, double inverse) {
        const double scale = std::max({std::abs(closed), std::abs(inverse), 1e-300});
        const double rel = std::abs(closed - inverse) / scale;
        if (rel > tol) out.push_back({name, closed, inverse, rel});
    };
    compare("EC1", ff.EC1, fi.EC1);
    compare("EC2", ff.EC2, fi.EC2);
    compare("ECr", ff.ECr, fi.ECr);
    compare("g12", ff.g12, fi.g12);
    compare("g1r", ff.g1r, fi.g1r);
    compare("g2r", ff.g2r, fi.g2r);
    compare("ECq", bf.ECq, bi.ECq);
    compare("ECint", bf.ECint, bi.ECint);
    compare("ECr_bo", bf.ECr, bi.ECr);
    compare("g_bo", bf.g, bi.g);
    return out;
}

// |EJA e^{i phi_e/2} + EJB e^{-i phi_e/2}|: even and 2pi-periodic in phi_e,
// monotone decreasing on [0, pi].
inline double squid_effective_ej(double eja, double ejb, FluxBias flux) {
    if (!(eja > 0.0) || !(ejb > 0.0))
        throw ConfigError("SQUID junction energies must be positive");
    const double sq =
        eja * eja + ejb * ejb + 2.0 * eja * ejb * std::cos(flux.phi_e);
    return std::sqrt(std::max(sq, 0.0));
}

// Series-combination parameters of the single junction and the (effective)
// SQUID junction: EJSigma = EJ1 + EJ2, lambda = 4 EJ1 EJ2 / EJSigma^2.
inline SquidParams series_junction_params(double ej1, double ej2) {
    if (!(ej1 > 0.0) || ej2 < 0.0)
        throw ConfigError("Josephson energies must be positive");
    SquidParams s;
    s.EJ2 = ej2;
    s.EJSigma = ej1 + ej2;
    s.lambda = 4.0 * ej1 * ej2 / (s.EJSigma * s.EJSigma);
    return s;
}

inline SquidParams squid_at_flux(const DeviceParams& p, FluxBias flux) {
    return series_junction_params(p.EJ1, squid_effective_ej(p.EJA, p.EJB, flux));
}

// Inverts h f_r = sqrt(8 E_C^r E_L) for the resonator inductive energy.
inline double resonator_inductive_energy(double fres_bare, double ecr) {
    if (!(fres_bare > 0.0) || !(ecr > 0.0))
        throw ConfigError("resonator frequency and charging energy must be positive");
    return fres_bare * fres_bare / (8.0 * ecr);
}

} // namespace djt
