// device.hpp — device parameters, flux bias and their JSON representation

#pragma once

#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

#include "djt/constants.hpp"
#include "djt/errors.hpp"

namespace djt {

// Circuit constants of the flux-tunable double-junction transmon coupled to
// a readout resonator. Energies are E/h in GHz, capacitances in fF.
struct DeviceParams {
    double C = 0.0;         // island capacitance to ground [fF]
    double EJ1 = 0.0;       // single-junction Josephson energy [GHz]
    double CJ1 = 0.0;       // single-junction capacitance [fF]
    double EJA = 0.0;       // SQUID junction A Josephson energy [GHz]
    double CJA = 0.0;       // SQUID junction A capacitance [fF]
    double EJB = 0.0;       // SQUID junction B Josephson energy [GHz]
    double CJB = 0.0;       // SQUID junction B capacitance [fF]
    double fres_bare = 0.0; // bare resonator frequency [GHz]
    double Cg = 0.0;        // qubit-resonator coupling capacitance [fF]
    double Cr = 0.0;        // resonator self-capacitance [fF]

    // The two SQUID junctions sit in parallel across the same branch.
    double CJ2() const { return CJA + CJB; }

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw ConfigError(std::string("device parameter ") + name + " must be positive");
        };
        positive(C, "C");
        positive(EJ1, "EJ1");
        positive(CJ1, "CJ1");
        positive(EJA, "EJA");
        positive(CJA, "CJA");
        positive(EJB, "EJB");
        positive(CJB, "CJB");
        positive(fres_bare, "fres_bare");
        positive(Cr, "Cr");
        if (Cg < 0.0 || !std::isfinite(Cg))
            throw ConfigError("device parameter Cg must be non-negative");
    }
};

// External flux through the SQUID loop, stored as the reduced phase
// phi_e = 2*pi*Phi_e/Phi_0.
struct FluxBias {
    double phi_e = 0.0; // radians

    static FluxBias from_phi0(double phi_e_in_phi0) {
        return FluxBias{2.0 * constants::pi * phi_e_in_phi0};
    }
    double in_phi0() const { return phi_e / (2.0 * constants::pi); }
};

inline void to_json(nlohmann::json& j, const DeviceParams& p) {
    j = nlohmann::json{{"C_fF", p.C},     {"EJ1_GHz", p.EJ1},
                       {"CJ1_fF", p.CJ1}, {"EJA_GHz", p.EJA},
                       {"CJA_fF", p.CJA}, {"EJB_GHz", p.EJB},
                       {"CJB_fF", p.CJB}, {"fres_bare_GHz", p.fres_bare},
                       {"Cg_fF", p.Cg},   {"Cr_pF", p.Cr / 1000.0}};
}

inline void from_json(const nlohmann::json& j, DeviceParams& p) {
    p.C = j.at("C_fF").get<double>();
    p.EJ1 = j.at("EJ1_GHz").get<double>();
    p.CJ1 = j.at("CJ1_fF").get<double>();
    p.EJA = j.at("EJA_GHz").get<double>();
    p.CJA = j.at("CJA_fF").get<double>();
    p.EJB = j.at("EJB_GHz").get<double>();
    p.CJB = j.at("CJB_fF").get<double>();
    p.fres_bare = j.at("fres_bare_GHz").get<double>();
    p.Cg = j.at("Cg_fF").get<double>();
    p.Cr = j.at("Cr_pF").get<double>() * 1000.0; // pF -> fF
}

inline DeviceParams load_device_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open device parameter file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("invalid JSON in " + path + ": " + e.what());
    }
    DeviceParams p;
    try {
        p = j.get<DeviceParams>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("missing or malformed key in " + path + ": " + e.what());
    }
    p.validate();
    return p;
}

} // namespace djt
