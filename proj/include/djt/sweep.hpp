// sweep.hpp — flux-grid evaluation and plot-ready CSV export

#pragma once

#include <string>
#include <vector>

#include "djt/csv.hpp"
#include "djt/models.hpp"
#include "djt/parallel.hpp"

namespace djt {

inline std::vector<double> linspace(double a, double b, std::size_t count) {
    if (count == 0) throw ConfigError("flux grid needs at least one point");
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = a;
        return out;
    }
    for (std::size_t i = 0; i < count; ++i)
        out[i] = a + (b - a) * double(i) / double(count - 1);
    return out;
}

// Spectra over a flux grid given in units of Phi_0; points are independent
// and evaluated concurrently.
inline std::vector<SpectrumResult> sweep_spectrum(ModelKind kind, const DeviceParams& p,
                                                  const std::vector<double>& phi0_grid,
                                                  Truncation trunc = {},
                                                  std::size_t workers = default_workers()) {
    return parallel_map<SpectrumResult>(phi0_grid.size(), workers, [&](std::size_t i) {
        return spectrum(kind, p, FluxBias::from_phi0(phi0_grid[i]), trunc);
    });
}

// Fixed flux-sweep schema; transitions are tabulated divided by their photon
// number (f01, f02/2, f03/3, f04/4) to match spectroscopy axes.
inline CsvWriter spectrum_sweep_csv(const std::vector<SpectrumResult>& results) {
    CsvWriter csv({"phi_e_phi0", "f01_GHz", "f02h_GHz", "f03t_GHz", "f04q_GHz", "fint_GHz",
                   "alpha_GHz", "model"});
    for (const SpectrumResult& r : results) {
        csv.row({format_g9(r.flux.in_phi0()), format_g9(r.transition_over_k(1)),
                 format_g9(r.transition_over_k(2)), format_g9(r.transition_over_k(3)),
                 format_g9(r.transition_over_k(4)),
                 r.f_int ? format_g9(*r.f_int) : std::string("nan"),
                 format_g9(r.anharmonicity), model_kind_name(r.kind)});
    }
    return csv;
}

} // namespace djt
