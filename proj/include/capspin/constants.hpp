#pragma once

namespace capspin::constants {

// 31P gyromagnetic ratio, rad s^-1 T^-1
inline constexpr double gamma_p31 = 1.08394e8;
// vacuum permeability, T m A^-1 (2018 CODATA)
inline constexpr double mu0 = 1.25663706212e-6;
// reduced Planck constant, J s
inline constexpr double hbar = 1.054571817e-34;

inline constexpr double default_tau_c_s = 177e-12;
inline constexpr double default_b_field_t = 50e-6;

// entanglement-yield defaults
inline constexpr double default_yield_rate_per_s = 1.0 / 300.0;
inline constexpr double default_yield_horizon_s = 1000.0;

inline constexpr double angstrom_m = 1e-10;
inline constexpr double pi = 3.14159265358979323846;

}  // namespace capspin::constants
