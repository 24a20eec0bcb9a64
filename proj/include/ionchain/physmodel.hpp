#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace ionchain {

namespace constants {
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double hbar = 1.054571817e-34;       // J s
inline constexpr double k_boltzmann = 1.380649e-23;   // J/K
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double yb171_mass_u = 170.936323;
inline constexpr double yb_cooling_linewidth = 2.0 * pi * 19.6e6;  // rad/s
}  // namespace constants

enum class Axis { x, y, z };

std::string axis_name(Axis axis);
Axis parse_axis(const std::string& name);

// Trap and laser parameters in SI units.
struct TrapConfig {
    double ion_mass = constants::yb171_mass_u * constants::atomic_mass_unit;
    double ion_charge = constants::elementary_charge;
    double d0 = 10e-6;
    double h = 30e-6;
    double v_dc = 0.1;
    double length = 2000 * 10e-6;
    int n_ions = 1795;
    double omega_rf_x = 2.0 * constants::pi * 5e6;
    double omega_rf_y = 2.0 * constants::pi * 5e6;
    double doppler_temperature = 0.0;  // K; <= 0 means derive from the Yb linewidth
    double delta_k = 2.0 * constants::pi / 355e-9;  // 1/m
    double beam_waist = 5e-6;                        // m
};

void validate(const TrapConfig& config);

struct UnitSystem {
    double omega0 = 0.0;     // rad/s
    double eps = 0.0;        // hbar / (m omega0 d0^2)
    double t_unit = 0.0;     // s
    double temp_unit = 0.0;  // K
    double d0 = 0.0;         // m

    double to_seconds(double t) const { return t * t_unit; }
    double from_seconds(double s) const { return s / t_unit; }
    double to_kelvin(double temp) const { return temp * temp_unit; }
    double from_kelvin(double kelvin) const { return kelvin / temp_unit; }
    double to_rad_per_s(double nu) const { return nu * omega0; }
    double from_rad_per_s(double omega) const { return omega / omega0; }
};

UnitSystem derive_units(const TrapConfig& config);

// hbar * linewidth / (2 k_B).
double doppler_temperature(double linewidth);

// Doppler temperature in kelvin as configured, or the Yb value when unset.
double doppler_temperature_of(const TrapConfig& config);

// Dimensionless trap quantities consumed by the solvers.
struct DimensionlessTrap {
    double kappa = 0.0;   // bookend strength e V / (pi m omega0^2 d0^2)
    double h = 0.0;       // height / d0
    double length = 0.0;  // L / d0
    double nu_x = 0.0;
    double nu_y = 0.0;
    double doppler = 0.0;  // T_D / temp_unit
    double beam_waist = 0.0;  // w / d0
    double delta_k = 0.0;     // |Dk| d0
};

DimensionlessTrap dimensionless(const TrapConfig& config);

struct PinnedIon {
    int index = 0;
    double nu_y = 0.0;
    double nu_z = 0.0;
    double nu_x = 0.0;
};

struct TweezerLayout {
    std::vector<PinnedIon> pinned;
    Axis incident_axis = Axis::x;

    // Tweezer frequency of ion i on the given axis (0 when not pinned).
    double nu(int ion, Axis axis) const;
    std::vector<int> indices() const;
    bool empty() const { return pinned.empty(); }
};

void validate(const TweezerLayout& layout, int n_ions);

// Tweezers of strength nu on every ion with index % period == offset.
// Negative offset selects period/2 - 1.
TweezerLayout periodic_tweezers(int n_ions, int period, double nu, int offset = -1,
                                Axis incident_axis = Axis::x);

// Tweezers of strength nu on an explicit index list.
TweezerLayout tweezers_at(const std::vector<int>& indices, double nu, Axis incident_axis = Axis::x);

TrapConfig trap_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrapConfig& config);

}  // namespace ionchain
