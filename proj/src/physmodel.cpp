#include "ionchain/physmodel.hpp"

#include <cmath>
#include <set>

#include "ionchain/errors.hpp"

namespace ionchain {

std::string axis_name(Axis axis) {
    switch (axis) {
        case Axis::x: return "x";
        case Axis::y: return "y";
        case Axis::z: return "z";
    }
    return "?";
}

Axis parse_axis(const std::string& name) {
    if (name == "x") return Axis::x;
    if (name == "y") return Axis::y;
    if (name == "z") return Axis::z;
    throw ConfigError("unknown axis '" + name + "' (expected x, y or z)");
}

void validate(const TrapConfig& c) {
    auto require_positive = [](double v, const char* field) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw ConfigError(std::string("trap.") + field + " must be positive and finite");
    };
    require_positive(c.ion_mass, "ion_mass");
    require_positive(c.ion_charge, "ion_charge");
    require_positive(c.d0, "d0");
    require_positive(c.h, "h");
    require_positive(c.length, "length");
    require_positive(c.omega_rf_x, "omega_rf_x");
    require_positive(c.omega_rf_y, "omega_rf_y");
    require_positive(c.delta_k, "delta_k");
    require_positive(c.beam_waist, "beam_waist");
    if (!std::isfinite(c.v_dc)) throw ConfigError("trap.v_dc must be finite");
    if (c.n_ions < 1) throw ConfigError("trap.n_ions must be at least 1");
    if (!std::isfinite(c.doppler_temperature))
        throw ConfigError("trap.doppler_temperature must be finite");
}

UnitSystem derive_units(const TrapConfig& c) {
    if (!(c.ion_mass > 0.0) || !(c.ion_charge > 0.0) || !(c.d0 > 0.0))
        throw ConfigError("ion mass, charge and d0 must be positive");
    using namespace constants;
    const double coulomb = c.ion_charge * c.ion_charge / (4.0 * pi * vacuum_permittivity);
    UnitSystem u;
    u.omega0 = std::sqrt(coulomb / (c.ion_mass * c.d0 * c.d0 * c.d0));
    u.eps = hbar / (c.ion_mass * u.omega0 * c.d0 * c.d0);
    u.t_unit = 1.0 / u.omega0;
    u.temp_unit = hbar * u.omega0 / k_boltzmann;
    u.d0 = c.d0;
    return u;
}

double doppler_temperature(double linewidth) {
    if (!(linewidth > 0.0)) throw ConfigError("linewidth must be positive");
    return constants::hbar * linewidth / (2.0 * constants::k_boltzmann);
}

double doppler_temperature_of(const TrapConfig& c) {
    return c.doppler_temperature > 0.0 ? c.doppler_temperature
                                       : doppler_temperature(constants::yb_cooling_linewidth);
}

DimensionlessTrap dimensionless(const TrapConfig& c) {
    validate(c);
    const UnitSystem u = derive_units(c);
    DimensionlessTrap d;
    d.kappa = c.ion_charge * c.v_dc / (constants::pi * c.ion_mass * u.omega0 * u.omega0 * c.d0 * c.d0);
    d.h = c.h / c.d0;
    d.length = c.length / c.d0;
    d.nu_x = c.omega_rf_x / u.omega0;
    d.nu_y = c.omega_rf_y / u.omega0;
    d.doppler = doppler_temperature_of(c) / u.temp_unit;
    d.beam_waist = c.beam_waist / c.d0;
    d.delta_k = c.delta_k * c.d0;
    return d;
}

double TweezerLayout::nu(int ion, Axis axis) const {
    for (const auto& p : pinned) {
        if (p.index != ion) continue;
        switch (axis) {
            case Axis::x: return p.nu_x;
            case Axis::y: return p.nu_y;
            case Axis::z: return p.nu_z;
        }
    }
    return 0.0;
}

std::vector<int> TweezerLayout::indices() const {
    std::vector<int> out;
    out.reserve(pinned.size());
    for (const auto& p : pinned) out.push_back(p.index);
    return out;
}

void validate(const TweezerLayout& layout, int n_ions) {
    std::set<int> seen;
    for (const auto& p : layout.pinned) {
        if (p.index < 0 || p.index >= n_ions)
            throw ConfigError("tweezer index " + std::to_string(p.index) + " out of range");
        if (!seen.insert(p.index).second)
            throw ConfigError("duplicate tweezer index " + std::to_string(p.index));
        if (p.nu_x < 0.0 || p.nu_y < 0.0 || p.nu_z < 0.0)
            throw ConfigError("tweezer frequencies must be non-negative");
        const double along = layout.incident_axis == Axis::x   ? p.nu_x
                             : layout.incident_axis == Axis::y ? p.nu_y
                                                                : p.nu_z;
        if (along != 0.0)
            throw ConfigError("tweezer " + std::to_string(p.index) +
                              " has nonzero confinement along its incident axis");
    }
}

static PinnedIon make_pinned(int index, double nu, Axis incident) {
    PinnedIon p;
    p.index = index;
    p.nu_x = incident == Axis::x ? 0.0 : nu;
    p.nu_y = incident == Axis::y ? 0.0 : nu;
    p.nu_z = incident == Axis::z ? 0.0 : nu;
    return p;
}

TweezerLayout periodic_tweezers(int n_ions, int period, double nu, int offset, Axis incident) {
    if (period < 2) throw ConfigError("tweezer period must be at least 2");
    if (offset < 0) offset = period / 2 - 1;
    if (offset >= period) throw ConfigError("tweezer offset must be smaller than the period");
    TweezerLayout layout;
    layout.incident_axis = incident;
    for (int i = offset; i < n_ions; i += period) layout.pinned.push_back(make_pinned(i, nu, incident));
    return layout;
}

TweezerLayout tweezers_at(const std::vector<int>& indices, double nu, Axis incident) {
    TweezerLayout layout;
    layout.incident_axis = incident;
    for (int i : indices) layout.pinned.push_back(make_pinned(i, nu, incident));
    return layout;
}

TrapConfig trap_config_from_json(const nlohmann::json& j) {
    TrapConfig c;
    if (!j.is_object()) throw ConfigError("trap section must be an object");
    static const std::set<std::string> known = {
        "ion_mass", "ion_charge", "d0", "h", "v_dc", "length", "n_ions", "omega_rf_x",
        "omega_rf_y", "doppler_temperature", "doppler_linewidth", "delta_k", "beam_waist"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) throw ConfigError("trap." + it.key() + ": unknown field");
    auto num = [&](const char* key, double& field) {
        if (!j.contains(key)) return;
        if (!j[key].is_number()) throw ConfigError(std::string("trap.") + key + ": expected a number");
        field = j[key].get<double>();
    };
    num("ion_mass", c.ion_mass);
    num("ion_charge", c.ion_charge);
    num("d0", c.d0);
    num("h", c.h);
    num("v_dc", c.v_dc);
    num("length", c.length);
    num("omega_rf_x", c.omega_rf_x);
    num("omega_rf_y", c.omega_rf_y);
    num("doppler_temperature", c.doppler_temperature);
    num("delta_k", c.delta_k);
    num("beam_waist", c.beam_waist);
    if (j.contains("doppler_linewidth")) {
        if (!j["doppler_linewidth"].is_number())
            throw ConfigError("trap.doppler_linewidth: expected a number");
        c.doppler_temperature = doppler_temperature(j["doppler_linewidth"].get<double>());
    }
    if (j.contains("n_ions")) {
        if (!j["n_ions"].is_number_integer()) throw ConfigError("trap.n_ions: expected an integer");
        c.n_ions = j["n_ions"].get<int>();
    }
    validate(c);
    return c;
}

nlohmann::json to_json(const TrapConfig& c) {
    return {{"ion_mass", c.ion_mass},     {"ion_charge", c.ion_charge},
            {"d0", c.d0},                 {"h", c.h},
            {"v_dc", c.v_dc},             {"length", c.length},
            {"n_ions", c.n_ions},         {"omega_rf_x", c.omega_rf_x},
            {"omega_rf_y", c.omega_rf_y}, {"doppler_temperature", doppler_temperature_of(c)},
            {"delta_k", c.delta_k},       {"beam_waist", c.beam_waist}};
}

}  // namespace ionchain
