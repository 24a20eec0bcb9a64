#include "ionchain/scenario.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <Eigen/Core>

#include "ionchain/cooling.hpp"
#include "ionchain/crystal.hpp"
#include "ionchain/errors.hpp"
#include "ionchain/gatedesign.hpp"
#include "ionchain/modespec.hpp"
#include "ionchain/physmodel.hpp"

namespace ionchain {

using nlohmann::json;
namespace fs = std::filesystem;

static const char* const version_string = "1.0.0";

std::string scenario_name(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::equilibrium: return "equilibrium";
        case ScenarioKind::modes: return "modes";
        case ScenarioKind::gate: return "gate";
        case ScenarioKind::cool: return "cool";
        case ScenarioKind::localcool: return "localcool";
    }
    return "?";
}

ScenarioKind parse_scenario(const std::string& name) {
    for (auto k : {ScenarioKind::equilibrium, ScenarioKind::modes, ScenarioKind::gate, ScenarioKind::cool,
                   ScenarioKind::localcool})
        if (scenario_name(k) == name) return k;
    throw ConfigError("unknown scenario '" + name + "'");
}

fs::path preset_directory() {
    if (const char* env = std::getenv("IONCHAIN_PRESET_DIR")) return env;
#ifdef IONCHAIN_PRESET_DIR
    return IONCHAIN_PRESET_DIR;
#else
    return "presets";
#endif
}

static json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void apply_override(json& config, const std::string& key, const std::string& value) {
    if (key.empty()) throw ConfigError("empty override key");
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error&) {
        parsed = value;
    }
    json* node = &config;
    std::stringstream ss(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) {
        if (part.empty()) throw ConfigError("malformed override key '" + key + "'");
        parts.push_back(part);
    }
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!node->is_object()) throw ConfigError("override '" + key + "' descends into a non-object");
        node = &(*node)[parts[i]];
        if (node->is_null()) *node = json::object();
    }
    if (!node->is_object()) throw ConfigError("override '" + key + "' descends into a non-object");
    (*node)[parts.back()] = parsed;
}

json resolve_config(const ScenarioSpec& spec) {
    json config = json::object();
    if (!spec.preset.empty()) {
        const fs::path p = preset_directory() / (spec.preset + ".json");
        if (!fs::exists(p)) throw ConfigError("unknown preset '" + spec.preset + "'");
        config = read_json_file(p);
    }
    if (!spec.config_path.empty()) config.merge_patch(read_json_file(spec.config_path));
    for (const auto& [k, v] : spec.overrides) apply_override(config, k, v);
    if (!config.is_object()) throw ConfigError("config must be a JSON object");
    return config;
}

std::string config_hash(const json& config) {
    const std::string s = config.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

// Typed access to one config section with unknown-key detection.
class Section {
public:
    Section(const json& root, const std::string& name, std::set<std::string> known)
        : name_(name), known_(std::move(known)) {
        if (root.contains(name)) {
            node_ = root.at(name);
            if (!node_.is_object()) throw ConfigError(name + ": expected an object");
            for (auto it = node_.begin(); it != node_.end(); ++it)
                if (!known_.count(it.key())) throw ConfigError(name + "." + it.key() + ": unknown field");
        }
    }
    bool has(const std::string& k) const { return node_.contains(k); }
    double number(const std::string& k, double def) const {
        if (!has(k)) return def;
        if (!node_[k].is_number()) throw ConfigError(path(k) + ": expected a number");
        return node_[k].get<double>();
    }
    int integer(const std::string& k, int def) const {
        if (!has(k)) return def;
        if (!node_[k].is_number_integer()) throw ConfigError(path(k) + ": expected an integer");
        return node_[k].get<int>();
    }
    bool boolean(const std::string& k, bool def) const {
        if (!has(k)) return def;
        if (!node_[k].is_boolean()) throw ConfigError(path(k) + ": expected true or false");
        return node_[k].get<bool>();
    }
    std::string string(const std::string& k, const std::string& def) const {
        if (!has(k)) return def;
        if (!node_[k].is_string()) throw ConfigError(path(k) + ": expected a string");
        return node_[k].get<std::string>();
    }
    std::vector<double> numbers(const std::string& k, std::vector<double> def) const {
        if (!has(k)) return def;
        std::vector<double> out;
        const json& v = node_[k];
        if (v.is_number()) return {v.get<double>()};
        if (!v.is_array()) throw ConfigError(path(k) + ": expected a list of numbers");
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError(path(k) + ": expected a list of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }
    std::vector<int> integers(const std::string& k, std::vector<int> def) const {
        if (!has(k)) return def;
        std::vector<int> out;
        const json& v = node_[k];
        if (v.is_number_integer()) return {v.get<int>()};
        if (!v.is_array()) throw ConfigError(path(k) + ": expected a list of integers");
        for (const auto& e : v) {
            if (!e.is_number_integer()) throw ConfigError(path(k) + ": expected a list of integers");
            out.push_back(e.get<int>());
        }
        return out;
    }
    std::vector<Axis> axes(const std::string& k, std::vector<Axis> def) const {
        if (!has(k)) return def;
        std::vector<Axis> out;
        const json& v = node_[k];
        auto one = [&](const json& e) {
            if (!e.is_string()) throw ConfigError(path(k) + ": expected axis names");
            try {
                out.push_back(parse_axis(e.get<std::string>()));
            } catch (const ConfigError& err) {
                throw ConfigError(path(k) + ": " + err.what());
            }
        };
        if (v.is_array())
            for (const auto& e : v) one(e);
        else
            one(v);
        return out;
    }
    // Number, or an object keyed by axis name.
    double per_axis(const std::string& k, Axis axis, double def) const {
        if (!has(k)) return def;
        const json& v = node_[k];
        if (v.is_number()) return v.get<double>();
        if (v.is_object()) {
            const std::string a = axis_name(axis);
            if (!v.contains(a)) return def;
            if (!v[a].is_number()) throw ConfigError(path(k) + "." + a + ": expected a number");
            return v[a].get<double>();
        }
        throw ConfigError(path(k) + ": expected a number or a per-axis object");
    }

private:
    std::string path(const std::string& k) const { return name_ + "." + k; }
    std::string name_;
    std::set<std::string> known_;
    json node_ = json::object();
};

struct Context {
    json config;
    TrapConfig trap;
    UnitSystem units;
    DimensionlessTrap dim;
    fs::path out;
    std::vector<std::string> outputs;
    json results = json::object();
};

void check_sections(const json& config) {
    static const std::set<std::string> known = {"scenario", "trap",  "tweezers", "equilibrium",
                                                "modes",    "gate",  "cool",     "localcool"};
    for (auto it = config.begin(); it != config.end(); ++it)
        if (!known.count(it.key())) throw ConfigError(it.key() + ": unknown config section");
}

std::ofstream open_output(Context& ctx, const std::string& name) {
    std::ofstream f(ctx.out / name, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + (ctx.out / name).string());
    ctx.outputs.push_back(name);
    return f;
}

void write_json(Context& ctx, const std::string& name, const json& j) {
    auto f = open_output(ctx, name);
    f << j.dump(2) << '\n';
}

class Csv {
public:
    Csv(Context& ctx, const std::string& name, const std::vector<std::string>& header) : f_(open_output(ctx, name)) {
        for (std::size_t i = 0; i < header.size(); ++i) f_ << (i ? "," : "") << header[i];
        f_ << '\n';
    }
    Csv& operator<<(double v) { return cell(format_number(v)); }
    Csv& operator<<(int v) { return cell(std::to_string(v)); }
    Csv& operator<<(const std::string& s) { return cell(s); }
    void end() {
        f_ << '\n';
        first_ = true;
    }

private:
    Csv& cell(const std::string& s) {
        if (!first_) f_ << ',';
        f_ << s;
        first_ = false;
        return *this;
    }
    std::ofstream f_;
    bool first_ = true;
};

TweezerLayout read_tweezers(const Context& ctx, int n) {
    Section s(ctx.config, "tweezers", {"incident_axis", "period", "offset", "indices", "frequency_hz"});
    const Axis incident = parse_axis(s.string("incident_axis", "x"));
    const double nu = 2.0 * constants::pi * s.number("frequency_hz", 0.0) / ctx.units.omega0;
    if (nu < 0.0) throw ConfigError("tweezers.frequency_hz must be non-negative");
    if (s.has("period") && s.has("indices")) throw ConfigError("tweezers: give either period or indices");
    TweezerLayout layout;
    if (s.has("period"))
        layout = periodic_tweezers(n, s.integer("period", 10), nu, s.integer("offset", -1), incident);
    else if (s.has("indices"))
        layout = tweezers_at(s.integers("indices", {}), nu, incident);
    layout.incident_axis = incident;
    validate(layout, n);
    return layout;
}

json crystal_summary(const Crystal& c) {
    const SpacingStats st = spacing_stats(c, 0.8, 0);
    return {{"n_ions", c.size()},
            {"length_d0", c.config.length / c.config.d0},
            {"grad_norm", c.grad_norm},
            {"iterations", c.iterations},
            {"mean_spacing", st.mean_spacing},
            {"sigma_d", st.sigma_d},
            {"relative_sigma", st.relative_sigma()}};
}

// Equilibrium of the configured trap, optionally calibrating L or N first.
Crystal build_crystal(Context& ctx, const TweezerLayout& tweezers = {}) {
    Section s(ctx.config, "equilibrium", {"calibrate", "lengths_d0", "middle_fraction", "bins"});
    const std::string mode = s.string("calibrate", "none");
    TrapConfig trap = ctx.trap;
    if (mode == "length") {
        trap.length = calibrate_length(trap.n_ions, trap) * trap.d0;
    } else if (mode == "count") {
        trap.n_ions = calibrate_count(trap.length / trap.d0, trap);
    } else if (mode != "none") {
        throw ConfigError("equilibrium.calibrate: expected none, length or count");
    }
    ctx.trap = trap;
    return solve_equilibrium(trap, tweezers);
}

void run_equilibrium(Context& ctx) {
    Section s(ctx.config, "equilibrium", {"calibrate", "lengths_d0", "middle_fraction", "bins"});
    const double frac = s.number("middle_fraction", 0.8);
    const int bins = s.integer("bins", 40);
    const std::vector<double> lengths = s.numbers("lengths_d0", {});
    if (!lengths.empty()) {
        Csv csv(ctx, "uniformity.csv", {"length_d0", "n_ions", "mean_spacing", "sigma_d", "relative_sigma"});
        json rows = json::array();
        for (double l : lengths) {
            const int n = calibrate_count(l, ctx.trap);
            TrapConfig t = ctx.trap;
            t.n_ions = n;
            t.length = l * t.d0;
            const SpacingStats st = spacing_stats(solve_equilibrium(t), frac, 0);
            csv << l << n << st.mean_spacing << st.sigma_d << st.relative_sigma();
            csv.end();
            rows.push_back({{"length_d0", l}, {"n_ions", n}, {"relative_sigma", st.relative_sigma()}});
        }
        ctx.results["uniformity"] = rows;
    }
    const Crystal c = build_crystal(ctx);
    {
        Csv csv(ctx, "positions.csv", {"index", "u"});
        for (int i = 0; i < c.size(); ++i) {
            csv << i << c.u[i];
            csv.end();
        }
    }
    const SpacingStats st = spacing_stats(c, frac, bins);
    {
        Csv csv(ctx, "histogram.csv", {"spacing", "count"});
        for (const auto& [x, k] : st.histogram) {
            csv << x << k;
            csv.end();
        }
    }
    json stats = crystal_summary(c);
    stats["middle_fraction"] = frac;
    stats["mean_spacing"] = st.mean_spacing;
    stats["sigma_d"] = st.sigma_d;
    stats["relative_sigma"] = st.relative_sigma();
    write_json(ctx, "stats.json", stats);
    ctx.results["crystal"] = stats;
}

void run_modes(Context& ctx) {
    Section s(ctx.config, "modes", {"axes", "scan_axis", "periods", "strengths_hz", "pinned"});
    const Crystal c = build_crystal(ctx);
    const TweezerLayout tweezers = read_tweezers(ctx, c.size());
    json summary = json::object();
    for (Axis axis : s.axes("axes", {Axis::z})) {
        const ModeSpectrum m = spectrum(coupling_matrix(c, axis, tweezers));
        Csv csv(ctx, "spectrum_" + axis_name(axis) + ".csv", {"k", "omega"});
        for (int k = 0; k < m.size(); ++k) {
            csv << k << m.omega[k];
            csv.end();
        }
        summary[axis_name(axis)] = {{"lowest", m.omega[0]},
                                    {"lowest_interior", lowest_interior_frequency(m, c.size())},
                                    {"highest", m.omega[m.size() - 1]}};
    }
    const std::vector<int> periods = s.integers("periods", {});
    if (!periods.empty()) {
        const Axis axis = s.axes("scan_axis", {Axis::z}).front();
        std::vector<double> strengths;
        for (double f : s.numbers("strengths_hz", {})) strengths.push_back(2.0 * constants::pi * f / ctx.units.omega0);
        const TweezerScan scan = tweezer_scan(c, axis, periods, strengths, s.boolean("pinned", true));
        Csv csv(ctx, "scan.csv", {"period", "strength", "strength_hz", "omega_lowest", "omega_interior"});
        for (const auto& r : scan.rows) {
            csv << r.period << r.strength << r.strength * ctx.units.omega0 / (2.0 * constants::pi) << r.omega_lowest
                << r.omega_interior;
            csv.end();
        }
        json fit = {{"free_lowest", scan.free_lowest}, {"free_interior", scan.free_interior}};
        if (scan.pinned_fit)
            fit["pinned_fit"] = {{"prefactor", scan.pinned_fit->prefactor},
                                 {"exponent", scan.pinned_fit->exponent},
                                 {"r_squared", scan.pinned_fit->r_squared}};
        json conv = json::array();
        for (const auto& [p, nu] : scan.convergence_strength)
            conv.push_back({{"period", p},
                            {"strength_hz", std::isnan(nu) ? json(nullptr)
                                                           : json(nu * ctx.units.omega0 / (2.0 * constants::pi))}});
        fit["within_1pct_of_pinned"] = conv;
        write_json(ctx, "fit.json", fit);
        summary["scan"] = fit;
    }
    ctx.results["modes"] = summary;
}

json pulse_json(const PulseShape& p) {
    std::vector<double> seg(p.omega.data(), p.omega.data() + p.omega.size());
    return {{"segments", seg}, {"mu", p.mu}, {"phi", p.phi}};
}

void run_gate(Context& ctx) {
    Section s(ctx.config, "gate",
              {"ions", "cell_size", "axis", "segments", "temperature_doppler", "gate_times_us", "mu_points",
               "cell_tweezers", "cell_tweezer_hz", "full_crystal", "full_crystal_offset"});
    const std::vector<int> ions = s.integers("ions", {2, 5});
    if (ions.size() != 2) throw ConfigError("gate.ions: expected two indices");
    const int cell = s.integer("cell_size", 9);
    const Axis axis = s.axes("axis", {Axis::x}).front();
    if (axis == Axis::z) throw ConfigError("gate.axis: must be x or y");
    const double nu = axis == Axis::x ? ctx.dim.nu_x : ctx.dim.nu_y;
    CouplingMatrix a = lattice_cell_matrix(cell, axis, nu * nu);
    const double ot = 2.0 * constants::pi * s.number("cell_tweezer_hz", 0.0) / ctx.units.omega0;
    for (int i : s.integers("cell_tweezers", {})) {
        if (i < 0 || i >= cell) throw ConfigError("gate.cell_tweezers: index outside the cell");
        a.a(i, i) += ot * ot;
    }
    const ModeSpectrum modes = spectrum(a);

    GateSpec spec;
    spec.ion_i = ions[0];
    spec.ion_j = ions[1];
    spec.segments = s.integer("segments", 7);
    spec.axis = axis;
    spec.delta_k = ctx.dim.delta_k;
    spec.eps = ctx.units.eps;
    spec.temperature = s.number("temperature_doppler", 10.0) * ctx.dim.doppler;
    spec.mu_points = s.integer("mu_points", 2000);
    const std::vector<double> times_us = s.numbers("gate_times_us", {0.5, 1, 2, 4, 8, 16, 32});
    if (times_us.empty()) throw ConfigError("gate.gate_times_us: empty");

    std::optional<ModeSpectrum> full;
    GateSpec full_spec = spec;
    if (s.boolean("full_crystal", false)) {
        const Crystal c = build_crystal(ctx);
        const int offset = s.integer("full_crystal_offset", c.size() / 2 - cell / 2);
        full_spec.ion_i = offset + ions[0];
        full_spec.ion_j = offset + ions[1];
        TweezerLayout layout = read_tweezers(ctx, c.size());
        full = spectrum(coupling_matrix(c, axis, layout));
    }

    const double hz = ctx.units.omega0 / (2.0 * constants::pi);
    std::vector<std::string> header{"t_g_us", "t_g", "dF_c", "eta_omega_max", "eta_omega_max_khz", "mu"};
    if (full) header.push_back("dF_c_full");
    Csv csv(ctx, "infidelity.csv", header);
    json pulses = json::array();
    std::vector<double> tg, eom;
    for (double us : times_us) {
        GateSpec g = spec;
        g.t_g = ctx.units.from_seconds(us * 1e-6);
        const GateDesign d = optimize_pulse(g, modes);
        csv << us << g.t_g << d.budget.dF_c << d.budget.eta_omega_max << d.budget.eta_omega_max * hz / 1e3 << d.pulse.mu;
        json pj = pulse_json(d.pulse);
        pj["t_g_us"] = us;
        pj["dF_c"] = d.budget.dF_c;
        if (full) {
            GateSpec fs = full_spec;
            fs.t_g = g.t_g;
            const GateErrorBudget b = evaluate_pulse(d.pulse, fs, *full);
            csv << b.dF_c;
            pj["dF_c_full"] = b.dF_c;
        }
        csv.end();
        pulses.push_back(pj);
        tg.push_back(us);
        eom.push_back(d.budget.eta_omega_max * hz);
    }
    write_json(ctx, "pulse.json", pulses);

    json budget = json::object();
    const ThermalErrors te = thermal_errors(modes, ctx.dim.doppler, ctx.dim.delta_k, ctx.dim.beam_waist,
                                            ctx.units.eps, std::nullopt, PhononAverage::band_average);
    budget["doppler_transverse"] = {{"dx_th", te.dx_th},
                                    {"dF_LD", te.dF_LD},
                                    {"dF_LD_from_fluctuation",
                                     lamb_dicke_infidelity_from_fluctuation(ctx.dim.delta_k, te.dx_th)},
                                    {"dF_a", te.dF_a}};
    const auto [mn, mx] = std::minmax_element(tg.begin(), tg.end());
    if (tg.size() >= 4 && *mx >= 10.0 * *mn) {
        const PowerLawFit f = fit_power_law(tg, eom);
        budget["eta_omega_max_fit"] = {{"prefactor_hz_at_1us", f.prefactor},
                                       {"exponent", f.exponent},
                                       {"r_squared", f.r_squared}};
    }
    write_json(ctx, "budget.json", budget);
    ctx.results["gate"] = budget;
}

json fit_json(const std::optional<RelaxationFit>& f, const UnitSystem& u, double min_relax) {
    if (!f) return nullptr;
    return {{"a", f->a},
            {"tau", f->tau},
            {"tau_ms", u.to_seconds(f->tau) * 1e3},
            {"steady", f->steady},
            {"rms_residual", f->rms_residual},
            {"span", f->span},
            {"converged", f->span >= min_relax * f->tau}};
}

void write_pf_rows(Csv& csv, const CoolingResult& r) {
    for (Eigen::Index k = 0; k < r.pf.rows(); ++k) {
        for (std::size_t c = 0; c < r.ions.size(); ++c) {
            csv << r.t[k] << r.ions[c];
            for (Axis a : {Axis::x, Axis::y, Axis::z}) {
                if (a == r.axis)
                    csv << r.pf(k, static_cast<Eigen::Index>(c));
                else
                    csv << std::string();
            }
            csv.end();
        }
    }
}

void run_cool(Context& ctx) {
    Section s(ctx.config, "cool",
              {"axes", "coolant_period", "coolant_offsets", "coolants", "gamma", "background_product",
               "coolant_temperature_doppler", "initial_temperature_doppler", "window", "samples", "primary_ion",
               "monitored", "min_relaxations", "max_doublings"});
    const Crystal c = build_crystal(ctx);
    const int n = c.size();
    const TweezerLayout tweezers = read_tweezers(ctx, n);
    std::vector<int> coolants = s.integers("coolants", {});
    if (s.has("coolant_period")) {
        const int p = s.integer("coolant_period", 10);
        if (p < 1) throw ConfigError("cool.coolant_period must be positive");
        for (int off : s.integers("coolant_offsets", {p / 2}))
            for (int i = off; i < n; i += p) coolants.push_back(i);
        std::sort(coolants.begin(), coolants.end());
    }
    if (coolants.empty()) throw ConfigError("cool: no coolant ions given");

    Csv csv(ctx, "pf.csv", {"t", "i", "dx", "dy", "dz"});
    json fits = {{"crystal", crystal_summary(c)}, {"coolants", coolants.size()}};
    for (Axis axis : s.axes("axes", {Axis::z})) {
        CoolingRun run;
        run.axis = axis;
        run.tweezers = tweezers;
        run.coolants = coolants;
        run.coolant_gamma = s.number("gamma", 0.01);
        run.background_product = s.number("background_product", 1e-4);
        run.coolant_temperature = s.number("coolant_temperature_doppler", 1.0) * ctx.dim.doppler;
        run.initial_temperature = s.number("initial_temperature_doppler", 20.0) * ctx.dim.doppler;
        run.window = s.per_axis("window", axis, 1e4);
        run.samples = s.integer("samples", 200);
        run.primary_ion = s.integer("primary_ion", n / 2);
        run.monitored = s.integers("monitored", {});
        run.min_relaxations = s.number("min_relaxations", 5.0);
        run.max_doublings = s.integer("max_doublings", 6);
        const CoolingResult r = run_cooling(c, run, ctx.units.eps);
        write_pf_rows(csv, r);
        json ax = json::object();
        for (std::size_t k = 0; k < r.ions.size(); ++k) {
            json f = fit_json(r.fits[k], ctx.units, run.min_relaxations);
            ax[std::to_string(r.ions[k])] = {{"fit", f}, {"doppler_reference_pf", r.reference_pf[k]}};
        }
        fits[axis_name(axis)] = ax;
    }
    write_json(ctx, "fits.json", fits);
    ctx.results["cool"] = fits;
}

void run_localcool(Context& ctx) {
    Section s(ctx.config, "localcool",
              {"cell_first", "cell_last", "wall_thickness", "coolants", "tweezer_frequency_hz", "axes", "monitor_ion",
               "outside_ions", "window", "samples", "gamma", "background_product", "coolant_temperature_doppler",
               "initial_temperature_doppler"});
    const Crystal c = build_crystal(ctx);
    LocalCellSpec base;
    base.cell_first = s.integer("cell_first", 215);
    base.cell_last = s.integer("cell_last", 223);
    base.coolants = s.integers("coolants", {215, 216, 222, 223});
    base.tweezer_nu = 2.0 * constants::pi * s.number("tweezer_frequency_hz", 1e6) / ctx.units.omega0;
    base.coolant_gamma = s.number("gamma", 0.01);
    base.background_product = s.number("background_product", 1e-4);
    base.coolant_temperature = s.number("coolant_temperature_doppler", 1.0) * ctx.dim.doppler;
    base.initial_temperature = s.number("initial_temperature_doppler", 20.0) * ctx.dim.doppler;
    base.monitor_ion = s.integer("monitor_ion", (base.cell_first + base.cell_last) / 2);
    base.outside_ions = s.integers("outside_ions", {base.cell_first - 30, base.cell_last + 30});
    base.samples = s.integer("samples", 200);

    json fits = {{"crystal", crystal_summary(c)}};
    for (int wall : s.integers("wall_thickness", {1, 2, 3})) {
        LocalCellSpec spec = base;
        spec.wall_thickness = wall;
        Csv csv(ctx, "pf_wall" + std::to_string(wall) + ".csv", {"t", "i", "dx", "dy", "dz"});
        json wj = json::object();
        for (Axis axis : s.axes("axes", {Axis::z, Axis::y})) {
            spec.axes = {axis};
            spec.window = s.per_axis("window", axis, 2e4);
            const LocalCellReport rep = local_cell_scenario(c, spec, ctx.units.eps);
            wj["walls"] = rep.walls;
            const LocalCellAxisReport& ar = rep.axes.front();
            write_pf_rows(csv, ar.run);
            json ax = {{"fit", fit_json(ar.run.fits[0], ctx.units, 5.0)},
                       {"interior_ratio", ar.interior_ratio},
                       {"outside_ratio", ar.outside_ratio},
                       {"outside_monotone", ar.outside_monotone}};
            wj[axis_name(axis)] = ax;
        }
        fits["wall_" + std::to_string(wall)] = wj;
    }
    write_json(ctx, "fits.json", fits);
    ctx.results["localcool"] = fits;
}

}  // namespace

int run_scenario(const ScenarioSpec& spec) {
    const auto start = std::chrono::steady_clock::now();
    try {
        Context ctx;
        ctx.config = resolve_config(spec);
        check_sections(ctx.config);
        if (ctx.config.contains("scenario")) {
            if (!ctx.config["scenario"].is_string() ||
                parse_scenario(ctx.config["scenario"].get<std::string>()) != spec.kind)
                throw ConfigError("scenario: config is for '" + ctx.config["scenario"].dump() +
                                  "', not '" + scenario_name(spec.kind) + "'");
        }
        ctx.trap = trap_config_from_json(ctx.config.value("trap", json::object()));
        ctx.units = derive_units(ctx.trap);
        ctx.dim = dimensionless(ctx.trap);
        ctx.out = spec.out_dir;
        std::error_code ec;
        fs::create_directories(ctx.out, ec);
        if (ec) throw ConfigError("cannot create output directory " + ctx.out.string() + ": " + ec.message());

        switch (spec.kind) {
            case ScenarioKind::equilibrium: run_equilibrium(ctx); break;
            case ScenarioKind::modes: run_modes(ctx); break;
            case ScenarioKind::gate: run_gate(ctx); break;
            case ScenarioKind::cool: run_cool(ctx); break;
            case ScenarioKind::localcool: run_localcool(ctx); break;
        }
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        json manifest = {{"scenario", scenario_name(spec.kind)},
                         {"config", ctx.config},
                         {"config_hash", config_hash(ctx.config)},
                         {"version", version_string},
                         {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                               std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                               std::to_string(EIGEN_MINOR_VERSION)},
                         {"units", {{"omega0", ctx.units.omega0}, {"eps", ctx.units.eps},
                                    {"temp_unit", ctx.units.temp_unit}, {"doppler", ctx.dim.doppler}}},
                         {"outputs", ctx.outputs},
                         {"wall_time_s", wall}};
        std::ofstream f(ctx.out / "manifest.json", std::ios::binary);
        f << manifest.dump(2) << '\n';
        return exit_ok;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return exit_numeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_numeric;
    }
}

}  // namespace ionchain
