#include <cmath>

#include "doctest.h"
#include "ionchain/errors.hpp"
#include "ionchain/physmodel.hpp"

using namespace ionchain;

TEST_CASE("reference omega0 is 2pi x 143 kHz") {
    const UnitSystem u = derive_units(TrapConfig{});
    CHECK(u.omega0 / (2 * constants::pi) == doctest::Approx(143e3).epsilon(0.01));
}

TEST_CASE("eps matches a direct evaluation") {
    const TrapConfig c;
    const UnitSystem u = derive_units(c);
    // Independent route: omega0 from k_e e^2 with Coulomb's constant.
    const double ke = 8.9875517923e9;
    const double w0 = std::sqrt(ke * c.ion_charge * c.ion_charge / (c.ion_mass * std::pow(c.d0, 3)));
    CHECK(u.omega0 == doctest::Approx(w0).epsilon(1e-9));
    CHECK(u.eps == doctest::Approx(1.054571817e-34 / (c.ion_mass * w0 * c.d0 * c.d0)).epsilon(1e-9));
    CHECK(u.eps == doctest::Approx(4.1e-6).epsilon(0.02));
}

TEST_CASE("omega0 scales as d0^-3/2 and m^-1/2") {
    TrapConfig a, b;
    b.d0 = 2 * a.d0;
    CHECK(derive_units(b).omega0 / derive_units(a).omega0 == doctest::Approx(std::pow(2.0, -1.5)).epsilon(1e-12));
    TrapConfig m = a;
    m.ion_mass *= 3.7;
    const double inv = derive_units(a).omega0 * std::sqrt(a.ion_mass) * std::pow(a.d0, 1.5);
    CHECK(derive_units(m).omega0 * std::sqrt(m.ion_mass) * std::pow(m.d0, 1.5) == doctest::Approx(inv).epsilon(1e-12));
}

TEST_CASE("invalid configuration is rejected") {
    TrapConfig c;
    c.ion_mass = 0.0;
    CHECK_THROWS_AS(derive_units(c), ConfigError);
    TrapConfig d;
    d.n_ions = 0;
    CHECK_THROWS_AS(validate(d), ConfigError);
    TrapConfig e;
    e.d0 = -1.0;
    CHECK_THROWS_AS(derive_units(e), ConfigError);
}

TEST_CASE("Doppler temperature") {
    const double td = doppler_temperature(2 * constants::pi * 19.6e6);
    CHECK(td == doctest::Approx(0.47e-3).epsilon(0.01));
    CHECK(doppler_temperature(4 * constants::pi * 19.6e6) == doctest::Approx(2 * td).epsilon(1e-14));
    const UnitSystem u = derive_units(TrapConfig{});
    CHECK(td / u.temp_unit == doctest::Approx(68.0).epsilon(2.0 / 68.0));
    CHECK_THROWS_AS(doppler_temperature(0.0), ConfigError);
}

TEST_CASE("unit conversions round trip") {
    const UnitSystem u = derive_units(TrapConfig{});
    for (double v : {1e-3, 0.7, 4900.0}) {
        CHECK(u.from_seconds(u.to_seconds(v)) == doctest::Approx(v).epsilon(1e-12));
        CHECK(u.from_kelvin(u.to_kelvin(v)) == doctest::Approx(v).epsilon(1e-12));
        CHECK(u.from_rad_per_s(u.to_rad_per_s(v)) == doctest::Approx(v).epsilon(1e-12));
    }
}

TEST_CASE("dimensionless trap of the reference config") {
    const DimensionlessTrap d = dimensionless(TrapConfig{});
    CHECK(d.nu_x == doctest::Approx(34.85).epsilon(0.002));
    CHECK(d.h == doctest::Approx(3.0));
    CHECK(d.length == doctest::Approx(2000.0));
    CHECK(d.kappa == doctest::Approx(221.0).epsilon(0.01));
}

TEST_CASE("tweezer layouts") {
    const TweezerLayout t = periodic_tweezers(40, 10, 2.0);
    REQUIRE(t.pinned.size() == 4);
    CHECK(t.pinned[0].index == 4);
    CHECK(t.pinned[1].index == 14);
    CHECK(t.nu(14, Axis::y) == 2.0);
    CHECK(t.nu(14, Axis::z) == 2.0);
    CHECK(t.nu(14, Axis::x) == 0.0);
    CHECK(t.nu(15, Axis::z) == 0.0);
    CHECK_NOTHROW(validate(t, 40));
    CHECK_THROWS_AS(validate(t, 10), ConfigError);
    CHECK_THROWS_AS(validate(tweezers_at({3, 3}, 1.0), 10), ConfigError);
    TweezerLayout bad = tweezers_at({1}, 1.0);
    bad.pinned[0].nu_x = 0.5;
    CHECK_THROWS_AS(validate(bad, 10), ConfigError);
}

TEST_CASE("trap config from JSON") {
    nlohmann::json j = {{"d0", 5e-6}, {"n_ions", 12}};
    const TrapConfig c = trap_config_from_json(j);
    CHECK(c.d0 == 5e-6);
    CHECK(c.n_ions == 12);
    CHECK_THROWS_AS(trap_config_from_json({{"bogus", 1}}), ConfigError);
    CHECK_THROWS_AS(trap_config_from_json({{"n_ions", "ten"}}), ConfigError);
    CHECK_THROWS_AS(trap_config_from_json({{"h", -1.0}}), ConfigError);
}
