#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "spintool/spinmath.hpp"

using namespace spintool;

namespace {

Rotation random_rotation(std::mt19937& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    double w = g(rng), x = g(rng), y = g(rng), z = g(rng);
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    return {w / n, {x / n, y / n, z / n}};
}

const NuclearSpin kN1{*find_species("29Si"), {-23.5, 12.0}};

} // namespace

TEST_CASE("species registry") {
    const auto si = find_species("29Si");
    const auto c13 = find_species("13C");
    REQUIRE(si.has_value());
    REQUIRE(c13.has_value());
    CHECK(si->gamma_khz_per_g == doctest::Approx(-0.8465).epsilon(1e-12));
    CHECK(c13->gamma_khz_per_g == doctest::Approx(1.0705).epsilon(1e-12));
    CHECK_FALSE(find_species("1H").has_value());
}

TEST_CASE("larmor frequency") {
    const auto si = *find_species("29Si");
    CHECK(larmor_frequency_khz(si, FieldConfig{0.0}) == 0.0);
    CHECK(larmor_frequency_khz(si, FieldConfig{81.0}) == doctest::Approx(-68.57).epsilon(1e-3));
    CHECK(larmor_frequency_khz(si, FieldConfig{36.0}) == doctest::Approx(-30.47).epsilon(1e-3));
}

TEST_CASE("conditional precession at 81 G") {
    const FieldConfig b{81.0};
    const auto cp0 = conditional_precession(0.5, kN1, b);
    CHECK(cp0.freq_khz == doctest::Approx(57.13).epsilon(2e-3));
    CHECK(cp0.axis.x == doctest::Approx(0.105).epsilon(0.01));
    CHECK(cp0.axis.y == 0.0);
    CHECK(cp0.axis.z == doctest::Approx(0.994).epsilon(0.01));
    const auto cp1 = conditional_precession(1.5, kN1, b);
    CHECK(cp1.freq_khz == doctest::Approx(37.87).epsilon(2e-3));
    CHECK(cp1.axis.x == doctest::Approx(0.475).epsilon(0.01));
    CHECK(cp1.axis.z == doctest::Approx(0.880).epsilon(0.01));
    CHECK(cp0.axis.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("conditional precession at zero field") {
    const auto cp = conditional_precession(0.5, kN1, FieldConfig{0.0});
    CHECK(cp.freq_khz ==
          doctest::Approx(0.5 * std::sqrt(23.5 * 23.5 + 12.0 * 12.0)).epsilon(1e-12));
    CHECK(cp.freq_khz == doctest::Approx(13.19).epsilon(1e-3));
}

TEST_CASE("degenerate precession falls back to +z identity") {
    // s * a_par == larmor frequency and a_perp == 0 makes the frequency vanish
    const auto si = *find_species("29Si");
    const NuclearSpin spin{si, {2.0 * larmor_frequency_khz(si, FieldConfig{50.0}), 0.0}};
    const auto cp = conditional_precession(0.5, spin, FieldConfig{50.0});
    CHECK(cp.degenerate);
    CHECK(cp.freq_khz == 0.0);
    CHECK(cp.axis.z == 1.0);
    const auto r = rotation_from_precession(cp, 17.0);
    CHECK(r.w == 1.0);
    CHECK(r.v.norm() == 0.0);
}

TEST_CASE("rotation from precession") {
    const auto cp = conditional_precession(0.5, kN1, FieldConfig{81.0});
    CHECK(rotation_from_precession(cp, 0.0).w == 1.0);
    const auto r = rotation_from_precession(cp, 5.263);
    CHECK(r.angle() == doctest::Approx(kTwoPi * cycles(cp.freq_khz, 5.263)).epsilon(1e-12));
    CHECK(kTwoPi * cycles(cp.freq_khz, 5.263) == doctest::Approx(kTwoPi * 0.3007).epsilon(1e-3));
    // full turn lands on the other SU(2) sheet
    const auto full = Rotation::from_axis_angle({0.0, 0.0, 1.0}, kTwoPi);
    CHECK(full.w == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("compose basics") {
    const auto rz1 = Rotation::from_axis_angle({0, 0, 1}, 0.4);
    const auto rz2 = Rotation::from_axis_angle({0, 0, 1}, 1.1);
    CHECK(compose(rz2, rz1).angle() == doctest::Approx(1.5).epsilon(1e-12));

    const auto rx = Rotation::from_axis_angle({1, 0, 0}, kPi);
    const auto rz = Rotation::from_axis_angle({0, 0, 1}, kPi);
    const auto ry = compose(rz, rx); // pi about x then pi about z = pi about y up to sign
    CHECK(std::abs(ry.w) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(ry.v.y) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(ry.v.x) < 1e-12);
    CHECK(std::abs(ry.v.z) < 1e-12);
}

TEST_CASE("compose and inverse over random rotations") {
    std::mt19937 rng(12345);
    for (int i = 0; i < 1000; ++i) {
        const auto r = random_rotation(rng);
        const auto id = compose(r, inverse(r));
        CHECK(std::abs(id.w) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(id.v.norm() < 1e-9);

        const auto a = random_rotation(rng);
        const auto b = random_rotation(rng);
        const auto back = compose(inverse(a), compose(a, b));
        CHECK(back.w == doctest::Approx(b.w).epsilon(1e-9));
        CHECK((back.v - b.v).norm() < 1e-9);

        // scalar part of the product equals the half-angle composition identity
        const auto ab = compose(a, b);
        CHECK(ab.w == doctest::Approx(a.w * b.w - a.v.dot(b.v)).epsilon(1e-12));
        CHECK(ab.w * ab.w + ab.v.dot(ab.v) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("compose is associative") {
    std::mt19937 rng(99);
    for (int i = 0; i < 1000; ++i) {
        const auto a = random_rotation(rng);
        const auto b = random_rotation(rng);
        const auto c = random_rotation(rng);
        const auto left = compose(compose(a, b), c);
        const auto right = compose(a, compose(b, c));
        CHECK(left.w == doctest::Approx(right.w).epsilon(1e-12));
        CHECK((left.v - right.v).norm() < 1e-12);
    }
}

TEST_CASE("precession rotations lie in the x-z plane") {
    const FieldConfig b{81.0};
    const auto u0 = rotation_from_precession(conditional_precession(0.5, kN1, b), 3.3);
    const auto u1 = rotation_from_precession(conditional_precession(1.5, kN1, b), 3.3);
    CHECK(u0.v.y == 0.0);
    CHECK(u1.v.y == 0.0);
    // the scalar part of a product of planar rotations is order independent,
    // so the two echo orderings share the same rotation angle
    CHECK(compose(u1, u0).w == doctest::Approx(compose(u0, u1).w).epsilon(1e-15));
}

TEST_CASE("inverse flips the axis, keeps the angle") {
    const auto r = Rotation::from_axis_angle({0.6, 0.0, 0.8}, 1.23);
    const auto ri = inverse(r);
    CHECK(ri.angle() == doctest::Approx(r.angle()).epsilon(1e-12));
    CHECK((ri.axis() + r.axis()).norm() < 1e-12);
    const auto id = inverse(Rotation::identity());
    CHECK(id.w == 1.0);
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS((HyperfineCoupling{0.0, -1.0}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((ElectronSubspace{0.5, 0.5}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((FieldConfig{-1.0}.validate()), std::invalid_argument);
}
