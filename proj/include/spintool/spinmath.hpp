#pragma once

// Conditional nuclear-spin precession parameters and exact axis-angle
// rotation algebra for an electron spin coupled to weak nuclear spins.
//
// Unit conventions used throughout the library:
//   frequencies  ordinary (cycles), kHz
//   fields       Gauss
//   times        microseconds
//   angles       radians
// Equations written with angular frequencies use omega = 2*pi*f.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace spintool {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// kHz * us = 1e-3 cycles
inline double cycles(double freq_khz, double t_us) {
    return 1e-3 * freq_khz * t_us;
}

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double c) const { return {c * x, c * y, c * z}; }
    Vec3 operator-() const { return {-x, -y, -z}; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
};

struct NuclearSpecies {
    std::string name;
    double gamma_khz_per_g = 0.0; // signed, ordinary frequency per Gauss
};

// Registry of the species the toolkit identifies against.
const std::vector<NuclearSpecies>& species_registry();
std::optional<NuclearSpecies> find_species(const std::string& name);

struct HyperfineCoupling {
    double a_par_khz = 0.0;  // signed
    double a_perp_khz = 0.0; // >= 0 by gauge convention

    void validate() const {
        if (a_perp_khz < 0.0)
            throw std::invalid_argument("HyperfineCoupling: a_perp must be >= 0");
    }
};

struct NuclearSpin {
    NuclearSpecies species;
    HyperfineCoupling coupling;
};

// Ordered pair of electron projections defining the working two-level manifold.
struct ElectronSubspace {
    double s0 = 0.5;
    double s1 = 1.5;

    void validate() const {
        if (s0 == s1)
            throw std::invalid_argument("ElectronSubspace: s0 and s1 must differ");
    }
};

struct FieldConfig {
    double b_gauss = 0.0;

    void validate() const {
        if (b_gauss < 0.0)
            throw std::invalid_argument("FieldConfig: b must be >= 0");
    }
};

// Nuclear precession conditioned on one electron projection.
// axis always lies in the x-z plane; degenerate means freq == 0, in which
// case the axis is +z by convention and any rotation built from it is
// the identity.
struct ConditionalPrecession {
    double freq_khz = 0.0;
    Vec3 axis{0.0, 0.0, 1.0};
    bool degenerate = false;
};

// Half-angle parametrisation of a rotation: w = cos(theta/2),
// v = sin(theta/2) * n. Composition is the quaternion product and
// reproduces the scalar/vector composition identities exactly.
struct Rotation {
    double w = 1.0;
    Vec3 v{};

    double angle() const {
        double a = 2.0 * std::atan2(v.norm(), w);
        if (a >= kTwoPi) a -= kTwoPi;
        return a;
    }
    Vec3 axis() const {
        const double n = v.norm();
        if (n == 0.0) return {0.0, 0.0, 1.0};
        return v * (1.0 / n);
    }
    static Rotation identity() { return {}; }
    static Rotation from_axis_angle(const Vec3& n, double theta);
};

double larmor_frequency_khz(const NuclearSpecies& species, const FieldConfig& field);

ConditionalPrecession conditional_precession(double s, const NuclearSpin& spin,
                                             const FieldConfig& field);

Rotation rotation_from_precession(const ConditionalPrecession& cp, double tau_us);

// Rotation equivalent to applying `first` then `second`.
Rotation compose(const Rotation& second, const Rotation& first);

Rotation inverse(const Rotation& r);

} // namespace spintool
