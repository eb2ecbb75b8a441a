#include "spintool/spinmath.hpp"

namespace spintool {

const std::vector<NuclearSpecies>& species_registry() {
    static const std::vector<NuclearSpecies> registry = {
        {"29Si", -0.8465},
        {"13C", +1.0705},
    };
    return registry;
}

std::optional<NuclearSpecies> find_species(const std::string& name) {
    for (const auto& sp : species_registry())
        if (sp.name == name) return sp;
    return std::nullopt;
}

double larmor_frequency_khz(const NuclearSpecies& species, const FieldConfig& field) {
    return species.gamma_khz_per_g * field.b_gauss;
}

ConditionalPrecession conditional_precession(double s, const NuclearSpin& spin,
                                             const FieldConfig& field) {
    spin.coupling.validate();
    field.validate();
    const double f_larmor = larmor_frequency_khz(spin.species, field);
    const double fx = s * spin.coupling.a_perp_khz;
    const double fz = s * spin.coupling.a_par_khz - f_larmor;
    const double freq = std::hypot(fx, fz);

    ConditionalPrecession cp;
    cp.freq_khz = freq;
    if (freq == 0.0) {
        cp.degenerate = true; // axis +z by convention, rotation is identity
        return cp;
    }
    cp.axis = {fx / freq, 0.0, fz / freq};
    return cp;
}

Rotation Rotation::from_axis_angle(const Vec3& n, double theta) {
    const double nn = n.norm();
    if (nn == 0.0) throw std::invalid_argument("Rotation: zero axis");
    const double half = 0.5 * theta;
    return {std::cos(half), n * (std::sin(half) / nn)};
}

Rotation rotation_from_precession(const ConditionalPrecession& cp, double tau_us) {
    if (tau_us < 0.0) throw std::invalid_argument("rotation_from_precession: tau < 0");
    if (cp.degenerate) return Rotation::identity();
    const double theta = kTwoPi * cycles(cp.freq_khz, tau_us);
    return {std::cos(0.5 * theta), cp.axis * std::sin(0.5 * theta)};
}

Rotation compose(const Rotation& second, const Rotation& first) {
    return {second.w * first.w - second.v.dot(first.v),
            first.v * second.w + second.v * first.w + second.v.cross(first.v)};
}

Rotation inverse(const Rotation& r) {
    return {r.w, -r.v};
}

} // namespace spintool
