#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "spintool/gates.hpp"
#include "spintool/resonance.hpp"

using namespace spintool;

namespace {

const NuclearSpecies kSi = *find_species("29Si");
const ElectronSubspace kSub{0.5, 1.5};

SpinSystem paper_system() {
    return {FieldConfig{81.0}, kSub,
            {NuclearSpin{kSi, {-23.5, 12.0}}, NuclearSpin{kSi, {0.2, 8.5}}}};
}

SequenceSpec cpmg(double tau, int n) { return {SequenceKind::Cpmg, tau, n}; }

NuclearSpin random_spin(std::mt19937& rng) {
    std::uniform_real_distribution<double> par(-50.0, 50.0);
    std::uniform_real_distribution<double> perp(0.0, 50.0);
    return {kSi, {par(rng), perp(rng)}};
}

} // namespace

TEST_CASE("basis states and norms") {
    const auto s = BipartiteState::basis_state(2, 1, 0b10u);
    REQUIRE(s.amps.size() == 8);
    CHECK(s.norm() == doctest::Approx(1.0));
    CHECK(std::abs(s.amps[1 * 4 + 2]) == doctest::Approx(1.0));
    CHECK_THROWS_AS(BipartiteState::basis_state(2, 2, 0), std::invalid_argument);
    CHECK_THROWS_AS(BipartiteState::basis_state(2, 0, 4), std::invalid_argument);
}

TEST_CASE("simulation preserves the norm") {
    const auto sys = paper_system();
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> tau(0.1, 20.0);
    for (int i = 0; i < 50; ++i) {
        const auto out = simulate_sequence(BipartiteState::basis_state(2, 0, 1),
                                           sys, cpmg(tau(rng), 8), kEchoFrame);
        CHECK(out.norm() == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("zero delay leaves the state unchanged up to the pulse-train phase") {
    // two pi pulses compose to a 2pi rotation, a global factor of -1
    const auto sys = paper_system();
    const auto in = BipartiteState::basis_state(2, 0, 0b01u);
    const auto out = simulate_sequence(in, sys, cpmg(0.0, 2), PulseFrame{});
    for (std::size_t i = 0; i < in.amps.size(); ++i)
        CHECK(std::abs(out.amps[i] + in.amps[i]) < 1e-12);
}

TEST_CASE("retention reproduces the operator coherence") {
    std::mt19937 rng(314);
    std::uniform_real_distribution<double> b(10.0, 200.0);
    std::uniform_real_distribution<double> tau(0.1, 20.0);
    std::uniform_int_distribution<int> halves(1, 4);
    for (int i = 0; i < 100; ++i) {
        SpinSystem sys{FieldConfig{b(rng)}, kSub, {random_spin(rng), random_spin(rng)}};
        const auto spec = cpmg(tau(rng), 2 * halves(rng));
        const double m = sequence_coherence(sys, spec).total;
        CHECK(retention_probability(sys, spec) ==
              doctest::Approx(0.5 * (1.0 + m)).epsilon(1e-9));
        CHECK(electron_coherence(sys, spec) == doctest::Approx(m).epsilon(1e-9));
    }
}

TEST_CASE("conditional rotations at the strong-spin resonance") {
    // fitted couplings evaluated at their own exact resonance
    const NuclearSpin fitted{kSi, {-23.6, 12.2}};
    const SpinSystem sys{FieldConfig{81.0}, kSub, {fitted}};
    const double te = tau_exact({fitted, kSub, sys.field, 1});
    const auto gate = extract_conditional_rotations(sys, 0, cpmg(te, 4));

    CHECK(gate.rot_u.axis().dot(gate.rot_v.axis()) <= -0.9999);
    const double nx2 = gate.rot_u.axis().x * gate.rot_u.axis().x;
    CHECK(nx2 == doctest::Approx(0.943).epsilon(0.01));
    CHECK(1.0 - nx2 == doctest::Approx(0.057).epsilon(0.2));
    const double angle = gate.rot_u.angle();
    CHECK(angle == doctest::Approx(0.49 * kPi).epsilon(0.021));

    // doubling the pulse number doubles the accumulated conditional angle
    const auto gate8 = extract_conditional_rotations(sys, 0, cpmg(te, 8));
    CHECK(gate8.rot_u.angle() == doctest::Approx(2.0 * angle).epsilon(1e-3));
}

TEST_CASE("weak spectator barely rotates at the strong-spin gate point") {
    const auto sys = paper_system();
    const auto gate = extract_conditional_rotations(sys, 1, cpmg(5.38, 4));
    const double a = gate.rot_u.angle();
    const double effective = std::min(a, kTwoPi - a);
    CHECK(effective < 0.1);
    CHECK(std::abs(gate.rot_u.axis().z) > 0.99);
}

TEST_CASE("gate fidelities at tau = 5.38 us") {
    const auto sys = paper_system();
    CHECK(gate_fidelity(sys, 0, cpmg(5.38, 4), GateTarget::BellFamily) ==
          doctest::Approx(0.9721).epsilon(1e-3));
    CHECK(gate_fidelity(sys, 0, cpmg(5.38, 8), GateTarget::NuclearX) ==
          doctest::Approx(0.9454).epsilon(1e-3));
    CHECK(gate_fidelity(sys, 0, cpmg(5.38, 16), GateTarget::Identity) ==
          doctest::Approx(0.9828).epsilon(1e-3));
}

TEST_CASE("fidelities are insensitive to an uncoupled spectator") {
    const NuclearSpin fitted{kSi, {-23.6, 12.2}};
    const SpinSystem bare{FieldConfig{81.0}, kSub, {fitted}};
    SpinSystem padded = bare;
    padded.nuclei.push_back({kSi, {0.0, 0.0}});
    for (auto target : {GateTarget::BellFamily, GateTarget::NuclearX, GateTarget::Identity}) {
        const double f0 = gate_fidelity(bare, 0, cpmg(5.38, 8), target);
        const double f1 = gate_fidelity(padded, 0, cpmg(5.38, 8), target);
        CHECK(std::abs(f0 - f1) < 1e-9);
    }
}

TEST_CASE("argument validation") {
    const auto sys = paper_system();
    CHECK_THROWS_AS(extract_conditional_rotations(sys, 2, cpmg(5.38, 4)),
                    std::invalid_argument);
    CHECK_THROWS_AS(extract_conditional_rotations(sys, -1, cpmg(5.38, 4)),
                    std::invalid_argument);
    CHECK_THROWS_AS(gate_fidelity(sys, 0, cpmg(5.38, 3), GateTarget::Identity),
                    std::invalid_argument);
    BipartiteState bad = BipartiteState::basis_state(1, 0, 0);
    CHECK_THROWS_AS(simulate_sequence(bad, sys, cpmg(5.38, 4), kEchoFrame),
                    std::invalid_argument);
}
