#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "spintool/resonance.hpp"

using namespace spintool;

namespace {

const NuclearSpecies kSi = *find_species("29Si");
const ElectronSubspace kSub{0.5, 1.5};
const NuclearSpin kN1{kSi, {-23.5, 12.0}};
const NuclearSpin kFitted{kSi, {-23.6, 12.2}};

ResonanceQuery query_at(const NuclearSpin& spin, double b, int k = 1) {
    return {spin, kSub, FieldConfig{b}, k};
}

} // namespace

TEST_CASE("first resonance of the strongly coupled nucleus at 81 G") {
    const auto r = resonance(query_at(kN1, 81.0));
    CHECK(r.tau_zero_us == doctest::Approx(5.2631).epsilon(1e-4));
    CHECK(r.epsilon_tau == doctest::Approx(0.02096).epsilon(1e-3));
    CHECK(r.tau_approx_us == doctest::Approx(5.38).epsilon(2e-3));
    CHECK(r.tau_exact_us == doctest::Approx(5.3871).epsilon(1e-4));
    CHECK(std::abs(r.rel_error) < 0.0026);
}

TEST_CASE("resonance order scales the zero-order time") {
    const auto q1 = query_at(kN1, 81.0, 1);
    for (int k : {2, 3, 5}) {
        auto qk = q1;
        qk.k = k;
        CHECK(tau_zero(qk) == doctest::Approx((2.0 * k - 1.0) * tau_zero(q1)).epsilon(1e-12));
        // exact roots track the odd multiples within the first-order correction
        const double bound = (2.0 * k - 1.0) * std::abs(epsilon_tau(q1)) * tau_zero(q1) * 1.5;
        CHECK(std::abs(tau_exact(qk) - (2.0 * k - 1.0) * tau_zero(q1)) < bound + 1e-9);
    }
}

TEST_CASE("scaling couplings and field together halves the resonance time") {
    const auto r1 = resonance(query_at(kN1, 81.0));
    const NuclearSpin doubled{kSi, {-47.0, 24.0}};
    const auto r2 = resonance(query_at(doubled, 162.0));
    CHECK(r2.tau_zero_us == doctest::Approx(0.5 * r1.tau_zero_us).epsilon(1e-12));
    CHECK(r2.epsilon_tau == doctest::Approx(r1.epsilon_tau).epsilon(1e-12));
    CHECK(r2.tau_exact_us == doctest::Approx(0.5 * r1.tau_exact_us).epsilon(1e-5));
}

TEST_CASE("purely parallel coupling is exact at zero order") {
    const NuclearSpin par{kSi, {-23.5, 0.0}};
    const auto q = query_at(par, 81.0);
    CHECK(epsilon_tau(q) == 0.0);
    CHECK(tau_approx(q) == tau_zero(q));
    CHECK(tau_exact(q) == tau_zero(q));
}

TEST_CASE("block rotation angle is pi at the exact resonance") {
    for (double b : {61.0, 81.0, 120.0, 300.0}) {
        const auto q = query_at(kFitted, b);
        const double te = tau_exact(q);
        const auto u0 = rotation_from_precession(
            conditional_precession(kSub.s0, kFitted, q.field), te);
        const auto u1 = rotation_from_precession(
            conditional_precession(kSub.s1, kFitted, q.field), te);
        CHECK(std::abs(compose(u1, u0).w) < 1e-4);
    }
}

TEST_CASE("critical field of the fitted couplings") {
    const double bc = b_crit(kFitted, kSub);
    CHECK(bc == doctest::Approx(60.5).epsilon(4e-3));
    // the default tightness corresponds to a ~1.17 transverse weighting
    const double factor = 1.0 / std::sqrt((1.0 + kDefaultEpsilonN) * (1.0 + kDefaultEpsilonN) - 1.0);
    CHECK(factor == doctest::Approx(1.17).epsilon(3e-3));
    // relative error lands near 0.3% right at the critical field
    const auto r = resonance(query_at(kFitted, bc));
    CHECK(std::abs(r.rel_error) == doctest::Approx(0.003).epsilon(0.2));
    CHECK(std::abs(epsilon_tau(query_at(kFitted, bc))) == doctest::Approx(0.083).epsilon(0.05));
}

TEST_CASE("critical field error paths") {
    CHECK_THROWS_AS(b_crit({kSi, {1.0, 50.0}}, kSub), std::domain_error);
    CHECK_THROWS_AS(b_crit({{"X", 0.0}, {-23.6, 12.2}}, kSub), std::invalid_argument);
    CHECK_THROWS_AS(b_crit({kSi, {-23.6, -1.0}}, kSub), std::invalid_argument);
    // positive-gamma species still gives a positive field
    const auto c13 = *find_species("13C");
    CHECK(b_crit({c13, {23.6, 12.2}}, kSub) > 0.0);
}

TEST_CASE("error sweep above the critical field") {
    const double bc = b_crit(kFitted, kSub);
    std::vector<double> grid;
    for (int i = 0; i <= 100; ++i) grid.push_back(bc + 4.0 * bc * i / 100.0);
    const auto trace = error_sweep(kFitted, kSub, grid, 1);
    double worst = 0.0;
    for (double v : trace.values) {
        REQUIRE(std::isfinite(v));
        worst = std::max(worst, v);
    }
    CHECK(worst <= 0.0035);
    // the error decays with field: far above threshold it is well below the cap
    CHECK(trace.values.back() < 0.5 * worst);
    const auto serial = error_sweep_serial(kFitted, kSub, grid, 1);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(trace.values[i] == serial.values[i]);
}

TEST_CASE("error sweep validation") {
    CHECK_THROWS_AS(error_sweep(kFitted, kSub, {10.0, 5.0}, 1), std::invalid_argument);
    CHECK_THROWS_AS(error_sweep(kFitted, kSub, {0.0, 5.0}, 1), std::invalid_argument);
    CHECK_THROWS_AS(tau_zero(query_at(kN1, 81.0, 0)), std::invalid_argument);
}
