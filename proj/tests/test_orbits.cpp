#include "qgs/orbits.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "qgs/errors.hpp"
#include "qgs/graph.hpp"
#include "qgs/secular.hpp"

using namespace qgs;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kL1 = 0.618034;
constexpr double kL2 = 0.381966;

GraphSpec quadrangle_spec() {
    return complete({std::sqrt(101.0) / 10, std::sqrt(103.0) / 10, std::sqrt(107.0) / 10,
                     std::sqrt(109.0) / 10, std::sqrt(113.0) / 10, std::sqrt(127.0) / 10});
}

// Independent prime-cycle census: counts closed aperiodic walks of length m on
// the directed transition graph via Moebius inversion of adjacency traces,
//   primes(m) = (1/m) sum_{d | m} mu(d) tr(Adj^{m/d}),
// never touching the orbit enumerator itself.
using IMat = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;

IMat adjacency_of(const ScatteringModel& model) {
    const int n = model.n_directed();
    IMat a = IMat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (std::abs(model.vertex_matrix()(j, i)) > 1e-15) a(j, i) = 1;
        }
    }
    return a;
}

long long trace_power(const IMat& a, int e) {
    IMat p = a;
    for (int i = 1; i < e; ++i) p = (p * a).eval();
    return p.trace();
}

int mobius(int n) {
    int mu = 1;
    for (int p = 2; p * p <= n; ++p) {
        if (n % p == 0) {
            n /= p;
            if (n % p == 0) return 0;
            mu = -mu;
        }
    }
    if (n > 1) mu = -mu;
    return mu;
}

long long census_primes(const IMat& adj, int m) {
    long long acc = 0;
    for (int d = 1; d <= m; ++d) {
        if (m % d == 0) acc += mobius(d) * trace_power(adj, m / d);
    }
    REQUIRE(acc % m == 0);
    return acc / m;
}

std::map<int, long long> counts_by_order(const std::vector<PeriodicOrbit>& primes) {
    std::map<int, long long> c;
    for (const auto& p : primes) ++c[p.order];
    return c;
}

// Oracle eigenvalues from the secular determinant root finder (grounded in the
// eigenphase staircase), independent of any orbit expansion.
std::vector<double> oracle_roots(const GraphSpec& spec, double k_max) {
    ScatteringModel model = ScatteringModel::build(spec);
    SecularDeterminant det = SecularDeterminant::expand(model);
    RootSet rs = find_spectrum(model, det, 1e-6, k_max);
    for (std::size_t i = 0; i < rs.roots.size(); ++i) REQUIRE(rs.multiplicity[i] == 1);
    return rs.roots;
}

// Folds a C-coefficient list onto effective integer-sampled frequencies in
// (0, pi]: sin(omega n) at integer n equals +-sin(a n) with a = omega mod 2pi
// reflected into [0, pi]. Returns freq -> folded coefficient.
std::map<long long, double> fold_integer_frequencies(
    const std::vector<HarmonicCoefficient>& cs) {
    std::map<long long, double> eff;
    for (const auto& c : cs) {
        double a = std::fmod(c.omega, 2.0 * kPi);
        if (a < 0) a += 2.0 * kPi;
        double sign = 1.0;
        if (a > kPi) {
            a = 2.0 * kPi - a;
            sign = -1.0;
        }
        if (a < 1e-9) continue;  // sin(a n) == 0 at integers
        const long long key = std::llround(a * 1e9);
        eff[key] += sign * c.value.real();
    }
    return eff;
}

}  // namespace

TEST_CASE("prime census matches Moebius inversion of adjacency traces") {
    SUBCASE("two bond chain") {
        ScatteringModel model = ScatteringModel::build(two_bond(kL1, kL2, 0.4));
        auto primes = enumerate_prime_orbits(model, 12);
        auto counts = counts_by_order(primes);
        IMat adj = adjacency_of(model);
        long long total = 0;
        for (int m = 1; m <= 12; ++m) {
            const long long expected = census_primes(adj, m);
            const long long got = counts.count(m) ? counts[m] : 0;
            CAPTURE(m);
            CHECK(got == expected);
            total += got;
        }
        CHECK(total == 23);
        CHECK(static_cast<long long>(primes.size()) == total);
    }
    SUBCASE("complete quadrangle") {
        ScatteringModel model = ScatteringModel::build(quadrangle_spec());
        auto primes = enumerate_prime_orbits(model, 6);
        auto counts = counts_by_order(primes);
        IMat adj = adjacency_of(model);
        for (int m = 1; m <= 6; ++m) {
            const long long expected = census_primes(adj, m);
            const long long got = counts.count(m) ? counts[m] : 0;
            CAPTURE(m);
            CHECK(got == expected);
        }
    }
    SUBCASE("four bond star") {
        ScatteringModel model = ScatteringModel::build(star({1.0, 1.1, 1.2, 1.3}));
        auto primes = enumerate_prime_orbits(model, 8);
        auto counts = counts_by_order(primes);
        IMat adj = adjacency_of(model);
        for (int m = 1; m <= 8; ++m) {
            const long long expected = census_primes(adj, m);
            const long long got = counts.count(m) ? counts[m] : 0;
            CAPTURE(m);
            CHECK(got == expected);
        }
    }
}

TEST_CASE("orbit bookkeeping invariants") {
    ScatteringModel model = ScatteringModel::build(quadrangle_spec());
    auto primes = enumerate_prime_orbits(model, 6);
    const std::vector<double>& omegas = model.omegas();

    for (const auto& p : primes) {
        // Canonical code: minimal rotation, starts at its smallest element.
        const int start = *std::min_element(p.code.begin(), p.code.end());
        CHECK(p.code.front() == start);
        // Order and traversal counts agree.
        CHECK(p.order == static_cast<int>(p.code.size()));
        CHECK(std::accumulate(p.m.begin(), p.m.end(), 0) == p.order);
        // Frequency identity: omega_p = <m_p, Omega>.
        double dot = 0.0;
        for (int i = 0; i < model.n_bonds(); ++i) dot += p.m[i] * omegas[i];
        CHECK(std::abs(dot - p.omega) < 1e-14);
        // Length consistency.
        double len = 0.0;
        for (int d : p.code) len += model.directed_lengths()[d];
        CHECK(p.length == doctest::Approx(len).epsilon(1e-14));
        // Amplitude helper agrees with the stored value.
        CHECK(std::abs(orbit_amplitude(p.code, model) - p.amplitude) < 1e-15);
    }
    // Sorted by (order, code) and unique.
    for (std::size_t i = 1; i < primes.size(); ++i) {
        const bool ordered = primes[i - 1].order < primes[i].order ||
                             (primes[i - 1].order == primes[i].order &&
                              primes[i - 1].code < primes[i].code);
        CHECK(ordered);
    }
}

TEST_CASE("amplitude sums stay below the unitarity budget") {
    // sum over primes of order m of |A_p|^2 never exceeds twice the bond count.
    for (int variant = 0; variant < 2; ++variant) {
        ScatteringModel model =
            variant == 0 ? ScatteringModel::build(quadrangle_spec())
                         : ScatteringModel::build(two_bond(kL1, kL2, 0.8));
        const int m_max = variant == 0 ? 8 : 12;
        auto primes = enumerate_prime_orbits(model, m_max);
        std::map<int, double> power;
        for (const auto& p : primes) power[p.order] += std::norm(p.amplitude);
        for (const auto& [m, s] : power) {
            CAPTURE(variant);
            CAPTURE(m);
            CHECK(s <= 2.0 * model.n_bonds() + 1e-12);
        }
    }
}

TEST_CASE("two bond primes up to order four are the two bounces and the full traversal") {
    const double r = 0.4;
    const double t = std::sqrt(1.0 - r * r);
    ScatteringModel model = ScatteringModel::build(two_bond(kL1, kL2, r));
    auto primes = enumerate_prime_orbits(model, 4);
    REQUIRE(primes.size() == 3);

    // Bounce on the first bond: reflect at the middle (+r), flip at the end (-1).
    CHECK(primes[0].code == std::vector<int>{0, 1});
    CHECK(primes[0].amplitude.real() == doctest::Approx(-r).epsilon(1e-15));
    CHECK(primes[0].amplitude.imag() == 0.0);
    CHECK(primes[0].length == doctest::Approx(2 * kL1).epsilon(1e-15));
    CHECK(primes[0].m == std::vector<int>{2, 0});

    // Bounce on the second bond picks up the opposite reflection sign.
    CHECK(primes[1].code == std::vector<int>{2, 3});
    CHECK(primes[1].amplitude.real() == doctest::Approx(r).epsilon(1e-15));
    CHECK(primes[1].length == doctest::Approx(2 * kL2).epsilon(1e-15));

    // Full traversal: two transmissions, two end flips.
    CHECK(primes[2].code == std::vector<int>{0, 2, 3, 1});
    CHECK(primes[2].amplitude.real() == doctest::Approx(t * t).epsilon(1e-14));
    CHECK(primes[2].length == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(primes[2].omega == doctest::Approx(2 * kPi).epsilon(1e-14));
    CHECK(primes[2].m == std::vector<int>{2, 2});

    // The order-6 mixed orbit aliases onto the first bounce frequency.
    auto primes6 = enumerate_prime_orbits(model, 6);
    auto it = std::find_if(primes6.begin(), primes6.end(), [](const PeriodicOrbit& p) {
        return p.code == std::vector<int>{0, 1, 0, 2, 3, 1};
    });
    REQUIRE(it != primes6.end());
    CHECK(it->amplitude.real() == doctest::Approx(-r * t * t).epsilon(1e-14));
}

TEST_CASE("lossless middle vertex leaves a single prime orbit") {
    ScatteringModel model = ScatteringModel::build(two_bond(kL1, kL2, 0.0));
    auto primes = enumerate_prime_orbits(model, 12);
    REQUIRE(primes.size() == 1);
    CHECK(primes[0].code == std::vector<int>{0, 2, 3, 1});
    CHECK(primes[0].amplitude.real() == doctest::Approx(1.0).epsilon(1e-15));
    // The bounce codes still have well-defined (zero) amplitudes on request.
    CHECK(std::abs(orbit_amplitude({0, 1}, model)) == 0.0);
}

TEST_CASE("eigenvalue series tracks oracle roots within the truncation tail") {
    GraphSpec spec = two_bond(kL1, kL2, 0.4);
    ScatteringModel model = ScatteringModel::build(spec);
    std::vector<double> roots = oracle_roots(spec, 124.3);
    REQUIRE(roots.size() == 39);

    const double L0 = model.total_length();
    double prev_max = 1e9;
    for (int m_max : {4, 8, 12}) {
        OrbitEnsemble ens = OrbitEnsemble::build(model, m_max);
        CHECK(ens.irregularity_degree() == 0);
        CHECK_FALSE(ens.truncated());
        double max_err = 0.0;
        for (std::size_t i = 0; i < roots.size(); ++i) {
            auto [k_n, delta_n] = ens.eigenvalue_series(static_cast<long long>(i) + 1);
            max_err = std::max(max_err, std::abs(k_n - roots[i]));
            // delta_n is the same displacement in mean spacing units.
            CHECK(delta_n ==
                  doctest::Approx((L0 / kPi) * (k_n - kPi * (i + 1.0) / L0)).epsilon(1e-12));
        }
        CAPTURE(m_max);
        // Truncation error shrinks monotonically with the order cutoff...
        CHECK(max_err < prev_max);
        prev_max = max_err;
        // ...and is dominated by the look-ahead tail estimate in spacing units.
        CHECK((L0 / kPi) * max_err <= ens.tail_bound());
        if (m_max == 4) CHECK(max_err == doctest::Approx(0.0984).epsilon(0.05));
        if (m_max == 8) CHECK(max_err == doctest::Approx(0.0436).epsilon(0.05));
        if (m_max == 12) {
            CHECK(max_err == doctest::Approx(0.0221).epsilon(0.05));
            auto [k_1, d1] = ens.eigenvalue_series(1);
            CHECK(std::isfinite(d1));
            CHECK(std::abs(k_1 - 2.8868645133388995) == doctest::Approx(4.17e-3).epsilon(0.05));
        }
    }
}

TEST_CASE("series displacements have zero mean") {
    ScatteringModel model = ScatteringModel::build(two_bond(kL1, kL2, 0.4));
    OrbitEnsemble ens = OrbitEnsemble::build(model, 12);
    double acc = 0.0;
    const int n_max = 10000;
    for (int n = 1; n <= n_max; ++n) acc += ens.eigenvalue_series(n).second;
    CHECK(std::abs(acc / n_max) < 1e-3);
}

TEST_CASE("lossless middle vertex gives the exact lattice spectrum") {
    ScatteringModel model = ScatteringModel::build(two_bond(kL1, kL2, 0.0));
    OrbitEnsemble ens = OrbitEnsemble::build(model, 12);
    const double L0 = model.total_length();
    for (long long n : {1LL, 7LL, 100LL, 12345LL}) {
        auto [k_n, delta_n] = ens.eigenvalue_series(n);
        CHECK(std::abs(k_n - kPi * n / L0) < 1e-12);
        CHECK(std::abs(delta_n) < 1e-12);
    }
    // The counting fluctuation is the sawtooth 1/2 - frac(L0 k / pi): its
    // Fourier series comes out of the traversal repetitions alone.
    OrbitEnsemble wide = OrbitEnsemble::build(model, 40);
    for (int n : {2, 7}) {
        const double k = (n + 0.25) * kPi / L0;
        CHECK(wide.staircase_fluctuation(k) == doctest::Approx(0.25).epsilon(0.1));
        const double k2 = (n + 0.75) * kPi / L0;
        CHECK(wide.staircase_fluctuation(k2) == doctest::Approx(-0.25).epsilon(0.1));
    }
}

TEST_CASE("staircase fluctuation matches the counting oracle between roots") {
    GraphSpec spec = two_bond(kL1, kL2, 0.4);
    ScatteringModel model = ScatteringModel::build(spec);
    OrbitEnsemble ens = OrbitEnsemble::build(model, 12);
    std::vector<double> roots = oracle_roots(spec, 40.0);
    REQUIRE(roots.size() >= 11);

    const double L0 = model.total_length();
    for (std::size_t j = 0; j + 1 < roots.size(); ++j) {
        const double mid = 0.5 * (roots[j] + roots[j + 1]);
        // Exactly j+1 roots below mid: the true fluctuation around the mean.
        const double truth = (j + 1.0) - (L0 * mid / kPi - 0.5);
        CHECK(std::abs(ens.staircase_fluctuation(mid) - truth) < 0.12);
    }
}

TEST_CASE("density integrates to one eigenvalue per mean spacing cell") {
    ScatteringModel model = ScatteringModel::build(two_bond(kL1, kL2, 0.4));
    OrbitEnsemble ens = OrbitEnsemble::build(model, 12);
    const double L0 = model.total_length();
    for (int n : {3, 9}) {
        const double a = kPi * (n - 0.5) / L0;
        const double b = kPi * (n + 0.5) / L0;
        const int steps = 400;  // Simpson rule
        const double h = (b - a) / steps;
        double acc = ens.density(a) + ens.density(b);
        for (int i = 1; i < steps; ++i) {
            acc += ens.density(a + i * h) * (i % 2 ? 4.0 : 2.0);
        }
        const double integral = acc * h / 3.0;
        CAPTURE(n);
        CHECK(integral == doctest::Approx(1.0).epsilon(5e-3));
    }
}

TEST_CASE("irregular models refuse the explicit series unless overridden") {
    ScatteringModel strong = ScatteringModel::build(two_bond(kL1, kL2, 0.8));
    OrbitEnsemble ens = OrbitEnsemble::build(strong, 8);
    CHECK(ens.irregularity_degree() == 1);
    CHECK_THROWS_AS(ens.eigenvalue_series(5), ConfigError);
    auto [k, d] = ens.eigenvalue_series(5, true);
    CHECK(std::isfinite(k));
    CHECK(std::isfinite(d));

    ScatteringModel k4 = ScatteringModel::build(quadrangle_spec());
    OrbitEnsemble ens4 = OrbitEnsemble::build(k4, 6);
    CHECK(ens4.irregularity_degree() == 6);
    CHECK_THROWS_AS(ens4.eigenvalue_series(1), ConfigError);
}

TEST_CASE("orbit budget truncation is flagged") {
    ScatteringModel model = ScatteringModel::build(quadrangle_spec());
    OrbitBudget tight;
    tight.max_orbits = 5;
    auto primes = enumerate_prime_orbits(model, 6, tight);
    CHECK(primes.size() == 5);
    OrbitEnsemble ens = OrbitEnsemble::build(model, 6, tight);
    CHECK(ens.truncated());

    OrbitBudget short_only;
    short_only.length_cutoff = 2.1;  // admits only the shortest bounce orbits
    auto few = enumerate_prime_orbits(model, 6, short_only);
    CHECK_FALSE(few.empty());
    for (const auto& p : few) CHECK(p.length <= 2.1);
}

TEST_CASE("coefficient families carry the documented values and phases") {
    const double r = 0.4;
    const double t = std::sqrt(1.0 - r * r);
    ScatteringModel model = ScatteringModel::build(two_bond(kL1, kL2, r));
    OrbitEnsemble ens = OrbitEnsemble::build(model, 4);
    REQUIRE(ens.terms().size() == 5);  // two bounces (nu=1,2 each) + traversal

    auto cs = expansion_coefficients(ens, CoefficientKind::C);
    auto ds = expansion_coefficients(ens, CoefficientKind::D, 1);
    auto es = expansion_coefficients(ens, CoefficientKind::E);
    auto hs = expansion_coefficients(ens, CoefficientKind::H);
    REQUIRE(cs.size() == 5);

    for (std::size_t i = 0; i < ens.terms().size(); ++i) {
        const OrbitTerm& term = ens.terms()[i];
        const double w = term.omega;
        const double a = term.amp.real();
        CHECK(cs[i].value.real() ==
              doctest::Approx((2 / kPi) * (a / w) * std::sin(w / 2)).epsilon(1e-14));
        CHECK(cs[i].phase == 0.0);
        CHECK(ds[i].value.real() ==
              doctest::Approx((4 / 1.0) * (a / w) * std::sin(w / 2) * std::sin(w / 2))
                  .epsilon(1e-14));
        CHECK(ds[i].phase == doctest::Approx(w / 2).epsilon(1e-14));
        CHECK(es[i].value.real() ==
              doctest::Approx((1 / kPi) * (a / w) * std::sin(w)).epsilon(1e-14));
        CHECK(es[i].phase == doctest::Approx(kPi / 2 - w / 2).epsilon(1e-14));
        CHECK(hs[i].phase == 0.0);
    }

    // The full traversal sits at omega = 2 pi: C and D(1) vanish identically,
    // H reduces to the pure curvature part.
    const std::size_t trav = 4;  // order 4 term sorts last
    CHECK(ens.terms()[trav].omega == doctest::Approx(2 * kPi).epsilon(1e-14));
    CHECK(std::abs(cs[trav].value) < 1e-14);
    CHECK(std::abs(ds[trav].value) < 1e-14);
    CHECK(hs[trav].value.real() == doctest::Approx(t * t).epsilon(1e-10));

    // Energy shift is the Weyl cell correction pi^2 / (12 L0^2).
    CHECK(energy_shift(ens) == doctest::Approx(kPi * kPi / 12.0).epsilon(1e-14));
}

TEST_CASE("spacing and neighbor-mean series compose from the displacement series") {
    ScatteringModel model = ScatteringModel::build(two_bond(kL1, kL2, 0.4));
    OrbitEnsemble ens = OrbitEnsemble::build(model, 12);
    auto cs = expansion_coefficients(ens, CoefficientKind::C);
    auto es = expansion_coefficients(ens, CoefficientKind::E);

    auto delta = [&](double n) { return series_fluctuation(ens, cs, CoefficientKind::C, n); };

    for (int m : {1, 3}) {
        auto ds = expansion_coefficients(ens, CoefficientKind::D, m);
        for (double n : {4.0, 7.3, 55.0}) {
            const double direct = series_fluctuation(ens, ds, CoefficientKind::D, n);
            CHECK(direct == doctest::Approx(delta(n + m) - delta(n)).epsilon(1e-12));
        }
    }
    for (double n : {4.0, 7.3, 55.0}) {
        const double direct = series_fluctuation(ens, es, CoefficientKind::E, n);
        CHECK(direct == doctest::Approx(0.5 * (delta(n) + delta(n - 1))).epsilon(1e-12));
    }
    // The displacement series agrees with the eigenvalue series output.
    for (long long n : {3LL, 11LL}) {
        CHECK(delta(static_cast<double>(n)) ==
              doctest::Approx(ens.eigenvalue_series(n).second).epsilon(1e-12));
    }
    auto hs = expansion_coefficients(ens, CoefficientKind::H);
    CHECK_THROWS_AS(series_fluctuation(ens, hs, CoefficientKind::H, 1.0), ConfigError);
}

TEST_CASE("displacement coefficients survive a least squares refit against oracle roots") {
    GraphSpec spec = two_bond(kL1, kL2, 0.4);
    ScatteringModel model = ScatteringModel::build(spec);
    OrbitEnsemble ens = OrbitEnsemble::build(model, 12);
    auto cs = expansion_coefficients(ens, CoefficientKind::C);

    // Oracle displacements from true roots (the series is never consulted).
    std::vector<double> roots = oracle_roots(spec, 1227.0);
    const double L0 = model.total_length();
    const int n_fit = 380;
    REQUIRE(static_cast<int>(roots.size()) >= n_fit);
    Eigen::VectorXd y(n_fit);
    for (int n = 1; n <= n_fit; ++n) y(n - 1) = (L0 / kPi) * roots[n - 1] - n;

    // Integer sampling folds every omega onto a frequency in (0, pi); lengths
    // here are commensurate enough that several terms alias onto one frequency,
    // so the fit happens in the folded frame.
    auto eff = fold_integer_frequencies(cs);
    std::vector<std::pair<double, double>> modes;  // (freq, folded coefficient)
    for (const auto& [key, v] : eff) modes.emplace_back(key * 1e-9, v);
    std::sort(modes.begin(), modes.end(),
              [](const auto& a, const auto& b) { return std::abs(a.second) > std::abs(b.second); });
    const int n_modes = std::min<int>(6, static_cast<int>(modes.size()));

    Eigen::MatrixXd X(n_fit, n_modes);
    for (int n = 1; n <= n_fit; ++n) {
        for (int j = 0; j < n_modes; ++j) X(n - 1, j) = std::sin(modes[j].first * n);
    }
    Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);

    for (int j = 0; j < n_modes; ++j) {
        CAPTURE(j);
        CAPTURE(modes[j].first);
        // delta_n = -sum C sin(omega n): fitted amplitude == -folded coefficient.
        CHECK(std::abs(beta(j) + modes[j].second) < 0.01);
    }
    // The dominant folded mode sits at the bounce frequency 2 pi l2 and mixes
    // both bounce families with the mixed orbits that alias on top of them.
    CHECK(modes[0].first == doctest::Approx(2 * kPi * kL2).epsilon(1e-9));
    CHECK(std::abs(modes[0].second) == doctest::Approx(0.1347).epsilon(0.02));
}
