#pragma once

//  Periodic orbit machinery.
//
//  A prime orbit is a closed, aperiodic walk on the directed bonds, stored as its
//  lexicographically minimal rotation. Its amplitude A_p is the plain product of
//  vertex amplitude matrix entries along the cycle (end reflections and sign
//  factors are already inside T), its action length L_p = sum m_{p,i} l_i counts
//  bond traversals, and its frequency is omega_p = pi L_p / L0.
//
//  Repetitions are handled analytically: the composite term (p, nu) carries
//  amplitude A_t = (1/nu) A_p^nu, length nu L_p and scatter order nu |m_p|.
//  Summed over all composite terms up to the order cutoff,
//
//      N(k)   ~ L0 k / pi - 1/2 + deltaN(k),  deltaN = (1/pi) Im sum_t A_t e^{i L_t k}
//      rho(k) = L0/pi + (1/pi) Re sum_t L_t A_t e^{i L_t k}
//      k_n    = pi n / L0 - (2/L0) sum_t (A_t/omega_t) sin(omega_t/2) sin(omega_t n)
//
//  the last being the explicit eigenvalue series of a regular (degree 0) model;
//  these sign conventions are pinned against bisection and staircase oracles.
//
//  Harmonic coefficient families derived from the same data feed the statistics
//  layer: C (level fluctuations), D(m) (m-neighbor spacings), E (two neighbor
//  means), H (energy fluctuations, with the Weyl shift f_E = pi^2 / (12 L0^2)).

#include <complex>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "qgs/graph.hpp"

namespace qgs {

struct PeriodicOrbit {
    std::vector<int> code;  // canonical (lexicographically minimal) rotation
    std::vector<int> m;     // traversals per undirected bond
    int order = 0;          // |m_p| = code length
    double length = 0.0;    // L_p
    double omega = 0.0;     // pi L_p / L0
    std::complex<double> amplitude;  // A_p
};

struct OrbitTerm {
    int prime = -1;  // index into primes()
    int nu = 1;
    std::complex<double> amp;  // (1/nu) A_p^nu
    double length = 0.0;       // nu L_p
    double omega = 0.0;        // pi length / L0
    int order = 0;             // nu |m_p|
    std::vector<int> m;        // nu m_p
};

struct OrbitBudget {
    std::size_t max_orbits = 2'000'000;
    double length_cutoff = std::numeric_limits<double>::infinity();  // optional extra cutoff
    int tail_window = 4;  // extra orders enumerated for the tail estimate
};

// Product of vertex amplitudes along a closed directed bond sequence.
std::complex<double> orbit_amplitude(const std::vector<int>& code, const ScatteringModel& model);

// All prime orbits with order <= m_max (and length <= budget.length_cutoff).
std::vector<PeriodicOrbit> enumerate_prime_orbits(const ScatteringModel& model, int m_max,
                                                  const OrbitBudget& budget = {});

class OrbitEnsemble {
public:
    static OrbitEnsemble build(const ScatteringModel& model, int m_max,
                               const OrbitBudget& budget = {});

    const std::vector<PeriodicOrbit>& primes() const { return primes_; }
    const std::vector<OrbitTerm>& terms() const { return terms_; }
    int max_order() const { return m_max_; }
    double total_length() const { return L0_; }
    int n_bonds() const { return n_bonds_; }
    bool truncated() const { return truncated_; }
    int irregularity_degree() const { return degree_; }
    // Sum of |C| coefficients over orders in (m_max, m_max + tail_window]: an
    // empirical look ahead standing in for the (divergent) full tail.
    double tail_bound() const { return tail_bound_; }

    double staircase_fluctuation(double k) const;  // deltaN(k)
    double density(double k) const;                // rho(k), mean part included
    // (k_n, delta_n); refuses irregular models unless allow_irregular.
    std::pair<double, double> eigenvalue_series(long long n, bool allow_irregular = false) const;

private:
    std::vector<PeriodicOrbit> primes_;
    std::vector<OrbitTerm> terms_;
    int m_max_ = 0;
    int n_bonds_ = 0;
    double L0_ = 0.0;
    int degree_ = 0;
    double tail_bound_ = 0.0;
    bool truncated_ = false;
};

enum class CoefficientKind { C, D, E, H };

struct HarmonicCoefficient {
    std::complex<double> value;  // complex coefficient, phase of A_t included
    double omega = 0.0;
    double phase = 0.0;  // kind specific deterministic offset phi_p
    int term = -1;       // index into ens.terms()
};

// Per composite term:
//   C:    (2/pi)  (A/omega) sin(omega/2),              phase 0
//   D(m): (4/L0)  (A/omega) sin(omega/2) sin(omega m/2), phase omega m/2
//   E:    (1/pi)  (A/omega) sin(omega),                phase pi/2 - omega/2
//   H:    (2pi/L0^2)(A/omega)[(2/omega)sin(omega/2) - cos(omega/2)], phase 0
std::vector<HarmonicCoefficient> expansion_coefficients(const OrbitEnsemble& ens,
                                                        CoefficientKind kind, int m = 1);

// Additive shift that accompanies the H family (mean energy cell correction).
double energy_shift(const OrbitEnsemble& ens);

// Fluctuating part of a coefficient family's series at (possibly fractional)
// index n, in mean spacing units. With z_t = value_t e^{i(omega_t n + phase_t)}:
//   C: delta_n          = -Im sum z_t
//   D: s_{n,m} - m      = -(L0/pi) Re sum z_t   (composition of delta at n, n+m)
//   E: xi_n             = +Re sum z_t           (composition of delta at n, n-1)
// The H family has no such convention here and is rejected.
double series_fluctuation(const OrbitEnsemble& ens, const std::vector<HarmonicCoefficient>& coeffs,
                          CoefficientKind kind, double n);

}  // namespace qgs
