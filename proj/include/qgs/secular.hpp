#pragma once

//  Secular determinant of a bond scattering model.
//
//  det(1 - S(k)) expands over principal minors of S(k) = T D(k) into the finite
//  exponential sum
//
//      Delta(k) = sum_{M subset of directed bonds} (-1)^|M| det T[M] exp(i L_M k),
//
//  L_M the sum of directed lengths over M. The constant term is exactly 1, the
//  leading term is det(T) exp(i 2 L0 k) with |det T| = 1, and all lengths lie in
//  [0, 2 L0]. In normalized shape
//
//      Delta(k) = 1 + e^{i 2 (L0 k - pi g0)} - sum_i a_i e^{i 2 (L_i k - pi g_i)},
//
//  with magnitudes a_i >= 0, half lengths L_i in (0, L0) and phases g_i; this is
//  the canonical metadata exposed alongside the raw sum.
//
//  Unitarity forces the self inversive symmetry conj(Delta) = Delta e^{-i2(L0 k - pi g0)},
//  so the rotated function X(k) = e^{-i(L0 k - pi g0)} Delta(k) is real for real k
//  and carries every zero of Delta. Root finding and the derivative hierarchy all
//  operate on W = X folded to nonnegative frequencies; for the two bond benchmark
//  W(k) = 2 [sin(L0 k) - r sin((l1 - l2) k)].
//
//  The staircase counter is mesh free: with theta_j(k) in [0, 2pi) the principal
//  eigenphases of S(k),
//
//      N(k) = [2 L0 k + sum_j theta_j(0) - sum_j theta_j(k)] / 2 pi
//
//  is exactly the number of zeros in (0, k], because arg det S grows like 2 L0 k
//  while each eigenphase crosses 0 (mod 2 pi) precisely at a zero, with positive
//  velocity <psi| diag(l) |psi>.

#include <complex>
#include <functional>
#include <vector>

#include "qgs/exp_sum.hpp"
#include "qgs/graph.hpp"

namespace qgs {

struct CanonicalHarmonic {
    double magnitude = 0.0;    // a_i
    double half_length = 0.0;  // L_i
    double gamma = 0.0;        // g_i in [0, 1)
};

struct CanonicalForm {
    double total_half_length = 0.0;  // L0
    double gamma0 = 0.0;             // leading phase, in [0, 1)
    std::vector<CanonicalHarmonic> harmonics;
    std::size_t order() const { return harmonics.size(); }  // N_Gamma
};

struct RegularityReport {
    // Irregularity degree: smallest rho with sum_i a_i (L_i / L0)^rho < 1.
    int degree = 0;
    std::vector<double> sigma;  // the sums for rho = 0 .. degree
    // Folded amplitude ratios of the centered form; the smallest j with ratio < 1
    // guarantees the j-th derivative is dominated by its leading harmonic.
    std::vector<double> centered_ratio;
    int guaranteed_level = 0;
};

class SecularDeterminant {
public:
    // Expands over all principal minors; requires n_directed <= 16.
    static SecularDeterminant expand(const ScatteringModel& model);

    const ExponentialSum& sum() const { return sum_; }
    const CanonicalForm& canonical() const { return canon_; }
    const RealHarmonicSum& real_form() const { return real_; }
    double total_half_length() const { return canon_.total_half_length; }

    std::complex<double> evaluate(double k) const { return sum_.evaluate(k); }
    double real_secular(double k) const { return real_.evaluate(k); }
    // j-th derivative of the real carrier W; j = 0 returns W itself.
    RealHarmonicSum level_function(int j) const { return j == 0 ? real_ : real_.derivative(j); }

    RegularityReport regularity(int max_level = 200) const;

private:
    ExponentialSum sum_;
    CanonicalForm canon_;
    RealHarmonicSum real_;
};

struct RootScanOptions {
    double mesh_factor = 8.0;  // initial mesh = pi / (mesh_factor * max_frequency)
    int max_refinements = 6;
    double tol = 1e-12;        // bisection window
    bool newton_polish = true;
    double cluster_tol = 1e-9;   // closer roots merge into a multiplicity
    double dip_rel_tol = 1e-8;   // |W| threshold (relative to amplitude bound) at extrema
};

struct RootSet {
    std::vector<double> roots;      // ascending
    std::vector<int> multiplicity;  // parallel to roots
    bool suspected_degenerate = false;
    double mesh_used = 0.0;
    long long total_count() const;
};

// Sign change scan plus bisection and Newton polish on (k_min, k_max].
RootSet find_roots(const RealHarmonicSum& w, double k_min, double k_max,
                   const RootScanOptions& opt = {});

// Same, but verified against an exact interval count (number of roots in (0, k]).
// Failing cells trigger mesh refinement, then a tangency sweep over extrema of w;
// a persistent mismatch throws NumericError.
RootSet find_roots(const RealHarmonicSum& w, double k_min, double k_max,
                   const std::function<long long(double)>& exact_count,
                   const RootScanOptions& opt = {});

class StaircaseCounter {
public:
    explicit StaircaseCounter(const ScatteringModel& model, double snap_tol = 1e-9);

    struct Count {
        long long n = 0;
        bool boundary = false;  // k sits (numerically) on a spectral point
    };
    // Number of spectral points in (0, k]; at a spectral point the upper count.
    Count count(double k) const;
    long long operator()(double k) const { return count(k).n; }
    double mean_density() const;  // L0 / pi

private:
    ScatteringModel model_;
    double theta_base_ = 0.0;  // sum of principal eigenphases of S(0)
    double snap_tol_;
};

// Staircase validated spectrum of the model on (k_min, k_max].
RootSet find_spectrum(const ScatteringModel& model, const SecularDeterminant& det,
                      double k_min, double k_max, const RootScanOptions& opt = {});

}  // namespace qgs
