#pragma once

//  Finite exponential sums
//
//      F(k) = sum_j c_j exp(i L_j k),   c_j complex,  L_j real (signed),
//
//  are the common currency of this library: secular determinants, orbit series and
//  their derivatives are all of this shape. Terms are kept sorted by L_j, duplicate
//  lengths are merged and negligible coefficients pruned, so structural identities
//  (term counts, symmetry of the length set) are meaningful after arithmetic.
//
//  RealHarmonicSum is the Hermitian fold of a centered sum with c(-L) = conj(c(L)):
//
//      W(k) = Re sum_{w >= 0} c'_w exp(i w k),   c'_w = c(w) + conj(c(-w)),
//
//  a real valued almost periodic function. Root finding and the derivative
//  hierarchy operate on this folded form; its termwise derivative is the honest
//  d/dk of the real function, which is not true of one sided complex sums.

#include <complex>
#include <cstddef>
#include <vector>

namespace qgs {

struct ExpTerm {
    std::complex<double> coeff;
    double length = 0.0;
};

class ExponentialSum {
public:
    ExponentialSum() = default;
    explicit ExponentialSum(std::vector<ExpTerm> terms,
                            double length_merge_tol = 1e-9,
                            double coeff_drop_tol = 1e-13);

    std::complex<double> evaluate(double k) const;
    std::complex<double> evaluate(std::complex<double> z) const;

    // Termwise c_j -> (i L_j)^order c_j; the constant term drops out.
    ExponentialSum derivative(int order = 1) const;

    ExponentialSum scaled(std::complex<double> factor) const;
    // Multiply by exp(i shift k), i.e. translate every length by shift.
    ExponentialSum shifted(double shift) const;

    const std::vector<ExpTerm>& terms() const { return terms_; }
    std::size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }
    double min_length() const;
    double max_length() const;
    double coefficient_scale() const;  // max_j |c_j|
    std::complex<double> coefficient_at(double length, double tol = 1e-9) const;

private:
    std::vector<ExpTerm> terms_;  // sorted by length ascending, merged, pruned
};

class RealHarmonicSum {
public:
    RealHarmonicSum() = default;

    // Fold a centered sum whose coefficients satisfy c(-L) = conj(c(L)) within
    // hermit_tol * coefficient_scale. Throws NumericError if the symmetry fails,
    // since then the sum is not real on the axis and no real root set exists.
    static RealHarmonicSum fold(const ExponentialSum& centered, double hermit_tol = 1e-9);

    double evaluate(double k) const;
    // Entire continuation of W; agrees with evaluate on the real axis.
    std::complex<double> analytic(std::complex<double> z) const;
    RealHarmonicSum derivative(int order = 1) const;

    const std::vector<ExpTerm>& terms() const { return terms_; }
    std::size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }
    double max_frequency() const;
    double amplitude_bound() const;  // sum_j |c_j| >= sup |W|
    double scale() const;            // max_j |c_j|

private:
    std::vector<ExpTerm> terms_;  // frequencies ascending, all >= 0
};

}  // namespace qgs
