#include "qgs/exp_sum.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qgs/errors.hpp"

namespace qgs {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

}  // namespace

ExponentialSum::ExponentialSum(std::vector<ExpTerm> terms,
                               double length_merge_tol,
                               double coeff_drop_tol) {
    std::sort(terms.begin(), terms.end(),
              [](const ExpTerm& a, const ExpTerm& b) { return a.length < b.length; });
    std::vector<ExpTerm> merged;
    merged.reserve(terms.size());
    for (const ExpTerm& t : terms) {
        if (!merged.empty() && t.length - merged.back().length <= length_merge_tol) {
            merged.back().coeff += t.coeff;
        } else {
            merged.push_back(t);
        }
    }
    double scale = 0.0;
    for (const ExpTerm& t : merged) scale = std::max(scale, std::abs(t.coeff));
    terms_.reserve(merged.size());
    for (const ExpTerm& t : merged) {
        if (std::abs(t.coeff) > coeff_drop_tol * scale) terms_.push_back(t);
    }
}

std::complex<double> ExponentialSum::evaluate(double k) const {
    std::complex<double> acc{0.0, 0.0};
    for (const ExpTerm& t : terms_) acc += t.coeff * std::polar(1.0, t.length * k);
    return acc;
}

std::complex<double> ExponentialSum::evaluate(std::complex<double> z) const {
    std::complex<double> acc{0.0, 0.0};
    for (const ExpTerm& t : terms_) acc += t.coeff * std::exp(kI * (t.length * z));
    return acc;
}

ExponentialSum ExponentialSum::derivative(int order) const {
    std::vector<ExpTerm> out;
    out.reserve(terms_.size());
    for (const ExpTerm& t : terms_) {
        std::complex<double> c = t.coeff * std::pow(kI * t.length, order);
        out.push_back({c, t.length});
    }
    return ExponentialSum(std::move(out));
}

ExponentialSum ExponentialSum::scaled(std::complex<double> factor) const {
    std::vector<ExpTerm> out = terms_;
    for (ExpTerm& t : out) t.coeff *= factor;
    return ExponentialSum(std::move(out));
}

ExponentialSum ExponentialSum::shifted(double shift) const {
    std::vector<ExpTerm> out = terms_;
    for (ExpTerm& t : out) t.length += shift;
    return ExponentialSum(std::move(out));
}

double ExponentialSum::min_length() const {
    return terms_.empty() ? 0.0 : terms_.front().length;
}

double ExponentialSum::max_length() const {
    return terms_.empty() ? 0.0 : terms_.back().length;
}

double ExponentialSum::coefficient_scale() const {
    double scale = 0.0;
    for (const ExpTerm& t : terms_) scale = std::max(scale, std::abs(t.coeff));
    return scale;
}

std::complex<double> ExponentialSum::coefficient_at(double length, double tol) const {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), length - tol,
                               [](const ExpTerm& t, double v) { return t.length < v; });
    std::complex<double> acc{0.0, 0.0};
    for (; it != terms_.end() && it->length <= length + tol; ++it) acc += it->coeff;
    return acc;
}

RealHarmonicSum RealHarmonicSum::fold(const ExponentialSum& centered, double hermit_tol) {
    const std::vector<ExpTerm>& ts = centered.terms();
    const double scale = centered.coefficient_scale();
    const double len_tol = 1e-9;
    std::vector<ExpTerm> folded;
    folded.reserve(ts.size() / 2 + 1);

    std::size_t lo = 0;
    std::size_t hi = ts.size();
    while (lo < hi) {
        const ExpTerm& high = ts[hi - 1];
        if (high.length <= len_tol) {
            // Remaining block is the (at most one after merging) constant term.
            for (std::size_t i = lo; i < hi; ++i) {
                if (std::abs(ts[i].coeff.imag()) > hermit_tol * scale) {
                    throw NumericError("fold: constant term has non-real coefficient");
                }
                folded.push_back({{ts[i].coeff.real(), 0.0}, 0.0});
            }
            break;
        }
        const ExpTerm& low = ts[lo];
        if (std::abs(low.length + high.length) > len_tol * std::max(1.0, high.length)) {
            std::ostringstream msg;
            msg << "fold: unpaired length " << high.length << " vs " << low.length;
            throw NumericError(msg.str());
        }
        if (std::abs(low.coeff - std::conj(high.coeff)) > hermit_tol * scale) {
            std::ostringstream msg;
            msg << "fold: coefficient symmetry violated at length " << high.length;
            throw NumericError(msg.str());
        }
        folded.push_back({high.coeff + std::conj(low.coeff), high.length});
        ++lo;
        --hi;
    }
    std::sort(folded.begin(), folded.end(),
              [](const ExpTerm& a, const ExpTerm& b) { return a.length < b.length; });
    RealHarmonicSum out;
    out.terms_ = std::move(folded);
    return out;
}

double RealHarmonicSum::evaluate(double k) const {
    double acc = 0.0;
    for (const ExpTerm& t : terms_) {
        acc += t.coeff.real() * std::cos(t.length * k) - t.coeff.imag() * std::sin(t.length * k);
    }
    return acc;
}

std::complex<double> RealHarmonicSum::analytic(std::complex<double> z) const {
    const std::complex<double> i{0.0, 1.0};
    std::complex<double> acc{0.0, 0.0};
    for (const ExpTerm& t : terms_) {
        if (t.length == 0.0) {
            acc += t.coeff.real();
        } else {
            acc += 0.5 * (t.coeff * std::exp(i * (t.length * z)) +
                          std::conj(t.coeff) * std::exp(-i * (t.length * z)));
        }
    }
    return acc;
}

RealHarmonicSum RealHarmonicSum::derivative(int order) const {
    const std::complex<double> i{0.0, 1.0};
    std::vector<ExpTerm> out;
    out.reserve(terms_.size());
    double scale = 0.0;
    for (const ExpTerm& t : terms_) {
        std::complex<double> c = t.coeff * std::pow(i * t.length, order);
        scale = std::max(scale, std::abs(c));
        out.push_back({c, t.length});
    }
    std::erase_if(out, [scale](const ExpTerm& t) { return std::abs(t.coeff) <= 1e-15 * scale; });
    RealHarmonicSum r;
    r.terms_ = std::move(out);
    return r;
}

double RealHarmonicSum::max_frequency() const {
    return terms_.empty() ? 0.0 : terms_.back().length;
}

double RealHarmonicSum::amplitude_bound() const {
    double acc = 0.0;
    for (const ExpTerm& t : terms_) acc += std::abs(t.coeff);
    return acc;
}

double RealHarmonicSum::scale() const {
    double s = 0.0;
    for (const ExpTerm& t : terms_) s = std::max(s, std::abs(t.coeff));
    return s;
}

}  // namespace qgs
