#include "qgs/secular.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qgs/errors.hpp"

namespace qgs {

namespace {

constexpr double kPi = 3.14159265358979323846;

double mod1(double x) {
    double m = x - std::floor(x);
    return (m >= 1.0) ? 0.0 : m;
}

// Principal phase of a unit modulus complex number, mapped to [0, 2 pi) with
// values within snap below 2 pi wrapped to 0 (they represent a crossing).
double principal_phase(std::complex<double> z, double snap) {
    double th = std::atan2(z.imag(), z.real());
    if (th < 0) th += 2 * kPi;
    if (th >= 2 * kPi - snap) th = 0.0;
    return th;
}

double bisect(const RealHarmonicSum& w, double a, double b, double fa, double tol) {
    for (int it = 0; it < 200 && b - a > tol * std::max(1.0, std::abs(a)); ++it) {
        double m = 0.5 * (a + b);
        double fm = w.evaluate(m);
        if (fm == 0.0) return m;
        if ((fa < 0) == (fm < 0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

double newton_polish(const RealHarmonicSum& w, const RealHarmonicSum& dw, double x, double lo,
                     double hi) {
    for (int it = 0; it < 3; ++it) {
        double f = w.evaluate(x);
        double d = dw.evaluate(x);
        if (d == 0.0) break;
        double next = x - f / d;
        if (next <= lo || next >= hi) break;
        if (std::abs(w.evaluate(next)) <= std::abs(f)) {
            x = next;
        } else {
            break;
        }
    }
    return x;
}

struct Candidate {
    double x;
    bool from_dip;
};

int estimate_multiplicity(const std::vector<RealHarmonicSum>& derivs, double x, int cap) {
    for (int j = 1; j <= cap; ++j) {
        const RealHarmonicSum& d = derivs[static_cast<std::size_t>(j)];
        if (std::abs(d.evaluate(x)) > 1e-7 * d.amplitude_bound()) return j;
    }
    return cap;
}

RootSet assemble(const RealHarmonicSum& w, std::vector<Candidate> cands, double cluster_tol,
                 double mesh_used) {
    std::sort(cands.begin(), cands.end(),
              [](const Candidate& a, const Candidate& b) { return a.x < b.x; });
    std::vector<RealHarmonicSum> derivs{w};
    for (int j = 1; j <= 4; ++j) derivs.push_back(derivs.back().derivative());

    RootSet out;
    out.mesh_used = mesh_used;
    std::size_t i = 0;
    while (i < cands.size()) {
        std::size_t j = i + 1;
        double acc = cands[i].x;
        bool dip = cands[i].from_dip;
        while (j < cands.size() && cands[j].x - cands[j - 1].x <= cluster_tol) {
            acc += cands[j].x;
            dip = dip || cands[j].from_dip;
            ++j;
        }
        double x = acc / static_cast<double>(j - i);
        int mult = estimate_multiplicity(derivs, x, 4);
        if (mult > 1 || dip) out.suspected_degenerate = true;
        out.roots.push_back(x);
        out.multiplicity.push_back(mult);
        i = j;
    }
    return out;
}

RootSet scan(const RealHarmonicSum& w, double k_min, double k_max, double mesh,
             const RootScanOptions& opt, bool with_dips) {
    RootSet empty;
    empty.mesh_used = mesh;
    if (w.empty() || !(k_max > k_min)) return empty;

    const double zero_tol = 1e-12 * w.amplitude_bound();
    const long long steps = std::max<long long>(1, std::llround(std::ceil((k_max - k_min) / mesh)));
    const double h = (k_max - k_min) / static_cast<double>(steps);
    // Interior nodes carry a small fixed offset so that symmetry placed zeros
    // (k = 0 of the carrier, lattice points of equal length graphs) do not land
    // exactly on a node; endpoint nodes stay exact.
    const double jitter = 1.25e-4 * h;
    RealHarmonicSum dw = w.derivative();

    // Sample a point; if the value vanishes to rounding, the point is a root:
    // record it (unless it is k_min, which the half open interval excludes) and
    // probe slightly right until a usable sign appears.
    struct Sample {
        double x;
        double f;
        bool registered;
    };
    std::vector<Candidate> cands;
    auto sample = [&](double x, bool movable) {
        Sample s{x, w.evaluate(x), false};
        for (int tries = 0; std::abs(s.f) <= zero_tol && movable && tries < 4; ++tries) {
            if (tries == 0) {
                if (s.x > k_min) cands.push_back({s.x, false});
                s.registered = true;
            }
            s.x += h * 3e-5;
            s.f = w.evaluate(s.x);
        }
        return s;
    };

    Sample a = sample(k_min, true);
    for (long long s = 1; s <= steps; ++s) {
        double x = (s == steps) ? k_max : k_min + h * static_cast<double>(s) + jitter;
        Sample p = sample(x, s != steps);
        if (s == steps && std::abs(p.f) <= zero_tol) {
            cands.push_back({p.x, false});
            p.registered = true;
        }
        // A zero registered at this node already accounts for the sign change in
        // this cell; the anchor has been probed past it, so later cells are clean.
        const bool bracketable =
            !p.registered && std::abs(p.f) > zero_tol && std::abs(a.f) > zero_tol;
        if (bracketable && (p.f < 0) != (a.f < 0)) {
            double r = bisect(w, a.x, p.x, a.f, opt.tol);
            if (opt.newton_polish) r = newton_polish(w, dw, r, a.x, p.x);
            cands.push_back({r, false});
        }
        a = p;
    }

    if (with_dips) {
        // Tangential (even multiplicity) roots never change sign; look for
        // extrema where |w| collapses.
        RootScanOptions inner = opt;
        inner.newton_polish = true;
        RootSet extrema = scan(dw, k_min, k_max, mesh, inner, false);
        const double dip_tol = opt.dip_rel_tol * w.amplitude_bound();
        for (double x : extrema.roots) {
            if (std::abs(w.evaluate(x)) <= dip_tol) cands.push_back({x, true});
        }
    }
    return assemble(w, std::move(cands), opt.cluster_tol, mesh);
}

}  // namespace

long long RootSet::total_count() const {
    return std::accumulate(multiplicity.begin(), multiplicity.end(), 0LL);
}

SecularDeterminant SecularDeterminant::expand(const ScatteringModel& model) {
    const int nd = model.n_directed();
    if (nd > 16) {
        throw ConfigError("determinant expansion supports at most 16 directed bonds");
    }
    const Eigen::MatrixXcd& T = model.vertex_matrix();
    const std::vector<double>& len = model.directed_lengths();

    std::vector<ExpTerm> terms;
    terms.reserve(std::size_t{1} << nd);
    std::vector<int> idx;
    idx.reserve(nd);
    for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << nd); ++mask) {
        idx.clear();
        double length = 0.0;
        for (int d = 0; d < nd; ++d) {
            if (mask & (std::uint32_t{1} << d)) {
                idx.push_back(d);
                length += len[d];
            }
        }
        std::complex<double> det{1.0, 0.0};
        if (!idx.empty()) {
            const auto m = static_cast<Eigen::Index>(idx.size());
            Eigen::MatrixXcd sub(m, m);
            for (Eigen::Index i = 0; i < m; ++i) {
                for (Eigen::Index j = 0; j < m; ++j) sub(i, j) = T(idx[i], idx[j]);
            }
            det = sub.determinant();
        }
        const double sign = (std::popcount(mask) % 2 == 0) ? 1.0 : -1.0;
        terms.push_back({sign * det, length});
    }

    SecularDeterminant out;
    out.sum_ = ExponentialSum(std::move(terms));

    const double L0 = model.total_length();
    std::complex<double> c0 = out.sum_.coefficient_at(0.0);
    std::complex<double> lead = out.sum_.coefficient_at(2 * L0);
    if (std::abs(c0 - 1.0) > 1e-9) {
        throw NumericError("determinant expansion: constant term is not 1");
    }
    if (std::abs(std::abs(lead) - std::abs(c0)) > 1e-9) {
        throw NumericError("canonicalization failure: |leading| != |trailing| coefficient");
    }

    out.canon_.total_half_length = L0;
    out.canon_.gamma0 = mod1(-std::arg(lead) / (2 * kPi));
    for (const ExpTerm& t : out.sum_.terms()) {
        if (t.length < 1e-9 || t.length > 2 * L0 - 1e-9) continue;
        CanonicalHarmonic h;
        h.magnitude = std::abs(t.coeff);
        h.half_length = 0.5 * t.length;
        h.gamma = mod1(-std::arg(-t.coeff) / (2 * kPi));
        out.canon_.harmonics.push_back(h);
    }

    // Centered, rotated carrier: X(k) = e^{-i(L0 k - pi g0)} Delta(k), real on the axis.
    ExponentialSum centered =
        out.sum_.shifted(-L0).scaled(std::polar(1.0, kPi * out.canon_.gamma0));
    out.real_ = RealHarmonicSum::fold(centered);
    return out;
}

RegularityReport SecularDeterminant::regularity(int max_level) const {
    RegularityReport rep;
    const double L0 = canon_.total_half_length;
    for (int rho = 0; rho <= max_level; ++rho) {
        double s = 0.0;
        for (const CanonicalHarmonic& h : canon_.harmonics) {
            s += h.magnitude * std::pow(h.half_length / L0, rho);
        }
        rep.sigma.push_back(s);
        if (s < 1.0) {
            rep.degree = rho;
            break;
        }
        if (rho == max_level) {
            throw NumericError("regularity: degree exceeds iteration cap");
        }
    }

    double lead_amp = 0.0;
    for (const ExpTerm& t : real_.terms()) {
        if (std::abs(t.length - L0) < 1e-9 * std::max(1.0, L0)) lead_amp = std::abs(t.coeff);
    }
    if (lead_amp == 0.0) throw NumericError("regularity: missing leading harmonic");
    for (int j = 0; j <= max_level; ++j) {
        double s = 0.0;
        for (const ExpTerm& t : real_.terms()) {
            if (t.length >= L0 - 1e-9 * std::max(1.0, L0)) continue;
            s += std::abs(t.coeff) * std::pow(t.length / L0, j);
        }
        rep.centered_ratio.push_back(s / lead_amp);
        rep.guaranteed_level = j;
        if (s / lead_amp < 1.0) break;
    }
    return rep;
}

RootSet find_roots(const RealHarmonicSum& w, double k_min, double k_max,
                   const RootScanOptions& opt) {
    const double freq = std::max(w.max_frequency(), 1e-12);
    return scan(w, k_min, k_max, kPi / (opt.mesh_factor * freq), opt, false);
}

RootSet find_roots(const RealHarmonicSum& w, double k_min, double k_max,
                   const std::function<long long(double)>& exact_count,
                   const RootScanOptions& opt) {
    const long long expect = exact_count(k_max) - exact_count(k_min);
    const double freq = std::max(w.max_frequency(), 1e-12);
    double mesh = kPi / (opt.mesh_factor * freq);
    RootSet best;
    for (int level = 0; level <= opt.max_refinements; ++level) {
        RootSet plain = scan(w, k_min, k_max, mesh, opt, false);
        if (plain.total_count() == expect) return plain;
        RootSet dipped = scan(w, k_min, k_max, mesh, opt, true);
        if (dipped.total_count() == expect) return dipped;
        best = std::move(dipped);
        mesh *= 0.5;
    }
    std::ostringstream msg;
    msg << "find_roots: located " << best.total_count() << " roots in (" << k_min << ", " << k_max
        << "] but the staircase demands " << expect << " (final mesh " << best.mesh_used << ")";
    throw NumericError(msg.str());
}

StaircaseCounter::StaircaseCounter(const ScatteringModel& model, double snap_tol)
    : model_(model), snap_tol_(snap_tol) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(model_.at(0.0), false);
    double base = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        base += principal_phase(es.eigenvalues()[i], snap_tol_);
    }
    theta_base_ = base;
}

StaircaseCounter::Count StaircaseCounter::count(double k) const {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(model_.at(k), false);
    double sum = 0.0;
    bool boundary = false;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const std::complex<double> lam = es.eigenvalues()[i];
        double th = std::atan2(lam.imag(), lam.real());
        if (th < 0) th += 2 * kPi;
        if (std::min(th, 2 * kPi - th) <= snap_tol_) boundary = true;
        sum += principal_phase(lam, snap_tol_);
    }
    const double n_real = (2 * model_.total_length() * k + theta_base_ - sum) / (2 * kPi);
    const long long n = std::llround(n_real);
    if (std::abs(n_real - static_cast<double>(n)) > 1e-6) {
        std::ostringstream msg;
        msg << "staircase_count: winding " << n_real << " is not an integer at k = " << k;
        throw NumericError(msg.str());
    }
    return {n, boundary};
}

double StaircaseCounter::mean_density() const {
    return model_.total_length() / kPi;
}

RootSet find_spectrum(const ScatteringModel& model, const SecularDeterminant& det, double k_min,
                      double k_max, const RootScanOptions& opt) {
    StaircaseCounter counter(model);
    auto count = [&counter](double k) { return counter(k); };
    return find_roots(det.real_form(), k_min, k_max, count, opt);
}

}  // namespace qgs
