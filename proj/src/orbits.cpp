#include "qgs/orbits.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qgs/errors.hpp"
#include "qgs/secular.hpp"

namespace qgs {

namespace {

constexpr double kPi = 3.14159265358979323846;

// True iff the code is its own lexicographically minimal rotation and is not a
// power of a shorter word (an equal nontrivial rotation implies periodicity).
bool canonical_prime(const std::vector<int>& code) {
    const int n = static_cast<int>(code.size());
    for (int s = 1; s < n; ++s) {
        for (int i = 0; i < n; ++i) {
            const int a = code[(s + i) % n];
            const int b = code[i];
            if (a < b) return false;
            if (a > b) break;
            if (i == n - 1) return false;
        }
    }
    return true;
}

struct Enumerator {
    const ScatteringModel& model;
    int m_max;
    const OrbitBudget& budget;
    std::vector<std::vector<int>> adj;
    std::vector<PeriodicOrbit> out;
    std::vector<int> path;
    double path_length = 0.0;
    bool truncated = false;

    Enumerator(const ScatteringModel& m, int mm, const OrbitBudget& b)
        : model(m), m_max(mm), budget(b) {
        const Eigen::MatrixXcd& T = model.vertex_matrix();
        adj.resize(model.n_directed());
        for (int i = 0; i < model.n_directed(); ++i) {
            for (int j = 0; j < model.n_directed(); ++j) {
                if (std::abs(T(j, i)) > 1e-15) adj[i].push_back(j);
            }
        }
    }

    void emit() {
        if (!canonical_prime(path)) return;
        if (out.size() >= budget.max_orbits) {
            truncated = true;
            return;
        }
        PeriodicOrbit p;
        p.code = path;
        p.order = static_cast<int>(path.size());
        p.length = path_length;
        p.omega = kPi * p.length / model.total_length();
        p.amplitude = orbit_amplitude(path, model);
        p.m.assign(model.n_bonds(), 0);
        for (int d : path) ++p.m[ScatteringModel::bond_of(d)];
        out.push_back(std::move(p));
    }

    void dfs(int start) {
        if (truncated) return;
        const int last = path.back();
        for (int next : adj[last]) {
            if (next < start) continue;
            if (next == start) emit();
            if (static_cast<int>(path.size()) < m_max) {
                const double l = model.directed_lengths()[next];
                if (path_length + l > budget.length_cutoff) continue;
                path.push_back(next);
                path_length += l;
                dfs(start);
                path_length -= l;
                path.pop_back();
            }
        }
    }

    void run() {
        for (int s = 0; s < model.n_directed() && !truncated; ++s) {
            path.assign(1, s);
            path_length = model.directed_lengths()[s];
            if (path_length <= budget.length_cutoff) dfs(s);
        }
        std::sort(out.begin(), out.end(), [](const PeriodicOrbit& a, const PeriodicOrbit& b) {
            if (a.order != b.order) return a.order < b.order;
            return a.code < b.code;
        });
    }
};

double abs_c_coefficient(std::complex<double> amp, double omega) {
    return std::abs((2.0 / kPi) * (amp / omega) * std::sin(omega / 2.0));
}

}  // namespace

std::complex<double> orbit_amplitude(const std::vector<int>& code, const ScatteringModel& model) {
    if (code.empty()) throw ConfigError("orbit_amplitude: empty code");
    const Eigen::MatrixXcd& T = model.vertex_matrix();
    std::complex<double> amp{1.0, 0.0};
    for (std::size_t i = 0; i < code.size(); ++i) {
        const int from = code[i];
        const int to = code[(i + 1) % code.size()];
        if (from < 0 || from >= model.n_directed() || to < 0 || to >= model.n_directed()) {
            throw ConfigError("orbit_amplitude: directed bond index out of range");
        }
        amp *= T(to, from);
    }
    return amp;
}

std::vector<PeriodicOrbit> enumerate_prime_orbits(const ScatteringModel& model, int m_max,
                                                  const OrbitBudget& budget) {
    if (m_max < 1) throw ConfigError("enumerate_prime_orbits: m_max must be >= 1");
    Enumerator e(model, m_max, budget);
    e.run();
    return std::move(e.out);
}

OrbitEnsemble OrbitEnsemble::build(const ScatteringModel& model, int m_max,
                                   const OrbitBudget& budget) {
    if (m_max < 1) throw ConfigError("OrbitEnsemble: m_max must be >= 1");
    OrbitEnsemble ens;
    ens.m_max_ = m_max;
    ens.L0_ = model.total_length();
    ens.n_bonds_ = model.n_bonds();

    Enumerator e(model, m_max + budget.tail_window, budget);
    e.run();
    ens.truncated_ = e.truncated;

    for (const PeriodicOrbit& p : e.out) {
        if (p.order <= m_max) ens.primes_.push_back(p);
        // Composite (p, nu) terms: series terms up to m_max, tail beyond.
        std::complex<double> amp_pow = p.amplitude;
        for (int nu = 1; nu * p.order <= m_max + budget.tail_window; ++nu) {
            const int order = nu * p.order;
            const std::complex<double> amp = amp_pow / static_cast<double>(nu);
            if (order <= m_max) {
                OrbitTerm t;
                t.prime = static_cast<int>(ens.primes_.size()) - 1;
                t.nu = nu;
                t.amp = amp;
                t.length = nu * p.length;
                t.omega = kPi * t.length / ens.L0_;
                t.order = order;
                t.m.reserve(p.m.size());
                for (int mi : p.m) t.m.push_back(nu * mi);
                ens.terms_.push_back(std::move(t));
            } else {
                ens.tail_bound_ += abs_c_coefficient(amp, kPi * nu * p.length / ens.L0_);
            }
            amp_pow *= p.amplitude;
        }
    }
    std::sort(ens.terms_.begin(), ens.terms_.end(), [](const OrbitTerm& a, const OrbitTerm& b) {
        if (a.order != b.order) return a.order < b.order;
        if (a.prime != b.prime) return a.prime < b.prime;
        return a.nu < b.nu;
    });

    try {
        ens.degree_ = SecularDeterminant::expand(model).regularity().degree;
    } catch (const ConfigError&) {
        ens.degree_ = -1;  // too large to classify here; series callers must override
    }
    return ens;
}

double OrbitEnsemble::staircase_fluctuation(double k) const {
    std::complex<double> acc{0.0, 0.0};
    for (const OrbitTerm& t : terms_) acc += t.amp * std::polar(1.0, t.length * k);
    return acc.imag() / kPi;
}

double OrbitEnsemble::density(double k) const {
    std::complex<double> acc{0.0, 0.0};
    for (const OrbitTerm& t : terms_) acc += t.length * t.amp * std::polar(1.0, t.length * k);
    return L0_ / kPi + acc.real() / kPi;
}

std::pair<double, double> OrbitEnsemble::eigenvalue_series(long long n,
                                                           bool allow_irregular) const {
    if (degree_ != 0 && !allow_irregular) {
        std::ostringstream msg;
        msg << "eigenvalue_series: model has irregularity degree " << degree_
            << "; the explicit series only converges for degree 0 (pass allow_irregular to "
               "evaluate anyway)";
        throw ConfigError(msg.str());
    }
    double corr = 0.0;
    for (const OrbitTerm& t : terms_) {
        const double s = std::sin(t.omega / 2.0) / t.omega;
        corr += s * (t.amp * std::polar(1.0, t.omega * static_cast<double>(n))).imag();
    }
    const double k_n = kPi * static_cast<double>(n) / L0_ - (2.0 / L0_) * corr;
    const double delta_n = -(2.0 / kPi) * corr;
    return {k_n, delta_n};
}

std::vector<HarmonicCoefficient> expansion_coefficients(const OrbitEnsemble& ens,
                                                        CoefficientKind kind, int m) {
    if (ens.terms().empty()) throw ConfigError("expansion_coefficients: empty ensemble");
    if (kind == CoefficientKind::D && m < 1) {
        throw ConfigError("expansion_coefficients: D family needs m >= 1");
    }
    const double L0 = ens.total_length();
    std::vector<HarmonicCoefficient> out;
    out.reserve(ens.terms().size());
    for (std::size_t i = 0; i < ens.terms().size(); ++i) {
        const OrbitTerm& t = ens.terms()[i];
        const double w = t.omega;
        HarmonicCoefficient c;
        c.omega = w;
        c.term = static_cast<int>(i);
        switch (kind) {
            case CoefficientKind::C:
                c.value = (2.0 / kPi) * (t.amp / w) * std::sin(w / 2.0);
                c.phase = 0.0;
                break;
            case CoefficientKind::D:
                c.value = (4.0 / L0) * (t.amp / w) * std::sin(w / 2.0) * std::sin(w * m / 2.0);
                c.phase = w * m / 2.0;
                break;
            case CoefficientKind::E:
                c.value = (1.0 / kPi) * (t.amp / w) * std::sin(w);
                c.phase = kPi / 2.0 - w / 2.0;
                break;
            case CoefficientKind::H:
                c.value = (2.0 * kPi / (L0 * L0)) * (t.amp / w) *
                          ((2.0 / w) * std::sin(w / 2.0) - std::cos(w / 2.0));
                c.phase = 0.0;
                break;
        }
        out.push_back(c);
    }
    return out;
}

double energy_shift(const OrbitEnsemble& ens) {
    const double L0 = ens.total_length();
    return kPi * kPi / (12.0 * L0 * L0);
}

double series_fluctuation(const OrbitEnsemble& ens, const std::vector<HarmonicCoefficient>& coeffs,
                          CoefficientKind kind, double n) {
    std::complex<double> acc{0.0, 0.0};
    for (const HarmonicCoefficient& c : coeffs) {
        acc += c.value * std::polar(1.0, c.omega * n + c.phase);
    }
    switch (kind) {
        case CoefficientKind::C:
            return -acc.imag();
        case CoefficientKind::D:
            return -(ens.total_length() / kPi) * acc.real();
        case CoefficientKind::E:
            return acc.real();
        case CoefficientKind::H:
            break;
    }
    throw ConfigError("series_fluctuation: no series convention for the H family");
}

}  // namespace qgs
