#include "qgs/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qgs/errors.hpp"

namespace qgs {

namespace {

using json = nlohmann::json;

std::vector<int> vertex_degrees(const GraphSpec& spec) {
    std::vector<int> deg(spec.vertices.size(), 0);
    for (const Bond& b : spec.bonds) {
        if (b.a >= 0 && b.a < spec.n_vertices()) ++deg[b.a];
        if (b.b >= 0 && b.b < spec.n_vertices()) ++deg[b.b];
    }
    return deg;
}

// Best rational approximation p/q with q <= q_max, by continued fractions.
bool near_rational(double x, int q_max, double rel_tol, int* p_out, int* q_out) {
    double a = x;
    long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    for (int iter = 0; iter < 32; ++iter) {
        long long ai = static_cast<long long>(std::floor(a));
        long long p2 = ai * p1 + p0;
        long long q2 = ai * q1 + q0;
        if (q2 > q_max) break;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
        double frac = a - static_cast<double>(ai);
        if (frac < 1e-15) break;
        a = 1.0 / frac;
    }
    if (q1 == 0) return false;
    double approx = static_cast<double>(p1) / static_cast<double>(q1);
    if (std::abs(x - approx) <= rel_tol * std::abs(x)) {
        *p_out = static_cast<int>(p1);
        *q_out = static_cast<int>(q1);
        return true;
    }
    return false;
}

json rule_to_json(const VertexRule& rule) {
    if (std::holds_alternative<KirchhoffRule>(rule)) return json("kirchhoff");
    if (const auto* refl = std::get_if<ReflectivityRule>(&rule)) {
        return json{{"r", refl->r}};
    }
    const auto& m = std::get<MatrixRule>(rule).m;
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
        }
        rows.push_back(row);
    }
    return json{{"matrix", rows}};
}

VertexRule rule_from_json(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "kirchhoff") return KirchhoffRule{};
        throw IoError("unknown scattering rule: " + j.get<std::string>());
    }
    if (j.contains("r")) return ReflectivityRule{j.at("r").get<double>()};
    if (j.contains("matrix")) {
        const json& rows = j.at("matrix");
        const auto n = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXcd m(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const json& row = rows.at(i);
            if (static_cast<Eigen::Index>(row.size()) != n) {
                throw IoError("scattering matrix rows must form a square matrix");
            }
            for (Eigen::Index c = 0; c < n; ++c) {
                const json& cell = row.at(c);
                m(i, c) = {cell.at(0).get<double>(), cell.at(1).get<double>()};
            }
        }
        return MatrixRule{std::move(m)};
    }
    throw IoError("vertex scattering must be \"kirchhoff\", {\"r\": x} or {\"matrix\": [...]}");
}

}  // namespace

double GraphSpec::total_length() const {
    return std::accumulate(bonds.begin(), bonds.end(), 0.0,
                           [](double acc, const Bond& b) { return acc + b.length; });
}

GraphSpec two_bond(double l1, double l2, double r) {
    GraphSpec spec;
    spec.name = "two_bond";
    spec.bonds = {{0, 1, l1}, {1, 2, l2}};
    Eigen::MatrixXcd dirichlet(1, 1);
    dirichlet(0, 0) = -1.0;
    spec.vertices = {MatrixRule{dirichlet}, ReflectivityRule{r}, MatrixRule{dirichlet}};
    return spec;
}

GraphSpec linear_chain(const std::vector<double>& lengths, const std::vector<double>& rs) {
    if (lengths.size() < 2 || rs.size() + 1 != lengths.size()) {
        throw ConfigError("linear_chain needs n >= 2 lengths and n - 1 reflectivities");
    }
    GraphSpec spec;
    spec.name = "linear_chain";
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        spec.bonds.push_back({static_cast<int>(i), static_cast<int>(i + 1), lengths[i]});
    }
    Eigen::MatrixXcd dirichlet(1, 1);
    dirichlet(0, 0) = -1.0;
    spec.vertices.push_back(MatrixRule{dirichlet});
    for (double r : rs) spec.vertices.push_back(ReflectivityRule{r});
    spec.vertices.push_back(MatrixRule{dirichlet});
    return spec;
}

GraphSpec star(const std::vector<double>& lengths) {
    if (lengths.size() < 2) throw ConfigError("star needs at least 2 legs");
    GraphSpec spec;
    spec.name = "star";
    Eigen::MatrixXcd dirichlet(1, 1);
    dirichlet(0, 0) = -1.0;
    spec.vertices.push_back(KirchhoffRule{});
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        spec.bonds.push_back({0, static_cast<int>(i + 1), lengths[i]});
        spec.vertices.push_back(MatrixRule{dirichlet});
    }
    return spec;
}

GraphSpec complete(const std::vector<double>& lengths) {
    int n = 2;
    while (n * (n - 1) / 2 < static_cast<int>(lengths.size())) ++n;
    if (n * (n - 1) / 2 != static_cast<int>(lengths.size())) {
        throw ConfigError("complete needs n(n-1)/2 lengths for some integer n");
    }
    GraphSpec spec;
    spec.name = "complete";
    std::size_t idx = 0;
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) spec.bonds.push_back({a, b, lengths[idx++]});
    }
    spec.vertices.assign(n, KirchhoffRule{});
    return spec;
}

ValidationReport validate_spec(const GraphSpec& spec) {
    ValidationReport rep;
    auto err = [&rep](const std::string& m) { rep.errors.push_back(m); };
    auto warn = [&rep](const std::string& m) { rep.warnings.push_back(m); };

    if (spec.bonds.empty()) {
        err("no_bonds: spec has no bonds");
        return rep;
    }
    const int nv = spec.n_vertices();
    for (std::size_t i = 0; i < spec.bonds.size(); ++i) {
        const Bond& b = spec.bonds[i];
        std::ostringstream tag;
        tag << "bond " << i;
        if (!(b.length > 0.0) || !std::isfinite(b.length)) {
            err("nonpositive_length: " + tag.str());
        }
        if (b.a < 0 || b.a >= nv || b.b < 0 || b.b >= nv) {
            err("vertex_out_of_range: " + tag.str());
        } else if (b.a == b.b) {
            err("self_loop: " + tag.str());
        }
    }
    if (!rep.errors.empty()) return rep;

    std::vector<int> deg = vertex_degrees(spec);
    for (int v = 0; v < nv; ++v) {
        if (deg[v] == 0) {
            std::ostringstream msg;
            msg << "isolated_vertex: vertex " << v;
            err(msg.str());
        }
    }

    // Connectivity over vertices with nonzero degree.
    std::vector<int> comp(nv, -1);
    std::vector<std::vector<int>> adj(nv);
    for (const Bond& b : spec.bonds) {
        adj[b.a].push_back(b.b);
        adj[b.b].push_back(b.a);
    }
    std::vector<int> stack{spec.bonds.front().a};
    comp[stack.front()] = 0;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int w : adj[v]) {
            if (comp[w] < 0) {
                comp[w] = 0;
                stack.push_back(w);
            }
        }
    }
    for (int v = 0; v < nv; ++v) {
        if (deg[v] > 0 && comp[v] < 0) {
            err("disconnected: graph has more than one component");
            break;
        }
    }

    for (int v = 0; v < nv; ++v) {
        const VertexRule& rule = spec.vertices[v];
        std::ostringstream tag;
        tag << "vertex " << v;
        if (const auto* refl = std::get_if<ReflectivityRule>(&rule)) {
            if (deg[v] != 2) err("reflectivity_needs_valence_2: " + tag.str());
            if (!(std::abs(refl->r) <= 1.0)) err("reflectivity_out_of_range: " + tag.str());
        } else if (const auto* mat = std::get_if<MatrixRule>(&rule)) {
            if (mat->m.rows() != deg[v] || mat->m.cols() != deg[v]) {
                err("matrix_dimension_mismatch: " + tag.str());
            } else {
                Eigen::MatrixXcd gram = mat->m * mat->m.adjoint();
                gram -= Eigen::MatrixXcd::Identity(deg[v], deg[v]);
                if (gram.cwiseAbs().maxCoeff() > 1e-10) {
                    err("nonunitary_matrix: " + tag.str());
                }
            }
        }
    }

    // Near commensurate bond lengths degrade the almost periodic structure; warn.
    for (std::size_t i = 0; i < spec.bonds.size(); ++i) {
        for (std::size_t j = i + 1; j < spec.bonds.size(); ++j) {
            double ratio = spec.bonds[i].length / spec.bonds[j].length;
            int p = 0, q = 0;
            if (near_rational(ratio, 64, 1e-9, &p, &q)) {
                std::ostringstream msg;
                msg << "commensurate_lengths: l[" << i << "]/l[" << j << "] ~ " << p << "/" << q;
                warn(msg.str());
            }
        }
    }
    return rep;
}

std::string spec_to_json(const GraphSpec& spec) {
    json j;
    if (!spec.name.empty()) j["name"] = spec.name;
    json bonds = json::array();
    for (const Bond& b : spec.bonds) {
        bonds.push_back(json{{"a", b.a}, {"b", b.b}, {"length", b.length}});
    }
    j["bonds"] = bonds;
    json vertices = json::array();
    for (int v = 0; v < spec.n_vertices(); ++v) {
        vertices.push_back(json{{"id", v}, {"scattering", rule_to_json(spec.vertices[v])}});
    }
    j["vertices"] = vertices;
    return j.dump(2) + "\n";
}

GraphSpec spec_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(std::string("spec parse failure: ") + e.what());
    }
    try {
        GraphSpec spec;
        spec.name = j.value("name", std::string{});
        int max_vertex = -1;
        for (const json& jb : j.at("bonds")) {
            Bond b{jb.at("a").get<int>(), jb.at("b").get<int>(), jb.at("length").get<double>()};
            max_vertex = std::max({max_vertex, b.a, b.b});
            spec.bonds.push_back(b);
        }
        spec.vertices.assign(max_vertex + 1, KirchhoffRule{});
        if (j.contains("vertices")) {
            for (const json& jv : j.at("vertices")) {
                int id = jv.at("id").get<int>();
                if (id < 0 || id > max_vertex) {
                    throw IoError("vertex id out of range in spec");
                }
                spec.vertices[id] = rule_from_json(jv.at("scattering"));
            }
        }
        return spec;
    } catch (const json::exception& e) {
        throw IoError(std::string("spec schema failure: ") + e.what());
    }
}

GraphSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open spec file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return spec_from_json(buf.str());
}

void save_spec(const GraphSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write spec file: " + path);
    out << spec_to_json(spec);
    if (!out) throw IoError("write failure: " + path);
}

ScatteringModel ScatteringModel::build(const GraphSpec& spec) {
    ValidationReport rep = validate_spec(spec);
    if (!rep.ok()) {
        std::ostringstream msg;
        msg << "invalid graph spec:";
        for (const std::string& e : rep.errors) msg << "\n  " << e;
        throw ConfigError(msg.str());
    }

    ScatteringModel model;
    model.spec_ = spec;
    const int nd = 2 * spec.n_bonds();
    model.directed_lengths_.resize(nd);
    for (int i = 0; i < spec.n_bonds(); ++i) {
        model.directed_lengths_[2 * i] = spec.bonds[i].length;
        model.directed_lengths_[2 * i + 1] = spec.bonds[i].length;
    }
    model.total_length_ = spec.total_length();

    // Incoming directed bonds (head == v) and outgoing (tail == v), both ordered
    // by bond index. This fixes the local basis every vertex rule refers to.
    const int nv = spec.n_vertices();
    std::vector<std::vector<int>> incoming(nv), outgoing(nv);
    for (int i = 0; i < spec.n_bonds(); ++i) {
        const Bond& b = spec.bonds[i];
        outgoing[b.a].push_back(2 * i);
        incoming[b.b].push_back(2 * i);
        outgoing[b.b].push_back(2 * i + 1);
        incoming[b.a].push_back(2 * i + 1);
    }

    model.T_ = Eigen::MatrixXcd::Zero(nd, nd);
    for (int v = 0; v < nv; ++v) {
        const auto& in = incoming[v];
        const auto& out = outgoing[v];
        const int d = static_cast<int>(in.size());
        const VertexRule& rule = spec.vertices[v];
        if (std::holds_alternative<KirchhoffRule>(rule)) {
            for (int oi = 0; oi < d; ++oi) {
                for (int ii = 0; ii < d; ++ii) {
                    double amp = 2.0 / d - (out[oi] == reverse(in[ii]) ? 1.0 : 0.0);
                    model.T_(out[oi], in[ii]) = amp;
                }
            }
        } else if (const auto* refl = std::get_if<ReflectivityRule>(&rule)) {
            const double r = refl->r;
            const double t = std::sqrt(1.0 - r * r);
            model.T_(out[0], in[0]) = r;
            model.T_(out[0], in[1]) = t;
            model.T_(out[1], in[0]) = t;
            model.T_(out[1], in[1]) = -r;
        } else {
            const auto& m = std::get<MatrixRule>(rule).m;
            for (int oi = 0; oi < d; ++oi) {
                for (int ii = 0; ii < d; ++ii) model.T_(out[oi], in[ii]) = m(oi, ii);
            }
        }
    }
    return model;
}

ScatteringModel ScatteringModel::with_matrix(const GraphSpec& spec, const Eigen::MatrixXcd& t) {
    ScatteringModel model = build(spec);
    const int nd = model.n_directed();
    if (t.rows() != nd || t.cols() != nd) {
        throw ConfigError("amplitude matrix must be " + std::to_string(nd) + " x " +
                          std::to_string(nd) + " for this spec");
    }
    Eigen::MatrixXcd gram = t * t.adjoint();
    gram -= Eigen::MatrixXcd::Identity(nd, nd);
    const double defect = gram.cwiseAbs().maxCoeff();
    if (!(defect <= 1e-10)) {
        throw ConfigError("amplitude matrix is not unitary (defect " + std::to_string(defect) + ")");
    }
    model.T_ = t;
    return model;
}

Eigen::MatrixXcd ScatteringModel::at(double k) const {
    Eigen::MatrixXcd s = T_;
    for (int d = 0; d < n_directed(); ++d) {
        s.col(d) *= std::polar(1.0, directed_lengths_[d] * k);
    }
    return s;
}

int ScatteringModel::head(int d) const {
    const Bond& b = spec_.bonds[bond_of(d)];
    return (d & 1) ? b.a : b.b;
}

std::vector<double> ScatteringModel::omegas() const {
    std::vector<double> om;
    om.reserve(spec_.bonds.size());
    const double pi = std::acos(-1.0);
    for (const Bond& b : spec_.bonds) om.push_back(pi * b.length / total_length_);
    return om;
}

double ScatteringModel::unitarity_defect(double k) const {
    Eigen::MatrixXcd s = at(k);
    Eigen::MatrixXcd gram = s * s.adjoint();
    gram -= Eigen::MatrixXcd::Identity(n_directed(), n_directed());
    return gram.cwiseAbs().maxCoeff();
}

}  // namespace qgs
