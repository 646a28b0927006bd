#pragma once

//  Metric graph model.
//
//  A graph spec is a list of bonds (undirected edges with positive lengths) plus a
//  scattering rule per vertex. Bond i of length l_i carries two directed bonds,
//  2i (a -> b) and 2i+1 (b -> a). A wave of wavenumber k accumulates phase
//  exp(i l k) along a directed bond and scatters at the terminal vertex with a
//  unitary amplitude map between incoming and outgoing directed bonds.
//
//  The bond scattering matrix factorizes as
//
//      S(k) = T D(k),      D(k) = diag(exp(i l_d k)),
//
//  with T the k independent vertex amplitude matrix, built from the per vertex
//  rules: Kirchhoff (continuity + current conservation) gives 2/deg - delta on the
//  reversed bond; a valence-2 energy independent dressing with reflectivity r in
//  [-1, 1] gives the local map [[r, t], [t, -r]], t = sqrt(1 - r^2), with +r on the
//  lower indexed bond; an explicit deg x deg unitary covers everything else
//  (Dirichlet dead ends are the 1 x 1 matrix [[-1]]).
//
//  Eigenvalues of the underlying wave problem are exactly the k with
//  det(1 - S(k)) = 0; everything downstream builds on this model.

#include <complex>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace qgs {

struct Bond {
    int a = 0;
    int b = 0;
    double length = 0.0;
};

struct KirchhoffRule {};
struct ReflectivityRule {
    double r = 0.0;
};
struct MatrixRule {
    Eigen::MatrixXcd m;
};
using VertexRule = std::variant<KirchhoffRule, ReflectivityRule, MatrixRule>;

struct GraphSpec {
    std::string name;
    std::vector<Bond> bonds;
    std::vector<VertexRule> vertices;  // indexed by vertex id

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_bonds() const { return static_cast<int>(bonds.size()); }
    double total_length() const;
};

// Named builders.
GraphSpec two_bond(double l1, double l2, double r);
GraphSpec linear_chain(const std::vector<double>& lengths, const std::vector<double>& rs);
GraphSpec star(const std::vector<double>& lengths);
GraphSpec complete(const std::vector<double>& lengths);

struct ValidationReport {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    bool ok() const { return errors.empty(); }
};

ValidationReport validate_spec(const GraphSpec& spec);

// JSON serialization. Doubles survive a round trip bit exactly.
std::string spec_to_json(const GraphSpec& spec);
GraphSpec spec_from_json(const std::string& text);
GraphSpec load_spec(const std::string& path);
void save_spec(const GraphSpec& spec, const std::string& path);

class ScatteringModel {
public:
    // Validates the spec first; throws ConfigError listing every violation.
    static ScatteringModel build(const GraphSpec& spec);

    // Same metric data as build(spec), but with an explicit amplitude matrix in
    // place of the per vertex assembly. The matrix must be 2 n_bonds square and
    // unitary to 1e-10; throws ConfigError otherwise. Used for dressed models
    // whose amplitudes are not products of local vertex rules.
    static ScatteringModel with_matrix(const GraphSpec& spec, const Eigen::MatrixXcd& t);

    int n_bonds() const { return static_cast<int>(spec_.bonds.size()); }
    int n_directed() const { return 2 * n_bonds(); }
    double total_length() const { return total_length_; }

    const Eigen::MatrixXcd& vertex_matrix() const { return T_; }
    const std::vector<double>& directed_lengths() const { return directed_lengths_; }
    Eigen::MatrixXcd at(double k) const;

    static int reverse(int d) { return d ^ 1; }
    static int bond_of(int d) { return d >> 1; }
    int head(int d) const;  // vertex the directed bond runs into

    // Angular frequencies pi * l_i / total_length, one per undirected bond.
    std::vector<double> omegas() const;
    double unitarity_defect(double k) const;  // max entry of |S S^+ - 1|

    const GraphSpec& spec() const { return spec_; }

private:
    GraphSpec spec_;
    Eigen::MatrixXcd T_;
    std::vector<double> directed_lengths_;
    double total_length_ = 0.0;
};

}  // namespace qgs
