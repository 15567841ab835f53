#pragma once

// CSV and JSON export. CSV files carry a header row, "." decimal separator,
// LF line endings, and shortest-roundtrip doubles, so identical runs produce
// byte-identical artifacts.

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

#include "dyadic/analysis.hpp"
#include "dyadic/girsanov.hpp"
#include "dyadic/integrate.hpp"
#include "dyadic/markov.hpp"
#include "dyadic/selfsimilar.hpp"
#include "dyadic/tree.hpp"

namespace dyadic {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_path_csv(const SdePath& path, std::ostream& os) {
    os << "time,node_index,value\n";
    for (std::size_t i = 0; i < path.states.size(); ++i)
        for (std::size_t j = 0; j < path.states[i].size(); ++j)
            os << format_double(path.grid.time(i)) << ',' << j << ','
               << format_double(path.states[i][j]) << '\n';
}

enum class MomentKind { Intensity, SquaredIntensity };

inline void write_moments_csv(const MomentTable& table, MomentKind kind, std::ostream& os) {
    os << "time,node_index,mean,variance,n\n";
    const bool sq = kind == MomentKind::SquaredIntensity;
    for (std::size_t i = 0; i < table.grid.n_points(); ++i)
        for (std::size_t j = 0; j < table.n_nodes; ++j) {
            const std::size_t c = table.index(i, j);
            os << format_double(table.grid.time(i)) << ',' << j << ','
               << format_double(sq ? table.mean_xsq[c] : table.mean_x[c]) << ','
               << format_double(sq ? table.var_xsq[c] : table.var_x[c]) << ','
               << table.n_paths << '\n';
        }
}

inline void write_qmatrix_csv(const QMatrix& qm, std::ostream& os) {
    os << "row,col,value\n";
    for (std::size_t s = 0; s < qm.dim; ++s) {
        os << s << ',' << s << ',' << format_double(qm.diag[s]) << '\n';
        for (const auto& [col, v] : qm.off[s])
            os << s << ',' << col << ',' << format_double(v) << '\n';
    }
}

inline void write_forward_csv(const ForwardSolution& sol, std::ostream& os) {
    os << "time,state,value\n";
    for (std::size_t i = 0; i < sol.grid.n_points(); ++i)
        for (std::size_t s = 0; s < sol.dim; ++s)
            os << format_double(sol.grid.time(i)) << ',' << s << ','
               << format_double(sol.at(i, s)) << '\n';
}

inline void write_ledger_csv(const GirsanovLedger& ledger, std::ostream& os) {
    os << "time,M,QV,density\n";
    for (std::size_t i = 0; i < ledger.martingale.size(); ++i)
        os << format_double(ledger.grid.time(i)) << ','
           << format_double(ledger.martingale[i]) << ','
           << format_double(ledger.quadratic_variation[i]) << ','
           << format_double(ledger.density[i]) << '\n';
}

inline void write_comparison_csv(const ComparisonReport& report, const TimeGrid& grid,
                                 const std::vector<NodeId>& state_to_node, std::ostream& os) {
    os << "time,node_index,mc_mean,oracle,std_error,z\n";
    const std::size_t dim = state_to_node.size();
    for (std::size_t i = 0; i < grid.n_points(); ++i)
        for (std::size_t s = 0; s < dim; ++s) {
            const std::size_t cell = i * dim + s;
            os << format_double(grid.time(i)) << ',' << state_to_node[s] << ','
               << format_double(report.mc_value[cell]) << ','
               << format_double(report.oracle_value[cell]) << ','
               << format_double(report.std_error[cell]) << ','
               << (std::isnan(report.z[cell]) ? std::string{} : format_double(report.z[cell]))
               << '\n';
        }
}

inline void write_nonuniqueness_csv(const NonuniquenessReport& report, std::ostream& os) {
    os << "time,l2_distance,energy_selfsimilar,energy_galerkin\n";
    for (std::size_t i = 0; i < report.l2_distance.size(); ++i)
        os << format_double(report.grid.time(i)) << ','
           << format_double(report.l2_distance[i]) << ','
           << format_double(report.energy_selfsimilar[i]) << ','
           << format_double(report.energy_galerkin[i]) << '\n';
}

inline void write_profile_csv(const Tree& tree, const SelfSimilarProfile& profile,
                              std::ostream& os) {
    os << "node_index,generation,coefficient\n";
    for (std::size_t j = 0; j < profile.a.size(); ++j)
        os << j << ',' << tree.generation(j) << ',' << format_double(profile.a[j]) << '\n';
}

/// Tree description for experiment provenance.
inline nlohmann::json tree_json(const Tree& tree) {
    nlohmann::json j;
    j["max_generation"] = tree.max_generation();
    j["arity"] = tree.arity();
    j["sigma"] = tree.sigma();
    j["node_count"] = tree.node_count();
    if (const auto* geo = std::get_if<GeometricLaw>(&tree.config().law)) {
        j["law"] = {{"type", "geometric"}, {"base", geo->base}};
    } else {
        j["law"] = {{"type", "explicit"}};
    }
    std::vector<double> coeff(tree.node_count());
    for (std::size_t i = 0; i < tree.node_count(); ++i) coeff[i] = tree.coeff(i);
    j["coeff"] = coeff;
    return j;
}

} // namespace dyadic
