#pragma once

// Truncated tree of eddies: breadth-first indexing, per-node cascade
// coefficients, and the generation-(N+1) ghost coefficients that survive
// truncation inside correction and dissipation terms.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dyadic/errors.hpp"

namespace dyadic {

using NodeId = std::size_t;

/// c_j = base^{|j|} for every non-root node.
struct GeometricLaw {
    double base = 2.0;
};

/// One coefficient per node of generation <= N+1, breadth-first. The rows
/// beyond generation N supply the ghost coefficients.
struct ExplicitLaw {
    std::vector<double> coeff;
};

using CoeffLaw = std::variant<GeometricLaw, ExplicitLaw>;

struct TreeConfig {
    int max_generation = 1;       // N >= 0
    int arity = 2;                // d >= 1, children per node
    CoeffLaw law = GeometricLaw{};
    double sigma = 1.0;           // noise intensity, != 0
};

/// Number of nodes of a complete arity-d tree truncated at generation n.
inline std::size_t tree_node_count(int max_generation, int arity) {
    std::size_t count = 0, level = 1;
    for (int g = 0; g <= max_generation; ++g) {
        count += level;
        level *= static_cast<std::size_t>(arity);
    }
    return count;
}

class Tree {
public:
    const TreeConfig& config() const { return config_; }
    std::size_t node_count() const { return coeff_.size(); }
    int arity() const { return config_.arity; }
    int max_generation() const { return config_.max_generation; }
    double sigma() const { return config_.sigma; }

    int generation(NodeId j) const { return generation_[check(j)]; }
    double coeff(NodeId j) const { return coeff_[check(j)]; }

    bool has_children(NodeId j) const {
        return static_cast<std::size_t>(arity()) * j + 1 < node_count();
    }
    NodeId first_child(NodeId j) const { return static_cast<std::size_t>(arity()) * j + 1; }
    NodeId parent(NodeId j) const { return (j - 1) / static_cast<std::size_t>(arity()); }

    /// First node index of a generation (g <= N).
    std::size_t generation_begin(int g) const { return gen_begin_[static_cast<std::size_t>(g)]; }
    std::size_t generation_end(int g) const { return gen_begin_[static_cast<std::size_t>(g) + 1]; }

    /// Coefficients of the unmaterialized generation-(N+1) children; empty
    /// unless |j| = N.
    std::span<const double> ghost_coeff(NodeId j) const {
        check(j);
        if (generation_[j] != max_generation()) return {};
        return {ghost_.data() + static_cast<std::size_t>(arity()) * (j - generation_begin(max_generation())),
                static_cast<std::size_t>(arity())};
    }

    double ghost_sq_sum(NodeId j) const {
        check(j);
        return generation_[j] == max_generation()
                   ? ghost_sq_sum_[j - generation_begin(max_generation())]
                   : 0.0;
    }

    /// c_j^2 + sum of squared children coefficients (ghosts at the boundary).
    double correction_coeff(NodeId j) const { return corr_full_[check(j)]; }
    /// The part of correction_coeff generated by the Brownian motions that
    /// actually act on the truncated state (edges between two non-root nodes).
    double correction_coeff_interior(NodeId j) const { return corr_interior_[check(j)]; }
    /// Remainder: the root edge at generation 1 and the ghost edges at
    /// generation N. Also the per-node energy leak coefficient.
    double correction_coeff_boundary(NodeId j) const { return corr_boundary_[check(j)]; }

private:
    friend Tree build_tree(const TreeConfig&);

    NodeId check(NodeId j) const {
        if (j >= node_count()) throw std::invalid_argument("node id out of range");
        return j;
    }

    TreeConfig config_;
    std::vector<int> generation_;
    std::vector<double> coeff_;
    std::vector<std::size_t> gen_begin_;  // size N+2
    std::vector<double> ghost_;           // arity values per generation-N node
    std::vector<double> ghost_sq_sum_;    // per generation-N node
    std::vector<double> corr_full_, corr_interior_, corr_boundary_;
};

inline Tree build_tree(const TreeConfig& config) {
    const int nn = config.max_generation;
    const int d = config.arity;
    if (nn < 0) throw config_error("max_generation must be >= 0, got " + std::to_string(nn));
    if (d < 1) throw config_error("arity must be >= 1, got " + std::to_string(d));
    if (config.sigma == 0.0) throw config_error("sigma must be nonzero");

    const std::size_t count = tree_node_count(nn, d);
    const std::size_t extended = tree_node_count(nn + 1, d);

    Tree tree;
    tree.config_ = config;
    tree.generation_.resize(count);
    tree.gen_begin_.resize(static_cast<std::size_t>(nn) + 2);
    {
        std::size_t begin = 0, level = 1;
        for (int g = 0; g <= nn; ++g) {
            tree.gen_begin_[static_cast<std::size_t>(g)] = begin;
            for (std::size_t i = begin; i < begin + level; ++i)
                tree.generation_[i] = g;
            begin += level;
            level *= static_cast<std::size_t>(d);
        }
        tree.gen_begin_[static_cast<std::size_t>(nn) + 1] = begin;
    }

    // Per-node coefficients over the extended (N+1) range; the tail becomes
    // the ghost values.
    std::vector<double> ext(extended);
    if (const auto* geo = std::get_if<GeometricLaw>(&config.law)) {
        if (!(geo->base > 1.0))
            throw config_error("geometric law base must be > 1, got " + std::to_string(geo->base));
        ext[0] = 0.0;
        std::size_t begin = 1, level = static_cast<std::size_t>(d);
        for (int g = 1; g <= nn + 1; ++g) {
            const double c = std::pow(geo->base, static_cast<double>(g));
            for (std::size_t i = begin; i < begin + level; ++i) ext[i] = c;
            begin += level;
            level *= static_cast<std::size_t>(d);
        }
    } else {
        const auto& list = std::get<ExplicitLaw>(config.law).coeff;
        if (list.size() != extended)
            throw config_error("explicit law must list coefficients for every node of generation <= N+1 (" +
                               std::to_string(extended) + " values), got " + std::to_string(list.size()));
        if (list[0] != 0.0)
            throw config_error("explicit law root coefficient must be 0 (c_0 = 0 is fixed)");
        for (std::size_t i = 1; i < list.size(); ++i)
            if (!(list[i] > 0.0))
                throw config_error("explicit law coefficient at node " + std::to_string(i) +
                                   " must be positive");
        ext = list;
    }

    tree.coeff_.assign(ext.begin(), ext.begin() + static_cast<std::ptrdiff_t>(count));
    tree.ghost_.assign(ext.begin() + static_cast<std::ptrdiff_t>(count), ext.end());
    const std::size_t boundary = count - tree.gen_begin_[static_cast<std::size_t>(nn)];
    tree.ghost_sq_sum_.resize(boundary);
    for (std::size_t i = 0; i < boundary; ++i) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) {
            const double g = tree.ghost_[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)];
            s += g * g;
        }
        tree.ghost_sq_sum_[i] = s;
    }

    tree.corr_full_.resize(count);
    tree.corr_interior_.resize(count);
    tree.corr_boundary_.resize(count);
    for (std::size_t j = 0; j < count; ++j) {
        const double cj2 = tree.coeff_[j] * tree.coeff_[j];
        double child_sq = 0.0;
        if (tree.has_children(j)) {
            for (int k = 0; k < d; ++k) {
                const double ck = tree.coeff_[tree.first_child(j) + static_cast<std::size_t>(k)];
                child_sq += ck * ck;
            }
        }
        const int g = tree.generation_[j];
        const double ghost_sq = tree.ghost_sq_sum(j);
        tree.corr_full_[j] = cj2 + (g == nn ? ghost_sq : child_sq);
        tree.corr_interior_[j] = (g >= 2 ? cj2 : 0.0) + child_sq;
        tree.corr_boundary_[j] = (g == 1 ? cj2 : 0.0) + ghost_sq;
    }
    tree.corr_full_[0] = 0.0;
    tree.corr_interior_[0] = 0.0;
    tree.corr_boundary_[0] = 0.0;
    return tree;
}

/// The unique father, none at the root.
inline std::optional<NodeId> parent_of(const Tree& tree, NodeId j) {
    if (j >= tree.node_count()) throw std::invalid_argument("node id out of range");
    if (j == 0) return std::nullopt;
    return tree.parent(j);
}

/// Offspring ids; empty at generation N.
inline std::vector<NodeId> children_of(const Tree& tree, NodeId j) {
    if (j >= tree.node_count()) throw std::invalid_argument("node id out of range");
    std::vector<NodeId> out;
    if (!tree.has_children(j)) return out;
    out.reserve(static_cast<std::size_t>(tree.arity()));
    for (int k = 0; k < tree.arity(); ++k)
        out.push_back(tree.first_child(j) + static_cast<std::size_t>(k));
    return out;
}

} // namespace dyadic
