#pragma once

// Matrix-only structural analysis of a weight matrix. From the P-adjacency
// matrix M it derives, per node, the strongly connected component, the layer
// of that component in the condensation DAG, the weakly connected component
// and an isolation flag, then sorts nodes into the order that exposes the
// outer block-diagonal / inner lower-block-triangular form.
//
// Tags in the node attribute table are 1-based, as printed; every other
// index in the library is 0-based.

#include <cstddef>
#include <vector>

#include "blockform/annealing.hpp"
#include "blockform/core_linalg.hpp"
#include "blockform/index_maps.hpp"

namespace blockform {

struct StructuralPredicate {
    enum class Kind { abs_threshold, channel_norm_threshold, classification_based };
    Kind kind = Kind::abs_threshold;
    double epsilon = 0.0;

    static StructuralPredicate abs_threshold(double eps) { return {Kind::abs_threshold, eps}; }
    static StructuralPredicate channel_norm(double eps) { return {Kind::channel_norm_threshold, eps}; }
    static StructuralPredicate from_classification() { return {Kind::classification_based, 0.0}; }
};

struct NodeAttributes {
    std::size_t v_tag = 0;
    std::size_t s_tag = 0;
    std::size_t g_tag = 0;
    std::size_t l_tag = 0;
    std::size_t i_tag = 0;
    std::size_t v_new_tag = 0;

    friend bool operator==(const NodeAttributes&, const NodeAttributes&) = default;
};

/// One row per node, indexed by original node (row r has v_tag == r + 1).
struct NodeAttributeTable {
    std::vector<NodeAttributes> rows;

    /// Rows ordered by V_NewTAG.
    std::vector<NodeAttributes> by_new_index() const;
    friend bool operator==(const NodeAttributeTable&, const NodeAttributeTable&) = default;
};

struct CondensationResult {
    std::size_t k = 0;
    /// k x n indicator: r_c(p, i) = 1 iff node i belongs to SCC p.
    BoolMatrix r_c;
    /// k x k condensation adjacency, zero diagonal.
    BoolMatrix m_c;
};

/// m_ij = P(w_ij). Scalar weights take abs_threshold; bundles take channel_norm_threshold.
BoolMatrix p_adjacency(const Weights& weights, const StructuralPredicate& pred);
/// classification_based: m_ij = 1 iff the edge was kept by annealing.
BoolMatrix p_adjacency(const EdgeClassification& classes);

/// S_TAG per node (1-based), by min-scan over the mutual-reachability matrix.
std::vector<std::size_t> scc_labels(const BoolMatrix& mutual);

/// M_C = (R_C . M . R_C^T) & ~I_k with R_C built from the labels.
CondensationResult condensation(const BoolMatrix& m, const std::vector<std::size_t>& s_tag);

/// L_TAG per SCC (1-based): repeatedly peel SCCs with no unmasked incoming edge.
/// Throws InvariantError if the graph has a cycle.
std::vector<std::size_t> layer_peel(const BoolMatrix& m_c);

/// G_TAG per SCC (1-based) from the closure of M_C | M_C^T.
std::vector<std::size_t> wcc_labels(const BoolMatrix& m_c);

struct SortOptions {
    /// Promote I_TAG ahead of G_TAG so isolated nodes always come last.
    bool isolated_last = false;
};

struct TableAndPermutation {
    NodeAttributeTable table;
    Permutation permutation;
};

/// Fills V_NewTAG by a stable ascending sort on (G, I, L, S, V), or (I, G, L, S, V)
/// with isolated_last. The permutation maps new index -> old index.
TableAndPermutation build_table_and_permutation(NodeAttributeTable attrs, const SortOptions& opts = {});

struct AnalysisResult {
    NodeAttributeTable table;
    CondensationResult condensation;
    Permutation permutation;
    BoolMatrix adjacency;
    std::size_t closure_squarings = 0;
};

/// The full pipeline starting from a Boolean adjacency matrix.
AnalysisResult analyze_adjacency(const BoolMatrix& m, const SortOptions& opts = {});

/// p_adjacency followed by analyze_adjacency.
AnalysisResult analyze(const Weights& weights, const StructuralPredicate& pred, const SortOptions& opts = {});

}  // namespace blockform
