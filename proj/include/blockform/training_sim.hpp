#pragma once

// Local gradient-update simulator. A training step only touches the
// parameters indexed by the activated state set S(t) in both rows and
// columns; over a whole trace this confines every update to the classes of
// the co-occurrence coupling. The same machinery doubles as a generator of
// matrices with a planted block structure.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "blockform/core_linalg.hpp"

namespace blockform {

/// Activated state sets, one per step. Indices are 0-based and sorted.
struct ActivationTrace {
    std::size_t n = 0;
    std::vector<std::vector<std::size_t>> steps;

    /// Throws InputError on an out-of-range, unsorted or repeated index.
    void validate() const;
};

/// Symmetric, reflexive "activated together at least once" relation.
struct CoOccurrence {
    std::size_t n = 0;
    BoolMatrix relation;
};

struct CouplingPartition {
    std::size_t n = 0;
    /// 0-based class label per state.
    std::vector<std::size_t> class_of;
    /// Members of each class, ascending; class c has the c-th smallest minimum member.
    std::vector<std::vector<std::size_t>> classes;
};

/// Support of x: {s : x_s != 0}.
std::vector<std::size_t> activated_states(std::span<const double> x);

/// W - eta * (M(t) & g_y x^T), where M(t) keeps only S(t) x S(t) and S(t) is the support of x.
/// Entries outside S(t) x S(t) are copied untouched. Each increment is eta * (g_i * x_j).
RealMatrix local_update_step(const RealMatrix& w, std::span<const double> x, std::span<const double> g_y, double eta);

/// In-place form of local_update_step.
void apply_local_update(RealMatrix& w, std::span<const double> x, std::span<const double> g_y, double eta);

CoOccurrence build_co_occurrence(const ActivationTrace& trace);

/// Connected components of the co-occurrence graph, labelled by ascending minimum member.
CouplingPartition coupling_partition(const CoOccurrence& o);

struct InvarianceReport {
    /// (row, col) pairs across distinct classes whose final value differs bitwise from the initial one.
    std::vector<std::pair<std::size_t, std::size_t>> violations;
    bool holds() const noexcept { return violations.empty(); }
};

InvarianceReport verify_block_invariance(const RealMatrix& w0, const RealMatrix& w_final, const CouplingPartition& part);

struct MinimalityReport {
    /// Classes whose induced co-occurrence subgraph is disconnected.
    std::vector<std::size_t> disconnected_classes;
    bool holds() const noexcept { return disconnected_classes.empty(); }
};

MinimalityReport verify_block_minimality(const CoOccurrence& o, const CouplingPartition& part);

struct PlantConfig {
    std::size_t n = 64;
    std::size_t k_blocks = 4;
    std::size_t steps = 2000;
    double eta = 0.1;
    std::uint64_t seed = 1;
    double init_sigma = 0.01;
    /// Probability that a member of the chosen group is active in a step.
    double activation_prob = 0.5;
    /// Probability that a step also activates one state from a different group.
    double cross_group_prob = 0.0;
};

struct PlantedSystem {
    RealMatrix w0;
    RealMatrix w_final;
    ActivationTrace trace;
    /// Planted group of each state (0-based).
    std::vector<std::size_t> group_of;
    std::size_t k_blocks = 0;
};

/// Seeded generator: W0 ~ iid N(0, init_sigma^2); states are shuffled into k_blocks
/// groups of near-equal size; each step picks a group uniformly, activates a random
/// subset of it and applies a local update with Gaussian x and g_y supported on S(t).
PlantedSystem generate_planted_system(const PlantConfig& cfg);

}  // namespace blockform
