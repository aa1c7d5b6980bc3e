#pragma once

// Restructured inference: permute -> project -> independent sub-operators ->
// embed -> inverse-permute. Routing is pure index arithmetic; each block only
// omits addends that are exactly zero in the annealed matrix, so outputs match
// the dense operator under numeric equality.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "blockform/annealing.hpp"
#include "blockform/core_linalg.hpp"
#include "blockform/index_maps.hpp"
#include "blockform/structure_analysis.hpp"

namespace blockform {

struct Block {
    /// |S| x |S| sub-operator in new-index order (scalar matrix or channel bundle).
    Weights op;
    /// Selects the block's coordinates from the permuted input.
    Projection projection;
    /// Places the block's outputs into the permuted output.
    Embedding embedding;
    /// Local columns ordered by ascending original index; block evaluation
    /// accumulates in this order so it reproduces the dense summation order.
    std::vector<std::size_t> column_order;
};

struct RestructuredSystem {
    std::size_t n = 0;
    Permutation p;
    std::vector<Block> blocks;
    /// Positions (new-index space) of the zero-output placeholder channel.
    Embedding dormant;

    /// Checks shapes, index disjointness and that embedding images plus the dormant
    /// image cover 0..n-1 exactly once. Throws InputError.
    void validate() const;
};

/// One block per weakly connected component with two or more nodes; isolated
/// nodes with a zero self-weight go to the dormant channel (a singleton with a
/// nonzero self-loop becomes a 1x1 block). Throws InputError if the table and
/// permutation disagree or if any entry outside the blocks is nonzero.
RestructuredSystem build_system(const Weights& annealed, const NodeAttributeTable& table, const Permutation& p);

/// Restructured forward pass. sigma is only used by channel-bundle blocks.
RealVector infer(const RestructuredSystem& sys, std::span<const double> x_input,
                 Nonlinearity sigma = Nonlinearity::identity);

/// Dense reference forward pass over unrestructured weights.
RealVector dense_forward(const Weights& w, std::span<const double> x, Nonlinearity sigma = Nonlinearity::identity);

/// Reassembles the block operators into an ambient n x n matrix (original coordinates).
/// Scalar systems only.
RealMatrix assemble_dense(const RestructuredSystem& sys);

struct SubdividedPart {
    /// Block-local output rows [row_begin, row_end).
    std::size_t row_begin = 0;
    std::size_t row_end = 0;
    /// Reads block-local inputs [0, prefix); prefix == row_end.
    std::size_t prefix = 0;
    /// (row_end - row_begin) x prefix slice of the block.
    RealMatrix op;
};

struct SubdividedBlock {
    std::size_t size = 0;
    std::vector<SubdividedPart> parts;
    /// Accumulation order over block-local columns; each part visits the
    /// entries of this order that fall inside its prefix.
    std::vector<std::size_t> column_order;
};

/// Splits a block at the given ascending interior cut positions (each in 1..size-1).
/// Part r covers rows (cut_{r-1}, cut_r] and reads the input prefix up to cut_r.
/// An empty `column_order` means ascending local order; pass Block::column_order
/// to reproduce whole-block evaluation exactly.
/// Throws InputError on unordered cuts or if a nonzero entry lies right of its part's prefix.
SubdividedBlock subdivide_block(const RealMatrix& block, const std::vector<std::size_t>& cuts,
                                std::vector<std::size_t> column_order = {});

/// Cut positions at every change of SCC tag along a block's local order.
std::vector<std::size_t> scc_boundary_cuts(const std::vector<std::size_t>& local_s_tags);

/// Evaluates the parts in order; part r reads only its input prefix.
RealVector infer_subdivided(const SubdividedBlock& sd, std::span<const double> x_block);

/// Applies the (rows = part output range, cols = part input prefix) slice of
/// eta * g x^T to each part.
SubdividedBlock update_subdivided(const SubdividedBlock& sd, std::span<const double> x_block,
                                  std::span<const double> g_block, double eta);

/// Each block receives its sub-rectangle of P (eta g x^T) P^T; the dormant channel receives nothing.
RestructuredSystem redistribute_update(const RestructuredSystem& sys, std::span<const double> x_input,
                                       std::span<const double> g_output, double eta);

struct EquivalenceReport {
    std::size_t trials = 0;
    std::size_t compared = 0;
    double max_abs_deviation = 0.0;
    /// Components where |restructured - reference| > tolerance (exact comparison by default).
    std::size_t mismatches = 0;
};

/// Runs `trials` seeded N(0, 1) inputs through both the restructured and the dense path.
EquivalenceReport verify_equivalence(const RestructuredSystem& sys, const Weights& w_ref, std::size_t trials,
                                     std::uint64_t seed, Nonlinearity sigma = Nonlinearity::identity,
                                     double tolerance = 0.0);

}  // namespace blockform
