#pragma once

// File formats. Indices in every text format are 1-based.
//
//   .mtx   coordinate Matrix Market ("real", "integer" or "pattern", general)
//   .csv   dense rows of comma-separated values
//   .bin   8-byte magic "BLKFMAT1", u64 rows, u64 cols, little-endian f64 row-major
//
// Floating values are written in shortest round-trip decimal form, so a
// write followed by a read reproduces every value bit for bit.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "blockform/annealing.hpp"
#include "blockform/core_linalg.hpp"
#include "blockform/index_maps.hpp"
#include "blockform/restructure.hpp"
#include "blockform/structure_analysis.hpp"
#include "blockform/training_sim.hpp"

namespace blockform::io {

namespace fs = std::filesystem;

std::string format_double(double v);
/// Strict parse of a full token; throws InputError.
double parse_double(const std::string& token);

RealMatrix read_matrix(const fs::path& path);
void write_matrix(const fs::path& path, const RealMatrix& m);

/// Pattern-form Matrix Market.
void write_bool_matrix(const fs::path& path, const BoolMatrix& m);
/// Any readable matrix; nonzero entries become set bits.
BoolMatrix read_bool_matrix(const fs::path& path);

/// A channel bundle is a directory holding channels.json ({"n", "k"}) and
/// w1_<g>.mtx, w2_<g>.mtx for g = 1..k/2.
ChannelBundle read_channel_bundle(const fs::path& dir);
void write_channel_bundle(const fs::path& dir, const ChannelBundle& b);

/// A directory is read as a channel bundle, anything else as a single matrix.
Weights read_weights(const fs::path& path);
void write_weights(const fs::path& path, const Weights& w);

/// One step per line, space-separated 1-based indices (blank line = empty step).
ActivationTrace read_trace(const fs::path& path, std::size_t n);
void write_trace(const fs::path& path, const ActivationTrace& trace);

/// Header V_TAG,S_TAG,G_TAG,L_TAG,I_TAG,V_NewTAG; rows sorted by V_NewTAG.
void write_node_table(std::ostream& out, const NodeAttributeTable& table);
void write_node_table(const fs::path& path, const NodeAttributeTable& table);
NodeAttributeTable read_node_table(const fs::path& path);

/// Header new,old; one row per new index.
void write_permutation(const fs::path& path, const Permutation& p);
Permutation read_permutation(const fs::path& path);

/// One vector per line, comma-separated.
std::vector<RealVector> read_vectors(const fs::path& path);
void write_vectors(const fs::path& path, const std::vector<RealVector>& rows);

struct BundleMeta {
    std::size_t n = 0;
    std::size_t block_count = 0;
    /// 0 for scalar blocks, otherwise the channel-sequence length.
    std::size_t k_channels = 0;
    std::string nonlinearity = "identity";
    bool isolated_last = false;
    std::string edge_convention = "paper";
    std::uint64_t updates = 0;
};

struct Bundle {
    RestructuredSystem system;
    BundleMeta meta;
};

/// Directory layout: permutation.csv, blocks/NNN.mtx (or blocks/NNN/ for channel
/// bundles), blocks/NNN.range ("start end", 1-based inclusive new indices),
/// dormant.txt, meta.json.
void write_bundle(const fs::path& dir, const Bundle& bundle);
Bundle read_bundle(const fs::path& dir);

}  // namespace blockform::io
