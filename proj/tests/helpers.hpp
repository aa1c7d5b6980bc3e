#pragma once

#include <bit>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "blockform/core_linalg.hpp"
#include "oracles.hpp"

namespace testing {

inline bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

inline blockform::BoolMatrix to_bool(const oracle::Dense& a) {
    blockform::BoolMatrix m(a.size(), a.empty() ? 0 : a[0].size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j)
            if (a[i][j]) m.set(i, j);
    return m;
}

inline oracle::Dense to_dense(const blockform::BoolMatrix& m) {
    oracle::Dense a(m.rows(), std::vector<int>(m.cols(), 0));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) a[i][j] = m.test(i, j) ? 1 : 0;
    return a;
}

/// The 18-node example graph: for each node (1-based) the columns set in its row.
inline const std::vector<std::vector<std::size_t>>& example_rows() {
    static const std::vector<std::vector<std::size_t>> rows = {
        {3}, {1}, {2}, {5}, {3, 4}, {7}, {6, 13}, {16}, {}, {2, 4, 18}, {17}, {13}, {12, 14}, {15}, {14}, {8}, {5, 11}, {10}};
    return rows;
}

inline blockform::BoolMatrix example_adjacency() {
    blockform::BoolMatrix m(18);
    for (std::size_t i = 0; i < 18; ++i)
        for (auto j : example_rows()[i]) m.set(i, j - 1);
    return m;
}

inline blockform::RealMatrix example_weights() {
    blockform::RealMatrix w(18, 18);
    for (std::size_t i = 0; i < 18; ++i)
        for (auto j : example_rows()[i]) w(i, j - 1) = 1.0;
    return w;
}

/// Golden node attribute rows in new-index order: V, S, G, L, I, New.
inline const std::vector<std::vector<std::size_t>>& example_golden() {
    static const std::vector<std::vector<std::size_t>> rows = {
        {1, 1, 1, 1, 0, 1},   {2, 1, 1, 1, 0, 2},   {3, 1, 1, 1, 0, 3},    {4, 2, 1, 2, 0, 4},   {5, 2, 1, 2, 0, 5},
        {10, 6, 1, 3, 0, 6},  {18, 6, 1, 3, 0, 7},  {11, 7, 1, 3, 0, 8},   {17, 7, 1, 3, 0, 9},  {14, 9, 2, 1, 0, 10},
        {15, 9, 2, 1, 0, 11}, {12, 8, 2, 2, 0, 12}, {13, 8, 2, 2, 0, 13},  {6, 3, 2, 3, 0, 14},  {7, 3, 2, 3, 0, 15},
        {8, 4, 3, 1, 0, 16},  {16, 4, 3, 1, 0, 17}, {9, 5, 4, 1, 1, 18}};
    return rows;
}

inline blockform::RealMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::normal_distribution<double> d(0.0, 1.0);
    blockform::RealMatrix m(rows, cols);
    for (auto& v : m.data()) v = d(rng);
    return m;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

inline std::vector<std::vector<double>> to_rows(const blockform::RealMatrix& m) {
    std::vector<std::vector<double>> r(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) r[i].assign(m.row(i).begin(), m.row(i).end());
    return r;
}

/// Sparse random weights whose edges stay inside randomly assigned groups, so the
/// matrix has several weak components (and usually some isolated nodes).
inline blockform::RealMatrix random_grouped_matrix(std::size_t n, std::size_t groups, double density,
                                                   std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, groups - 1);
    std::bernoulli_distribution edge(density);
    std::normal_distribution<double> value(0.0, 1.0);
    std::vector<std::size_t> group(n);
    for (auto& g : group) g = pick(rng);
    blockform::RealMatrix w(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && group[i] == group[j] && edge(rng)) w(i, j) = value(rng);
    return w;
}

}  // namespace testing
