#pragma once

// Index-map operators: a total bijection (Permutation) and the partial
// injections used to route vectors into and out of sub-operators
// (Projection, Embedding). All are value tables over 0-based indices;
// none is ever materialized as a dense matrix.

#include <cstddef>
#include <span>
#include <vector>

#include "blockform/core_linalg.hpp"

namespace blockform {

class Permutation {
public:
    Permutation() = default;
    /// Entry o holds the source index s_o that lands at target position o.
    explicit Permutation(std::vector<std::size_t> target_to_source);

    static Permutation identity(std::size_t n);

    std::size_t size() const noexcept { return map_.size(); }
    std::size_t source_of(std::size_t target) const { return map_[target]; }
    const std::vector<std::size_t>& target_to_source() const noexcept { return map_; }

    Permutation inverse() const;
    /// (this o inner)(o) = this(inner(o)).
    Permutation compose(const Permutation& inner) const;

    /// out[o] = in[p(o)]
    RealVector gather(std::span<const double> in) const;
    /// out[p(o)] = in[o]; the inverse of gather.
    RealVector scatter(std::span<const double> in) const;

    friend bool operator==(const Permutation&, const Permutation&) = default;

private:
    std::vector<std::size_t> map_;
};

/// Selects k distinct coordinates out of an n-vector: out[r] = x[select[r]].
class Projection {
public:
    Projection() = default;
    Projection(std::size_t ambient, std::vector<std::size_t> select);

    /// The contiguous range [begin, end).
    static Projection range(std::size_t ambient, std::size_t begin, std::size_t end);

    std::size_t size() const noexcept { return select_.size(); }
    std::size_t ambient() const noexcept { return ambient_; }
    const std::vector<std::size_t>& indices() const noexcept { return select_; }

    RealVector apply(std::span<const double> x) const;

    friend bool operator==(const Projection&, const Projection&) = default;

private:
    std::size_t ambient_ = 0;
    std::vector<std::size_t> select_;
};

/// Places k values at distinct coordinates of an n-vector: y[place[r]] = v[r].
class Embedding {
public:
    Embedding() = default;
    Embedding(std::size_t ambient, std::vector<std::size_t> place);

    static Embedding range(std::size_t ambient, std::size_t begin, std::size_t end);

    std::size_t size() const noexcept { return place_.size(); }
    std::size_t ambient() const noexcept { return ambient_; }
    const std::vector<std::size_t>& indices() const noexcept { return place_; }

    /// Writes `v` into its image inside `y`; other coordinates are untouched.
    void apply_into(std::span<const double> v, std::span<double> y) const;

    friend bool operator==(const Embedding&, const Embedding&) = default;

private:
    std::size_t ambient_ = 0;
    std::vector<std::size_t> place_;
};

/// out(i, j) = in(p(i), p(j)). Pure reindexing.
RealMatrix apply_permutation(const Permutation& p, const RealMatrix& m);
BoolMatrix apply_permutation(const Permutation& p, const BoolMatrix& m);
ChannelBundle apply_permutation(const Permutation& p, const ChannelBundle& b);

}  // namespace blockform
