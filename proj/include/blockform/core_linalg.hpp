#pragma once

// Dense real matrices, channel bundles, bit-packed Boolean matrices and the
// Boolean kernels (product, *-closure, mutual reachability) used by every
// other part of the library.
//
// Edge convention: a set bit (i, j) of an adjacency matrix, like a nonzero
// weight w_ij, denotes a directed edge from node j to node i.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace blockform {

using RealVector = std::vector<double>;

/// Throws InputError if any entry is NaN or infinite.
void require_finite(std::span<const double> values, std::string_view what);

/// Row-major dense matrix of doubles.
class RealMatrix {
public:
    RealMatrix() = default;
    RealMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    /// Takes ownership of row-major `entries`; rejects size mismatch and non-finite values.
    RealMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

    static RealMatrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool is_square() const noexcept { return rows_ == cols_; }
    bool empty() const noexcept { return entries_.empty(); }

    double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const { return {entries_.data() + i * cols_, cols_}; }
    std::span<double> row(std::size_t i) { return {entries_.data() + i * cols_, cols_}; }
    std::span<const double> data() const noexcept { return entries_; }
    std::span<double> data() noexcept { return entries_; }

    RealMatrix transposed() const;

    /// Numeric equality (+0 == -0).
    friend bool operator==(const RealMatrix&, const RealMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> entries_;
};

/// Bit-for-bit equality, distinguishing +0 from -0.
bool bitwise_equal(const RealMatrix& a, const RealMatrix& b);
bool bitwise_equal(std::span<const double> a, std::span<const double> b);

enum class Nonlinearity { identity, relu, tanh };

/// Registry lookup: "identity", "relu", "tanh". Unknown ids throw InputError.
Nonlinearity parse_nonlinearity(std::string_view id);
std::string_view to_string(Nonlinearity sigma);
double apply_nonlinearity(Nonlinearity sigma, double v);

/// The k-channel joint operator Y = sum_g W2[g] * sigma(W1[g] * X).
/// Edge (i, j) carries the sequence W1[0](i,j)..W1[k/2-1](i,j), W2[0](i,j)..W2[k/2-1](i,j).
class ChannelBundle {
public:
    ChannelBundle() = default;
    ChannelBundle(std::vector<RealMatrix> w1, std::vector<RealMatrix> w2);

    static ChannelBundle zeros(std::size_t n, std::size_t k);

    std::size_t order() const noexcept { return n_; }
    /// Length of the per-edge parameter sequence (twice the channel count).
    std::size_t sequence_length() const noexcept { return 2 * w1_.size(); }
    std::size_t channel_count() const noexcept { return w1_.size(); }

    const std::vector<RealMatrix>& w1() const noexcept { return w1_; }
    const std::vector<RealMatrix>& w2() const noexcept { return w2_; }
    std::vector<RealMatrix>& w1() noexcept { return w1_; }
    std::vector<RealMatrix>& w2() noexcept { return w2_; }

    std::vector<double> edge_sequence(std::size_t i, std::size_t j) const;
    void set_edge_sequence(std::size_t i, std::size_t j, std::span<const double> seq);

    friend bool operator==(const ChannelBundle&, const ChannelBundle&) = default;

private:
    std::size_t n_ = 0;
    std::vector<RealMatrix> w1_;
    std::vector<RealMatrix> w2_;
};

/// Bit-packed Boolean matrix, 64 columns per word, one padded word run per row.
/// Rectangular shapes are allowed so that compression matrices compose with products.
class BoolMatrix {
public:
    static constexpr std::size_t word_bits = 64;

    BoolMatrix() = default;
    explicit BoolMatrix(std::size_t n) : BoolMatrix(n, n) {}
    BoolMatrix(std::size_t rows, std::size_t cols);

    static BoolMatrix identity(std::size_t n);
    /// Parses rows of '0'/'1' characters; other characters are ignored.
    static BoolMatrix from_rows(const std::vector<std::string>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t order() const noexcept { return rows_; }
    bool is_square() const noexcept { return rows_ == cols_; }
    std::size_t words_per_row() const noexcept { return words_; }

    bool test(std::size_t i, std::size_t j) const {
        return (bits_[i * words_ + j / word_bits] >> (j % word_bits)) & 1u;
    }
    void set(std::size_t i, std::size_t j, bool value = true) {
        auto& w = bits_[i * words_ + j / word_bits];
        const std::uint64_t mask = std::uint64_t{1} << (j % word_bits);
        w = value ? (w | mask) : (w & ~mask);
    }

    std::span<const std::uint64_t> row_words(std::size_t i) const { return {bits_.data() + i * words_, words_}; }
    std::span<std::uint64_t> row_words(std::size_t i) { return {bits_.data() + i * words_, words_}; }

    bool row_any(std::size_t i) const;
    std::size_t count() const;
    BoolMatrix transposed() const;

    BoolMatrix operator|(const BoolMatrix& other) const;
    BoolMatrix operator&(const BoolMatrix& other) const;
    /// Elementwise negation; padding bits stay clear.
    BoolMatrix operator~() const;

    friend bool operator==(const BoolMatrix&, const BoolMatrix&) = default;

private:
    void clear_padding();

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t words_ = 0;
    std::vector<std::uint64_t> bits_;
};

/// c_ij = OR_k (a_ik AND b_kj). Row-broadcast: each set a_ik ORs row k of b into row i of c.
BoolMatrix boolean_product(const BoolMatrix& a, const BoolMatrix& b);

/// Boolean matrix-vector product y_i = OR_j (a_ij AND v_j).
std::vector<bool> boolean_product(const BoolMatrix& a, const std::vector<bool>& v);

/// Number of squarings in the Kleene-Valiant iteration: ceil(log2(max(n - 1, 1))).
std::size_t closure_squarings(std::size_t n);

struct ClosureTrace {
    BoolMatrix closure;
    std::size_t squarings = 0;
};

/// Reflexive-transitive closure M* = (M | I) squared closure_squarings(n) times.
/// With `early_exit`, stops once a squaring leaves the matrix unchanged.
ClosureTrace star_closure_traced(const BoolMatrix& m, bool early_exit = false);
BoolMatrix star_closure(const BoolMatrix& m, bool early_exit = false);

/// B = M* & (M*)^T.
BoolMatrix mutual_reachability(const BoolMatrix& mstar);

/// Labels the classes of an equivalence-relation matrix by min-scan: the
/// smallest unlabeled node i opens the next class {j : e(i, j)}. Labels are
/// 0-based. Throws InputError if `e` is not square or not reflexive.
std::vector<std::size_t> equivalence_class_labels(const BoolMatrix& e);

/// Gradient-step primitive shared by every update path: w -= eta * (g_i * x_j).
/// An exactly-zero increment leaves w bitwise untouched.
inline void subtract_increment(double& w, double eta, double g_i, double x_j) {
    const double inc = eta * (g_i * x_j);
    if (inc != 0.0) w -= inc;
}

/// y_i = sum_j w_ij x_j, accumulated in ascending j starting from +0.0.
RealVector matvec(const RealMatrix& w, std::span<const double> x);

/// y = sum_g W2[g] * sigma(W1[g] * x); channel outputs are added in ascending g.
RealVector channel_forward(const ChannelBundle& b, std::span<const double> x, Nonlinearity sigma);

}  // namespace blockform
