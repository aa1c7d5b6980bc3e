#include "blockform/core_linalg.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>

#include "blockform/errors.hpp"

namespace blockform {

void require_finite(std::span<const double> values, std::string_view what) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            std::ostringstream msg;
            msg << what << ": non-finite value at position " << i;
            throw InputError(msg.str());
        }
    }
}

RealMatrix::RealMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), entries_(rows * cols, fill) {
    if (rows == 0 || cols == 0) throw InputError("matrix dimensions must be positive");
}

RealMatrix::RealMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (rows == 0 || cols == 0) throw InputError("matrix dimensions must be positive");
    if (entries_.size() != rows * cols) throw InputError("matrix entry count does not match dimensions");
    require_finite(entries_, "matrix");
}

RealMatrix RealMatrix::identity(std::size_t n) {
    RealMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

RealMatrix RealMatrix::transposed() const {
    RealMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

bool bitwise_equal(std::span<const double> a, std::span<const double> b) {
    return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

bool bitwise_equal(const RealMatrix& a, const RealMatrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && bitwise_equal(a.data(), b.data());
}

Nonlinearity parse_nonlinearity(std::string_view id) {
    if (id == "identity") return Nonlinearity::identity;
    if (id == "relu") return Nonlinearity::relu;
    if (id == "tanh") return Nonlinearity::tanh;
    throw InputError("unknown nonlinearity '" + std::string(id) + "'");
}

std::string_view to_string(Nonlinearity sigma) {
    switch (sigma) {
        case Nonlinearity::identity: return "identity";
        case Nonlinearity::relu: return "relu";
        case Nonlinearity::tanh: return "tanh";
    }
    return "identity";
}

double apply_nonlinearity(Nonlinearity sigma, double v) {
    switch (sigma) {
        case Nonlinearity::identity: return v;
        case Nonlinearity::relu: return v > 0.0 ? v : 0.0;
        case Nonlinearity::tanh: return std::tanh(v);
    }
    return v;
}

ChannelBundle::ChannelBundle(std::vector<RealMatrix> w1, std::vector<RealMatrix> w2)
    : w1_(std::move(w1)), w2_(std::move(w2)) {
    if (w1_.empty() || w1_.size() != w2_.size())
        throw InputError("channel bundle needs the same positive number of W1 and W2 channels");
    n_ = w1_.front().rows();
    auto check = [this](const RealMatrix& m) {
        if (m.rows() != n_ || m.cols() != n_) throw InputError("channel matrices must all be n x n");
    };
    std::for_each(w1_.begin(), w1_.end(), check);
    std::for_each(w2_.begin(), w2_.end(), check);
}

ChannelBundle ChannelBundle::zeros(std::size_t n, std::size_t k) {
    if (k == 0 || k % 2 != 0) throw InputError("channel sequence length must be even and positive");
    return ChannelBundle(std::vector<RealMatrix>(k / 2, RealMatrix(n, n)),
                         std::vector<RealMatrix>(k / 2, RealMatrix(n, n)));
}

std::vector<double> ChannelBundle::edge_sequence(std::size_t i, std::size_t j) const {
    std::vector<double> seq;
    seq.reserve(sequence_length());
    for (const auto& m : w1_) seq.push_back(m(i, j));
    for (const auto& m : w2_) seq.push_back(m(i, j));
    return seq;
}

void ChannelBundle::set_edge_sequence(std::size_t i, std::size_t j, std::span<const double> seq) {
    if (seq.size() != sequence_length()) throw InputError("edge sequence length mismatch");
    const std::size_t half = w1_.size();
    for (std::size_t g = 0; g < half; ++g) {
        w1_[g](i, j) = seq[g];
        w2_[g](i, j) = seq[half + g];
    }
}

BoolMatrix::BoolMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), words_((cols + word_bits - 1) / word_bits), bits_(rows * words_, 0) {}

BoolMatrix BoolMatrix::identity(std::size_t n) {
    BoolMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m.set(i, i);
    return m;
}

BoolMatrix BoolMatrix::from_rows(const std::vector<std::string>& rows) {
    std::vector<std::vector<bool>> parsed;
    for (const auto& r : rows) {
        std::vector<bool> bits;
        for (char c : r)
            if (c == '0' || c == '1') bits.push_back(c == '1');
        parsed.push_back(std::move(bits));
    }
    const std::size_t cols = parsed.empty() ? 0 : parsed.front().size();
    BoolMatrix m(parsed.size(), cols);
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        if (parsed[i].size() != cols) throw InputError("ragged Boolean matrix rows");
        for (std::size_t j = 0; j < cols; ++j) m.set(i, j, parsed[i][j]);
    }
    return m;
}

bool BoolMatrix::row_any(std::size_t i) const {
    const auto r = row_words(i);
    return std::any_of(r.begin(), r.end(), [](std::uint64_t w) { return w != 0; });
}

std::size_t BoolMatrix::count() const {
    std::size_t c = 0;
    for (auto w : bits_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
}

BoolMatrix BoolMatrix::transposed() const {
    BoolMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        const auto r = row_words(i);
        for (std::size_t w = 0; w < words_; ++w) {
            std::uint64_t word = r[w];
            while (word != 0) {
                const auto bit = static_cast<std::size_t>(std::countr_zero(word));
                t.set(w * word_bits + bit, i);
                word &= word - 1;
            }
        }
    }
    return t;
}

BoolMatrix BoolMatrix::operator|(const BoolMatrix& other) const {
    if (rows_ != other.rows_ || cols_ != other.cols_) throw InputError("Boolean matrix shape mismatch");
    BoolMatrix out = *this;
    for (std::size_t k = 0; k < bits_.size(); ++k) out.bits_[k] |= other.bits_[k];
    return out;
}

BoolMatrix BoolMatrix::operator&(const BoolMatrix& other) const {
    if (rows_ != other.rows_ || cols_ != other.cols_) throw InputError("Boolean matrix shape mismatch");
    BoolMatrix out = *this;
    for (std::size_t k = 0; k < bits_.size(); ++k) out.bits_[k] &= other.bits_[k];
    return out;
}

BoolMatrix BoolMatrix::operator~() const {
    BoolMatrix out = *this;
    for (auto& w : out.bits_) w = ~w;
    out.clear_padding();
    return out;
}

void BoolMatrix::clear_padding() {
    const std::size_t tail = cols_ % word_bits;
    if (tail == 0 || words_ == 0) return;
    const std::uint64_t keep = (std::uint64_t{1} << tail) - 1;
    for (std::size_t i = 0; i < rows_; ++i) bits_[i * words_ + words_ - 1] &= keep;
}

BoolMatrix boolean_product(const BoolMatrix& a, const BoolMatrix& b) {
    if (a.cols() != b.rows()) throw InputError("boolean_product: inner dimensions differ");
    BoolMatrix c(a.rows(), b.cols());
    const std::size_t out_words = c.words_per_row();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ci = c.row_words(i);
        const auto ai = a.row_words(i);
        for (std::size_t w = 0; w < ai.size(); ++w) {
            std::uint64_t word = ai[w];
            while (word != 0) {
                const std::size_t k = w * BoolMatrix::word_bits + static_cast<std::size_t>(std::countr_zero(word));
                const auto bk = b.row_words(k);
                for (std::size_t x = 0; x < out_words; ++x) ci[x] |= bk[x];
                word &= word - 1;
            }
        }
    }
    return c;
}

std::vector<bool> boolean_product(const BoolMatrix& a, const std::vector<bool>& v) {
    if (a.cols() != v.size()) throw InputError("boolean_product: vector length differs");
    std::vector<bool> y(a.rows(), false);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols() && !y[i]; ++j) y[i] = a.test(i, j) && v[j];
    return y;
}

std::size_t closure_squarings(std::size_t n) {
    const std::size_t target = n > 2 ? n - 1 : 1;
    std::size_t t = 0;
    while ((std::size_t{1} << t) < target) ++t;
    return t;
}

ClosureTrace star_closure_traced(const BoolMatrix& m, bool early_exit) {
    if (!m.is_square()) throw InputError("star_closure: matrix must be square");
    ClosureTrace out{m | BoolMatrix::identity(m.order()), 0};
    const std::size_t rounds = closure_squarings(m.order());
    for (std::size_t t = 0; t < rounds; ++t) {
        BoolMatrix next = boolean_product(out.closure, out.closure);
        ++out.squarings;
        const bool fixed = next == out.closure;
        out.closure = std::move(next);
        if (early_exit && fixed) break;
    }
    return out;
}

BoolMatrix star_closure(const BoolMatrix& m, bool early_exit) {
    return star_closure_traced(m, early_exit).closure;
}

BoolMatrix mutual_reachability(const BoolMatrix& mstar) {
    if (!mstar.is_square()) throw InputError("mutual_reachability: matrix must be square");
    return mstar & mstar.transposed();
}

std::vector<std::size_t> equivalence_class_labels(const BoolMatrix& e) {
    if (!e.is_square()) throw InputError("equivalence matrix must be square");
    constexpr auto unassigned = static_cast<std::size_t>(-1);
    std::vector<std::size_t> label(e.order(), unassigned);
    std::size_t next = 0;
    for (std::size_t i = 0; i < e.order(); ++i) {
        if (label[i] != unassigned) continue;
        if (!e.test(i, i)) throw InputError("equivalence matrix is not reflexive");
        for (std::size_t j = 0; j < e.order(); ++j)
            if (e.test(i, j) && label[j] == unassigned) label[j] = next;
        ++next;
    }
    return label;
}

RealVector matvec(const RealMatrix& w, std::span<const double> x) {
    if (w.cols() != x.size()) throw InputError("matvec: vector length does not match column count");
    RealVector y(w.rows(), 0.0);
    for (std::size_t i = 0; i < w.rows(); ++i) {
        const auto r = w.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) acc += r[j] * x[j];
        y[i] = acc;
    }
    return y;
}

RealVector channel_forward(const ChannelBundle& b, std::span<const double> x, Nonlinearity sigma) {
    if (x.size() != b.order()) throw InputError("channel_forward: vector length does not match bundle order");
    RealVector y(b.order(), 0.0);
    for (std::size_t g = 0; g < b.channel_count(); ++g) {
        RealVector hidden = matvec(b.w1()[g], x);
        for (auto& h : hidden) h = apply_nonlinearity(sigma, h);
        const RealVector part = matvec(b.w2()[g], hidden);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += part[i];
    }
    return y;
}

}  // namespace blockform
