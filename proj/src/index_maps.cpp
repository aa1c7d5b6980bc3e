#include "blockform/index_maps.hpp"

#include <numeric>

#include "blockform/errors.hpp"

namespace blockform {

namespace {

void require_distinct(std::size_t ambient, const std::vector<std::size_t>& idx, const char* what) {
    std::vector<bool> seen(ambient, false);
    for (auto i : idx) {
        if (i >= ambient) throw InputError(std::string(what) + ": index out of range");
        if (seen[i]) throw InputError(std::string(what) + ": repeated index");
        seen[i] = true;
    }
}

std::vector<std::size_t> iota_range(std::size_t begin, std::size_t end) {
    if (begin > end) throw InputError("index range has begin > end");
    std::vector<std::size_t> v(end - begin);
    std::iota(v.begin(), v.end(), begin);
    return v;
}

}  // namespace

Permutation::Permutation(std::vector<std::size_t> target_to_source) : map_(std::move(target_to_source)) {
    require_distinct(map_.size(), map_, "permutation");
}

Permutation Permutation::identity(std::size_t n) {
    return Permutation(iota_range(0, n));
}

Permutation Permutation::inverse() const {
    std::vector<std::size_t> inv(map_.size());
    for (std::size_t o = 0; o < map_.size(); ++o) inv[map_[o]] = o;
    return Permutation(std::move(inv));
}

Permutation Permutation::compose(const Permutation& inner) const {
    if (inner.size() != size()) throw InputError("permutation sizes differ");
    std::vector<std::size_t> out(size());
    for (std::size_t o = 0; o < size(); ++o) out[o] = map_[inner.map_[o]];
    return Permutation(std::move(out));
}

RealVector Permutation::gather(std::span<const double> in) const {
    if (in.size() != size()) throw InputError("permutation/vector size mismatch");
    RealVector out(size());
    for (std::size_t o = 0; o < size(); ++o) out[o] = in[map_[o]];
    return out;
}

RealVector Permutation::scatter(std::span<const double> in) const {
    if (in.size() != size()) throw InputError("permutation/vector size mismatch");
    RealVector out(size());
    for (std::size_t o = 0; o < size(); ++o) out[map_[o]] = in[o];
    return out;
}

Projection::Projection(std::size_t ambient, std::vector<std::size_t> select)
    : ambient_(ambient), select_(std::move(select)) {
    require_distinct(ambient_, select_, "projection");
}

Projection Projection::range(std::size_t ambient, std::size_t begin, std::size_t end) {
    return Projection(ambient, iota_range(begin, end));
}

RealVector Projection::apply(std::span<const double> x) const {
    if (x.size() != ambient_) throw InputError("projection: ambient size mismatch");
    RealVector out(select_.size());
    for (std::size_t r = 0; r < select_.size(); ++r) out[r] = x[select_[r]];
    return out;
}

Embedding::Embedding(std::size_t ambient, std::vector<std::size_t> place) : ambient_(ambient), place_(std::move(place)) {
    require_distinct(ambient_, place_, "embedding");
}

Embedding Embedding::range(std::size_t ambient, std::size_t begin, std::size_t end) {
    return Embedding(ambient, iota_range(begin, end));
}

void Embedding::apply_into(std::span<const double> v, std::span<double> y) const {
    if (v.size() != place_.size() || y.size() != ambient_) throw InputError("embedding: size mismatch");
    for (std::size_t r = 0; r < place_.size(); ++r) y[place_[r]] = v[r];
}

RealMatrix apply_permutation(const Permutation& p, const RealMatrix& m) {
    if (!m.is_square() || m.rows() != p.size()) throw InputError("apply_permutation: size mismatch");
    RealMatrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto src = m.row(p.source_of(i));
        auto dst = out.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) dst[j] = src[p.source_of(j)];
    }
    return out;
}

BoolMatrix apply_permutation(const Permutation& p, const BoolMatrix& m) {
    if (!m.is_square() || m.rows() != p.size()) throw InputError("apply_permutation: size mismatch");
    BoolMatrix out(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            if (m.test(p.source_of(i), p.source_of(j))) out.set(i, j);
    return out;
}

ChannelBundle apply_permutation(const Permutation& p, const ChannelBundle& b) {
    std::vector<RealMatrix> w1, w2;
    for (const auto& m : b.w1()) w1.push_back(apply_permutation(p, m));
    for (const auto& m : b.w2()) w2.push_back(apply_permutation(p, m));
    return ChannelBundle(std::move(w1), std::move(w2));
}

}  // namespace blockform
