#include "blockform/restructure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "blockform/errors.hpp"

namespace blockform {

namespace {

constexpr auto no_owner = std::numeric_limits<std::size_t>::max();

RealMatrix slice(const RealMatrix& m, std::size_t row_begin, std::size_t row_end, std::size_t col_begin,
                 std::size_t col_end) {
    RealMatrix out(row_end - row_begin, col_end - col_begin);
    for (std::size_t i = row_begin; i < row_end; ++i)
        for (std::size_t j = col_begin; j < col_end; ++j) out(i - row_begin, j - col_begin) = m(i, j);
    return out;
}

Weights permuted(const Weights& w, const Permutation& p) {
    return std::visit([&](const auto& m) -> Weights { return apply_permutation(p, m); }, w);
}

std::vector<const RealMatrix*> channels_of(const Weights& w) {
    std::vector<const RealMatrix*> out;
    if (const auto* m = std::get_if<RealMatrix>(&w)) {
        out.push_back(m);
    } else {
        const auto& b = std::get<ChannelBundle>(w);
        for (const auto& c : b.w1()) out.push_back(&c);
        for (const auto& c : b.w2()) out.push_back(&c);
    }
    return out;
}

Weights extract_block(const Weights& w, std::size_t begin, std::size_t end) {
    if (const auto* m = std::get_if<RealMatrix>(&w)) return slice(*m, begin, end, begin, end);
    const auto& b = std::get<ChannelBundle>(w);
    std::vector<RealMatrix> w1, w2;
    for (const auto& c : b.w1()) w1.push_back(slice(c, begin, end, begin, end));
    for (const auto& c : b.w2()) w2.push_back(slice(c, begin, end, begin, end));
    return ChannelBundle(std::move(w1), std::move(w2));
}

// sum over c in `order` of w(r, c) * x[c], starting from +0.0.
RealVector ordered_matvec(const RealMatrix& w, std::span<const double> x, const std::vector<std::size_t>& order) {
    RealVector y(w.rows(), 0.0);
    for (std::size_t r = 0; r < w.rows(); ++r) {
        const auto row = w.row(r);
        double acc = 0.0;
        for (auto c : order) acc += row[c] * x[c];
        y[r] = acc;
    }
    return y;
}

RealVector evaluate_block(const Block& block, std::span<const double> x_local, Nonlinearity sigma) {
    if (const auto* m = std::get_if<RealMatrix>(&block.op)) return ordered_matvec(*m, x_local, block.column_order);
    const auto& b = std::get<ChannelBundle>(block.op);
    RealVector y(b.order(), 0.0);
    for (std::size_t g = 0; g < b.channel_count(); ++g) {
        RealVector hidden = ordered_matvec(b.w1()[g], x_local, block.column_order);
        for (auto& h : hidden) h = apply_nonlinearity(sigma, h);
        const RealVector part = ordered_matvec(b.w2()[g], hidden, block.column_order);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += part[i];
    }
    return y;
}

}  // namespace

void RestructuredSystem::validate() const {
    if (p.size() != n || dormant.ambient() != n) throw InputError("restructured system: ambient size mismatch");
    std::vector<int> covered(n, 0);
    for (const auto& b : blocks) {
        const std::size_t size = weights_order(b.op);
        if (b.projection.ambient() != n || b.embedding.ambient() != n) throw InputError("block: ambient size mismatch");
        if (b.projection.size() != size || b.embedding.size() != size || b.column_order.size() != size)
            throw InputError("block: operator size does not match its projection/embedding");
        for (auto i : b.embedding.indices()) ++covered[i];
    }
    for (auto i : dormant.indices()) ++covered[i];
    if (std::any_of(covered.begin(), covered.end(), [](int c) { return c != 1; }))
        throw InputError("restructured system: embedding images must partition 0..n-1");
}

RestructuredSystem build_system(const Weights& annealed, const NodeAttributeTable& table, const Permutation& p) {
    const std::size_t n = weights_order(annealed);
    if (table.rows.size() != n || p.size() != n) throw InputError("build_system: table/permutation size mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = table.rows[i];
        if (r.v_tag != i + 1 || r.v_new_tag == 0 || r.v_new_tag > n || p.source_of(r.v_new_tag - 1) != i)
            throw InputError("build_system: node table and permutation disagree");
    }

    const Weights pw = permuted(annealed, p);
    const auto channels = channels_of(pw);

    // Contiguous new-index runs of equal G_TAG.
    struct Run {
        std::size_t begin, end;
    };
    std::vector<Run> runs;
    std::map<std::size_t, bool> seen_group;
    for (std::size_t pos = 0; pos < n; ++pos) {
        const std::size_t g = table.rows[p.source_of(pos)].g_tag;
        if (pos > 0 && table.rows[p.source_of(pos - 1)].g_tag == g) {
            runs.back().end = pos + 1;
            continue;
        }
        if (seen_group[g]) throw InputError("build_system: weakly connected component is not contiguous");
        seen_group[g] = true;
        runs.push_back({pos, pos + 1});
    }

    RestructuredSystem sys;
    sys.n = n;
    sys.p = p;
    std::vector<std::size_t> owner(n, no_owner);
    std::vector<std::size_t> dormant;
    for (const auto& run : runs) {
        const bool singleton = run.end - run.begin == 1;
        const bool zero_self = std::all_of(channels.begin(), channels.end(),
                                           [&](const RealMatrix* c) { return (*c)(run.begin, run.begin) == 0.0; });
        if (singleton && zero_self) {
            dormant.push_back(run.begin);
            continue;
        }
        Block block;
        block.op = extract_block(pw, run.begin, run.end);
        block.projection = Projection::range(n, run.begin, run.end);
        block.embedding = Embedding::range(n, run.begin, run.end);
        block.column_order.resize(run.end - run.begin);
        std::iota(block.column_order.begin(), block.column_order.end(), 0);
        std::sort(block.column_order.begin(), block.column_order.end(), [&](std::size_t a, std::size_t b) {
            return p.source_of(run.begin + a) < p.source_of(run.begin + b);
        });
        for (std::size_t pos = run.begin; pos < run.end; ++pos) owner[pos] = sys.blocks.size();
        sys.blocks.push_back(std::move(block));
    }
    sys.dormant = Embedding(n, std::move(dormant));

    for (const auto* c : channels)
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b)
                if ((owner[a] == no_owner || owner[a] != owner[b]) && (*c)(a, b) != 0.0)
                    throw InputError("build_system: nonzero weight between different components (new indices " +
                                     std::to_string(a + 1) + ", " + std::to_string(b + 1) + ")");
    sys.validate();
    return sys;
}

RealVector infer(const RestructuredSystem& sys, std::span<const double> x_input, Nonlinearity sigma) {
    if (x_input.size() != sys.n) throw InputError("infer: input length does not match system size");
    const RealVector x = sys.p.gather(x_input);
    RealVector y(sys.n, 0.0);
    for (const auto& block : sys.blocks) {
        const RealVector local = evaluate_block(block, block.projection.apply(x), sigma);
        block.embedding.apply_into(local, y);
    }
    const RealVector zeros(sys.dormant.size(), 0.0);
    sys.dormant.apply_into(zeros, y);
    return sys.p.scatter(y);
}

RealVector dense_forward(const Weights& w, std::span<const double> x, Nonlinearity sigma) {
    if (const auto* m = std::get_if<RealMatrix>(&w)) return matvec(*m, x);
    return channel_forward(std::get<ChannelBundle>(w), x, sigma);
}

RealMatrix assemble_dense(const RestructuredSystem& sys) {
    RealMatrix out(sys.n, sys.n);
    for (const auto& block : sys.blocks) {
        const auto* m = std::get_if<RealMatrix>(&block.op);
        if (!m) throw InputError("assemble_dense: channel-bundle blocks are not supported");
        const auto& rows = block.embedding.indices();
        const auto& cols = block.projection.indices();
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t c = 0; c < cols.size(); ++c)
                out(sys.p.source_of(rows[r]), sys.p.source_of(cols[c])) = (*m)(r, c);
    }
    return out;
}

SubdividedBlock subdivide_block(const RealMatrix& block, const std::vector<std::size_t>& cuts,
                                std::vector<std::size_t> column_order) {
    if (!block.is_square()) throw InputError("subdivide_block: block must be square");
    const std::size_t size = block.rows();
    if (column_order.empty()) {
        column_order.resize(size);
        std::iota(column_order.begin(), column_order.end(), 0);
    }
    std::vector<std::size_t> check = column_order;
    std::sort(check.begin(), check.end());
    for (std::size_t i = 0; i < check.size(); ++i)
        if (check[i] != i || check.size() != size) throw InputError("subdivide_block: column order is not a permutation");
    std::vector<std::size_t> bounds{0};
    for (auto c : cuts) {
        if (c <= bounds.back() || c >= size) throw InputError("subdivide_block: cuts must be strictly ascending within (0, size)");
        bounds.push_back(c);
    }
    bounds.push_back(size);

    SubdividedBlock sd;
    sd.size = size;
    sd.column_order = std::move(column_order);
    for (std::size_t r = 0; r + 1 < bounds.size(); ++r) {
        SubdividedPart part;
        part.row_begin = bounds[r];
        part.row_end = bounds[r + 1];
        part.prefix = part.row_end;
        for (std::size_t i = part.row_begin; i < part.row_end; ++i)
            for (std::size_t j = part.prefix; j < size; ++j)
                if (block(i, j) != 0.0)
                    throw InputError("subdivide_block: block is not lower-block-triangular with respect to the cuts");
        part.op = slice(block, part.row_begin, part.row_end, 0, part.prefix);
        sd.parts.push_back(std::move(part));
    }
    return sd;
}

std::vector<std::size_t> scc_boundary_cuts(const std::vector<std::size_t>& local_s_tags) {
    std::vector<std::size_t> cuts;
    for (std::size_t i = 1; i < local_s_tags.size(); ++i)
        if (local_s_tags[i] != local_s_tags[i - 1]) cuts.push_back(i);
    return cuts;
}

RealVector infer_subdivided(const SubdividedBlock& sd, std::span<const double> x_block) {
    if (x_block.size() != sd.size) throw InputError("infer_subdivided: input length does not match block size");
    RealVector y(sd.size, 0.0);
    for (const auto& part : sd.parts) {
        std::vector<std::size_t> order;
        for (auto c : sd.column_order)
            if (c < part.prefix) order.push_back(c);
        const RealVector out = ordered_matvec(part.op, x_block.first(part.prefix), order);
        std::copy(out.begin(), out.end(), y.begin() + static_cast<std::ptrdiff_t>(part.row_begin));
    }
    return y;
}

SubdividedBlock update_subdivided(const SubdividedBlock& sd, std::span<const double> x_block,
                                  std::span<const double> g_block, double eta) {
    if (!(eta > 0.0)) throw InputError("learning rate must be positive");
    if (x_block.size() != sd.size || g_block.size() != sd.size) throw InputError("update_subdivided: size mismatch");
    SubdividedBlock out = sd;
    for (auto& part : out.parts)
        for (std::size_t r = part.row_begin; r < part.row_end; ++r)
            for (std::size_t c = 0; c < part.prefix; ++c)
                subtract_increment(part.op(r - part.row_begin, c), eta, g_block[r], x_block[c]);
    return out;
}

RestructuredSystem redistribute_update(const RestructuredSystem& sys, std::span<const double> x_input,
                                       std::span<const double> g_output, double eta) {
    if (!(eta > 0.0)) throw InputError("learning rate must be positive");
    if (x_input.size() != sys.n || g_output.size() != sys.n) throw InputError("redistribute_update: size mismatch");
    const RealVector x = sys.p.gather(x_input);
    const RealVector g = sys.p.gather(g_output);
    RestructuredSystem out = sys;
    for (auto& block : out.blocks) {
        auto* m = std::get_if<RealMatrix>(&block.op);
        if (!m) throw InputError("redistribute_update: channel-bundle blocks are not supported");
        const auto& rows = block.embedding.indices();
        const auto& cols = block.projection.indices();
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t c = 0; c < cols.size(); ++c) subtract_increment((*m)(r, c), eta, g[rows[r]], x[cols[c]]);
    }
    return out;
}

EquivalenceReport verify_equivalence(const RestructuredSystem& sys, const Weights& w_ref, std::size_t trials,
                                     std::uint64_t seed, Nonlinearity sigma, double tolerance) {
    if (weights_order(w_ref) != sys.n) throw InputError("verify_equivalence: reference size mismatch");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    EquivalenceReport report;
    report.trials = trials;
    RealVector x(sys.n);
    for (std::size_t t = 0; t < trials; ++t) {
        for (auto& v : x) v = unit(rng);
        const RealVector a = infer(sys, x, sigma);
        const RealVector b = dense_forward(w_ref, x, sigma);
        for (std::size_t i = 0; i < sys.n; ++i) {
            const double d = std::fabs(a[i] - b[i]);
            ++report.compared;
            if (!(d <= tolerance)) ++report.mismatches;
            if (d > report.max_abs_deviation || std::isnan(d)) report.max_abs_deviation = d;
        }
    }
    return report;
}

}  // namespace blockform
