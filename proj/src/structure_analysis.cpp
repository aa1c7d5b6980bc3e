#include "blockform/structure_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "blockform/errors.hpp"

namespace blockform {

std::vector<NodeAttributes> NodeAttributeTable::by_new_index() const {
    std::vector<NodeAttributes> out = rows;
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.v_new_tag < b.v_new_tag; });
    return out;
}

BoolMatrix p_adjacency(const Weights& weights, const StructuralPredicate& pred) {
    if (pred.epsilon < 0.0 || std::isnan(pred.epsilon)) throw InputError("predicate threshold must be non-negative");
    if (pred.kind == StructuralPredicate::Kind::classification_based)
        throw InputError("classification-based predicate needs an edge classification, not raw weights");

    if (const auto* w = std::get_if<RealMatrix>(&weights)) {
        if (pred.kind != StructuralPredicate::Kind::abs_threshold)
            throw InputError("scalar weights need an abs-threshold predicate");
        if (!w->is_square()) throw InputError("p_adjacency: weight matrix must be square");
        BoolMatrix m(w->rows());
        for (std::size_t i = 0; i < w->rows(); ++i)
            for (std::size_t j = 0; j < w->cols(); ++j)
                if (std::fabs((*w)(i, j)) > pred.epsilon) m.set(i, j);
        return m;
    }

    const auto& b = std::get<ChannelBundle>(weights);
    if (pred.kind != StructuralPredicate::Kind::channel_norm_threshold)
        throw InputError("channel bundles need a channel-norm predicate");
    BoolMatrix m(b.order());
    for (std::size_t i = 0; i < b.order(); ++i)
        for (std::size_t j = 0; j < b.order(); ++j) {
            double energy = 0.0;
            for (double x : b.edge_sequence(i, j)) energy += x * x;
            if (std::sqrt(energy) > pred.epsilon) m.set(i, j);
        }
    return m;
}

BoolMatrix p_adjacency(const EdgeClassification& classes) {
    BoolMatrix m(classes.n);
    for (std::size_t i = 0; i < classes.n; ++i)
        for (std::size_t j = 0; j < classes.n; ++j)
            if (classes.is_kept(i, j)) m.set(i, j);
    return m;
}

std::vector<std::size_t> scc_labels(const BoolMatrix& mutual) {
    auto labels = equivalence_class_labels(mutual);
    for (auto& l : labels) ++l;
    return labels;
}

CondensationResult condensation(const BoolMatrix& m, const std::vector<std::size_t>& s_tag) {
    if (!m.is_square() || s_tag.size() != m.order()) throw InputError("condensation: labels do not match matrix");
    CondensationResult out;
    out.k = s_tag.empty() ? 0 : *std::max_element(s_tag.begin(), s_tag.end());
    out.r_c = BoolMatrix(out.k, m.order());
    for (std::size_t i = 0; i < s_tag.size(); ++i) {
        if (s_tag[i] == 0 || s_tag[i] > out.k) throw InputError("condensation: SCC label out of range");
        out.r_c.set(s_tag[i] - 1, i);
    }
    const BoolMatrix compressed = boolean_product(boolean_product(out.r_c, m), out.r_c.transposed());
    out.m_c = compressed & ~BoolMatrix::identity(out.k);
    return out;
}

std::vector<std::size_t> layer_peel(const BoolMatrix& m_c) {
    if (!m_c.is_square()) throw InputError("layer_peel: condensation matrix must be square");
    const std::size_t k = m_c.order();
    std::vector<std::size_t> layer(k, 0);
    // Columns of SCCs that are still unprocessed; processed ones are masked out.
    BoolMatrix live(1, k);
    for (std::size_t p = 0; p < k; ++p) live.set(0, p);
    const auto live_words = live.row_words(0);

    std::size_t done = 0;
    for (std::size_t current = 1; done < k; ++current) {
        std::vector<std::size_t> sources;
        for (std::size_t p = 0; p < k; ++p) {
            if (layer[p] != 0) continue;
            const auto row = m_c.row_words(p);
            bool incoming = false;
            for (std::size_t w = 0; w < row.size() && !incoming; ++w) incoming = (row[w] & live_words[w]) != 0;
            if (!incoming) sources.push_back(p);
        }
        if (sources.empty()) throw InvariantError("layer_peel: condensation graph contains a cycle");
        for (auto p : sources) {
            layer[p] = current;
            live.set(0, p, false);
        }
        done += sources.size();
    }
    return layer;
}

std::vector<std::size_t> wcc_labels(const BoolMatrix& m_c) {
    if (!m_c.is_square()) throw InputError("wcc_labels: condensation matrix must be square");
    auto labels = equivalence_class_labels(star_closure(m_c | m_c.transposed()));
    for (auto& l : labels) ++l;
    return labels;
}

TableAndPermutation build_table_and_permutation(NodeAttributeTable attrs, const SortOptions& opts) {
    const std::size_t n = attrs.rows.size();
    std::vector<bool> seen(n, false);
    for (const auto& r : attrs.rows) {
        if (r.v_tag == 0 || r.v_tag > n || seen[r.v_tag - 1]) throw InputError("node table: V_TAG is not a permutation of 1..n");
        seen[r.v_tag - 1] = true;
    }
    auto key = [&](const NodeAttributes& r) {
        return opts.isolated_last ? std::make_tuple(r.i_tag, r.g_tag, r.l_tag, r.s_tag, r.v_tag)
                                  : std::make_tuple(r.g_tag, r.i_tag, r.l_tag, r.s_tag, r.v_tag);
    };
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return key(attrs.rows[a]) < key(attrs.rows[b]); });

    std::vector<std::size_t> target_to_source(n);
    for (std::size_t pos = 0; pos < n; ++pos) {
        auto& r = attrs.rows[order[pos]];
        r.v_new_tag = pos + 1;
        target_to_source[pos] = r.v_tag - 1;
    }
    return {std::move(attrs), Permutation(std::move(target_to_source))};
}

AnalysisResult analyze_adjacency(const BoolMatrix& m, const SortOptions& opts) {
    if (!m.is_square() || m.order() == 0) throw InputError("analyze: adjacency must be square and non-empty");
    const std::size_t n = m.order();

    AnalysisResult out;
    out.adjacency = m;
    ClosureTrace closure = star_closure_traced(m);
    out.closure_squarings = closure.squarings;
    const std::vector<std::size_t> s_tag = scc_labels(mutual_reachability(closure.closure));

    NodeAttributeTable table;
    table.rows.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        table.rows[i].v_tag = i + 1;
        table.rows[i].s_tag = s_tag[i];
    }

    out.condensation = condensation(m, s_tag);
    const std::size_t k = out.condensation.k;
    if (k == 1) {
        // A single SCC: one component, one layer, nothing isolated unless n == 1.
        for (auto& r : table.rows) {
            r.g_tag = 1;
            r.l_tag = 1;
            r.i_tag = n == 1 ? 1 : 0;
        }
    } else {
        const auto layer = layer_peel(out.condensation.m_c);
        const auto group = wcc_labels(out.condensation.m_c);
        std::vector<std::size_t> group_size(k + 1, 0);
        for (auto& r : table.rows) {
            r.l_tag = layer[r.s_tag - 1];
            r.g_tag = group[r.s_tag - 1];
            ++group_size[r.g_tag];
        }
        for (auto& r : table.rows) r.i_tag = group_size[r.g_tag] == 1 ? 1 : 0;
    }

    auto sorted = build_table_and_permutation(std::move(table), opts);
    out.table = std::move(sorted.table);
    out.permutation = std::move(sorted.permutation);
    return out;
}

AnalysisResult analyze(const Weights& weights, const StructuralPredicate& pred, const SortOptions& opts) {
    return analyze_adjacency(p_adjacency(weights, pred), opts);
}

}  // namespace blockform
