#include "blockform/training_sim.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "blockform/errors.hpp"

namespace blockform {

void ActivationTrace::validate() const {
    for (const auto& step : steps) {
        for (std::size_t r = 0; r < step.size(); ++r) {
            if (step[r] >= n) throw InputError("activation trace: state index out of range");
            if (r > 0 && step[r] <= step[r - 1]) throw InputError("activation trace: step indices must be strictly ascending");
        }
    }
}

std::vector<std::size_t> activated_states(std::span<const double> x) {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] != 0.0) s.push_back(i);
    return s;
}

void apply_local_update(RealMatrix& w, std::span<const double> x, std::span<const double> g_y, double eta) {
    if (!(eta > 0.0)) throw InputError("learning rate must be positive");
    if (!w.is_square() || x.size() != w.rows() || g_y.size() != w.rows())
        throw InputError("local update: size mismatch");
    const auto active = activated_states(x);
    for (auto i : active)
        for (auto j : active) subtract_increment(w(i, j), eta, g_y[i], x[j]);
}

RealMatrix local_update_step(const RealMatrix& w, std::span<const double> x, std::span<const double> g_y, double eta) {
    RealMatrix out = w;
    apply_local_update(out, x, g_y, eta);
    return out;
}

CoOccurrence build_co_occurrence(const ActivationTrace& trace) {
    trace.validate();
    CoOccurrence o{trace.n, BoolMatrix::identity(trace.n)};
    for (const auto& step : trace.steps)
        for (auto i : step)
            for (auto j : step) o.relation.set(i, j);
    return o;
}

CouplingPartition coupling_partition(const CoOccurrence& o) {
    CouplingPartition part;
    part.n = o.n;
    part.class_of = equivalence_class_labels(star_closure(o.relation));
    const std::size_t k = part.class_of.empty() ? 0 : *std::max_element(part.class_of.begin(), part.class_of.end()) + 1;
    part.classes.resize(k);
    for (std::size_t i = 0; i < o.n; ++i) part.classes[part.class_of[i]].push_back(i);
    return part;
}

InvarianceReport verify_block_invariance(const RealMatrix& w0, const RealMatrix& w_final, const CouplingPartition& part) {
    if (w0.rows() != w_final.rows() || w0.cols() != w_final.cols() || w0.rows() != part.n || !w0.is_square())
        throw InputError("block invariance: size mismatch");
    InvarianceReport report;
    for (std::size_t i = 0; i < part.n; ++i)
        for (std::size_t j = 0; j < part.n; ++j) {
            if (part.class_of[i] == part.class_of[j]) continue;
            const double a = w0(i, j);
            const double b = w_final(i, j);
            if (!bitwise_equal(std::span(&a, 1), std::span(&b, 1))) report.violations.emplace_back(i, j);
        }
    return report;
}

MinimalityReport verify_block_minimality(const CoOccurrence& o, const CouplingPartition& part) {
    if (o.n != part.n) throw InputError("block minimality: size mismatch");
    MinimalityReport report;
    for (std::size_t c = 0; c < part.classes.size(); ++c) {
        const auto& members = part.classes[c];
        BoolMatrix sub(members.size());
        for (std::size_t a = 0; a < members.size(); ++a)
            for (std::size_t b = 0; b < members.size(); ++b)
                if (o.relation.test(members[a], members[b])) sub.set(a, b);
        const BoolMatrix reach = star_closure(sub);
        if (reach.count() != members.size() * members.size()) report.disconnected_classes.push_back(c);
    }
    return report;
}

PlantedSystem generate_planted_system(const PlantConfig& cfg) {
    if (cfg.n == 0 || cfg.k_blocks == 0 || cfg.k_blocks > cfg.n) throw InputError("planted system: need 1 <= k_blocks <= n");
    if (!(cfg.eta > 0.0) || !(cfg.init_sigma > 0.0)) throw InputError("planted system: eta and init_sigma must be positive");
    if (!(cfg.activation_prob > 0.0 && cfg.activation_prob <= 1.0) || cfg.cross_group_prob < 0.0 || cfg.cross_group_prob > 1.0)
        throw InputError("planted system: probabilities out of range");

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> init(0.0, cfg.init_sigma);
    std::normal_distribution<double> unit(0.0, 1.0);
    std::bernoulli_distribution active(cfg.activation_prob);
    std::bernoulli_distribution cross(cfg.cross_group_prob);

    PlantedSystem sys;
    sys.k_blocks = cfg.k_blocks;
    sys.w0 = RealMatrix(cfg.n, cfg.n);
    for (auto& v : sys.w0.data()) v = init(rng);

    std::vector<std::size_t> order(cfg.n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    sys.group_of.assign(cfg.n, 0);
    std::vector<std::vector<std::size_t>> groups(cfg.k_blocks);
    for (std::size_t r = 0; r < cfg.n; ++r) {
        const std::size_t g = r * cfg.k_blocks / cfg.n;
        sys.group_of[order[r]] = g;
        groups[g].push_back(order[r]);
    }
    for (auto& g : groups) std::sort(g.begin(), g.end());

    sys.w_final = sys.w0;
    sys.trace.n = cfg.n;
    std::uniform_int_distribution<std::size_t> pick_group(0, cfg.k_blocks - 1);
    std::uniform_int_distribution<std::size_t> pick_state(0, cfg.n - 1);
    RealVector x(cfg.n), g_y(cfg.n);
    for (std::size_t t = 0; t < cfg.steps; ++t) {
        const std::size_t g = pick_group(rng);
        std::vector<std::size_t> step;
        for (auto s : groups[g])
            if (active(rng)) step.push_back(s);
        if (cfg.k_blocks > 1 && cross(rng)) {
            std::size_t s = pick_state(rng);
            while (sys.group_of[s] == g) s = pick_state(rng);
            step.insert(std::upper_bound(step.begin(), step.end(), s), s);
        }
        std::fill(x.begin(), x.end(), 0.0);
        std::fill(g_y.begin(), g_y.end(), 0.0);
        for (auto s : step) {
            double v = unit(rng);
            x[s] = v != 0.0 ? v : 1.0;
            g_y[s] = unit(rng);
        }
        apply_local_update(sys.w_final, x, g_y, cfg.eta);
        sys.trace.steps.push_back(std::move(step));
    }
    return sys;
}

}  // namespace blockform
