#include "blockform/annealing.hpp"

#include <algorithm>
#include <cmath>

#include "blockform/distributions.hpp"
#include "blockform/errors.hpp"

namespace blockform {

namespace {

constexpr double normal_mad_scale = 0.674489750196;

void require_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("significance level must lie in (0, 1)");
}

struct Band {
    double lo;
    double hi;
    bool contains(double v) const { return v >= lo && v <= hi; }
};

Band noise_band(std::size_t n, double delta) {
    const double center = 1.0 / static_cast<double>(n);
    return {center - delta, center + delta};
}

std::size_t bin_of(double v, double lo, double hi, std::size_t bins) {
    const double pos = (v - lo) / (hi - lo) * static_cast<double>(bins);
    if (!(pos > 0.0)) return 0;
    const auto b = static_cast<std::size_t>(pos);
    return b < bins ? b : bins - 1;
}

// Uniformity verdict for the values inside `band`. An empty band gives no
// evidence of noise and stops the expansion; a band whose values all fall
// into one bin is the degenerate (accepted) case.
bool uniformity_rejected(std::span<const double> population, Band band, const TestConfig& cfg, double critical) {
    std::vector<double> inside;
    for (double v : population)
        if (band.contains(v)) inside.push_back(v);
    if (inside.empty()) return true;
    const std::size_t first = bin_of(inside.front(), band.lo, band.hi, cfg.bins);
    const bool single_bin = std::all_of(inside.begin(), inside.end(), [&](double v) {
        return bin_of(v, band.lo, band.hi, cfg.bins) == first;
    });
    if (single_bin) return false;
    return pearson_uniform_statistic(inside, band.lo, band.hi, cfg.bins) > critical;
}

double median_abs(std::vector<double> values) {
    for (auto& v : values) v = std::fabs(v);
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
    std::nth_element(values.begin(), mid, values.end());
    double m = *mid;
    if (values.size() % 2 == 0) {
        const double lower = *std::max_element(values.begin(), mid);
        m = 0.5 * (m + lower);
    }
    return m;
}

void count_label(AnnealReport& r, EdgeLabel label) {
    ++r.label_counts[static_cast<std::size_t>(label)];
}

AnnealedSystem anneal_scalar(const RealMatrix& w, std::optional<InitDistribution> f0, const TestConfig& cfg) {
    if (!w.is_square()) throw InputError("anneal: weight matrix must be square");
    const std::size_t n = w.rows();

    AnnealReport report;
    report.alpha = cfg.alpha;
    report.sigma_estimated = !f0.has_value();
    const InitDistribution dist = f0.value_or(InitDistribution{estimate_sigma(w.data())});
    if (!(dist.sigma > 0.0)) throw InputError("anneal: sigma must be positive");
    report.sigma = dist.sigma;
    report.threshold = neyman_threshold(dist, cfg.alpha);

    const RowNormalized norm = row_normalize(w);
    report.zero_rows = static_cast<std::size_t>(std::count(norm.zero_row.begin(), norm.zero_row.end(), true));
    report.delta = estimate_bandwidth(norm.values.data(), n, cfg);

    AnnealedSystem out{w, EdgeClassification{n, std::vector<EdgeLabel>(n * n), std::vector<bool>(n * n, false)}, {}};
    auto& weights = std::get<RealMatrix>(out.weights);
    report.statistic.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t e = i * n + j;
            report.statistic[e] = std::fabs(w(i, j)) / dist.sigma;
            const bool significant = std::fabs(w(i, j)) >= report.threshold;
            const EdgeClass cls = classify_edge(norm.values(i, j), n, report.delta);
            const EdgeLabel label = cls == EdgeClass::preference   ? EdgeLabel::preference
                                    : cls == EdgeClass::suppressed ? EdgeLabel::suppressed
                                                                   : EdgeLabel::noise;
            const bool structural =
                cls == EdgeClass::preference || (cfg.retain_suppressed && cls == EdgeClass::suppressed);
            out.classification.label[e] = label;
            out.classification.kept[e] = significant && structural;
            count_label(report, label);
            if (out.classification.kept[e])
                ++report.kept;
            else
                weights(i, j) = 0.0;
        }
    }
    report.removed = n * n - report.kept;
    out.report = std::move(report);
    return out;
}

AnnealedSystem anneal_bundle(const ChannelBundle& b, std::optional<InitDistribution> f0, const TestConfig& cfg) {
    const std::size_t n = b.order();
    const std::size_t k = b.sequence_length();
    if (k != cfg.k) throw InputError("anneal: bundle sequence length does not match configured k");

    std::vector<const RealMatrix*> channels;
    for (const auto& m : b.w1()) channels.push_back(&m);
    for (const auto& m : b.w2()) channels.push_back(&m);

    AnnealReport report;
    report.alpha = cfg.alpha;
    report.sigma_estimated = !f0.has_value();
    if (!f0) {
        std::vector<double> all;
        all.reserve(n * n * k);
        for (const auto* m : channels) all.insert(all.end(), m->data().begin(), m->data().end());
        f0 = InitDistribution{estimate_sigma(all)};
    }
    if (!(f0->sigma > 0.0)) throw InputError("anneal: sigma must be positive");
    report.sigma = f0->sigma;
    report.threshold = sequence_norm_threshold(k, cfg.alpha);

    std::vector<RealMatrix> normalized;
    std::vector<double> population;
    population.reserve(n * n * k);
    for (const auto* m : channels) {
        RowNormalized rn = row_normalize(*m);
        report.zero_rows += static_cast<std::size_t>(std::count(rn.zero_row.begin(), rn.zero_row.end(), true));
        population.insert(population.end(), rn.values.data().begin(), rn.values.data().end());
        normalized.push_back(std::move(rn.values));
    }
    report.delta = estimate_bandwidth(population, n, cfg);
    const Band band = noise_band(n, report.delta);
    const auto in_band = static_cast<double>(std::count_if(population.begin(), population.end(),
                                                           [&](double v) { return band.contains(v); }));
    const double p0 = in_band / static_cast<double>(population.size());
    report.p0 = p0;
    const bool p0_informative = p0 > 0.0 && p0 < 1.0;

    AnnealedSystem out{b, EdgeClassification{n, std::vector<EdgeLabel>(n * n), std::vector<bool>(n * n, false)}, {}};
    auto& weights = std::get<ChannelBundle>(out.weights);
    report.statistic.resize(n * n);
    report.noise_count.resize(n * n);
    const std::vector<double> zeros(k, 0.0);
    std::vector<double> seq_normalized(k);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t e = i * n + j;
            const std::vector<double> seq = b.edge_sequence(i, j);
            double energy = 0.0;
            for (double x : seq) energy += x * x;
            report.statistic[e] = energy / (f0->sigma * f0->sigma);
            for (std::size_t g = 0; g < k; ++g) seq_normalized[g] = normalized[g](i, j);
            report.noise_count[e] = static_cast<std::size_t>(
                std::count_if(seq_normalized.begin(), seq_normalized.end(), [&](double v) { return band.contains(v); }));

            EdgeLabel label = EdgeLabel::kept;
            if (sequence_norm_test(seq, f0->sigma, cfg.alpha) == EdgeFate::remove)
                label = EdgeLabel::removed_norm;
            else if (!p0_informative ||
                     channel_consistency_test(seq_normalized, n, report.delta, p0, cfg.alpha) == EdgeFate::remove)
                label = EdgeLabel::noise;

            out.classification.label[e] = label;
            out.classification.kept[e] = label == EdgeLabel::kept;
            count_label(report, label);
            if (label == EdgeLabel::kept)
                ++report.kept;
            else
                weights.set_edge_sequence(i, j, zeros);
        }
    }
    report.removed = n * n - report.kept;
    out.report = std::move(report);
    return out;
}

}  // namespace

void TestConfig::validate() const {
    require_alpha(alpha);
    if (delta0 < 0.0 || tau < 0.0) throw InputError("bandwidth parameters must be positive (0 selects the default)");
    if (bins < 2) throw InputError("goodness-of-fit needs at least 2 bins");
    if (k == 0 || k % 2 != 0) throw InputError("channel sequence length must be even and positive");
}

const char* to_string(EdgeLabel label) {
    switch (label) {
        case EdgeLabel::preference: return "preference";
        case EdgeLabel::noise: return "noise";
        case EdgeLabel::suppressed: return "suppressed";
        case EdgeLabel::removed_norm: return "removed_norm";
        case EdgeLabel::kept: return "kept";
    }
    return "noise";
}

double neyman_threshold(const InitDistribution& f0, double alpha) {
    require_alpha(alpha);
    if (!(f0.sigma > 0.0)) throw InputError("initialization sigma must be positive");
    return f0.sigma * stats::normal_quantile(1.0 - alpha / 2.0);
}

TailDecision neyman_tail_test(double w, const InitDistribution& f0, double alpha) {
    if (!std::isfinite(w)) throw InputError("neyman_tail_test: non-finite weight");
    return std::fabs(w) >= neyman_threshold(f0, alpha) ? TailDecision::reject : TailDecision::accept;
}

RowNormalized row_normalize(const RealMatrix& w) {
    if (!w.is_square()) throw InputError("row_normalize: matrix must be square");
    RowNormalized out{RealMatrix(w.rows(), w.cols()), std::vector<bool>(w.rows(), false)};
    for (std::size_t i = 0; i < w.rows(); ++i) {
        double total = 0.0;
        for (double v : w.row(i)) total += std::fabs(v);
        if (total == 0.0) {
            out.zero_row[i] = true;
            continue;
        }
        auto dst = out.values.row(i);
        const auto src = w.row(i);
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] = std::fabs(src[j]) / total;
    }
    return out;
}

double pearson_uniform_statistic(std::span<const double> values, double lo, double hi, std::size_t bins) {
    if (bins < 2 || !(hi > lo)) throw InputError("pearson_uniform_statistic: invalid binning");
    if (values.empty()) return 0.0;
    std::vector<std::size_t> observed(bins, 0);
    for (double v : values) ++observed[bin_of(v, lo, hi, bins)];
    const double expected = static_cast<double>(values.size()) / static_cast<double>(bins);
    double stat = 0.0;
    for (auto o : observed) {
        const double d = static_cast<double>(o) - expected;
        stat += d * d / expected;
    }
    return stat;
}

double estimate_bandwidth(std::span<const double> population, std::size_t n, const TestConfig& cfg) {
    if (population.empty()) throw InputError("estimate_bandwidth: empty population");
    if (n == 0) throw InputError("estimate_bandwidth: state count must be positive");
    cfg.validate();
    const double cap = 1.0 / static_cast<double>(n);
    const double delta0 = cfg.delta0 > 0.0 ? cfg.delta0 : cap / 10.0;
    const double tau = cfg.tau > 0.0 ? cfg.tau : delta0;
    const double critical = stats::chi_squared_quantile(1.0 - cfg.alpha, static_cast<double>(cfg.bins - 1));

    std::optional<double> accepted;
    double delta = std::min(delta0, cap);
    while (true) {
        if (uniformity_rejected(population, noise_band(n, delta), cfg, critical)) return accepted.value_or(delta0);
        accepted = delta;
        if (delta >= cap) return cap;
        delta = std::min(delta + tau, cap);
    }
}

EdgeClass classify_edge(double normalized, std::size_t n, double delta) {
    if (!(delta > 0.0)) throw InputError("classify_edge: bandwidth must be positive");
    const Band band = noise_band(n, delta);
    if (normalized > band.hi) return EdgeClass::preference;
    if (normalized < band.lo) return EdgeClass::suppressed;
    return EdgeClass::noise;
}

double sequence_norm_threshold(std::size_t k, double alpha) {
    require_alpha(alpha);
    if (k == 0) throw InputError("sequence length must be positive");
    return stats::chi_squared_quantile(1.0 - alpha, static_cast<double>(k));
}

EdgeFate sequence_norm_test(std::span<const double> seq, double sigma, double alpha) {
    if (seq.empty()) throw InputError("sequence_norm_test: empty sequence");
    if (!(sigma > 0.0)) throw InputError("sequence_norm_test: sigma must be positive");
    require_finite(seq, "sequence_norm_test");
    double energy = 0.0;
    for (double x : seq) energy += x * x;
    const double statistic = energy / (sigma * sigma);
    return statistic >= sequence_norm_threshold(seq.size(), alpha) ? EdgeFate::keep : EdgeFate::remove;
}

EdgeFate channel_consistency_test(std::span<const double> seq_normalized, std::size_t n, double delta, double p0,
                                  double alpha) {
    if (!(p0 > 0.0 && p0 < 1.0)) throw InputError("channel_consistency_test: p0 must lie in (0, 1)");
    require_alpha(alpha);
    if (seq_normalized.empty()) throw InputError("channel_consistency_test: empty sequence");
    const Band band = noise_band(n, delta);
    const auto in_band = static_cast<std::size_t>(
        std::count_if(seq_normalized.begin(), seq_normalized.end(), [&](double v) { return band.contains(v); }));
    const double p_value = stats::binomial_cdf(in_band, seq_normalized.size(), p0);
    return p_value <= alpha ? EdgeFate::keep : EdgeFate::remove;
}

double estimate_sigma(std::span<const double> population) {
    if (population.empty()) throw InputError("estimate_sigma: empty population");
    std::vector<double> values(population.begin(), population.end());
    double m = median_abs(values);
    if (m == 0.0) {
        // Mostly exact zeros: fall back to the nonzero entries.
        std::vector<double> nonzero;
        std::copy_if(values.begin(), values.end(), std::back_inserter(nonzero), [](double v) { return v != 0.0; });
        if (nonzero.empty()) return 1.0;
        m = median_abs(std::move(nonzero));
    }
    return m / normal_mad_scale;
}

std::size_t weights_order(const Weights& w) {
    return std::visit(
        [](const auto& m) -> std::size_t {
            if constexpr (std::is_same_v<std::decay_t<decltype(m)>, RealMatrix>)
                return m.rows();
            else
                return m.order();
        },
        w);
}

AnnealedSystem anneal(const Weights& weights, std::optional<InitDistribution> f0, const TestConfig& cfg) {
    cfg.validate();
    if (const auto* m = std::get_if<RealMatrix>(&weights)) return anneal_scalar(*m, f0, cfg);
    return anneal_bundle(std::get<ChannelBundle>(weights), f0, cfg);
}

}  // namespace blockform
