#pragma once

// Statistical annealing: decide, edge by edge, whether a trained parameter
// carries learned structure or is indistinguishable from initialization
// noise, and zero out the latter.
//
// Scalar weights use a two-sided tail test against the initialization
// distribution together with the random-walk equiprobability classification
// of row-normalized magnitudes. Channel bundles use a chi-squared test on
// the sequence norm together with a binomial multi-channel consistency test.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "blockform/core_linalg.hpp"

namespace blockform {

/// Zero-mean Gaussian initialization N(0, sigma^2).
struct InitDistribution {
    double sigma = 1.0;
};

struct TestConfig {
    double alpha = 0.05;
    /// Initial bandwidth; 0 selects 1 / (10 n).
    double delta0 = 0.0;
    /// Bandwidth increment; 0 selects delta0.
    double tau = 0.0;
    std::size_t bins = 10;
    /// Expected channel-sequence length (bundle input only).
    std::size_t k = 8;
    /// Keep systematically suppressed edges instead of removing them.
    bool retain_suppressed = false;

    void validate() const;
};

enum class TailDecision { reject, accept };
enum class EdgeClass { preference, noise, suppressed };
enum class EdgeFate { keep, remove };

/// Labels recorded per edge. Scalar input yields preference/noise/suppressed;
/// bundle input yields kept/removed_norm/noise.
enum class EdgeLabel { preference, noise, suppressed, removed_norm, kept };

const char* to_string(EdgeLabel label);

/// c_alpha = sigma * Phi^-1(1 - alpha / 2).
double neyman_threshold(const InitDistribution& f0, double alpha);

/// Reject H0 ("w was drawn from f0") iff |w| >= c_alpha.
TailDecision neyman_tail_test(double w, const InitDistribution& f0, double alpha);

struct RowNormalized {
    RealMatrix values;
    /// Rows whose absolute sum is zero; they normalize to all zeros.
    std::vector<bool> zero_row;
};

/// w~_ij = |w_ij| / sum_j |w_ij|.
RowNormalized row_normalize(const RealMatrix& w);

/// Pearson chi-squared statistic of `values` against a uniform law on [lo, hi] with `bins` equal bins.
double pearson_uniform_statistic(std::span<const double> values, double lo, double hi, std::size_t bins);

/// Widens [1/n - delta, 1/n + delta] from delta0 in steps of tau while the values
/// inside stay consistent with uniformity; returns the last accepted delta (delta0 if
/// the first test already rejects), capped at 1/n.
double estimate_bandwidth(std::span<const double> population, std::size_t n, const TestConfig& cfg);

EdgeClass classify_edge(double normalized, std::size_t n, double delta);

/// Upper (1 - alpha) quantile of chi^2_k.
double sequence_norm_threshold(std::size_t k, double alpha);

/// Keep iff sum x_g^2 / sigma^2 >= the (1 - alpha) quantile of chi^2_k, k = seq.size().
EdgeFate sequence_norm_test(std::span<const double> seq, double sigma, double alpha);

/// Keep iff P(Binomial(k, p0) <= K) <= alpha, K = #{g : |x_g - 1/n| <= delta}.
EdgeFate channel_consistency_test(std::span<const double> seq_normalized, std::size_t n, double delta, double p0,
                                  double alpha);

/// sigma-hat = median(|w|) / 0.674489750196.
double estimate_sigma(std::span<const double> population);

struct EdgeClassification {
    std::size_t n = 0;
    std::vector<EdgeLabel> label;
    std::vector<bool> kept;

    EdgeLabel at(std::size_t i, std::size_t j) const { return label[i * n + j]; }
    bool is_kept(std::size_t i, std::size_t j) const { return kept[i * n + j]; }
};

struct AnnealReport {
    double sigma = 0.0;
    bool sigma_estimated = false;
    double alpha = 0.0;
    /// Neyman c_alpha (scalar) or chi^2_k quantile (bundle).
    double threshold = 0.0;
    double delta = 0.0;
    /// Fraction of the normalized population inside the noise band (bundle input only).
    std::optional<double> p0;
    std::size_t zero_rows = 0;
    /// Indexed by EdgeLabel.
    std::array<std::size_t, 5> label_counts{};
    std::size_t kept = 0;
    std::size_t removed = 0;
    /// |w| / sigma (scalar) or sum x^2 / sigma^2 (bundle), per edge.
    std::vector<double> statistic;
    /// Components in the noise band, per edge (bundle input only).
    std::vector<std::size_t> noise_count;
};

using Weights = std::variant<RealMatrix, ChannelBundle>;

std::size_t weights_order(const Weights& w);

struct AnnealedSystem {
    Weights weights;
    EdgeClassification classification;
    AnnealReport report;
};

/// Scalar: keep an edge iff the tail test rejects and its class is preference
/// (or suppressed with retain_suppressed). Bundle: keep iff both the norm and the
/// consistency test keep it. Removed edges are set to 0.0 in every channel.
/// When `f0` is absent, sigma is estimated robustly from all parameters.
AnnealedSystem anneal(const Weights& weights, std::optional<InitDistribution> f0, const TestConfig& cfg);

}  // namespace blockform
