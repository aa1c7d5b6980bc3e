#pragma once

// Independent reference implementations. None of these share code with the
// library: graphs are plain adjacency lists, numbers come from textbook
// formulas or Boost.Math.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace oracle {

using Dense = std::vector<std::vector<int>>;

/// a[i][j] = 1 means an edge j -> i.
inline Dense random_digraph(std::size_t n, double p, std::mt19937_64& rng) {
    std::bernoulli_distribution edge(p);
    Dense a(n, std::vector<int>(n, 0));
    for (auto& row : a)
        for (auto& v : row) v = edge(rng) ? 1 : 0;
    return a;
}

inline Dense bool_product(const Dense& a, const Dense& b) {
    const std::size_t n = a.size(), m = b.empty() ? 0 : b[0].size();
    Dense c(n, std::vector<int>(m, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t k = 0; k < b.size(); ++k)
                if (a[i][k] && b[k][j]) {
                    c[i][j] = 1;
                    break;
                }
    return c;
}

/// reach[i][j] = 1 iff a path of length >= 0 leads from j to i, following a[x][y] as y -> x.
inline Dense reachability(const Dense& a) {
    const std::size_t n = a.size();
    Dense reach(n, std::vector<int>(n, 0));
    for (std::size_t src = 0; src < n; ++src) {
        std::vector<std::size_t> queue{src};
        reach[src][src] = 1;
        for (std::size_t h = 0; h < queue.size(); ++h) {
            const std::size_t u = queue[h];
            for (std::size_t v = 0; v < n; ++v)
                if (a[v][u] && !reach[v][src]) {
                    reach[v][src] = 1;
                    queue.push_back(v);
                }
        }
    }
    return reach;
}

/// Tarjan's algorithm; returns a component id per node (arbitrary numbering).
inline std::vector<std::size_t> tarjan_scc(const Dense& a) {
    const std::size_t n = a.size();
    std::vector<long> index(n, -1), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack, comp(n, 0);
    long counter = 0;
    std::size_t ncomp = 0;
    std::function<void(std::size_t)> strong = [&](std::size_t u) {
        index[u] = low[u] = counter++;
        stack.push_back(u);
        on_stack[u] = true;
        for (std::size_t v = 0; v < n; ++v) {
            if (!a[v][u]) continue;
            if (index[v] < 0) {
                strong(v);
                low[u] = std::min(low[u], low[v]);
            } else if (on_stack[v]) {
                low[u] = std::min(low[u], index[v]);
            }
        }
        if (low[u] == index[u]) {
            std::size_t w;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                comp[w] = ncomp;
            } while (w != u);
            ++ncomp;
        }
    };
    for (std::size_t u = 0; u < n; ++u)
        if (index[u] < 0) strong(u);
    return comp;
}

/// Weak components by breadth-first search over the symmetrized graph.
inline std::vector<std::size_t> bfs_wcc(const Dense& a) {
    const std::size_t n = a.size();
    std::vector<std::size_t> comp(n, n);
    std::size_t next = 0;
    for (std::size_t s = 0; s < n; ++s) {
        if (comp[s] != n) continue;
        std::vector<std::size_t> queue{s};
        comp[s] = next;
        for (std::size_t h = 0; h < queue.size(); ++h) {
            const std::size_t u = queue[h];
            for (std::size_t v = 0; v < n; ++v)
                if ((a[u][v] || a[v][u]) && comp[v] == n) {
                    comp[v] = next;
                    queue.push_back(v);
                }
        }
        ++next;
    }
    return comp;
}

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

private:
    std::vector<std::size_t> parent_;
};

/// True iff labels a and b induce the same partition.
inline bool same_partition(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j)
            if ((a[i] == a[j]) != (b[i] == b[j])) return false;
    return true;
}

/// Longest-path depth of each node in a DAG (sources have depth 1), following c[x][y] as y -> x.
inline std::vector<std::size_t> dag_depth(const Dense& c) {
    const std::size_t k = c.size();
    std::vector<std::size_t> depth(k, 0);
    std::function<std::size_t(std::size_t)> visit = [&](std::size_t u) -> std::size_t {
        if (depth[u]) return depth[u];
        std::size_t d = 1;
        for (std::size_t v = 0; v < k; ++v)
            if (v != u && c[u][v]) d = std::max(d, visit(v) + 1);
        return depth[u] = d;
    };
    for (std::size_t u = 0; u < k; ++u) visit(u);
    return depth;
}

inline std::vector<double> dense_matvec(const std::vector<std::vector<double>>& w, const std::vector<double>& x) {
    std::vector<double> y(w.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) s += w[i][j] * x[j];
        y[i] = s;
    }
    return y;
}

/// Normal quantile by bisection on 0.5 * erfc(-x / sqrt 2).
inline double normal_quantile_bisect(double p) {
    double lo = -40.0, hi = 40.0;
    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// Closed form for even degrees of freedom: P(chi^2_{2m} <= x) = 1 - e^{-x/2} sum_{r<m} (x/2)^r / r!.
inline double chi2_even_cdf(double x, int dof) {
    const int m = dof / 2;
    double term = 1.0, sum = 1.0;
    for (int r = 1; r < m; ++r) {
        term *= (x / 2.0) / r;
        sum += term;
    }
    return 1.0 - std::exp(-x / 2.0) * sum;
}

inline double chi2_even_quantile_bisect(double p, int dof) {
    double lo = 0.0, hi = 1000.0;
    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (chi2_even_cdf(mid, dof) < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

inline double boost_normal_quantile(double p) { return boost::math::quantile(boost::math::normal_distribution<>(), p); }

inline double boost_chi2_quantile(double p, double dof) {
    return boost::math::quantile(boost::math::chi_squared_distribution<>(dof), p);
}

inline double boost_chi2_cdf(double x, double dof) {
    return boost::math::cdf(boost::math::chi_squared_distribution<>(dof), x);
}

/// Exact binomial CDF with integer binomial coefficients (k <= 60).
inline double binomial_cdf_exact(std::size_t k, std::size_t trials, double p) {
    double total = 0.0;
    for (std::size_t r = 0; r <= std::min(k, trials); ++r) {
        std::uint64_t c = 1;
        for (std::size_t t = 1; t <= r; ++t) c = c * (trials - r + t) / t;
        total += static_cast<double>(c) * std::pow(p, static_cast<double>(r)) *
                 std::pow(1.0 - p, static_cast<double>(trials - r));
    }
    return total;
}

}  // namespace oracle
