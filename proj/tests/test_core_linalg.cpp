#include <doctest.h>

#include <cmath>
#include <random>

#include "blockform/core_linalg.hpp"
#include "blockform/errors.hpp"
#include "helpers.hpp"

using namespace blockform;
using testing::to_bool;
using testing::to_dense;

TEST_SUITE("core-linalg") {

TEST_CASE("real matrix rejects non-finite entries and bad shapes") {
    CHECK_THROWS_AS(RealMatrix(2, 2, std::vector<double>{1, 2, 3}), InputError);
    CHECK_THROWS_AS(RealMatrix(1, 2, std::vector<double>{1, NAN}), InputError);
    CHECK_THROWS_AS(RealMatrix(1, 1, std::vector<double>{INFINITY}), InputError);
    CHECK_NOTHROW(RealMatrix(1, 2, std::vector<double>{1, -0.0}));
}

TEST_CASE("bitwise equality distinguishes signed zeros") {
    RealMatrix a(1, 1, 0.0), b(1, 1, -0.0);
    CHECK(a == b);
    CHECK_FALSE(bitwise_equal(a, b));
}

TEST_CASE("boolean product identities") {
    std::mt19937_64 rng(7);
    const auto a = to_bool(oracle::random_digraph(13, 0.3, rng));
    CHECK(boolean_product(a, BoolMatrix::identity(13)) == a);
    CHECK(boolean_product(BoolMatrix::identity(13), a) == a);

    const auto swap = BoolMatrix::from_rows({"01", "10"});
    CHECK(boolean_product(swap, swap) == BoolMatrix::identity(2));
}

TEST_CASE("boolean product matches the naive triple loop") {
    std::mt19937_64 rng(11);
    for (std::size_t n : {1u, 8u, 63u, 64u, 65u, 130u}) {
        const auto a = oracle::random_digraph(n, 0.1, rng);
        const auto b = oracle::random_digraph(n, 0.1, rng);
        CHECK(to_dense(boolean_product(to_bool(a), to_bool(b))) == oracle::bool_product(a, b));
    }
}

TEST_CASE("boolean product on rectangular operands") {
    std::mt19937_64 rng(3);
    oracle::Dense a(5, std::vector<int>(70)), b(70, std::vector<int>(9));
    std::bernoulli_distribution bit(0.2);
    for (auto& r : a)
        for (auto& v : r) v = bit(rng);
    for (auto& r : b)
        for (auto& v : r) v = bit(rng);
    CHECK(to_dense(boolean_product(to_bool(a), to_bool(b))) == oracle::bool_product(a, b));
    CHECK_THROWS_AS(boolean_product(BoolMatrix(3, 4), BoolMatrix(3, 4)), InputError);
}

TEST_CASE("boolean product is associative") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 30; ++t) {
        const std::size_t n = 1 + t % 16;
        const auto a = to_bool(oracle::random_digraph(n, 0.25, rng));
        const auto b = to_bool(oracle::random_digraph(n, 0.25, rng));
        const auto c = to_bool(oracle::random_digraph(n, 0.25, rng));
        CHECK(boolean_product(boolean_product(a, b), c) == boolean_product(a, boolean_product(b, c)));
    }
}

TEST_CASE("boolean matrix-vector product") {
    const auto a = BoolMatrix::from_rows({"010", "001", "000"});
    CHECK(boolean_product(a, std::vector<bool>{false, true, false}) == std::vector<bool>{true, false, false});
}

TEST_CASE("negation keeps padding clear") {
    BoolMatrix z(3, 70);
    const auto all = ~z;
    CHECK(all.count() == 3 * 70);
    CHECK((~all).count() == 0);
}

TEST_CASE("closure squaring count") {
    CHECK(closure_squarings(1) == 0);
    CHECK(closure_squarings(2) == 0);
    CHECK(closure_squarings(3) == 1);
    CHECK(closure_squarings(18) == 5);
    CHECK(closure_squarings(1024) == 10);
    CHECK(closure_squarings(1025) == 10);
    CHECK(closure_squarings(1026) == 11);
}

TEST_CASE("closure of the zero matrix is the identity") {
    for (std::size_t n : {1u, 2u, 17u, 64u})
        CHECK(star_closure(BoolMatrix(n)) == BoolMatrix::identity(n));
}

TEST_CASE("closure matches breadth-first reachability") {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 40; ++t) {
        const std::size_t n = 2 + t * 3;
        const auto a = oracle::random_digraph(n, 1.5 / static_cast<double>(n), rng);
        const auto trace = star_closure_traced(to_bool(a));
        CHECK(trace.squarings == closure_squarings(n));
        CHECK(to_dense(trace.closure) == oracle::reachability(a));
        CHECK(star_closure(to_bool(a), true) == trace.closure);
    }
}

TEST_CASE("closure of a long path needs every squaring") {
    const std::size_t n = 33;
    BoolMatrix path(n);
    for (std::size_t i = 1; i < n; ++i) path.set(i, i - 1);
    const auto c = star_closure(path);
    CHECK(c.test(n - 1, 0));
    CHECK_FALSE(c.test(0, n - 1));
}

TEST_CASE("closure properties: idempotent and above M | I") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 20; ++t) {
        const auto m = to_bool(oracle::random_digraph(5 + t, 0.1, rng));
        const auto c = star_closure(m);
        CHECK(star_closure(c) == c);
        CHECK(((m | BoolMatrix::identity(m.order())) & ~c).count() == 0);
    }
}

TEST_CASE("mutual reachability is an equivalence relation") {
    std::mt19937_64 rng(4);
    CHECK(mutual_reachability(BoolMatrix::identity(6)) == BoolMatrix::identity(6));
    for (int t = 0; t < 20; ++t) {
        const auto b = mutual_reachability(star_closure(to_bool(oracle::random_digraph(10 + t, 0.08, rng))));
        CHECK(b == b.transposed());
        for (std::size_t i = 0; i < b.order(); ++i) CHECK(b.test(i, i));
        CHECK(boolean_product(b, b) == b);
    }
}

TEST_CASE("mutual reachability of a DAG is the identity") {
    std::mt19937_64 rng(17);
    std::bernoulli_distribution edge(0.3);
    for (int t = 0; t < 10; ++t) {
        const std::size_t n = 20;
        BoolMatrix dag(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (edge(rng)) dag.set(i, j);
        CHECK(mutual_reachability(star_closure(dag)) == BoolMatrix::identity(n));
    }
}

TEST_CASE("equivalence labels by min-scan") {
    const auto e = BoolMatrix::from_rows({"1010", "0101", "1010", "0101"});
    CHECK(equivalence_class_labels(e) == std::vector<std::size_t>{0, 1, 0, 1});
    CHECK_THROWS_AS(equivalence_class_labels(BoolMatrix(2)), InputError);
}

TEST_CASE("example closure yields the golden SCC grouping") {
    const auto b = mutual_reachability(star_closure(testing::example_adjacency()));
    const auto labels = equivalence_class_labels(b);
    std::vector<std::size_t> golden_s(18);
    for (const auto& r : testing::example_golden()) golden_s[r[0] - 1] = r[1] - 1;
    CHECK(labels == golden_s);
    CHECK(b.test(9, 17));
    CHECK(labels[9] == 5);
    CHECK(labels[17] == 5);
}

TEST_CASE("matvec basics and oracle agreement") {
    std::mt19937_64 rng(2);
    const auto x = testing::random_vector(6, rng);
    CHECK(bitwise_equal(matvec(RealMatrix::identity(6), x), x));
    const auto z = matvec(RealMatrix(6, 6), x);
    for (double v : z) CHECK(v == 0.0);
    const auto w = testing::random_matrix(6, 6, rng);
    CHECK(bitwise_equal(matvec(w, x), oracle::dense_matvec(testing::to_rows(w), x)));
    CHECK_THROWS_AS(matvec(w, std::vector<double>(5)), InputError);
}

TEST_CASE("matvec is exactly linear on integer data") {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> d(-50, 50);
    RealMatrix w(9, 9);
    for (auto& v : w.data()) v = d(rng);
    std::vector<double> x(9), y(9), s(9);
    for (std::size_t i = 0; i < 9; ++i) {
        x[i] = d(rng);
        y[i] = d(rng);
        s[i] = x[i] + y[i];
    }
    const auto a = matvec(w, x), b = matvec(w, y), c = matvec(w, s);
    for (std::size_t i = 0; i < 9; ++i) CHECK(c[i] == a[i] + b[i]);
}

TEST_CASE("nonlinearity registry") {
    CHECK(parse_nonlinearity("relu") == Nonlinearity::relu);
    CHECK(to_string(Nonlinearity::tanh) == "tanh");
    CHECK_THROWS_AS(parse_nonlinearity("gelu"), InputError);
    CHECK(apply_nonlinearity(Nonlinearity::relu, -2.0) == 0.0);
    CHECK(apply_nonlinearity(Nonlinearity::identity, -2.0) == -2.0);
}

TEST_CASE("channel bundle edge sequences") {
    auto b = ChannelBundle::zeros(3, 8);
    CHECK(b.sequence_length() == 8);
    CHECK(b.channel_count() == 4);
    const std::vector<double> seq{1, 2, 3, 4, 5, 6, 7, 8};
    b.set_edge_sequence(1, 2, seq);
    CHECK(b.edge_sequence(1, 2) == seq);
    CHECK(b.w1()[3](1, 2) == 4.0);
    CHECK(b.w2()[0](1, 2) == 5.0);
    CHECK_THROWS_AS(ChannelBundle::zeros(3, 3), InputError);
    CHECK_THROWS_AS(ChannelBundle({RealMatrix(2, 2)}, {RealMatrix(3, 3)}), InputError);
}

TEST_CASE("channel forward") {
    std::mt19937_64 rng(12);
    const std::size_t n = 7;
    const auto x = testing::random_vector(n, rng);

    SUBCASE("zero second layer gives zero output") {
        ChannelBundle b({testing::random_matrix(n, n, rng)}, {RealMatrix(n, n)});
        for (double v : channel_forward(b, x, Nonlinearity::tanh)) CHECK(v == 0.0);
    }
    SUBCASE("single identity channel is a stepwise composition") {
        const auto w1 = testing::random_matrix(n, n, rng), w2 = testing::random_matrix(n, n, rng);
        ChannelBundle b({w1}, {w2});
        const auto expect = matvec(w2, matvec(w1, x));
        const auto got = channel_forward(b, x, Nonlinearity::identity);
        for (std::size_t i = 0; i < n; ++i) CHECK(got[i] == expect[i]);
    }
    SUBCASE("relu bundle matches a scalar-loop oracle") {
        std::vector<RealMatrix> w1, w2;
        for (int g = 0; g < 4; ++g) {
            w1.push_back(testing::random_matrix(n, n, rng));
            w2.push_back(testing::random_matrix(n, n, rng));
        }
        ChannelBundle b(w1, w2);
        std::vector<double> expect(n, 0.0);
        for (int g = 0; g < 4; ++g) {
            auto h = oracle::dense_matvec(testing::to_rows(w1[g]), x);
            for (auto& v : h) v = v > 0.0 ? v : 0.0;
            const auto part = oracle::dense_matvec(testing::to_rows(w2[g]), h);
            for (std::size_t i = 0; i < n; ++i) expect[i] += part[i];
        }
        const auto got = channel_forward(b, x, Nonlinearity::relu);
        for (std::size_t i = 0; i < n; ++i) CHECK(got[i] == expect[i]);
    }
}

}
