#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "blockform/errors.hpp"
#include "blockform/formats.hpp"
#include "helpers.hpp"

using namespace blockform;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("blockform_fmt_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

RealMatrix awkward_matrix() {
    RealMatrix m(3, 4);
    m(0, 0) = 0.1;
    m(0, 1) = -0.0;
    m(0, 3) = 1e-310;
    m(1, 1) = std::numeric_limits<double>::max();
    m(1, 2) = -std::numeric_limits<double>::min();
    m(2, 0) = 1.0 / 3.0;
    m(2, 3) = -123456789.125;
    return m;
}

}  // namespace

TEST_SUITE("formats") {

TEST_CASE("number formatting round-trips exactly") {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 1000; ++t) {
        const double v = std::ldexp(testing::random_vector(1, rng)[0], static_cast<int>(rng() % 200) - 100);
        const double back = io::parse_double(io::format_double(v));
        CHECK(bitwise_equal(std::span(&v, 1), std::span(&back, 1)));
    }
    CHECK(io::format_double(-0.0) == "-0");
    CHECK(io::parse_double("+2.5") == 2.5);
    CHECK_THROWS_AS(io::parse_double("1.5x"), InputError);
    CHECK_THROWS_AS(io::parse_double(""), InputError);
}

TEST_CASE("matrix formats round-trip bit for bit") {
    TempDir dir;
    const auto m = awkward_matrix();
    for (const char* name : {"m.mtx", "m.csv", "m.bin"}) {
        io::write_matrix(dir.path / name, m);
        CHECK(bitwise_equal(io::read_matrix(dir.path / name), m));
    }
    CHECK_THROWS_AS(io::write_matrix(dir.path / "m.txt", m), InputError);
    CHECK_THROWS_AS(io::read_matrix(dir.path / "missing.mtx"), InputError);
}

TEST_CASE("binary header layout") {
    TempDir dir;
    io::write_matrix(dir.path / "m.bin", RealMatrix(2, 3, 1.0));
    CHECK(fs::file_size(dir.path / "m.bin") == 8 + 16 + 6 * 8);
    const std::string bytes = read_text(dir.path / "m.bin");
    CHECK(bytes.substr(0, 8) == "BLKFMAT1");
}

TEST_CASE("matrix market input validation") {
    TempDir dir;
    const auto p = dir.path / "bad.mtx";
    write_text(p, "1 1 1\n1 1 1\n");
    CHECK_THROWS_AS(io::read_matrix(p), InputError);
    write_text(p, "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n");
    CHECK_THROWS_AS(io::read_matrix(p), InputError);
    write_text(p, "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n1 1 2.0\n");
    CHECK_THROWS_AS(io::read_matrix(p), InputError);
    write_text(p, "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 nan\n");
    CHECK_THROWS_AS(io::read_matrix(p), InputError);
    write_text(p, "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n");
    CHECK_THROWS_AS(io::read_matrix(p), InputError);
    write_text(p, "%%MatrixMarket matrix coordinate real symmetric\n2 2 0\n");
    CHECK_THROWS_AS(io::read_matrix(p), InputError);

    write_text(p, "%%MatrixMarket matrix coordinate integer general\n% comment\n2 3 1\n2 3 7\n");
    const auto m = io::read_matrix(p);
    CHECK(m.rows() == 2);
    CHECK(m.cols() == 3);
    CHECK(m(1, 2) == 7.0);

    const auto csv = dir.path / "bad.csv";
    write_text(csv, "1,2\n3\n");
    CHECK_THROWS_AS(io::read_matrix(csv), InputError);
}

TEST_CASE("boolean matrices as pattern files") {
    TempDir dir;
    const auto m = testing::example_adjacency();
    io::write_bool_matrix(dir.path / "a.mtx", m);
    CHECK(io::read_bool_matrix(dir.path / "a.mtx") == m);
    CHECK(io::read_bool_matrix(std::string(BLOCKFORM_FIXTURES) + "/example18.mtx") == m);
}

TEST_CASE("channel bundles round-trip") {
    TempDir dir;
    std::mt19937_64 rng(2);
    std::vector<RealMatrix> w1, w2;
    for (int g = 0; g < 4; ++g) {
        w1.push_back(testing::random_matrix(5, 5, rng));
        w2.push_back(testing::random_matrix(5, 5, rng));
    }
    const ChannelBundle b(w1, w2);
    io::write_weights(dir.path / "bundle", b);
    const auto back = io::read_weights(dir.path / "bundle");
    REQUIRE(std::holds_alternative<ChannelBundle>(back));
    const auto& r = std::get<ChannelBundle>(back);
    for (int g = 0; g < 4; ++g) {
        CHECK(bitwise_equal(r.w1()[g], w1[g]));
        CHECK(bitwise_equal(r.w2()[g], w2[g]));
    }
}

TEST_CASE("traces round-trip, including empty steps") {
    TempDir dir;
    const ActivationTrace t{6, {{0, 2}, {}, {5}, {1, 3, 4}}};
    io::write_trace(dir.path / "t.txt", t);
    CHECK(read_text(dir.path / "t.txt") == "1 3\n\n6\n2 4 5\n");
    CHECK(io::read_trace(dir.path / "t.txt", 6).steps == t.steps);
    CHECK_THROWS_AS(io::read_trace(dir.path / "t.txt", 5), InputError);
    write_text(dir.path / "u.txt", "3 1\n");
    CHECK_THROWS_AS(io::read_trace(dir.path / "u.txt", 5), InputError);
}

TEST_CASE("node table, permutation and vectors round-trip") {
    TempDir dir;
    const auto a = analyze_adjacency(testing::example_adjacency());
    io::write_node_table(dir.path / "t.csv", a.table);
    CHECK(io::read_node_table(dir.path / "t.csv") == a.table);
    io::write_permutation(dir.path / "p.csv", a.permutation);
    CHECK(io::read_permutation(dir.path / "p.csv") == a.permutation);
    CHECK(read_text(dir.path / "p.csv").rfind("new,old\n1,1\n", 0) == 0);

    write_text(dir.path / "bad.csv", "new,old\n1,1\n2,1\n");
    CHECK_THROWS_AS(io::read_permutation(dir.path / "bad.csv"), InputError);

    std::mt19937_64 rng(3);
    const std::vector<RealVector> rows{testing::random_vector(4, rng), testing::random_vector(4, rng), {-0.0, 0.1, 1e300, 5}};
    io::write_vectors(dir.path / "v.csv", rows);
    const auto back = io::read_vectors(dir.path / "v.csv");
    REQUIRE(back.size() == 3);
    for (std::size_t r = 0; r < 3; ++r) CHECK(bitwise_equal(back[r], rows[r]));
}

TEST_CASE("restructured bundles round-trip") {
    TempDir dir;
    std::mt19937_64 rng(4);
    const auto w = testing::random_grouped_matrix(30, 4, 0.3, rng);
    const auto a = analyze(w, StructuralPredicate::abs_threshold(0.0));
    io::Bundle bundle{build_system(w, a.table, a.permutation), {}};
    bundle.meta.updates = 3;
    io::write_bundle(dir.path / "b", bundle);
    CHECK(fs::exists(dir.path / "b" / "blocks" / "001.mtx"));
    CHECK(fs::exists(dir.path / "b" / "blocks" / "001.range"));
    const auto back = io::read_bundle(dir.path / "b");
    CHECK(back.meta.updates == 3);
    CHECK(back.meta.block_count == bundle.system.blocks.size());
    CHECK(back.system.p == bundle.system.p);
    CHECK(back.system.dormant == bundle.system.dormant);
    REQUIRE(back.system.blocks.size() == bundle.system.blocks.size());
    for (std::size_t b = 0; b < back.system.blocks.size(); ++b) {
        const auto& x = back.system.blocks[b];
        const auto& y = bundle.system.blocks[b];
        CHECK(bitwise_equal(std::get<RealMatrix>(x.op), std::get<RealMatrix>(y.op)));
        CHECK(x.projection == y.projection);
        CHECK(x.embedding == y.embedding);
        CHECK(x.column_order == y.column_order);
    }
    // Rewriting the same bundle reproduces identical bytes.
    const std::string before = read_text(dir.path / "b" / "blocks" / "001.mtx");
    io::write_bundle(dir.path / "b", back);
    CHECK(read_text(dir.path / "b" / "blocks" / "001.mtx") == before);
}

}
