#include "blockform/formats.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "blockform/errors.hpp"

namespace blockform::io {

namespace {

using nlohmann::json;

constexpr std::array<char, 8> bin_magic = {'B', 'L', 'K', 'F', 'M', 'A', 'T', '1'};

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw InputError("cannot open '" + path.string() + "' for reading");
    return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(trim(cell));
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::size_t parse_index(const std::string& token) {
    std::size_t v = 0;
    const auto* end = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(token.data(), end, v);
    if (ec != std::errc{} || ptr != end) throw InputError("invalid integer '" + token + "'");
    return v;
}

std::size_t parse_positive_index(const std::string& token, std::size_t limit, const char* what) {
    const std::size_t v = parse_index(token);
    if (v == 0 || v > limit) throw InputError(std::string(what) + ": index " + token + " out of range");
    return v;
}

std::string extension_of(const fs::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

RealMatrix read_mtx(const fs::path& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("%%MatrixMarket", 0) != 0)
        throw InputError(path.string() + ": missing Matrix Market banner");
    std::istringstream banner(line);
    std::string tag, object, format, field, symmetry;
    banner >> tag >> object >> format >> field >> symmetry;
    if (object != "matrix" || format != "coordinate") throw InputError(path.string() + ": only coordinate matrices are supported");
    if (field != "real" && field != "integer" && field != "pattern")
        throw InputError(path.string() + ": unsupported field '" + field + "'");
    if (symmetry != "general") throw InputError(path.string() + ": only general symmetry is supported");
    const bool pattern = field == "pattern";

    while (std::getline(in, line) && (trim(line).empty() || line[0] == '%')) {}
    std::istringstream dims(line);
    std::size_t rows = 0, cols = 0, nnz = 0;
    if (!(dims >> rows >> cols >> nnz) || rows == 0 || cols == 0) throw InputError(path.string() + ": invalid size line");

    RealMatrix m(rows, cols);
    std::vector<bool> seen(rows * cols, false);
    std::size_t read = 0;
    while (read < nnz && std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '%') continue;
        std::istringstream entry(t);
        std::string si, sj, sv;
        entry >> si >> sj >> sv;
        const std::size_t i = parse_positive_index(si, rows, "matrix row");
        const std::size_t j = parse_positive_index(sj, cols, "matrix column");
        if (seen[(i - 1) * cols + (j - 1)]) throw InputError(path.string() + ": duplicate entry " + si + " " + sj);
        seen[(i - 1) * cols + (j - 1)] = true;
        const double v = pattern ? 1.0 : parse_double(sv);
        if (!std::isfinite(v)) throw InputError(path.string() + ": non-finite entry");
        m(i - 1, j - 1) = v;
        ++read;
    }
    if (read != nnz) throw InputError(path.string() + ": expected " + std::to_string(nnz) + " entries, found " + std::to_string(read));
    return m;
}

void write_mtx(const fs::path& path, const RealMatrix& m) {
    // +0.0 is implicit; everything else, -0.0 included, is listed.
    std::size_t nnz = 0;
    for (double v : m.data()) nnz += std::bit_cast<std::uint64_t>(v) != 0;
    auto out = open_out(path);
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << m.rows() << ' ' << m.cols() << ' ' << nnz << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            if (std::bit_cast<std::uint64_t>(m(i, j)) != 0) out << i + 1 << ' ' << j + 1 << ' ' << format_double(m(i, j)) << '\n';
}

RealMatrix read_csv_matrix(const fs::path& path) {
    auto in = open_in(path);
    std::vector<double> entries;
    std::size_t cols = 0, rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cells = split(trim(line), ',');
        if (rows == 0) cols = cells.size();
        if (cells.size() != cols) throw InputError(path.string() + ": ragged CSV row " + std::to_string(rows + 1));
        for (const auto& c : cells) entries.push_back(parse_double(c));
        ++rows;
    }
    if (rows == 0) throw InputError(path.string() + ": empty matrix");
    return RealMatrix(rows, cols, std::move(entries));
}

void write_csv_matrix(const fs::path& path, const RealMatrix& m) {
    auto out = open_out(path);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
        out << '\n';
    }
}

template <typename T>
T to_little_endian(T v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
}

RealMatrix read_bin_matrix(const fs::path& path) {
    auto in = open_in(path, std::ios::binary);
    std::array<char, 8> magic{};
    std::uint64_t rows = 0, cols = 0;
    in.read(magic.data(), magic.size());
    in.read(reinterpret_cast<char*>(&rows), sizeof rows);
    in.read(reinterpret_cast<char*>(&cols), sizeof cols);
    if (!in || magic != bin_magic) throw InputError(path.string() + ": not a binary matrix file");
    rows = to_little_endian(rows);
    cols = to_little_endian(cols);
    std::vector<double> entries(rows * cols);
    in.read(reinterpret_cast<char*>(entries.data()), static_cast<std::streamsize>(entries.size() * sizeof(double)));
    if (!in) throw InputError(path.string() + ": truncated binary matrix");
    for (auto& v : entries) v = to_little_endian(v);
    return RealMatrix(rows, cols, std::move(entries));
}

void write_bin_matrix(const fs::path& path, const RealMatrix& m) {
    auto out = open_out(path, std::ios::binary);
    const std::uint64_t rows = to_little_endian<std::uint64_t>(m.rows());
    const std::uint64_t cols = to_little_endian<std::uint64_t>(m.cols());
    out.write(bin_magic.data(), bin_magic.size());
    out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
    out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
    for (double v : m.data()) {
        const double le = to_little_endian(v);
        out.write(reinterpret_cast<const char*>(&le), sizeof le);
    }
}

json read_json(const fs::path& path) {
    auto in = open_in(path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

std::string block_stem(std::size_t index) {
    std::ostringstream s;
    s << std::setw(3) << std::setfill('0') << index + 1;
    return s.str();
}

}  // namespace

std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) throw InvariantError("format_double: conversion failed");
    return std::string(buf.data(), ptr);
}

double parse_double(const std::string& token) {
    const std::string t = trim(token);
    double v = 0.0;
    const char* begin = t.data();
    if (!t.empty() && t[0] == '+') ++begin;
    const auto* end = t.data() + t.size();
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (t.empty() || ec != std::errc{} || ptr != end) throw InputError("invalid number '" + token + "'");
    return v;
}

RealMatrix read_matrix(const fs::path& path) {
    const std::string ext = extension_of(path);
    if (ext == ".mtx") return read_mtx(path);
    if (ext == ".csv") return read_csv_matrix(path);
    if (ext == ".bin") return read_bin_matrix(path);
    throw InputError("unknown matrix format '" + path.string() + "' (expected .mtx, .csv or .bin)");
}

void write_matrix(const fs::path& path, const RealMatrix& m) {
    const std::string ext = extension_of(path);
    if (ext == ".mtx") return write_mtx(path, m);
    if (ext == ".csv") return write_csv_matrix(path, m);
    if (ext == ".bin") return write_bin_matrix(path, m);
    throw InputError("unknown matrix format '" + path.string() + "' (expected .mtx, .csv or .bin)");
}

void write_bool_matrix(const fs::path& path, const BoolMatrix& m) {
    auto out = open_out(path);
    out << "%%MatrixMarket matrix coordinate pattern general\n";
    out << m.rows() << ' ' << m.cols() << ' ' << m.count() << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            if (m.test(i, j)) out << i + 1 << ' ' << j + 1 << '\n';
}

BoolMatrix read_bool_matrix(const fs::path& path) {
    const RealMatrix m = read_matrix(path);
    BoolMatrix b(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            if (m(i, j) != 0.0) b.set(i, j);
    return b;
}

ChannelBundle read_channel_bundle(const fs::path& dir) {
    const json meta = read_json(dir / "channels.json");
    const auto n = meta.at("n").get<std::size_t>();
    const auto k = meta.at("k").get<std::size_t>();
    if (k == 0 || k % 2 != 0) throw InputError(dir.string() + ": channel sequence length must be even and positive");
    std::vector<RealMatrix> w1, w2;
    for (std::size_t g = 1; g <= k / 2; ++g) {
        w1.push_back(read_matrix(dir / ("w1_" + std::to_string(g) + ".mtx")));
        w2.push_back(read_matrix(dir / ("w2_" + std::to_string(g) + ".mtx")));
    }
    ChannelBundle b(std::move(w1), std::move(w2));
    if (b.order() != n) throw InputError(dir.string() + ": channel matrices do not match declared n");
    return b;
}

void write_channel_bundle(const fs::path& dir, const ChannelBundle& b) {
    fs::create_directories(dir);
    write_json(dir / "channels.json", json{{"n", b.order()}, {"k", b.sequence_length()}});
    for (std::size_t g = 0; g < b.channel_count(); ++g) {
        write_matrix(dir / ("w1_" + std::to_string(g + 1) + ".mtx"), b.w1()[g]);
        write_matrix(dir / ("w2_" + std::to_string(g + 1) + ".mtx"), b.w2()[g]);
    }
}

Weights read_weights(const fs::path& path) {
    if (fs::is_directory(path)) return read_channel_bundle(path);
    return read_matrix(path);
}

void write_weights(const fs::path& path, const Weights& w) {
    if (const auto* m = std::get_if<RealMatrix>(&w)) return write_matrix(path, *m);
    write_channel_bundle(path, std::get<ChannelBundle>(w));
}

ActivationTrace read_trace(const fs::path& path, std::size_t n) {
    auto in = open_in(path);
    ActivationTrace trace;
    trace.n = n;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::vector<std::size_t> step;
        std::string tok;
        while (ss >> tok) step.push_back(parse_positive_index(tok, n, "trace") - 1);
        trace.steps.push_back(std::move(step));
    }
    trace.validate();
    return trace;
}

void write_trace(const fs::path& path, const ActivationTrace& trace) {
    auto out = open_out(path);
    for (const auto& step : trace.steps) {
        for (std::size_t r = 0; r < step.size(); ++r) out << (r ? " " : "") << step[r] + 1;
        out << '\n';
    }
}

void write_node_table(std::ostream& out, const NodeAttributeTable& table) {
    out << "V_TAG,S_TAG,G_TAG,L_TAG,I_TAG,V_NewTAG\n";
    for (const auto& r : table.by_new_index())
        out << r.v_tag << ',' << r.s_tag << ',' << r.g_tag << ',' << r.l_tag << ',' << r.i_tag << ',' << r.v_new_tag << '\n';
}

void write_node_table(const fs::path& path, const NodeAttributeTable& table) {
    auto out = open_out(path);
    write_node_table(out, table);
}

NodeAttributeTable read_node_table(const fs::path& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || trim(line) != "V_TAG,S_TAG,G_TAG,L_TAG,I_TAG,V_NewTAG")
        throw InputError(path.string() + ": unexpected node table header");
    std::vector<NodeAttributes> rows;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cells = split(trim(line), ',');
        if (cells.size() != 6) throw InputError(path.string() + ": node table rows need 6 columns");
        rows.push_back({parse_index(cells[0]), parse_index(cells[1]), parse_index(cells[2]), parse_index(cells[3]),
                        parse_index(cells[4]), parse_index(cells[5])});
    }
    NodeAttributeTable table;
    table.rows.resize(rows.size());
    std::vector<bool> seen(rows.size(), false);
    for (const auto& r : rows) {
        if (r.v_tag == 0 || r.v_tag > rows.size() || seen[r.v_tag - 1])
            throw InputError(path.string() + ": V_TAG column is not a permutation of 1..n");
        seen[r.v_tag - 1] = true;
        table.rows[r.v_tag - 1] = r;
    }
    return table;
}

void write_permutation(const fs::path& path, const Permutation& p) {
    auto out = open_out(path);
    out << "new,old\n";
    for (std::size_t o = 0; o < p.size(); ++o) out << o + 1 << ',' << p.source_of(o) + 1 << '\n';
}

Permutation read_permutation(const fs::path& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || trim(line) != "new,old") throw InputError(path.string() + ": expected header 'new,old'");
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cells = split(trim(line), ',');
        if (cells.size() != 2) throw InputError(path.string() + ": permutation rows need 2 columns");
        pairs.emplace_back(parse_index(cells[0]), parse_index(cells[1]));
    }
    std::vector<std::size_t> map(pairs.size(), pairs.size());
    for (auto [o, s] : pairs) {
        if (o == 0 || o > pairs.size() || s == 0 || s > pairs.size() || map[o - 1] != pairs.size())
            throw InputError(path.string() + ": malformed permutation");
        map[o - 1] = s - 1;
    }
    return Permutation(std::move(map));
}

std::vector<RealVector> read_vectors(const fs::path& path) {
    auto in = open_in(path);
    std::vector<RealVector> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        RealVector v;
        for (const auto& c : split(trim(line), ',')) v.push_back(parse_double(c));
        require_finite(v, path.string());
        rows.push_back(std::move(v));
    }
    return rows;
}

void write_vectors(const fs::path& path, const std::vector<RealVector>& rows) {
    auto out = open_out(path);
    for (const auto& v : rows) {
        for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << format_double(v[i]);
        out << '\n';
    }
}

void write_bundle(const fs::path& dir, const Bundle& bundle) {
    const auto& sys = bundle.system;
    sys.validate();
    fs::create_directories(dir / "blocks");
    for (const auto& entry : fs::directory_iterator(dir / "blocks")) fs::remove_all(entry.path());
    write_permutation(dir / "permutation.csv", sys.p);
    for (std::size_t b = 0; b < sys.blocks.size(); ++b) {
        const auto& block = sys.blocks[b];
        const auto& idx = block.embedding.indices();
        const std::string stem = block_stem(b);
        if (const auto* m = std::get_if<RealMatrix>(&block.op))
            write_matrix(dir / "blocks" / (stem + ".mtx"), *m);
        else
            write_channel_bundle(dir / "blocks" / stem, std::get<ChannelBundle>(block.op));
        auto range = open_out(dir / "blocks" / (stem + ".range"));
        range << idx.front() + 1 << ' ' << idx.back() + 1 << '\n';
    }
    {
        auto dormant = open_out(dir / "dormant.txt");
        for (auto i : sys.dormant.indices()) dormant << i + 1 << '\n';
    }
    BundleMeta meta = bundle.meta;
    meta.n = sys.n;
    meta.block_count = sys.blocks.size();
    write_json(dir / "meta.json", json{{"n", meta.n},
                                       {"block_count", meta.block_count},
                                       {"k_channels", meta.k_channels},
                                       {"nonlinearity", meta.nonlinearity},
                                       {"isolated_last", meta.isolated_last},
                                       {"edge_convention", meta.edge_convention},
                                       {"updates", meta.updates}});
}

Bundle read_bundle(const fs::path& dir) {
    Bundle bundle;
    const json meta = read_json(dir / "meta.json");
    try {
        bundle.meta.n = meta.at("n").get<std::size_t>();
        bundle.meta.block_count = meta.at("block_count").get<std::size_t>();
        bundle.meta.k_channels = meta.value("k_channels", std::size_t{0});
        bundle.meta.nonlinearity = meta.value("nonlinearity", std::string("identity"));
        bundle.meta.isolated_last = meta.value("isolated_last", false);
        bundle.meta.edge_convention = meta.value("edge_convention", std::string("paper"));
        bundle.meta.updates = meta.value("updates", std::uint64_t{0});
    } catch (const json::exception& e) {
        throw InputError((dir / "meta.json").string() + ": " + e.what());
    }

    auto& sys = bundle.system;
    sys.n = bundle.meta.n;
    sys.p = read_permutation(dir / "permutation.csv");
    if (sys.p.size() != sys.n) throw InputError(dir.string() + ": permutation size does not match meta.json");

    for (std::size_t b = 0; b < bundle.meta.block_count; ++b) {
        const std::string stem = block_stem(b);
        auto range_in = open_in(dir / "blocks" / (stem + ".range"));
        std::string first, last;
        range_in >> first >> last;
        const std::size_t begin = parse_positive_index(first, sys.n, "block range") - 1;
        const std::size_t end = parse_positive_index(last, sys.n, "block range");
        if (end <= begin) throw InputError(dir.string() + ": empty block range");

        Block block;
        if (bundle.meta.k_channels == 0)
            block.op = read_matrix(dir / "blocks" / (stem + ".mtx"));
        else
            block.op = read_channel_bundle(dir / "blocks" / stem);
        const std::size_t size = weights_order(block.op);
        if (size != end - begin) throw InputError(dir.string() + ": block " + stem + " does not match its range");
        if (const auto* m = std::get_if<RealMatrix>(&block.op); m && !m->is_square())
            throw InputError(dir.string() + ": block " + stem + " is not square");
        block.projection = Projection::range(sys.n, begin, end);
        block.embedding = Embedding::range(sys.n, begin, end);
        block.column_order.resize(size);
        std::iota(block.column_order.begin(), block.column_order.end(), 0);
        std::sort(block.column_order.begin(), block.column_order.end(), [&](std::size_t a, std::size_t c) {
            return sys.p.source_of(begin + a) < sys.p.source_of(begin + c);
        });
        sys.blocks.push_back(std::move(block));
    }

    auto dormant_in = open_in(dir / "dormant.txt");
    std::vector<std::size_t> dormant;
    std::string tok;
    while (dormant_in >> tok) dormant.push_back(parse_positive_index(tok, sys.n, "dormant list") - 1);
    sys.dormant = Embedding(sys.n, std::move(dormant));
    sys.validate();
    return bundle;
}

}  // namespace blockform::io
