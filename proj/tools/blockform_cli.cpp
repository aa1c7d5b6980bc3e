// blockform: command-line front end for the annealing / analysis / restructuring pipeline.
//
// Exit codes: 0 success, 1 input error, 2 internal invariant violation.
// Log level comes from the SPDLOG_LEVEL environment variable (default: warn).

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "blockform/annealing.hpp"
#include "blockform/errors.hpp"
#include "blockform/formats.hpp"
#include "blockform/restructure.hpp"
#include "blockform/structure_analysis.hpp"
#include "blockform/training_sim.hpp"

namespace {

using namespace blockform;
using nlohmann::json;
namespace fs = std::filesystem;

struct RunConfig {
    double alpha = 0.05;
    double delta0 = 0.0;
    double tau = 0.0;
    std::size_t bins = 10;
    double epsilon = 0.0;
    /// 0 means "estimate from the weights".
    double sigma = 0.0;
    std::size_t k_channels = 8;
    std::uint64_t seed = 1;
    std::string edge_convention = "paper";
    bool isolated_last = false;
    std::string nonlinearity = "identity";
    bool timings = false;

    TestConfig test_config() const {
        TestConfig t;
        t.alpha = alpha;
        t.delta0 = delta0;
        t.tau = tau;
        t.bins = bins;
        t.k = k_channels;
        t.validate();
        return t;
    }
    bool transposed() const { return edge_convention == "transposed"; }
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Weights transpose_weights(const Weights& w) {
    if (const auto* m = std::get_if<RealMatrix>(&w)) return m->transposed();
    const auto& b = std::get<ChannelBundle>(w);
    std::vector<RealMatrix> w1, w2;
    for (const auto& m : b.w1()) w1.push_back(m.transposed());
    for (const auto& m : b.w2()) w2.push_back(m.transposed());
    return ChannelBundle(std::move(w1), std::move(w2));
}

// Weight files are read and written in the selected edge convention; the
// library always works in the paper convention.
Weights load_weights(const fs::path& path, const RunConfig& cfg) {
    Weights w = io::read_weights(path);
    if (const auto* m = std::get_if<RealMatrix>(&w); m && !m->is_square())
        throw InputError(path.string() + ": weight matrix must be square");
    return cfg.transposed() ? transpose_weights(w) : w;
}

void store_weights(const fs::path& path, const Weights& w, const RunConfig& cfg) {
    io::write_weights(path, cfg.transposed() ? transpose_weights(w) : w);
}

void write_json_file(const fs::path& path, const json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << '\n';
}

void emit_report(const std::string& path, const json& j) {
    if (path.empty())
        std::cout << j.dump(2) << '\n';
    else
        write_json_file(path, j);
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string out;
    PlantConfig plant;
};

void cmd_simulate(const SimulateArgs& a, const RunConfig& cfg) {
    PlantConfig pc = a.plant;
    pc.seed = cfg.seed;
    const PlantedSystem sys = generate_planted_system(pc);
    const fs::path dir(a.out);
    fs::create_directories(dir);
    store_weights(dir / "w0.mtx", sys.w0, cfg);
    store_weights(dir / "w_final.mtx", sys.w_final, cfg);
    io::write_trace(dir / "trace.txt", sys.trace);

    json classes = json::array();
    std::vector<std::vector<std::size_t>> members(sys.k_blocks);
    for (std::size_t s = 0; s < pc.n; ++s) members[sys.group_of[s]].push_back(s + 1);
    for (const auto& m : members) classes.push_back(m);
    std::vector<std::size_t> group_of;
    for (auto g : sys.group_of) group_of.push_back(g + 1);
    write_json_file(dir / "truth.json", json{{"n", pc.n},
                                             {"k_blocks", sys.k_blocks},
                                             {"steps", pc.steps},
                                             {"eta", pc.eta},
                                             {"init_sigma", pc.init_sigma},
                                             {"seed", pc.seed},
                                             {"group_of", group_of},
                                             {"classes", classes}});
    spdlog::info("simulate: wrote {} steps for n={} into {}", pc.steps, pc.n, dir.string());
}

// ------------------------------------------------------------------ anneal

struct AnnealArgs {
    std::string input;
    std::string out;
    std::string report;
    bool retain_suppressed = false;
};

json anneal_report_json(const AnnealedSystem& a, std::size_t n) {
    const auto& r = a.report;
    json counts = json::object();
    for (std::size_t l = 0; l < r.label_counts.size(); ++l)
        counts[to_string(static_cast<EdgeLabel>(l))] = r.label_counts[l];
    const double total = static_cast<double>(n) * static_cast<double>(n);
    json j{{"n", n},
           {"edges", n * n},
           {"sigma", r.sigma},
           {"sigma_estimated", r.sigma_estimated},
           {"alpha", r.alpha},
           {"threshold", r.threshold},
           {"delta", r.delta},
           {"zero_rows", r.zero_rows},
           {"label_counts", counts},
           {"kept", r.kept},
           {"removed", r.removed},
           {"kept_fraction", static_cast<double>(r.kept) / total},
           {"null_kept_bound", r.alpha + 3.0 * std::sqrt(r.alpha * (1.0 - r.alpha) / total)},
           {"all_removed", r.kept == 0}};
    j["p0"] = r.p0 ? json(*r.p0) : json(nullptr);
    return j;
}

void cmd_anneal(const AnnealArgs& a, const RunConfig& cfg) {
    Stopwatch clock;
    const Weights w = load_weights(a.input, cfg);
    TestConfig tc = cfg.test_config();
    tc.retain_suppressed = a.retain_suppressed;
    std::optional<InitDistribution> f0;
    if (cfg.sigma > 0.0) f0 = InitDistribution{cfg.sigma};
    const AnnealedSystem annealed = anneal(w, f0, tc);
    store_weights(a.out, annealed.weights, cfg);
    json report = anneal_report_json(annealed, weights_order(w));
    if (cfg.timings) report["seconds"] = clock.seconds();
    emit_report(a.report, report);
}

// ----------------------------------------------------------------- analyze

struct AnalyzeArgs {
    std::string input;
    std::string out;
};

std::vector<std::size_t> block_sizes(const NodeAttributeTable& table) {
    std::map<std::size_t, std::size_t> by_component;
    for (const auto& r : table.rows) ++by_component[r.g_tag];
    std::vector<std::size_t> sizes;
    for (const auto& [g, size] : by_component) sizes.push_back(size);
    return sizes;
}

void cmd_analyze(const AnalyzeArgs& a, const RunConfig& cfg) {
    Stopwatch clock;
    const Weights w = load_weights(a.input, cfg);
    const StructuralPredicate pred = std::holds_alternative<RealMatrix>(w) ? StructuralPredicate::abs_threshold(cfg.epsilon)
                                                                           : StructuralPredicate::channel_norm(cfg.epsilon);
    const AnalysisResult result = analyze(w, pred, SortOptions{cfg.isolated_last});

    const fs::path dir(a.out);
    fs::create_directories(dir);
    io::write_node_table(dir / "node_table.csv", result.table);
    io::write_bool_matrix(dir / "condensation.mtx", result.condensation.m_c);
    io::write_permutation(dir / "permutation.csv", result.permutation);

    std::size_t layers = 0, isolated = 0;
    for (const auto& r : result.table.rows) {
        layers = std::max(layers, r.l_tag);
        isolated += r.i_tag;
    }
    json summary{{"n", result.table.rows.size()},
                 {"scc_count", result.condensation.k},
                 {"component_sizes", block_sizes(result.table)},
                 {"max_layer", layers},
                 {"isolated", isolated},
                 {"closure_squarings", result.closure_squarings},
                 {"isolated_last", cfg.isolated_last},
                 {"edge_convention", cfg.edge_convention}};
    if (cfg.timings) summary["seconds"] = clock.seconds();
    write_json_file(dir / "analysis.json", summary);
    spdlog::info("analyze: n={} k={}", result.table.rows.size(), result.condensation.k);
}

// ------------------------------------------------------------- restructure

struct RestructureArgs {
    std::string annealed;
    std::string analysis;
    std::string out;
};

void cmd_restructure(const RestructureArgs& a, const RunConfig& cfg) {
    const Weights w = load_weights(a.annealed, cfg);
    const fs::path dir(a.analysis);
    const NodeAttributeTable table = io::read_node_table(dir / "node_table.csv");
    const Permutation p = io::read_permutation(dir / "permutation.csv");
    if (p.size() != weights_order(w) || table.rows.size() != weights_order(w))
        throw InputError("restructure: analysis size does not match the weights");

    io::Bundle bundle;
    bundle.system = build_system(w, table, p);
    bundle.meta.k_channels = std::holds_alternative<ChannelBundle>(w) ? std::get<ChannelBundle>(w).sequence_length() : 0;
    bundle.meta.nonlinearity = std::string(to_string(parse_nonlinearity(cfg.nonlinearity)));
    bundle.meta.isolated_last = cfg.isolated_last;
    bundle.meta.edge_convention = cfg.edge_convention;
    io::write_bundle(a.out, bundle);
    spdlog::info("restructure: {} blocks, {} dormant", bundle.system.blocks.size(), bundle.system.dormant.size());
}

// ------------------------------------------------------------------- infer

struct InferArgs {
    std::string bundle;
    std::string x;
    std::string out;
    std::string verify;
    std::string report;
};

void check_sizes(const std::vector<RealVector>& rows, std::size_t n, const char* what) {
    for (const auto& v : rows)
        if (v.size() != n)
            throw InputError(std::string(what) + ": vector of length " + std::to_string(v.size()) + ", expected " +
                             std::to_string(n));
}

void cmd_infer(const InferArgs& a, const RunConfig& cfg) {
    Stopwatch clock;
    const io::Bundle bundle = io::read_bundle(a.bundle);
    const Nonlinearity sigma = parse_nonlinearity(bundle.meta.nonlinearity);
    const auto xs = io::read_vectors(a.x);
    check_sizes(xs, bundle.system.n, "infer");

    std::vector<RealVector> ys;
    ys.reserve(xs.size());
    for (const auto& x : xs) ys.push_back(infer(bundle.system, x, sigma));
    io::write_vectors(a.out, ys);

    if (a.verify.empty()) return;
    const Weights ref = load_weights(a.verify, cfg);
    if (weights_order(ref) != bundle.system.n) throw InputError("infer: reference weights do not match the bundle");
    double max_dev = 0.0;
    std::size_t mismatches = 0;
    for (std::size_t t = 0; t < xs.size(); ++t) {
        const RealVector dense = dense_forward(ref, xs[t], sigma);
        for (std::size_t i = 0; i < dense.size(); ++i) {
            const double dev = std::abs(ys[t][i] - dense[i]);
            max_dev = std::max(max_dev, dev);
            mismatches += ys[t][i] != dense[i];
        }
    }
    json report{{"vectors", xs.size()},
                {"n", bundle.system.n},
                {"blocks", bundle.system.blocks.size()},
                {"max_abs_deviation", max_dev},
                {"mismatches", mismatches}};
    if (cfg.timings) report["seconds"] = clock.seconds();
    emit_report(a.report, report);
}

// ------------------------------------------------------------------ update

struct UpdateArgs {
    std::string bundle;
    std::string x;
    std::string g;
    double eta = 0.1;
};

void cmd_update(const UpdateArgs& a, const RunConfig&) {
    io::Bundle bundle = io::read_bundle(a.bundle);
    if (bundle.meta.k_channels != 0) throw InputError("update: channel-bundle systems are not supported");
    const auto xs = io::read_vectors(a.x);
    const auto gs = io::read_vectors(a.g);
    if (xs.size() != gs.size()) throw InputError("update: x and g files must hold the same number of vectors");
    check_sizes(xs, bundle.system.n, "update x");
    check_sizes(gs, bundle.system.n, "update g");
    for (std::size_t t = 0; t < xs.size(); ++t) bundle.system = redistribute_update(bundle.system, xs[t], gs[t], a.eta);
    bundle.meta.updates += xs.size();
    io::write_bundle(a.bundle, bundle);
}

// ------------------------------------------------------------------ verify

struct VerifyArgs {
    std::string w0;
    std::string w_final;
    std::string trace;
    std::string bundle;
    std::string weights;
    std::size_t trials = 10;
    std::string report;
};

bool cmd_verify(const VerifyArgs& a, const RunConfig& cfg) {
    json report = json::object();
    bool ok = true;
    if (!a.trace.empty()) {
        if (a.w0.empty() || a.w_final.empty()) throw InputError("verify: --trace needs --w0 and --w-final");
        const Weights w0 = load_weights(a.w0, cfg);
        const Weights wf = load_weights(a.w_final, cfg);
        if (!std::holds_alternative<RealMatrix>(w0) || !std::holds_alternative<RealMatrix>(wf))
            throw InputError("verify: invariance check needs scalar matrices");
        const auto& m0 = std::get<RealMatrix>(w0);
        const auto& mf = std::get<RealMatrix>(wf);
        const ActivationTrace trace = io::read_trace(a.trace, m0.rows());
        const CoOccurrence o = build_co_occurrence(trace);
        const CouplingPartition part = coupling_partition(o);
        const InvarianceReport inv = verify_block_invariance(m0, mf, part);
        const MinimalityReport min = verify_block_minimality(o, part);
        report["coupling_classes"] = part.classes.size();
        report["invariance_violations"] = inv.violations.size();
        report["disconnected_classes"] = min.disconnected_classes.size();
        ok = ok && inv.holds() && min.holds();
    }
    if (!a.bundle.empty()) {
        if (a.weights.empty()) throw InputError("verify: --bundle needs --weights");
        const io::Bundle bundle = io::read_bundle(a.bundle);
        const Weights ref = load_weights(a.weights, cfg);
        const EquivalenceReport eq = verify_equivalence(bundle.system, ref, a.trials, cfg.seed,
                                                        parse_nonlinearity(bundle.meta.nonlinearity));
        report["trials"] = eq.trials;
        report["compared"] = eq.compared;
        report["max_abs_deviation"] = eq.max_abs_deviation;
        report["mismatches"] = eq.mismatches;
        ok = ok && eq.mismatches == 0;
    }
    if (report.empty()) throw InputError("verify: nothing to check (give --trace or --bundle)");
    report["ok"] = ok;
    emit_report(a.report, report);
    return ok;
}

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("blockform");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    spdlog::cfg::load_env_levels();
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();

    CLI::App app{"blockform: statistical annealing, structural analysis and block restructuring of weight matrices"};
    app.fallthrough();
    app.require_subcommand(0, 1);
    app.set_config("--config", "", "Flat key=value configuration file; command-line flags take precedence");
    bool print_config = false;
    app.add_flag("--print-config", print_config, "Print the effective configuration (with defaults) and exit");

    RunConfig cfg;
    app.add_option("--alpha", cfg.alpha, "Significance level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    app.add_option("--delta0", cfg.delta0, "Initial random-walk bandwidth (0 = 1/(10n))")->capture_default_str();
    app.add_option("--tau", cfg.tau, "Bandwidth increment (0 = delta0)")->capture_default_str();
    app.add_option("--bins", cfg.bins, "Histogram bins for the uniformity test")->capture_default_str();
    app.add_option("--epsilon", cfg.epsilon, "Structural predicate threshold")->capture_default_str();
    app.add_option("--sigma", cfg.sigma, "Initialization sigma (0 = estimate)")->capture_default_str();
    app.add_option("--k", cfg.k_channels, "Channel sequence length for bundle input")->capture_default_str();
    app.add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
    app.add_option("--edge-convention", cfg.edge_convention, "paper: w_ij is an edge j->i; transposed: i->j")
        ->check(CLI::IsMember({"paper", "transposed"}))
        ->capture_default_str();
    app.add_flag("--isolated-last", cfg.isolated_last, "Sort isolated nodes after every component");
    app.add_option("--nonlinearity", cfg.nonlinearity, "Channel nonlinearity: identity, relu, tanh")
        ->check(CLI::IsMember({"identity", "relu", "tanh"}))
        ->capture_default_str();
    app.add_flag("--timings", cfg.timings, "Include wall-clock timings in reports");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Generate a planted block system by local training updates");
    simulate->add_option("--out", sim.out, "Output directory")->required();
    simulate->add_option("--n", sim.plant.n, "Number of states")->capture_default_str();
    simulate->add_option("--blocks", sim.plant.k_blocks, "Planted group count")->capture_default_str();
    simulate->add_option("--steps", sim.plant.steps, "Training steps")->capture_default_str();
    simulate->add_option("--eta", sim.plant.eta, "Learning rate")->capture_default_str();
    simulate->add_option("--init-sigma", sim.plant.init_sigma, "Initialization sigma")->capture_default_str();
    simulate->add_option("--activation-prob", sim.plant.activation_prob, "Per-member activation probability")
        ->capture_default_str();
    simulate->add_option("--cross-prob", sim.plant.cross_group_prob, "Probability of one cross-group activation")
        ->capture_default_str();

    AnnealArgs ann;
    auto* anneal_cmd = app.add_subcommand("anneal", "Zero out edges indistinguishable from initialization noise");
    anneal_cmd->add_option("input", ann.input, "Weight matrix (.mtx/.csv/.bin) or channel-bundle directory")->required();
    anneal_cmd->add_option("--out", ann.out, "Annealed weights output")->required();
    anneal_cmd->add_option("--report", ann.report, "Report JSON path (default: stdout)");
    anneal_cmd->add_flag("--retain-suppressed", ann.retain_suppressed, "Keep systematically suppressed edges");

    AnalyzeArgs ana;
    auto* analyze_cmd = app.add_subcommand("analyze", "Node attribute table, condensation and permutation");
    analyze_cmd->add_option("input", ana.input, "Adjacency or weights")->required();
    analyze_cmd->add_option("--out", ana.out, "Output directory")->required();

    RestructureArgs res;
    auto* restructure_cmd = app.add_subcommand("restructure", "Split annealed weights into independent blocks");
    restructure_cmd->add_option("--annealed", res.annealed, "Annealed weights")->required();
    restructure_cmd->add_option("--analysis", res.analysis, "Directory written by analyze")->required();
    restructure_cmd->add_option("--out", res.out, "Bundle directory")->required();

    InferArgs inf;
    auto* infer_cmd = app.add_subcommand("infer", "Run the restructured forward pass");
    infer_cmd->add_option("--bundle", inf.bundle, "Bundle directory")->required();
    infer_cmd->add_option("--x", inf.x, "Input vectors (CSV, one per line)")->required();
    infer_cmd->add_option("--out", inf.out, "Output vectors (CSV)")->required();
    infer_cmd->add_option("--verify", inf.verify, "Dense weights to compare against");
    infer_cmd->add_option("--report", inf.report, "Verification report path (default: stdout)");

    UpdateArgs upd;
    auto* update_cmd = app.add_subcommand("update", "Apply redistributed gradient updates to a bundle in place");
    update_cmd->add_option("--bundle", upd.bundle, "Bundle directory")->required();
    update_cmd->add_option("--x", upd.x, "Input vectors (CSV)")->required();
    update_cmd->add_option("--g", upd.g, "Output gradients (CSV)")->required();
    update_cmd->add_option("--eta", upd.eta, "Learning rate")->check(CLI::PositiveNumber)->capture_default_str();

    VerifyArgs ver;
    auto* verify_cmd = app.add_subcommand("verify", "Check update invariance or restructured equivalence");
    verify_cmd->add_option("--w0", ver.w0, "Initial weights");
    verify_cmd->add_option("--w-final", ver.w_final, "Trained weights");
    verify_cmd->add_option("--trace", ver.trace, "Activation trace");
    verify_cmd->add_option("--bundle", ver.bundle, "Bundle directory");
    verify_cmd->add_option("--weights", ver.weights, "Dense reference weights");
    verify_cmd->add_option("--trials", ver.trials, "Random inputs for the equivalence check")->capture_default_str();
    verify_cmd->add_option("--report", ver.report, "Report path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (print_config) {
        std::cout << app.config_to_str(true, false);
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return 1;
    }

    try {
        if (simulate->parsed()) cmd_simulate(sim, cfg);
        if (anneal_cmd->parsed()) cmd_anneal(ann, cfg);
        if (analyze_cmd->parsed()) cmd_analyze(ana, cfg);
        if (restructure_cmd->parsed()) cmd_restructure(res, cfg);
        if (infer_cmd->parsed()) cmd_infer(inf, cfg);
        if (update_cmd->parsed()) cmd_update(upd, cfg);
        if (verify_cmd->parsed() && !cmd_verify(ver, cfg)) {
            spdlog::error("verify: check failed");
            return 2;
        }
    } catch (const InvariantError& e) {
        spdlog::error("invariant violation: {}", e.what());
        return 2;
    } catch (const InputError& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const std::exception& e) {
        spdlog::error("internal error: {}", e.what());
        return 2;
    }
    return 0;
}
