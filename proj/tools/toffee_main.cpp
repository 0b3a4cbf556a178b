// Command-line front end: factorize / embed / evaluate / benchmark, driven by
// a line-oriented config file with every value overridable by a flag.
// Exit codes: 0 success, 1 validation error, 2 runtime or numerical error.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "toffee/embed.hpp"
#include "toffee/eval.hpp"
#include "toffee/factorize.hpp"
#include "toffee/graph.hpp"
#include "toffee/io.hpp"
#include "toffee/parallel.hpp"
#include "toffee/rng.hpp"
#include "toffee/tensor.hpp"

namespace fs = std::filesystem;

namespace {

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    // [data]
    std::string data_path;
    std::string columns = "src dst time";  // token roles, in column order
    std::string delimiter = "whitespace";
    bool directed = false;
    // [snapshot]
    std::size_t bins = 32;
    std::string strategy = "native";  // native-distinct capped at `bins`
    std::string weighting = "binary";
    bool symmetrize = true;
    // [model]
    std::string method = "toffee";
    std::size_t rank = 0;  // 0 = 128, or 64 when the graph has fewer than 128 nodes
    double lambda_A = 1e-2;
    double lambda_R = 1e-2;
    std::size_t max_iters = 500;
    double rel_tol = 1e-4;
    std::uint64_t seed = 1;
    // [eval]
    std::string operators = "average,hadamard,weighted-l1,weighted-l2";
    std::string seeds = "1,2,3,4,5,6,7,8,9,10";
    double split_fraction = 0.75;
    double classifier_l2 = 1e-4;
    bool grid_search = false;
    // [benchmark]
    std::string bench_n = "50,100";
    std::string bench_t = "8,16,32";
    std::size_t bench_rank = 16;
    std::size_t bench_iters = 5;
    // [run]
    std::string out_dir = "out";
    unsigned threads = 0;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ValidationError("config key '" + key + "' expects a boolean, got '" + v + "'");
}

template <typename T>
T parse_number(const std::string& v, const std::string& key) {
    std::istringstream ss(v);
    T out{};
    if (!(ss >> out) || !ss.eof())
        throw ValidationError("config key '" + key + "' expects a number, got '" + v + "'");
    return out;
}

void apply_key(RunConfig& cfg, const std::string& section, const std::string& key,
               const std::string& value) {
    const std::string full = section.empty() ? key : section + "." + key;
    if (full == "data.path") cfg.data_path = value;
    else if (full == "data.columns") cfg.columns = value;
    else if (full == "data.delimiter") cfg.delimiter = value;
    else if (full == "data.directed") cfg.directed = parse_bool(value, full);
    else if (full == "snapshot.bins") cfg.bins = parse_number<std::size_t>(value, full);
    else if (full == "snapshot.strategy") cfg.strategy = value;
    else if (full == "snapshot.weighting") cfg.weighting = value;
    else if (full == "snapshot.symmetrize") cfg.symmetrize = parse_bool(value, full);
    else if (full == "model.method") cfg.method = value;
    else if (full == "model.rank") cfg.rank = parse_number<std::size_t>(value, full);
    else if (full == "model.lambda_A") cfg.lambda_A = parse_number<double>(value, full);
    else if (full == "model.lambda_R") cfg.lambda_R = parse_number<double>(value, full);
    else if (full == "model.max_iters") cfg.max_iters = parse_number<std::size_t>(value, full);
    else if (full == "model.rel_tol") cfg.rel_tol = parse_number<double>(value, full);
    else if (full == "model.seed") cfg.seed = parse_number<std::uint64_t>(value, full);
    else if (full == "eval.operators") cfg.operators = value;
    else if (full == "eval.seeds") cfg.seeds = value;
    else if (full == "eval.split_fraction") cfg.split_fraction = parse_number<double>(value, full);
    else if (full == "eval.classifier_l2") cfg.classifier_l2 = parse_number<double>(value, full);
    else if (full == "eval.grid_search") cfg.grid_search = parse_bool(value, full);
    else if (full == "benchmark.n_values") cfg.bench_n = value;
    else if (full == "benchmark.t_values") cfg.bench_t = value;
    else if (full == "benchmark.rank") cfg.bench_rank = parse_number<std::size_t>(value, full);
    else if (full == "benchmark.iters") cfg.bench_iters = parse_number<std::size_t>(value, full);
    else if (full == "run.out" || full == "run.out_dir") cfg.out_dir = value;
    else if (full == "run.threads") cfg.threads = parse_number<unsigned>(value, full);
    else throw ValidationError("unknown config key '" + full + "'");
}

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path.string());
    RunConfig cfg;
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(line_no) +
                                  " is not 'key = value'");
        apply_key(cfg, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

// Flag values shared across subcommands; empty/absent means "keep config".
struct FlagOverrides {
    std::string config_path;
    std::string method;
    std::int64_t rank = -1;
    std::int64_t bins = -1;
    std::int64_t seed = -1;
    std::int64_t threads = -1;
    std::string out;
};

void add_common_flags(CLI::App* cmd, FlagOverrides& flags, bool config_required) {
    auto* opt = cmd->add_option("--config", flags.config_path, "run configuration file");
    if (config_required) opt->required();
    cmd->add_option("--method", flags.method, "toffee | rescal | tsvd");
    cmd->add_option("--rank", flags.rank, "embedding dimension r");
    cmd->add_option("--bins", flags.bins, "number of snapshots T");
    cmd->add_option("--seed", flags.seed, "seed override");
    cmd->add_option("--threads", flags.threads, "worker thread cap (0 = all cores)");
    cmd->add_option("--out", flags.out, "output directory");
}

RunConfig resolve_config(const FlagOverrides& flags) {
    RunConfig cfg;
    if (!flags.config_path.empty()) cfg = load_config(flags.config_path);
    if (!flags.method.empty()) cfg.method = flags.method;
    if (flags.rank >= 0) cfg.rank = static_cast<std::size_t>(flags.rank);
    if (flags.bins >= 0) cfg.bins = static_cast<std::size_t>(flags.bins);
    if (flags.seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(flags.seed);
        cfg.seeds = std::to_string(flags.seed);
    }
    if (flags.threads >= 0) cfg.threads = static_cast<unsigned>(flags.threads);
    if (!flags.out.empty()) cfg.out_dir = flags.out;
    return cfg;
}

toffee::EdgeListFormat edge_format_from(const RunConfig& cfg) {
    toffee::EdgeListFormat fmt;
    fmt.src_col = fmt.dst_col = fmt.time_col = -1;
    fmt.weight_col = -1;
    const auto roles = split_list(cfg.columns, cfg.columns.find(',') != std::string::npos ? ',' : ' ');
    for (std::size_t i = 0; i < roles.size(); ++i) {
        if (roles[i] == "src") fmt.src_col = static_cast<int>(i);
        else if (roles[i] == "dst") fmt.dst_col = static_cast<int>(i);
        else if (roles[i] == "weight") fmt.weight_col = static_cast<int>(i);
        else if (roles[i] == "time") fmt.time_col = static_cast<int>(i);
        else if (roles[i] == "skip" || roles[i] == "-") continue;
        else throw ValidationError("unknown column role '" + roles[i] + "'");
    }
    if (fmt.src_col < 0 || fmt.dst_col < 0 || fmt.time_col < 0)
        throw ValidationError("data.columns must name src, dst and time");
    if (cfg.delimiter == "whitespace" || cfg.delimiter.empty()) fmt.delimiter = '\0';
    else if (cfg.delimiter == "comma" || cfg.delimiter == ",") fmt.delimiter = ',';
    else if (cfg.delimiter == "tab") fmt.delimiter = '\t';
    else if (cfg.delimiter.size() == 1) fmt.delimiter = cfg.delimiter[0];
    else throw ValidationError("unknown delimiter '" + cfg.delimiter + "'");
    fmt.directed = cfg.directed;
    return fmt;
}

toffee::SnapshotSpec snapshot_spec_from(const RunConfig& cfg) {
    toffee::SnapshotSpec spec;
    spec.num_bins = cfg.bins;
    if (cfg.strategy == "uniform") spec.strategy = toffee::BinStrategy::kUniformWidth;
    else if (cfg.strategy == "native") spec.strategy = toffee::BinStrategy::kNativeDistinct;
    else throw ValidationError("unknown snapshot strategy '" + cfg.strategy + "'");
    if (cfg.weighting == "binary") spec.weighting = toffee::Weighting::kBinary;
    else if (cfg.weighting == "count") spec.weighting = toffee::Weighting::kCount;
    else if (cfg.weighting == "weight-sum") spec.weighting = toffee::Weighting::kWeightSum;
    else throw ValidationError("unknown weighting '" + cfg.weighting + "'");
    spec.symmetrize = cfg.symmetrize;
    if (spec.num_bins == 0) throw ValidationError("snapshot.bins must be positive");
    return spec;
}

toffee::Method method_from(const RunConfig& cfg) {
    const auto m = toffee::method_from_name(cfg.method);
    if (!m) throw ValidationError("unknown method '" + cfg.method + "'");
    return *m;
}

std::vector<toffee::EdgeOperator> operators_from(const RunConfig& cfg) {
    std::vector<toffee::EdgeOperator> ops;
    for (const auto& name : split_list(cfg.operators, ',')) {
        const auto op = toffee::edge_operator_from_name(name);
        if (!op) throw ValidationError("unknown edge operator '" + name + "'");
        ops.push_back(*op);
    }
    if (ops.empty()) throw ValidationError("eval.operators is empty");
    return ops;
}

std::vector<std::uint64_t> seeds_from(const RunConfig& cfg) {
    std::vector<std::uint64_t> seeds;
    for (const auto& s : split_list(cfg.seeds, ','))
        seeds.push_back(parse_number<std::uint64_t>(s, "eval.seeds"));
    if (seeds.empty()) throw ValidationError("eval.seeds is empty");
    return seeds;
}

std::shared_ptr<const toffee::TemporalGraph> load_graph(const RunConfig& cfg) {
    if (cfg.data_path.empty()) throw ValidationError("data.path is not set");
    if (!fs::exists(cfg.data_path))
        throw ValidationError("dataset does not exist: " + cfg.data_path);
    std::ifstream in(cfg.data_path);
    if (!in) throw ValidationError("cannot open dataset: " + cfg.data_path);
    return std::make_shared<const toffee::TemporalGraph>(
        toffee::parse_edge_list(in, edge_format_from(cfg)));
}

// 128, or 64 when the graph has fewer than 128 nodes.
std::size_t resolve_rank(std::size_t requested, std::size_t n) {
    if (requested > 0) return requested;
    return n < 128 ? std::min<std::size_t>(64, n) : 128;
}

toffee::ToffeeConfig model_config_from(const RunConfig& cfg, std::size_t n) {
    toffee::ToffeeConfig out;
    out.rank = resolve_rank(cfg.rank, n);
    out.lambda_A = cfg.lambda_A;
    out.lambda_R = cfg.lambda_R;
    out.max_iters = cfg.max_iters;
    out.rel_tol = cfg.rel_tol;
    out.seed = cfg.seed;
    if (out.rank == 0 || out.rank > n)
        throw ValidationError("rank must satisfy 1 <= r <= n (n = " + std::to_string(n) + ")");
    if (out.max_iters == 0) throw ValidationError("model.max_iters must be positive");
    if (!(out.rel_tol > 0)) throw ValidationError("model.rel_tol must be positive");
    return out;
}

int cmd_factorize(const RunConfig& cfg) {
    const auto graph = load_graph(cfg);
    const auto spec = snapshot_spec_from(cfg);
    const auto method = method_from(cfg);
    const auto model_cfg = model_config_from(cfg, graph->num_nodes());

    const auto tensor = toffee::bin_timestamps(graph, spec);
    toffee::Factorization f;
    switch (method) {
        case toffee::Method::kToffee: f = toffee::toffee_fit(tensor, model_cfg); break;
        case toffee::Method::kRescal: f = toffee::rescal_fit(tensor, model_cfg); break;
        case toffee::Method::kTsvd: f = toffee::tsvd(tensor, model_cfg.rank); break;
    }

    toffee::save_factorization(cfg.out_dir, f, graph->labels());
    std::cout << "method " << toffee::method_name(method) << ", n " << graph->num_nodes()
              << ", T " << tensor.tensor.n3() << ", rank " << model_cfg.rank << "\n";
    if (!f.objective_trace.empty())
        std::cout << "objective " << f.objective_trace.front() << " -> "
                  << f.objective_trace.back() << " in " << f.iterations_run
                  << " iterations\n";
    std::cout << "wrote " << (fs::path(cfg.out_dir) / "A.tte").string() << ", R.tte, "
              << "factorization.meta\n";
    return 0;
}

int cmd_embed(const std::string& factorization_dir, const RunConfig& cfg) {
    if (factorization_dir.empty())
        throw ValidationError("--factorization <dir> is required");
    if (!fs::exists(fs::path(factorization_dir) / "factorization.meta"))
        throw ValidationError("no factorization.meta under " + factorization_dir);

    const auto loaded = toffee::load_factorization(factorization_dir);
    const auto emb = toffee::embeddings(loaded.factorization);

    std::vector<std::string> labels = loaded.node_labels;
    if (labels.size() != emb.num_nodes()) {
        labels.resize(emb.num_nodes());
        for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = std::to_string(i);
    }

    fs::create_directories(cfg.out_dir);
    const fs::path out_path = fs::path(cfg.out_dir) / "embeddings.txt";
    toffee::write_embeddings(out_path, emb, labels);
    std::cout << "wrote " << out_path.string() << " (" << emb.num_nodes() << " x "
              << emb.dim() << ")\n";
    return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
    const auto graph = load_graph(cfg);
    const auto spec = snapshot_spec_from(cfg);
    const auto method = method_from(cfg);
    const auto model_cfg = model_config_from(cfg, graph->num_nodes());
    const auto operators = operators_from(cfg);
    const auto seeds = seeds_from(cfg);

    toffee::EvalConfig eval_cfg;
    eval_cfg.split_fraction = cfg.split_fraction;
    eval_cfg.classifier_l2 = cfg.classifier_l2;
    eval_cfg.grid_search = cfg.grid_search;

    const auto report =
        toffee::run_link_prediction(graph, spec, method, model_cfg, operators, seeds, eval_cfg);

    fs::create_directories(cfg.out_dir);

    {
        std::ofstream table(fs::path(cfg.out_dir) / "report.txt");
        char buf[160];
        table << "method: " << toffee::method_name(method) << "  rank: " << model_cfg.rank
              << "  lambda_A: " << report.config.lambda_A
              << "  lambda_R: " << report.config.lambda_R << "  seeds: " << seeds.size()
              << "\n\n";
        table << "operator       mean      std\n";
        for (const auto& s : report.operators) {
            std::snprintf(buf, sizeof(buf), "%-12s %8.4f %8.4f%s\n",
                          toffee::edge_operator_name(s.op), s.mean_f1, s.std_f1,
                          s.op == report.best_operator ? "  <- best" : "");
            table << buf;
        }
        std::snprintf(buf, sizeof(buf), "\nbest operator: %s (mean micro-F1 %.4f)\n",
                      toffee::edge_operator_name(report.best_operator),
                      [&] {
                          for (const auto& s : report.operators)
                              if (s.op == report.best_operator) return s.mean_f1;
                          return 0.0;
                      }());
        table << buf;
        std::cout << buf;
    }
    {
        std::ofstream reps(fs::path(cfg.out_dir) / "replications.tsv");
        reps << "operator\tseed\tmicro_f1\n";
        char buf[128];
        for (const auto& s : report.operators)
            for (std::size_t i = 0; i < s.per_seed_f1.size(); ++i) {
                std::snprintf(buf, sizeof(buf), "%s\t%llu\t%.17g\n",
                              toffee::edge_operator_name(s.op),
                              static_cast<unsigned long long>(report.seeds[i]),
                              s.per_seed_f1[i]);
                reps << buf;
            }
    }
    {
        std::ofstream ops(fs::path(cfg.out_dir) / "operators.tsv");
        ops << "operator\tmean\tstd\tn_seeds\tseconds\n";
        char buf[160];
        for (const auto& s : report.operators) {
            std::snprintf(buf, sizeof(buf), "%s\t%.17g\t%.17g\t%zu\t%.3f\n",
                          toffee::edge_operator_name(s.op), s.mean_f1, s.std_f1,
                          s.per_seed_f1.size(), s.wall_seconds);
            ops << buf;
        }
    }
    return 0;
}

int cmd_benchmark(const RunConfig& cfg) {
    std::vector<std::size_t> ns, ts;
    for (const auto& s : split_list(cfg.bench_n, ','))
        ns.push_back(parse_number<std::size_t>(s, "benchmark.n_values"));
    for (const auto& s : split_list(cfg.bench_t, ','))
        ts.push_back(parse_number<std::size_t>(s, "benchmark.t_values"));
    if (ns.empty() || ts.empty())
        throw ValidationError("benchmark needs nonempty n_values and t_values");
    if (cfg.bench_iters == 0) throw ValidationError("benchmark.iters must be positive");

    fs::create_directories(cfg.out_dir);
    std::ofstream csv(fs::path(cfg.out_dir) / "benchmark.csv");
    csv << "n,T,rank,iters,setup_seconds,loop_seconds,per_iter_seconds\n";
    std::cout << "n,T,rank,iters,setup_seconds,loop_seconds,per_iter_seconds\n";

    for (const std::size_t n : ns) {
        for (const std::size_t T : ts) {
            // Synthetic dense symmetric snapshots, seeded per grid point.
            toffee::SeededRng rng(toffee::derive_seed(cfg.seed, n * 1000003 + T));
            toffee::RealTensor3 x(n, n, T);
            for (std::size_t k = 0; k < T; ++k)
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = i; j < n; ++j) {
                        const double v = rng.next_unit() < 0.05 ? 1.0 : 0.0;
                        x(i, j, k) = v;
                        x(j, i, k) = v;
                    }
            toffee::AdjacencyTensor at{std::move(x), toffee::SnapshotSpec{}, nullptr};

            toffee::ToffeeConfig mc;
            mc.rank = std::min(cfg.bench_rank, n);
            mc.lambda_A = mc.lambda_R = 1e-3;
            mc.max_iters = cfg.bench_iters;
            mc.rel_tol = 1e-300;  // run all requested iterations
            mc.seed = cfg.seed;

            toffee::detail::FitStats stats;
            toffee::detail::toffee_fit_spectrum(at, mc, toffee::detail::Spectrum::kHalf,
                                                &stats);
            char buf[200];
            std::snprintf(buf, sizeof(buf), "%zu,%zu,%zu,%zu,%.6f,%.6f,%.6f\n", n, T, mc.rank,
                          stats.iterations, stats.setup_seconds, stats.loop_seconds,
                          stats.loop_seconds / static_cast<double>(stats.iterations));
            csv << buf;
            std::cout << buf;
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"temporal network embedding via tensor factorization"};
    app.require_subcommand(1);

    FlagOverrides flags;
    std::string factorization_dir;

    auto* factorize = app.add_subcommand("factorize", "fit a factorization and serialize it");
    add_common_flags(factorize, flags, /*config_required=*/true);

    auto* embed = app.add_subcommand("embed", "compute node embeddings from a factorization");
    add_common_flags(embed, flags, /*config_required=*/false);
    embed->add_option("--factorization", factorization_dir,
                      "directory written by `factorize`");

    auto* evaluate = app.add_subcommand("evaluate", "run the link-prediction protocol");
    add_common_flags(evaluate, flags, /*config_required=*/true);

    auto* benchmark = app.add_subcommand("benchmark", "time the solver across a size grid");
    add_common_flags(benchmark, flags, /*config_required=*/true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const RunConfig cfg = resolve_config(flags);
        toffee::set_max_threads(cfg.threads);
        if (factorize->parsed()) return cmd_factorize(cfg);
        if (embed->parsed()) return cmd_embed(factorization_dir, cfg);
        if (evaluate->parsed()) return cmd_evaluate(cfg);
        if (benchmark->parsed()) return cmd_benchmark(cfg);
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const toffee::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
