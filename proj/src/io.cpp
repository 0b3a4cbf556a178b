#include "toffee/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace toffee {

namespace {

constexpr char kMagic[4] = {'T', 'T', 'E', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(bytes, 8);
}

std::uint64_t get_u64(std::istream& in, const std::filesystem::path& path) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8))
        throw IoError("truncated container: " + path.string());
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
}

void put_f64(std::ostream& out, double d) {
    put_u64(out, std::bit_cast<std::uint64_t>(d));
}

double get_f64(std::istream& in, const std::filesystem::path& path) {
    return std::bit_cast<double>(get_u64(in, path));
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double_or_throw(const std::string& s, const std::string& context) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError("bad numeric value '" + s + "' in " + context);
    }
}

}  // namespace

void write_tensor(const std::filesystem::path& path, const RealTensor3& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(kMagic, 4);
    put_u64(out, t.n1());
    put_u64(out, t.n2());
    put_u64(out, t.n3());
    for (std::size_t p = 0; p < t.size(); ++p) put_f64(out, t.data()[p]);
    if (!out) throw IoError("write failed: " + path.string());
}

RealTensor3 read_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("bad magic bytes, not a TTE1 container: " + path.string());
    const std::uint64_t n1 = get_u64(in, path);
    const std::uint64_t n2 = get_u64(in, path);
    const std::uint64_t n3 = get_u64(in, path);
    if (n1 == 0 || n2 == 0 || n3 == 0 || n1 * n2 * n3 > (1ULL << 34))
        throw IoError("implausible dimensions in " + path.string());
    std::vector<double> data(n1 * n2 * n3);
    for (double& d : data) d = get_f64(in, path);
    return RealTensor3::from_data(n1, n2, n3, std::move(data));
}

void save_factorization(const std::filesystem::path& dir, const Factorization& f,
                        const std::vector<std::string>& node_labels) {
    std::filesystem::create_directories(dir);
    write_tensor(dir / "A.tte", f.A);
    write_tensor(dir / "R.tte", f.R);

    std::ofstream meta(dir / "factorization.meta");
    if (!meta) throw IoError("cannot open for writing: " + (dir / "factorization.meta").string());
    meta << "format = toffee-factorization-v1\n";
    meta << "method = " << method_name(f.method) << "\n";
    meta << "rank = " << f.config.rank << "\n";
    meta << "lambda_A = " << format_double(f.config.lambda_A) << "\n";
    meta << "lambda_R = " << format_double(f.config.lambda_R) << "\n";
    meta << "max_iters = " << f.config.max_iters << "\n";
    meta << "rel_tol = " << format_double(f.config.rel_tol) << "\n";
    meta << "seed = " << f.config.seed << "\n";
    meta << "iterations_run = " << f.iterations_run << "\n";
    meta << "[trace]\n";
    for (std::size_t i = 0; i < f.objective_trace.size(); ++i)
        meta << i << " " << format_double(f.objective_trace[i]) << "\n";
    meta << "[nodes]\n";
    for (const auto& label : node_labels) meta << label << "\n";
    if (!meta) throw IoError("write failed: " + (dir / "factorization.meta").string());
}

LoadedFactorization load_factorization(const std::filesystem::path& dir) {
    LoadedFactorization out;
    out.factorization.A = read_tensor(dir / "A.tte");
    out.factorization.R = read_tensor(dir / "R.tte");

    std::ifstream meta(dir / "factorization.meta");
    if (!meta) throw IoError("cannot open: " + (dir / "factorization.meta").string());

    enum class Section { kHeader, kTrace, kNodes };
    Section section = Section::kHeader;
    std::string line;
    while (std::getline(meta, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line == "[trace]") {
            section = Section::kTrace;
            continue;
        }
        if (line == "[nodes]") {
            section = Section::kNodes;
            continue;
        }
        switch (section) {
            case Section::kHeader: {
                const auto eq = line.find('=');
                if (eq == std::string::npos) continue;
                auto trim = [](std::string s) {
                    const auto b = s.find_first_not_of(" \t");
                    const auto e = s.find_last_not_of(" \t");
                    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
                };
                const std::string key = trim(line.substr(0, eq));
                const std::string value = trim(line.substr(eq + 1));
                if (key == "method") {
                    const auto m = method_from_name(value);
                    if (!m) throw IoError("unknown method '" + value + "' in sidecar");
                    out.factorization.method = *m;
                } else if (key == "rank") {
                    out.factorization.config.rank =
                        static_cast<std::size_t>(parse_double_or_throw(value, "rank"));
                } else if (key == "lambda_A") {
                    out.factorization.config.lambda_A = parse_double_or_throw(value, "lambda_A");
                } else if (key == "lambda_R") {
                    out.factorization.config.lambda_R = parse_double_or_throw(value, "lambda_R");
                } else if (key == "max_iters") {
                    out.factorization.config.max_iters =
                        static_cast<std::size_t>(parse_double_or_throw(value, "max_iters"));
                } else if (key == "rel_tol") {
                    out.factorization.config.rel_tol = parse_double_or_throw(value, "rel_tol");
                } else if (key == "seed") {
                    out.factorization.config.seed =
                        static_cast<std::uint64_t>(parse_double_or_throw(value, "seed"));
                } else if (key == "iterations_run") {
                    out.factorization.iterations_run =
                        static_cast<std::size_t>(parse_double_or_throw(value, "iterations_run"));
                }
                break;
            }
            case Section::kTrace: {
                std::istringstream row(line);
                std::size_t idx = 0;
                double value = 0.0;
                if (row >> idx >> value) out.factorization.objective_trace.push_back(value);
                break;
            }
            case Section::kNodes:
                out.node_labels.push_back(line);
                break;
        }
    }
    return out;
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& emb,
                      const std::vector<std::string>& node_labels) {
    if (node_labels.size() != emb.num_nodes())
        throw DimMismatch("label count does not match embedding rows");
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << emb.num_nodes() << " " << emb.dim() << "\n";
    for (std::size_t i = 0; i < emb.num_nodes(); ++i) {
        out << node_labels[i];
        for (std::size_t j = 0; j < emb.dim(); ++j)
            out << " "
                << format_double(emb.values(static_cast<Eigen::Index>(i),
                                            static_cast<Eigen::Index>(j)));
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path.string());
}

LoadedEmbeddings read_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path.string());
    std::size_t n = 0, r = 0;
    if (!(in >> n >> r) || n == 0 || r == 0)
        throw IoError("bad embedding header in " + path.string());

    LoadedEmbeddings out;
    out.embeddings.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(r));
    for (std::size_t i = 0; i < n; ++i) {
        std::string label;
        if (!(in >> label)) throw IoError("truncated embedding file: " + path.string());
        out.node_labels.push_back(label);
        for (std::size_t j = 0; j < r; ++j) {
            double v = 0.0;
            if (!(in >> v)) throw IoError("truncated embedding row in " + path.string());
            out.embeddings.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    }
    return out;
}

}  // namespace toffee
