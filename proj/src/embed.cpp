#include "toffee/embed.hpp"

#include <cstdio>

namespace toffee {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string provenance_tag(const Factorization& f) {
    char cfg[160];
    std::snprintf(cfg, sizeof(cfg), "r=%zu,lA=%.17g,lR=%.17g,it=%zu,tol=%.17g,seed=%llu",
                  f.config.rank, f.config.lambda_A, f.config.lambda_R, f.config.max_iters,
                  f.config.rel_tol, static_cast<unsigned long long>(f.config.seed));
    // FNV-1a over the config string
    std::uint64_t h = 1469598103934665603ULL;
    for (const char* p = cfg; *p; ++p) {
        h ^= static_cast<unsigned char>(*p);
        h *= 1099511628211ULL;
    }
    char out[64];
    std::snprintf(out, sizeof(out), "%s-%016llx", method_name(f.method),
                  static_cast<unsigned long long>(h));
    return out;
}

MatrixXd temporal_sum(const RealTensor3& t) {
    MatrixXd sum = MatrixXd::Zero(static_cast<Eigen::Index>(t.n1()),
                                  static_cast<Eigen::Index>(t.n2()));
    for (std::size_t k = 0; k < t.n3(); ++k) sum += t.slice(k);
    return sum;
}

EmbeddingMatrix finish(const Factorization& f, MatrixXd values) {
    if (!values.allFinite()) throw Error("embedding matrix contains a non-finite entry");
    return EmbeddingMatrix{std::move(values), provenance_tag(f)};
}

void require_method(const Factorization& f, Method expected) {
    if (f.method != expected)
        throw Error(std::string("factorization method is ") + method_name(f.method) +
                    ", expected " + method_name(expected));
}

}  // namespace

const char* edge_operator_name(EdgeOperator op) {
    switch (op) {
        case EdgeOperator::kAverage: return "average";
        case EdgeOperator::kHadamard: return "hadamard";
        case EdgeOperator::kWeightedL1: return "weighted-l1";
        case EdgeOperator::kWeightedL2: return "weighted-l2";
    }
    return "unknown";
}

std::optional<EdgeOperator> edge_operator_from_name(const std::string& name) {
    if (name == "average") return EdgeOperator::kAverage;
    if (name == "hadamard") return EdgeOperator::kHadamard;
    if (name == "weighted-l1") return EdgeOperator::kWeightedL1;
    if (name == "weighted-l2") return EdgeOperator::kWeightedL2;
    return std::nullopt;
}

std::vector<EdgeOperator> all_edge_operators() {
    return {EdgeOperator::kAverage, EdgeOperator::kHadamard, EdgeOperator::kWeightedL1,
            EdgeOperator::kWeightedL2};
}

EmbeddingMatrix toffee_embeddings(const Factorization& f) {
    require_method(f, Method::kToffee);
    if (f.A.n2() != f.R.n1() || f.A.n3() != f.R.n3() || f.R.n1() != f.R.n2())
        throw DimMismatch("factor shapes are inconsistent");
    return finish(f, temporal_sum(f.A) * temporal_sum(f.R));
}

EmbeddingMatrix rescal_embeddings(const Factorization& f) {
    require_method(f, Method::kRescal);
    if (f.A.n3() != 1 || f.A.n2() != f.R.n1() || f.R.n1() != f.R.n2())
        throw DimMismatch("factor shapes are inconsistent");
    const MatrixXd A = f.A.slice(0);
    return finish(f, A * temporal_sum(f.R));
}

EmbeddingMatrix tsvd_embeddings(const Factorization& f) {
    require_method(f, Method::kTsvd);
    if (f.A.n2() != f.R.n1() || f.A.n3() != f.R.n3() || f.R.n1() != f.R.n2())
        throw DimMismatch("factor shapes are inconsistent");
    return finish(f, temporal_sum(f.A) * temporal_sum(f.R));
}

EmbeddingMatrix embeddings(const Factorization& f) {
    switch (f.method) {
        case Method::kToffee: return toffee_embeddings(f);
        case Method::kRescal: return rescal_embeddings(f);
        case Method::kTsvd: return tsvd_embeddings(f);
    }
    throw Error("unknown factorization method");
}

Eigen::VectorXd edge_feature(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                             EdgeOperator op) {
    if (u.size() != v.size())
        throw DimMismatch("edge_feature requires equal-length embeddings");
    switch (op) {
        case EdgeOperator::kAverage: return (u + v) / 2.0;
        case EdgeOperator::kHadamard: return u.cwiseProduct(v);
        case EdgeOperator::kWeightedL1: return (u - v).cwiseAbs();
        case EdgeOperator::kWeightedL2: return (u - v).cwiseAbs2();
    }
    throw Error("unknown edge operator");
}

}  // namespace toffee
