#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "toffee/factorize.hpp"

namespace toffee {

/// One r-dimensional embedding per node, plus a provenance tag (method name
/// and a hash of the fit configuration).
struct EmbeddingMatrix {
    Eigen::MatrixXd values;  // n x r, row i belongs to node i
    std::string provenance;

    std::size_t num_nodes() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(values.cols()); }
    Eigen::VectorXd row(std::size_t i) const {
        return values.row(static_cast<Eigen::Index>(i)).transpose();
    }
};

enum class EdgeOperator { kAverage, kHadamard, kWeightedL1, kWeightedL2 };

const char* edge_operator_name(EdgeOperator op);
std::optional<EdgeOperator> edge_operator_from_name(const std::string& name);
std::vector<EdgeOperator> all_edge_operators();

/// Per-node embeddings for a circular-convolution factorization. Summing the
/// tubes of A(i,:,:) * R over time equals taking the zero-frequency Fourier
/// component, so the whole matrix collapses to the closed form
/// (sum_t A^(t)) (sum_t R^(t)) with no per-node t-products.
EmbeddingMatrix toffee_embeddings(const Factorization& f);

/// RESCAL analogue with matrix products: row i of A (sum_t R^(t)).
EmbeddingMatrix rescal_embeddings(const Factorization& f);

/// The same temporal-sum construction applied to the t-SVD factors U_r, S_r.
EmbeddingMatrix tsvd_embeddings(const Factorization& f);

/// Dispatches on f.method.
EmbeddingMatrix embeddings(const Factorization& f);

/// Combines two node embeddings into one edge feature vector. All four kinds
/// are symmetric in (u, v) and preserve the dimension.
Eigen::VectorXd edge_feature(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                             EdgeOperator op);

}  // namespace toffee
