#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "toffee/embed.hpp"
#include "toffee/factorize.hpp"
#include "toffee/tensor.hpp"

namespace toffee {

/// Binary tensor container: magic "TTE1", three little-endian u64 dims,
/// then little-endian f64 entries in slice-major order.
void write_tensor(const std::filesystem::path& path, const RealTensor3& t);
RealTensor3 read_tensor(const std::filesystem::path& path);

/// Serialized factorization: A.tte and R.tte next to a plain-text sidecar
/// `factorization.meta` holding the method, config, iteration count, the
/// convergence trace as two-column text and the node labels.
void save_factorization(const std::filesystem::path& dir, const Factorization& f,
                        const std::vector<std::string>& node_labels);

struct LoadedFactorization {
    Factorization factorization;
    std::vector<std::string> node_labels;
};
LoadedFactorization load_factorization(const std::filesystem::path& dir);

/// Embedding export: header line "n r", then one line per node:
/// label followed by r reals at 17 significant digits.
void write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& emb,
                      const std::vector<std::string>& node_labels);

struct LoadedEmbeddings {
    EmbeddingMatrix embeddings;
    std::vector<std::string> node_labels;
};
LoadedEmbeddings read_embeddings(const std::filesystem::path& path);

}  // namespace toffee
