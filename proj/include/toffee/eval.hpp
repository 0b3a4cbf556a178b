#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "toffee/embed.hpp"
#include "toffee/factorize.hpp"
#include "toffee/graph.hpp"

namespace toffee {

using NodePair = std::pair<NodeId, NodeId>;

/// Temporal train/test partition. train_graph keeps the full node registry;
/// test_positives are the distinct node pairs touched by the held-out events
/// (unordered-canonical for undirected graphs).
struct SplitResult {
    std::shared_ptr<const TemporalGraph> train_graph;
    std::vector<NodePair> test_positives;
    double split_fraction = 0.0;
};

// Sorts events by time, keeps the first ceil(fraction * |events|) for
// training and turns the rest into test pairs. Throws EmptySplit when either
// side would be empty.
SplitResult temporal_split(std::shared_ptr<const TemporalGraph> g, double fraction);

// Uniformly samples `count` distinct node pairs (i != j) that appear nowhere
// in the graph's edge set, at any time. Deterministic per seed. Throws
// Exhausted when the graph is too dense to supply that many absent pairs.
std::vector<NodePair> sample_negatives(const TemporalGraph& g, std::size_t count,
                                       std::uint64_t seed);

struct LabeledExample {
    NodePair pair;
    Eigen::VectorXd feature;
    int label = 0;  // 1 = edge, 0 = non-edge
};

/// Balanced labeled edge set for one operator: every positive matched by a
/// sampled negative.
struct LabeledEdgeSet {
    std::vector<LabeledExample> examples;
    EdgeOperator op = EdgeOperator::kAverage;
    std::uint64_t seed = 0;
};

/// Logistic classifier with the standardization learned on its training
/// portion baked in.
struct LogisticModel {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;
    Eigen::VectorXd w;
    double bias = 0.0;

    // r feature weights followed by the bias.
    std::vector<double> weights() const;
    double predict_prob(const Eigen::VectorXd& raw_feature) const;
    int predict(const Eigen::VectorXd& raw_feature) const {
        return predict_prob(raw_feature) >= 0.5 ? 1 : 0;
    }
};

// Full-batch gradient descent with backtracking line search from zero
// initialization, run until the gradient norm drops below 1e-6 or 10000
// iterations. Features are standardized per dimension using statistics of
// `data` itself (the caller passes the training portion only).
LogisticModel train_logistic(const LabeledEdgeSet& data, double l2, std::uint64_t seed);

// Micro-averaged F1 over the two classes via global TP/FP/FN pooling. For
// single-label binary predictions this equals accuracy.
double micro_f1(const std::vector<int>& predictions, const std::vector<int>& truth);

struct OperatorScore {
    EdgeOperator op = EdgeOperator::kAverage;
    double mean_f1 = 0.0;
    double std_f1 = 0.0;
    std::vector<double> per_seed_f1;
    double wall_seconds = 0.0;
};

struct EvalReport {
    std::vector<OperatorScore> operators;
    EdgeOperator best_operator = EdgeOperator::kAverage;
    std::vector<std::uint64_t> seeds;
    double wall_seconds = 0.0;
    Method method = Method::kToffee;
    ToffeeConfig config;  // config actually used (after any grid search)
};

struct EvalConfig {
    double split_fraction = 0.75;
    double classifier_l2 = 1e-4;
    // When set, lambda_A = lambda_R is chosen from {1e-4, 1e-3, 1e-2, 1e-1}
    // by a validation replication whose seed is disjoint from `seeds`.
    bool grid_search = false;
};

/// The end-to-end protocol: per seed, embed the training window, pair the
/// held-out positives with sampled negatives, split 50/50 stratified, train
/// the classifier and score Micro-F1 on the held-out half; then aggregate
/// mean/std per operator.
EvalReport run_link_prediction(std::shared_ptr<const TemporalGraph> g,
                               const SnapshotSpec& spec, Method method,
                               const ToffeeConfig& cfg,
                               const std::vector<EdgeOperator>& operators,
                               const std::vector<std::uint64_t>& seeds,
                               const EvalConfig& eval_cfg = {});

namespace detail {

// One replication on externally supplied embeddings; returns one Micro-F1
// per operator. Substream derivation matches run_link_prediction, so a
// custom embedding source (e.g. a random-control matrix) slots into the
// identical protocol.
std::vector<double> evaluate_embeddings(const EmbeddingMatrix& emb,
                                        const TemporalGraph& full_graph,
                                        const SplitResult& split,
                                        const std::vector<EdgeOperator>& operators,
                                        std::uint64_t seed, double classifier_l2);

// Balanced labeled set for one operator from explicit positives/negatives.
LabeledEdgeSet build_labeled_set(const EmbeddingMatrix& emb,
                                 const std::vector<NodePair>& positives,
                                 const std::vector<NodePair>& negatives, EdgeOperator op,
                                 std::uint64_t seed);

// Substream indices used to derive per-purpose seeds from a replication seed.
inline constexpr std::uint64_t kStreamInit = 0;
inline constexpr std::uint64_t kStreamNegatives = 1;
inline constexpr std::uint64_t kStreamClassifierSplit = 2;

}  // namespace detail

}  // namespace toffee
