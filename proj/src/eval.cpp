#include "toffee/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_set>

#include "toffee/rng.hpp"

namespace toffee {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint64_t pair_key(NodePair p) {
    return (static_cast<std::uint64_t>(p.first) << 32) | p.second;
}

NodePair canonical_pair(NodeId a, NodeId b, bool directed) {
    if (!directed && b < a) std::swap(a, b);
    return {a, b};
}

std::unordered_set<std::uint64_t> existing_pair_set(const TemporalGraph& g) {
    std::unordered_set<std::uint64_t> pairs;
    pairs.reserve(g.num_events());
    for (const Event& e : g.events()) {
        if (e.src == e.dst) continue;
        pairs.insert(pair_key(canonical_pair(e.src, e.dst, g.directed())));
    }
    return pairs;
}

double logistic_loss_and_grad(const MatrixXd& X, const VectorXd& y, const VectorXd& w,
                              double bias, double l2, VectorXd& grad_w, double& grad_b) {
    const auto m = static_cast<double>(X.rows());
    const VectorXd z = X * w + VectorXd::Constant(X.rows(), bias);

    double loss = 0.0;
    VectorXd residual(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double zi = z(i);
        // log(1 + exp(-t)) for t = label-signed margin, computed stably
        const double t = (y(i) > 0.5) ? zi : -zi;
        loss += (t > 0.0) ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
        const double p = 1.0 / (1.0 + std::exp(-zi));
        residual(i) = p - y(i);
    }
    loss /= m;
    loss += l2 / 2.0 * (w.squaredNorm() + bias * bias);

    grad_w = X.transpose() * residual / m + l2 * w;
    grad_b = residual.sum() / m + l2 * bias;
    return loss;
}

}  // namespace

SplitResult temporal_split(std::shared_ptr<const TemporalGraph> g, double fraction) {
    if (!g || g->num_events() == 0) throw EmptyInput("graph has no events");
    if (!(fraction > 0.0 && fraction < 1.0))
        throw Error("split fraction must lie strictly between 0 and 1");

    const auto& events = g->events();
    const auto total = events.size();
    const auto train_count = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(total)));
    if (train_count == 0 || train_count >= total)
        throw EmptySplit("split would leave " + std::to_string(train_count) +
                         " training events of " + std::to_string(total));

    std::vector<Event> train_events(events.begin(),
                                    events.begin() + static_cast<std::ptrdiff_t>(train_count));
    auto train_graph = std::make_shared<const TemporalGraph>(TemporalGraph::from_events(
        std::vector<std::string>(g->labels()), std::move(train_events), g->directed()));

    std::vector<NodePair> positives;
    std::unordered_set<std::uint64_t> seen;
    for (std::size_t i = train_count; i < total; ++i) {
        const NodePair p = canonical_pair(events[i].src, events[i].dst, g->directed());
        if (seen.insert(pair_key(p)).second) positives.push_back(p);
    }

    return SplitResult{std::move(train_graph), std::move(positives), fraction};
}

std::vector<NodePair> sample_negatives(const TemporalGraph& g, std::size_t count,
                                       std::uint64_t seed) {
    const std::size_t n = g.num_nodes();
    const auto existing = existing_pair_set(g);

    const std::size_t total_pairs = g.directed() ? n * (n - 1) : n * (n - 1) / 2;
    if (existing.size() + count > total_pairs)
        throw Exhausted("requested " + std::to_string(count) + " absent pairs but only " +
                        std::to_string(total_pairs - existing.size()) + " exist");

    std::vector<NodePair> out;
    out.reserve(count);
    if (count == 0) return out;

    SeededRng rng(seed);
    std::unordered_set<std::uint64_t> chosen;
    const std::size_t available = total_pairs - existing.size();

    if (existing.size() * 2 <= total_pairs && available >= count * 2) {
        // Sparse case: rejection sampling terminates quickly.
        while (out.size() < count) {
            const auto i = static_cast<NodeId>(rng.next_below(n));
            const auto j = static_cast<NodeId>(rng.next_below(n));
            if (i == j) continue;
            const NodePair p = canonical_pair(i, j, g.directed());
            const std::uint64_t key = pair_key(p);
            if (existing.count(key) || !chosen.insert(key).second) continue;
            out.push_back(p);
        }
    } else {
        // Dense case: enumerate the absent pairs and draw a random prefix.
        std::vector<NodePair> absent;
        absent.reserve(available);
        for (NodeId i = 0; i < n; ++i) {
            const NodeId j_begin = g.directed() ? 0 : i + 1;
            for (NodeId j = j_begin; j < n; ++j) {
                if (i == j) continue;
                if (!existing.count(pair_key({i, j}))) absent.push_back({i, j});
            }
        }
        for (std::size_t k = 0; k < count; ++k) {
            const std::size_t pick = k + rng.next_below(absent.size() - k);
            std::swap(absent[k], absent[pick]);
            out.push_back(absent[k]);
        }
    }
    return out;
}

std::vector<double> LogisticModel::weights() const {
    std::vector<double> out(w.data(), w.data() + w.size());
    out.push_back(bias);
    return out;
}

double LogisticModel::predict_prob(const VectorXd& raw_feature) const {
    const VectorXd x = (raw_feature - mean).cwiseQuotient(scale);
    const double z = w.dot(x) + bias;
    return 1.0 / (1.0 + std::exp(-z));
}

LogisticModel train_logistic(const LabeledEdgeSet& data, double l2, std::uint64_t seed) {
    (void)seed;  // training is deterministic; the seed is part of the contract only
    const std::size_t m = data.examples.size();
    if (m < 2) throw DegenerateLabels("need at least two labeled examples");
    const auto dim = static_cast<Eigen::Index>(data.examples.front().feature.size());

    std::size_t positives = 0;
    for (const auto& ex : data.examples) positives += (ex.label == 1);
    if (positives == 0 || positives == m)
        throw DegenerateLabels("training data contains a single class");

    MatrixXd X(static_cast<Eigen::Index>(m), dim);
    VectorXd y(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
        if (data.examples[i].feature.size() != dim)
            throw DimMismatch("feature vectors have mixed lengths");
        X.row(static_cast<Eigen::Index>(i)) = data.examples[i].feature.transpose();
        y(static_cast<Eigen::Index>(i)) = data.examples[i].label;
    }

    LogisticModel model;
    model.mean = X.colwise().mean();
    VectorXd var = (X.rowwise() - model.mean.transpose()).array().square().colwise().mean();
    model.scale = var.array().sqrt();
    for (Eigen::Index j = 0; j < dim; ++j)
        if (model.scale(j) == 0.0) model.scale(j) = 1.0;
    X = (X.rowwise() - model.mean.transpose()).array().rowwise() /
        model.scale.transpose().array();

    VectorXd w = VectorXd::Zero(dim);
    double bias = 0.0;
    VectorXd grad_w(dim);
    double grad_b = 0.0;
    double step = 1.0;

    double loss = logistic_loss_and_grad(X, y, w, bias, l2, grad_w, grad_b);
    for (int iter = 0; iter < 10000; ++iter) {
        const double grad_norm_sq = grad_w.squaredNorm() + grad_b * grad_b;
        if (std::sqrt(grad_norm_sq) < 1e-6) break;

        // Backtracking line search (Armijo).
        step = std::min(step * 2.0, 1e4);
        VectorXd w_try;
        double b_try = 0.0, loss_try = 0.0;
        VectorXd grad_w_try(dim);
        double grad_b_try = 0.0;
        for (;;) {
            w_try = w - step * grad_w;
            b_try = bias - step * grad_b;
            loss_try = logistic_loss_and_grad(X, y, w_try, b_try, l2, grad_w_try, grad_b_try);
            if (loss_try <= loss - 1e-4 * step * grad_norm_sq || step < 1e-14) break;
            step /= 2.0;
        }
        if (loss_try > loss) break;  // step floored out; we are at numerical rest
        w = std::move(w_try);
        bias = b_try;
        loss = loss_try;
        grad_w = std::move(grad_w_try);
        grad_b = grad_b_try;
    }

    model.w = std::move(w);
    model.bias = bias;
    return model;
}

double micro_f1(const std::vector<int>& predictions, const std::vector<int>& truth) {
    if (predictions.size() != truth.size() || predictions.empty())
        throw LengthMismatch("prediction and truth vectors must have equal nonzero length");

    // Pool TP/FP/FN over both classes.
    double tp = 0.0, fp = 0.0, fn = 0.0;
    for (int cls : {0, 1}) {
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            const bool pred_c = predictions[i] == cls;
            const bool true_c = truth[i] == cls;
            if (pred_c && true_c) tp += 1.0;
            if (pred_c && !true_c) fp += 1.0;
            if (!pred_c && true_c) fn += 1.0;
        }
    }
    if (tp == 0.0) return 0.0;
    const double precision = tp / (tp + fp);
    const double recall = tp / (tp + fn);
    return 2.0 * precision * recall / (precision + recall);
}

namespace detail {

LabeledEdgeSet build_labeled_set(const EmbeddingMatrix& emb,
                                 const std::vector<NodePair>& positives,
                                 const std::vector<NodePair>& negatives, EdgeOperator op,
                                 std::uint64_t seed) {
    if (positives.size() != negatives.size())
        throw LengthMismatch("labeled sets must be balanced");
    LabeledEdgeSet set;
    set.op = op;
    set.seed = seed;
    set.examples.reserve(positives.size() * 2);
    auto add = [&](const NodePair& p, int label) {
        LabeledExample ex;
        ex.pair = p;
        ex.feature = edge_feature(emb.row(p.first), emb.row(p.second), op);
        ex.label = label;
        set.examples.push_back(std::move(ex));
    };
    for (const NodePair& p : positives) add(p, 1);
    for (const NodePair& p : negatives) add(p, 0);
    return set;
}

std::vector<double> evaluate_embeddings(const EmbeddingMatrix& emb,
                                        const TemporalGraph& full_graph,
                                        const SplitResult& split,
                                        const std::vector<EdgeOperator>& operators,
                                        std::uint64_t seed, double classifier_l2) {
    const auto& positives = split.test_positives;
    if (positives.size() < 2)
        throw EmptySplit("too few test positives to form a classifier split");

    const auto negatives =
        sample_negatives(full_graph, positives.size(), derive_seed(seed, kStreamNegatives));

    // One stratified 50/50 shuffle shared by all operators.
    std::vector<std::size_t> pos_order(positives.size()), neg_order(negatives.size());
    for (std::size_t i = 0; i < pos_order.size(); ++i) pos_order[i] = i;
    for (std::size_t i = 0; i < neg_order.size(); ++i) neg_order[i] = i;
    SeededRng split_rng(derive_seed(seed, kStreamClassifierSplit));
    split_rng.shuffle(pos_order.begin(), pos_order.end());
    split_rng.shuffle(neg_order.begin(), neg_order.end());
    const std::size_t pos_train = positives.size() - positives.size() / 2;
    const std::size_t neg_train = negatives.size() - negatives.size() / 2;

    std::vector<double> scores;
    scores.reserve(operators.size());
    for (const EdgeOperator op : operators) {
        LabeledEdgeSet train_set, test_set;
        train_set.op = test_set.op = op;
        train_set.seed = test_set.seed = seed;
        auto add = [&](LabeledEdgeSet& dst, const NodePair& p, int label) {
            LabeledExample ex;
            ex.pair = p;
            ex.feature = edge_feature(emb.row(p.first), emb.row(p.second), op);
            ex.label = label;
            dst.examples.push_back(std::move(ex));
        };
        for (std::size_t i = 0; i < pos_order.size(); ++i)
            add(i < pos_train ? train_set : test_set, positives[pos_order[i]], 1);
        for (std::size_t i = 0; i < neg_order.size(); ++i)
            add(i < neg_train ? train_set : test_set, negatives[neg_order[i]], 0);

        const LogisticModel model = train_logistic(train_set, classifier_l2, seed);
        std::vector<int> pred, truth;
        pred.reserve(test_set.examples.size());
        truth.reserve(test_set.examples.size());
        for (const auto& ex : test_set.examples) {
            pred.push_back(model.predict(ex.feature));
            truth.push_back(ex.label);
        }
        scores.push_back(micro_f1(pred, truth));
    }
    return scores;
}

}  // namespace detail

namespace {

Factorization fit_with(Method method, const AdjacencyTensor& tensor,
                       const ToffeeConfig& cfg) {
    switch (method) {
        case Method::kToffee: return toffee_fit(tensor, cfg);
        case Method::kRescal: return rescal_fit(tensor, cfg);
        case Method::kTsvd: return tsvd(tensor, cfg.rank);
    }
    throw Error("unknown method");
}

// Mean Micro-F1 of the best operator for one replication seed.
double validation_score(std::shared_ptr<const TemporalGraph> g, const SnapshotSpec& spec,
                        Method method, const ToffeeConfig& cfg,
                        const std::vector<EdgeOperator>& operators, std::uint64_t seed,
                        const EvalConfig& eval_cfg, const SplitResult& split) {
    ToffeeConfig replication_cfg = cfg;
    replication_cfg.seed = derive_seed(seed, detail::kStreamInit);
    const AdjacencyTensor tensor = bin_timestamps(split.train_graph, spec);
    const Factorization f = fit_with(method, tensor, replication_cfg);
    const EmbeddingMatrix emb = embeddings(f);
    const auto scores =
        detail::evaluate_embeddings(emb, *g, split, operators, seed, eval_cfg.classifier_l2);
    return *std::max_element(scores.begin(), scores.end());
}

}  // namespace

EvalReport run_link_prediction(std::shared_ptr<const TemporalGraph> g,
                               const SnapshotSpec& spec, Method method,
                               const ToffeeConfig& cfg,
                               const std::vector<EdgeOperator>& operators,
                               const std::vector<std::uint64_t>& seeds,
                               const EvalConfig& eval_cfg) {
    if (operators.empty()) throw Error("operator list is empty");
    if (seeds.empty()) throw Error("seed list is empty");

    const auto t0 = Clock::now();
    const SplitResult split = temporal_split(g, eval_cfg.split_fraction);
    const AdjacencyTensor train_tensor = bin_timestamps(split.train_graph, spec);

    ToffeeConfig used_cfg = cfg;
    if (eval_cfg.grid_search && method != Method::kTsvd) {
        // Validation seed disjoint from the reported seeds.
        std::uint64_t mix = 0x5851f42d4c957f2dULL;
        for (std::uint64_t s : seeds) mix = derive_seed(mix, s);
        std::uint64_t val_seed = mix;
        while (std::find(seeds.begin(), seeds.end(), val_seed) != seeds.end()) ++val_seed;

        double best = -1.0;
        for (const double lambda : {1e-4, 1e-3, 1e-2, 1e-1}) {
            ToffeeConfig candidate = cfg;
            candidate.lambda_A = candidate.lambda_R = lambda;
            const double score = validation_score(g, spec, method, candidate, operators,
                                                  val_seed, eval_cfg, split);
            if (score > best) {
                best = score;
                used_cfg = candidate;
            }
        }
    }

    // scores[op][seed]
    std::vector<std::vector<double>> scores(operators.size());
    std::vector<double> op_seconds(operators.size(), 0.0);
    for (const std::uint64_t seed : seeds) {
        ToffeeConfig replication_cfg = used_cfg;
        replication_cfg.seed = derive_seed(seed, detail::kStreamInit);
        const auto rep_start = Clock::now();
        Factorization f;
        try {
            f = fit_with(method, train_tensor, replication_cfg);
        } catch (const Error& e) {
            throw Error(std::string(e.what()) + " (replication seed " + std::to_string(seed) +
                        ")");
        }
        const EmbeddingMatrix emb = embeddings(f);
        std::vector<double> per_op;
        try {
            per_op = detail::evaluate_embeddings(emb, *g, split, operators, seed,
                                                 eval_cfg.classifier_l2);
        } catch (const Error& e) {
            throw Error(std::string(e.what()) + " (replication seed " + std::to_string(seed) +
                        ")");
        }
        const double rep_seconds = seconds_since(rep_start);
        for (std::size_t o = 0; o < operators.size(); ++o) {
            scores[o].push_back(per_op[o]);
            op_seconds[o] += rep_seconds / static_cast<double>(operators.size());
        }
    }

    EvalReport report;
    report.seeds = seeds;
    report.method = method;
    report.config = used_cfg;
    for (std::size_t o = 0; o < operators.size(); ++o) {
        OperatorScore s;
        s.op = operators[o];
        s.per_seed_f1 = scores[o];
        double sum = 0.0;
        for (double v : scores[o]) sum += v;
        s.mean_f1 = sum / static_cast<double>(scores[o].size());
        double ss = 0.0;
        for (double v : scores[o]) ss += (v - s.mean_f1) * (v - s.mean_f1);
        s.std_f1 = scores[o].size() > 1
                       ? std::sqrt(ss / static_cast<double>(scores[o].size() - 1))
                       : 0.0;
        s.wall_seconds = op_seconds[o];
        report.operators.push_back(std::move(s));
    }
    report.best_operator =
        std::max_element(report.operators.begin(), report.operators.end(),
                         [](const OperatorScore& a, const OperatorScore& b) {
                             return a.mean_f1 < b.mean_f1;
                         })
            ->op;
    report.wall_seconds = seconds_since(t0);
    return report;
}

}  // namespace toffee
