#pragma once

#include <cstdint>
#include <istream>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "toffee/tensor.hpp"

namespace toffee {

using NodeId = std::uint32_t;

struct Event {
    NodeId src = 0;
    NodeId dst = 0;
    double weight = 1.0;
    double timestamp = 0.0;
};

/// Node registry plus time-stamped edge events. Events are kept sorted
/// nondecreasing by timestamp (ties keep input order); node labels are
/// interned in first-seen order. Immutable after construction.
class TemporalGraph {
public:
    static TemporalGraph from_events(std::vector<std::string> labels,
                                     std::vector<Event> events, bool directed);

    std::size_t num_nodes() const { return labels_.size(); }
    std::size_t num_events() const { return events_.size(); }
    bool directed() const { return directed_; }

    const std::vector<Event>& events() const { return events_; }
    const std::string& label(NodeId i) const { return labels_[i]; }
    const std::vector<std::string>& labels() const { return labels_; }

    std::optional<NodeId> index_of(const std::string& label) const {
        auto it = index_.find(label);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, NodeId> index_;
    std::vector<Event> events_;
    bool directed_ = false;
};

enum class BinStrategy { kUniformWidth, kNativeDistinct };
enum class Weighting { kBinary, kCount, kWeightSum };

/// How a temporal graph is turned into snapshots. For kNativeDistinct,
/// num_bins acts as a cap: each distinct timestamp becomes one slice when
/// there are at most num_bins of them, otherwise binning falls back to
/// num_bins uniform-width slices.
struct SnapshotSpec {
    std::size_t num_bins = 32;
    BinStrategy strategy = BinStrategy::kUniformWidth;
    Weighting weighting = Weighting::kBinary;
    bool symmetrize = true;
};

/// The temporal adjacency tensor (n, n, T) together with the spec that built
/// it and a handle to the node registry it indexes into.
struct AdjacencyTensor {
    RealTensor3 tensor;
    SnapshotSpec spec;
    std::shared_ptr<const TemporalGraph> graph;
};

/// Which columns of the input hold what. Column indices count tokens after
/// splitting; weight_col < 0 means there is no weight column and every event
/// gets weight 1. delimiter '\0' splits on runs of whitespace.
struct EdgeListFormat {
    int src_col = 0;
    int dst_col = 1;
    int weight_col = -1;
    int time_col = 2;
    char delimiter = '\0';
    bool directed = false;
};

// Parses a line-oriented edge list. Lines whose first non-blank character is
// '%' or '#' are comments. Malformed rows raise ParseError with the 1-based
// line number; a stream with zero events raises EmptyInput.
TemporalGraph parse_edge_list(std::istream& source, const EdgeListFormat& format);

// Bins events into T snapshots and builds the adjacency tensor.
AdjacencyTensor bin_timestamps(std::shared_ptr<const TemporalGraph> g,
                               const SnapshotSpec& spec);
AdjacencyTensor bin_timestamps(const TemporalGraph& g, const SnapshotSpec& spec);

}  // namespace toffee
