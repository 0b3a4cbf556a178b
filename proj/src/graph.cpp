#include "toffee/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

namespace toffee {

namespace {

std::vector<std::string_view> split_tokens(std::string_view line, char delimiter) {
    std::vector<std::string_view> out;
    if (delimiter == '\0') {
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r'))
                ++i;
            std::size_t j = i;
            while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r')
                ++j;
            if (j > i) out.push_back(line.substr(i, j - i));
            i = j;
        }
    } else {
        std::size_t start = 0;
        while (start <= line.size()) {
            std::size_t end = line.find(delimiter, start);
            if (end == std::string_view::npos) end = line.size();
            std::string_view tok = line.substr(start, end - start);
            while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t'))
                tok.remove_prefix(1);
            while (!tok.empty() &&
                   (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r'))
                tok.remove_suffix(1);
            if (!tok.empty()) out.push_back(tok);
            if (end == line.size()) break;
            start = end + 1;
        }
    }
    return out;
}

double parse_double(std::string_view tok, std::size_t line_no, const char* what) {
    double value = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw ParseError(line_no, std::string(what) + " column is not numeric: '" +
                                      std::string(tok) + "'");
    if (!std::isfinite(value))
        throw ParseError(line_no, std::string(what) + " column is not finite");
    return value;
}

}  // namespace

TemporalGraph TemporalGraph::from_events(std::vector<std::string> labels,
                                         std::vector<Event> events, bool directed) {
    TemporalGraph g;
    g.labels_ = std::move(labels);
    g.events_ = std::move(events);
    g.directed_ = directed;
    for (NodeId i = 0; i < g.labels_.size(); ++i) g.index_.emplace(g.labels_[i], i);
    for (const Event& e : g.events_) {
        if (e.src >= g.labels_.size() || e.dst >= g.labels_.size())
            throw Error("event references a node index outside the registry");
    }
    std::stable_sort(g.events_.begin(), g.events_.end(),
                     [](const Event& a, const Event& b) { return a.timestamp < b.timestamp; });
    return g;
}

TemporalGraph parse_edge_list(std::istream& source, const EdgeListFormat& format) {
    const int max_col = std::max({format.src_col, format.dst_col, format.time_col,
                                  format.weight_col});
    if (format.src_col < 0 || format.dst_col < 0 || format.time_col < 0)
        throw Error("src, dst and time column indices must be nonnegative");

    std::vector<std::string> labels;
    std::unordered_map<std::string, NodeId> index;
    std::vector<Event> events;

    auto intern = [&](std::string_view label) -> NodeId {
        auto it = index.find(std::string(label));
        if (it != index.end()) return it->second;
        const NodeId id = static_cast<NodeId>(labels.size());
        labels.emplace_back(label);
        index.emplace(labels.back(), id);
        return id;
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(source, line)) {
        ++line_no;
        std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        if (line[first] == '%' || line[first] == '#') continue;

        const auto tokens = split_tokens(line, format.delimiter);
        if (static_cast<int>(tokens.size()) <= max_col)
            throw ParseError(line_no, "expected at least " + std::to_string(max_col + 1) +
                                          " columns, got " + std::to_string(tokens.size()));

        Event e;
        e.src = intern(tokens[static_cast<std::size_t>(format.src_col)]);
        e.dst = intern(tokens[static_cast<std::size_t>(format.dst_col)]);
        e.timestamp =
            parse_double(tokens[static_cast<std::size_t>(format.time_col)], line_no, "time");
        if (format.weight_col >= 0) {
            e.weight = parse_double(tokens[static_cast<std::size_t>(format.weight_col)],
                                    line_no, "weight");
            if (e.weight < 0.0) throw ParseError(line_no, "weight must be nonnegative");
        }
        events.push_back(e);
    }

    if (events.empty()) throw EmptyInput("edge list contains no events");
    return TemporalGraph::from_events(std::move(labels), std::move(events),
                                      format.directed);
}

AdjacencyTensor bin_timestamps(std::shared_ptr<const TemporalGraph> g,
                               const SnapshotSpec& spec) {
    if (!g || g->num_events() == 0) throw EmptyInput("graph has no events");
    if (spec.num_bins == 0) throw Error("num_bins must be positive");

    const auto& events = g->events();
    const double ts_min = events.front().timestamp;
    const double ts_max = events.back().timestamp;
    const double span = ts_max - ts_min;

    // Distinct timestamps, in order (events are sorted).
    std::vector<double> distinct;
    for (const Event& e : events)
        if (distinct.empty() || e.timestamp != distinct.back()) distinct.push_back(e.timestamp);

    std::size_t T = 0;
    bool native = false;
    if (spec.strategy == BinStrategy::kNativeDistinct && distinct.size() <= spec.num_bins) {
        T = distinct.size();
        native = true;
    } else {
        T = spec.num_bins;
        if (span == 0.0 && T > 1)
            throw DegenerateTimespan("all events share one timestamp; cannot spread them over " +
                                     std::to_string(T) + " bins");
    }

    // Nudge the denominator so ts_max lands inside the last bin.
    const double eps = span * std::numeric_limits<double>::epsilon() * 4.0;
    const double denom = span + eps;

    auto bin_of = [&](double ts) -> std::size_t {
        if (native) {
            const auto it = std::lower_bound(distinct.begin(), distinct.end(), ts);
            return static_cast<std::size_t>(it - distinct.begin());
        }
        if (denom == 0.0) return 0;
        const double raw = std::floor(static_cast<double>(T) * (ts - ts_min) / denom);
        if (raw < 0.0) return 0;
        const auto idx = static_cast<std::size_t>(raw);
        return idx >= T ? T - 1 : idx;
    };

    const std::size_t n = g->num_nodes();
    RealTensor3 tensor(n, n, T);
    for (const Event& e : events) {
        const std::size_t t = bin_of(e.timestamp);
        auto bump = [&](std::size_t i, std::size_t j) {
            double& cell = tensor(i, j, t);
            switch (spec.weighting) {
                case Weighting::kBinary: cell = 1.0; break;
                case Weighting::kCount: cell += 1.0; break;
                case Weighting::kWeightSum: cell += e.weight; break;
            }
        };
        bump(e.src, e.dst);
        if (spec.symmetrize && e.src != e.dst) bump(e.dst, e.src);
    }
    tensor.require_finite("bin_timestamps");

    return AdjacencyTensor{std::move(tensor), spec, std::move(g)};
}

AdjacencyTensor bin_timestamps(const TemporalGraph& g, const SnapshotSpec& spec) {
    return bin_timestamps(std::make_shared<const TemporalGraph>(g), spec);
}

}  // namespace toffee
