#include <doctest.h>

#include <sstream>

#include "toffee/graph.hpp"
#include "toffee/rng.hpp"

using namespace toffee;

namespace {

TemporalGraph parse(const std::string& text, EdgeListFormat fmt) {
    std::istringstream in(text);
    return parse_edge_list(in, fmt);
}

EdgeListFormat four_col() {
    EdgeListFormat fmt;
    fmt.src_col = 0;
    fmt.dst_col = 1;
    fmt.weight_col = 2;
    fmt.time_col = 3;
    return fmt;
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("events are interned first-seen and sorted by timestamp") {
    const TemporalGraph g = parse("a b 3 10\nb c 1 5\n", four_col());
    CHECK(g.num_nodes() == 3);
    CHECK(g.num_events() == 2);
    CHECK(g.label(0) == "a");
    CHECK(g.label(1) == "b");
    CHECK(g.label(2) == "c");
    CHECK(g.events()[0].timestamp == 5.0);
    CHECK(g.events()[0].src == 1);  // b
    CHECK(g.events()[1].timestamp == 10.0);
    CHECK(g.events()[1].weight == 3.0);
}

TEST_CASE("comments and blank lines are skipped, missing weight defaults to 1") {
    EdgeListFormat fmt;  // src dst time
    const TemporalGraph g = parse("% header\n# also a comment\n\na b 1\nb c 2\n", fmt);
    CHECK(g.num_events() == 2);
    CHECK(g.events()[0].weight == 1.0);
}

TEST_CASE("malformed rows report their line number") {
    CHECK_THROWS_WITH_AS(parse("a b x 10\n", four_col()),
                         doctest::Contains("line 1"), ParseError);
    CHECK_THROWS_WITH_AS(parse("a b 1 2\nc d 5\n", four_col()),
                         doctest::Contains("line 2"), ParseError);
    CHECK_THROWS_AS(parse("a b -1 2\n", four_col()), ParseError);
}

TEST_CASE("zero events raise EmptyInput") {
    CHECK_THROWS_AS(parse("% nothing here\n", EdgeListFormat{}), EmptyInput);
}

TEST_CASE("comma-delimited input with reordered columns") {
    EdgeListFormat fmt;
    fmt.src_col = 1;
    fmt.dst_col = 2;
    fmt.time_col = 0;
    fmt.delimiter = ',';
    const TemporalGraph g = parse("7,x,y\n3,y,z\n", fmt);
    CHECK(g.num_events() == 2);
    CHECK(g.events()[0].timestamp == 3.0);
    CHECK(g.label(g.events()[0].src) == "y");
}

TEST_CASE("uniform binning: ts 30 of [0,100) with T = 4 lands in bin 1") {
    std::string text;
    for (int t = 0; t < 100; ++t)
        text += "a b " + std::to_string(t) + "\n";
    auto g = std::make_shared<const TemporalGraph>(parse(text, EdgeListFormat{}));

    SnapshotSpec spec;
    spec.num_bins = 4;
    spec.strategy = BinStrategy::kUniformWidth;
    spec.weighting = Weighting::kCount;
    spec.symmetrize = false;
    const AdjacencyTensor at = bin_timestamps(g, spec);
    CHECK(at.tensor.n3() == 4);
    // 25 events per uniform bin; the ts = 30 event belongs to bin 1.
    CHECK(at.tensor(0, 1, 1) == 25.0);
    // ts_max falls inside the last bin, not outside the tensor.
    double total = 0.0;
    for (std::size_t k = 0; k < 4; ++k) total += at.tensor(0, 1, k);
    CHECK(total == 100.0);
}

TEST_CASE("weighting rules aggregate duplicates per bin") {
    auto g = std::make_shared<const TemporalGraph>(
        parse("a b 2 1\na b 3 1\n", four_col()));
    SnapshotSpec spec;
    spec.num_bins = 1;
    spec.symmetrize = false;

    spec.weighting = Weighting::kCount;
    CHECK(bin_timestamps(g, spec).tensor(0, 1, 0) == 2.0);

    spec.weighting = Weighting::kBinary;
    CHECK(bin_timestamps(g, spec).tensor(0, 1, 0) == 1.0);

    spec.weighting = Weighting::kWeightSum;
    CHECK(bin_timestamps(g, spec).tensor(0, 1, 0) == 5.0);
}

TEST_CASE("symmetrize mirrors entries and keeps self-loops single") {
    auto g = std::make_shared<const TemporalGraph>(parse("a b 1\nc c 1\n", EdgeListFormat{}));
    SnapshotSpec spec;
    spec.num_bins = 1;
    spec.weighting = Weighting::kCount;
    spec.symmetrize = true;
    const AdjacencyTensor at = bin_timestamps(g, spec);
    CHECK(at.tensor(0, 1, 0) == 1.0);
    CHECK(at.tensor(1, 0, 0) == 1.0);
    CHECK(at.tensor(2, 2, 0) == 1.0);
    const Eigen::MatrixXd s = at.tensor.slice(0);
    CHECK((s - s.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("count weighting without symmetrize preserves the event count") {
    SeededRng rng(71);
    std::string text;
    const int n_events = 500;
    for (int e = 0; e < n_events; ++e) {
        const auto i = rng.next_below(20);
        const auto j = rng.next_below(20);
        text += "n" + std::to_string(i) + " n" + std::to_string(j) + " " +
                std::to_string(rng.next_below(1000)) + "\n";
    }
    auto g = std::make_shared<const TemporalGraph>(parse(text, EdgeListFormat{}));
    SnapshotSpec spec;
    spec.num_bins = 7;
    spec.strategy = BinStrategy::kUniformWidth;
    spec.weighting = Weighting::kCount;
    spec.symmetrize = false;
    const AdjacencyTensor at = bin_timestamps(g, spec);
    double total = 0.0;
    for (std::size_t p = 0; p < at.tensor.size(); ++p) total += at.tensor.data()[p];
    CHECK(total == static_cast<double>(n_events));
}

TEST_CASE("binary entries are exactly zero or one") {
    SeededRng rng(73);
    std::string text;
    for (int e = 0; e < 200; ++e)
        text += "n" + std::to_string(rng.next_below(10)) + " n" +
                std::to_string(rng.next_below(10)) + " " + std::to_string(e % 13) + "\n";
    auto g = std::make_shared<const TemporalGraph>(parse(text, EdgeListFormat{}));
    SnapshotSpec spec;
    spec.num_bins = 5;
    spec.weighting = Weighting::kBinary;
    const AdjacencyTensor at = bin_timestamps(g, spec);
    for (std::size_t p = 0; p < at.tensor.size(); ++p) {
        const double v = at.tensor.data()[p];
        CHECK((v == 0.0 || v == 1.0));
    }
}

TEST_CASE("degenerate timespan with T > 1 is an error") {
    auto g = std::make_shared<const TemporalGraph>(parse("a b 5\nb c 5\n", EdgeListFormat{}));
    SnapshotSpec spec;
    spec.num_bins = 4;
    spec.strategy = BinStrategy::kUniformWidth;
    CHECK_THROWS_AS((void)bin_timestamps(g, spec), DegenerateTimespan);
    spec.num_bins = 1;
    CHECK(bin_timestamps(g, spec).tensor.n3() == 1);
}

TEST_CASE("native-distinct uses one slice per timestamp up to the cap") {
    auto g = std::make_shared<const TemporalGraph>(
        parse("a b 10\nb c 20\nc a 40\n", EdgeListFormat{}));
    SnapshotSpec spec;
    spec.strategy = BinStrategy::kNativeDistinct;
    spec.num_bins = 8;
    const AdjacencyTensor at = bin_timestamps(g, spec);
    CHECK(at.tensor.n3() == 3);
    CHECK(at.tensor(2, 0, 2) == 1.0);  // the ts = 40 event sits in the third slice

    // Above the cap it falls back to uniform-width bins.
    spec.num_bins = 2;
    CHECK(bin_timestamps(g, spec).tensor.n3() == 2);
}

TEST_CASE("reparsing a graph rebuilds an identical tensor") {
    SeededRng rng(79);
    std::string text;
    for (int e = 0; e < 300; ++e)
        text += "n" + std::to_string(rng.next_below(15)) + " n" +
                std::to_string(rng.next_below(15)) + " " +
                std::to_string(rng.next_below(500)) + "\n";

    SnapshotSpec spec;
    spec.num_bins = 6;
    auto g1 = std::make_shared<const TemporalGraph>(parse(text, EdgeListFormat{}));
    auto g2 = std::make_shared<const TemporalGraph>(parse(text, EdgeListFormat{}));
    const AdjacencyTensor a1 = bin_timestamps(g1, spec);
    const AdjacencyTensor a2 = bin_timestamps(g2, spec);
    CHECK(a1.tensor.storage() == a2.tensor.storage());
}

}  // TEST_SUITE
