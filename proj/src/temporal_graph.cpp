#include <dbgnn/temporal_graph.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

namespace dbgnn {

NodeIndex NodeSet::intern(std::string_view label) {
    auto it = index_.find(std::string(label));
    if (it != index_.end()) return it->second;
    const auto idx = static_cast<NodeIndex>(labels_.size());
    labels_.emplace_back(label);
    index_.emplace(labels_.back(), idx);
    return idx;
}

NodeIndex NodeSet::index(std::string_view label) const {
    auto it = index_.find(std::string(label));
    if (it == index_.end()) throw DataError("unknown node '" + std::string(label) + "'");
    return it->second;
}

bool NodeSet::contains(std::string_view label) const {
    return index_.count(std::string(label)) > 0;
}

TemporalGraph::TemporalGraph(NodeSetPtr nodes, std::vector<TemporalEdge> events, bool directed)
    : nodes_(std::move(nodes)), events_(std::move(events)), directed_(directed) {
    for (const auto& e : events_) {
        if (e.source >= nodes_->size() || e.target >= nodes_->size())
            throw std::invalid_argument("event references an unregistered node");
    }
}

std::shared_ptr<NodeSet> TemporalGraph::mutable_nodes() {
    // Copy on write: node sets are shared with derived graphs and walk bags.
    if (nodes_.use_count() != 1) nodes_ = std::make_shared<NodeSet>(*nodes_);
    return std::const_pointer_cast<NodeSet>(nodes_);
}

NodeIndex TemporalGraph::add_node(std::string_view label) {
    if (nodes_->contains(label)) return nodes_->index(label);
    return mutable_nodes()->intern(label);
}

void TemporalGraph::add_event(std::string_view source, std::string_view target, Timestamp t) {
    const NodeIndex s = add_node(source);
    const NodeIndex d = add_node(target);
    events_.push_back({s, d, t});
}

void TemporalGraph::add_event(NodeIndex source, NodeIndex target, Timestamp t) {
    if (source >= nodes_->size() || target >= nodes_->size())
        throw std::invalid_argument("event references an unregistered node");
    events_.push_back({source, target, t});
}

std::vector<TemporalEdge> TemporalGraph::directed_events() const {
    if (directed_) return events_;
    std::vector<TemporalEdge> out;
    out.reserve(events_.size() * 2);
    for (const auto& e : events_) {
        out.push_back(e);
        if (e.source != e.target) out.push_back({e.target, e.source, e.time});
    }
    return out;
}

Count StaticWeightedGraph::total_weight() const {
    Count total = 0;
    for (const auto& [key, w] : edges) total += w;
    return total;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    const auto is_sep = [](char c) { return c == ',' || c == ' ' || c == '\t' || c == '\r'; };
    const bool has_comma = line.find(',') != std::string_view::npos;
    while (i < line.size()) {
        if (has_comma) {
            // Comma-separated: each comma delimits a field, surrounding blanks trimmed.
            std::size_t j = line.find(',', i);
            if (j == std::string_view::npos) j = line.size();
            auto f = line.substr(i, j - i);
            while (!f.empty() && is_sep(f.front())) f.remove_prefix(1);
            while (!f.empty() && is_sep(f.back())) f.remove_suffix(1);
            fields.push_back(f);
            i = j + 1;
            if (j + 1 == line.size()) fields.push_back({});
        } else {
            while (i < line.size() && is_sep(line[i])) ++i;
            if (i >= line.size()) break;
            std::size_t j = i;
            while (j < line.size() && !is_sep(line[j])) ++j;
            fields.push_back(line.substr(i, j - i));
            i = j;
        }
    }
    return fields;
}

bool blank(std::string_view line) {
    return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

}  // namespace

TemporalGraph parse_edge_list(std::istream& in, bool directed) {
    TemporalGraph g(directed);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        const auto first = line.find_first_not_of(" \t");
        if (line[first] == '#') continue;

        const auto fields = split_fields(line);
        if (fields.size() != 3) throw ParseError(lineno, "expected 3 fields (source, target, timestamp)");
        if (fields[0].empty() || fields[1].empty()) throw ParseError(lineno, "empty node id");

        Timestamp t = 0;
        const auto ts = fields[2];
        const auto [ptr, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), t);
        if (ec != std::errc() || ptr != ts.data() + ts.size())
            throw ParseError(lineno, "timestamp '" + std::string(ts) + "' is not an integer");
        g.add_event(fields[0], fields[1], t);
    }
    if (g.events().empty()) throw DataError("edge list contains no events");
    return g;
}

TemporalGraph parse_edge_list_string(std::string_view text, bool directed) {
    std::istringstream in{std::string(text)};
    return parse_edge_list(in, directed);
}

TemporalGraph read_edge_list(const std::string& path, bool directed) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open edge list '" + path + "'");
    return parse_edge_list(in, directed);
}

void write_edge_list(std::ostream& out, const TemporalGraph& g) {
    const auto& nodes = g.nodes();
    for (const auto& e : g.events())
        out << nodes.label(e.source) << ',' << nodes.label(e.target) << ',' << e.time << '\n';
}

StaticWeightedGraph aggregate(const TemporalGraph& g) {
    StaticWeightedGraph s;
    s.nodes = g.node_set();
    for (const auto& e : g.directed_events()) ++s.edges[{e.source, e.target}];
    return s;
}

TemporalGraph coarsen(const TemporalGraph& g, Timestamp bin_width) {
    if (bin_width < 1) throw std::invalid_argument("bin width must be >= 1");
    std::vector<TemporalEdge> events = g.events();
    for (auto& e : events) {
        Timestamp q = e.time / bin_width;
        if (e.time % bin_width != 0 && e.time < 0) --q;
        e.time = q;
    }
    return TemporalGraph(g.node_set(), std::move(events), g.directed());
}

TemporalGraph dedup_events(const TemporalGraph& g) {
    std::set<std::tuple<NodeIndex, NodeIndex, Timestamp>> seen;
    std::vector<TemporalEdge> events;
    for (const auto& e : g.events()) {
        NodeIndex a = e.source, b = e.target;
        if (!g.directed() && b < a) std::swap(a, b);
        if (seen.emplace(a, b, e.time).second) events.push_back(e);
    }
    return TemporalGraph(g.node_set(), std::move(events), g.directed());
}

}  // namespace dbgnn
