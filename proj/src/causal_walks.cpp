#include <dbgnn/causal_walks.hpp>

#include <algorithm>
#include <deque>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace dbgnn {

Count WalkBag::count(const Walk& w) const {
    if (w.empty() || w.size() - 1 >= by_length.size()) return 0;
    const auto& level = by_length[w.size() - 1];
    auto it = level.find(w);
    return it == level.end() ? 0 : it->second;
}

Count WalkBag::total(std::size_t l) const {
    Count sum = 0;
    for (const auto& [w, c] : by_length.at(l)) sum += c;
    return sum;
}

namespace {

struct WalkHash {
    std::size_t operator()(const Walk& w) const noexcept {
        std::size_t h = 0xcbf29ce484222325ULL;
        for (NodeIndex v : w) {
            h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return h;
    }
};

using WalkTable = std::unordered_map<Walk, Count, WalkHash>;

void check_arguments(Timestamp delta, std::size_t max_length) {
    if (max_length < 1) throw std::invalid_argument("maximum walk length must be >= 1");
    if (delta < 1) throw std::invalid_argument("delta must be >= 1");
}

WalkBag empty_bag(const TemporalGraph& g, Timestamp delta, std::size_t max_length) {
    WalkBag bag;
    bag.delta = delta;
    bag.max_length = max_length;
    bag.nodes = g.node_set();
    bag.by_length.resize(max_length + 1);
    for (NodeIndex v = 0; v < g.node_count(); ++v) bag.by_length[0].emplace(Walk{v}, 1);
    return bag;
}

// Walks (lengths 1..K-1) that arrived at one node at one timestamp.
struct Arrival {
    Timestamp time;
    std::vector<WalkTable> by_length;
};

}  // namespace

WalkBag count_causal_walks(const TemporalGraph& g, Timestamp delta, std::size_t max_length) {
    check_arguments(delta, max_length);
    WalkBag bag = empty_bag(g, delta, max_length);

    auto events = g.directed_events();
    std::stable_sort(events.begin(), events.end(),
                     [](const TemporalEdge& a, const TemporalEdge& b) { return a.time < b.time; });

    const std::size_t extendable = max_length - 1;
    std::vector<WalkTable> totals(max_length + 1);
    std::vector<std::deque<Arrival>> recent(g.node_count());

    std::size_t i = 0;
    while (i < events.size()) {
        const Timestamp t = events[i].time;
        std::size_t j = i;
        while (j < events.size() && events[j].time == t) ++j;

        // Events sharing a timestamp never chain (strict ordering), so all of
        // them read the windows first and publish their arrivals afterwards.
        std::unordered_map<NodeIndex, Arrival> pending;
        for (std::size_t e = i; e < j; ++e) {
            const auto [src, tgt, time] = events[e];
            Walk edge{src, tgt};
            ++totals[1][edge];
            if (extendable == 0) continue;

            auto [slot, inserted] = pending.try_emplace(tgt);
            Arrival& out = slot->second;
            if (inserted) {
                out.time = t;
                out.by_length.resize(extendable);
            }
            ++out.by_length[0][edge];

            auto& window = recent[src];
            while (!window.empty() && window.front().time < t - delta) window.pop_front();
            for (const Arrival& in : window) {
                for (std::size_t l = 1; l <= extendable; ++l) {
                    for (const auto& [walk, c] : in.by_length[l - 1]) {
                        Walk ext = walk;
                        ext.push_back(tgt);
                        if (l + 1 <= extendable) out.by_length[l][ext] += c;
                        totals[l + 1][std::move(ext)] += c;
                    }
                }
            }
        }

        if (!pending.empty()) {
            std::vector<NodeIndex> order;
            order.reserve(pending.size());
            for (const auto& [v, a] : pending) order.push_back(v);
            std::sort(order.begin(), order.end());
            for (NodeIndex v : order) recent[v].push_back(std::move(pending[v]));
        }
        i = j;
    }

    for (std::size_t l = 1; l <= max_length; ++l)
        bag.by_length[l].insert(totals[l].begin(), totals[l].end());
    return bag;
}

namespace {

void extend_walks(const std::vector<TemporalEdge>& events, std::size_t current, Timestamp delta,
                  std::size_t max_length, Walk& walk, WalkBag& bag) {
    const auto& last = events[current];
    ++bag.by_length[walk.size() - 1][walk];
    if (walk.size() - 1 == max_length) return;
    for (std::size_t next = 0; next < events.size(); ++next) {
        const auto& e = events[next];
        const Timestamp gap = e.time - last.time;
        if (e.source != last.target || gap <= 0 || gap > delta) continue;
        walk.push_back(e.target);
        extend_walks(events, next, delta, max_length, walk, bag);
        walk.pop_back();
    }
}

}  // namespace

WalkBag enumerate_causal_walks(const TemporalGraph& g, Timestamp delta, std::size_t max_length) {
    check_arguments(delta, max_length);
    if (g.events().size() > kEnumerationEventLimit)
        throw std::invalid_argument("enumeration oracle limited to 10^4 events");
    WalkBag bag = empty_bag(g, delta, max_length);
    const auto events = g.directed_events();
    for (std::size_t start = 0; start < events.size(); ++start) {
        Walk walk{events[start].source, events[start].target};
        extend_walks(events, start, delta, max_length, walk, bag);
    }
    return bag;
}

void write_walk_bag(std::ostream& out, const WalkBag& bag) {
    out << "# walkbag delta=" << bag.delta << " max_length=" << bag.max_length << '\n';
    for (const auto& level : bag.by_length) {
        for (const auto& [walk, c] : level) {
            for (std::size_t i = 0; i < walk.size(); ++i) {
                if (i) out << ',';
                out << bag.nodes->label(walk[i]);
            }
            out << '\t' << c << '\n';
        }
    }
}

WalkBag read_walk_bag(std::istream& in) {
    WalkBag bag;
    auto nodes = std::make_shared<NodeSet>();
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.rfind("# walkbag", 0) == 0) {
            std::istringstream hs(line.substr(9));
            std::string kv;
            while (hs >> kv) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw ParseError(lineno, "malformed header field");
                const auto key = kv.substr(0, eq);
                const auto value = std::stoll(kv.substr(eq + 1));
                if (key == "delta") bag.delta = value;
                else if (key == "max_length") bag.max_length = static_cast<std::size_t>(value);
            }
            if (bag.max_length < 1 || bag.delta < 1) throw ParseError(lineno, "invalid walk bag header");
            bag.by_length.assign(bag.max_length + 1, {});
            header = true;
            continue;
        }
        if (line[0] == '#') continue;
        if (!header) throw ParseError(lineno, "walk bag header missing");

        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError(lineno, "expected <walk><TAB><count>");
        Walk walk;
        std::istringstream ws(line.substr(0, tab));
        std::string label;
        while (std::getline(ws, label, ',')) {
            if (label.empty()) throw ParseError(lineno, "empty node label");
            walk.push_back(nodes->intern(label));
        }
        Count c = 0;
        try {
            std::size_t used = 0;
            const std::string cs = line.substr(tab + 1);
            c = std::stoull(cs, &used);
            if (used != cs.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ParseError(lineno, "count is not a non-negative integer");
        }
        if (walk.empty() || walk.size() - 1 > bag.max_length) throw ParseError(lineno, "walk longer than max_length");
        if (c == 0) throw ParseError(lineno, "walk counts must be positive");
        bag.by_length[walk.size() - 1][walk] += c;
    }
    if (!header) throw DataError("walk bag is empty");
    bag.nodes = std::move(nodes);
    return bag;
}

WalkBag read_walk_bag(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open walk bag '" + path + "'");
    return read_walk_bag(in);
}

}  // namespace dbgnn
