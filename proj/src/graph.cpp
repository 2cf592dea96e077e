#include "aoi/graph.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace aoi {

ParseError::ParseError(int line, const std::string& what)
    : TopologyError("line " + std::to_string(line) + ": " + what), line_(line) {}

Topology::Topology(int n, std::vector<Edge> edges) : n_(n) {
    if (n < 1) throw TopologyError("topology needs at least one node, got " + std::to_string(n));
    for (auto& [u, v] : edges) {
        if (u < 0 || u >= n || v < 0 || v >= n)
            throw TopologyError("edge {" + std::to_string(u) + "," + std::to_string(v) +
                                "} has a node outside [0, " + std::to_string(n) + ")");
        if (u == v) throw TopologyError("self-loop at node " + std::to_string(u));
        if (u > v) std::swap(u, v);
    }
    std::sort(edges.begin(), edges.end());
    if (auto dup = std::adjacent_find(edges.begin(), edges.end()); dup != edges.end())
        throw TopologyError("duplicate edge {" + std::to_string(dup->first) + "," +
                            std::to_string(dup->second) + "}");
    edges_ = std::move(edges);

    adjacency_.resize(static_cast<std::size_t>(n));
    for (const auto& [u, v] : edges_) {
        adjacency_[u].push_back(v);
        adjacency_[v].push_back(u);
    }
    link_offset_.reserve(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i < n; ++i) {
        auto& nb = adjacency_[i];
        std::sort(nb.begin(), nb.end());
        link_offset_.push_back(links_.size());
        for (int j : nb) links_.push_back({i, j});
    }
    link_offset_.push_back(links_.size());
}

void Topology::check_node(int i) const {
    if (i < 0 || i >= n_)
        throw TopologyError("node " + std::to_string(i) + " outside [0, " + std::to_string(n_) + ")");
}

std::span<const int> Topology::neighbors(int i) const {
    check_node(i);
    return adjacency_[i];
}

bool Topology::has_edge(int u, int v) const {
    if (u < 0 || u >= n_ || v < 0 || v >= n_) return false;
    const auto& nb = adjacency_[u];
    return std::binary_search(nb.begin(), nb.end(), v);
}

bool Topology::is_regular(int d) const {
    return std::all_of(adjacency_.begin(), adjacency_.end(),
                       [d](const auto& nb) { return static_cast<int>(nb.size()) == d; });
}

std::size_t Topology::link_index(DirectedLink link) const {
    if (!has_edge(link.receiver, link.sender))
        throw TopologyError("no link from " + std::to_string(link.sender) + " to " +
                            std::to_string(link.receiver));
    const auto& nb = adjacency_[link.receiver];
    auto pos = std::lower_bound(nb.begin(), nb.end(), link.sender) - nb.begin();
    return link_offset_[link.receiver] + static_cast<std::size_t>(pos);
}

Topology make_line(int n) {
    if (n < 1) throw TopologyError("line needs n >= 1");
    std::vector<Edge> e;
    for (int k = 0; k + 1 < n; ++k) e.emplace_back(k, k + 1);
    return {n, std::move(e)};
}

Topology make_ring(int n) {
    if (n < 3) throw TopologyError("ring needs n >= 3");
    std::vector<Edge> e;
    for (int k = 0; k < n; ++k) e.emplace_back(k, (k + 1) % n);
    return {n, std::move(e)};
}

Topology make_star(int n) {
    if (n < 2) throw TopologyError("star needs n >= 2");
    std::vector<Edge> e;
    for (int k = 1; k < n; ++k) e.emplace_back(0, k);
    return {n, std::move(e)};
}

Topology make_grid(int rows, int cols) {
    if (rows < 1 || cols < 1) throw TopologyError("grid dimensions must be >= 1");
    std::vector<Edge> e;
    auto id = [cols](int r, int c) { return r * cols + c; };
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            if (c + 1 < cols) e.emplace_back(id(r, c), id(r, c + 1));
            if (r + 1 < rows) e.emplace_back(id(r, c), id(r + 1, c));
        }
    }
    return {rows * cols, std::move(e)};
}

Topology make_complete(int n) {
    if (n < 2) throw TopologyError("complete graph needs n >= 2");
    std::vector<Edge> e;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) e.emplace_back(u, v);
    return {n, std::move(e)};
}

Topology make_tree6() {
    // root 0; children 1, 2; 1 -> 3; 2 -> 4, 5
    return {6, {{0, 1}, {0, 2}, {1, 3}, {2, 4}, {2, 5}}};
}

Topology make_asym_star6() {
    // star on 0..4 (hub 0) with node 5 hanging off leaf 4
    return {6, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {4, 5}}};
}

Topology make_asym_circle6() {
    // ring on 0..4 with pendant node 5 attached to 0
    return {6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}, {0, 5}}};
}

namespace {

std::string_view trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\f\v";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

// Parses whitespace-separated non-negative decimal integers.
std::vector<long long> parse_ints(std::string_view line, int lineno) {
    std::vector<long long> out;
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
        if (pos >= line.size()) break;
        long long v = 0;
        auto [ptr, ec] = std::from_chars(line.data() + pos, line.data() + line.size(), v);
        auto consumed = static_cast<std::size_t>(ptr - (line.data() + pos));
        bool at_boundary = pos + consumed == line.size() || line[pos + consumed] == ' ' ||
                           line[pos + consumed] == '\t';
        if (ec != std::errc() || consumed == 0 || !at_boundary)
            throw ParseError(lineno, "malformed integer in '" + std::string(line) + "'");
        out.push_back(v);
        pos += consumed;
    }
    return out;
}

}  // namespace

Topology parse_edge_list(std::string_view text) {
    int lineno = 0;
    long long n = -1;
    std::vector<Edge> edges;
    std::vector<int> edge_line;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = trim(text.substr(start, end - start));
        ++lineno;
        start = end + 1;
        if (line.empty() || line.front() == '#') continue;

        auto ints = parse_ints(line, lineno);
        if (n < 0) {
            if (ints.size() != 1) throw ParseError(lineno, "expected node count");
            if (ints[0] < 1 || ints[0] > 1'000'000) throw ParseError(lineno, "node count out of range");
            n = ints[0];
            continue;
        }
        if (ints.size() != 2) throw ParseError(lineno, "expected 'u v'");
        auto [u, v] = std::pair{ints[0], ints[1]};
        if (u < 0 || u >= n || v < 0 || v >= n) throw ParseError(lineno, "node index out of range");
        if (u == v) throw ParseError(lineno, "self-loop at node " + std::to_string(u));
        Edge e{static_cast<int>(std::min(u, v)), static_cast<int>(std::max(u, v))};
        auto it = std::find(edges.begin(), edges.end(), e);
        if (it != edges.end())
            throw ParseError(lineno, "duplicate edge (first seen on line " +
                                         std::to_string(edge_line[it - edges.begin()]) + ")");
        edges.push_back(e);
        edge_line.push_back(lineno);
    }
    if (n < 0) throw ParseError(lineno, "missing node count");
    return {static_cast<int>(n), std::move(edges)};
}

std::string to_edge_list(const Topology& t) {
    std::ostringstream os;
    os << t.size() << '\n';
    for (const auto& [u, v] : t.edges()) os << u << ' ' << v << '\n';
    return os.str();
}

}  // namespace aoi
