#pragma once

#include <compare>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace aoi {

using Edge = std::pair<int, int>;

/// Information flow from `sender` to `receiver`; valid only across an edge.
struct DirectedLink {
    int receiver = 0;
    int sender = 0;

    auto operator<=>(const DirectedLink&) const = default;
};

class TopologyError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ParseError : public TopologyError {
public:
    ParseError(int line, const std::string& what);
    int line() const noexcept { return line_; }

private:
    int line_;
};

/// Undirected simple graph over nodes 0..n-1. Immutable once built.
///
/// Edges are stored normalized (u < v) and sorted, so two topologies with the
/// same edge set compare equal regardless of insertion order. Neighbor lists
/// are sorted ascending.
class Topology {
public:
    Topology() = default;
    /// Throws TopologyError on n < 1, self-loops, out-of-range ids or
    /// duplicate (unordered) edges.
    Topology(int n, std::vector<Edge> edges);

    int size() const noexcept { return n_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    std::span<const int> neighbors(int i) const;
    int degree(int i) const { return static_cast<int>(neighbors(i).size()); }
    bool has_edge(int u, int v) const;
    bool is_regular(int d) const;

    /// All directed links, ordered by receiver then sender. Two per edge.
    const std::vector<DirectedLink>& links() const noexcept { return links_; }
    /// Position of `link` in links(); throws TopologyError if absent.
    std::size_t link_index(DirectedLink link) const;

    bool operator==(const Topology& other) const {
        return n_ == other.n_ && edges_ == other.edges_;
    }

private:
    void check_node(int i) const;

    int n_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> adjacency_;
    std::vector<DirectedLink> links_;
    std::vector<std::size_t> link_offset_;
};

Topology make_line(int n);
Topology make_ring(int n);
/// Node 0 is the hub.
Topology make_star(int n);
Topology make_grid(int rows, int cols);
Topology make_complete(int n);

// Six-node asymmetric presets. The shapes are our own reconstructions of
// commonly drawn examples; the exact wiring is documented in the README.
Topology make_tree6();
Topology make_asym_star6();
Topology make_asym_circle6();

/// Edge-list text: first line N, then one `u v` pair per line, `#` comments.
Topology parse_edge_list(std::string_view text);
std::string to_edge_list(const Topology& t);

}  // namespace aoi
