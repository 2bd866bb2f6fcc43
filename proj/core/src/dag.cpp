#include "popsyn/dag.hpp"

#include "popsyn/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <functional>
#include <queue>
#include <sstream>

namespace popsyn {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

void insert_sorted(std::vector<std::size_t> &v, std::size_t x) {
    v.insert(std::lower_bound(v.begin(), v.end(), x), x);
}

void erase_sorted(std::vector<std::size_t> &v, std::size_t x) {
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it != v.end() && *it == x) {
        v.erase(it);
    }
}

std::string format_cycle(const std::vector<Edge> &cycle) {
    std::string out;
    for (const auto &e : cycle) {
        out += e.from + " -> ";
    }
    if (!cycle.empty()) {
        out += cycle.front().from;
    }
    return out;
}

} // namespace

Edge parse_edge(std::string_view text) {
    static constexpr std::string_view arrows[] = {"->", "\xE2\x86\x92"};
    for (auto arrow : arrows) {
        auto pos = text.find(arrow);
        if (pos == std::string_view::npos) {
            continue;
        }
        auto from = trim(text.substr(0, pos));
        auto to = trim(text.substr(pos + arrow.size()));
        if (from.empty() || to.empty()) {
            break;
        }
        return Edge{std::string(from), std::string(to)};
    }
    throw ConfigError(fmt::format("cannot parse edge '{}' (expected 'A -> B')", text));
}

std::string to_string(const Edge &edge) { return edge.from + " -> " + edge.to; }

Dag::Dag(std::vector<std::string> nodes)
    : nodes_{std::move(nodes)}, parents_(nodes_.size()), children_(nodes_.size()) {
    std::set<std::string_view> seen;
    for (const auto &n : nodes_) {
        if (!seen.insert(n).second) {
            throw StructureError(fmt::format("duplicate DAG node '{}'", n));
        }
    }
}

Dag::Dag(std::vector<std::string> nodes, const EdgeSet &edges) : Dag(std::move(nodes)) {
    for (const auto &e : edges) {
        add_edge(e);
    }
}

std::optional<std::size_t> Dag::find(std::string_view label) const {
    auto it = std::find(nodes_.begin(), nodes_.end(), label);
    if (it == nodes_.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - nodes_.begin());
}

std::size_t Dag::index_of(std::string_view label) const {
    if (auto i = find(label)) {
        return *i;
    }
    throw StructureError(fmt::format("'{}' is not a DAG node", label));
}

bool Dag::has_edge(std::size_t from, std::size_t to) const {
    const auto &p = parents_[to];
    return std::binary_search(p.begin(), p.end(), from);
}

bool Dag::has_edge(const Edge &edge) const {
    auto f = find(edge.from);
    auto t = find(edge.to);
    return f && t && has_edge(*f, *t);
}

bool Dag::reaches(std::size_t from, std::size_t to) const {
    if (from == to) {
        return true;
    }
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<std::size_t> stack{from};
    seen[from] = 1;
    while (!stack.empty()) {
        auto n = stack.back();
        stack.pop_back();
        for (auto c : children_[n]) {
            if (c == to) {
                return true;
            }
            if (!seen[c]) {
                seen[c] = 1;
                stack.push_back(c);
            }
        }
    }
    return false;
}

bool Dag::creates_cycle(std::size_t from, std::size_t to) const { return reaches(to, from); }

bool Dag::reversal_creates_cycle(std::size_t from, std::size_t to) const {
    // After reversal the new edge is to->from; a cycle exists iff from still
    // reaches to through some other path.
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<std::size_t> stack{from};
    seen[from] = 1;
    while (!stack.empty()) {
        auto n = stack.back();
        stack.pop_back();
        for (auto c : children_[n]) {
            if (n == from && c == to) {
                continue;
            }
            if (c == to) {
                return true;
            }
            if (!seen[c]) {
                seen[c] = 1;
                stack.push_back(c);
            }
        }
    }
    return false;
}

void Dag::add_edge(std::size_t from, std::size_t to) {
    if (from == to) {
        throw CycleError(fmt::format("self-loop on '{}'", nodes_[from]));
    }
    if (has_edge(from, to)) {
        return;
    }
    if (creates_cycle(from, to)) {
        throw CycleError(
            fmt::format("edge {} -> {} would create a cycle", nodes_[from], nodes_[to]));
    }
    insert_sorted(parents_[to], from);
    insert_sorted(children_[from], to);
    ++edge_count_;
}

void Dag::add_edge(const Edge &edge) { add_edge(index_of(edge.from), index_of(edge.to)); }

void Dag::remove_edge(std::size_t from, std::size_t to) {
    if (!has_edge(from, to)) {
        return;
    }
    erase_sorted(parents_[to], from);
    erase_sorted(children_[from], to);
    --edge_count_;
}

void Dag::reverse_edge(std::size_t from, std::size_t to) {
    if (!has_edge(from, to)) {
        throw StructureError(
            fmt::format("cannot reverse missing edge {} -> {}", nodes_[from], nodes_[to]));
    }
    if (reversal_creates_cycle(from, to)) {
        throw CycleError(
            fmt::format("reversing {} -> {} would create a cycle", nodes_[from], nodes_[to]));
    }
    remove_edge(from, to);
    insert_sorted(parents_[from], to);
    insert_sorted(children_[to], from);
    ++edge_count_;
}

std::vector<std::pair<std::size_t, std::size_t>> Dag::edge_indices() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(edge_count_);
    for (std::size_t f = 0; f < nodes_.size(); ++f) {
        for (auto t : children_[f]) {
            out.emplace_back(f, t);
        }
    }
    return out;
}

EdgeSet Dag::edges() const {
    EdgeSet out;
    for (auto [f, t] : edge_indices()) {
        out.insert(Edge{nodes_[f], nodes_[t]});
    }
    return out;
}

std::vector<std::size_t> topological_order(const Dag &dag) {
    const auto n = dag.size();
    std::vector<std::size_t> indegree(n);
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t v = 0; v < n; ++v) {
        indegree[v] = dag.parents(v).size();
        if (indegree[v] == 0) {
            ready.push(v);
        }
    }
    std::vector<std::size_t> order;
    order.reserve(n);
    while (!ready.empty()) {
        auto v = ready.top();
        ready.pop();
        order.push_back(v);
        for (auto c : dag.children(v)) {
            if (--indegree[c] == 0) {
                ready.push(c);
            }
        }
    }
    if (order.size() != n) {
        throw CycleError("DAG invariant violated: cycle detected");
    }
    return order;
}

std::vector<std::string> topological_labels(const Dag &dag) {
    std::vector<std::string> out;
    for (auto v : topological_order(dag)) {
        out.push_back(dag.nodes()[v]);
    }
    return out;
}

namespace {

struct IndexedGraph {
    std::vector<std::vector<std::size_t>> children;
};

IndexedGraph index_graph(const std::vector<std::string> &nodes, const EdgeSet &edges) {
    auto index = [&](const std::string &label) {
        auto it = std::find(nodes.begin(), nodes.end(), label);
        if (it == nodes.end()) {
            throw StructureError(fmt::format("edge endpoint '{}' is not a node", label));
        }
        return static_cast<std::size_t>(it - nodes.begin());
    };
    IndexedGraph g{std::vector<std::vector<std::size_t>>(nodes.size())};
    for (const auto &e : edges) {
        g.children[index(e.from)].push_back(index(e.to));
    }
    for (auto &c : g.children) {
        std::sort(c.begin(), c.end());
    }
    return g;
}

} // namespace

std::vector<Edge> find_cycle(const std::vector<std::string> &nodes, const EdgeSet &edges) {
    auto g = index_graph(nodes, edges);
    const auto n = nodes.size();
    enum : char { white, grey, black };
    std::vector<char> color(n, white);
    std::vector<std::size_t> parent(n, n);
    std::vector<Edge> cycle;

    // Iterative DFS; a grey-to-grey edge closes a cycle.
    for (std::size_t root = 0; root < n && cycle.empty(); ++root) {
        if (color[root] != white) {
            continue;
        }
        std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
        color[root] = grey;
        while (!stack.empty() && cycle.empty()) {
            auto &[v, next] = stack.back();
            if (next == g.children[v].size()) {
                color[v] = black;
                stack.pop_back();
                continue;
            }
            auto c = g.children[v][next++];
            if (color[c] == white) {
                color[c] = grey;
                parent[c] = v;
                stack.emplace_back(c, 0);
            } else if (color[c] == grey) {
                std::vector<std::size_t> path{v};
                for (auto u = v; u != c; u = parent[u]) {
                    path.push_back(parent[u]);
                }
                std::reverse(path.begin(), path.end()); // c ... v
                for (std::size_t i = 0; i + 1 < path.size(); ++i) {
                    cycle.push_back(Edge{nodes[path[i]], nodes[path[i + 1]]});
                }
                cycle.push_back(Edge{nodes[v], nodes[c]});
            }
        }
    }
    return cycle;
}

std::vector<std::string> topological_order(const std::vector<std::string> &nodes,
                                           const EdgeSet &edges) {
    auto cycle = find_cycle(nodes, edges);
    if (!cycle.empty()) {
        throw CycleError(fmt::format("graph has a cycle: {}", format_cycle(cycle)));
    }
    return topological_labels(Dag{nodes, edges});
}

namespace {

std::string quote(std::string_view id) {
    std::string out{"\""};
    for (char c : id) {
        if (c == '"' || c == '\\') {
            out.push_back('\\');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

class DotLexer {
  public:
    explicit DotLexer(std::string_view text) : text_{text} {}

    // Returns the next token; quoted ids come back unquoted with is_id set.
    bool next(std::string &token, bool &is_id) {
        skip_space_and_comments();
        if (pos_ >= text_.size()) {
            return false;
        }
        char c = text_[pos_];
        is_id = false;
        if (c == '"') {
            ++pos_;
            token.clear();
            while (pos_ < text_.size() && text_[pos_] != '"') {
                if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
                    ++pos_;
                }
                token.push_back(text_[pos_++]);
            }
            if (pos_ >= text_.size()) {
                throw IoError("unterminated string in DOT input");
            }
            ++pos_;
            is_id = true;
            return true;
        }
        if (text_.substr(pos_, 2) == "->") {
            pos_ += 2;
            token = "->";
            return true;
        }
        if (std::string_view{"{};[]=,"}.find(c) != std::string_view::npos) {
            ++pos_;
            token.assign(1, c);
            return true;
        }
        auto start = pos_;
        while (pos_ < text_.size()) {
            char d = text_[pos_];
            if (std::isspace(static_cast<unsigned char>(d)) ||
                std::string_view{"{};[]=,\""}.find(d) != std::string_view::npos ||
                text_.substr(pos_, 2) == "->") {
                break;
            }
            ++pos_;
        }
        token = std::string(text_.substr(start, pos_ - start));
        is_id = true;
        return true;
    }

  private:
    void skip_space_and_comments() {
        while (pos_ < text_.size()) {
            if (std::isspace(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
            } else if (text_.substr(pos_, 2) == "//" || text_[pos_] == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') {
                    ++pos_;
                }
            } else if (text_.substr(pos_, 2) == "/*") {
                auto end = text_.find("*/", pos_ + 2);
                pos_ = end == std::string_view::npos ? text_.size() : end + 2;
            } else {
                break;
            }
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

} // namespace

std::string to_dot(const Dag &dag, std::string_view graph_name) {
    std::ostringstream out;
    out << "digraph " << quote(graph_name) << " {\n";
    for (const auto &n : dag.nodes()) {
        out << "  " << quote(n) << ";\n";
    }
    for (auto [f, t] : dag.edge_indices()) {
        out << "  " << quote(dag.nodes()[f]) << " -> " << quote(dag.nodes()[t]) << ";\n";
    }
    out << "}\n";
    return out.str();
}

Dag dag_from_dot(std::string_view text) {
    DotLexer lex{text};
    std::string tok;
    bool is_id = false;
    auto expect_next = [&]() {
        if (!lex.next(tok, is_id)) {
            throw IoError("unexpected end of DOT input");
        }
    };

    expect_next();
    if (tok == "strict") {
        expect_next();
    }
    if (tok != "digraph") {
        throw IoError("DOT input must be a digraph");
    }
    expect_next();
    if (is_id) {
        expect_next();
    }
    if (tok != "{") {
        throw IoError("expected '{' in DOT input");
    }

    std::vector<std::string> nodes;
    std::vector<Edge> edges;
    auto add_node = [&](const std::string &id) {
        if (std::find(nodes.begin(), nodes.end(), id) == nodes.end()) {
            nodes.push_back(id);
        }
    };
    auto skip_attributes = [&]() {
        while (tok != "]") {
            expect_next();
        }
        expect_next();
    };

    expect_next();
    while (tok != "}") {
        if (tok == ";") {
            expect_next();
            continue;
        }
        if (!is_id) {
            throw IoError(fmt::format("unexpected token '{}' in DOT input", tok));
        }
        std::string first = tok;
        expect_next();
        if ((first == "graph" || first == "node" || first == "edge") && tok == "[") {
            skip_attributes();
            continue;
        }
        if (tok == "=") { // graph-level attribute
            expect_next();
            expect_next();
            continue;
        }
        add_node(first);
        std::string prev = first;
        while (tok == "->") {
            expect_next();
            if (!is_id) {
                throw IoError("edge target must be a node id");
            }
            add_node(tok);
            edges.push_back(Edge{prev, tok});
            prev = tok;
            expect_next();
        }
        if (tok == "[") {
            skip_attributes();
        }
    }

    Dag dag{nodes};
    for (const auto &e : edges) {
        dag.add_edge(e);
    }
    return dag;
}

} // namespace popsyn
