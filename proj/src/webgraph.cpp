#include "arank/webgraph.hpp"

#include "arank/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>

namespace arank {

namespace {

AdjacencyGraph from_edges(std::vector<std::pair<std::uint32_t, std::uint32_t>> edges,
                          std::uint32_t n) {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    AdjacencyGraph g;
    g.n = n;
    g.row_offsets.assign(n + 1, 0);
    g.targets.reserve(edges.size());
    for (const auto& [src, dst] : edges)
        ++g.row_offsets[src + 1];
    for (std::uint32_t i = 0; i < n; ++i)
        g.row_offsets[i + 1] += g.row_offsets[i];
    for (const auto& [src, dst] : edges)
        g.targets.push_back(dst); // edges sorted -> ascending within each row

    g.out_degree.resize(n);
    g.dangling.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        g.out_degree[i] = static_cast<std::uint32_t>(g.row_offsets[i + 1] - g.row_offsets[i]);
        g.dangling[i] = g.out_degree[i] == 0 ? 1 : 0;
    }
    return g;
}

// Bounded uniform draw with a fixed, platform-independent algorithm so
// generated graphs are reproducible across standard libraries.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    return rng() % bound;
}

double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace

std::uint32_t AdjacencyGraph::dangling_count() const {
    std::uint32_t count = 0;
    for (std::uint8_t d : dangling)
        count += d;
    return count;
}

AdjacencyGraph parse_edge_list(std::istream& in, const ParseOptions& options) {
    if (options.base_index != 0 && options.base_index != 1)
        throw InvalidArgument("base_index must be 0 or 1");

    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    std::uint32_t max_id = 0;
    bool saw_vertex = false;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#')
            continue;

        std::istringstream fields(line);
        long long src = 0, dst = 0;
        std::string extra;
        if (!(fields >> src >> dst))
            throw ParseError("expected two integers \"src dst\"", line_no);
        if (fields >> extra)
            throw ParseError("trailing tokens after \"src dst\"", line_no);
        src -= options.base_index;
        dst -= options.base_index;
        if (src < 0 || dst < 0)
            throw ParseError("vertex id below base index", line_no);
        if (options.declared_n &&
            (src >= static_cast<long long>(*options.declared_n) ||
             dst >= static_cast<long long>(*options.declared_n)))
            throw ParseError("vertex id out of declared range", line_no);

        edges.emplace_back(static_cast<std::uint32_t>(src), static_cast<std::uint32_t>(dst));
        max_id = std::max({max_id, static_cast<std::uint32_t>(src), static_cast<std::uint32_t>(dst)});
        saw_vertex = true;
    }

    std::uint32_t n = options.declared_n ? *options.declared_n : (saw_vertex ? max_id + 1 : 0);
    return from_edges(std::move(edges), n);
}

AdjacencyGraph parse_edge_list_file(const std::string& path, const ParseOptions& options) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open graph file: " + path);
    return parse_edge_list(in, options);
}

void serialize_edge_list(const AdjacencyGraph& graph, std::ostream& out) {
    for (std::uint32_t src = 0; src < graph.n; ++src)
        for (std::uint32_t dst : graph.neighbors(src))
            out << src << ' ' << dst << '\n';
}

AdjacencyGraph generate_synthetic(std::uint32_t n, double avg_out_degree,
                                  double dangling_fraction, std::uint64_t seed) {
    if (n < 1)
        throw InvalidArgument("generate_synthetic: n must be >= 1");
    if (avg_out_degree < 0)
        throw InvalidArgument("generate_synthetic: avg_out_degree must be >= 0");
    if (dangling_fraction < 0.0 || dangling_fraction > 1.0)
        throw InvalidArgument("generate_synthetic: dangling_fraction must be in [0,1]");

    std::mt19937_64 rng(seed);
    // Geometric out-degree on {1,2,...} with mean max(avg, 1).
    const double p_stop = 1.0 / std::max(avg_out_degree, 1.0);

    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    std::vector<std::uint32_t> picked;
    for (std::uint32_t page = 0; page < n; ++page) {
        if (uniform_unit(rng) < dangling_fraction)
            continue;
        std::uint32_t degree = 1;
        if (p_stop < 1.0) {
            double u = uniform_unit(rng);
            double k = std::floor(std::log1p(-u) / std::log1p(-p_stop));
            degree += static_cast<std::uint32_t>(std::min(k, static_cast<double>(n - 1)));
        }
        degree = std::min(degree, n);

        // Uniform targets without replacement.
        picked.clear();
        while (picked.size() < degree) {
            auto t = static_cast<std::uint32_t>(uniform_below(rng, n));
            if (std::find(picked.begin(), picked.end(), t) == picked.end())
                picked.push_back(t);
        }
        for (std::uint32_t t : picked)
            edges.emplace_back(page, t);
    }
    return from_edges(std::move(edges), n);
}

Partition partition_rows(std::uint32_t n, int p) {
    if (p < 1 || static_cast<std::uint32_t>(p) > n)
        throw InvalidArgument("partition_rows: need 1 <= p <= n");

    Partition part;
    part.n = n;
    part.p = p;
    part.bounds.resize(p + 1);
    const std::uint32_t base = n / static_cast<std::uint32_t>(p);
    const std::uint32_t remainder = n % static_cast<std::uint32_t>(p);
    part.bounds[0] = 0;
    for (int i = 0; i < p; ++i) {
        std::uint32_t size = base + (static_cast<std::uint32_t>(i) < remainder ? 1 : 0);
        part.bounds[i + 1] = part.bounds[i] + size;
    }
    return part;
}

int Partition::owner_of(std::uint32_t row) const {
    auto it = std::upper_bound(bounds.begin(), bounds.end(), row);
    return static_cast<int>(it - bounds.begin()) - 1;
}

namespace {

TransitionBlock build_block(const AdjacencyGraph& graph, const Partition& partition,
                            int owner,
                            std::shared_ptr<const std::vector<std::uint8_t>> dangling) {
    TransitionBlock block;
    block.owner = owner;
    block.row_begin = partition.begin(owner);
    block.row_end = partition.end(owner);
    block.n = graph.n;
    block.dangling = std::move(dangling);

    const std::uint32_t rows = block.rows();
    block.row_offsets.assign(rows + 1, 0);
    for (std::uint32_t src = 0; src < graph.n; ++src)
        for (std::uint32_t dst : graph.neighbors(src))
            if (dst >= block.row_begin && dst < block.row_end)
                ++block.row_offsets[dst - block.row_begin + 1];
    for (std::uint32_t r = 0; r < rows; ++r)
        block.row_offsets[r + 1] += block.row_offsets[r];

    block.cols.resize(block.row_offsets[rows]);
    block.weights.resize(block.row_offsets[rows]);
    std::vector<std::size_t> cursor(block.row_offsets.begin(), block.row_offsets.end() - 1);
    // Sources visited in ascending order, so columns end up sorted per row.
    for (std::uint32_t src = 0; src < graph.n; ++src) {
        if (graph.out_degree[src] == 0)
            continue;
        const double weight = 1.0 / graph.out_degree[src];
        for (std::uint32_t dst : graph.neighbors(src)) {
            if (dst < block.row_begin || dst >= block.row_end)
                continue;
            std::size_t at = cursor[dst - block.row_begin]++;
            block.cols[at] = src;
            block.weights[at] = weight;
        }
    }
    return block;
}

} // namespace

TransitionBlock build_transition_block(const AdjacencyGraph& graph,
                                       const Partition& partition, int owner) {
    if (graph.n != partition.n)
        throw InvalidArgument("build_transition_block: graph/partition dimension mismatch");
    if (owner < 0 || owner >= partition.p)
        throw InvalidArgument("build_transition_block: owner out of range");
    auto dangling = std::make_shared<const std::vector<std::uint8_t>>(graph.dangling);
    return build_block(graph, partition, owner, std::move(dangling));
}

std::vector<TransitionBlock> build_all_blocks(const AdjacencyGraph& graph,
                                              const Partition& partition) {
    if (graph.n != partition.n)
        throw InvalidArgument("build_all_blocks: graph/partition dimension mismatch");
    auto dangling = std::make_shared<const std::vector<std::uint8_t>>(graph.dangling);
    std::vector<TransitionBlock> blocks;
    blocks.reserve(partition.p);
    for (int owner = 0; owner < partition.p; ++owner)
        blocks.push_back(build_block(graph, partition, owner, dangling));
    return blocks;
}

} // namespace arank
