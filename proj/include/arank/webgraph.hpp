#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace arank {

/// Binary link structure of a web graph in compressed sparse row form.
/// Row i lists the distinct out-neighbors of page i in ascending order.
struct AdjacencyGraph {
    std::uint32_t n = 0;
    std::vector<std::size_t> row_offsets;  // size n+1
    std::vector<std::uint32_t> targets;    // sorted, deduplicated per row
    std::vector<std::uint32_t> out_degree; // out_degree[i] == row length
    std::vector<std::uint8_t> dangling;    // dangling[i] != 0 iff out_degree[i] == 0

    std::span<const std::uint32_t> neighbors(std::uint32_t page) const {
        return {targets.data() + row_offsets[page],
                targets.data() + row_offsets[page + 1]};
    }
    std::size_t edge_count() const { return targets.size(); }
    std::uint32_t dangling_count() const;

    bool operator==(const AdjacencyGraph&) const = default;
};

/// Contiguous row intervals assigning blocks of consecutive rows to p
/// units of execution. Block sizes differ by at most one; remainder rows
/// go to the lowest-indexed blocks.
struct Partition {
    std::uint32_t n = 0;
    int p = 0;
    std::vector<std::uint32_t> bounds; // p+1 offsets, bounds[0]=0, bounds[p]=n

    std::uint32_t begin(int owner) const { return bounds[owner]; }
    std::uint32_t end(int owner) const { return bounds[owner + 1]; }
    std::uint32_t size(int owner) const { return end(owner) - begin(owner); }
    /// Owner of a global row index.
    int owner_of(std::uint32_t row) const;
};

/// A slice of rows of the transposed transition structure owned by one
/// unit of execution. Entry (r, c) carries weight 1/out_degree(c) for
/// each link c->r with out_degree(c) > 0; dangling columns store no
/// entries (their rank-one correction is applied by the kernels).
struct TransitionBlock {
    int owner = 0;
    std::uint32_t row_begin = 0;
    std::uint32_t row_end = 0;
    std::uint32_t n = 0;
    std::vector<std::size_t> row_offsets; // local rows + 1
    std::vector<std::uint32_t> cols;      // ascending within each row
    std::vector<double> weights;          // 1/out_degree(col)
    std::shared_ptr<const std::vector<std::uint8_t>> dangling;

    std::uint32_t rows() const { return row_end - row_begin; }
};

struct ParseOptions {
    int base_index = 0; // 0- or 1-based vertex ids in the input
    std::optional<std::uint32_t> declared_n;
};

/// Parses "src dst" pairs, one per line; '#' starts a comment line.
/// Duplicate edges collapse (the adjacency structure is binary);
/// self-loops are kept.
AdjacencyGraph parse_edge_list(std::istream& in, const ParseOptions& options = {});
AdjacencyGraph parse_edge_list_file(const std::string& path, const ParseOptions& options = {});

/// Writes the graph back as an edge list, rows in ascending (src, dst) order.
void serialize_edge_list(const AdjacencyGraph& graph, std::ostream& out);

/// Deterministic synthetic graph: roughly dangling_fraction*n pages carry
/// no out-links; the rest draw an out-degree >= 1 from a geometric
/// distribution with the given mean and pick targets uniformly without
/// replacement.
AdjacencyGraph generate_synthetic(std::uint32_t n, double avg_out_degree,
                                  double dangling_fraction, std::uint64_t seed);

Partition partition_rows(std::uint32_t n, int p);

TransitionBlock build_transition_block(const AdjacencyGraph& graph,
                                       const Partition& partition, int owner);

/// Builds every block of the partition; all blocks share one copy of the
/// dangling flags.
std::vector<TransitionBlock> build_all_blocks(const AdjacencyGraph& graph,
                                              const Partition& partition);

} // namespace arank
