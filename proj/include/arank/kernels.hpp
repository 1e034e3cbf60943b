#pragma once

#include "arank/webgraph.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace arank {

/// Full-length rank vector; entries are nonnegative reals.
using RankVector = std::vector<double>;

/// Teleportation parameters of the Google operator. An empty teleport
/// vector means the uniform distribution e/n.
struct GoogleParams {
    double alpha = 0.85;
    std::vector<double> teleport;

    double teleport_at(std::uint32_t i, std::uint32_t n) const {
        return teleport.empty() ? 1.0 / n : teleport[i];
    }
    /// Checks alpha in (0,1) and, if explicit, teleport >= 0 summing to 1.
    void validate(std::uint32_t n) const;
};

struct SyncResult {
    RankVector x;
    std::uint64_t iterations = 0;
    std::vector<double> residual_history; // successive-iterate 1-norm differences
    double wall_time_sec = 0.0;
    bool converged = false;
};

/// Deterministic chunked summation: chunk partial sums combined in chunk
/// order, so the result is independent of thread count and identical
/// between the serial and parallel paths.
double blocked_sum(std::span<const double> values);
double blocked_masked_sum(std::span<const double> values,
                          std::span<const std::uint8_t> mask);

/// One block of the Google operator: alpha*(P^T x) + alpha*(d.x)/n * e
/// + (1-alpha)*(e.x) * v, restricted to the block's rows. Neither S nor
/// G is ever materialized.
void apply_google_block(const TransitionBlock& block, std::span<const double> x,
                        const GoogleParams& params, std::span<double> out);
std::vector<double> apply_google_block(const TransitionBlock& block,
                                       std::span<const double> x,
                                       const GoogleParams& params);

/// One block of the linear-system iteration R x + b with R = alpha*S and
/// b = (1-alpha)*v. Equals the Google operator whenever e.x = 1.
void apply_linear_block(const TransitionBlock& block, std::span<const double> x,
                        const GoogleParams& params, std::span<double> out);
std::vector<double> apply_linear_block(const TransitionBlock& block,
                                       std::span<const double> x,
                                       const GoogleParams& params);

// Serial reference kernels. Same contracts and bitwise-identical results;
// kept for tests and the kernel benchmark.
namespace serial {
void apply_google_block(const TransitionBlock& block, std::span<const double> x,
                        const GoogleParams& params, std::span<double> out);
void apply_linear_block(const TransitionBlock& block, std::span<const double> x,
                        const GoogleParams& params, std::span<double> out);
} // namespace serial

/// Synchronous power method x(t+1) = G x(t), no per-step normalization.
/// Stops when the successive-iterate 1-norm difference drops below
/// tolerance; hitting max_iters is reported, not thrown.
SyncResult run_sync(const AdjacencyGraph& graph, const GoogleParams& params,
                    double tolerance, std::uint64_t max_iters = 10000,
                    const RankVector* x0 = nullptr);

/// 1-norm of a - b.
double residual_l1(std::span<const double> a, std::span<const double> b);

/// x / ||x||_1.
RankVector renormalize(std::span<const double> x);

/// Test oracle: materializes the dense relaxed matrix R and solves
/// (I - R) x = b by Gaussian elimination. Independent of the sparse
/// kernels. Guarded to n <= 2000.
RankVector dense_oracle(const AdjacencyGraph& graph, const GoogleParams& params);

inline constexpr std::uint32_t kDenseOracleLimit = 2000;

/// Uniform stochastic vector e/n.
RankVector uniform_vector(std::uint32_t n);

} // namespace arank
