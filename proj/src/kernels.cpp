#include "arank/kernels.hpp"

#include "arank/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>

namespace arank {

namespace {

constexpr std::size_t kChunk = 4096;
// Rows below this stay serial; engine UEs run kernels concurrently and
// small blocks are not worth forking a team for.
constexpr std::uint32_t kParallelRowThreshold = 8192;

double chunk_sum(const double* data, std::size_t count) {
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i)
        s += data[i];
    return s;
}

double chunk_masked_sum(const double* data, const std::uint8_t* mask, std::size_t count) {
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i)
        if (mask[i])
            s += data[i];
    return s;
}

double combine_chunks(const std::vector<double>& partial) {
    double s = 0.0;
    for (double v : partial)
        s += v;
    return s;
}

double row_product(const TransitionBlock& block, std::uint32_t local_row,
                   std::span<const double> x) {
    double acc = 0.0;
    const std::size_t begin = block.row_offsets[local_row];
    const std::size_t end = block.row_offsets[local_row + 1];
    for (std::size_t k = begin; k < end; ++k)
        acc += block.weights[k] * x[block.cols[k]];
    return acc;
}

void check_shapes(const TransitionBlock& block, std::span<const double> x,
                  std::span<const double> out, const GoogleParams& params) {
    if (!block.dangling)
        throw InvalidArgument("kernel: block has no dangling flags");
    if (x.size() != block.n)
        throw InvalidArgument("kernel: x length does not match block dimension");
    if (out.size() != block.rows())
        throw InvalidArgument("kernel: output length does not match block rows");
    if (!params.teleport.empty() && params.teleport.size() != block.n)
        throw InvalidArgument("kernel: teleport length does not match block dimension");
}

} // namespace

void GoogleParams::validate(std::uint32_t n) const {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw InvalidArgument("alpha must lie in (0,1)");
    if (teleport.empty())
        return;
    if (teleport.size() != n)
        throw InvalidArgument("teleport vector length does not match page count");
    double sum = 0.0;
    for (double v : teleport) {
        if (v < 0.0)
            throw InvalidArgument("teleport entries must be nonnegative");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw InvalidArgument("teleport vector must sum to 1");
}

namespace {

template <bool Parallel>
double blocked_sum_impl(std::span<const double> values) {
    const std::size_t chunks = (values.size() + kChunk - 1) / kChunk;
    if (chunks <= 1)
        return chunk_sum(values.data(), values.size());
    std::vector<double> partial(chunks);
#pragma omp parallel for schedule(static) if (Parallel && chunks > 4)
    for (long long c = 0; c < static_cast<long long>(chunks); ++c) {
        const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
        partial[c] = chunk_sum(values.data() + begin, std::min(kChunk, values.size() - begin));
    }
    return combine_chunks(partial);
}

template <bool Parallel>
double blocked_masked_sum_impl(std::span<const double> values,
                               std::span<const std::uint8_t> mask) {
    if (mask.size() != values.size())
        throw InvalidArgument("blocked_masked_sum: mask length mismatch");
    const std::size_t chunks = (values.size() + kChunk - 1) / kChunk;
    if (chunks <= 1)
        return chunk_masked_sum(values.data(), mask.data(), values.size());
    std::vector<double> partial(chunks);
#pragma omp parallel for schedule(static) if (Parallel && chunks > 4)
    for (long long c = 0; c < static_cast<long long>(chunks); ++c) {
        const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
        partial[c] = chunk_masked_sum(values.data() + begin, mask.data() + begin,
                                      std::min(kChunk, values.size() - begin));
    }
    return combine_chunks(partial);
}

} // namespace

double blocked_sum(std::span<const double> values) {
    return blocked_sum_impl<true>(values);
}

double blocked_masked_sum(std::span<const double> values, std::span<const std::uint8_t> mask) {
    return blocked_masked_sum_impl<true>(values, mask);
}

namespace {

// Shared body of both kernels. teleport_scale is (1-alpha)*(e.x) for the
// Google operator and (1-alpha) for the linear one; the dangling term
// alpha*(d.x)/n uses the same x snapshot as the sparse multiply.
template <bool Parallel>
void apply_block_impl(const TransitionBlock& block, std::span<const double> x,
                      const GoogleParams& params, double teleport_scale,
                      double dangling_term, std::span<double> out) {
    const auto rows = static_cast<long long>(block.rows());
    const std::uint32_t n = block.n;
    const double alpha = params.alpha;
    const double* v = params.teleport.empty() ? nullptr : params.teleport.data();
    const double uniform = 1.0 / n;

#pragma omp parallel for schedule(static) if (Parallel && rows >= kParallelRowThreshold)
    for (long long r = 0; r < rows; ++r) {
        const double acc = row_product(block, static_cast<std::uint32_t>(r), x);
        const double vr = v ? v[block.row_begin + r] : uniform;
        out[r] = alpha * acc + dangling_term + teleport_scale * vr;
    }
}

template <bool Parallel>
void google_impl(const TransitionBlock& block, std::span<const double> x,
                 const GoogleParams& params, std::span<double> out) {
    check_shapes(block, x, out, params);
    const double dangling_term =
        params.alpha * blocked_masked_sum_impl<Parallel>(x, *block.dangling) / block.n;
    const double teleport_scale = (1.0 - params.alpha) * blocked_sum_impl<Parallel>(x);
    apply_block_impl<Parallel>(block, x, params, teleport_scale, dangling_term, out);
}

template <bool Parallel>
void linear_impl(const TransitionBlock& block, std::span<const double> x,
                 const GoogleParams& params, std::span<double> out) {
    check_shapes(block, x, out, params);
    const double dangling_term =
        params.alpha * blocked_masked_sum_impl<Parallel>(x, *block.dangling) / block.n;
    apply_block_impl<Parallel>(block, x, params, 1.0 - params.alpha, dangling_term, out);
}

} // namespace

void apply_google_block(const TransitionBlock& block, std::span<const double> x,
                        const GoogleParams& params, std::span<double> out) {
    google_impl<true>(block, x, params, out);
}

std::vector<double> apply_google_block(const TransitionBlock& block,
                                       std::span<const double> x,
                                       const GoogleParams& params) {
    std::vector<double> out(block.rows());
    apply_google_block(block, x, params, out);
    return out;
}

void apply_linear_block(const TransitionBlock& block, std::span<const double> x,
                        const GoogleParams& params, std::span<double> out) {
    linear_impl<true>(block, x, params, out);
}

std::vector<double> apply_linear_block(const TransitionBlock& block,
                                       std::span<const double> x,
                                       const GoogleParams& params) {
    std::vector<double> out(block.rows());
    apply_linear_block(block, x, params, out);
    return out;
}

namespace serial {

void apply_google_block(const TransitionBlock& block, std::span<const double> x,
                        const GoogleParams& params, std::span<double> out) {
    google_impl<false>(block, x, params, out);
}

void apply_linear_block(const TransitionBlock& block, std::span<const double> x,
                        const GoogleParams& params, std::span<double> out) {
    linear_impl<false>(block, x, params, out);
}

} // namespace serial

RankVector uniform_vector(std::uint32_t n) {
    return RankVector(n, 1.0 / n);
}

SyncResult run_sync(const AdjacencyGraph& graph, const GoogleParams& params,
                    double tolerance, std::uint64_t max_iters, const RankVector* x0) {
    if (tolerance <= 0.0)
        throw InvalidArgument("run_sync: tolerance must be positive");
    params.validate(graph.n);

    const auto t0 = std::chrono::steady_clock::now();
    const TransitionBlock full = build_transition_block(graph, partition_rows(graph.n, 1), 0);

    SyncResult result;
    result.x = x0 ? *x0 : uniform_vector(graph.n);
    if (result.x.size() != graph.n)
        throw InvalidArgument("run_sync: x0 length does not match graph");

    RankVector next(graph.n);
    while (result.iterations < max_iters) {
        apply_google_block(full, result.x, params, next);
        const double res = residual_l1(next, result.x);
        result.x.swap(next);
        ++result.iterations;
        result.residual_history.push_back(res);
        if (res < tolerance) {
            result.converged = true;
            break;
        }
    }
    result.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

double residual_l1(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw InvalidArgument("residual_l1: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += std::abs(a[i] - b[i]);
    return s;
}

RankVector renormalize(std::span<const double> x) {
    double norm = 0.0;
    for (double v : x)
        norm += std::abs(v);
    if (norm == 0.0)
        throw InvalidArgument("renormalize: zero vector");
    RankVector out(x.begin(), x.end());
    for (double& v : out)
        v /= norm;
    return out;
}

RankVector dense_oracle(const AdjacencyGraph& graph, const GoogleParams& params) {
    const std::uint32_t n = graph.n;
    if (n == 0 || n > kDenseOracleLimit)
        throw InvalidArgument("dense_oracle: n outside (0, 2000]");
    params.validate(n);

    const double alpha = params.alpha;
    // A = I - R with R = alpha * (P^T + w d^T), row-major.
    std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
    for (std::uint32_t c = 0; c < n; ++c) {
        if (graph.out_degree[c] == 0) {
            const double w = alpha / n;
            for (std::uint32_t r = 0; r < n; ++r)
                a[static_cast<std::size_t>(r) * n + c] -= w;
        } else {
            const double w = alpha / graph.out_degree[c];
            for (std::uint32_t r : graph.neighbors(c))
                a[static_cast<std::size_t>(r) * n + c] -= w;
        }
    }
    for (std::uint32_t i = 0; i < n; ++i)
        a[static_cast<std::size_t>(i) * n + i] += 1.0;

    std::vector<double> x(n);
    for (std::uint32_t i = 0; i < n; ++i)
        x[i] = (1.0 - alpha) * params.teleport_at(i, n);

    // Gaussian elimination with partial pivoting.
    for (std::uint32_t k = 0; k < n; ++k) {
        std::uint32_t pivot = k;
        double best = std::abs(a[static_cast<std::size_t>(k) * n + k]);
        for (std::uint32_t r = k + 1; r < n; ++r) {
            const double mag = std::abs(a[static_cast<std::size_t>(r) * n + k]);
            if (mag > best) {
                best = mag;
                pivot = r;
            }
        }
        if (best == 0.0)
            throw Error("dense_oracle: singular system");
        if (pivot != k) {
            for (std::uint32_t c = k; c < n; ++c)
                std::swap(a[static_cast<std::size_t>(k) * n + c],
                          a[static_cast<std::size_t>(pivot) * n + c]);
            std::swap(x[k], x[pivot]);
        }
        const double inv = 1.0 / a[static_cast<std::size_t>(k) * n + k];
        for (std::uint32_t r = k + 1; r < n; ++r) {
            const double factor = a[static_cast<std::size_t>(r) * n + k] * inv;
            if (factor == 0.0)
                continue;
            a[static_cast<std::size_t>(r) * n + k] = 0.0;
            for (std::uint32_t c = k + 1; c < n; ++c)
                a[static_cast<std::size_t>(r) * n + c] -= factor * a[static_cast<std::size_t>(k) * n + c];
            x[r] -= factor * x[k];
        }
    }
    for (std::uint32_t ri = n; ri-- > 0;) {
        double s = x[ri];
        for (std::uint32_t c = ri + 1; c < n; ++c)
            s -= a[static_cast<std::size_t>(ri) * n + c] * x[c];
        x[ri] = s / a[static_cast<std::size_t>(ri) * n + ri];
    }
    return x;
}

} // namespace arank
