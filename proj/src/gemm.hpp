#pragma once

#include <cstddef>

namespace lc::detail {

/// Output (or input) matrix whose columns are split into equal-length
/// segments, each segment living at its own base offset. This lets the
/// convolution kernels read/write (batch, channel, row, col) tensors directly:
/// segment = sample, seglen = h*w, seg_stride = channels*h*w, row_stride = h*w.
/// A plain row-major M x P matrix is the special case
/// {base, 1, P, 0, ld}.
struct SegMat {
    float* base;
    std::size_t nseg;
    std::size_t seglen;
    std::size_t seg_stride;
    std::size_t row_stride;

    float* row(std::size_t m, std::size_t seg) const {
        return base + seg * seg_stride + m * row_stride;
    }
};

struct ConstSegMat {
    const float* base;
    std::size_t nseg;
    std::size_t seglen;
    std::size_t seg_stride;
    std::size_t row_stride;

    const float* row(std::size_t m, std::size_t seg) const {
        return base + seg * seg_stride + m * row_stride;
    }
};

/// C(m, p) (+)= sum_k A[m*lda + k] * B[k*ldb + p] with p = seg*seglen + t.
/// A is M x K row-major, B is K x (nseg*seglen) row-major with leading
/// dimension ldb. Each output tile is accumulated by exactly one thread in a
/// fixed k order, so results are bit-identical for any thread count.
void gemm_nn(int M, int K, const float* A, std::size_t lda, const float* B, std::size_t ldb,
             SegMat C, bool accumulate);

/// Plain row-major convenience wrapper: C (M x P) (+)= A (M x K) * B (K x P).
void gemm_nn(int M, std::size_t P, int K, const float* A, const float* B, float* C,
             bool accumulate = false);

/// C[m*ldc + k] += sum_p A(m, p) * B[k*ldb + p], i.e. C += A * B^T where the
/// rows of A are read through segmented addressing. Per-cell sums run over
/// segments in order with a float64 carry, one owner thread per cell block.
void gemm_abt_acc(int M, int K, ConstSegMat A, const float* B, std::size_t ldb, float* C,
                  std::size_t ldc);

}  // namespace lc::detail
