#include "gemm.hpp"

#include <algorithm>
#include <cstring>

namespace lc::detail {

namespace {

constexpr int kTile = 64;     // C columns per register tile
constexpr int kKBlock = 16;   // B rows per ownership block in gemm_abt_acc

// MR rows of C x (up to kTile) columns, accumulators held in registers/stack
// across the whole k loop.
template <int MR>
void tile_nn(int K, const float* __restrict A, std::size_t lda, const float* __restrict B,
             std::size_t ldb, std::size_t boff, float* __restrict cbase, std::size_t crow,
             int jw, bool accumulate) {
    float acc[MR][kTile];
    if (accumulate) {
        for (int r = 0; r < MR; ++r)
            for (int j = 0; j < jw; ++j) acc[r][j] = cbase[r * crow + j];
    } else {
        for (int r = 0; r < MR; ++r)
            for (int j = 0; j < jw; ++j) acc[r][j] = 0.0f;
    }
    for (int k = 0; k < K; ++k) {
        const float* b = B + k * ldb + boff;
        for (int r = 0; r < MR; ++r) {
            const float s = A[r * lda + k];
#pragma omp simd
            for (int j = 0; j < jw; ++j) acc[r][j] += s * b[j];
        }
    }
    for (int r = 0; r < MR; ++r)
        for (int j = 0; j < jw; ++j) cbase[r * crow + j] = acc[r][j];
}

inline float dot(const float* __restrict a, const float* __restrict b, std::size_t len) {
    float s = 0.0f;
#pragma omp simd reduction(+ : s)
    for (std::size_t i = 0; i < len; ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

void gemm_nn(int M, int K, const float* A, std::size_t lda, const float* B, std::size_t ldb,
             SegMat C, bool accumulate) {
    const std::size_t tiles_per_seg = (C.seglen + kTile - 1) / kTile;
    const std::size_t total_tiles = C.nseg * tiles_per_seg;
    const long long nt = (long long)total_tiles;
#pragma omp parallel for schedule(static)
    for (long long ti = 0; ti < nt; ++ti) {
        const std::size_t seg = std::size_t(ti) / tiles_per_seg;
        const std::size_t t0 = (std::size_t(ti) % tiles_per_seg) * kTile;
        const int jw = int(std::min<std::size_t>(kTile, C.seglen - t0));
        const std::size_t boff = seg * C.seglen + t0;
        int m = 0;
        for (; m + 4 <= M; m += 4)
            tile_nn<4>(K, A + std::size_t(m) * lda, lda, B, ldb, boff, C.row(m, seg) + t0,
                       C.row_stride, jw, accumulate);
        for (; m + 2 <= M; m += 2)
            tile_nn<2>(K, A + std::size_t(m) * lda, lda, B, ldb, boff, C.row(m, seg) + t0,
                       C.row_stride, jw, accumulate);
        for (; m < M; ++m)
            tile_nn<1>(K, A + std::size_t(m) * lda, lda, B, ldb, boff, C.row(m, seg) + t0,
                       C.row_stride, jw, accumulate);
    }
}

void gemm_nn(int M, std::size_t P, int K, const float* A, const float* B, float* C,
             bool accumulate) {
    gemm_nn(M, K, A, std::size_t(K), B, P, SegMat{C, 1, P, 0, P}, accumulate);
}

void gemm_abt_acc(int M, int K, ConstSegMat A, const float* B, std::size_t ldb, float* C,
                  std::size_t ldc) {
    const int nblocks = (K + kKBlock - 1) / kKBlock;
#pragma omp parallel for schedule(static)
    for (int blk = 0; blk < nblocks; ++blk) {
        const int k0 = blk * kKBlock;
        const int kw = std::min(kKBlock, K - k0);
        // Cell sums carried in float64; per-segment partial dots in float32.
        double acc[4 * kKBlock];
        for (int m0 = 0; m0 < M; m0 += 4) {
            const int mw = std::min(4, M - m0);
            for (int i = 0; i < mw * kw; ++i) acc[i] = 0.0;
            for (std::size_t seg = 0; seg < A.nseg; ++seg) {
                const float* brow = B + std::size_t(k0) * ldb + seg * A.seglen;
                for (int mi = 0; mi < mw; ++mi) {
                    const float* arow = A.row(std::size_t(m0 + mi), seg);
                    for (int ki = 0; ki < kw; ++ki)
                        acc[mi * kw + ki] += dot(arow, brow + std::size_t(ki) * ldb, A.seglen);
                }
            }
            for (int mi = 0; mi < mw; ++mi)
                for (int ki = 0; ki < kw; ++ki)
                    C[std::size_t(m0 + mi) * ldc + k0 + ki] += float(acc[mi * kw + ki]);
        }
    }
}

}  // namespace lc::detail
