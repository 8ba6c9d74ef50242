#include <doctest.h>

#include "gemm.hpp"
#include "testutil.hpp"

using namespace lc;

namespace {

// Naive triple loop in double precision.
std::vector<float> naive_nn(int M, std::size_t P, int K, const float* A, const float* B) {
    std::vector<float> C(std::size_t(M) * P);
    for (int m = 0; m < M; ++m)
        for (std::size_t p = 0; p < P; ++p) {
            double s = 0.0;
            for (int k = 0; k < K; ++k) s += double(A[std::size_t(m) * K + k]) * B[std::size_t(k) * P + p];
            C[std::size_t(m) * P + p] = float(s);
        }
    return C;
}

}  // namespace

TEST_CASE("gemm_nn matches the naive triple loop") {
    Rng rng(42);
    for (auto [M, P, K] : {std::tuple<int, int, int>{1, 1, 1},
                           {3, 7, 5},
                           {16, 130, 27},
                           {4, 64, 9},
                           {5, 257, 33}}) {
        std::vector<float> A(std::size_t(M) * K), B(std::size_t(K) * P);
        for (auto& v : A) v = float(rng.uniform(-1, 1));
        for (auto& v : B) v = float(rng.uniform(-1, 1));
        std::vector<float> C(std::size_t(M) * P, -7.0f);
        detail::gemm_nn(M, std::size_t(P), K, A.data(), B.data(), C.data(), false);
        const auto ref = naive_nn(M, P, K, A.data(), B.data());
        for (std::size_t i = 0; i < C.size(); ++i)
            CHECK(C[i] == doctest::Approx(ref[i]).epsilon(1e-5));
    }
}

TEST_CASE("gemm_nn accumulate adds onto existing contents") {
    Rng rng(1);
    const int M = 3, K = 5;
    const std::size_t P = 17;
    std::vector<float> A(M * K), B(K * P), C(M * P, 1.0f);
    for (auto& v : A) v = float(rng.uniform(-1, 1));
    for (auto& v : B) v = float(rng.uniform(-1, 1));
    detail::gemm_nn(M, P, K, A.data(), B.data(), C.data(), true);
    const auto ref = naive_nn(M, P, K, A.data(), B.data());
    for (std::size_t i = 0; i < C.size(); ++i)
        CHECK(C[i] == doctest::Approx(1.0f + ref[i]).epsilon(1e-5));
}

TEST_CASE("gemm_nn segmented output scatters rows per segment") {
    // Two segments of length 10: output element (m, seg, t) lands at
    // base + seg*seg_stride + m*row_stride + t, as used for (n,c,h,w) writes.
    Rng rng(2);
    const int M = 4, K = 6;
    const std::size_t seglen = 10, nseg = 2, P = seglen * nseg;
    std::vector<float> A(M * K), B(K * P);
    for (auto& v : A) v = float(rng.uniform(-1, 1));
    for (auto& v : B) v = float(rng.uniform(-1, 1));

    std::vector<float> out(nseg * M * seglen, 0.0f);
    detail::SegMat seg{out.data(), nseg, seglen, M * seglen, seglen};
    detail::gemm_nn(M, K, A.data(), std::size_t(K), B.data(), P, seg, false);

    const auto ref = naive_nn(M, P, K, A.data(), B.data());
    for (int m = 0; m < M; ++m)
        for (std::size_t s = 0; s < nseg; ++s)
            for (std::size_t t = 0; t < seglen; ++t) {
                const float got = out[s * M * seglen + m * seglen + t];
                const float want = ref[std::size_t(m) * P + s * seglen + t];
                CHECK(got == doctest::Approx(want).epsilon(1e-5));
            }
}

TEST_CASE("gemm_abt_acc computes A * B^T with segmented A reads") {
    Rng rng(3);
    const int M = 5, K = 7;
    const std::size_t seglen = 12, nseg = 3, P = seglen * nseg;
    // A stored like a (n, c, h, w) tensor: segment-major, then row.
    std::vector<float> Abuf(nseg * M * seglen);
    std::vector<float> B(std::size_t(K) * P);
    for (auto& v : Abuf) v = float(rng.uniform(-1, 1));
    for (auto& v : B) v = float(rng.uniform(-1, 1));

    std::vector<float> C(std::size_t(M) * K, 0.5f);
    detail::ConstSegMat A{Abuf.data(), nseg, seglen, M * seglen, seglen};
    detail::gemm_abt_acc(M, K, A, B.data(), P, C.data(), K);

    for (int m = 0; m < M; ++m)
        for (int k = 0; k < K; ++k) {
            double want = 0.5;
            for (std::size_t s = 0; s < nseg; ++s)
                for (std::size_t t = 0; t < seglen; ++t)
                    want += double(Abuf[s * M * seglen + m * seglen + t]) *
                            B[std::size_t(k) * P + s * seglen + t];
            CHECK(C[std::size_t(m) * K + k] == doctest::Approx(want).epsilon(1e-5));
        }
}
