#pragma once

// Thin Eigen-backed GEMM wrappers. Eigen's own threading is disabled; callers
// parallelize across batch samples instead, which keeps every output element
// owned by exactly one thread and results bitwise reproducible for any thread
// count.
#define EIGEN_DONT_PARALLELIZE 1
#include <Eigen/Core>

#include <cstdint>

namespace sdwarp {

template <typename T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// C[M,N] (+)= A[M,K] * B[K,N]
template <typename T>
void gemm_nn(const T* a, const T* b, T* c, int64_t M, int64_t K, int64_t N, bool accumulate) {
    ConstMatMap<T> A(a, M, K);
    ConstMatMap<T> B(b, K, N);
    MatMap<T> C(c, M, N);
    if (accumulate)
        C.noalias() += A * B;
    else
        C.noalias() = A * B;
}

// C[M,N] (+)= A^T[M,K] * B[K,N] where A is stored [K,M]
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, int64_t M, int64_t K, int64_t N, bool accumulate) {
    ConstMatMap<T> A(a, K, M);
    ConstMatMap<T> B(b, K, N);
    MatMap<T> C(c, M, N);
    if (accumulate)
        C.noalias() += A.transpose() * B;
    else
        C.noalias() = A.transpose() * B;
}

// C[M,N] (+)= A[M,K] * B^T[K,N] where B is stored [N,K]
template <typename T>
void gemm_nt(const T* a, const T* b, T* c, int64_t M, int64_t K, int64_t N, bool accumulate) {
    ConstMatMap<T> A(a, M, K);
    ConstMatMap<T> B(b, N, K);
    MatMap<T> C(c, M, N);
    if (accumulate)
        C.noalias() += A * B.transpose();
    else
        C.noalias() = A * B.transpose();
}

}  // namespace sdwarp
