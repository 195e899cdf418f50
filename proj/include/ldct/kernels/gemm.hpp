#pragma once

#include <cstddef>

namespace ldct::kernels {

// Thin BLAS wrappers over densely packed row-major operands. BLAS runs single
// threaded; callers parallelise over independent products instead, which
// keeps every result independent of the thread count.

/// C[m x n] += A[m x k] * B[k x n].
template <typename T>
void gemm_accumulate(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c);

/// C[m x n] += A^T * B where A is stored [k x m].
template <typename T>
void gemm_tn_accumulate(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c);

/// C[m x n] += A * B^T where B is stored [n x k].
template <typename T>
void gemm_nt_accumulate(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c);

}  // namespace ldct::kernels
