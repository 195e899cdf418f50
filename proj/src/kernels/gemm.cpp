#include "ldct/kernels/gemm.hpp"

#include <cblas.h>

namespace ldct::kernels {

namespace {

struct SingleThreadedBlas {
  SingleThreadedBlas() { openblas_set_num_threads(1); }
};

void ensure_single_thread() {
  static const SingleThreadedBlas once;
  (void)once;
}

int as_int(std::size_t v) { return static_cast<int>(v); }

void call(CBLAS_TRANSPOSE ta, CBLAS_TRANSPOSE tb, std::size_t m, std::size_t n, std::size_t k, const float* a,
          std::size_t lda, const float* b, std::size_t ldb, float* c) {
  ensure_single_thread();
  cblas_sgemm(CblasRowMajor, ta, tb, as_int(m), as_int(n), as_int(k), 1.0f, a, as_int(lda), b, as_int(ldb), 1.0f, c,
              as_int(n));
}

void call(CBLAS_TRANSPOSE ta, CBLAS_TRANSPOSE tb, std::size_t m, std::size_t n, std::size_t k, const double* a,
          std::size_t lda, const double* b, std::size_t ldb, double* c) {
  ensure_single_thread();
  cblas_dgemm(CblasRowMajor, ta, tb, as_int(m), as_int(n), as_int(k), 1.0, a, as_int(lda), b, as_int(ldb), 1.0, c,
              as_int(n));
}

}  // namespace

template <typename T>
void gemm_accumulate(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  if (m == 0 || n == 0 || k == 0) return;
  call(CblasNoTrans, CblasNoTrans, m, n, k, a, k, b, n, c);
}

template <typename T>
void gemm_tn_accumulate(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  if (m == 0 || n == 0 || k == 0) return;
  call(CblasTrans, CblasNoTrans, m, n, k, a, m, b, n, c);
}

template <typename T>
void gemm_nt_accumulate(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  if (m == 0 || n == 0 || k == 0) return;
  call(CblasNoTrans, CblasTrans, m, n, k, a, k, b, k, c);
}

#define LDCT_INSTANTIATE_GEMM(T)                                                                         \
  template void gemm_accumulate<T>(std::size_t, std::size_t, std::size_t, const T*, const T*, T*);    \
  template void gemm_tn_accumulate<T>(std::size_t, std::size_t, std::size_t, const T*, const T*, T*); \
  template void gemm_nt_accumulate<T>(std::size_t, std::size_t, std::size_t, const T*, const T*, T*);
LDCT_INSTANTIATE_GEMM(float)
LDCT_INSTANTIATE_GEMM(double)

}  // namespace ldct::kernels
