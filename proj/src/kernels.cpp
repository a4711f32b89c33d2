#include "pwalyap/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pwalyap::kernels {

Config& config() {
  static Config cfg;
  return cfg;
}

bool parallel_available() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace serial {

void vec_mat(const double* w, const double* M, std::size_t m, std::size_t n, double* y) {
  for (std::size_t j = 0; j < n; ++j) y[j] = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double wi = w[i];
    if (wi == 0.0) continue;
    const double* row = M + i * n;
    for (std::size_t j = 0; j < n; ++j) y[j] += wi * row[j];
  }
}

void mat_sparse_vec(const double* M, std::size_t m, std::size_t n, const int* idx,
                    const double* vals, std::size_t nnz, double* out) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = M + i * n;
    double acc = 0.0;
    for (std::size_t k = 0; k < nnz; ++k) acc += vals[k] * row[idx[k]];
    out[i] = acc;
  }
}

void pivot_update(double* M, std::size_t m, std::size_t n, std::size_t r, const double* f,
                  double piv) {
  double* pr = M + r * n;
  const double inv = 1.0 / piv;
  for (std::size_t j = 0; j < n; ++j) pr[j] *= inv;
  for (std::size_t i = 0; i < m; ++i) {
    if (i == r) continue;
    const double fi = f[i];
    if (fi == 0.0) continue;
    double* ri = M + i * n;
    for (std::size_t j = 0; j < n; ++j) ri[j] -= fi * pr[j];
  }
}

}  // namespace serial

namespace parallel {

#ifdef _OPENMP

void vec_mat(const double* w, const double* M, std::size_t m, std::size_t n, double* y) {
  // Each thread owns a contiguous column band; rows are visited in order, so
  // every y[j] accumulates in exactly the serial order.
  const long nn = static_cast<long>(n);
#pragma omp parallel
  {
    const int nt = omp_get_num_threads();
    const int tid = omp_get_thread_num();
    const long lo = nn * tid / nt;
    const long hi = nn * (tid + 1) / nt;
    for (long j = lo; j < hi; ++j) y[j] = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double wi = w[i];
      if (wi == 0.0) continue;
      const double* row = M + i * n;
      for (long j = lo; j < hi; ++j) y[j] += wi * row[j];
    }
  }
}

void mat_sparse_vec(const double* M, std::size_t m, std::size_t n, const int* idx,
                    const double* vals, std::size_t nnz, double* out) {
  const long mm = static_cast<long>(m);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < mm; ++i) {
    const double* row = M + static_cast<std::size_t>(i) * n;
    double acc = 0.0;
    for (std::size_t k = 0; k < nnz; ++k) acc += vals[k] * row[idx[k]];
    out[i] = acc;
  }
}

void pivot_update(double* M, std::size_t m, std::size_t n, std::size_t r, const double* f,
                  double piv) {
  double* pr = M + r * n;
  const double inv = 1.0 / piv;
  for (std::size_t j = 0; j < n; ++j) pr[j] *= inv;
  const long mm = static_cast<long>(m);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < mm; ++i) {
    if (static_cast<std::size_t>(i) == r) continue;
    const double fi = f[i];
    if (fi == 0.0) continue;
    double* ri = M + static_cast<std::size_t>(i) * n;
    for (std::size_t j = 0; j < n; ++j) ri[j] -= fi * pr[j];
  }
}

#else

void vec_mat(const double* w, const double* M, std::size_t m, std::size_t n, double* y) {
  serial::vec_mat(w, M, m, n, y);
}
void mat_sparse_vec(const double* M, std::size_t m, std::size_t n, const int* idx,
                    const double* vals, std::size_t nnz, double* out) {
  serial::mat_sparse_vec(M, m, n, idx, vals, nnz, out);
}
void pivot_update(double* M, std::size_t m, std::size_t n, std::size_t r, const double* f,
                  double piv) {
  serial::pivot_update(M, m, n, r, f, piv);
}

#endif

}  // namespace parallel

namespace {
inline bool use_parallel(std::size_t work) {
  return parallel_available() && config().parallel && work >= config().min_work;
}
}  // namespace

void vec_mat(const double* w, const double* M, std::size_t m, std::size_t n, double* y) {
  if (use_parallel(m * n)) {
    parallel::vec_mat(w, M, m, n, y);
  } else {
    serial::vec_mat(w, M, m, n, y);
  }
}

void mat_sparse_vec(const double* M, std::size_t m, std::size_t n, const int* idx,
                    const double* vals, std::size_t nnz, double* out) {
  if (use_parallel(m * (nnz + 1))) {
    parallel::mat_sparse_vec(M, m, n, idx, vals, nnz, out);
  } else {
    serial::mat_sparse_vec(M, m, n, idx, vals, nnz, out);
  }
}

void pivot_update(double* M, std::size_t m, std::size_t n, std::size_t r, const double* f,
                  double piv) {
  if (use_parallel(m * n)) {
    parallel::pivot_update(M, m, n, r, f, piv);
  } else {
    serial::pivot_update(M, m, n, r, f, piv);
  }
}

}  // namespace pwalyap::kernels
