#ifndef PWALYAP_KERNELS_HPP
#define PWALYAP_KERNELS_HPP

#include <cstddef>

// Dense inner loops of the LP engine. Each kernel has a serial reference
// implementation and an OpenMP variant; the unqualified entry points dispatch
// at runtime based on problem size and the global config. The two variants
// perform the same per-element operations in the same order, so their results
// are bit-identical and the serial versions double as the test oracle.

namespace pwalyap::kernels {

struct Config {
  bool parallel = true;       // allow OpenMP dispatch at all
  std::size_t min_work = 1u << 15;  // dispatch threshold in flops-ish units
};

Config& config();
bool parallel_available();
int thread_count();

namespace serial {

// y[j] = sum_i w[i] * M[i*n + j]   (row vector times row-major matrix)
void vec_mat(const double* w, const double* M, std::size_t m, std::size_t n, double* y);

// out[i] = sum_k vals[k] * M[i*n + idx[k]]   (matrix times sparse column)
void mat_sparse_vec(const double* M, std::size_t m, std::size_t n, const int* idx,
                    const double* vals, std::size_t nnz, double* out);

// Gauss-Jordan style pivot update of a row-major m x n matrix:
//   row r  <- row r / piv
//   row i  <- row i - f[i] * (row r / piv)   for i != r
void pivot_update(double* M, std::size_t m, std::size_t n, std::size_t r, const double* f,
                  double piv);

}  // namespace serial

namespace parallel {

void vec_mat(const double* w, const double* M, std::size_t m, std::size_t n, double* y);
void mat_sparse_vec(const double* M, std::size_t m, std::size_t n, const int* idx,
                    const double* vals, std::size_t nnz, double* out);
void pivot_update(double* M, std::size_t m, std::size_t n, std::size_t r, const double* f,
                  double piv);

}  // namespace parallel

void vec_mat(const double* w, const double* M, std::size_t m, std::size_t n, double* y);
void mat_sparse_vec(const double* M, std::size_t m, std::size_t n, const int* idx,
                    const double* vals, std::size_t nnz, double* out);
void pivot_update(double* M, std::size_t m, std::size_t n, std::size_t r, const double* f,
                  double piv);

}  // namespace pwalyap::kernels

#endif
