#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <vector>

#include "pwalyap/kernels.hpp"

using namespace pwalyap;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("serial and parallel kernels agree bit-for-bit") {
  std::mt19937_64 rng(7);
  for (std::size_t m : {3u, 64u, 257u, 513u}) {
    const std::size_t n = m;
    auto M = random_vec(rng, m * n);
    auto w = random_vec(rng, m);

    std::vector<double> y1(n), y2(n);
    kernels::serial::vec_mat(w.data(), M.data(), m, n, y1.data());
    kernels::parallel::vec_mat(w.data(), M.data(), m, n, y2.data());
    CHECK(y1 == y2);

    std::vector<int> idx = {0, static_cast<int>(n / 2), static_cast<int>(n - 1)};
    std::vector<double> vals = {1.25, -0.5, 3.0};
    std::vector<double> d1(m), d2(m);
    kernels::serial::mat_sparse_vec(M.data(), m, n, idx.data(), vals.data(), idx.size(),
                                    d1.data());
    kernels::parallel::mat_sparse_vec(M.data(), m, n, idx.data(), vals.data(), idx.size(),
                                      d2.data());
    CHECK(d1 == d2);

    auto A = M;
    auto B = M;
    auto f = random_vec(rng, m);
    const std::size_t r = m / 2;
    const double piv = 1.7;
    kernels::serial::pivot_update(A.data(), m, n, r, f.data(), piv);
    kernels::parallel::pivot_update(B.data(), m, n, r, f.data(), piv);
    CHECK(A == B);
  }
}

TEST_CASE("dispatching entry points match the serial reference") {
  std::mt19937_64 rng(11);
  const std::size_t m = 300, n = 300;
  auto M = random_vec(rng, m * n);
  auto w = random_vec(rng, m);
  std::vector<double> y1(n), y2(n);
  kernels::serial::vec_mat(w.data(), M.data(), m, n, y1.data());
  kernels::vec_mat(w.data(), M.data(), m, n, y2.data());
  CHECK(y1 == y2);
}

TEST_CASE("pivot_update performs the elimination it claims") {
  // 2x2 worked example.
  std::vector<double> M = {2.0, 4.0, 1.0, 3.0};
  std::vector<double> f = {0.5, 0.0};  // eliminate row 0 against pivot row 1
  kernels::serial::pivot_update(M.data(), 2, 2, 1, f.data(), 2.0);
  // pivot row scaled by 1/2 -> (0.5, 1.5); row 0 -= 0.5 * (0.5, 1.5)
  CHECK(M[2] == doctest::Approx(0.5));
  CHECK(M[3] == doctest::Approx(1.5));
  CHECK(M[0] == doctest::Approx(2.0 - 0.25));
  CHECK(M[1] == doctest::Approx(4.0 - 0.75));
}
