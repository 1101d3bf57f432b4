#include "sae/diff/matrix.hpp"

namespace sae::diff {

template <typename T>
void gemm(const Matrix<T>& a, bool trans_a, const Matrix<T>& b, bool trans_b, Matrix<T>& c, T beta) {
  const int m = trans_a ? a.cols() : a.rows();
  const int k = trans_a ? a.rows() : a.cols();
  const int n = trans_b ? b.rows() : b.cols();
  assert((trans_b ? b.cols() : b.rows()) == k);
  assert(c.rows() == m && c.cols() == n);

  if (beta == T{0}) c.fill(T{0});
  else if (beta != T{1})
    for (auto& x : c.flat()) x *= beta;

  const T* A = a.data();
  const T* B = b.data();
  T* C = c.data();
  const int lda = a.cols(), ldb = b.cols(), ldc = n;
  if (!trans_a && trans_b) {
    // Rows of A against rows of B: both contiguous.
    for (int i = 0; i < m; ++i) {
      const T* ai = A + static_cast<std::size_t>(i) * lda;
      T* ci = C + static_cast<std::size_t>(i) * ldc;
      for (int j = 0; j < n; ++j) {
        const T* bj = B + static_cast<std::size_t>(j) * ldb;
        T acc{0};
        for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
        ci[j] += acc;
      }
    }
    return;
  }
  // i-p-j ordering keeps the innermost loop contiguous in C and (untransposed) B.
  for (int i = 0; i < m; ++i) {
    T* ci = C + static_cast<std::size_t>(i) * ldc;
    for (int p = 0; p < k; ++p) {
      const T aip = trans_a ? A[static_cast<std::size_t>(p) * lda + i] : A[static_cast<std::size_t>(i) * lda + p];
      if (aip == T{0}) continue;
      if (!trans_b) {
        const T* bp = B + static_cast<std::size_t>(p) * ldb;
        for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
      } else {
        for (int j = 0; j < n; ++j) ci[j] += aip * B[static_cast<std::size_t>(j) * ldb + p];
      }
    }
  }
}

template void gemm<float>(const Matrix<float>&, bool, const Matrix<float>&, bool, Matrix<float>&, float);
template void gemm<double>(const Matrix<double>&, bool, const Matrix<double>&, bool, Matrix<double>&, double);

}  // namespace sae::diff
