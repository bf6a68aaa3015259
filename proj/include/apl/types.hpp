// include/apl/types.hpp

#pragma once

#include <Eigen/Dense>

namespace apl {

// Row-major so sequence data (frames in rows) maps directly onto the
// row-major file containers.
template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using Matf = Mat<float>;
using Matd = Mat<double>;
using Vecf = Vec<float>;
using Vecd = Vec<double>;

using Index = Eigen::Index;

template <class S>
Mat<S> reverse_rows(const Mat<S>& m) {
  Mat<S> out(m.rows(), m.cols());
  for (Index i = 0; i < m.rows(); ++i) out.row(i) = m.row(m.rows() - 1 - i);
  return out;
}

}  // namespace apl
