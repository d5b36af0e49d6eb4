#pragma once

#include <Eigen/Core>

namespace momest::detail {

// Pairwise reduction of the first n columns, adjacent pairing per level with
// the odd tail carried through. Fixed order, so repeated evaluations are
// bit-identical. Leaves the column sum in column 0.
inline void pairwise_reduce_columns(Eigen::MatrixXd& buffer, Eigen::Index n) {
  Eigen::Index m = n;
  while (m > 1) {
    const Eigen::Index half = m / 2;
    for (Eigen::Index j = 0; j < half; ++j) {
      buffer.col(j) = buffer.col(2 * j) + buffer.col(2 * j + 1);
    }
    if (m % 2 == 1) {
      buffer.col(half) = buffer.col(m - 1);
      m = half + 1;
    } else {
      m = half;
    }
  }
}

// Pairwise sum of a contiguous scalar array, same tree as above.
inline double pairwise_sum(Eigen::VectorXd values) {
  Eigen::Index m = values.size();
  while (m > 1) {
    const Eigen::Index half = m / 2;
    for (Eigen::Index j = 0; j < half; ++j) {
      values[j] = values[2 * j] + values[2 * j + 1];
    }
    if (m % 2 == 1) {
      values[half] = values[m - 1];
      m = half + 1;
    } else {
      m = half;
    }
  }
  return values[0];
}

}  // namespace momest::detail
