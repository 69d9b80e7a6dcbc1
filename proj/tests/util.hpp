// Shared helpers for the test suites.
#pragma once

#include <vector>

#include "fairlens/dataset.hpp"

namespace testutil {

using fairlens::GroupPartition;
using fairlens::IntVector;
using fairlens::Rng;

/// Absolute-tolerance comparison (the acceptance criteria are stated as
/// absolute 1e-12 bounds).
inline bool close(double a, double b, double tol = 1e-12) {
  return std::abs(a - b) <= tol;
}

inline GroupPartition partition_from(const IntVector& a, int n_values,
                                     int priv) {
  GroupPartition part;
  part.attribute = 0;
  part.privileged = priv;
  part.n_rows = a.size();
  part.groups.assign(static_cast<std::size_t>(n_values), {});
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    part.groups[static_cast<std::size_t>(a[i])].push_back(static_cast<int>(i));
  }
  for (int j = 0; j < n_values; ++j) {
    if (part.groups[static_cast<std::size_t>(j)].empty()) {
      part.empty_groups.push_back(j);
    }
  }
  return part;
}

struct RandomCase {
  IntVector yhat;
  IntVector y;
  IntVector a;
  int n_values = 2;
  int priv = 0;
};

inline RandomCase random_case(Rng& rng, long max_n = 200, int max_values = 6) {
  RandomCase c;
  long n = 10 + static_cast<long>(rng.below(static_cast<std::uint64_t>(max_n - 9)));
  c.n_values = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_values - 1)));
  c.priv = static_cast<int>(rng.below(static_cast<std::uint64_t>(c.n_values)));
  c.yhat.resize(n);
  c.y.resize(n);
  c.a.resize(n);
  for (long i = 0; i < n; ++i) {
    c.yhat[i] = rng.below(2) == 0 ? 0 : 1;
    c.y[i] = rng.below(2) == 0 ? 0 : 1;
    c.a[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(c.n_values)));
  }
  return c;
}

/// Rows with planted per-group prediction rates: group j of size sizes[j]
/// gets round(rates[j] * sizes[j]) positive predictions.
inline void planted_groups(const std::vector<int>& sizes,
                           const std::vector<double>& rates, IntVector& yhat,
                           IntVector& a) {
  long n = 0;
  for (int s : sizes) n += s;
  yhat.resize(n);
  a.resize(n);
  long row = 0;
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    long positives = std::lround(rates[j] * sizes[j]);
    for (int i = 0; i < sizes[j]; ++i, ++row) {
      a[row] = static_cast<int>(j);
      yhat[row] = i < positives ? 1 : 0;
    }
  }
}

}  // namespace testutil
