#pragma once

#include <algorithm>
#include <vector>

#include "rflin/generators.hpp"
#include "rflin/linear_mdp.hpp"

namespace testing {

using rflin::LinearMDP;
using rflin::Matrix;
using rflin::RowMatrix;
using rflin::Vector;

// One state, d = num_actions, phi(s, a) = e_a, reward r for every action.
inline LinearMDP one_state(int horizon, int num_actions, double r) {
  std::vector<Matrix> p(horizon, Matrix::Ones(num_actions, 1));
  std::vector<Vector> rew(horizon, Vector::Constant(num_actions, r));
  return rflin::tabular_embed(1, num_actions, p, rew);
}

// Plain nested-loop value iteration on (P, r) tables, independent of the
// library's linear-algebra path. P[h][s*A+a][s'], r[h][s*A+a].
struct TabularValues {
  std::vector<std::vector<double>> V;  // [h][s], V[H] = 0
};

inline TabularValues tabular_vi(int n_s, int n_a, const std::vector<Matrix>& P, const std::vector<Vector>& r) {
  const int H = static_cast<int>(P.size());
  TabularValues out;
  out.V.assign(H + 1, std::vector<double>(n_s, 0.0));
  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < n_s; ++s) {
      double best = -1e300;
      for (int a = 0; a < n_a; ++a) {
        double q = r[h](s * n_a + a);
        for (int t = 0; t < n_s; ++t) q += P[h](s * n_a + a, t) * out.V[h + 1][t];
        best = std::max(best, q);
      }
      out.V[h][s] = best;
    }
  }
  return out;
}

}  // namespace testing
