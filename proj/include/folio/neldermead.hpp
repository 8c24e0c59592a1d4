#pragma once

// Deterministic Nelder-Mead simplex minimizer (reflection 1, expansion 2,
// contraction 0.5, shrink 0.5) with a hard evaluation budget. Used by the
// PDI maximizer, whose objective is non-smooth at eigenvalue crossings and
// therefore a poor fit for gradient methods.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "folio/common.hpp"

namespace folio {

struct NelderMeadOptions {
  int max_evals = 4000;
  double f_tol = 1e-11;   // spread of simplex values
  double x_tol = 1e-9;    // simplex diameter in the search space
};

struct NelderMeadResult {
  VectorXd x;
  double f = 0.0;
  int evals = 0;
};

template <typename F>
NelderMeadResult nelder_mead(F&& objective, const VectorXd& x0, double initial_step,
                             const NelderMeadOptions& opts = {}) {
  const Eigen::Index n = x0.size();
  const std::size_t verts = static_cast<std::size_t>(n) + 1;
  std::vector<VectorXd> xs(verts, x0);
  std::vector<double> fs(verts);
  int evals = 0;
  const auto eval = [&](const VectorXd& x) {
    ++evals;
    return objective(x);
  };
  fs[0] = eval(xs[0]);
  for (std::size_t i = 1; i < verts; ++i) {
    xs[i][static_cast<Eigen::Index>(i - 1)] += initial_step;
    fs[i] = eval(xs[i]);
  }
  std::vector<std::size_t> order(verts);
  const auto sort_order = [&]() {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
  };
  sort_order();

  while (evals < opts.max_evals) {
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[verts - 2];
    if (fs[worst] - fs[best] <= opts.f_tol) break;
    double diameter = 0.0;
    for (std::size_t i = 0; i < verts; ++i)
      diameter = std::max(diameter, (xs[i] - xs[best]).lpNorm<Eigen::Infinity>());
    if (diameter <= opts.x_tol) break;

    VectorXd centroid = VectorXd::Zero(n);
    for (std::size_t i = 0; i < verts; ++i)
      if (i != worst) centroid += xs[i];
    centroid /= static_cast<double>(n);

    const VectorXd reflected = centroid + (centroid - xs[worst]);
    const double f_reflected = eval(reflected);
    if (f_reflected < fs[best]) {
      const VectorXd expanded = centroid + 2.0 * (centroid - xs[worst]);
      const double f_expanded = eval(expanded);
      if (f_expanded < f_reflected) {
        xs[worst] = expanded;
        fs[worst] = f_expanded;
      } else {
        xs[worst] = reflected;
        fs[worst] = f_reflected;
      }
    } else if (f_reflected < fs[second_worst]) {
      xs[worst] = reflected;
      fs[worst] = f_reflected;
    } else {
      const bool outside = f_reflected < fs[worst];
      const VectorXd contracted = outside ? VectorXd(centroid + 0.5 * (reflected - centroid))
                                          : VectorXd(centroid - 0.5 * (centroid - xs[worst]));
      const double f_contracted = eval(contracted);
      if (f_contracted < std::min(f_reflected, fs[worst])) {
        xs[worst] = contracted;
        fs[worst] = f_contracted;
      } else {
        for (std::size_t i = 0; i < verts; ++i) {
          if (i == best) continue;
          xs[i] = xs[best] + 0.5 * (xs[i] - xs[best]);
          fs[i] = eval(xs[i]);
          if (evals >= opts.max_evals) break;
        }
      }
    }
    sort_order();
  }
  sort_order();
  NelderMeadResult result;
  result.x = xs[order.front()];
  result.f = fs[order.front()];
  result.evals = evals;
  return result;
}

}  // namespace folio
