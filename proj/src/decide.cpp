#include "spatmht/decide.hpp"

#include <algorithm>
#include <numeric>

#include "spatmht/errors.hpp"

namespace spatmht {

std::vector<int> bfdr_select(const std::vector<double>& lfdrs, double alpha,
                             BfdrRule rule) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw invalid_argument("alpha outside (0,1)");
  for (double l : lfdrs) {
    if (!(l >= 0.0 && l <= 1.0)) throw invalid_argument("lfdr outside [0,1]");
  }
  const int n = static_cast<int>(lfdrs.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return lfdrs[a] != lfdrs[b] ? lfdrs[a] < lfdrs[b] : a < b;
  });

  int best = 0;
  double running = 0.0;
  for (int j = 0; j < n; ++j) {
    running += lfdrs[order[j]];
    const double budget = (rule == BfdrRule::mean) ? running / (j + 1) : running;
    if (budget <= alpha) best = j + 1;
  }

  std::vector<int> out(order.begin(), order.begin() + best);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> bh_procedure(const std::vector<double>& pvals, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw invalid_argument("alpha outside (0,1)");
  for (double p : pvals) {
    if (!(p >= 0.0 && p <= 1.0)) throw invalid_argument("p outside [0,1]");
  }
  const int m = static_cast<int>(pvals.size());
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return pvals[a] != pvals[b] ? pvals[a] < pvals[b] : a < b;
  });

  int k_star = 0;
  for (int k = 1; k <= m; ++k) {
    if (pvals[order[k - 1]] <= k * alpha / m) k_star = k;
  }

  std::vector<int> out(order.begin(), order.begin() + k_star);
  std::sort(out.begin(), out.end());
  return out;
}

Score score(const std::vector<int>& discovered, const GroundTruth& truth) {
  const int n = static_cast<int>(truth.active.size());
  int false_disc = 0, true_disc = 0;
  for (int idx : discovered) {
    if (idx < 0 || idx >= n) throw invalid_argument("discovery index out of range");
    if (truth.active[idx]) ++true_disc;
    else ++false_disc;
  }
  Score s;
  s.fdp = false_disc / std::max(1.0, static_cast<double>(discovered.size()));
  s.power = true_disc / std::max(1.0, static_cast<double>(truth.n_active()));
  return s;
}

}  // namespace spatmht
