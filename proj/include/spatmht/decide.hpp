// Discovery selection with FDR control (lfdr prefix rules, Benjamini-Hochberg)
// and scoring against ground truth.
#pragma once

#include <vector>

#include "spatmht/grid.hpp"

namespace spatmht {

// mean: largest ascending-lfdr prefix whose running average stays <= alpha
// (the Bayesian FDR of the selected set); sum: running sum <= alpha instead,
// a much stricter budget.  Default is mean.
enum class BfdrRule { mean, sum };

// Returns the original indices of the selected prefix, ascending; ties in the
// lfdr ordering are broken by original index.
std::vector<int> bfdr_select(const std::vector<double>& lfdrs, double alpha,
                             BfdrRule rule = BfdrRule::mean);

// Reject the k* smallest p-values, k* = max{k : p_(k) <= k*alpha/m}.
std::vector<int> bh_procedure(const std::vector<double>& pvals, double alpha);

struct Score {
  double fdp = 0.0;    // false discoveries / max(1, discoveries)
  double power = 0.0;  // true discoveries / max(1, |R1|)
};

Score score(const std::vector<int>& discovered, const GroundTruth& truth);

}  // namespace spatmht
