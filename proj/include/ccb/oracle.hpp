#pragma once
// Online regression oracles for per-(context, arm) mean estimation.
//
// FiniteClassOracle: exponential weights over a finite set of hypothesis
// tables under the squared loss, learning rate eta = 1/8 (the exp-concavity
// constant of the squared loss on [-1, 1]). Predictions are weight-averaged
// hypothesis values, so cumulative squared error exceeds the best table's
// by at most (1/eta) * ln N.
//
// LinearOracle: online ridge regression over a fixed per-(context, arm)
// feature table, predictions clipped to [-1, 1]. The inverse Gram matrix is
// maintained by rank-one updates, so an update costs O(d^2).
//
// Both oracles keep an ErrorLedger: cumulative squared error of the
// predictions they actually issued (recorded before each update), against
// the realized value and, when the caller knows it, against the true mean.
#include <limits>
#include <variant>
#include <vector>

namespace ccb {

using Table = std::vector<std::vector<double>>;  // [context][arm] -> value in [-1, 1]
using FeatureTable = std::vector<std::vector<std::vector<double>>>;  // [context][arm][dim]

struct ErrorLedger {
  double vs_realized = 0.0;
  double vs_truth = 0.0;
  long long count = 0;
};

class FiniteClassOracle {
 public:
  explicit FiniteClassOracle(std::vector<Table> hypotheses, double eta = 0.125);

  std::vector<double> predict(int context) const;
  double predict(int context, int arm) const;

  // realized must lie in [-1, 1]. A finite truth feeds the vs_truth ledger.
  void update(int context, int arm, double realized,
              double truth = std::numeric_limits<double>::quiet_NaN());

  const ErrorLedger& ledger() const { return ledger_; }
  const std::vector<double>& log_weights() const { return log_weights_; }
  int num_hypotheses() const { return static_cast<int>(hypotheses_.size()); }
  int num_contexts() const { return static_cast<int>(hypotheses_[0].size()); }
  int num_arms() const { return static_cast<int>(hypotheses_[0][0].size()); }

 private:
  std::vector<Table> hypotheses_;
  std::vector<double> log_weights_;
  double eta_;
  ErrorLedger ledger_;
};

class LinearOracle {
 public:
  explicit LinearOracle(FeatureTable features, double regularizer = 1.0);

  std::vector<double> predict(int context) const;
  double predict(int context, int arm) const;
  void update(int context, int arm, double realized,
              double truth = std::numeric_limits<double>::quiet_NaN());

  const ErrorLedger& ledger() const { return ledger_; }
  const std::vector<double>& theta() const { return theta_; }
  int dim() const { return dim_; }
  int num_contexts() const { return static_cast<int>(features_.size()); }
  int num_arms() const { return static_cast<int>(features_[0].size()); }

 private:
  FeatureTable features_;
  int dim_;
  double reg_;
  std::vector<double> inv_gram_;  // dim x dim, row-major
  std::vector<double> b_;
  std::vector<double> theta_;
  ErrorLedger ledger_;
};

using RegressionOracle = std::variant<FiniteClassOracle, LinearOracle>;

std::vector<double> oracle_predict(const RegressionOracle& oracle, int context);
void oracle_update(RegressionOracle& oracle, int context, int arm, double realized,
                   double truth = std::numeric_limits<double>::quiet_NaN());
const ErrorLedger& oracle_ledger(const RegressionOracle& oracle);

// Cumulative squared error of the best fixed hypothesis table on a stream.
double best_fixed_table_error(const std::vector<Table>& hypotheses,
                              const std::vector<int>& contexts,
                              const std::vector<int>& arms,
                              const std::vector<double>& realized);

// Ridge-regularized comparator: the minimum over theta of
// sum (theta . phi - y)^2 + regularizer * |theta|^2 on the stream.
double best_ridge_error(const FeatureTable& features, const std::vector<int>& contexts,
                        const std::vector<int>& arms, const std::vector<double>& realized,
                        double regularizer);

// Oracle regret on a stream: issued-prediction error minus the best
// comparator error. Empty traces give zero on both sides.
inline double oracle_regret(double oracle_sq_error, double best_sq_error) {
  return oracle_sq_error - best_sq_error;
}

}  // namespace ccb
