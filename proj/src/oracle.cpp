#include "ccb/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ccb {

namespace {

void check_value_range(double v, const char* what) {
  if (!(v >= -1.0 - 1e-12 && v <= 1.0 + 1e-12)) {
    throw std::invalid_argument(std::string(what) + " outside [-1, 1]");
  }
}

// Solves a (small) symmetric positive definite system by Gaussian elimination
// with partial pivoting. a is row-major n x n and is destroyed.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> rhs, int n) {
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::fabs(a[r * n + col]) > std::fabs(a[pivot * n + col])) pivot = r;
    }
    if (a[pivot * n + col] == 0.0) throw std::runtime_error("solve_dense: singular matrix");
    if (pivot != col) {
      for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
      std::swap(rhs[col], rhs[pivot]);
    }
    for (int r = col + 1; r < n; ++r) {
      double f = a[r * n + col] / a[col * n + col];
      for (int c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double s = rhs[r];
    for (int c = r + 1; c < n; ++c) s -= a[r * n + c] * x[c];
    x[r] = s / a[r * n + r];
  }
  return x;
}

}  // namespace

FiniteClassOracle::FiniteClassOracle(std::vector<Table> hypotheses, double eta)
    : hypotheses_(std::move(hypotheses)), eta_(eta) {
  if (hypotheses_.empty()) {
    throw std::invalid_argument("FiniteClassOracle: empty hypothesis class");
  }
  if (!(eta_ > 0.0)) throw std::invalid_argument("FiniteClassOracle: eta must be > 0");
  const std::size_t nx = hypotheses_[0].size();
  if (nx == 0) throw std::invalid_argument("FiniteClassOracle: no contexts");
  const std::size_t na = hypotheses_[0][0].size();
  if (na == 0) throw std::invalid_argument("FiniteClassOracle: no arms");
  for (const Table& h : hypotheses_) {
    if (h.size() != nx) throw std::invalid_argument("FiniteClassOracle: ragged class");
    for (const std::vector<double>& row : h) {
      if (row.size() != na) throw std::invalid_argument("FiniteClassOracle: ragged table");
      for (double v : row) check_value_range(v, "FiniteClassOracle: hypothesis value");
    }
  }
  log_weights_.assign(hypotheses_.size(), 0.0);
}

std::vector<double> FiniteClassOracle::predict(int context) const {
  if (context < 0 || context >= num_contexts()) {
    throw std::invalid_argument("FiniteClassOracle: context out of range");
  }
  const double lw_max = *std::max_element(log_weights_.begin(), log_weights_.end());
  double z = 0.0;
  std::vector<double> out(hypotheses_[0][0].size(), 0.0);
  for (std::size_t i = 0; i < hypotheses_.size(); ++i) {
    const double w = std::exp(log_weights_[i] - lw_max);
    z += w;
    const std::vector<double>& row = hypotheses_[i][context];
    for (std::size_t a = 0; a < out.size(); ++a) out[a] += w * row[a];
  }
  for (double& v : out) v /= z;
  return out;
}

double FiniteClassOracle::predict(int context, int arm) const {
  std::vector<double> row = predict(context);
  if (arm < 0 || arm >= static_cast<int>(row.size())) {
    throw std::invalid_argument("FiniteClassOracle: arm out of range");
  }
  return row[arm];
}

void FiniteClassOracle::update(int context, int arm, double realized, double truth) {
  check_value_range(realized, "FiniteClassOracle: realized value");
  const double pred = predict(context, arm);
  ledger_.vs_realized += (pred - realized) * (pred - realized);
  if (std::isfinite(truth)) ledger_.vs_truth += (pred - truth) * (pred - truth);
  ++ledger_.count;
  for (std::size_t i = 0; i < hypotheses_.size(); ++i) {
    const double d = hypotheses_[i][context][arm] - realized;
    log_weights_[i] -= eta_ * d * d;
  }
}

LinearOracle::LinearOracle(FeatureTable features, double regularizer)
    : features_(std::move(features)), reg_(regularizer) {
  if (!(reg_ > 0.0)) throw std::invalid_argument("LinearOracle: regularizer must be > 0");
  if (features_.empty() || features_[0].empty() || features_[0][0].empty()) {
    throw std::invalid_argument("LinearOracle: empty feature table");
  }
  dim_ = static_cast<int>(features_[0][0].size());
  const std::size_t na = features_[0].size();
  for (const auto& ctx : features_) {
    if (ctx.size() != na) throw std::invalid_argument("LinearOracle: ragged feature table");
    for (const auto& phi : ctx) {
      if (static_cast<int>(phi.size()) != dim_) {
        throw std::invalid_argument("LinearOracle: ragged feature vector");
      }
    }
  }
  inv_gram_.assign(static_cast<std::size_t>(dim_) * dim_, 0.0);
  for (int i = 0; i < dim_; ++i) inv_gram_[i * dim_ + i] = 1.0 / reg_;
  b_.assign(dim_, 0.0);
  theta_.assign(dim_, 0.0);
}

std::vector<double> LinearOracle::predict(int context) const {
  if (context < 0 || context >= num_contexts()) {
    throw std::invalid_argument("LinearOracle: context out of range");
  }
  std::vector<double> out(features_[context].size(), 0.0);
  for (std::size_t a = 0; a < out.size(); ++a) {
    double v = 0.0;
    const std::vector<double>& phi = features_[context][a];
    for (int i = 0; i < dim_; ++i) v += theta_[i] * phi[i];
    out[a] = std::clamp(v, -1.0, 1.0);
  }
  return out;
}

double LinearOracle::predict(int context, int arm) const {
  std::vector<double> row = predict(context);
  if (arm < 0 || arm >= static_cast<int>(row.size())) {
    throw std::invalid_argument("LinearOracle: arm out of range");
  }
  return row[arm];
}

void LinearOracle::update(int context, int arm, double realized, double truth) {
  check_value_range(realized, "LinearOracle: realized value");
  const double pred = predict(context, arm);
  ledger_.vs_realized += (pred - realized) * (pred - realized);
  if (std::isfinite(truth)) ledger_.vs_truth += (pred - truth) * (pred - truth);
  ++ledger_.count;

  const std::vector<double>& phi = features_[context][arm];
  std::vector<double> u(dim_, 0.0);
  for (int r = 0; r < dim_; ++r) {
    for (int c = 0; c < dim_; ++c) u[r] += inv_gram_[r * dim_ + c] * phi[c];
  }
  double denom = 1.0;
  for (int i = 0; i < dim_; ++i) denom += phi[i] * u[i];
  for (int r = 0; r < dim_; ++r) {
    for (int c = 0; c < dim_; ++c) inv_gram_[r * dim_ + c] -= u[r] * u[c] / denom;
  }
  for (int i = 0; i < dim_; ++i) b_[i] += realized * phi[i];
  for (int r = 0; r < dim_; ++r) {
    double s = 0.0;
    for (int c = 0; c < dim_; ++c) s += inv_gram_[r * dim_ + c] * b_[c];
    theta_[r] = s;
  }
}

std::vector<double> oracle_predict(const RegressionOracle& oracle, int context) {
  return std::visit([context](const auto& o) { return o.predict(context); }, oracle);
}

void oracle_update(RegressionOracle& oracle, int context, int arm, double realized,
                   double truth) {
  std::visit([&](auto& o) { o.update(context, arm, realized, truth); }, oracle);
}

const ErrorLedger& oracle_ledger(const RegressionOracle& oracle) {
  return std::visit([](const auto& o) -> const ErrorLedger& { return o.ledger(); }, oracle);
}

double best_fixed_table_error(const std::vector<Table>& hypotheses,
                              const std::vector<int>& contexts,
                              const std::vector<int>& arms,
                              const std::vector<double>& realized) {
  if (contexts.size() != arms.size() || contexts.size() != realized.size()) {
    throw std::invalid_argument("best_fixed_table_error: stream length mismatch");
  }
  if (hypotheses.empty()) {
    throw std::invalid_argument("best_fixed_table_error: empty hypothesis class");
  }
  double best = std::numeric_limits<double>::infinity();
  for (const Table& h : hypotheses) {
    double err = 0.0;
    for (std::size_t t = 0; t < contexts.size(); ++t) {
      const double d = h[contexts[t]][arms[t]] - realized[t];
      err += d * d;
    }
    best = std::min(best, err);
  }
  return contexts.empty() ? 0.0 : best;
}

double best_ridge_error(const FeatureTable& features, const std::vector<int>& contexts,
                        const std::vector<int>& arms, const std::vector<double>& realized,
                        double regularizer) {
  if (contexts.size() != arms.size() || contexts.size() != realized.size()) {
    throw std::invalid_argument("best_ridge_error: stream length mismatch");
  }
  if (!(regularizer > 0.0)) {
    throw std::invalid_argument("best_ridge_error: regularizer must be > 0");
  }
  if (contexts.empty()) return 0.0;
  const int d = static_cast<int>(features[0][0].size());
  std::vector<double> gram(static_cast<std::size_t>(d) * d, 0.0);
  std::vector<double> rhs(d, 0.0);
  for (int i = 0; i < d; ++i) gram[i * d + i] = regularizer;
  for (std::size_t t = 0; t < contexts.size(); ++t) {
    const std::vector<double>& phi = features[contexts[t]][arms[t]];
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) gram[r * d + c] += phi[r] * phi[c];
      rhs[r] += realized[t] * phi[r];
    }
  }
  const std::vector<double> theta = solve_dense(gram, rhs, d);
  double err = 0.0;
  for (std::size_t t = 0; t < contexts.size(); ++t) {
    const std::vector<double>& phi = features[contexts[t]][arms[t]];
    double v = 0.0;
    for (int i = 0; i < d; ++i) v += theta[i] * phi[i];
    const double diff = v - realized[t];
    err += diff * diff;
  }
  double norm2 = 0.0;
  for (int i = 0; i < d; ++i) norm2 += theta[i] * theta[i];
  return err + regularizer * norm2;
}

}  // namespace ccb
