#include "lowhtr/env.hpp"

#include <cmath>
#include <limits>

#include "lowhtr/common.hpp"

namespace lowhtr::env {
namespace {

// Sub-stream tags for deriving independent engines from an instance seed.
constexpr std::uint64_t kArmStream = 0xa1;

double max_mean_reward(const Matrix& theta, const std::vector<Matrix>& arms) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& x : arms) best = std::max(best, theta.cwiseProduct(x).sum());
  return best;
}

}  // namespace

NoiseModel NoiseModel::student_t(double nu) { return {NoiseKind::StudentT, nu, 0.5, 6.0}; }
NoiseModel NoiseModel::pareto(double alpha) { return {NoiseKind::ParetoCentered, alpha, 0.5, 5.0}; }
NoiseModel NoiseModel::laplace(double scale) { return {NoiseKind::Laplace, scale, 1.0, 2.0}; }
NoiseModel NoiseModel::gaussian(double stddev) {
  return {NoiseKind::Gaussian, stddev, 1.0, std::max(stddev * stddev, 1e-12)};
}

void NoiseModel::validate() const {
  if (!(delta > 0.0) || delta > 1.0) throw InputError("NoiseModel: delta must be in (0,1]");
  if (!(c_bound > 0.0)) throw InputError("NoiseModel: c_bound must be positive");
  switch (kind) {
    case NoiseKind::StudentT:
      if (!(param > 1.0 + delta))
        throw InputError("NoiseModel: Student-t requires nu > 1 + delta");
      break;
    case NoiseKind::ParetoCentered:
      if (!(param > 1.0 + delta))
        throw InputError("NoiseModel: Pareto requires alpha > 1 + delta");
      break;
    case NoiseKind::Laplace:
      if (!(param > 0.0)) throw InputError("NoiseModel: Laplace scale must be positive");
      break;
    case NoiseKind::Gaussian:
      if (param < 0.0) throw InputError("NoiseModel: Gaussian std must be non-negative");
      break;
  }
}

const char* NoiseModel::kind_name() const {
  switch (kind) {
    case NoiseKind::StudentT: return "student_t";
    case NoiseKind::ParetoCentered: return "pareto";
    case NoiseKind::Laplace: return "laplace";
    case NoiseKind::Gaussian: return "gaussian";
  }
  return "unknown";
}

double sample_noise(const NoiseModel& model, rng::Engine& rng) {
  model.validate();
  switch (model.kind) {
    case NoiseKind::StudentT:
      return rng.student_t(model.param);
    case NoiseKind::ParetoCentered:
      return rng.pareto_raw(model.param) - 1.0 / (model.param - 1.0);
    case NoiseKind::Laplace:
      return rng.laplace(model.param);
    case NoiseKind::Gaussian:
      return model.param == 0.0 ? 0.0 : model.param * rng.normal();
  }
  throw InputError("sample_noise: unknown kind");
}

Environment::Environment(Matrix theta_star, int rank, ArmSource arms, NoiseModel noise,
                         double arm_norm_bound, std::uint64_t seed)
    : theta_star_(std::move(theta_star)),
      rank_(rank),
      source_(std::move(arms)),
      noise_(noise),
      arm_norm_bound_(arm_norm_bound),
      seed_(seed) {
  noise_.validate();
  if (!theta_star_.allFinite()) throw InputError("Environment: non-finite theta_star");
  if (!(arm_norm_bound_ > 0.0)) throw InputError("Environment: arm norm bound must be positive");
  Vector sv = linalg::full_svd(theta_star_).singular_values;
  if (rank_ < 1 || rank_ > sv.size() || (rank_ < sv.size() && sv[rank_] > 1e-10))
    throw InputError("Environment: declared rank does not match theta_star");
  S_ = std::max(theta_star_.norm(), arm_norm_bound_);
  if (const auto* fixed = std::get_if<FixedArms>(&source_)) {
    if (fixed->arms.empty()) throw InputError("Environment: empty fixed arm set");
    for (const auto& x : fixed->arms) check_arm(x);
  } else if (std::get<ContextualArms>(source_).per_round < 1) {
    throw InputError("Environment: contextual arm count must be >= 1");
  }
}

void Environment::check_arm(const Matrix& x) const {
  if (x.rows() != d1() || x.cols() != d2())
    throw InputError("Environment: arm dimension mismatch");
  if (x.norm() > arm_norm_bound_ * (1.0 + 1e-12))
    throw NumericError("Environment: generated arm violates the norm bound", x.norm());
}

bool Environment::fixed_arms() const { return std::holds_alternative<FixedArms>(source_); }

const std::vector<Matrix>& Environment::arms(long round) {
  if (const auto* fixed = std::get_if<FixedArms>(&source_)) return fixed->arms;
  if (round != cached_round_) {
    const auto& ctx = std::get<ContextualArms>(source_);
    auto rng = rng::Engine::substream(seed_, kArmStream, static_cast<std::uint64_t>(round));
    cached_arms_.clear();
    cached_arms_.reserve(ctx.per_round);
    for (int i = 0; i < ctx.per_round; ++i) {
      Matrix x = sample_unit_ball(d1(), d2(), rng) * arm_norm_bound_;
      check_arm(x);
      cached_arms_.push_back(std::move(x));
    }
    cached_round_ = round;
    cached_oracle_ = max_mean_reward(theta_star_, cached_arms_);
  }
  return cached_arms_;
}

double Environment::reward(const Matrix& x, rng::Engine& noise_rng) const {
  return theta_star_.cwiseProduct(x).sum() + sample_noise(noise_, noise_rng);
}

double Environment::oracle_value(long round) {
  if (fixed_arms()) {
    if (!fixed_oracle_ready_) {
      fixed_oracle_ = max_mean_reward(theta_star_, std::get<FixedArms>(source_).arms);
      fixed_oracle_ready_ = true;
    }
    return fixed_oracle_;
  }
  arms(round);
  return cached_oracle_;
}

std::unique_ptr<Bandit> Environment::clone() const {
  return std::make_unique<Environment>(*this);
}

Matrix sample_unit_ball(Index d1, Index d2, rng::Engine& rng) {
  Matrix g(d1, d2);
  for (Index j = 0; j < d2; ++j)
    for (Index i = 0; i < d1; ++i) g(i, j) = rng.normal();
  const double radius = std::pow(rng.uniform_strict(), 1.0 / static_cast<double>(d1 * d2));
  return g * (radius / g.norm());
}

Matrix sample_ball_design(Index d1, Index d2, double S, rng::Engine& rng) {
  const double sd = 1.0 / std::sqrt(static_cast<double>(d1 * d2));
  Matrix x(d1, d2);
  for (Index j = 0; j < d2; ++j)
    for (Index i = 0; i < d1; ++i) x(i, j) = sd * rng.normal();
  const double norm = x.norm();
  if (norm > S) x *= S / norm;
  return x;
}

int exploration_sample(Bandit& env, long round, rng::Engine& rng) {
  const auto& arms = env.arms(round);
  if (arms.empty()) throw InputError("exploration_sample: empty arm set");
  return static_cast<int>(rng.uniform_int(static_cast<std::int64_t>(arms.size())));
}

Environment gen_scenario1(std::uint64_t seed, NoiseModel noise) {
  const Index d = 10;
  Matrix theta = Matrix::Zero(d, d);
  theta(0, 0) = 7.0;
  theta(1, 1) = 4.0;
  auto rng = rng::Engine::substream(seed, kArmStream);
  FixedArms arms;
  arms.arms.reserve(500);
  for (int i = 0; i < 500; ++i) arms.arms.push_back(sample_unit_ball(d, d, rng));
  return Environment(std::move(theta), 2, std::move(arms), noise, 1.0, seed);
}

Environment gen_scenario2(std::uint64_t seed, NoiseModel noise) {
  const Index d = 10;
  auto rng = rng::Engine::substream(seed, kArmStream ^ 0x5c);
  Vector row1(d);
  Vector row2(d);
  for (Index i = 0; i < d; ++i) row1[i] = rng.normal();
  for (Index i = 0; i < d; ++i) row2[i] = rng.normal();
  row1 *= 7.0 / row1.norm();
  row2 -= row1 * (row1.dot(row2) / row1.squaredNorm());
  row2 *= 4.0 / row2.norm();
  Matrix theta = Matrix::Zero(d, d);
  theta.row(0) = row1.transpose();
  theta.row(1) = row2.transpose();
  return Environment(std::move(theta), 2, ContextualArms{10}, noise, 1.0, seed);
}

double LowerBoundInstance::payoff_prob(const Matrix& x) const {
  return gamma * theta_star.cwiseProduct(x).sum();
}

void LowerBoundInstance::validate(double tol) const {
  const double base = std::pow(gamma, delta);
  for (int a = 0; a < K(); ++a) {
    const double ip = theta_star.cwiseProduct(arms[a]).sum();
    const double want = a == starred_arm ? 2.0 * base : base;
    if (std::fabs(ip - want) > tol)
      throw NumericError("LowerBoundInstance: inner product off construction", ip - want);
    if (arms[a].norm() > 1.0 + tol)
      throw NumericError("LowerBoundInstance: arm norm exceeds 1", arms[a].norm());
    const double p = payoff_prob(arms[a]);
    if (p <= 0.0 || p >= 1.0)
      throw NumericError("LowerBoundInstance: payoff probability outside (0,1)", p);
  }
}

LowerBoundInstance gen_lower_bound_instance(int d, int r, double delta, long T,
                                            std::uint64_t seed) {
  if (d < 3) throw InputError("gen_lower_bound_instance: d must be >= 3");
  if (r < 1 || (d - 1) * r < 4)
    throw InputError("gen_lower_bound_instance: need (d-1)*r >= 4");
  if (!(delta > 0.0) || delta > 1.0)
    throw InputError("gen_lower_bound_instance: delta in (0,1]");
  if (T < 0) throw InputError("gen_lower_bound_instance: T must be non-negative");
  const int K = (d - 1) * r;
  const double gamma = std::pow(static_cast<double>(K) / static_cast<double>(T + 2L * K),
                                1.0 / (1.0 + delta));
  if (2.0 * std::pow(gamma, 1.0 + delta) >= 1.0)
    throw InputError("gen_lower_bound_instance: 2*gamma^(1+delta) must be < 1");

  LowerBoundInstance inst;
  inst.gamma = gamma;
  inst.delta = delta;
  auto rng = rng::Engine::substream(seed, 0xf0);
  inst.starred_arm = static_cast<int>(rng.uniform_int(K));

  // Shared first column: entries sqrt(i / (r(r+1))) in the first r rows.
  Vector first_col = Vector::Zero(d);
  const double denom = static_cast<double>(r) * (r + 1);
  for (int i = 1; i <= r; ++i) first_col[i - 1] = std::sqrt(static_cast<double>(i) / denom);

  // The remaining (d-1)*r slots in the first r rows are flattened
  // column-major; arm a owns slot a.
  auto slot = [&](int a) {
    const int row = a % r;
    const int col = 1 + a / r;
    return std::pair<int, int>{row, col};
  };

  inst.arms.reserve(K);
  for (int a = 0; a < K; ++a) {
    Matrix x = Matrix::Zero(d, d);
    x.col(0).head(d) = first_col;
    auto [row, col] = slot(a);
    x(row, col) = 1.0 / std::sqrt(2.0);
    inst.arms.push_back(std::move(x));
  }

  const double base = std::pow(gamma, delta);
  inst.theta_star = Matrix::Zero(d, d);
  inst.theta_star.col(0).head(d) = 2.0 * base * first_col;
  auto [srow, scol] = slot(inst.starred_arm);
  inst.theta_star(srow, scol) = std::sqrt(2.0) * base;

  inst.validate();
  return inst;
}

LowerBoundBandit::LowerBoundBandit(LowerBoundInstance inst) : inst_(std::move(inst)) {
  inst_.validate();
}

double LowerBoundBandit::noise_c() const {
  // E|y - Ey|^(1+delta) <= p*(1/gamma)^(1+delta) + mu^(1+delta) <= 2 + (2 gamma^delta)^(1+delta).
  return 3.0;
}

double LowerBoundBandit::reward(const Matrix& x, rng::Engine& noise_rng) const {
  const double p = inst_.payoff_prob(x);
  return noise_rng.bernoulli(p) ? 1.0 / inst_.gamma : 0.0;
}

double LowerBoundBandit::oracle_value(long) { return 2.0 * std::pow(inst_.gamma, inst_.delta); }

std::unique_ptr<Bandit> LowerBoundBandit::clone() const {
  return std::make_unique<LowerBoundBandit>(*this);
}

}  // namespace lowhtr::env
