#pragma once

#include <memory>
#include <variant>
#include <vector>

#include "lowhtr/linalg.hpp"
#include "lowhtr/rng.hpp"

namespace lowhtr::env {

using linalg::Index;
using linalg::Matrix;
using linalg::Vector;

enum class NoiseKind { StudentT, ParetoCentered, Laplace, Gaussian };

/// Tagged heavy-tailed noise distribution with its declared moment order
/// delta and moment bound c >= E|eta|^(1+delta). All kinds are zero-mean by
/// construction; the Pareto draw is shifted by its mean 1/(alpha-1).
struct NoiseModel {
  NoiseKind kind = NoiseKind::Gaussian;
  double param = 1.0;  // nu | alpha | scale | std, by kind
  double delta = 1.0;
  double c_bound = 1.0;

  static NoiseModel student_t(double nu = 1.7);
  static NoiseModel pareto(double alpha = 1.9);
  static NoiseModel laplace(double scale = 1.0);
  static NoiseModel gaussian(double stddev);

  void validate() const;
  const char* kind_name() const;
};

double sample_noise(const NoiseModel& model, rng::Engine& rng);

/// Minimal bandit surface the algorithms and harness run against.
class Bandit {
 public:
  virtual ~Bandit() = default;
  virtual Index d1() const = 0;
  virtual Index d2() const = 0;
  virtual double S() const = 0;
  virtual double noise_delta() const = 0;
  virtual double noise_c() const = 0;
  virtual const Matrix& theta_star() const = 0;
  /// True when the arm set does not change across rounds.
  virtual bool fixed_arms() const = 0;
  /// Arm set offered at a round (0-based); pure function of the instance
  /// seed and the round, so traces can be replayed.
  virtual const std::vector<Matrix>& arms(long round) = 0;
  /// Stochastic payoff of an arm; noise drawn from the supplied engine.
  virtual double reward(const Matrix& x, rng::Engine& noise_rng) const = 0;
  double mean_reward(const Matrix& x) const { return theta_star().cwiseProduct(x).sum(); }
  /// max_X <X, theta*> over the round's arm set; harness-side only.
  virtual double oracle_value(long round) = 0;
  virtual std::unique_ptr<Bandit> clone() const = 0;
};

struct FixedArms {
  std::vector<Matrix> arms;
};
struct ContextualArms {
  int per_round = 10;
};
using ArmSource = std::variant<FixedArms, ContextualArms>;

/// Synthetic LowHTR environment: linear payoffs <X, theta*> + eta with a
/// tagged noise model. Arm generation is a pure function of (seed, round);
/// the noise stream is owned by the caller so algorithm choices never
/// perturb it.
class Environment final : public Bandit {
 public:
  Environment(Matrix theta_star, int rank, ArmSource arms, NoiseModel noise,
              double arm_norm_bound, std::uint64_t seed);

  Index d1() const override { return theta_star_.rows(); }
  Index d2() const override { return theta_star_.cols(); }
  double S() const override { return S_; }
  double noise_delta() const override { return noise_.delta; }
  double noise_c() const override { return noise_.c_bound; }
  const Matrix& theta_star() const override { return theta_star_; }
  bool fixed_arms() const override;
  const std::vector<Matrix>& arms(long round) override;
  double reward(const Matrix& x, rng::Engine& noise_rng) const override;
  double oracle_value(long round) override;
  std::unique_ptr<Bandit> clone() const override;

  int rank() const { return rank_; }
  const NoiseModel& noise() const { return noise_; }
  std::uint64_t seed() const { return seed_; }
  double arm_norm_bound() const { return arm_norm_bound_; }

 private:
  void check_arm(const Matrix& x) const;

  Matrix theta_star_;
  int rank_;
  ArmSource source_;
  NoiseModel noise_;
  double arm_norm_bound_;
  double S_;
  std::uint64_t seed_;
  long cached_round_ = -1;
  std::vector<Matrix> cached_arms_;
  double cached_oracle_ = 0.0;
  double fixed_oracle_ = 0.0;
  bool fixed_oracle_ready_ = false;
};

/// theta* = diag(7, 4, 0, ...) at 10x10, fixed set of 500 arms drawn
/// uniformly from the Frobenius unit ball.
Environment gen_scenario1(std::uint64_t seed, NoiseModel noise);
/// theta* rows 1-2 orthogonal with norms 7 and 4, contextual source with 10
/// fresh unit-ball arms per round.
Environment gen_scenario2(std::uint64_t seed, NoiseModel noise);

/// Exact uniform draw from the Frobenius unit ball (normal direction, radius
/// u^(1/(d1*d2))).
Matrix sample_unit_ball(Index d1, Index d2, rng::Engine& rng);
/// iid N(0, 1/(d1*d2)) entries rescaled into the S-ball; the exploration
/// design used by estimator-only benchmarks.
Matrix sample_ball_design(Index d1, Index d2, double S, rng::Engine& rng);

/// Uniform draw over the round's arm set; returns the arm index.
int exploration_sample(Bandit& env, long round, rng::Engine& rng);

/// Hard instance from the regret lower bound: K = (d-1)r arms, one starred
/// arm with doubled mean payoff, rewards paying 1/gamma with probability
/// gamma * <X, theta*>.
struct LowerBoundInstance {
  std::vector<Matrix> arms;  // d x d each
  Matrix theta_star;
  double gamma = 0.0;
  double delta = 1.0;
  int starred_arm = 0;

  int K() const { return static_cast<int>(arms.size()); }
  double payoff_prob(const Matrix& x) const;
  /// <X_a, theta*> must be 2*gamma^delta for the starred arm and
  /// gamma^delta otherwise, all norms <= 1; throws on violation.
  void validate(double tol = 1e-12) const;
};

/// gamma = (K / (T + 2K))^(1/(1+delta)); the starred arm is chosen
/// uniformly from the seed. Parameters with 2*gamma^(1+delta) >= 1 are
/// rejected.
LowerBoundInstance gen_lower_bound_instance(int d, int r, double delta, long T,
                                            std::uint64_t seed);

class LowerBoundBandit final : public Bandit {
 public:
  explicit LowerBoundBandit(LowerBoundInstance inst);

  Index d1() const override { return inst_.theta_star.rows(); }
  Index d2() const override { return inst_.theta_star.cols(); }
  double S() const override { return 1.0; }
  double noise_delta() const override { return inst_.delta; }
  double noise_c() const override;
  const Matrix& theta_star() const override { return inst_.theta_star; }
  bool fixed_arms() const override { return true; }
  const std::vector<Matrix>& arms(long) override { return inst_.arms; }
  double reward(const Matrix& x, rng::Engine& noise_rng) const override;
  double oracle_value(long) override;
  std::unique_ptr<Bandit> clone() const override;

  const LowerBoundInstance& instance() const { return inst_; }

 private:
  LowerBoundInstance inst_;
};

}  // namespace lowhtr::env
