#pragma once

#include <Eigen/Core>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcco/errors.hpp"
#include "mcco/rng.hpp"

namespace mcco {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Observation history xi_1..xi_t along one tree path. Append-only; used as a
// stack during depth-first tree evaluation.
class SamplePath {
 public:
  void push(const Vector& xi) { values_.push_back(xi); }
  void pop() { values_.pop_back(); }
  int length() const { return static_cast<int>(values_.size()); }
  const Vector& at(int t) const { return values_[static_cast<std::size_t>(t) - 1]; }  // 1-based
  const std::vector<Vector>& values() const { return values_; }

 private:
  std::vector<Vector> values_;
};

// Feasible set with Euclidean projection. Box sets project by coordinatewise
// clamping; custom sets supply their own projector.
struct FeasibleSet {
  enum class Kind { Box, Custom };

  Kind kind = Kind::Box;
  int dim = 1;
  Vector lower;  // box only
  Vector upper;  // box only
  std::function<Vector(const Vector&)> projector;  // custom only

  static FeasibleSet box(const Vector& lo, const Vector& hi);
  static FeasibleSet unbounded(int dim);
  static FeasibleSet custom(int dim, std::function<Vector(const Vector&)> proj);
};

Vector project(const FeasibleSet& set, const Vector& x);

// One stage integrand f_t: (xi_t, x_t) -> R^{d_{t-1}}, with the transposed
// Jacobian nabla_{x_t} f_t of shape d_t x d_{t-1}. Stages may declare
// themselves nonsmooth, in which case gradient paths refuse the problem at
// validation time.
struct Integrand {
  std::function<Vector(const Vector& xi, const Vector& x)> value;
  std::function<Matrix(const Vector& xi, const Vector& x)> jacobian;  // may be empty
  bool smooth = true;
};

// Conditional sampler for xi_t given the full history xi_{[t-1]} (empty for
// t = 1). Markov adapters simply ignore the prefix.
using Sampler = std::function<Vector(const SamplePath& history, RngStream& rng)>;

// The T-stage nested-expectation problem: dimension chain d_0..d_T with
// d_0 = 1, noise dimensions m_1..m_T, per-stage conditional samplers and
// integrands, and the feasible set over R^{d_T}. Immutable after
// construction; evaluators must be pure so trees can run concurrently.
struct MccoProblem {
  int num_stages = 0;              // T
  std::vector<int> dims;           // d_0..d_T, size T+1
  std::vector<int> noise_dims;     // m_1..m_T, size T
  std::vector<Sampler> samplers;   // size T; samplers[0] is the marginal law of xi_1
  std::vector<Integrand> integrands;  // size T
  FeasibleSet feasible_set;
  // Optional per-stage probe arguments used by validate_problem to exercise
  // the evaluators; defaults to ones(d_t). Adapters whose integrands are not
  // defined at ones (e.g. matrix inverses) override this.
  std::vector<Vector> probe_points;

  int decision_dim() const { return dims.back(); }
};

// Known or pilot-estimated problem constants feeding the schedule formulas.
// All supplied entries must be strictly positive.
struct ProblemConstants {
  std::vector<double> L;      // Lipschitz constants L_1..L_T
  std::vector<double> S;      // smoothness constants S_1..S_T
  std::vector<double> sigma;  // conditional standard deviations sigma_1..sigma_T
  std::map<int, double> mu_bar;  // p -> terminal moment bound mu_bar_T^p
  std::map<int, double> nu_bar;  // p -> terminal gradient moment bound
  std::vector<double> R;      // Hoelder constants R_1..R_{T-1}
  std::vector<double> rho;    // Hoelder exponents rho_1..rho_{T-1}
  std::optional<double> zeta2;    // sub-Gaussian variance proxy
  std::map<int, double> B;        // p -> universal constant B_p (see b_constant)
  std::optional<double> D_X;      // feasible-set diameter
  std::optional<int> d;           // decision dimension
  std::optional<double> L_prime;  // Lipschitz constant of the MLMC estimator
  std::vector<int> dims;          // intermediate d_1..d_{T-1}; defaults to 1s

  // B_2 = 1 (exact for second moments of centered averages); B_p for p > 2
  // defaults to (p-1)^{p/2} unless overridden.
  double b_constant(int p) const;
  double lip_product(int from, int to) const;  // prod_{s=from}^{to} L_s, 1 if empty
};

enum class ValidateMode { Value, Gradient };

// Structural validation: d_0 = 1, T >= 1, consistent dimension chain, every
// declared evaluator present, and a probe evaluation of each stage to catch
// shape bugs early. Gradient mode additionally requires every stage to be
// smooth with a Jacobian.
void validate_problem(const MccoProblem& problem, ValidateMode mode = ValidateMode::Value);

// f_t(xi, x_t) with shape checks; stages are 1-based.
Vector evaluate_integrand(const MccoProblem& problem, int t, const Vector& xi, const Vector& x_t);

// nabla_{x_t} f_t(xi, x_t), shape d_t x d_{t-1}.
Matrix integrand_jacobian(const MccoProblem& problem, int t, const Vector& xi, const Vector& x_t);

}  // namespace mcco
