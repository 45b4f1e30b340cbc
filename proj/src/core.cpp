#include "mcco/core.hpp"

#include <cmath>

namespace mcco {

FeasibleSet FeasibleSet::box(const Vector& lo, const Vector& hi) {
  if (lo.size() != hi.size()) throw InvalidParams("box bounds must have equal length");
  if ((lo.array() > hi.array()).any()) throw InvalidParams("box lower bound exceeds upper bound");
  FeasibleSet s;
  s.kind = Kind::Box;
  s.dim = static_cast<int>(lo.size());
  s.lower = lo;
  s.upper = hi;
  return s;
}

FeasibleSet FeasibleSet::unbounded(int dim) {
  FeasibleSet s;
  s.kind = Kind::Custom;
  s.dim = dim;
  s.projector = [](const Vector& x) { return x; };
  return s;
}

FeasibleSet FeasibleSet::custom(int dim, std::function<Vector(const Vector&)> proj) {
  FeasibleSet s;
  s.kind = Kind::Custom;
  s.dim = dim;
  s.projector = std::move(proj);
  return s;
}

Vector project(const FeasibleSet& set, const Vector& x) {
  if (x.size() != set.dim)
    throw DimensionMismatch(0, "projection input has length " + std::to_string(x.size()) +
                                   ", feasible set has dimension " + std::to_string(set.dim));
  if (set.kind == FeasibleSet::Kind::Box)
    return x.cwiseMax(set.lower).cwiseMin(set.upper);
  return set.projector(x);
}

double ProblemConstants::b_constant(int p) const {
  auto it = B.find(p);
  if (it != B.end()) return it->second;
  if (p == 2) return 1.0;
  return std::pow(static_cast<double>(p - 1), p / 2.0);
}

double ProblemConstants::lip_product(int from, int to) const {
  double prod = 1.0;
  for (int s = from; s <= to; ++s) {
    if (s < 1 || s > static_cast<int>(L.size()))
      throw MissingConstant("Lipschitz constant L_" + std::to_string(s) + " not supplied");
    prod *= L[static_cast<std::size_t>(s) - 1];
  }
  return prod;
}

namespace {

Vector probe_argument(const MccoProblem& problem, int t) {
  if (!problem.probe_points.empty()) {
    const Vector& p = problem.probe_points[static_cast<std::size_t>(t) - 1];
    if (p.size() > 0) return p;
  }
  return Vector::Ones(problem.dims[static_cast<std::size_t>(t)]);
}

}  // namespace

void validate_problem(const MccoProblem& problem, ValidateMode mode) {
  const int T = problem.num_stages;
  if (T < 1) throw InvalidParams("problem needs at least one stage");
  if (static_cast<int>(problem.dims.size()) != T + 1)
    throw DimensionMismatch(0, "dims must list d_0..d_T (" + std::to_string(T + 1) +
                                   " entries), got " + std::to_string(problem.dims.size()));
  if (problem.dims[0] != 1)
    throw DimensionMismatch(0, "d_0 must equal 1, got " + std::to_string(problem.dims[0]));
  for (int t = 0; t <= T; ++t)
    if (problem.dims[static_cast<std::size_t>(t)] < 1)
      throw DimensionMismatch(t, "dimension d_" + std::to_string(t) + " must be positive");
  if (static_cast<int>(problem.noise_dims.size()) != T)
    throw DimensionMismatch(0, "noise_dims must list m_1..m_T");
  if (static_cast<int>(problem.samplers.size()) != T) throw MissingStage("expected " + std::to_string(T) + " samplers");
  if (static_cast<int>(problem.integrands.size()) != T)
    throw MissingStage("expected " + std::to_string(T) + " integrands");
  for (int t = 1; t <= T; ++t) {
    const Integrand& f = problem.integrands[static_cast<std::size_t>(t) - 1];
    if (!problem.samplers[static_cast<std::size_t>(t) - 1]) throw MissingStage("sampler missing at stage " + std::to_string(t));
    if (!f.value) throw MissingStage("integrand missing at stage " + std::to_string(t));
    if (mode == ValidateMode::Gradient && (!f.smooth || !f.jacobian))
      throw NotDifferentiable("stage " + std::to_string(t) +
                              " is declared nonsmooth or lacks a Jacobian; gradient estimation refused");
  }
  if (problem.feasible_set.dim != problem.decision_dim())
    throw DimensionMismatch(T, "feasible set dimension " + std::to_string(problem.feasible_set.dim) +
                                   " does not match d_T = " + std::to_string(problem.decision_dim()));
  // Probe each stage once to catch transposed or mis-sized evaluators.
  for (int t = 1; t <= T; ++t) {
    Vector xi = Vector::Zero(problem.noise_dims[static_cast<std::size_t>(t) - 1]);
    Vector arg = probe_argument(problem, t);
    evaluate_integrand(problem, t, xi, arg);
    const Integrand& f = problem.integrands[static_cast<std::size_t>(t) - 1];
    if (f.jacobian) integrand_jacobian(problem, t, xi, arg);
  }
}

Vector evaluate_integrand(const MccoProblem& problem, int t, const Vector& xi, const Vector& x_t) {
  if (t < 1 || t > problem.num_stages)
    throw MissingStage("stage " + std::to_string(t) + " outside 1.." + std::to_string(problem.num_stages));
  const int m_t = problem.noise_dims[static_cast<std::size_t>(t) - 1];
  const int d_t = problem.dims[static_cast<std::size_t>(t)];
  const int d_prev = problem.dims[static_cast<std::size_t>(t) - 1];
  if (xi.size() != m_t)
    throw DimensionMismatch(t, "noise vector has length " + std::to_string(xi.size()) + ", expected " +
                                   std::to_string(m_t));
  if (x_t.size() != d_t)
    throw DimensionMismatch(t, "argument has length " + std::to_string(x_t.size()) + ", expected " +
                                   std::to_string(d_t));
  Vector out = problem.integrands[static_cast<std::size_t>(t) - 1].value(xi, x_t);
  if (out.size() != d_prev)
    throw DimensionMismatch(t, "integrand returned length " + std::to_string(out.size()) + ", expected " +
                                   std::to_string(d_prev));
  return out;
}

Matrix integrand_jacobian(const MccoProblem& problem, int t, const Vector& xi, const Vector& x_t) {
  if (t < 1 || t > problem.num_stages)
    throw MissingStage("stage " + std::to_string(t) + " outside 1.." + std::to_string(problem.num_stages));
  const Integrand& f = problem.integrands[static_cast<std::size_t>(t) - 1];
  if (!f.smooth || !f.jacobian)
    throw NotDifferentiable("stage " + std::to_string(t) + " is marked nonsmooth");
  const int d_t = problem.dims[static_cast<std::size_t>(t)];
  const int d_prev = problem.dims[static_cast<std::size_t>(t) - 1];
  if (x_t.size() != d_t)
    throw DimensionMismatch(t, "argument has length " + std::to_string(x_t.size()) + ", expected " +
                                   std::to_string(d_t));
  Matrix jac = f.jacobian(xi, x_t);
  if (jac.rows() != d_t || jac.cols() != d_prev)
    throw DimensionMismatch(t, "Jacobian has shape " + std::to_string(jac.rows()) + "x" +
                                   std::to_string(jac.cols()) + ", expected " + std::to_string(d_t) + "x" +
                                   std::to_string(d_prev));
  return jac;
}

}  // namespace mcco
