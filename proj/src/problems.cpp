#include "mcco/problems.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>
#include <string>

namespace mcco {

namespace {

constexpr double kLogFloor = 1e-12;   // keeps log/pow integrands defined on wild inner estimates
constexpr double kExpCap = 300.0;     // caps exp exponents so tree values stay finite

Vector scalar(double v) {
  Vector out(1);
  out(0) = v;
  return out;
}

Matrix scalar_matrix(double v) {
  Matrix out(1, 1);
  out(0, 0) = v;
  return out;
}

void require_symmetric_psd(const Matrix& m, const std::string& name) {
  if (m.rows() != m.cols()) throw InvalidParams(name + " must be square");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + m.cwiseAbs().maxCoeff()))
    throw InvalidParams(name + " must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eigen(m);
  if (eigen.eigenvalues().minCoeff() < -1e-9 * (1.0 + m.cwiseAbs().maxCoeff()))
    throw InvalidParams(name + " must be positive semidefinite");
}

Matrix cholesky_factor(const Matrix& cov, const std::string& name) {
  if (cov.isZero(0.0)) return Matrix::Zero(cov.rows(), cov.cols());
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) throw InvalidParams(name + " must be positive definite (or zero)");
  return llt.matrixL();
}

// --- synthetic --------------------------------------------------------------

BuiltProblem build_synthetic(const SyntheticParams&) {
  MccoProblem p;
  p.num_stages = 3;
  p.dims = {1, 1, 1, 1};
  p.noise_dims = {1, 1, 1};
  p.samplers = {
      [](const SamplePath&, RngStream& rng) { return scalar(rng.normal(M_PI / 2.0, 1.0)); },
      [](const SamplePath& h, RngStream& rng) { return scalar(rng.normal(h.at(1)(0), 1.0)); },
      [](const SamplePath& h, RngStream& rng) { return scalar(rng.normal(h.at(2)(0), 1.0)); },
  };
  p.integrands = {
      {[](const Vector& xi, const Vector& x) { return scalar(std::sin(xi(0) + x(0))); },
       [](const Vector& xi, const Vector& x) { return scalar_matrix(std::cos(xi(0) + x(0))); }, true},
      {[](const Vector& xi, const Vector& x) { return scalar(std::sin(xi(0) - x(0))); },
       [](const Vector& xi, const Vector& x) { return scalar_matrix(-std::cos(xi(0) - x(0))); }, true},
      {[](const Vector& xi, const Vector&) { return scalar(xi(0)); },
       [](const Vector&, const Vector&) { return scalar_matrix(0.0); }, true},
  };
  p.feasible_set = FeasibleSet::box(scalar(-1.0), scalar(1.0));
  return {p, scalar(0.0)};
}

// --- optimal stopping / Bermudan --------------------------------------------

BuiltProblem build_stopping(const StoppingParams& params) {
  const int T = static_cast<int>(params.payoffs.size());
  if (T < 1) throw InvalidParams("stopping problem needs at least one payoff");
  if (static_cast<int>(params.samplers.size()) != T || static_cast<int>(params.noise_dims.size()) != T)
    throw InvalidParams("payoffs, samplers and noise_dims must have equal length");
  if (!(params.discount > 0.0)) throw InvalidParams("discount must be positive");

  MccoProblem p;
  p.num_stages = T;
  p.dims.assign(static_cast<std::size_t>(T) + 1, 1);
  p.noise_dims = params.noise_dims;
  p.samplers = params.samplers;
  p.integrands.resize(static_cast<std::size_t>(T));
  const double discount = params.discount;
  for (int t = 1; t <= T; ++t) {
    auto payoff = params.payoffs[static_cast<std::size_t>(t) - 1];
    Integrand f;
    f.smooth = false;
    if (t == T)
      f.value = [payoff](const Vector& xi, const Vector&) { return scalar(payoff(xi)); };
    else
      f.value = [payoff, discount](const Vector& xi, const Vector& x) {
        return scalar(std::max(payoff(xi), discount * x(0)));
      };
    p.integrands[static_cast<std::size_t>(t) - 1] = f;
  }
  p.feasible_set = FeasibleSet::box(scalar(-1.0), scalar(1.0));
  return {p, scalar(0.0)};
}

BuiltProblem build_bermudan(const BermudanParams& params) {
  if (params.assets < 1 || params.dates < 1) throw InvalidParams("bermudan needs assets >= 1 and dates >= 1");
  if (!(params.sigma > 0.0) || !(params.s0 > 0.0)) throw InvalidParams("bermudan needs positive sigma and s0");
  const int m = params.assets;
  const double strike = params.strike;
  const double drift = params.gamma - 0.5 * params.sigma * params.sigma;
  const double sigma = params.sigma;
  const double s0 = params.s0;

  StoppingParams stopping;
  stopping.discount = std::exp(-params.gamma);
  stopping.noise_dims.assign(static_cast<std::size_t>(params.dates), m);
  auto payoff = [m, strike](const Vector& prices) {
    return std::max(0.0, strike - prices.sum() / static_cast<double>(m));
  };
  stopping.payoffs.assign(static_cast<std::size_t>(params.dates), payoff);
  stopping.samplers.push_back(
      [m, s0](const SamplePath&, RngStream&) { return Vector::Constant(m, s0); });
  for (int t = 2; t <= params.dates; ++t)
    stopping.samplers.push_back([m, drift, sigma](const SamplePath& h, RngStream& rng) {
      const Vector& prev = h.at(h.length());
      Vector next(m);
      for (int j = 0; j < m; ++j) next(j) = prev(j) * std::exp(drift + sigma * rng.normal());
      return next;
    });
  return build_stopping(stopping);
}

// --- nested entropic risk ----------------------------------------------------

BuiltProblem build_entropic(const EntropicParams& params) {
  const int T = static_cast<int>(params.mu.size());
  if (T < 1) throw InvalidParams("entropic problem needs at least one stage");
  if (static_cast<int>(params.means.size()) != T || static_cast<int>(params.sds.size()) != T)
    throw InvalidParams("mu, means and sds must have equal length");
  for (double m : params.mu)
    if (!(m > 0.0)) throw InvalidParams("risk aversions must be positive");
  for (double s : params.sds)
    if (s < 0.0) throw InvalidParams("standard deviations must be nonnegative");

  MccoProblem p;
  p.num_stages = T;
  p.dims.assign(static_cast<std::size_t>(T) + 1, 1);
  p.noise_dims.assign(static_cast<std::size_t>(T), 1);
  for (int t = 1; t <= T; ++t) {
    double mean = params.means[static_cast<std::size_t>(t) - 1];
    double sd = params.sds[static_cast<std::size_t>(t) - 1];
    p.samplers.push_back(
        [mean, sd](const SamplePath&, RngStream& rng) { return scalar(rng.normal(mean, sd)); });
    Integrand f;
    f.smooth = true;
    if (t == T) {
      double mu_prev = params.mu[static_cast<std::size_t>(t) - 1];
      f.value = [mu_prev](const Vector& xi, const Vector&) { return scalar(std::exp(-mu_prev * xi(0))); };
      f.jacobian = [](const Vector&, const Vector&) { return scalar_matrix(0.0); };
    } else {
      double mu_prev = params.mu[static_cast<std::size_t>(t) - 1];
      double expo = mu_prev / params.mu[static_cast<std::size_t>(t)];
      f.value = [mu_prev, expo](const Vector& xi, const Vector& x) {
        return scalar(std::exp(-mu_prev * xi(0)) * std::pow(std::max(x(0), kLogFloor), expo));
      };
      f.jacobian = [mu_prev, expo](const Vector& xi, const Vector& x) {
        if (x(0) <= kLogFloor) return scalar_matrix(0.0);
        return scalar_matrix(std::exp(-mu_prev * xi(0)) * expo * std::pow(x(0), expo - 1.0));
      };
    }
    p.integrands.push_back(f);
  }
  p.feasible_set = FeasibleSet::box(scalar(-1.0), scalar(1.0));
  return {p, scalar(0.0)};
}

double gaussian_entropic_stage(double mu, double mean, double sd) {
  return -mean + mu * sd * sd / 2.0;
}

// --- linear-quadratic regulator ----------------------------------------------

struct LqrShape {
  int m = 0;
  int n = 0;
  int dim() const { return m * m + m * n + n * n + m + n + 1; }
};

struct LqrBlocks {
  Matrix Qss, Qsa, Qaa;
  Vector bs, ba;
  double c = 0.0;
};

LqrBlocks unpack(const LqrShape& shape, const Vector& x) {
  const int m = shape.m, n = shape.n;
  LqrBlocks b;
  int off = 0;
  b.Qss = Eigen::Map<const Matrix>(x.data() + off, m, m);
  off += m * m;
  b.Qsa = Eigen::Map<const Matrix>(x.data() + off, m, n);
  off += m * n;
  b.Qaa = Eigen::Map<const Matrix>(x.data() + off, n, n);
  off += n * n;
  b.bs = x.segment(off, m);
  off += m;
  b.ba = x.segment(off, n);
  off += n;
  b.c = x(off);
  return b;
}

Vector pack(const LqrShape& shape, const Matrix& Qss, const Matrix& Qsa, const Matrix& Qaa,
            const Vector& bs, const Vector& ba, double c) {
  const int m = shape.m, n = shape.n;
  Vector x(shape.dim());
  int off = 0;
  Eigen::Map<Matrix>(x.data() + off, m, m) = Qss;
  off += m * m;
  Eigen::Map<Matrix>(x.data() + off, m, n) = Qsa;
  off += m * n;
  Eigen::Map<Matrix>(x.data() + off, n, n) = Qaa;
  off += n * n;
  x.segment(off, m) = bs;
  off += m;
  x.segment(off, n) = ba;
  off += n;
  x(off) = c;
  return x;
}

struct LqrCore {
  Matrix P;
  Vector g;
  double d = 0.0;
  Matrix W;          // (Q^aa)^{-1}, or zero at the terminal point
  bool terminal = false;
};

// Schur step P = Qss - Qsa W Qsa', g = bs - Qsa W ba, d = c - ba' W ba. An
// exactly-zero Q^aa block takes W = 0 (its pseudo-inverse). This covers the
// terminal coefficients, and also the telescoped inner estimates whose
// coefficient blocks cancel exactly: the stage outputs of f_{t+1} depend on
// the argument only through (Q^ss, Q^sa, Q^aa), which are identical across
// the full/even/odd averages, so levels >= 1 zero them out.
LqrCore schur_core(const LqrBlocks& b) {
  LqrCore core;
  if (b.Qaa.isZero(0.0)) {
    core.W = Matrix::Zero(b.Qaa.rows(), b.Qaa.cols());
    core.P = b.Qss - b.Qsa * core.W * b.Qsa.transpose();
    core.g = b.bs;
    core.d = b.c;
    core.terminal = true;
    return core;
  }
  Eigen::FullPivLU<Matrix> lu(b.Qaa);
  if (!lu.isInvertible()) throw SingularQaa("Q^aa block is singular");
  core.W = lu.inverse();
  core.P = b.Qss - b.Qsa * core.W * b.Qsa.transpose();
  core.g = b.bs - b.Qsa * core.W * b.ba;
  core.d = b.c - b.ba.dot(core.W * b.ba);
  return core;
}

BuiltProblem build_lqr(const LqrParams& params) {
  LqrShape shape;
  shape.m = static_cast<int>(params.A.rows());
  shape.n = static_cast<int>(params.B.cols());
  const int m = shape.m, n = shape.n, d = shape.dim();
  if (params.A.cols() != m) throw InvalidParams("A must be m x m");
  if (params.B.rows() != m) throw InvalidParams("B must be m x n");
  require_symmetric_psd(params.Q, "Q");
  if (params.Q.rows() != m) throw InvalidParams("Q must be m x m");
  require_symmetric_psd(params.P_T, "P_T");
  if (params.P_T.rows() != m) throw InvalidParams("P_T must be m x m");
  if (params.R.rows() != n || params.R.cols() != n) throw InvalidParams("R must be n x n");
  {
    Eigen::FullPivLU<Matrix> lu(params.R);
    if (!lu.isInvertible()) throw InvalidParams("R must be invertible");
  }
  if (params.s0.size() != m) throw InvalidParams("s0 must have length m");
  if (params.noise_cov.rows() != m || params.noise_cov.cols() != m)
    throw InvalidParams("noise_cov must be m x m");
  require_symmetric_psd(params.noise_cov, "noise_cov");
  const int T = params.horizon;
  if (T < 1) throw InvalidParams("horizon must be >= 1");
  if (!params.custom_kernels.empty() && static_cast<int>(params.custom_kernels.size()) != T)
    throw InvalidParams("custom_kernels must supply one sampler per stage");

  const Matrix A = params.A, B = params.B, Q = params.Q, R = params.R;
  Matrix noise_chol = cholesky_factor(params.noise_cov, "noise_cov");

  MccoProblem p;
  p.num_stages = T;
  p.dims.assign(static_cast<std::size_t>(T) + 1, d);
  p.dims[0] = 1;
  p.noise_dims.assign(static_cast<std::size_t>(T), m);
  if (!params.custom_kernels.empty()) {
    p.samplers = params.custom_kernels;
  } else {
    Vector s0 = params.s0;
    p.samplers.push_back([s0](const SamplePath&, RngStream&) { return s0; });
    for (int t = 2; t <= T; ++t)
      p.samplers.push_back([noise_chol, m](const SamplePath&, RngStream& rng) {
        Vector z(m);
        for (int j = 0; j < m; ++j) z(j) = rng.normal();
        return Vector(noise_chol * z);
      });
  }

  // Stage value: the stage-1 integrand is the Schur-complement quadratic form;
  // later stages additionally rebuild the next coefficient vector.
  auto value_fn = [shape, A, B, Q, R](int t) {
    return [shape, A, B, Q, R, t](const Vector& xi, const Vector& x) -> Vector {
      LqrCore core = schur_core(unpack(shape, x));
      double quad = xi.dot(core.P * xi) + 2.0 * core.g.dot(xi) + core.d;
      if (t == 1) return scalar(quad);
      Vector pg = core.P * xi + core.g;
      return pack(shape, Q + A.transpose() * core.P * A, A.transpose() * core.P * B,
                  R + B.transpose() * core.P * B, A.transpose() * pg, B.transpose() * pg, quad);
    };
  };
  // Transposed Jacobian by directional differentiation of the Schur step,
  // one input basis direction per row.
  auto jac_fn = [shape, A, B, d](int t) {
    return [shape, A, B, d, t](const Vector& xi, const Vector& x) -> Matrix {
      const LqrBlocks base = unpack(shape, x);
      const LqrCore core = schur_core(base);
      const int out_dim = t == 1 ? 1 : d;
      Matrix jac(d, out_dim);
      const Matrix WQsaT = core.W * base.Qsa.transpose();
      const Vector Wba = core.W * base.ba;
      for (int i = 0; i < d; ++i) {
        Vector e = Vector::Zero(d);
        e(i) = 1.0;
        LqrBlocks dir = unpack(shape, e);
        Matrix dW = -core.W * dir.Qaa * core.W;
        Matrix dP = dir.Qss - dir.Qsa * WQsaT - base.Qsa * dW * base.Qsa.transpose() -
                    (base.Qsa * core.W) * dir.Qsa.transpose();
        Vector dg = dir.bs - dir.Qsa * Wba - base.Qsa * dW * base.ba - (base.Qsa * core.W) * dir.ba;
        double dd = dir.c - dir.ba.dot(Wba) - base.ba.dot(dW * base.ba) - Wba.dot(dir.ba);
        double dquad = xi.dot(dP * xi) + 2.0 * dg.dot(xi) + dd;
        if (t == 1) {
          jac(i, 0) = dquad;
        } else {
          Vector dpg = dP * xi + dg;
          jac.row(i) = pack(shape, A.transpose() * dP * A, A.transpose() * dP * B,
                            B.transpose() * dP * B, A.transpose() * dpg, B.transpose() * dpg, dquad)
                           .transpose();
        }
      }
      return jac;
    };
  };

  for (int t = 1; t <= T; ++t) p.integrands.push_back({value_fn(t), jac_fn(t), true});

  Vector lo = Vector::Constant(d, -1e6), hi = Vector::Constant(d, 1e6);
  p.feasible_set = FeasibleSet::box(lo, hi);
  Vector probe = pack(shape, Matrix::Identity(m, m), Matrix::Zero(m, n), Matrix::Identity(n, n),
                      Vector::Zero(m), Vector::Zero(n), 1.0);
  p.probe_points.assign(static_cast<std::size_t>(T), probe);
  Vector x0 = pack(shape, params.P_T, Matrix::Zero(m, n), Matrix::Zero(n, n), Vector::Zero(m),
                   Vector::Zero(n), 0.0);
  return {p, x0};
}

// --- contextual bandits --------------------------------------------------------

Matrix default_cost_cov() {
  Matrix cov(2, 2);
  cov << 5.0, 2.5, 2.5, 5.0;
  return cov;
}

std::array<int, 6> to_context(const Vector& v, int offset) {
  std::array<int, 6> c{};
  for (int j = 0; j < 6; ++j) c[static_cast<std::size_t>(j)] = static_cast<int>(std::lround(v(offset + j)));
  return c;
}

BuiltProblem build_bandits(const BanditsParams& params) {
  if (!(params.mu > 0.0)) throw InvalidParams("softmax temperature mu must be positive");
  if (params.r_c < 0.0 || params.r_y < 0.0) throw InvalidParams("ambiguity radii must be nonnegative");
  if (!(params.lambda_max > 0.0)) throw InvalidParams("lambda_max must be positive");
  Matrix cov = params.cost_cov.size() == 0 ? default_cost_cov() : params.cost_cov;
  if (cov.rows() != 2 || cov.cols() != 2) throw InvalidParams("cost_cov must be 2 x 2");
  require_symmetric_psd(cov, "cost_cov");
  Matrix chol = cholesky_factor(cov, "cost_cov");
  auto means = params.mean_override ? params.mean_override : bandit_grid::cost_means;

  const double mu = params.mu, r_c = params.r_c, r_y = params.r_y;
  Vector diag_half(2);
  diag_half << 0.5 * cov(0, 0), 0.5 * cov(1, 1);

  auto uniform_context = [](const SamplePath&, RngStream& rng) {
    int idx = static_cast<int>(rng.uniform() * bandit_grid::kContextCount);
    if (idx >= bandit_grid::kContextCount) idx = bandit_grid::kContextCount - 1;
    std::array<int, 6> c = bandit_grid::decode(idx);
    Vector v(6);
    for (int j = 0; j < 6; ++j) v(j) = static_cast<double>(c[static_cast<std::size_t>(j)]);
    return v;
  };

  MccoProblem p;
  p.num_stages = 3;
  p.dims = {1, 1, 1, 3};
  p.noise_dims = {6, 6, 14};
  p.samplers = {
      uniform_context,
      uniform_context,
      [chol, means, diag_half](const SamplePath& h, RngStream& rng) {
        const Vector& cprime = h.at(1);
        const Vector& u = h.at(2);
        std::array<double, 2> m = means(to_context(u, 0));
        Vector z(2);
        z << rng.normal(), rng.normal();
        Vector log_y = chol * z;
        Vector out(14);
        out.segment(0, 6) = cprime;
        out.segment(6, 6) = u;
        out(12) = std::exp(std::log(m[0]) - diag_half(0) + log_y(0));
        out(13) = std::exp(std::log(m[1]) - diag_half(1) + log_y(1));
        return out;
      },
  };
  p.integrands = {
      {[mu](const Vector&, const Vector& x) { return scalar(std::log(std::max(x(0), kLogFloor)) / mu); },
       [mu](const Vector&, const Vector& x) {
         return scalar_matrix(x(0) > kLogFloor ? 1.0 / (mu * x(0)) : 0.0);
       },
       true},
      {[mu](const Vector&, const Vector& x) {
         return scalar(std::exp(std::min(mu * x(0), kExpCap)));
       },
       [mu](const Vector&, const Vector& x) {
         double e = mu * x(0);
         return scalar_matrix(e < kExpCap ? mu * std::exp(e) : 0.0);
       },
       true},
      {[r_c, r_y](const Vector& xi, const Vector& x) {
         double theta = xi(6) != 0.0 ? x(0) : x(1);
         double dist2 = (xi.segment(6, 6) - xi.segment(0, 6)).squaredNorm();
         return scalar(theta * xi(12) + (1.0 - theta) * xi(13) + r_y + r_c * r_c * x(2) - x(2) * dist2);
       },
       [r_c](const Vector& xi, const Vector&) {
         double dist2 = (xi.segment(6, 6) - xi.segment(0, 6)).squaredNorm();
         Matrix jac(3, 1);
         double dy = xi(12) - xi(13);
         jac(0, 0) = xi(6) != 0.0 ? dy : 0.0;
         jac(1, 0) = xi(6) == 0.0 ? dy : 0.0;
         jac(2, 0) = r_c * r_c - dist2;
         return jac;
       },
       true},
  };
  Vector lo(3), hi(3);
  lo << 0.0, 0.0, 0.0;
  hi << 1.0, 1.0, params.lambda_max;
  p.feasible_set = FeasibleSet::box(lo, hi);
  Vector x0(3);
  x0 << 0.5, 0.5, 1.0;
  return {p, x0};
}

}  // namespace

namespace bandit_grid {

std::array<int, 6> decode(int index) {
  std::array<int, 6> c{};
  c[0] = index % 3;
  index /= 3;
  c[1] = index % 5;
  index /= 5;
  c[2] = index % 2;
  index /= 2;
  c[3] = index % 2;
  index /= 2;
  c[4] = index % 6;
  index /= 6;
  c[5] = index % 4;
  return c;
}

std::array<double, 2> cost_means(const std::array<int, 6>& c) {
  double bump = 0.0;
  if (c[1] == 4 && c[2] == 1 && c[3] == 1 && c[5] == 3)
    bump = 2.4 + 1.92 * (c[4] / 5.0 - 2.5) * (c[4] / 5.0 - 2.5);
  double c5 = static_cast<double>(c[4]);
  if (c[0] == 0) return {3.0 + 5.0 * c5 + bump, 5.5 + 1.0 * c5 + bump};
  return {1.7 + 3.5 * c5 + bump, 3.0 + 1.0 * c5 + bump};
}

}  // namespace bandit_grid

BuiltProblem build_problem(const AdapterParams& params) {
  BuiltProblem built = std::visit(
      [](const auto& p) -> BuiltProblem {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SyntheticParams>) return build_synthetic(p);
        else if constexpr (std::is_same_v<T, BermudanParams>) return build_bermudan(p);
        else if constexpr (std::is_same_v<T, StoppingParams>) return build_stopping(p);
        else if constexpr (std::is_same_v<T, EntropicParams>) return build_entropic(p);
        else if constexpr (std::is_same_v<T, LqrParams>) return build_lqr(p);
        else return build_bandits(p);
      },
      params);
  validate_problem(built.problem);
  return built;
}

// --- oracles -------------------------------------------------------------------

namespace {

struct BanditTable {
  std::vector<std::array<double, 6>> contexts;
  std::vector<double> delta_mean;  // m_1(u) - m_2(u)
  std::vector<double> mean2;       // m_2(u)
  std::vector<bool> first_group;   // u_1 != 0
};

BanditTable build_table(const BanditsParams& params) {
  auto means = params.mean_override ? params.mean_override : bandit_grid::cost_means;
  BanditTable table;
  table.contexts.resize(bandit_grid::kContextCount);
  table.delta_mean.resize(bandit_grid::kContextCount);
  table.mean2.resize(bandit_grid::kContextCount);
  table.first_group.resize(bandit_grid::kContextCount);
  for (int i = 0; i < bandit_grid::kContextCount; ++i) {
    std::array<int, 6> c = bandit_grid::decode(i);
    for (int j = 0; j < 6; ++j)
      table.contexts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = static_cast<double>(c[static_cast<std::size_t>(j)]);
    std::array<double, 2> m = means(c);
    if (!(m[0] > 0.0) || !(m[1] > 0.0))
      throw NonFinite("conditional cost means must be positive for the log-normal model");
    table.delta_mean[static_cast<std::size_t>(i)] = m[0] - m[1];
    table.mean2[static_cast<std::size_t>(i)] = m[1];
    table.first_group[static_cast<std::size_t>(i)] = c[0] != 0;
  }
  return table;
}

double context_dist2(const std::array<double, 6>& a, const std::array<double, 6>& b) {
  double d2 = 0.0;
  for (int j = 0; j < 6; ++j) {
    double diff = a[static_cast<std::size_t>(j)] - b[static_cast<std::size_t>(j)];
    d2 += diff * diff;
  }
  return d2;
}

// Objective, gradient and Hessian of the exact enumeration objective at x.
struct BanditEval {
  double value = 0.0;
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
};

BanditEval bandits_eval(const BanditTable& table, const BanditsParams& params, const Eigen::Vector3d& x,
                        bool with_derivatives) {
  const int N = bandit_grid::kContextCount;
  const double mu = params.mu;
  BanditEval eval;
  std::vector<double> h(static_cast<std::size_t>(N));
  std::vector<std::array<double, 3>> a(static_cast<std::size_t>(N));
  for (int cp = 0; cp < N; ++cp) {
    // Inner softmax over u for the outer context c'.
    double hmax = -std::numeric_limits<double>::infinity();
    for (int u = 0; u < N; ++u) {
      double theta = table.first_group[static_cast<std::size_t>(u)] ? x(0) : x(1);
      double dist2 = context_dist2(table.contexts[static_cast<std::size_t>(u)], table.contexts[static_cast<std::size_t>(cp)]);
      double hu = theta * table.delta_mean[static_cast<std::size_t>(u)] + table.mean2[static_cast<std::size_t>(u)] + params.r_y +
                  params.r_c * params.r_c * x(2) - x(2) * dist2;
      h[static_cast<std::size_t>(u)] = hu;
      if (with_derivatives) {
        a[static_cast<std::size_t>(u)] = {table.first_group[static_cast<std::size_t>(u)] ? table.delta_mean[static_cast<std::size_t>(u)] : 0.0,
                                          table.first_group[static_cast<std::size_t>(u)] ? 0.0 : table.delta_mean[static_cast<std::size_t>(u)],
                                          params.r_c * params.r_c - dist2};
      }
      if (hu > hmax) hmax = hu;
    }
    double sum = 0.0;
    for (int u = 0; u < N; ++u) sum += std::exp(mu * (h[static_cast<std::size_t>(u)] - hmax));
    eval.value += hmax + std::log(sum / N) / mu;
    if (with_derivatives) {
      Eigen::Vector3d wa = Eigen::Vector3d::Zero();
      Eigen::Matrix3d waa = Eigen::Matrix3d::Zero();
      for (int u = 0; u < N; ++u) {
        double w = std::exp(mu * (h[static_cast<std::size_t>(u)] - hmax)) / sum;
        Eigen::Vector3d au(a[static_cast<std::size_t>(u)][0], a[static_cast<std::size_t>(u)][1], a[static_cast<std::size_t>(u)][2]);
        wa += w * au;
        waa += w * au * au.transpose();
      }
      eval.grad += wa;
      eval.hess += mu * (waa - wa * wa.transpose());
    }
  }
  eval.value /= N;
  eval.grad /= N;
  eval.hess /= N;
  return eval;
}

}  // namespace

double bandits_exact_objective(const BanditsParams& params, const Vector& x) {
  if (x.size() != 3) throw DimensionMismatch(3, "bandit decision must have length 3");
  BanditTable table = build_table(params);
  return bandits_eval(table, params, Eigen::Vector3d(x(0), x(1), x(2)), false).value;
}

BanditsTruth bandits_ground_truth(const BanditsParams& params) {
  BanditTable table = build_table(params);
  Eigen::Vector3d lo(0.0, 0.0, 0.0), hi(1.0, 1.0, params.lambda_max);
  Eigen::Vector3d x(0.5, 0.5, 5.0);
  auto clamp = [&](Eigen::Vector3d v) {
    for (int j = 0; j < 3; ++j) v(j) = std::min(std::max(v(j), lo(j)), hi(j));
    return v;
  };

  BanditEval eval = bandits_eval(table, params, x, true);
  if (!std::isfinite(eval.value)) throw NonFinite("bandit objective is not finite at the initial point");
  for (int iter = 0; iter < 200; ++iter) {
    // Projected gradient norm as the stationarity measure on the box.
    Eigen::Vector3d pg = x - clamp(x - eval.grad);
    if (pg.lpNorm<Eigen::Infinity>() < 1e-9) break;
    Eigen::Matrix3d hess = eval.hess + 1e-12 * Eigen::Matrix3d::Identity();
    Eigen::Vector3d step = hess.ldlt().solve(eval.grad);
    if (!step.allFinite()) step = eval.grad;
    double t = 1.0;
    BanditEval next;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      Eigen::Vector3d cand = clamp(x - t * step);
      next = bandits_eval(table, params, cand, true);
      if (std::isfinite(next.value) && next.value < eval.value + 1e-14) {
        x = cand;
        break;
      }
    }
    eval = next;
  }

  BanditsTruth truth;
  truth.theta1 = x(0);
  truth.theta2 = x(1);
  truth.lambda = x(2);
  truth.value = eval.value;
  // Flag a dual direction pressed against the box (e.g. r_c = 0, where the
  // infimum over lambda is approached but never attained).
  truth.lambda_at_bound = x(2) >= params.lambda_max - 1e-6 && eval.grad(2) < 0.0;
  return truth;
}

double lqr_exact_value(const LqrParams& params) {
  LqrShape shape;
  shape.m = static_cast<int>(params.A.rows());
  shape.n = static_cast<int>(params.B.cols());
  const int T = params.horizon;
  if (T < 1) throw InvalidParams("horizon must be >= 1");

  Matrix P = params.P_T;
  Vector g = Vector::Zero(shape.m);
  double d = 0.0;
  for (int t = T - 1; t >= 1; --t) {
    Matrix Qss = params.Q + params.A.transpose() * P * params.A;
    Matrix Qsa = params.A.transpose() * P * params.B;
    Matrix Qaa = params.R + params.B.transpose() * P * params.B;
    Vector bs = params.A.transpose() * g;
    Vector ba = params.B.transpose() * g;
    double c = (P * params.noise_cov).trace() + d;
    Eigen::FullPivLU<Matrix> lu(Qaa);
    if (!lu.isInvertible()) throw SingularQaa("R + B' P B is singular at stage " + std::to_string(t));
    Matrix W = lu.inverse();
    P = Qss - Qsa * W * Qsa.transpose();
    g = bs - Qsa * W * ba;
    d = c - ba.dot(W * ba);
  }
  return params.s0.dot(P * params.s0) + 2.0 * g.dot(params.s0) + d;
}

double entropic_exact_value(const EntropicParams& params) {
  const int T = static_cast<int>(params.mu.size());
  if (T < 1) throw InvalidParams("entropic oracle needs at least one stage");
  double mu = params.mu[0];
  for (double m : params.mu)
    if (std::abs(m - mu) > 1e-12)
      throw InvalidParams("the Gaussian closed form requires a constant risk aversion");
  double rho_sum = 0.0;
  for (int t = 0; t < T; ++t)
    rho_sum += gaussian_entropic_stage(mu, params.means[static_cast<std::size_t>(t)], params.sds[static_cast<std::size_t>(t)]);
  return std::exp(mu * rho_sum);
}

}  // namespace mcco
