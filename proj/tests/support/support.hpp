#pragma once

// Reference implementations and generators shared by the unit and acceptance
// tests. Everything here is deliberately naive: dense Kronecker solves,
// fixed-step RK4 and central differences, so it can serve as an independent
// check on the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "feedopt/numerics.hpp"
#include "feedopt/objective.hpp"
#include "feedopt/plant.hpp"
#include "feedopt/powergrid.hpp"

namespace feedopt::testkit {

inline std::string data_path(const std::string& rel) { return std::string(FEEDOPT_DATA_DIR) + "/" + rel; }

/// Solves A^T P + P A = -I through the n^2 x n^2 Kronecker system.
inline Matrix kronecker_lyapunov(const Matrix& a) {
  const Eigen::Index n = a.rows();
  const Matrix eye = Matrix::Identity(n, n);
  Matrix k = Matrix::Zero(n * n, n * n);
  // vec(A^T P + P A) = (I kron A^T + A^T kron I) vec(P)
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      k.block(i * n, j * n, n, n) += eye(i, j) * a.transpose();
      k.block(i * n, j * n, n, n) += a(j, i) * eye;
    }
  }
  const Vector rhs = -Eigen::Map<const Vector>(eye.data(), n * n);
  const Vector vecp = k.fullPivLu().solve(rhs);
  return Eigen::Map<const Matrix>(vecp.data(), n, n);
}

/// Random Hurwitz matrix: a random matrix shifted left of its spectral
/// abscissa by a random margin in [0.1, 1].
inline Matrix random_hurwitz(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> margin(0.1, 1.0);
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
  const double abscissa = a.eigenvalues().real().maxCoeff();
  a -= (abscissa + margin(rng)) * Matrix::Identity(n, n);
  return a;
}

inline Vector random_vector(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = dist(rng);
  return v;
}

/// Central-difference gradient of a scalar function.
inline Vector central_difference(const std::function<double(const Vector&)>& f, const Vector& z,
                                 double h = 1e-6) {
  Vector g(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    Vector zp = z, zm = z;
    const double step = h * std::max(1.0, std::abs(z(i)));
    zp(i) += step;
    zm(i) -= step;
    g(i) = (f(zp) - f(zm)) / (2.0 * step);
  }
  return g;
}

/// Closed loop x' = A x + B u + Q w, u' = -eps H~^T grad Phi(x, u) integrated
/// by classical RK4 with a fixed step.
struct Rk4Loop {
  const LtiPlant& plant;
  const SteadyStateMap& ssm;
  const Objective& objective;
  double epsilon;
  Vector w;

  void step(Vector& x, Vector& u, double h) const {
    auto fx = [&](const Vector& xs, const Vector& us) {
      return Vector(plant.a() * xs + plant.b() * us + plant.q() * w);
    };
    auto fu = [&](const Vector& xs, const Vector& us) {
      return Vector(-epsilon * ssm.project(objective.gradient(xs, us)));
    };
    const Vector k1x = fx(x, u), k1u = fu(x, u);
    const Vector x2 = x + 0.5 * h * k1x, u2 = u + 0.5 * h * k1u;
    const Vector k2x = fx(x2, u2), k2u = fu(x2, u2);
    const Vector x3 = x + 0.5 * h * k2x, u3 = u + 0.5 * h * k2u;
    const Vector k3x = fx(x3, u3), k3u = fu(x3, u3);
    const Vector x4 = x + h * k3x, u4 = u + h * k3u;
    const Vector k4x = fx(x4, u4), k4u = fu(x4, u4);
    x += (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    u += (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
  }
};

/// Connected random grid: a spanning path over a random permutation plus
/// random chords, with dynamics drawn uniformly within +-50% of typical
/// values (M 5 s, D 3, T 4 s, R 0.25 Hz/pu).
inline grid::GridCase random_grid(std::mt19937_64& rng, int buses, int extra_lines) {
  std::uniform_real_distribution<double> spread(0.5, 1.5);
  std::uniform_real_distribution<double> susceptance(5.0, 15.0);
  std::uniform_real_distribution<double> load(0.2, 1.2);
  grid::GridCase g;
  for (int i = 0; i < buses; ++i) {
    grid::Bus b;
    b.id = 100 + i;
    b.inertia_s = 5.0 * spread(rng);
    b.damping_pu = 3.0 * spread(rng);
    b.gov_time_s = 4.0 * spread(rng);
    b.droop_hz_per_pu = 0.25 * spread(rng);
    b.load_pu = load(rng);
    b.gen_min_pu = 0.0;
    b.gen_max_pu = 3.0;
    b.cost_quadratic = 10.0 * spread(rng);
    b.cost_linear = -5.0 * spread(rng);
    g.buses.push_back(b);
  }
  std::vector<int> order(buses);
  for (int i = 0; i < buses; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  auto has_line = [&](int a, int b) {
    for (const grid::Line& l : g.lines) {
      if ((l.from == a && l.to == b) || (l.from == b && l.to == a)) return true;
    }
    return false;
  };
  for (int i = 0; i + 1 < buses; ++i) {
    g.lines.push_back({100 + order[i], 100 + order[i + 1], susceptance(rng), 1.0, true});
  }
  std::uniform_int_distribution<int> pick(0, buses - 1);
  for (int k = 0, tries = 0; k < extra_lines && tries < 100 * (extra_lines + 1); ++tries) {
    const int a = pick(rng), b = pick(rng);
    if (a == b || has_line(100 + a, 100 + b)) continue;
    g.lines.push_back({100 + a, 100 + b, susceptance(rng), 1.0, true});
    ++k;
  }
  return g;
}

}  // namespace feedopt::testkit
