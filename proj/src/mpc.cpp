#include "ahumpc/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ahumpc::mpc {

double effective_setpoint(std::span<const SetpointFeedback> feedbacks,
                          Minute now, double tau_inc_min,
                          const MpcConfig& cfg) {
  if (!(tau_inc_min > 0.0)) {
    throw std::invalid_argument("mpc: tau_inc must be positive");
  }
  const double lo = cfg.comfort_lo_c - 4.0;
  const double hi = cfg.comfort_hi_c + 4.0;
  const double window_min = 4.0 * tau_inc_min;
  double sum = 0.0;
  int count = 0;
  for (const auto& fb : feedbacks) {
    if (fb.timestamp > now) continue;
    if (static_cast<double>(now - fb.timestamp) > window_min) continue;
    if (!std::isfinite(fb.value_c)) continue;
    if (fb.value_c < lo || fb.value_c > hi) continue;  // emotional feedback
    sum += fb.value_c;
    ++count;
  }
  if (count == 0) return 0.5 * (cfg.comfort_lo_c + cfg.comfort_hi_c);
  return sum / count;
}

DiscreteFos discretize_internal_model(const fos::FosParams& fos_inc,
                                      double sampling_min) {
  fos::validate(fos_inc);
  if (!(sampling_min > 0.0)) {
    throw std::invalid_argument("mpc: sampling must be positive");
  }
  if (fos_inc.theta >= sampling_min) {
    throw std::invalid_argument("mpc: dead time must be shorter than the sampling interval");
  }
  DiscreteFos d;
  const double a_full = std::exp(-sampling_min / fos_inc.tau);
  const double a_tail = std::exp(-(sampling_min - fos_inc.theta) / fos_inc.tau);
  d.a = a_full;
  d.b_new = fos_inc.kp * (1.0 - a_tail);
  d.b_prev = fos_inc.kp * (a_tail - a_full);
  return d;
}

namespace {

struct Condensed {
  // J(U) = ||sqrt(w_y) (G U + r)||^2 + ||sqrt(w_u) (D U - v)||^2
  // with the gradient and Hessian-vector products evaluated directly.
  int p;
  double w_y, w_u;
  std::vector<double> g;  // impulse response: coefficient of u_j in x_{j+1+i}
  std::vector<double> r;  // free response minus setpoints, length p
  double u_prev;

  // x contribution of u_j to x_k is g[k-1-j] for k-1 >= j.
  void predict(std::span<const double> u, std::vector<double>& x) const {
    for (int k = 0; k < p; ++k) {
      double acc = 0.0;
      for (int j = 0; j <= k; ++j) acc += g[k - j] * u[j];
      x[k] = acc;
    }
  }

  double objective(std::span<const double> u, std::vector<double>& scratch) const {
    predict(u, scratch);
    double jy = 0.0;
    for (int k = 0; k < p; ++k) {
      const double e = scratch[k] + r[k];
      jy += e * e;
    }
    double ju = 0.0;
    double prev = u_prev;
    for (int k = 0; k < p; ++k) {
      const double d = u[k] - prev;
      ju += d * d;
      prev = u[k];
    }
    return w_y * jy + w_u * ju;
  }

  void gradient(std::span<const double> u, std::vector<double>& scratch,
                std::vector<double>& grad) const {
    predict(u, scratch);
    for (int k = 0; k < p; ++k) scratch[k] += r[k];
    // grad_j = 2 w_y sum_k g[k-j] e_k + 2 w_u (D^T (D u - v))_j
    for (int j = 0; j < p; ++j) {
      double acc = 0.0;
      for (int k = j; k < p; ++k) acc += g[k - j] * scratch[k];
      grad[j] = 2.0 * w_y * acc;
    }
    double prev = u_prev;
    for (int k = 0; k < p; ++k) {
      const double d = u[k] - prev;
      grad[k] += 2.0 * w_u * d;
      if (k + 1 < p) grad[k] -= 2.0 * w_u * (u[k + 1] - u[k]);
      prev = u[k];
    }
  }

  // H v without forming H: 2 (w_y G^T G + w_u D^T D) v.
  void hessian_times(std::span<const double> v, std::vector<double>& scratch,
                     std::vector<double>& out) const {
    predict(v, scratch);
    for (int j = 0; j < p; ++j) {
      double acc = 0.0;
      for (int k = j; k < p; ++k) acc += g[k - j] * scratch[k];
      out[j] = 2.0 * w_y * acc;
    }
    double prev = 0.0;
    for (int k = 0; k < p; ++k) {
      const double d = v[k] - prev;
      out[k] += 2.0 * w_u * d;
      if (k + 1 < p) out[k] -= 2.0 * w_u * (v[k + 1] - v[k]);
      prev = v[k];
    }
  }
};

}  // namespace

ControlPlan solve(double x0, std::span<const double> setpoints,
                  const MpcConfig& cfg, const DiscreteFos& model,
                  double u_prev, std::span<const double> warm_start) {
  const int p = cfg.horizon;
  if (p < 1) throw std::invalid_argument("mpc: horizon must be >= 1");
  if (static_cast<int>(setpoints.size()) != p) {
    throw std::invalid_argument("mpc: setpoint trajectory length != horizon");
  }
  if (!std::isfinite(x0) || !std::isfinite(model.a) ||
      !std::isfinite(model.b_new) || !std::isfinite(model.b_prev)) {
    throw std::invalid_argument("mpc: non-finite state or model");
  }
  if (cfg.tracking_weight < 0.0 || cfg.move_weight < 0.0) {
    throw std::invalid_argument("mpc: weights must be >= 0");
  }

  Condensed c;
  c.p = p;
  c.w_y = cfg.tracking_weight;
  c.w_u = cfg.move_weight;
  c.u_prev = u_prev;

  // Impulse response of the one-step map: contribution of a unit input at
  // step 0 to x_1, x_2, ... (covers both the b_new and delayed b_prev paths).
  c.g.assign(p, 0.0);
  {
    double x = 0.0;
    for (int k = 0; k < p; ++k) {
      x = model.step(x, k == 0 ? 1.0 : 0.0, k == 1 ? 1.0 : 0.0);
      c.g[k] = x;
    }
  }
  // Free response of x (zero future inputs, u_prev acting once) minus setpoints.
  c.r.assign(p, 0.0);
  {
    double x = x0;
    for (int k = 0; k < p; ++k) {
      x = model.step(x, 0.0, k == 0 ? u_prev : 0.0);
      c.r[k] = x - setpoints[k];
    }
  }

  const auto clamp_box = [&](double v) {
    return std::clamp(v, cfg.u_min, cfg.u_max);
  };

  std::vector<double> u(p, 0.0);
  if (!warm_start.empty()) {
    if (static_cast<int>(warm_start.size()) != p) {
      throw std::invalid_argument("mpc: warm start length != horizon");
    }
    for (int k = 0; k < p; ++k) u[k] = clamp_box(warm_start[k]);
  }

  std::vector<double> scratch(p), grad(p), dir(p), hd(p);

  // Dense Hessian for the free-set Newton direction. Plain projected
  // gradient stalls well short of the 1e-6 KKT tolerance on long horizons
  // (kappa grows with tau/sampling), so the descent direction is the Newton
  // step restricted to the inactive variables; the exact line search and the
  // projection stay as they are.
  std::vector<double> hess(static_cast<std::size_t>(p) * p, 0.0);
  {
    std::vector<double> e(p, 0.0);
    for (int j = 0; j < p; ++j) {
      e[j] = 1.0;
      c.hessian_times(e, scratch, hd);
      for (int i = 0; i < p; ++i) hess[static_cast<std::size_t>(i) * p + j] = hd[i];
      e[j] = 0.0;
    }
  }

  // Lipschitz bound for the fallback gradient step.
  double lips = 0.0;
  for (int i = 0; i < p; ++i) {
    double row = 0.0;
    for (int j = 0; j < p; ++j) row += std::abs(hess[static_cast<std::size_t>(i) * p + j]);
    lips = std::max(lips, row);
  }
  lips = std::max(lips, 1e-12);

  std::vector<int> free_idx;
  std::vector<double> hff, rhs;

  ControlPlan plan;
  plan.objective_trace.reserve(64);
  double obj = c.objective(u, scratch);
  plan.objective_trace.push_back(obj);

  bool converged = false;
  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    c.gradient(u, scratch, grad);

    // KKT residual: distance to the fixed point of the projection map.
    double resid = 0.0;
    for (int k = 0; k < p; ++k) {
      resid = std::max(resid, std::abs(u[k] - clamp_box(u[k] - grad[k])));
    }
    if (resid <= cfg.kkt_tolerance) {
      converged = true;
      break;
    }

    // Newton direction on the variables not pinned at an active bound.
    free_idx.clear();
    for (int k = 0; k < p; ++k) {
      const bool at_lo = u[k] <= cfg.u_min + 1e-12 && grad[k] > 0.0;
      const bool at_hi = u[k] >= cfg.u_max - 1e-12 && grad[k] < 0.0;
      if (!at_lo && !at_hi) free_idx.push_back(k);
    }
    std::fill(dir.begin(), dir.end(), 0.0);
    bool newton_ok = false;
    const int nf = static_cast<int>(free_idx.size());
    if (nf > 0) {
      hff.assign(static_cast<std::size_t>(nf) * nf, 0.0);
      rhs.assign(nf, 0.0);
      for (int a = 0; a < nf; ++a) {
        rhs[a] = -grad[free_idx[a]];
        for (int b = 0; b < nf; ++b) {
          hff[static_cast<std::size_t>(a) * nf + b] =
              hess[static_cast<std::size_t>(free_idx[a]) * p + free_idx[b]];
        }
      }
      // In-place Cholesky solve; falls through on a non-SPD submatrix.
      newton_ok = true;
      for (int a = 0; a < nf && newton_ok; ++a) {
        for (int b = 0; b <= a; ++b) {
          double sum = hff[static_cast<std::size_t>(a) * nf + b];
          for (int k2 = 0; k2 < b; ++k2) {
            sum -= hff[static_cast<std::size_t>(a) * nf + k2] *
                   hff[static_cast<std::size_t>(b) * nf + k2];
          }
          if (a == b) {
            if (sum <= 1e-14) {
              newton_ok = false;
              break;
            }
            hff[static_cast<std::size_t>(a) * nf + b] = std::sqrt(sum);
          } else {
            hff[static_cast<std::size_t>(a) * nf + b] =
                sum / hff[static_cast<std::size_t>(b) * nf + b];
          }
        }
      }
      if (newton_ok) {
        for (int a = 0; a < nf; ++a) {
          double sum = rhs[a];
          for (int k2 = 0; k2 < a; ++k2) {
            sum -= hff[static_cast<std::size_t>(a) * nf + k2] * rhs[k2];
          }
          rhs[a] = sum / hff[static_cast<std::size_t>(a) * nf + a];
        }
        for (int a = nf - 1; a >= 0; --a) {
          double sum = rhs[a];
          for (int k2 = a + 1; k2 < nf; ++k2) {
            sum -= hff[static_cast<std::size_t>(k2) * nf + a] * rhs[k2];
          }
          rhs[a] = sum / hff[static_cast<std::size_t>(a) * nf + a];
        }
        for (int a = 0; a < nf; ++a) dir[free_idx[a]] = rhs[a];
      }
    }

    // Drop Newton components that immediately run into a bound; the line
    // search could not move along them anyway.
    for (int k = 0; k < p; ++k) {
      if (u[k] <= cfg.u_min + 1e-12 && dir[k] < 0.0) dir[k] = 0.0;
      if (u[k] >= cfg.u_max - 1e-12 && dir[k] > 0.0) dir[k] = 0.0;
    }
    double gd = std::inner_product(grad.begin(), grad.end(), dir.begin(), 0.0);
    if (!newton_ok || gd >= -1e-300) {
      for (int k = 0; k < p; ++k) dir[k] = clamp_box(u[k] - grad[k] / lips) - u[k];
      gd = std::inner_product(grad.begin(), grad.end(), dir.begin(), 0.0);
      if (gd >= 0.0) break;  // numerically stationary
    }

    // Largest feasible step along dir, then the exact minimizer on [0, t_max].
    double t_max = std::numeric_limits<double>::infinity();
    for (int k = 0; k < p; ++k) {
      if (dir[k] > 1e-300) t_max = std::min(t_max, (cfg.u_max - u[k]) / dir[k]);
      if (dir[k] < -1e-300) t_max = std::min(t_max, (cfg.u_min - u[k]) / dir[k]);
    }
    if (!std::isfinite(t_max)) t_max = 1.0;
    c.hessian_times(dir, scratch, hd);
    const double dhd = std::inner_product(dir.begin(), dir.end(), hd.begin(), 0.0);
    double t = t_max;
    if (dhd > 0.0) t = std::min(t_max, -gd / dhd);
    if (t <= 0.0) break;
    for (int k = 0; k < p; ++k) u[k] = clamp_box(u[k] + t * dir[k]);

    obj = c.objective(u, scratch);
    plan.objective_trace.push_back(obj);
  }

  plan.u = u;
  plan.objective = obj;
  plan.iterations = it;
  plan.converged = converged;
  plan.y.assign(p, 0.0);
  {
    double x = x0;
    for (int k = 0; k < p; ++k) {
      x = model.step(x, u[k], k == 0 ? u_prev : u[k - 1]);
      plan.y[k] = x;
    }
  }
  if (!converged) {
    throw SolverNotConverged("mpc: projected gradient hit the iteration cap",
                             plan);
  }
  return plan;
}

}  // namespace ahumpc::mpc
