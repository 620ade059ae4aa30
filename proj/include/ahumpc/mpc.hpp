#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ahumpc/fos.hpp"
#include "ahumpc/time_util.hpp"

namespace ahumpc::mpc {

struct MpcConfig {
  int horizon = 48;          // prediction (= control) horizon, steps
  int sampling_min = 30;     // minutes per step
  double u_min = 0.0;
  double u_max = 1.0;
  double tracking_weight = 1.0;
  double move_weight = 1.0;
  double comfort_lo_c = 20.0;
  double comfort_hi_c = 25.0;
  int max_iterations = 500;
  double kkt_tolerance = 1e-6;
};

struct SetpointFeedback {
  std::string user_id;
  double value_c = 0.0;
  Minute timestamp = 0;
};

// Numerical average of the occupant feedback that is still valid (no older
// than 4*tau_inc) after discarding implausible "emotional" values outside
// [comfort_lo - 4, comfort_hi + 4]. Falls back to the comfort-band midpoint
// when nothing remains.
double effective_setpoint(std::span<const SetpointFeedback> feedbacks,
                          Minute now, double tau_inc_min,
                          const MpcConfig& cfg = {});

// One-step state map for the AIT deviation x (relative to the EDF's initial
// temperature):
//
//   x[k+1] = a*x[k] + b_new*u[k] + b_prev*u[k-1]
//
// Exact zero-order-hold discretization of the deviation-form FOS. The dead
// time theta < sampling splits the interval: the previous input still acts
// for the first theta minutes, the new one for the remainder.
struct DiscreteFos {
  double a = 0.0;
  double b_new = 0.0;
  double b_prev = 0.0;

  double step(double x, double u_new, double u_prev) const {
    return a * x + b_new * u_new + b_prev * u_prev;
  }
};

// Throws std::invalid_argument when theta >= sampling.
DiscreteFos discretize_internal_model(const fos::FosParams& fos_inc,
                                      double sampling_min);

struct ControlPlan {
  std::vector<double> u;       // optimal inputs, horizon entries in [0,1]
  std::vector<double> y;       // predicted deviation trajectory x_1..x_p
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // per-iteration objective values
};

class SolverNotConverged : public std::runtime_error {
 public:
  SolverNotConverged(const std::string& what, ControlPlan best_plan)
      : std::runtime_error(what), best(std::move(best_plan)) {}
  ControlPlan best;
};

// Minimizes  sum_k  w_y*(x_k - ysp_k)^2 + w_u*(u_k - u_{k-1})^2  over the
// horizon subject to the box constraint on u, with u_{-1} = u_prev. Solved
// by projected gradient descent with an exact line search on the condensed
// quadratic. setpoints has horizon entries (targets for x_1..x_p), in the
// same deviation units as x0.
//
// Throws SolverNotConverged (carrying the best iterate) when the KKT
// residual is still above tolerance at the iteration cap.
ControlPlan solve(double x0, std::span<const double> setpoints,
                  const MpcConfig& cfg, const DiscreteFos& model,
                  double u_prev, std::span<const double> warm_start = {});

}  // namespace ahumpc::mpc
