#include "cpirt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Dense>

namespace cpirt {

namespace {

using Vec = Eigen::VectorXd;

Vec to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

struct Trial {
  double step = 0.0;
  double value = std::numeric_limits<double>::infinity();
  double slope = 0.0;
  Vec x;
  Vec grad;
  bool finite() const { return std::isfinite(value) && grad.allFinite(); }
};

// Minimiser of the cubic interpolating (a, fa, da) and (b, fb, db), kept
// inside the interval by falling back to bisection.
double interpolate(const Trial& lo, const Trial& hi) {
  const double a = lo.step, b = hi.step;
  const double d1 = lo.slope + hi.slope - 3.0 * (lo.value - hi.value) / (a - b);
  const double disc = d1 * d1 - lo.slope * hi.slope;
  double t = 0.5 * (a + b);
  if (disc >= 0.0 && std::isfinite(hi.value)) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double denom = hi.slope - lo.slope + 2.0 * d2;
    if (denom != 0.0) t = b - (b - a) * (hi.slope + d2 - d1) / denom;
  }
  const double left = std::min(a, b), right = std::max(a, b), width = right - left;
  if (!std::isfinite(t) || t < left + 0.1 * width || t > right - 0.1 * width) t = 0.5 * (a + b);
  return t;
}

class LineSearch {
 public:
  LineSearch(const Objective& f, const Vec& x, const Vec& dir, double f0, double slope0,
             const BfgsOptions& opt, std::size_t& evaluations)
      : f_(f), x_(x), dir_(dir), f0_(f0), slope0_(slope0), opt_(opt), evals_(evaluations) {}

  // Returns a trial satisfying the strong Wolfe conditions, or the best
  // decreasing point seen when the budget runs out. `ok` is false when no
  // decrease was found at all.
  Trial run(double initial_step, bool& ok) {
    Trial prev{0.0, f0_, slope0_, x_, Vec()};
    double step = initial_step;
    double step_max = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; budget_left(); ++i) {
      Trial cur = evaluate(step);
      if (!cur.finite()) {
        step_max = step;
        step = 0.5 * (prev.step + step);
        continue;
      }
      if (cur.value > f0_ + opt_.armijo * step * slope0_ || (i > 0 && cur.value >= prev.value))
        return zoom(prev, cur, ok);
      if (std::abs(cur.slope) <= -opt_.curvature * slope0_) {
        ok = true;
        return cur;
      }
      if (cur.slope >= 0.0) return zoom(cur, prev, ok);
      prev = cur;
      step = std::isfinite(step_max) ? 0.5 * (step + step_max) : 2.0 * step;
    }
    return fallback(ok);
  }

 private:
  bool budget_left() const { return used_ < opt_.max_line_search_evaluations; }

  Trial evaluate(double step) {
    Trial t;
    t.step = step;
    t.x = x_ + step * dir_;
    std::vector<double> g;
    t.value = f_(to_std(t.x), g);
    t.grad = to_eigen(g);
    ++used_;
    ++evals_;
    if (t.finite()) {
      t.slope = t.grad.dot(dir_);
      if (t.value < f0_ && (!best_ || t.value < best_->value)) best_ = t;
    }
    return t;
  }

  Trial zoom(Trial lo, Trial hi, bool& ok) {
    while (budget_left()) {
      const double step = interpolate(lo, hi);
      if (std::abs(hi.step - lo.step) < 1e-16 * std::max(1.0, std::abs(lo.step))) break;
      Trial cur = evaluate(step);
      if (!cur.finite() || cur.value > f0_ + opt_.armijo * step * slope0_ ||
          cur.value >= lo.value) {
        hi = cur;
        if (!cur.finite()) hi.value = std::numeric_limits<double>::infinity();
        continue;
      }
      if (std::abs(cur.slope) <= -opt_.curvature * slope0_) {
        ok = true;
        return cur;
      }
      if (cur.slope * (hi.step - lo.step) >= 0.0) hi = lo;
      lo = cur;
    }
    return fallback(ok);
  }

  Trial fallback(bool& ok) {
    ok = best_.has_value();
    return ok ? *best_ : Trial{};
  }

  const Objective& f_;
  const Vec& x_;
  const Vec& dir_;
  double f0_, slope0_;
  const BfgsOptions& opt_;
  std::size_t& evals_;
  std::size_t used_ = 0;
  std::optional<Trial> best_;
};

}  // namespace

BfgsResult minimize_bfgs(const Objective& objective, std::vector<double> x0,
                         const BfgsOptions& options) {
  BfgsResult res;
  const auto n = static_cast<Eigen::Index>(x0.size());
  Vec x = to_eigen(x0);
  std::vector<double> g_std;
  double fx = objective(x0, g_std);
  ++res.evaluations;
  Vec g = to_eigen(g_std);
  if (!std::isfinite(fx) || !g.allFinite()) {
    res.x = std::move(x0);
    res.value = fx;
    res.gradient = g_std;
    res.gradient_norm = std::numeric_limits<double>::infinity();
    return res;
  }

  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;
  bool last_was_reset = false;
  while (true) {
    const double gnorm = n == 0 ? 0.0 : g.cwiseAbs().maxCoeff();
    if (gnorm < options.gradient_tolerance) {
      res.converged = true;
      break;
    }
    if (res.iterations >= options.max_iterations) break;

    Vec dir = -H * g;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      H.setIdentity();
      scaled = false;
      dir = -g;
      slope = g.dot(dir);
    }
    const double initial_step = scaled ? 1.0 : std::min(1.0, 1.0 / g.norm());
    bool ok = false;
    LineSearch search(objective, x, dir, fx, slope, options, res.evaluations);
    Trial t = search.run(initial_step, ok);
    if (!ok) {
      if (last_was_reset || !scaled) {
        res.line_search_failed = true;
        break;
      }
      // Retry once from a fresh steepest-descent model.
      H.setIdentity();
      scaled = false;
      last_was_reset = true;
      continue;
    }
    last_was_reset = false;

    const Vec s = t.x - x;
    const Vec y = t.grad - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        H = Eigen::MatrixXd::Identity(n, n) * (sy / y.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Vec Hy = H * y;
      const double yHy = y.dot(Hy);
      H += ((1.0 + rho * yHy) * rho) * (s * s.transpose()) -
           rho * (Hy * s.transpose() + s * Hy.transpose());
    }
    x = t.x;
    g = t.grad;
    fx = t.value;
    ++res.iterations;
    res.trace.push_back(fx);
  }

  res.x = to_std(x);
  res.value = fx;
  res.gradient = to_std(g);
  res.gradient_norm = n == 0 ? 0.0 : g.cwiseAbs().maxCoeff();
  return res;
}

}  // namespace cpirt
