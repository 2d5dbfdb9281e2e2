#include "attrib/bound_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <stdexcept>

#include "json.hpp"

namespace attrib {

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

constexpr double kRadicandGuard = -1e-10;

double radicand_scale(const BoundProblem& p) {
  double s = 1.0;
  if (p.radicand_q.size()) s += p.radicand_q.cwiseAbs().maxCoeff();
  if (p.radicand_lin.size()) s += p.radicand_lin.cwiseAbs().maxCoeff();
  return s;
}

/// Direct radicand t^T Q t + lin^T t (exact at integer points).
double direct_radicand(const BoundProblem& p, const Vec& t) {
  return t.dot(p.radicand_q * t) + p.lin().dot(t);
}

double exact_objective(const BoundProblem& p, const Vec& t) {
  double r = direct_radicand(p, t);
  const double scale = radicand_scale(p);
  if (r < kRadicandGuard * scale)
    throw std::runtime_error("negative radicand (" + std::to_string(r) +
                             "): split certificate violated");
  r = std::max(r, 0.0);
  const double s = (p.sense == Sense::Max) ? 1.0 : -1.0;
  return p.bar_w.dot(t) + s * p.z * std::sqrt(r);
}

bool feasible(const BoundProblem& p, const Vec& t, double tol = 1e-9) {
  for (const auto& con : p.constraints)
    if (con.a.dot(t) > con.b + tol * (1.0 + std::fabs(con.b))) return false;
  return true;
}

/// Maximize g^T y over box [lo,hi]; exact LP when at most one linear
/// constraint is present (fractional greedy), otherwise the box-only
/// relaxation (still a valid upper bound).
double linear_max(const Vec& g, const Vec& lo, const Vec& hi,
                  const std::vector<LinearConstraint>& constraints,
                  Vec* argmax = nullptr) {
  const int n = static_cast<int>(g.size());
  Vec y(n);
  for (int i = 0; i < n; ++i) y[i] = (g[i] > 0.0) ? hi[i] : lo[i];
  if (constraints.size() == 1) {
    const Vec& a = constraints[0].a;
    const double b = constraints[0].b;
    double val = a.dot(y);
    if (val > b) {
      // move coordinates toward the other bound, cheapest objective loss per
      // unit of constraint slack first
      std::vector<std::pair<double, int>> order;  // (|g|/|a|, i)
      for (int i = 0; i < n; ++i) {
        const bool at_hi = (y[i] == hi[i]);
        const double reduce = at_hi ? a[i] : -a[i];  // per unit moved inward
        if (reduce > 0.0 && hi[i] > lo[i])
          order.push_back({std::fabs(g[i]) / reduce, i});
      }
      std::sort(order.begin(), order.end());
      for (auto [ratio, i] : order) {
        if (val <= b) break;
        const bool at_hi = (y[i] == hi[i]);
        const double reduce_per_unit = at_hi ? a[i] : -a[i];
        const double room = hi[i] - lo[i];
        const double need = (val - b) / reduce_per_unit;
        const double move = std::min(room, need);
        y[i] += at_hi ? -move : move;
        val -= move * reduce_per_unit;
      }
      if (val > b + 1e-9 * (1.0 + std::fabs(b)))
        throw std::runtime_error("infeasible constraints");
    }
  }
  if (argmax) *argmax = y;
  return g.dot(y);
}

bool box_feasible(const std::vector<LinearConstraint>& constraints,
                  const Vec& lo, const Vec& hi) {
  for (const auto& con : constraints) {
    double mn = 0.0;
    for (int i = 0; i < con.a.size(); ++i)
      mn += (con.a[i] > 0.0) ? con.a[i] * lo[i] : con.a[i] * hi[i];
    if (mn > con.b + 1e-9 * (1.0 + std::fabs(con.b))) return false;
  }
  return true;
}

/// Dykstra's alternating projection onto box ∩ halfspaces.
Vec project(const BoundProblem& p, Vec x, const Vec& lo, const Vec& hi) {
  if (p.constraints.empty()) return x.cwiseMax(lo).cwiseMin(hi);
  const std::size_t n_sets = p.constraints.size() + 1;
  std::vector<Vec> increments(n_sets, Vec::Zero(x.size()));
  for (int iter = 0; iter < 200; ++iter) {
    double change = 0.0;
    for (std::size_t s = 0; s < n_sets; ++s) {
      Vec y = x + increments[s];
      Vec proj;
      if (s == 0) {
        proj = y.cwiseMax(lo).cwiseMin(hi);
      } else {
        const auto& con = p.constraints[s - 1];
        const double viol = con.a.dot(y) - con.b;
        proj = (viol > 0.0) ? Vec(y - con.a * (viol / con.a.squaredNorm())) : y;
      }
      increments[s] = y - proj;
      change += (proj - x).cwiseAbs().maxCoeff();
      x = proj;
    }
    if (change < 1e-12) break;
  }
  return x.cwiseMax(lo).cwiseMin(hi);
}

/// Node-level machinery: maximize c^T t + z * sqrt(chordified radicand) over
/// a sub-box. `c` is the sense-adjusted linear coefficient.
struct NodeSolver {
  const BoundProblem& p;
  Vec c;
  Mat q_minus_s;  // Q - diag(split)
  double scale;

  NodeSolver(const BoundProblem& problem, Vec c_in)
      : p(problem), c(std::move(c_in)) {
    q_minus_s = p.radicand_q;
    q_minus_s.diagonal() -= p.split.diagonal;
    scale = radicand_scale(p);
  }

  double radicand(const Vec& t, const Vec& lo, const Vec& hi) const {
    double r = t.dot(q_minus_s * t) + p.lin().dot(t);
    for (int i = 0; i < t.size(); ++i)
      r += p.split.diagonal[i] * ((lo[i] + hi[i]) * t[i] - lo[i] * hi[i]);
    return r;
  }

  Vec radicand_grad(const Vec& t, const Vec& lo, const Vec& hi) const {
    Vec g = 2.0 * (q_minus_s * t) + p.lin();
    g += p.split.diagonal.cwiseProduct(lo + hi);
    return g;
  }

  double value(const Vec& t, const Vec& lo, const Vec& hi) const {
    return c.dot(t) + p.z * std::sqrt(std::max(radicand(t, lo, hi), 0.0));
  }

  struct Relaxation {
    double bound = 0.0;  // certified upper bound on the node
    double inner = 0.0;  // value at the feasible iterate
    Vec point;
    bool feasible = true;
  };

  Relaxation solve(const Vec& lo, const Vec& hi, int max_iters) const {
    Relaxation res;
    if (!box_feasible(p.constraints, lo, hi)) {
      res.feasible = false;
      res.bound = -std::numeric_limits<double>::infinity();
      return res;
    }
    const double delta = 1e-12 * scale;
    Vec x = project(p, Vec(0.5 * (lo + hi)), lo, hi);
    double fx = value(x, lo, hi);
    double eta = 1.0 / (1.0 + q_minus_s.cwiseAbs().rowwise().sum().maxCoeff() +
                        p.split.diagonal.maxCoeff());
    const double f_tol = 1e-12 * (1.0 + std::fabs(fx));

    for (int iter = 0; iter < max_iters; ++iter) {
      const double r = radicand(x, lo, hi);
      const double den = std::max(std::sqrt(std::max(r, 0.0)), delta);
      Vec grad = c + (p.z / (2.0 * den)) * radicand_grad(x, lo, hi);
      bool moved = false;
      for (int bt = 0; bt < 40; ++bt) {
        Vec xn = project(p, Vec(x + eta * grad), lo, hi);
        const double fn = value(xn, lo, hi);
        if (fn > fx + f_tol) {
          x = std::move(xn);
          fx = fn;
          moved = true;
          eta *= 1.3;
          break;
        }
        eta *= 0.5;
        if (eta < 1e-16) break;
      }
      if (!moved) break;
    }

    // Certified outer bound 1: supergradient linearization at x.
    double bound = std::numeric_limits<double>::infinity();
    const double r = radicand(x, lo, hi);
    if (r > delta) {
      Vec g = c + (p.z / (2.0 * std::sqrt(r))) * radicand_grad(x, lo, hi);
      bound = fx + linear_max(g, lo, hi, p.constraints) - g.dot(x);
    }
    // Certified outer bound 2: decoupled linear + radicand-peak bound, valid
    // even when the iterate sits on the sqrt kink.
    {
      const Vec x0 = 0.5 * (lo + hi);
      const double r0 = radicand(x0, lo, hi);
      Vec gr = radicand_grad(x0, lo, hi);
      const double r_peak =
          r0 + linear_max(gr, lo, hi, p.constraints) - gr.dot(x0);  // concavity
      const double lin_peak = linear_max(c, lo, hi, p.constraints);
      bound = std::min(bound,
                       lin_peak + p.z * std::sqrt(std::max(r_peak, 0.0)));
    }
    // Note: not max(bound, fx) — the projected iterate can be marginally
    // infeasible, and both linearization bounds above are certified without it.
    res.bound = bound;
    res.inner = fx;
    res.point = std::move(x);
    return res;
  }
};

struct Node {
  Vec lo, hi;
  double bound;
  Vec point;
  long id;
};

struct NodeCompare {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;  // best-first
    return a.id > b.id;  // deterministic tie-break on creation index
  }
};

/// Rounds a relaxed point to the integer lattice, repairs constraint
/// violations greedily, then improves with 1-opt moves. Returns false if no
/// feasible integer point was reached.
bool make_incumbent(const BoundProblem& p, const NodeSolver& solver, Vec t,
                    const Vec& glo, const Vec& ghi, Vec* out, double* out_value) {
  for (int i = 0; i < t.size(); ++i)
    t[i] = std::clamp(std::round(t[i]), glo[i], ghi[i]);
  // repair: move coordinates inward, cheapest objective loss first
  for (const auto& con : p.constraints) {
    int guard = 0;
    while (con.a.dot(t) > con.b + 1e-9 * (1.0 + std::fabs(con.b))) {
      int best = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < t.size(); ++i) {
        const bool can_down = t[i] > glo[i] && con.a[i] > 0.0;
        const bool can_up = t[i] < ghi[i] && con.a[i] < 0.0;
        if (!can_down && !can_up) continue;
        const double ratio = std::fabs(solver.c[i]) / std::fabs(con.a[i]);
        if (ratio < best_ratio) {
          best_ratio = ratio;
          best = can_down ? i : ~i;
        }
      }
      if (best == -1 && guard == 0) return false;
      if (best >= 0)
        t[best] -= 1.0;
      else if (best != -1)
        t[~best] += 1.0;
      else
        return false;
      if (++guard > 4 * t.size() * t.size()) return false;
    }
  }
  if (!feasible(p, t)) return false;

  auto internal_value = [&](const Vec& v) {
    return solver.c.dot(v) +
           p.z * std::sqrt(std::max(direct_radicand(p, v), 0.0));
  };
  double val = internal_value(t);
  bool improved = true;
  int rounds = 0;
  while (improved && rounds++ < 50) {
    improved = false;
    for (int i = 0; i < t.size(); ++i) {
      for (double step : {1.0, -1.0}) {
        Vec tn = t;
        tn[i] += step;
        if (tn[i] < glo[i] || tn[i] > ghi[i] || !feasible(p, tn)) continue;
        const double vn = internal_value(tn);
        if (vn > val + 1e-14) {
          t = std::move(tn);
          val = vn;
          improved = true;
        }
      }
    }
  }
  *out = t;
  *out_value = val;
  return true;
}

}  // namespace

void BoundProblem::validate() const {
  const int n = dim();
  if (radicand_q.rows() != n || radicand_q.cols() != n)
    throw std::runtime_error("BoundProblem: Q shape mismatch");
  if (split.diagonal.size() != n)
    throw std::runtime_error("BoundProblem: split size mismatch");
  if (z < 0.0) throw std::runtime_error("BoundProblem: z must be >= 0");
  for (const auto& con : constraints)
    if (con.a.size() != n)
      throw std::runtime_error("BoundProblem: constraint length mismatch");
  const Vec l = lower(), h = upper();
  for (int i = 0; i < n; ++i)
    if (l[i] > h[i]) throw std::runtime_error("BoundProblem: empty box");
}

LinearConstraint mean_cap_constraint(int n, double cap) {
  LinearConstraint con;
  con.a = Vec::Constant(n, 1.0 / n);
  con.b = cap;
  return con;
}

BoundProblem make_bound_problem(const Eigen::VectorXd& bar_w,
                                const Eigen::MatrixXd& q, double z, Sense sense,
                                std::vector<LinearConstraint> constraints,
                                const std::string& split_method) {
  BoundProblem p;
  p.bar_w = bar_w;
  p.radicand_q = 0.5 * (q + q.transpose());
  p.split = split_by_method(p.radicand_q, split_method);
  p.z = z;
  p.sense = sense;
  p.constraints = std::move(constraints);
  p.validate();
  return p;
}

double objective(const Eigen::VectorXd& t, const BoundProblem& problem) {
  const Vec lo = problem.lower(), hi = problem.upper();
  for (int i = 0; i < t.size(); ++i)
    if (t[i] < lo[i] - 1e-9 || t[i] > hi[i] + 1e-9)
      throw std::runtime_error("objective: point outside box");
  NodeSolver solver(problem, problem.bar_w);
  double r = solver.radicand(t, lo, hi);
  if (r < kRadicandGuard * radicand_scale(problem))
    throw std::runtime_error("negative radicand (" + std::to_string(r) +
                             "): split certificate violated");
  const double s = (problem.sense == Sense::Max) ? 1.0 : -1.0;
  return problem.bar_w.dot(t) + s * problem.z * std::sqrt(std::max(r, 0.0));
}

SolveResult solve_relaxed(const BoundProblem& problem,
                          const SolverBudget& budget) {
  problem.validate();
  const double s = (problem.sense == Sense::Max) ? 1.0 : -1.0;
  NodeSolver solver(problem, Vec(s * problem.bar_w));
  const Vec lo = problem.lower(), hi = problem.upper();
  if (!box_feasible(problem.constraints, lo, hi))
    throw std::runtime_error("infeasible constraints");
  auto rel = solver.solve(lo, hi, budget.max_pgd_iterations);
  SolveResult result;
  result.value = s * rel.bound;
  result.incumbent = rel.point;
  result.incumbent_value = s * rel.inner;
  result.status = SolveStatus::RelaxationBound;
  result.gap = rel.bound - rel.inner;
  result.node_count = 1;
  return result;
}

SolveResult solve_bnb(const BoundProblem& problem, const SolverBudget& budget) {
  problem.validate();
  const double s = (problem.sense == Sense::Max) ? 1.0 : -1.0;
  NodeSolver solver(problem, Vec(s * problem.bar_w));
  const Vec glo = problem.lower(), ghi = problem.upper();
  if (!box_feasible(problem.constraints, glo, ghi))
    throw std::runtime_error("infeasible constraints");

  // Units with identical objective, radicand, and constraint coefficients are
  // candidates for a count collapse, which shrinks the binary search space to
  // per-group counts.  collapse_exchangeable re-verifies the grouping (the key
  // below ignores off-diagonal structure), so a false positive just means we
  // fall through to the direct solve.
  const int n = problem.dim();
  if (n > 1 && (glo.array() == 0.0).all() && (ghi.array() == 1.0).all()) {
    const Vec lin_all = problem.lin();
    std::map<std::vector<double>, int> key_to_group;
    std::vector<int> group_of(n);
    for (int i = 0; i < n; ++i) {
      std::vector<double> key{problem.bar_w[i], lin_all[i],
                              problem.radicand_q(i, i)};
      for (const auto& con : problem.constraints) key.push_back(con.a[i]);
      group_of[i] =
          key_to_group.try_emplace(std::move(key),
                                   static_cast<int>(key_to_group.size()))
              .first->second;
    }
    if (static_cast<int>(key_to_group.size()) < n) {
      bool collapsible = true;
      BoundProblem collapsed;
      try {
        collapsed = collapse_exchangeable(problem, group_of);
      } catch (const std::runtime_error&) {
        collapsible = false;
      }
      if (collapsible) {
        SolveResult res = solve_bnb(collapsed, budget);
        if (res.incumbent.size())
          res.incumbent = expand_counts(res.incumbent, group_of);
        return res;
      }
    }
  }

  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t_start)
        .count();
  };

  double best_value = -std::numeric_limits<double>::infinity();
  Vec best_point;
  long node_count = 0;
  long next_id = 0;

  std::priority_queue<Node, std::vector<Node>, NodeCompare> queue;
  auto push_node = [&](Vec lo, Vec hi) {
    auto rel = solver.solve(lo, hi, budget.max_pgd_iterations);
    ++node_count;
    if (!rel.feasible) return;
    Vec cand;
    double cand_value;
    if (make_incumbent(problem, solver, rel.point, glo, ghi, &cand, &cand_value) &&
        cand_value > best_value) {
      best_value = cand_value;
      best_point = cand;
    }
    const double tol = 1e-9 * (1.0 + std::fabs(best_value));
    if (rel.bound <= best_value + tol) return;  // pruned
    queue.push(Node{std::move(lo), std::move(hi), rel.bound,
                    std::move(rel.point), next_id++});
  };

  push_node(glo, ghi);
  bool exhausted = false;
  double remaining_bound = -std::numeric_limits<double>::infinity();

  while (!queue.empty()) {
    const double tol = 1e-9 * (1.0 + std::fabs(best_value));
    if (node_count >= budget.node_budget ||
        elapsed() > budget.time_budget_seconds) {
      exhausted = true;
      remaining_bound = queue.top().bound;
      break;
    }
    Node node = queue.top();
    queue.pop();
    if (node.bound <= best_value + tol) continue;

    // branch: most fractional coordinate; fall back to widest range
    int var = -1;
    double best_frac = 1e-7;
    for (int i = 0; i < node.point.size(); ++i) {
      if (node.hi[i] - node.lo[i] < 0.5) continue;
      const double frac =
          std::min(node.point[i] - std::floor(node.point[i]),
                   std::ceil(node.point[i]) - node.point[i]);
      if (frac > best_frac) {
        best_frac = frac;
        var = i;
      }
    }
    if (var < 0) {
      double widest = 0.5;
      for (int i = 0; i < node.point.size(); ++i)
        if (node.hi[i] - node.lo[i] > widest) {
          widest = node.hi[i] - node.lo[i];
          var = i;
        }
    }
    if (var < 0) continue;  // fully fixed node; bound == value, already used

    const double split_at =
        std::clamp(std::floor(node.point[var]), node.lo[var], node.hi[var] - 1.0);
    Vec lo1 = node.lo, hi1 = node.hi, lo2 = node.lo, hi2 = node.hi;
    hi1[var] = split_at;
    lo2[var] = split_at + 1.0;
    push_node(std::move(lo1), std::move(hi1));
    push_node(std::move(lo2), std::move(hi2));
  }

  SolveResult result;
  result.node_count = node_count;
  if (!exhausted) {
    result.status = SolveStatus::Exact;
    result.value = s * best_value;
    result.incumbent = best_point;
    result.incumbent_value = s * best_value;
    result.gap = 0.0;
  } else {
    const double bound = std::max(remaining_bound, best_value);
    result.status = SolveStatus::BudgetExhaustedBound;
    result.value = s * bound;
    result.incumbent = best_point;
    result.incumbent_value = s * best_value;
    result.gap = bound - best_value;
  }
  return result;
}

SolveResult brute_force(const BoundProblem& problem) {
  problem.validate();
  const Vec lo = problem.lower(), hi = problem.upper();
  const int n = problem.dim();
  double points = 1.0;
  for (int i = 0; i < n; ++i) points *= hi[i] - lo[i] + 1.0;
  if (points > 4.3e6)
    throw std::runtime_error("brute_force: lattice too large (" +
                             std::to_string(points) + " points)");

  const double s = (problem.sense == Sense::Max) ? 1.0 : -1.0;
  const Vec c = s * problem.bar_w;
  const Vec lin = problem.lin();

  Vec t = lo;
  Vec qt = problem.radicand_q * t;  // maintained incrementally
  double r = t.dot(qt) + lin.dot(t);
  double cv = c.dot(t);
  std::vector<double> con_val(problem.constraints.size());
  for (std::size_t k = 0; k < problem.constraints.size(); ++k)
    con_val[k] = problem.constraints[k].a.dot(t);

  double best = -std::numeric_limits<double>::infinity();
  Vec best_t;
  auto consider = [&] {
    for (std::size_t k = 0; k < problem.constraints.size(); ++k)
      if (con_val[k] >
          problem.constraints[k].b +
              1e-12 * (1.0 + std::fabs(problem.constraints[k].b)))
        return;
    const double val = cv + problem.z * std::sqrt(std::max(r, 0.0));
    if (val > best) {
      best = val;
      best_t = t;
    }
  };
  auto step = [&](int i, double delta) {
    r += delta * (2.0 * qt[i] + delta * problem.radicand_q(i, i) + lin[i]);
    qt += delta * problem.radicand_q.col(i);
    cv += delta * c[i];
    for (std::size_t k = 0; k < problem.constraints.size(); ++k)
      con_val[k] += delta * problem.constraints[k].a[i];
    t[i] += delta;
  };

  // DFS with single-coordinate increments so updates stay O(N) per point
  std::function<void(int)> recurse = [&](int depth) {
    if (depth == n) {
      consider();
      return;
    }
    recurse(depth + 1);
    const int range = static_cast<int>(hi[depth] - lo[depth]);
    for (int v = 0; v < range; ++v) {
      step(depth, 1.0);
      recurse(depth + 1);
    }
    step(depth, -static_cast<double>(range));
  };
  recurse(0);

  if (!std::isfinite(best))
    throw std::runtime_error("brute_force: no feasible point");
  SolveResult result;
  result.status = SolveStatus::Exact;
  result.value = s * best;
  result.incumbent = best_t;
  result.incumbent_value = s * best;
  result.node_count = static_cast<long>(points);
  result.gap = 0.0;
  return result;
}

BoundProblem collapse_exchangeable(const BoundProblem& problem,
                                   const std::vector<int>& group_of) {
  problem.validate();
  const int n = problem.dim();
  if (static_cast<int>(group_of.size()) != n)
    throw std::runtime_error("collapse: group map length mismatch");
  const Vec lo = problem.lower(), hi = problem.upper();
  for (int i = 0; i < n; ++i)
    if (lo[i] != 0.0 || hi[i] != 1.0)
      throw std::runtime_error("collapse: source problem must be binary");

  int n_groups = 0;
  for (int g : group_of) n_groups = std::max(n_groups, g + 1);
  std::vector<std::vector<int>> members(n_groups);
  for (int i = 0; i < n; ++i) {
    if (group_of[i] < 0) throw std::runtime_error("collapse: negative group");
    members[group_of[i]].push_back(i);
  }
  for (const auto& m : members)
    if (m.empty()) throw std::runtime_error("collapse: empty group");

  const double scale = radicand_scale(problem);
  const double tol = 1e-10 * scale;
  auto check_const = [&](double a, double b, const char* what) {
    if (std::fabs(a - b) > tol)
      throw std::runtime_error(std::string("collapse: ") + what +
                               " not exchangeable within groups");
  };

  const Vec lin = problem.lin();
  Vec bar(n_groups), lin_g(n_groups), q_diag(n_groups);
  Mat q_off = Mat::Zero(n_groups, n_groups);
  for (int g = 0; g < n_groups; ++g) {
    const auto& mg = members[g];
    bar[g] = problem.bar_w[mg[0]];
    lin_g[g] = lin[mg[0]];
    q_diag[g] = problem.radicand_q(mg[0], mg[0]);
    for (int i : mg) {
      check_const(problem.bar_w[i], bar[g], "bar_w");
      check_const(lin[i], lin_g[g], "radicand linear term");
      check_const(problem.radicand_q(i, i), q_diag[g], "Q diagonal");
    }
    // within-group off-diagonal
    if (mg.size() >= 2) {
      q_off(g, g) = problem.radicand_q(mg[0], mg[1]);
      for (std::size_t a = 0; a < mg.size(); ++a)
        for (std::size_t b = a + 1; b < mg.size(); ++b)
          check_const(problem.radicand_q(mg[a], mg[b]), q_off(g, g),
                      "Q within-group block");
    }
    for (int h = 0; h < g; ++h) {
      q_off(g, h) = problem.radicand_q(members[g][0], members[h][0]);
      for (int i : members[g])
        for (int j : members[h])
          check_const(problem.radicand_q(i, j), q_off(g, h),
                      "Q cross-group block");
      q_off(h, g) = q_off(g, h);
    }
  }

  BoundProblem collapsed;
  collapsed.bar_w = bar;
  collapsed.radicand_q = q_off;
  collapsed.radicand_lin = q_diag - q_off.diagonal();
  collapsed.radicand_lin += lin_g;
  collapsed.z = problem.z;
  collapsed.sense = problem.sense;
  collapsed.lo = Vec::Zero(n_groups);
  collapsed.hi = Vec(n_groups);
  for (int g = 0; g < n_groups; ++g)
    collapsed.hi[g] = static_cast<double>(members[g].size());
  for (const auto& con : problem.constraints) {
    LinearConstraint cg;
    cg.a.resize(n_groups);
    cg.b = con.b;
    for (int g = 0; g < n_groups; ++g) {
      cg.a[g] = con.a[members[g][0]];
      for (int i : members[g])
        check_const(con.a[i], cg.a[g], "constraint coefficients");
    }
    collapsed.constraints.push_back(std::move(cg));
  }
  collapsed.split = sdp_lite_split(collapsed.radicand_q);
  collapsed.validate();
  return collapsed;
}

Eigen::VectorXd expand_counts(const Eigen::VectorXd& counts,
                              const std::vector<int>& group_of) {
  Vec t = Vec::Zero(group_of.size());
  std::vector<int> remaining(counts.size());
  for (int g = 0; g < counts.size(); ++g)
    remaining[g] = static_cast<int>(std::lround(counts[g]));
  for (std::size_t i = 0; i < group_of.size(); ++i)
    if (remaining[group_of[i]] > 0) {
      t[i] = 1.0;
      remaining[group_of[i]]--;
    }
  return t;
}

std::string problem_to_json(const BoundProblem& problem) {
  nlohmann::json j;
  j["bar_w"] = std::vector<double>(problem.bar_w.data(),
                                   problem.bar_w.data() + problem.bar_w.size());
  std::vector<std::vector<double>> q;
  for (int i = 0; i < problem.radicand_q.rows(); ++i)
    q.emplace_back(problem.radicand_q.row(i).begin(),
                   problem.radicand_q.row(i).end());
  j["Q"] = q;
  if (problem.radicand_lin.size())
    j["lin"] = std::vector<double>(
        problem.radicand_lin.data(),
        problem.radicand_lin.data() + problem.radicand_lin.size());
  j["z"] = problem.z;
  j["sense"] = (problem.sense == Sense::Max) ? "max" : "min";
  for (const auto& con : problem.constraints)
    j["constraints"].push_back(
        {{"a", std::vector<double>(con.a.data(), con.a.data() + con.a.size())},
         {"b", con.b}});
  if (problem.lo.size())
    j["lo"] = std::vector<double>(problem.lo.data(),
                                  problem.lo.data() + problem.lo.size());
  if (problem.hi.size())
    j["hi"] = std::vector<double>(problem.hi.data(),
                                  problem.hi.data() + problem.hi.size());
  j["split"] = {{"method", problem.split.method},
                {"diagonal",
                 std::vector<double>(problem.split.diagonal.data(),
                                     problem.split.diagonal.data() +
                                         problem.split.diagonal.size())}};
  return j.dump(2);
}

BoundProblem problem_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  BoundProblem p;
  auto to_vec = [](const nlohmann::json& arr) {
    Vec v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v[i] = arr[i].get<double>();
    return v;
  };
  p.bar_w = to_vec(j.at("bar_w"));
  const auto& q = j.at("Q");
  p.radicand_q.resize(q.size(), q.size());
  for (std::size_t i = 0; i < q.size(); ++i)
    for (std::size_t k = 0; k < q[i].size(); ++k)
      p.radicand_q(i, k) = q[i][k].get<double>();
  if (j.contains("lin")) p.radicand_lin = to_vec(j["lin"]);
  p.z = j.value("z", 1.959963984540054);
  p.sense = (j.value("sense", "max") == "min") ? Sense::Min : Sense::Max;
  if (j.contains("constraints"))
    for (const auto& jc : j["constraints"])
      p.constraints.push_back({to_vec(jc.at("a")), jc.at("b").get<double>()});
  if (j.contains("mean_cap"))
    p.constraints.push_back(
        mean_cap_constraint(p.dim(), j["mean_cap"].get<double>()));
  if (j.contains("lo")) p.lo = to_vec(j["lo"]);
  if (j.contains("hi")) p.hi = to_vec(j["hi"]);
  if (j.contains("split")) {
    p.split.diagonal = to_vec(j["split"].at("diagonal"));
    p.split.method = j["split"].value("method", "external");
    p.split.max_eigenvalue = verify_split(p.radicand_q, p.split.diagonal);
    if (p.split.max_eigenvalue > kSplitTolerance)
      throw std::runtime_error("loaded split certificate is not feasible");
    p.split.trace = p.split.diagonal.sum();
  } else {
    p.split = sdp_lite_split(0.5 * (p.radicand_q + p.radicand_q.transpose()));
  }
  p.radicand_q = 0.5 * (p.radicand_q + p.radicand_q.transpose());
  p.validate();
  return p;
}

}  // namespace attrib
