#include "attrib/moments.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <stdexcept>

#include "attrib/exposure.hpp"

namespace attrib {

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

Mat symmetrize_and_clip(Mat q) {
  q = 0.5 * (q + q.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Mat> eig(q);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("moments: eigensolve failed during PSD clip");
  Vec vals = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

/// Exposed indicator for the weighted/matched bar_w forms.
Eigen::VectorXi exposed_indicator(const ExperimentData& data,
                                  const Eigen::VectorXi& treatment, int z_min) {
  return threshold_exposure(compute_exposure(data.out_edges, treatment), z_min);
}

}  // namespace

WeightMoments mc_weight_moments(const WeightScheme& scheme,
                                const ExperimentData& data,
                                const DesignDescriptor& design, long r,
                                std::uint64_t seed) {
  if (r < 2) throw std::runtime_error("mc_weight_moments: need r >= 2");
  design.validate(data.n_units);
  const int n = data.n_units;

  Vec sum_w = Vec::Zero(n);
  Vec sum_w2 = Vec::Zero(n);
  Mat sum_ww = Mat::Zero(n, n);
  long ok = 0, failed = 0;

  // bar_w accumulators, populated per scheme kind
  Mat sum_design;  // N x d (regression types)
  Mat sum_gram;    // d x d
  Vec contrast;
  Vec sum_exposed = Vec::Zero(n);               // Weighted
  Vec sum_class_n1, sum_class_n0;               // Weighted, per class
  Vec sum_expected_matched = Vec::Zero(n);      // Matched / ExpectedMatched
  const bool regression_type = scheme.is_regression_type();
  const bool weighted_type = scheme.kind == WeightScheme::Kind::Weighted;
  const bool matched_type = scheme.kind == WeightScheme::Kind::Matched ||
                            scheme.kind == WeightScheme::Kind::ExpectedMatched;
  if (weighted_type || matched_type) {
    sum_class_n1 = Vec::Zero(scheme.classes.n_classes());
    sum_class_n0 = Vec::Zero(scheme.classes.n_classes());
  }

  for (long idx = 0; idx < r; ++idx) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(idx)));
    const Eigen::VectorXi x = draw_treatment(design, n, rng, idx);
    Vec w;
    try {
      w = scheme.build(data, x);
    } catch (const std::runtime_error&) {
      ++failed;
      continue;
    }
    ++ok;
    sum_w += w;
    sum_w2 += w.cwiseProduct(w);
    sum_ww.selfadjointView<Eigen::Lower>().rankUpdate(w);

    if (regression_type) {
      auto [design_mat, c] = scheme.design(data, x);
      if (sum_design.size() == 0) {
        sum_design = Mat::Zero(design_mat.rows(), design_mat.cols());
        sum_gram = Mat::Zero(design_mat.cols(), design_mat.cols());
        contrast = c;
      }
      sum_design += design_mat;
      sum_gram += design_mat.transpose() * design_mat;
    } else if (weighted_type || matched_type) {
      const Eigen::VectorXi exposed = exposed_indicator(data, x, scheme.z_min);
      for (int i = 0; i < n; ++i) {
        sum_exposed[i] += exposed[i];
        if (exposed[i])
          sum_class_n1[scheme.classes.class_of[i]] += 1.0;
        else
          sum_class_n0[scheme.classes.class_of[i]] += 1.0;
      }
      if (matched_type)
        sum_expected_matched +=
            expected_matched_weights(exposed, scheme.classes);
    }
  }

  if (ok == 0 || failed > ok)
    throw std::runtime_error("mc_weight_moments: builder failure rate " +
                             std::to_string(failed) + "/" + std::to_string(r) +
                             " exceeds 50%");

  WeightMoments m;
  m.method = "monte-carlo";
  m.replications = ok;
  m.failed_draws = failed;
  m.seed = seed;
  m.mean_w = sum_w / static_cast<double>(ok);
  Mat second = Mat(sum_ww.selfadjointView<Eigen::Lower>()) / static_cast<double>(ok);
  m.q = symmetrize_and_clip(second - m.mean_w * m.mean_w.transpose());
  m.mc_standard_errors =
      ((sum_w2 / static_cast<double>(ok) - m.mean_w.cwiseProduct(m.mean_w))
           .cwiseMax(0.0) /
       static_cast<double>(ok))
          .cwiseSqrt();

  if (regression_type) {
    const Mat avg_gram = sum_gram / static_cast<double>(ok);
    Eigen::SelfAdjointEigenSolver<Mat> eig(avg_gram, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    const double lmax = eig.eigenvalues().maxCoeff();
    if (lmin <= 0.0 || lmax / lmin > 1e12)
      throw std::runtime_error("mc_weight_moments: singular averaged design");
    m.bar_w = (sum_design / static_cast<double>(ok)) *
              avg_gram.ldlt().solve(contrast);
  } else if (weighted_type) {
    // expected class-share form: (n_k/N) (E[W_i]/E[n_k1] - E[1-W_i]/E[n_k0])
    m.bar_w = Vec::Zero(n);
    const double n_total = static_cast<double>(n);
    for (int i = 0; i < n; ++i) {
      const int k = scheme.classes.class_of[i];
      const double share = scheme.classes.sizes[k] / n_total;
      const double e_w = sum_exposed[i] / static_cast<double>(ok);
      const double e_n1 = sum_class_n1[k] / static_cast<double>(ok);
      const double e_n0 = sum_class_n0[k] / static_cast<double>(ok);
      double v = 0.0;
      if (e_n1 > 0.0) v += e_w / e_n1;
      if (e_n0 > 0.0) v -= (1.0 - e_w) / e_n0;
      m.bar_w[i] = share * v;
    }
  } else if (matched_type) {
    m.bar_w = sum_expected_matched / static_cast<double>(ok);
  } else {
    m.bar_w = m.mean_w;
  }
  return m;
}

WeightMoments analytic_tau1_moments(int n_units, int n1) {
  const int n0 = n_units - n1;
  if (n1 <= 0 || n0 <= 0)
    throw std::runtime_error("analytic_tau1_moments: degenerate arms");
  WeightMoments m;
  m.method = "analytic";
  m.mean_w = Vec::Zero(n_units);
  m.bar_w = Vec::Zero(n_units);
  const double var = 1.0 / (static_cast<double>(n1) * n0);
  const double cov = -var / (n_units - 1);
  m.q = Mat::Constant(n_units, n_units, cov);
  m.q.diagonal().setConstant(var);
  return m;
}

std::pair<double, double> bias_bound(const Eigen::VectorXd& mean_w) {
  // sequential accumulation so the bounds agree bit-for-bit with a subset-sum
  // enumeration in index order (Eigen's sum() reorders additions)
  double lo = 0.0, hi = 0.0;
  for (int i = 0; i < mean_w.size(); ++i) {
    lo += std::min(mean_w[i], 0.0);
    hi += std::max(mean_w[i], 0.0);
  }
  return {lo, hi};
}

std::vector<Eigen::VectorXd> expectation_controls(
    const ExperimentData& data, const DesignDescriptor& design,
    const std::vector<Term>& terms, long r, std::uint64_t seed) {
  if (r < 1) throw std::runtime_error("expectation_controls: need r >= 1");
  design.validate(data.n_units);
  RegressorSpec spec;
  spec.terms = terms;
  Mat sum = Mat::Zero(data.n_units, static_cast<int>(terms.size()));
  for (long idx = 0; idx < r; ++idx) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(idx)));
    const Eigen::VectorXi x = draw_treatment(design, data.n_units, rng, idx);
    sum += build_design(data, x, spec);
  }
  sum /= static_cast<double>(r);
  std::vector<Vec> out;
  for (int j = 0; j < sum.cols(); ++j) out.push_back(sum.col(j));
  return out;
}

namespace {

/// Regressor value for a unit in group g with own treatment x; valid only for
/// group-measurable terms.
double cell_term_value(const Term& term, const ExperimentData& data,
                       int representative_unit, double x) {
  switch (term.kind) {
    case Term::Kind::Constant:
      return 1.0;
    case Term::Kind::OwnTreatment:
      return x;
    case Term::Kind::Covariate: {
      auto it = data.covariates.find(term.column);
      if (it == data.covariates.end())
        throw std::runtime_error("grouped moments: unknown covariate '" +
                                 term.column + "'");
      return it->second[representative_unit];
    }
    case Term::Kind::Interaction:
      return cell_term_value(term.factors.at(0), data, representative_unit, x) *
             cell_term_value(term.factors.at(1), data, representative_unit, x);
    default:
      throw std::runtime_error(
          "grouped moments: term is not a function of (group, own treatment)");
  }
}

void check_group_constant(const ExperimentData& data, const Term& term,
                          const std::vector<std::vector<int>>& members) {
  if (term.kind == Term::Kind::Covariate) {
    const Vec& col = data.covariates.at(term.column);
    for (const auto& m : members)
      for (int i : m)
        if (col[i] != col[m[0]])
          throw std::runtime_error("grouped moments: covariate '" +
                                   term.column +
                                   "' is not constant within groups");
  }
  for (const auto& f : term.factors) check_group_constant(data, f, members);
}

}  // namespace

GroupedMoments mc_grouped_moments(const WeightScheme& scheme,
                                  const ExperimentData& data,
                                  const std::vector<int>& group_of,
                                  const DesignDescriptor& design, long r,
                                  std::uint64_t seed) {
  if (r < 2) throw std::runtime_error("mc_grouped_moments: need r >= 2");
  design.validate(data.n_units);
  if (design.kind != DesignDescriptor::Kind::Srs &&
      design.kind != DesignDescriptor::Kind::Bernoulli)
    throw std::runtime_error(
        "mc_grouped_moments: only srs and bernoulli designs supported");
  const int n = data.n_units;
  if (static_cast<int>(group_of.size()) != n)
    throw std::runtime_error("mc_grouped_moments: group map length mismatch");

  int n_groups = 0;
  for (int g : group_of) {
    if (g < 0) throw std::runtime_error("mc_grouped_moments: negative group");
    n_groups = std::max(n_groups, g + 1);
  }
  std::vector<std::vector<int>> members(n_groups);
  for (int i = 0; i < n; ++i) members[group_of[i]].push_back(i);
  std::vector<int> sizes(n_groups);
  for (int g = 0; g < n_groups; ++g) {
    if (members[g].empty())
      throw std::runtime_error("mc_grouped_moments: empty group");
    sizes[g] = static_cast<int>(members[g].size());
  }

  const bool is_tau1 = scheme.kind == WeightScheme::Kind::Tau1;
  const bool is_regression = scheme.kind == WeightScheme::Kind::Regression;
  if (!is_tau1 && !is_regression)
    throw std::runtime_error(
        "mc_grouped_moments: scheme must be tau1 or regression");

  // Cell regressor vectors xi_{g,x}, constant across draws.
  int d = 0;
  Mat xi1, xi0;  // n_groups x d
  Vec contrast;
  if (is_regression) {
    for (const auto& term : scheme.spec.terms)
      check_group_constant(data, term, members);
    d = static_cast<int>(scheme.spec.terms.size());
    contrast = scheme.spec.contrast;
    xi1.resize(n_groups, d);
    xi0.resize(n_groups, d);
    for (int g = 0; g < n_groups; ++g)
      for (int j = 0; j < d; ++j) {
        xi1(g, j) = cell_term_value(scheme.spec.terms[j], data, members[g][0], 1.0);
        xi0(g, j) = cell_term_value(scheme.spec.terms[j], data, members[g][0], 0.0);
      }
  }

  Vec sum_mean = Vec::Zero(n_groups);
  Vec sum_sq = Vec::Zero(n_groups);  // E[w_i^2]
  Mat sum_cross = Mat::Zero(n_groups, n_groups);  // E[w_i w_j], i != j
  Mat sum_gram = Mat::Zero(d, d);
  Mat sum_xi = Mat::Zero(n_groups, d);  // E[xi_i] for i in group g

  for (long idx = 0; idx < r; ++idx) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(idx)));
    // treated count per group
    std::vector<long> m(n_groups);
    if (design.kind == DesignDescriptor::Kind::Srs) {
      int pool = n, marked = design.n1;
      for (int g = 0; g < n_groups; ++g) {
        m[g] = hypergeometric(rng, pool, marked, sizes[g]);
        pool -= sizes[g];
        marked -= static_cast<int>(m[g]);
      }
    } else {
      for (int g = 0; g < n_groups; ++g)
        m[g] = std::binomial_distribution<long>(sizes[g], design.rho)(rng);
    }

    // cell weight values v_{g,x}
    Vec v1(n_groups), v0(n_groups);
    if (is_tau1) {
      long n1 = 0;
      for (int g = 0; g < n_groups; ++g) n1 += m[g];
      const long n0 = n - n1;
      if (n1 == 0 || n0 == 0) continue;  // degenerate bernoulli draw
      v1.setConstant(1.0 / n1);
      v0.setConstant(-1.0 / n0);
    } else {
      Mat gram = Mat::Zero(d, d);
      for (int g = 0; g < n_groups; ++g) {
        gram += m[g] * (xi1.row(g).transpose() * xi1.row(g));
        gram += (sizes[g] - m[g]) * (xi0.row(g).transpose() * xi0.row(g));
      }
      Eigen::LDLT<Mat> ldlt(gram);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) continue;
      const Vec gc = ldlt.solve(contrast);
      v1 = xi1 * gc;
      v0 = xi0 * gc;
      sum_gram += gram;
      for (int g = 0; g < n_groups; ++g) {
        const double frac = static_cast<double>(m[g]) / sizes[g];
        sum_xi.row(g) += frac * xi1.row(g) + (1.0 - frac) * xi0.row(g);
      }
    }

    Vec s(n_groups), p(n_groups);
    for (int g = 0; g < n_groups; ++g) {
      s[g] = m[g] * v1[g] + (sizes[g] - m[g]) * v0[g];
      p[g] = m[g] * v1[g] * v1[g] + (sizes[g] - m[g]) * v0[g] * v0[g];
      sum_mean[g] += s[g] / sizes[g];
      sum_sq[g] += p[g] / sizes[g];
    }
    for (int g = 0; g < n_groups; ++g) {
      if (sizes[g] >= 2)
        sum_cross(g, g) +=
            (s[g] * s[g] - p[g]) / (static_cast<double>(sizes[g]) * (sizes[g] - 1));
      for (int h = 0; h < g; ++h) {
        const double c = s[g] * s[h] /
                         (static_cast<double>(sizes[g]) * sizes[h]);
        sum_cross(g, h) += c;
        sum_cross(h, g) += c;
      }
    }
  }

  GroupedMoments gm;
  gm.group_of = group_of;
  gm.group_sizes = sizes;
  gm.replications = r;
  gm.seed = seed;
  const double rr = static_cast<double>(r);
  gm.mean_w = sum_mean / rr;
  gm.var_w = (sum_sq / rr - gm.mean_w.cwiseProduct(gm.mean_w)).cwiseMax(0.0);
  gm.cov_off = sum_cross / rr - gm.mean_w * gm.mean_w.transpose();
  for (int g = 0; g < n_groups; ++g)
    if (sizes[g] < 2) gm.cov_off(g, g) = 0.0;

  if (is_regression) {
    const Mat avg_gram = sum_gram / rr;
    Eigen::SelfAdjointEigenSolver<Mat> eig(avg_gram, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    if (lmin <= 0.0 || eig.eigenvalues().maxCoeff() / lmin > 1e12)
      throw std::runtime_error("mc_grouped_moments: singular averaged design");
    gm.bar_w = (sum_xi / rr) * avg_gram.ldlt().solve(contrast);
  } else {
    gm.bar_w = gm.mean_w;
  }
  return gm;
}

BoundProblem grouped_bound_problem(const GroupedMoments& moments, double z,
                                   Sense sense, double theta_mean_cap) {
  const int g = moments.n_groups();
  BoundProblem p;
  p.bar_w = moments.bar_w;
  p.radicand_q = 0.5 * (moments.cov_off + moments.cov_off.transpose());
  p.radicand_lin = moments.var_w - p.radicand_q.diagonal();
  p.z = z;
  p.sense = sense;
  p.lo = Eigen::VectorXd::Zero(g);
  p.hi = Eigen::VectorXd(g);
  for (int i = 0; i < g; ++i)
    p.hi[i] = static_cast<double>(moments.group_sizes[i]);
  if (theta_mean_cap >= 0.0) {
    LinearConstraint cap;
    cap.a = Eigen::VectorXd::Constant(g, 1.0 / moments.n_units());
    cap.b = theta_mean_cap;
    p.constraints.push_back(cap);
  }
  p.split = sdp_lite_split(p.radicand_q);
  p.validate();
  return p;
}

std::pair<double, double> grouped_bias_bound(const GroupedMoments& moments) {
  double lo = 0.0, hi = 0.0;
  for (int g = 0; g < moments.n_groups(); ++g) {
    const double total = moments.mean_w[g] * moments.group_sizes[g];
    lo += std::min(total, 0.0);
    hi += std::max(total, 0.0);
  }
  return {lo, hi};
}

WeightMoments expand_grouped_moments(const GroupedMoments& moments) {
  const int n = moments.n_units();
  WeightMoments m;
  m.method = "monte-carlo";
  m.replications = moments.replications;
  m.seed = moments.seed;
  m.mean_w.resize(n);
  m.bar_w.resize(n);
  m.q.resize(n, n);
  for (int i = 0; i < n; ++i) {
    const int g = moments.group_of[i];
    m.mean_w[i] = moments.mean_w[g];
    m.bar_w[i] = moments.bar_w[g];
    for (int j = 0; j < n; ++j)
      m.q(i, j) = (i == j) ? moments.var_w[g]
                           : moments.cov_off(g, moments.group_of[j]);
  }
  return m;
}

}  // namespace attrib
