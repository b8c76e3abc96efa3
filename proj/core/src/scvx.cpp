#include "iscvx/scvx.hpp"

#include <cmath>
#include <stdexcept>

#include "iscvx/coneqp.hpp"

namespace iscvx {

namespace {

// Keep-out value for arbitrary (possibly non-unit) q; the similarity
// q y q^-1 cancels the norm, so this extends s(q) off the manifold.
double keepout_value_ambient(const Quaternion& q, const AttitudeProblem& prob) {
  const double n2 = q.squared_norm();
  const Quaternion rotated = q * Quaternion::pure(prob.y_b) * q.conjugate();
  return prob.t_o.dot(rotated.vec()) / n2 - std::cos(prob.theta_max);
}

Eigen::RowVector4d keepout_gradient_ambient(const Quaternion& q,
                                            const AttitudeProblem& prob) {
  const double n2 = q.squared_norm();
  const Quaternion yq = Quaternion::pure(prob.y_b);
  const double num = prob.t_o.dot((q * yq * q.conjugate()).vec());
  Eigen::RowVector4d grad;
  const Vec4 qc = q.coeffs();
  for (int k = 0; k < 4; ++k) {
    Quaternion e{0, 0, 0, 0};
    switch (k) {
      case 0: e.w = 1; break;
      case 1: e.x = 1; break;
      case 2: e.y = 1; break;
      case 3: e.z = 1; break;
    }
    const Vec4 dnum =
        (e * yq * q.conjugate()).coeffs() + (q * yq * e.conjugate()).coeffs();
    grad[k] = prob.t_o.dot(dnum.tail<3>()) / n2 - num * 2.0 * qc[k] / (n2 * n2);
  }
  return grad;
}

}  // namespace

EuclideanLinearizedTrajectory euclidean_linearize(const Trajectory& traj,
                                                  const AttitudeProblem& prob) {
  const int n = traj.n_steps();
  if (static_cast<int>(traj.states.size()) != n + 1)
    throw std::invalid_argument("euclidean_linearize: states/controls size mismatch");

  EuclideanLinearizedTrajectory lin;
  lin.steps.resize(n);
  const Vec4 qd = prob.qd.coeffs();
  for (int i = 0; i < n; ++i) {
    const Quaternion& q = traj.states[i];
    const Vec3& w = traj.controls[i];
    EuclideanLinearizedStep& st = lin.steps[i];
    const Quaternion step = qexp(prob.tau * w);
    st.A4 = right_product_matrix(step);
    st.B4 = prob.tau * left_product_matrix(q) * dexp_matrix(prob.tau * w);
    st.S_row4 = keepout_gradient_ambient(q, prob);
    st.s_val = keepout_value_ambient(q, prob);
    st.defect4 = (q * step).coeffs() - traj.states[i + 1].coeffs();
    st.phi = 0.5 * ((q.coeffs() - qd).squaredNorm() + w.squaredNorm());
    st.grad_q4 = q.coeffs() - qd;
    st.grad_w = w;
  }
  lin.h_val = 0.5 * (traj.states[n].coeffs() - qd).squaredNorm();
  lin.h_grad4 = traj.states[n].coeffs() - qd;
  lin.terminal_S_row4 = keepout_gradient_ambient(traj.states[n], prob);
  lin.terminal_s_val = keepout_value_ambient(traj.states[n], prob);
  return lin;
}

double euclidean_penalized_cost(const Trajectory& traj, const AttitudeProblem& prob,
                                double lambda) {
  const int n = traj.n_steps();
  double j = euclidean_trajectory_cost(traj, prob);
  for (int i = 0; i < n; ++i) {
    const Quaternion z = dynamics_step(traj.states[i], traj.controls[i], prob.tau);
    const Vec4 defect = z.coeffs() - traj.states[i + 1].coeffs();
    const Quaternion scaled =
        inverse(traj.states[i + 1]) * Quaternion::from_coeffs(defect);
    j += lambda * (scaled.coeffs().lpNorm<1>() +
                   std::max(0.0, keepout_value_ambient(traj.states[i], prob)));
  }
  j += lambda * std::max(0.0, keepout_value_ambient(traj.states[n], prob));
  return j;
}

namespace {

// Sub-problem variable layout per step: [xi(3), w+(4), w-(4), s'(1), eta_{i+1}(4)],
// with the ambient virtual control v = q_{i+1} * w so the penalty stays the
// l1 norm of the decision variable.
struct ScvxLayout {
  static int xi(int i) { return 16 * i; }
  static int w_plus(int i) { return 16 * i + 3; }
  static int w_minus(int i) { return 16 * i + 7; }
  static int s_buf(int i) { return 16 * i + 11; }
  static int eta(int j) { return 16 * (j - 1) + 12; }  // j = 1..N
  static int terminal_s_buf(int n) { return 16 * n; }
};

struct ScvxSubproblem {
  ConeQpProblem qp;
  double constant = 0.0;
  int n = 0;
};

ScvxSubproblem assemble_scvx(const EuclideanLinearizedTrajectory& lin,
                             const Trajectory& reference, double trust_radius,
                             double lambda) {
  const int n = lin.n_steps();
  const int nvar = scvx_subproblem_vars(n);
  const int neq = 4 * n;
  const int n_lin = 10 * n + 2;
  const int m = n_lin + 4 * n;

  ScvxSubproblem sp;
  sp.n = n;
  std::vector<Eigen::Triplet<double>> pt, at, gt;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(nvar);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(neq);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(m);

  for (int i = 0; i < n; ++i) {
    const EuclideanLinearizedStep& st = lin.steps[i];
    sp.constant += st.phi;

    for (int r = 0; r < 3; ++r) pt.emplace_back(ScvxLayout::xi(i) + r, ScvxLayout::xi(i) + r, 1.0);
    c.segment<3>(ScvxLayout::xi(i)) = st.grad_w;

    const Vec4& gq = (i + 1 < n) ? lin.steps[i + 1].grad_q4 : lin.h_grad4;
    for (int r = 0; r < 4; ++r)
      pt.emplace_back(ScvxLayout::eta(i + 1) + r, ScvxLayout::eta(i + 1) + r, 1.0);
    c.segment<4>(ScvxLayout::eta(i + 1)) = gq;

    c.segment<4>(ScvxLayout::w_plus(i)).setConstant(lambda);
    c.segment<4>(ScvxLayout::w_minus(i)).setConstant(lambda);
    c[ScvxLayout::s_buf(i)] = lambda;

    // eta_{i+1} - A4 eta_i - B4 xi_i - L(q_{i+1}) (w+ - w-) = defect4.
    const Mat4 lq = left_product_matrix(reference.states[i + 1]);
    for (int r = 0; r < 4; ++r) {
      const int row = 4 * i + r;
      at.emplace_back(row, ScvxLayout::eta(i + 1) + r, 1.0);
      for (int cc = 0; cc < 4; ++cc) {
        at.emplace_back(row, ScvxLayout::w_plus(i) + cc, -lq(r, cc));
        at.emplace_back(row, ScvxLayout::w_minus(i) + cc, lq(r, cc));
        if (i > 0) at.emplace_back(row, ScvxLayout::eta(i) + cc, -st.A4(r, cc));
      }
      for (int cc = 0; cc < 3; ++cc)
        at.emplace_back(row, ScvxLayout::xi(i) + cc, -st.B4(r, cc));
      b[row] = st.defect4[r];
    }

    // s_val + S4 eta_i - s' <= 0.
    gt.emplace_back(i, ScvxLayout::s_buf(i), -1.0);
    if (i > 0)
      for (int cc = 0; cc < 4; ++cc)
        gt.emplace_back(i, ScvxLayout::eta(i) + cc, st.S_row4[cc]);
    h[i] = -st.s_val;

    for (int r = 0; r < 4; ++r) {
      gt.emplace_back(n + 1 + 4 * i + r, ScvxLayout::w_plus(i) + r, -1.0);
      gt.emplace_back(n + 1 + 4 * n + 4 * i + r, ScvxLayout::w_minus(i) + r, -1.0);
    }
    gt.emplace_back(9 * n + 1 + i, ScvxLayout::s_buf(i), -1.0);

    const int soc = n_lin + 4 * i;
    h[soc] = trust_radius;
    for (int r = 0; r < 3; ++r) gt.emplace_back(soc + 1 + r, ScvxLayout::xi(i) + r, -1.0);
  }
  sp.constant += lin.h_val;

  // Keep-out row and buffer at the final state.
  gt.emplace_back(n, ScvxLayout::terminal_s_buf(n), -1.0);
  for (int cc = 0; cc < 4; ++cc)
    gt.emplace_back(n, ScvxLayout::eta(n) + cc, lin.terminal_S_row4[cc]);
  h[n] = -lin.terminal_s_val;
  c[ScvxLayout::terminal_s_buf(n)] = lambda;
  gt.emplace_back(10 * n + 1, ScvxLayout::terminal_s_buf(n), -1.0);

  sp.qp.P.resize(nvar, nvar);
  sp.qp.P.setFromTriplets(pt.begin(), pt.end());
  sp.qp.A.resize(neq, nvar);
  sp.qp.A.setFromTriplets(at.begin(), at.end());
  sp.qp.G.resize(m, nvar);
  sp.qp.G.setFromTriplets(gt.begin(), gt.end());
  sp.qp.c = c;
  sp.qp.b = b;
  sp.qp.h = h;
  sp.qp.dims.n_lin = n_lin;
  sp.qp.dims.soc.assign(n, 4);
  return sp;
}

class EuclideanBackend final : public detail::ScpBackend {
 public:
  EuclideanBackend(const AttitudeProblem& prob, const IscvxParams& params)
      : prob_(prob), params_(params) {}

  std::string name() const override { return "scvx"; }

  double penalized_cost(const Trajectory& traj) const override {
    return euclidean_penalized_cost(traj, prob_, params_.lambda);
  }

  void prepare(const Trajectory& reference) override {
    lin_ = euclidean_linearize(reference, prob_);
    reference_ = reference;
  }

  double solve_subproblem(double trust_radius) override {
    const ScvxSubproblem sp =
        assemble_scvx(lin_, reference_, trust_radius, params_.lambda);
    const ConeQpResult res = solve_cone_qp(sp.qp, params_.subproblem);
    const int n = sp.n;
    eta_.assign(n + 1, Vec4::Zero());
    xi_.resize(n);
    double l = sp.constant;
    for (int i = 0; i < n; ++i) {
      xi_[i] = res.x.segment<3>(ScvxLayout::xi(i));
      eta_[i + 1] = res.x.segment<4>(ScvxLayout::eta(i + 1));
      const Vec4 w_ctrl = res.x.segment<4>(ScvxLayout::w_plus(i)) -
                          res.x.segment<4>(ScvxLayout::w_minus(i));
      const double s_buf = res.x[ScvxLayout::s_buf(i)];
      const Vec4& gq = (i + 1 < n) ? lin_.steps[i + 1].grad_q4 : lin_.h_grad4;
      l += lin_.steps[i].grad_w.dot(xi_[i]) + 0.5 * xi_[i].squaredNorm();
      l += gq.dot(eta_[i + 1]) + 0.5 * eta_[i + 1].squaredNorm();
      l += params_.lambda * (w_ctrl.lpNorm<1>() + std::max(0.0, s_buf));
    }
    l += params_.lambda * std::max(0.0, res.x[ScvxLayout::terminal_s_buf(n)]);
    return l;
  }

  Trajectory apply_step(const Trajectory& reference) const override {
    const int n = reference.n_steps();
    Trajectory out = reference;
    for (int j = 1; j <= n; ++j)
      out.states[j] = Quaternion::from_coeffs(reference.states[j].coeffs() + eta_[j]);
    for (int i = 0; i < n; ++i) out.controls[i] = reference.controls[i] + xi_[i];
    return out;
  }

 private:
  const AttitudeProblem& prob_;
  const IscvxParams& params_;
  EuclideanLinearizedTrajectory lin_;
  Trajectory reference_;
  std::vector<Vec4> eta_;
  std::vector<Vec3> xi_;
};

}  // namespace

SolveReport solve_scvx(const AttitudeProblem& prob, const Trajectory& init,
                       const IscvxParams& params) {
  if (static_cast<int>(init.states.size()) != prob.n_steps + 1 ||
      init.n_steps() != prob.n_steps)
    throw std::invalid_argument("solve_scvx: initial trajectory size mismatch");
  EuclideanBackend backend(prob, params);
  return detail::run_trust_region_loop(backend, init, params);
}

}  // namespace iscvx
