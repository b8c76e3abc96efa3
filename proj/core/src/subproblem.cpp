#include "iscvx/subproblem.hpp"

#include <Eigen/Eigenvalues>

#include <json.hpp>

#include <stdexcept>

namespace iscvx {

namespace {

void check_psd(const Mat3& h, const char* what) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(h, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9)
    throw std::runtime_error(std::string("assemble: ") + what +
                             " Hessian block is not positive semi-definite");
}

}  // namespace

ConvexSubproblem assemble(const LinearizedTrajectory& lin, double trust_radius,
                          const std::vector<double>& lambdas) {
  const int n = lin.n_steps();
  if (n < 1) throw std::invalid_argument("assemble: empty linearization");
  if (!(trust_radius > 0.0))
    throw std::invalid_argument("assemble: trust radius must be positive");
  if (static_cast<int>(lambdas.size()) != n)
    throw std::invalid_argument("assemble: one penalty weight per step required");
  for (double l : lambdas)
    if (!(l > 0.0)) throw std::invalid_argument("assemble: penalty weights must be positive");

  ConvexSubproblem sp;
  sp.n_steps = n;
  sp.trust_radius = trust_radius;
  sp.lambdas = lambdas;

  const int nvar = sp.n_vars();
  const int neq = 3 * n;
  const int n_lin = 8 * n + 2;  // keep-out rows (N+1), v+- bounds, buffer bounds
  const int m = n_lin + 4 * n;

  std::vector<Eigen::Triplet<double>> pt, at, gt;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(nvar);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(neq);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(m);

  double constant = 0.0;
  sp.grad_q.resize(n);
  sp.hess_q.resize(n);
  sp.grad_w.resize(n);
  sp.hess_w.resize(n);

  auto add_sym_block = [&pt](int base, const Mat3& hm) {
    const Mat3 sym = 0.5 * (hm + hm.transpose());
    for (int r = 0; r < 3; ++r)
      for (int cc = 0; cc < 3; ++cc)
        pt.emplace_back(base + r, base + cc, sym(r, cc));
  };

  for (int i = 0; i < n; ++i) {
    const LinearizedStep& st = lin.steps[i];
    constant += st.phi;

    // Quadratic/linear cost in xi_i.
    check_psd(st.hess_w, "control");
    add_sym_block(sp.xi_index(i), st.hess_w);
    c.segment<3>(sp.xi_index(i)) = st.grad_w;
    sp.grad_w[i] = st.grad_w;
    sp.hess_w[i] = 0.5 * (st.hess_w + st.hess_w.transpose());

    // Cost blocks attached to eta_j, j = i+1; terminal blocks at j = N.
    const Vec3& gq = (i + 1 < n) ? lin.steps[i + 1].grad_q : lin.h_grad;
    const Mat3& hq = (i + 1 < n) ? lin.steps[i + 1].hess_q : lin.h_hess;
    check_psd(hq, (i + 1 < n) ? "state" : "terminal");
    add_sym_block(sp.eta_index(i + 1), hq);
    c.segment<3>(sp.eta_index(i + 1)) = gq;
    sp.grad_q[i] = gq;
    sp.hess_q[i] = 0.5 * (hq + hq.transpose());

    // Penalty terms lambda (|v|_1 + s') via the split v = v+ - v-.
    c.segment<3>(sp.v_plus_index(i)).setConstant(lambdas[i]);
    c.segment<3>(sp.v_minus_index(i)).setConstant(lambdas[i]);
    c[sp.s_buf_index(i)] = lambdas[i];

    // Dynamics rows: eta_{i+1} - A eta_i - B xi_i - v+ + v- = defect.
    for (int r = 0; r < 3; ++r) {
      const int row = 3 * i + r;
      at.emplace_back(row, sp.eta_index(i + 1) + r, 1.0);
      at.emplace_back(row, sp.v_plus_index(i) + r, -1.0);
      at.emplace_back(row, sp.v_minus_index(i) + r, 1.0);
      for (int cc = 0; cc < 3; ++cc) {
        at.emplace_back(row, sp.xi_index(i) + cc, -st.B(r, cc));
        if (i > 0) at.emplace_back(row, sp.eta_index(i) + cc, -st.A(r, cc));
      }
      b[row] = st.defect[r];
    }

    // Keep-out rows: s_val + S eta_i + Q xi_i - s' <= 0.
    gt.emplace_back(i, sp.s_buf_index(i), -1.0);
    for (int cc = 0; cc < 3; ++cc) {
      gt.emplace_back(i, sp.xi_index(i) + cc, st.Q_row[cc]);
      if (i > 0) gt.emplace_back(i, sp.eta_index(i) + cc, st.S_row[cc]);
    }
    h[i] = -st.s_val;

    // v+, v-, s' >= 0.
    for (int r = 0; r < 3; ++r) {
      gt.emplace_back(n + 1 + 3 * i + r, sp.v_plus_index(i) + r, -1.0);
      gt.emplace_back(n + 1 + 3 * n + 3 * i + r, sp.v_minus_index(i) + r, -1.0);
    }
    gt.emplace_back(7 * n + 1 + i, sp.s_buf_index(i), -1.0);

    // Trust region |xi_i| <= r as a second-order cone of dimension 4.
    const int soc = n_lin + 4 * i;
    h[soc] = trust_radius;
    for (int r = 0; r < 3; ++r) gt.emplace_back(soc + 1 + r, sp.xi_index(i) + r, -1.0);
  }
  constant += lin.h_val;
  sp.constant = constant;

  // Keep-out row at the final state, with its own buffer.
  gt.emplace_back(n, sp.s_buf_index(n), -1.0);
  for (int cc = 0; cc < 3; ++cc)
    gt.emplace_back(n, sp.eta_index(n) + cc, lin.terminal_S_row[cc]);
  h[n] = -lin.terminal_s_val;
  c[sp.s_buf_index(n)] = lambdas.back();
  gt.emplace_back(8 * n + 1, sp.s_buf_index(n), -1.0);

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

SubproblemSolution solve(const ConvexSubproblem& sp, const ConeQpOptions& opts) {
  const ConeQpResult res = solve_cone_qp(sp.qp, opts);
  const int n = sp.n_steps;

  SubproblemSolution sol;
  sol.stats = res.stats;
  sol.eta.assign(n + 1, Vec3::Zero());
  sol.xi.resize(n);
  sol.v.resize(n);
  sol.s_buf.resize(n + 1);
  for (int i = 0; i < n; ++i) {
    sol.xi[i] = res.x.segment<3>(sp.xi_index(i));
    sol.eta[i + 1] = res.x.segment<3>(sp.eta_index(i + 1));
    sol.v[i] = res.x.segment<3>(sp.v_plus_index(i)) - res.x.segment<3>(sp.v_minus_index(i));
    sol.s_buf[i] = res.x[sp.s_buf_index(i)];
  }
  sol.s_buf[n] = res.x[sp.s_buf_index(n)];

  // Model cost at the solution, with the exact l1 penalty rather than the
  // split-variable surrogate.
  double l = sp.constant;
  for (int i = 0; i < n; ++i) {
    l += sp.grad_w[i].dot(sol.xi[i]) + 0.5 * sol.xi[i].dot(sp.hess_w[i] * sol.xi[i]);
    const Vec3& eta = sol.eta[i + 1];
    l += sp.grad_q[i].dot(eta) + 0.5 * eta.dot(sp.hess_q[i] * eta);
    l += sp.lambdas[i] * (sol.v[i].lpNorm<1>() + std::max(0.0, sol.s_buf[i]));
  }
  l += sp.lambdas.back() * std::max(0.0, sol.s_buf[n]);
  sol.L_value = l;
  return sol;
}

std::string dump_json(const ConvexSubproblem& sp) {
  using nlohmann::json;
  auto dense = [](const Eigen::SparseMatrix<double>& mat) {
    const Eigen::MatrixXd d(mat);
    json rows = json::array();
    for (Eigen::Index r = 0; r < d.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < d.cols(); ++c) row.push_back(d(r, c));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  auto vec = [](const Eigen::VectorXd& v) {
    return json(std::vector<double>(v.data(), v.data() + v.size()));
  };

  json j;
  j["n_steps"] = sp.n_steps;
  j["trust_radius"] = sp.trust_radius;
  j["lambdas"] = sp.lambdas;
  j["constant"] = sp.constant;
  j["P"] = dense(sp.qp.P);
  j["c"] = vec(sp.qp.c);
  j["A"] = dense(sp.qp.A);
  j["b"] = vec(sp.qp.b);
  j["G"] = dense(sp.qp.G);
  j["h"] = vec(sp.qp.h);
  j["cones"] = {{"n_lin", sp.qp.dims.n_lin}, {"soc", sp.qp.dims.soc}};
  json row_types = json::array();
  const int n = sp.n_steps;
  for (int i = 0; i <= n; ++i) row_types.push_back("keepout");
  for (int i = 0; i < 6 * n; ++i) row_types.push_back("virtual_control_bound");
  for (int i = 0; i <= n; ++i) row_types.push_back("buffer_bound");
  for (int i = 0; i < 4 * n; ++i) row_types.push_back("trust_region_soc4");
  j["row_types"] = row_types;
  return j.dump(2);
}

}  // namespace iscvx
