#include "iscvx/coneqp.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <limits>

namespace iscvx {

namespace {

constexpr double kStepScale = 0.99;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Nesterov-Todd scaling point. W is symmetric and maps the cone onto itself
// with W z = W^{-1} s = lambda.
//   orthant:      W = diag(d), d = sqrt(s ./ z)
//   second-order: W = beta (2 v v' - J), v'Jv = 1, J = diag(1, -I)
struct Scaling {
  Eigen::VectorXd d;  // orthant diagonal
  struct Soc {
    double beta = 1.0;
    Eigen::VectorXd v;
  };
  std::vector<Soc> socs;
};

class ConeOps {
 public:
  explicit ConeOps(const ConeDims& dims) : dims_(dims) {
    offsets_.reserve(dims.soc.size());
    int off = dims.n_lin;
    for (int d : dims.soc) {
      offsets_.push_back(off);
      off += d;
    }
    m_ = off;
  }

  int m() const { return m_; }

  Eigen::VectorXd identity() const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m_);
    e.head(dims_.n_lin).setOnes();
    for (size_t k = 0; k < offsets_.size(); ++k) e[offsets_[k]] = 1.0;
    return e;
  }

  // max over blocks of the distance past the cone boundary; u + t e is in the
  // cone iff t >= max_violation(u).
  double max_violation(const Eigen::VectorXd& u) const {
    double t = -kInf;
    if (dims_.n_lin > 0) t = std::max(t, -u.head(dims_.n_lin).minCoeff());
    for (size_t k = 0; k < offsets_.size(); ++k) {
      const int o = offsets_[k];
      const int d = dims_.soc[k];
      t = std::max(t, u.segment(o + 1, d - 1).norm() - u[o]);
    }
    return t == -kInf ? 0.0 : t;
  }

  // Largest t with u + t du in the cone, for u strictly interior.
  double step_to_boundary(const Eigen::VectorXd& u, const Eigen::VectorXd& du) const {
    double t = kInf;
    for (int i = 0; i < dims_.n_lin; ++i)
      if (du[i] < 0.0) t = std::min(t, -u[i] / du[i]);
    for (size_t k = 0; k < offsets_.size(); ++k) {
      const int o = offsets_[k];
      const int d = dims_.soc[k];
      const double u0 = u[o], d0 = du[o];
      const auto u1 = u.segment(o + 1, d - 1);
      const auto d1 = du.segment(o + 1, d - 1);
      // (u0 + t d0)^2 - |u1 + t d1|^2 stays positive until the smallest
      // positive root of a t^2 + b t + c, c > 0.
      const double a = d0 * d0 - d1.squaredNorm();
      const double b = 2.0 * (u0 * d0 - u1.dot(d1));
      const double c = u0 * u0 - u1.squaredNorm();
      double root = kInf;
      if (std::abs(a) < 1e-300) {
        if (b < 0.0) root = -c / b;
      } else {
        const double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
          const double sq = std::sqrt(disc);
          const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
          const double r1 = q / a;
          const double r2 = (q != 0.0) ? c / q : kInf;
          if (r1 > 0.0) root = std::min(root, r1);
          if (r2 > 0.0) root = std::min(root, r2);
        }
      }
      t = std::min(t, root);
    }
    return t;
  }

  // Jordan product u o v.
  Eigen::VectorXd prod(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(m_);
    out.head(dims_.n_lin) =
        u.head(dims_.n_lin).cwiseProduct(v.head(dims_.n_lin));
    for (size_t k = 0; k < offsets_.size(); ++k) {
      const int o = offsets_[k];
      const int d = dims_.soc[k];
      out[o] = u.segment(o, d).dot(v.segment(o, d));
      out.segment(o + 1, d - 1) =
          u[o] * v.segment(o + 1, d - 1) + v[o] * u.segment(o + 1, d - 1);
    }
    return out;
  }

  // Jordan division lambda o\ u (solves lambda o w = u).
  Eigen::VectorXd div(const Eigen::VectorXd& lmbda, const Eigen::VectorXd& u) const {
    Eigen::VectorXd out(m_);
    out.head(dims_.n_lin) =
        u.head(dims_.n_lin).cwiseQuotient(lmbda.head(dims_.n_lin));
    for (size_t k = 0; k < offsets_.size(); ++k) {
      const int o = offsets_[k];
      const int d = dims_.soc[k];
      const double l0 = lmbda[o];
      const auto l1 = lmbda.segment(o + 1, d - 1);
      const double u0 = u[o];
      const auto u1 = u.segment(o + 1, d - 1);
      const double det = l0 * l0 - l1.squaredNorm();
      const double w0 = (l0 * u0 - l1.dot(u1)) / det;
      out[o] = w0;
      out.segment(o + 1, d - 1) = (u1 - w0 * l1) / l0;
    }
    return out;
  }

  Scaling compute_scaling(const Eigen::VectorXd& s, const Eigen::VectorXd& z,
                          Eigen::VectorXd& lmbda) const {
    Scaling w;
    lmbda.resize(m_);
    w.d = (s.head(dims_.n_lin).array() / z.head(dims_.n_lin).array()).sqrt();
    lmbda.head(dims_.n_lin) =
        (s.head(dims_.n_lin).array() * z.head(dims_.n_lin).array()).sqrt();
    w.socs.resize(offsets_.size());
    for (size_t k = 0; k < offsets_.size(); ++k) {
      const int o = offsets_[k];
      const int d = dims_.soc[k];
      const auto sk = s.segment(o, d);
      const auto zk = z.segment(o, d);
      const double a = std::sqrt(sk[0] * sk[0] - sk.tail(d - 1).squaredNorm());
      const double bb = std::sqrt(zk[0] * zk[0] - zk.tail(d - 1).squaredNorm());
      auto& soc = w.socs[k];
      soc.beta = std::sqrt(a / bb);
      const double cc = std::sqrt((sk.dot(zk) / (a * bb) + 1.0) / 2.0);
      Eigen::VectorXd v = zk / bb;
      v.tail(d - 1) *= -1.0;  // J (z/b)
      v += sk / a;
      v /= 2.0 * cc;
      v[0] += 1.0;
      v /= std::sqrt(2.0 * v[0]);
      soc.v = v;

      const double dd = 2.0 * cc + sk[0] / a + zk[0] / bb;
      lmbda[o] = cc;
      lmbda.segment(o + 1, d - 1) =
          ((cc + zk[0] / bb) / (dd * a)) * sk.tail(d - 1) +
          ((cc + sk[0] / a) / (dd * bb)) * zk.tail(d - 1);
      lmbda.segment(o, d) *= std::sqrt(a * bb);
    }
    return w;
  }

  Scaling identity_scaling() const {
    Scaling w;
    w.d = Eigen::VectorXd::Ones(dims_.n_lin);
    w.socs.resize(offsets_.size());
    for (size_t k = 0; k < offsets_.size(); ++k) {
      w.socs[k].beta = 1.0;
      w.socs[k].v = Eigen::VectorXd::Zero(dims_.soc[k]);
      w.socs[k].v[0] = 1.0;
    }
    return w;
  }

  Eigen::VectorXd apply_w(const Scaling& w, const Eigen::VectorXd& u) const {
    Eigen::VectorXd out(m_);
    out.head(dims_.n_lin) = w.d.cwiseProduct(u.head(dims_.n_lin));
    for (size_t k = 0; k < offsets_.size(); ++k) {
      const int o = offsets_[k];
      const int d = dims_.soc[k];
      const auto& v = w.socs[k].v;
      const auto uk = u.segment(o, d);
      Eigen::VectorXd ju = uk;
      ju.tail(d - 1) *= -1.0;
      out.segment(o, d) = w.socs[k].beta * (2.0 * v * v.dot(uk) - ju);
    }
    return out;
  }

  Eigen::VectorXd apply_winv(const Scaling& w, const Eigen::VectorXd& u) const {
    Eigen::VectorXd out(m_);
    out.head(dims_.n_lin) = u.head(dims_.n_lin).cwiseQuotient(w.d);
    for (size_t k = 0; k < offsets_.size(); ++k) {
      const int o = offsets_[k];
      const int d = dims_.soc[k];
      const auto& v = w.socs[k].v;
      const auto uk = u.segment(o, d);
      Eigen::VectorXd jv = v;
      jv.tail(d - 1) *= -1.0;
      Eigen::VectorXd ju = uk;
      ju.tail(d - 1) *= -1.0;
      out.segment(o, d) = (2.0 * jv * jv.dot(uk) - ju) / w.socs[k].beta;
    }
    return out;
  }

  Eigen::VectorXd apply_winv2(const Scaling& w, const Eigen::VectorXd& u) const {
    return apply_winv(w, apply_winv(w, u));
  }

  const ConeDims& dims() const { return dims_; }
  const std::vector<int>& offsets() const { return offsets_; }

 private:
  ConeDims dims_;
  std::vector<int> offsets_;
  int m_ = 0;
};

// Columns of G touched by one cone block, with the dense coefficient block;
// used to scatter G' W^{-2} G into the KKT matrix.
struct GBlock {
  int dim = 0;
  std::vector<int> cols;
  Eigen::MatrixXd coef;  // dim x cols
};

class Workspace {
 public:
  Workspace(const ConeQpProblem& qp, const ConeQpOptions& opts)
      : qp_(qp), opts_(opts), ops_(qp.dims), n_(qp.n_vars()),
        p_(static_cast<int>(qp.b.size())), m_(qp.dims.total()) {
    if (qp.G.rows() != m_ || qp.G.cols() != n_ || qp.A.cols() != n_ ||
        qp.A.rows() != p_ || qp.P.rows() != n_ || qp.P.cols() != n_ ||
        qp.h.size() != m_)
      throw std::invalid_argument("solve_cone_qp: inconsistent dimensions");
    build_structure();
  }

  ConeQpResult run();

 private:
  void build_structure() {
    // Lower-triangle triplets of P, kept in a fixed order.
    for (int j = 0; j < qp_.P.outerSize(); ++j)
      for (Eigen::SparseMatrix<double>::InnerIterator it(qp_.P, j); it; ++it)
        if (it.row() >= it.col())
          p_triplets_.emplace_back(it.row(), it.col(), it.value());

    for (int j = 0; j < qp_.A.outerSize(); ++j)
      for (Eigen::SparseMatrix<double>::InnerIterator it(qp_.A, j); it; ++it)
        a_triplets_.emplace_back(n_ + static_cast<int>(it.row()),
                                 static_cast<int>(it.col()), it.value());

    // Per-cone column blocks of G.
    const Eigen::SparseMatrix<double, Eigen::RowMajor> g_rows(qp_.G);
    auto collect = [&](int row0, int dim) {
      GBlock blk;
      blk.dim = dim;
      std::vector<int> cols;
      for (int r = row0; r < row0 + dim; ++r)
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(g_rows, r);
             it; ++it)
          cols.push_back(static_cast<int>(it.col()));
      std::sort(cols.begin(), cols.end());
      cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
      blk.cols = cols;
      blk.coef = Eigen::MatrixXd::Zero(dim, static_cast<int>(cols.size()));
      for (int r = row0; r < row0 + dim; ++r)
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(g_rows, r);
             it; ++it) {
          const auto pos = std::lower_bound(cols.begin(), cols.end(), it.col());
          blk.coef(r - row0, static_cast<int>(pos - cols.begin())) = it.value();
        }
      g_blocks_.push_back(std::move(blk));
    };
    for (int r = 0; r < qp_.dims.n_lin; ++r) collect(r, 1);
    for (size_t k = 0; k < ops_.offsets().size(); ++k)
      collect(ops_.offsets()[k], qp_.dims.soc[k]);
  }

  // KKT matrix [P + G'W^{-2}G + reg, A'; A, -reg] (lower triangle).
  void factor_kkt(const Scaling& w) {
    kkt_triplets_.clear();
    kkt_triplets_.insert(kkt_triplets_.end(), p_triplets_.begin(), p_triplets_.end());
    kkt_triplets_.insert(kkt_triplets_.end(), a_triplets_.begin(), a_triplets_.end());

    size_t blk_idx = 0;
    for (int r = 0; r < qp_.dims.n_lin; ++r, ++blk_idx) {
      const GBlock& blk = g_blocks_[blk_idx];
      const double w2 = 1.0 / (w.d[r] * w.d[r]);
      for (size_t a = 0; a < blk.cols.size(); ++a)
        for (size_t b = 0; b <= a; ++b)
          kkt_triplets_.emplace_back(blk.cols[a], blk.cols[b],
                                     w2 * blk.coef(0, a) * blk.coef(0, b));
    }
    for (size_t k = 0; k < ops_.offsets().size(); ++k, ++blk_idx) {
      const GBlock& blk = g_blocks_[blk_idx];
      const int d = blk.dim;
      Eigen::MatrixXd w2inv(d, d);
      for (int j = 0; j < d; ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(m_);
        e[ops_.offsets()[k] + j] = 1.0;
        w2inv.col(j) = ops_.apply_winv2(w, e).segment(ops_.offsets()[k], d);
      }
      const Eigen::MatrixXd s_blk = blk.coef.transpose() * w2inv * blk.coef;
      for (size_t a = 0; a < blk.cols.size(); ++a)
        for (size_t b = 0; b <= a; ++b)
          kkt_triplets_.emplace_back(blk.cols[a], blk.cols[b], s_blk(a, b));
    }
    for (int i = 0; i < n_; ++i)
      kkt_triplets_.emplace_back(i, i, opts_.static_reg);
    for (int i = 0; i < p_; ++i)
      kkt_triplets_.emplace_back(n_ + i, n_ + i, -opts_.static_reg);

    kkt_.resize(n_ + p_, n_ + p_);
    kkt_.setFromTriplets(kkt_triplets_.begin(), kkt_triplets_.end());
    if (!pattern_analyzed_) {
      ldlt_.analyzePattern(kkt_);
      pattern_analyzed_ = true;
    }
    ldlt_.factorize(kkt_);
    if (ldlt_.info() != Eigen::Success)
      throw ConeQpError("cone QP: KKT factorization failed", stats_);
    scaling_ = &w;
  }

  // Solves [P + G'W^{-2}G, A'; A, 0] [dx; dy] = [bx + G'W^{-2}bz; by] with
  // iterative refinement against the unregularized operator, then recovers
  // the physical dz = W^{-2}(G dx - bz).
  void solve_kkt(const Eigen::VectorXd& bx, const Eigen::VectorXd& by,
                 const Eigen::VectorXd& bz, Eigen::VectorXd& dx,
                 Eigen::VectorXd& dy, Eigen::VectorXd& dz) const {
    Eigen::VectorXd rhs(n_ + p_);
    rhs.head(n_) = bx + qp_.G.transpose() * ops_.apply_winv2(*scaling_, bz);
    rhs.tail(p_) = by;
    Eigen::VectorXd u = ldlt_.solve(rhs);
    for (int it = 0; it < opts_.refine_steps; ++it) {
      Eigen::VectorXd resid(n_ + p_);
      const Eigen::VectorXd ux = u.head(n_);
      const Eigen::VectorXd uy = u.tail(p_);
      resid.head(n_) = rhs.head(n_) - qp_.P * ux -
                       qp_.G.transpose() * ops_.apply_winv2(*scaling_, qp_.G * ux);
      if (p_ > 0) {
        resid.head(n_) -= qp_.A.transpose() * uy;
        resid.tail(p_) = rhs.tail(p_) - qp_.A * ux;
      }
      u += ldlt_.solve(resid);
    }
    dx = u.head(n_);
    dy = u.tail(p_);
    dz = ops_.apply_winv2(*scaling_, qp_.G * dx - bz);
  }

  const ConeQpProblem& qp_;
  ConeQpOptions opts_;
  ConeOps ops_;
  int n_, p_, m_;

  std::vector<Eigen::Triplet<double>> p_triplets_, a_triplets_, kkt_triplets_;
  std::vector<GBlock> g_blocks_;
  Eigen::SparseMatrix<double> kkt_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt_;
  bool pattern_analyzed_ = false;
  const Scaling* scaling_ = nullptr;

  ConeQpStats stats_;
};

ConeQpResult Workspace::run() {
  const double resx0 = std::max(1.0, qp_.c.norm());
  const double resy0 = std::max(1.0, qp_.b.norm());
  const double resz0 = std::max(1.0, qp_.h.norm());

  // Initial point from one least-norm KKT solve with W = I, then shifted
  // into the cone interior along the identity element.
  const Scaling w_id = ops_.identity_scaling();
  Eigen::VectorXd x, y, zraw;
  factor_kkt(w_id);
  solve_kkt(-qp_.c, qp_.b, qp_.h, x, y, zraw);
  Eigen::VectorXd z = zraw;
  Eigen::VectorXd s = -z;
  const Eigen::VectorXd e = ops_.identity();
  const double ts = ops_.max_violation(s);
  if (ts >= -1e-8 * std::max(1.0, s.norm())) s += (1.0 + ts) * e;
  const double tz = ops_.max_violation(z);
  if (tz >= -1e-8 * std::max(1.0, z.norm())) z += (1.0 + tz) * e;

  double gap = s.dot(z);
  const int mdeg = qp_.dims.degree();

  ConeQpResult best;
  double best_score = kInf;
  bool have_best = false;

  Eigen::VectorXd lmbda, lmbdasq;
  Scaling w;
  int consecutive_small_steps = 0;

  for (int iters = 0;; ++iters) {
    const Eigen::VectorXd rx = qp_.P * x + qp_.c + qp_.A.transpose() * y +
                               qp_.G.transpose() * z;
    const Eigen::VectorXd ry = qp_.A * x - qp_.b;
    const Eigen::VectorXd rz = qp_.G * x + s - qp_.h;
    const double f0 = 0.5 * x.dot(qp_.P * x) + qp_.c.dot(x);
    const double pcost = f0;
    const double dcost = f0 + y.dot(ry) + z.dot(rz) - gap;
    double relgap = std::numeric_limits<double>::quiet_NaN();
    if (pcost < 0.0)
      relgap = gap / -pcost;
    else if (dcost > 0.0)
      relgap = gap / dcost;

    stats_.iterations = iters;
    stats_.pres = std::max(ry.norm() / resy0, rz.norm() / resz0);
    stats_.dres = rx.norm() / resx0;
    stats_.gap = gap;
    stats_.relgap = relgap;

    const bool feasible =
        stats_.pres <= opts_.feastol && stats_.dres <= opts_.feastol;
    const bool gap_ok =
        gap <= opts_.abstol || (!std::isnan(relgap) && relgap <= opts_.reltol);

    const double score = std::max({stats_.pres, stats_.dres,
                                   gap / std::max(1.0, std::abs(pcost))});
    if (!have_best || score < best_score) {
      best_score = score;
      best = {x, y, z, s, f0, stats_};
      have_best = true;
    }

    if (feasible && gap_ok) {
      return {x, y, z, s, f0, stats_};
    }
    if (iters >= opts_.max_iters || consecutive_small_steps >= 3) break;

    w = ops_.compute_scaling(s, z, lmbda);
    lmbdasq = ops_.prod(lmbda, lmbda);
    try {
      factor_kkt(w);
    } catch (const ConeQpError&) {
      break;
    }

    const double mu = gap / mdeg;
    double sigma = 0.0;
    double step = 1.0;
    Eigen::VectorXd dx, dy, dz_phys, ds_phys;
    Eigen::VectorXd corr;  // us_aff o uz_aff

    bool numeric_failure = false;
    for (int pass = 0; pass <= 1; ++pass) {
      Eigen::VectorXd bs = -lmbdasq;
      if (pass == 1) {
        bs -= corr;
        bs.head(qp_.dims.n_lin).array() += sigma * mu;
        for (size_t k = 0; k < w.socs.size(); ++k)
          bs[ops_.offsets()[k]] += sigma * mu;
      }
      const Eigen::VectorXd lbs = ops_.div(lmbda, bs);
      const Eigen::VectorXd bz_mod = -rz - ops_.apply_w(w, lbs);
      solve_kkt(-rx, -ry, bz_mod, dx, dy, dz_phys);
      const Eigen::VectorXd uz = ops_.apply_w(w, dz_phys);
      const Eigen::VectorXd us = lbs - uz;
      ds_phys = ops_.apply_w(w, us);
      if (!dx.allFinite() || !ds_phys.allFinite() || !dz_phys.allFinite()) {
        numeric_failure = true;
        break;
      }
      const double dsdz = ds_phys.dot(dz_phys);
      const double alpha = std::min(ops_.step_to_boundary(s, ds_phys),
                                    ops_.step_to_boundary(z, dz_phys));
      if (pass == 0) {
        corr = ops_.prod(us, uz);
        step = std::min(1.0, alpha);
        sigma = std::pow(
            std::min(1.0, std::max(0.0, 1.0 - step + dsdz / gap * step * step)),
            3.0);
      } else {
        step = std::min(1.0, kStepScale * alpha);
      }
    }
    if (numeric_failure) break;

    x += step * dx;
    y += step * dy;
    s += step * ds_phys;
    z += step * dz_phys;
    gap = s.dot(z);
    consecutive_small_steps = step < 1e-8 ? consecutive_small_steps + 1 : 0;
  }

  // The targets were not reached; fall back to the acceptance thresholds on
  // the best iterate seen.
  const ConeQpStats& bs = best.stats;
  const bool acceptable =
      have_best && bs.pres <= opts_.accept_feastol &&
      bs.dres <= opts_.accept_feastol &&
      (bs.gap <= opts_.accept_abstol ||
       (!std::isnan(bs.relgap) && bs.relgap <= opts_.accept_reltol));
  if (acceptable) {
    best.stats.reduced_tolerance = true;
    return best;
  }
  throw ConeQpError("cone QP: not converged within iteration cap",
                    have_best ? best.stats : stats_);
}

}  // namespace

ConeQpResult solve_cone_qp(const ConeQpProblem& qp, const ConeQpOptions& opts) {
  Workspace ws(qp, opts);
  return ws.run();
}

}  // namespace iscvx
