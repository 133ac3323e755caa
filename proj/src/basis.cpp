#include "staggdg/basis.hpp"

#include <cmath>
#include <stdexcept>

namespace staggdg {

NodalBasis::NodalBasis(int degree) : p_(degree) {
  if (p_ < 0 || p_ > 4) throw std::invalid_argument("NodalBasis: degree must be in [0,4]");
  nphi_ = (p_ + 1) * (p_ + 2) / 2;
  if (p_ == 0) {
    nodes_ = {Vec2(1.0 / 3.0, 1.0 / 3.0)};
    mono_ = {{0, 0}};
    coeff_ = Eigen::MatrixXd::Ones(1, 1);
    return;
  }
  for (int j = 0; j <= p_; ++j)
    for (int i = 0; i + j <= p_; ++i)
      nodes_.emplace_back(double(i) / p_, double(j) / p_);
  for (int t = 0; t <= p_; ++t)
    for (int a = 0; a + t <= p_; ++a)
      mono_.push_back({a, t});
  Eigen::MatrixXd V(nphi_, nphi_);
  for (int l = 0; l < nphi_; ++l)
    for (int m = 0; m < nphi_; ++m)
      V(l, m) = std::pow(nodes_[l].x(), mono_[m][0]) * std::pow(nodes_[l].y(), mono_[m][1]);
  coeff_ = V.fullPivLu().solve(Eigen::MatrixXd::Identity(nphi_, nphi_));
}

void NodalBasis::eval(const Vec2& xi, double* out) const {
  double px[5], py[5];
  px[0] = py[0] = 1.0;
  for (int k = 1; k <= p_; ++k) {
    px[k] = px[k - 1] * xi.x();
    py[k] = py[k - 1] * xi.y();
  }
  const int nm = static_cast<int>(mono_.size());
  for (int k = 0; k < nphi_; ++k) {
    double s = 0.0;
    for (int m = 0; m < nm; ++m) s += coeff_(m, k) * px[mono_[m][0]] * py[mono_[m][1]];
    out[k] = s;
  }
}

std::vector<double> NodalBasis::eval(const Vec2& xi) const {
  std::vector<double> v(nphi_);
  eval(xi, v.data());
  return v;
}

void NodalBasis::eval_grad(const Vec2& xi, double* out) const {
  double px[5], py[5];
  px[0] = py[0] = 1.0;
  for (int k = 1; k <= p_; ++k) {
    px[k] = px[k - 1] * xi.x();
    py[k] = py[k - 1] * xi.y();
  }
  const int nm = static_cast<int>(mono_.size());
  for (int k = 0; k < nphi_; ++k) {
    double gx = 0.0, gy = 0.0;
    for (int m = 0; m < nm; ++m) {
      const int a = mono_[m][0], b = mono_[m][1];
      if (a > 0) gx += coeff_(m, k) * a * px[a - 1] * py[b];
      if (b > 0) gy += coeff_(m, k) * b * px[a] * py[b - 1];
    }
    out[2 * k] = gx;
    out[2 * k + 1] = gy;
  }
}

namespace {
bool same_node(const Vec2& a, const Vec2& b) { return (a - b).norm() < 1e-12; }
}

DualBasis::DualBasis(const NodalBasis& main) : p_(main.degree()), main_(&main) {
  npsi_ = (p_ + 1) * (p_ + 1);
  const auto& mn = main.nodes();
  const int nphi = main.size();
  // left nodes first in main order
  for (int k = 0; k < nphi; ++k) {
    nodes_.push_back(mn[k]);
    left_.push_back(k);
    right_.push_back(-1);
  }
  // right-only nodes: mirrors 1-node not already present (p=0 has one shared dof)
  if (p_ == 0) {
    right_[0] = 0;  // single constant dof covers both halves
  } else {
    for (int k = 0; k < nphi; ++k) {
      const Vec2 mir = Vec2(1.0, 1.0) - mn[k];
      bool on_diag = std::abs(mn[k].x() + mn[k].y() - 1.0) < 1e-12;
      if (on_diag) {
        // diagonal node: its right-side representation pulls back to the
        // mirrored diagonal node of the main basis
        for (int l = 0; l < nphi; ++l)
          if (same_node(mn[l], mir)) right_[k] = l;
      } else {
        nodes_.push_back(mir);
        left_.push_back(-1);
        right_.push_back(k);
      }
    }
  }
  if (static_cast<int>(nodes_.size()) != npsi_)
    throw std::logic_error("DualBasis: dof count mismatch");
  for (int k = 0; k < npsi_; ++k)
    if (std::abs(nodes_[k].x() + nodes_[k].y() - 1.0) < 1e-12) trace_.push_back(k);
}

void DualBasis::eval(const Vec2& xi, double* out) const {
  const int nphi = main_->size();
  double tmp[15];
  const bool left_side = (xi.x() + xi.y() <= 1.0);
  if (left_side) {
    main_->eval(xi, tmp);
    for (int k = 0; k < npsi_; ++k) out[k] = left_[k] >= 0 ? tmp[left_[k]] : 0.0;
  } else {
    main_->eval(Vec2(1.0, 1.0) - xi, tmp);
    for (int k = 0; k < npsi_; ++k) out[k] = right_[k] >= 0 ? tmp[right_[k]] : 0.0;
  }
  (void)nphi;
}

std::vector<double> DualBasis::eval(const Vec2& xi) const {
  std::vector<double> v(npsi_);
  eval(xi, v.data());
  return v;
}

namespace {

// Gauss-Legendre nodes/weights on [0,1] by Newton iteration on P_n.
void gauss_legendre01(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));  // initial guess on [-1,1]
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    x[i] = 0.5 * (1.0 - t);  // mirrored so nodes are increasing later; order irrelevant
    w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
}

} // namespace

QuadratureRule quadrature(QuadDomain domain, int exactness) {
  if (exactness < 0 || exactness > 14)
    throw std::invalid_argument("quadrature: unsupported exactness");
  QuadratureRule rule;
  rule.exactness = exactness;
  if (domain == QuadDomain::Segment) {
    const int n = exactness / 2 + 1;  // Gauss n exact to 2n-1
    std::vector<double> x, w;
    gauss_legendre01(n, x, w);
    for (int i = 0; i < n; ++i) {
      rule.points.emplace_back(x[i], 0.0);
      rule.weights.push_back(w[i]);
    }
    return rule;
  }
  // Triangle via the collapsed square: (u,v) -> (u, v(1-u)), jacobian (1-u).
  // Degree-d integrands become degree <= d+1 in u, so take one extra point.
  const int nu = (exactness + 1) / 2 + 1;
  const int nv = exactness / 2 + 1;
  std::vector<double> xu, wu, xv, wv;
  gauss_legendre01(nu, xu, wu);
  gauss_legendre01(nv, xv, wv);
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j) {
      rule.points.emplace_back(xu[i], xv[j] * (1.0 - xu[i]));
      rule.weights.push_back(wu[i] * wv[j] * (1.0 - xu[i]));
    }
  return rule;
}

TriMap::TriMap(const Vec2& v0, const Vec2& v1, const Vec2& v2) : a(v0) {
  jac.col(0) = v1 - v0;
  jac.col(1) = v2 - v0;
  det = jac.determinant();
  jac_inv = jac.inverse();
}

} // namespace staggdg
