#include <catch2/catch_amalgamated.hpp>

#include "mgig/models/mst.hpp"

using namespace mgig;

namespace {

Matrix random_spd(int p, RngStream& rng, double ridge = 0.5) {
  Matrix a(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) a(i, j) = rng.normal();
  return a * a.transpose() + ridge * p * Matrix::Identity(p, p);
}

Matrix random_mat(int r, int c, RngStream& rng) {
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

double logdet_spd(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  REQUIRE(llt.info() == Eigen::Success);
  double ld = 0.0;
  Matrix l = llt.matrixL();
  for (int i = 0; i < m.rows(); ++i) ld += 2.0 * std::log(l(i, i));
  return ld;
}

// matrix normal N(x; m, U, V), kernel plus the U and V determinant factors
double matnorm_log(const Matrix& x, const Matrix& m, const Matrix& u, const Matrix& v) {
  const int p = static_cast<int>(x.rows()), q = static_cast<int>(x.cols());
  Matrix r = x - m;
  return -0.5 * q * logdet_spd(u) - 0.5 * p * logdet_spd(v) -
         0.5 * (detail::sym_inverse(v) * r.transpose() * detail::sym_inverse(u) * r).trace();
}

// inverse Wishart IW(w; scale, dof), including the |scale|^{dof/2} factor
// (that factor matters for the slice in the scale parameter)
double iw_log(const Matrix& w, const Matrix& scale, double dof) {
  const int p = static_cast<int>(w.rows());
  return 0.5 * dof * logdet_spd(scale) - 0.5 * (dof + p + 1) * logdet_spd(w) -
         0.5 * (scale * detail::sym_inverse(w)).trace();
}

// Wishart W(w; dof, scale) kernel in w
double wish_log(const Matrix& w, double dof, const Matrix& scale) {
  const int p = static_cast<int>(w.rows());
  return 0.5 * (dof - p - 1) * logdet_spd(w) -
         0.5 * (detail::sym_inverse(scale) * w).trace();
}

// full log joint of data and all parameter blocks, constants dropped only
// when they involve no block at all
double log_joint(const MstData& data, const MstState& st, const MstHyper& hy) {
  double lp = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    lp += matnorm_log(data.y[i], st.m + st.w[i] * st.b, st.w[i], st.omega);
    lp += iw_log(st.w[i], st.psi, hy.nu);
  }
  lp += matnorm_log(st.m, hy.a0_m, hy.u0_m, hy.v0_m);
  lp += matnorm_log(st.b, hy.a0_b, hy.u0_b, hy.v0_b);
  lp += wish_log(st.psi, hy.eta0, hy.psi0);
  lp += iw_log(st.omega, hy.omega0, hy.xi0);
  return lp;
}

double mvn_log_kernel(const Vector& x, const MvnPrecisionParams& c) {
  return -0.5 * (x.transpose() * c.precision * x)(0, 0) + x.dot(c.precision_times_mean);
}

MstState random_state(int n, int p, int q, RngStream& rng) {
  MstState st;
  st.m = random_mat(p, q, rng);
  st.b = random_mat(p, q, rng);
  st.psi = random_spd(p, rng);
  st.psi /= st.psi(0, 0);
  st.omega = random_spd(q, rng);
  for (int i = 0; i < n; ++i) st.w.push_back(random_spd(p, rng));
  return st;
}

MstData make_data(int n, int p, int q, RngStream& rng) {
  MstData data;
  for (int i = 0; i < n; ++i) data.y.push_back(random_mat(p, q, rng));
  return data;
}

}  // namespace

TEST_CASE("every block conditional is a slice of the full joint density") {
  RngStream rng(61);
  const int n = 3, p = 2, q = 2;
  for (int trial = 0; trial < 20; ++trial) {
    MstData data = make_data(n, p, q, rng);
    MstHyper hy = MstHyper::defaults(p, q, 7.5);
    hy.eta0 = p + 1.5;
    hy.xi0 = q + 0.5;
    MstState st = random_state(n, p, q, rng);
    MstConditionals cond = mst_conditionals(data, st, hy);
    const double base = log_joint(data, st, hy);

    SECTION("mixing matrices") {
      for (int i = 0; i < n; ++i) {
        REQUIRE_FALSE(cond.winv_degenerate[i]);  // random B has full rank
        // the conditional is stated for W^{-1}; changing variables back to W
        // multiplies the density by |W|^{-(p+1)}
        auto cond_log = [&](const Matrix& w) {
          return log_density_unnorm(detail::sym_inverse(w), cond.winv[i]) -
                 (p + 1) * logdet_spd(w);
        };
        MstState st2 = st;
        st2.w[i] = random_spd(p, rng);
        const double dj = log_joint(data, st2, hy) - base;
        const double dc = cond_log(st2.w[i]) - cond_log(st.w[i]);
        REQUIRE(dj == Catch::Approx(dc).margin(1e-8));
      }
    }
    SECTION("location") {
      MstState st2 = st;
      st2.m = random_mat(p, q, rng);
      const double dj = log_joint(data, st2, hy) - base;
      const double dc = mvn_log_kernel(detail::vec(st2.m), cond.m) -
                        mvn_log_kernel(detail::vec(st.m), cond.m);
      REQUIRE(dj == Catch::Approx(dc).margin(1e-8));
    }
    SECTION("skewness") {
      MstState st2 = st;
      st2.b = random_mat(p, q, rng);
      const double dj = log_joint(data, st2, hy) - base;
      const double dc = mvn_log_kernel(detail::vec(st2.b), cond.b) -
                        mvn_log_kernel(detail::vec(st.b), cond.b);
      REQUIRE(dj == Catch::Approx(dc).margin(1e-8));
    }
    SECTION("mixing scale") {
      MstState st2 = st;
      st2.psi = random_spd(p, rng);
      const double dj = log_joint(data, st2, hy) - base;
      const double dc = wish_log(st2.psi, cond.psi.dof, cond.psi.scale) -
                        wish_log(st.psi, cond.psi.dof, cond.psi.scale);
      REQUIRE(dj == Catch::Approx(dc).margin(1e-8));
    }
    SECTION("column covariance") {
      MstState st2 = st;
      st2.omega = random_spd(q, rng);
      const double dj = log_joint(data, st2, hy) - base;
      const double dc = iw_log(st2.omega, cond.omega.scale, cond.omega.dof) -
                        iw_log(st.omega, cond.omega.scale, cond.omega.dof);
      REQUIRE(dj == Catch::Approx(dc).margin(1e-8));
    }
  }
}

TEST_CASE("zero skewness makes the mixing draw an exact inverse Wishart") {
  RngStream rng(62);
  const int p = 2, q = 2;
  MstHyper hy = MstHyper::defaults(p, q, 9.0);
  MstState st = random_state(1, p, q, rng);
  st.b = Matrix::Zero(p, q);
  Matrix yi = random_mat(p, q, rng);
  MgigParams cond = mst_winv_conditional(yi, st, hy);
  REQUIRE(cond.gamma.cwiseAbs().maxCoeff() == 0.0);
  Matrix mean = Matrix::Zero(p, p);
  const int reps = 40000;
  for (int i = 0; i < reps; ++i)
    mean += detail::mst_draw_w(cond, st.w[0], hy.nu, q, MstWUpdate::GS, 1, rng);
  mean /= reps;
  Matrix target = cond.psi / (hy.nu + q - p - 1);
  REQUIRE((mean - target).cwiseAbs().maxCoeff() < 0.05 * target.cwiseAbs().maxCoeff());
}

TEST_CASE("rank-deficient skewness term routes through the composition") {
  RngStream rng(63);
  const int p = 3, q = 1;  // q < p forces a low-rank Gamma side
  MstHyper hy = MstHyper::defaults(p, q, 12.0);
  MstState st = random_state(1, p, q, rng);
  MgigParams cond = mst_winv_conditional(random_mat(p, q, rng), st, hy);
  REQUIRE(cond.lambda > -1.0);
  RngStream r1(3, 7), r2(3, 7);
  Matrix w1 = detail::mst_draw_w(cond, st.w[0], hy.nu, q, MstWUpdate::GS, 1, r1);
  Matrix w2 = detail::mst_draw_w(cond, 4.0 * Matrix::Identity(p, p), hy.nu, q,
                                 MstWUpdate::GS, 1, r2);
  REQUIRE(is_spd(w1));
  // exact sampling on this path: the current state is ignored
  REQUIRE((w1 - w2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("empty data leaves the location and skewness conditionals at the prior") {
  MstData data;  // n = 0
  MstHyper hy = MstHyper::defaults(2, 2, 8.0);
  MstState st;
  st.m = Matrix::Zero(2, 2);
  st.b = Matrix::Zero(2, 2);
  st.psi = Matrix::Identity(2, 2);
  st.omega = Matrix::Identity(2, 2);
  MvnPrecisionParams cm = mst_m_conditional(data, st, hy);
  Matrix prior_prec =
      detail::kron(detail::sym_inverse(hy.v0_m), detail::sym_inverse(hy.u0_m));
  REQUIRE((cm.precision - prior_prec).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(cm.precision_times_mean.cwiseAbs().maxCoeff() < 1e-12);  // zero prior mean
  WishartParams cp = mst_psi_conditional(st, hy, 0);
  REQUIRE(cp.dof == hy.eta0);
  REQUIRE((cp.scale - hy.psi0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sweep keeps the identifiability constraint and is deterministic") {
  RngStream rng(64);
  const int n = 8, p = 2, q = 2;
  MstHyper hy = MstHyper::defaults(p, q, 10.0);
  MstData data = simulate_mst(n, Matrix::Ones(p, q), 0.5 * Matrix::Ones(p, q),
                              Matrix::Identity(p, p), Matrix::Identity(q, q), hy.nu, rng);
  MstOptions opt;
  MstState a = mst_initial_state(data, hy), b = a;
  RngStream r1(31, 2), r2(31, 2);
  for (int t = 0; t < 10; ++t) {
    a = mst_gibbs_step(data, a, hy, opt, r1);
    b = mst_gibbs_step(data, b, hy, opt, r2);
    REQUIRE(a.psi(0, 0) == Catch::Approx(1.0).margin(1e-14));
    REQUIRE(is_spd(a.omega));
  }
  REQUIRE((a.m - b.m).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((a.b - b.b).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((a.psi - b.psi).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < n; ++i)
    REQUIRE((a.w[i] - b.w[i]).cwiseAbs().maxCoeff() == 0.0);

  MstOptions sym;
  sym.fix_b_zero = true;
  MstState c = mst_initial_state(data, hy);
  RngStream r3(31, 3);
  for (int t = 0; t < 5; ++t) {
    c = mst_gibbs_step(data, c, hy, sym, r3);
    REQUIRE(c.b.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("hyperparameter validation enforces the dof lower bounds") {
  MstHyper hy = MstHyper::defaults(3, 2, 1.5);  // nu <= p - 1
  REQUIRE_THROWS_AS(hy.validate(3, 2), InvalidParamsError);
  RngStream rng(65);
  REQUIRE_THROWS_AS(simulate_mst(2, Matrix::Zero(3, 2), Matrix::Zero(3, 2),
                                 Matrix::Identity(3, 3), Matrix::Identity(2, 2), 1.5, rng),
                    InvalidParamsError);
}

TEST_CASE("predictive loss is reproducible and rejects an empty chain") {
  RngStream rng(66);
  const int n = 5, p = 2, q = 2;
  MstHyper hy = MstHyper::defaults(p, q, 10.0);
  MstData data = simulate_mst(n, Matrix::Zero(p, q), Matrix::Zero(p, q),
                              Matrix::Identity(p, p), Matrix::Identity(q, q), hy.nu, rng);
  std::vector<MstState> chain;
  for (int t = 0; t < 30; ++t) chain.push_back(random_state(n, p, q, rng));
  RngStream r1(13, 0), r2(13, 0);
  const double l1 = predictive_loss(chain, data, hy, r1);
  const double l2 = predictive_loss(chain, data, hy, r2);
  REQUIRE(l1 == l2);
  REQUIRE(l1 > 0.0);
  std::vector<MstState> empty;
  RngStream r3(13, 1);
  REQUIRE_THROWS_AS(predictive_loss(empty, data, hy, r3), EmptyChainError);
}
