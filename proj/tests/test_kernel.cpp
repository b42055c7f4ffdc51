#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bnngp/errors.hpp"
#include "bnngp/kernel.hpp"
#include "bnngp/linalg.hpp"
#include "bnngp/quadrature.hpp"
#include "bnngp/rng.hpp"

#include <cmath>

using namespace bnngp;

namespace {

Matrix random_psd(int n, std::uint64_t seed) {
  NormalStream rng(RngSeed{seed});
  Matrix A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = rng.next();
  return A * A.transpose() / n + 0.05 * Matrix::Identity(n, n);
}

Matrix oracle_k() {
  Matrix K(3, 3);
  K << 1.3, 0.4, -0.2, 0.4, 0.9, 0.1, -0.2, 0.1, 1.1;
  return K;
}

}  // namespace

TEST_CASE("linear kernel") {
  Matrix X(2, 2);
  X << 1, 0, 0, 1;
  const Matrix K = linear_kernel(X, {0.09, 1.1, 0.0});
  CHECK(K(0, 0) == doctest::Approx(1.19).epsilon(1e-15));
  CHECK(K(0, 1) == doctest::Approx(0.09).epsilon(1e-15));
  CHECK(K(1, 0) == K(0, 1));
  Matrix one(1, 2);
  one << 1, 0;
  CHECK(linear_kernel(one, {0.0, 1.0, 0.0})(0, 0) == 1.0);
  X(0, 0) = NAN;
  CHECK_THROWS_AS(linear_kernel(X, {0.0, 1.0, 0.0}), Error);
}

TEST_CASE("j1 and j2") {
  CHECK(bnngp::j1(0.7) == doctest::Approx(2.5116507528670468).epsilon(1e-14));
  CHECK(j2(0.7) == doctest::Approx(6.7763504296191516).epsilon(1e-14));
  CHECK(bnngp::j1(M_PI / 3) == doctest::Approx(1.9132229549810364).epsilon(1e-14));
  CHECK(bnngp::j1(0.0) == doctest::Approx(M_PI));
  CHECK(bnngp::j1(M_PI) == doctest::Approx(0.0));
  CHECK(j2(0.0) == doctest::Approx(3 * M_PI));
  CHECK(j2(M_PI / 2) == doctest::Approx(M_PI / 2));
  for (double t : {0.0, 0.1, 1.0, 2.0, 2.5}) {
    CHECK(j1_inverse(bnngp::j1(t)) == doctest::Approx(t).epsilon(1e-7));
    CHECK(j2_inverse(j2(t)) == doctest::Approx(t).epsilon(1e-7));
  }
  // both are cubic-flat at pi, so only the forward residual is well conditioned there
  for (double y : {1e-12, 1e-6, 0.5, 3.0}) CHECK(std::abs(bnngp::j1(j1_inverse(y)) - y) < 1e-14);
  for (double y : {1e-12, 1e-6, 0.5, 9.0}) CHECK(std::abs(j2(j2_inverse(y)) - y) < 1e-14);
  CHECK_THROWS_AS(bnngp::j1(4.0), Error);
}

TEST_CASE("relu step against 2D quadrature oracle") {
  const Matrix R = relu_kernel_step(oracle_k(), {0.2, 1.5, 0.0});
  Matrix ref(3, 3);
  ref << 2.15, 1.052190519315457, 0.628969187841896, 1.052190519315457, 1.55, 0.752472883637638,
      0.628969187841896, 0.752472883637638, 1.85;
  CHECK((R - ref).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sinusoidal step against 2D quadrature oracle") {
  const Matrix S = sinusoidal_kernel_step(oracle_k(), {0.2, 1.5, 0.0});
  Matrix ref(3, 3);
  ref << 1.7, 0.944877955687114, 0.56989544591241, 0.944877955687114, 1.7, 0.809854489610899,
      0.56989544591241, 0.809854489610899, 1.7;
  CHECK((S - ref).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("generic quadrature step matches closed forms") {
  const Hyperparams h{0.3, 1.2, 0.0};
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Matrix K = random_psd(3, 100 + s);
    CHECK((generic_kernel_step(K, h, Nonlinearity::relu()) - relu_kernel_step(K, h)).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK((generic_kernel_step(K, h, Nonlinearity::sinusoidal()) - sinusoidal_kernel_step(K, h))
              .cwiseAbs()
              .maxCoeff() < 1e-10);
  }
}

TEST_CASE("custom nonlinearity goes through quadrature") {
  const auto tanh_phi = Nonlinearity::custom([](double x) { return std::tanh(x); }, 1.0, 1.0);
  Matrix K(1, 1);
  K << 1.0;
  // E[tanh(z)^2], z ~ N(0, 1)
  const double e = kernel_step(K, {0.0, 1.0, 0.0}, tanh_phi)(0, 0);
  CHECK(e == doctest::Approx(0.39429449).epsilon(1e-6));
  const auto id = Nonlinearity::identity();
  const Matrix K2 = oracle_k();
  CHECK((kernel_step(K2, {0.1, 2.0, 0.0}, id).array() - (0.1 + 2.0 * K2.array())).abs().maxCoeff() < 1e-10);
}

TEST_CASE("backstep inverts step") {
  const Hyperparams h{0.1, 1.5, 0.0};
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix K0 = random_psd(4, 200 + s);
    const Matrix back = relu_kernel_backstep(relu_kernel_step(K0, h), h);
    CHECK((back - K0).cwiseAbs().maxCoeff() / K0.diagonal().maxCoeff() < 1e-9);
  }
  Matrix bad(1, 1);
  bad << 0.05;
  try {
    relu_kernel_backstep(bad, h);
    FAIL("expected not-in-image");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotInImage);
  }
}

TEST_CASE("degenerate diagonal") {
  Matrix K = Matrix::Zero(2, 2);
  K(0, 0) = 1.0;
  try {
    relu_kernel_step(K, {0.0, 1.0, 0.0});
    FAIL("expected degenerate kernel");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateKernel);
  }
}

TEST_CASE("sinusoidal one layer is an RBF kernel") {
  NormalStream rng(RngSeed{5});
  Matrix X(6, 3);
  for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.next();
  const Hyperparams h{0.2, 0.7, 0.0};
  const Matrix K = nngp_kernel(X, 1, h, Nonlinearity::sinusoidal());
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b)
      CHECK(K(a, b) == doctest::Approx(0.2 + 0.7 * std::exp(-0.35 * (X.row(a) - X.row(b)).squaredNorm()))
                           .epsilon(1e-12));
}

TEST_CASE("sinusoidal deep fixed point") {
  auto fp = sinusoidal_deep_fixed_point({0.1, 0.5, 0.0});
  CHECK(fp.v_star == doctest::Approx(0.6));
  CHECK(fp.c_star == doctest::Approx(1.0));
  fp = sinusoidal_deep_fixed_point({0.0, 2.0, 0.0});
  CHECK(fp.v_star == doctest::Approx(2.0));
  CHECK(fp.c_star == doctest::Approx(0.20318786998007712).epsilon(1e-10));
  try {
    sinusoidal_deep_fixed_point({0.1, 1.0, 0.0});
    FAIL("expected phase boundary");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::PhaseBoundary);
  }
}

TEST_CASE("deep relu kernel loses angle information for v_w < 1") {
  Matrix X(2, 2);
  X << 1, 0, 0, 1;
  const Matrix K = nngp_kernel(X, 300, {0.1, 0.8, 0.0}, Nonlinearity::relu());
  CHECK(correlation(K, 0, 1) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("cholesky jitter") {
  Matrix K = Matrix::Ones(3, 3);
  const auto c = cholesky_with_jitter(K);
  CHECK(c.jitter > 0.0);
  CHECK(((c.lower * c.lower.transpose()) - K).cwiseAbs().maxCoeff() < 1e-5);
  CHECK_THROWS_AS(cholesky_with_jitter(-Matrix::Identity(2, 2)), Error);
}
