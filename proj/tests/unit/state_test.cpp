#include <random>

#include <gtest/gtest.h>

#include "gatedlio/iekf_update.hpp"
#include "gatedlio/state.hpp"
#include "test_util.hpp"

namespace gatedlio {
namespace {

using testing::random_state;

TEST(State, BoxplusBoxminusRoundTrip) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 0.3);
  for (int i = 0; i < 100; ++i) {
    const NavState x = random_state(rng);
    ErrorState d;
    for (int k = 0; k < kStateDim; ++k) d[k] = n(rng);
    EXPECT_LT((boxminus(boxplus(x, d), x) - d).norm(), 1e-11);
    const NavState y = random_state(rng);
    const NavState back = boxplus(y, boxminus(x, y));
    EXPECT_LT(boxminus(back, x).norm(), 1e-11);
  }
}

TEST(State, BoxplusZeroIsIdentity) {
  std::mt19937_64 rng(12);
  const NavState x = random_state(rng);
  EXPECT_EQ(boxminus(boxplus(x, ErrorState::Zero()), x).norm(), 0.0);
}

TEST(State, RotationIsRightPerturbed) {
  NavState x;
  x.rot_GI = exp_so3(Vec3(0.0, 0.0, 1.0));
  ErrorState d = ErrorState::Zero();
  d.segment<3>(idx::kRot) = Vec3(0.1, 0.0, 0.0);
  const Mat3 expected = x.rot_GI.matrix() * exp_so3(Vec3(0.1, 0.0, 0.0)).matrix();
  EXPECT_TRUE(boxplus(x, d).rot_GI.matrix().isApprox(expected, 1e-14));
}

TEST(State, MMatrixMatchesFiniteDifferences) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n(0.0, 0.2);
  for (int i = 0; i < 20; ++i) {
    const NavState x_hat = random_state(rng);
    ErrorState off;
    for (int k = 0; k < kStateDim; ++k) off[k] = n(rng);
    const NavState x_kappa = boxplus(x_hat, off);
    const Eigen::MatrixXd fd = testing::numeric_jacobian(
        [&](const ErrorState& d) -> Eigen::VectorXd { return boxminus(boxplus(x_kappa, d), x_hat); }, kStateDim);
    EXPECT_LT((fd - m_matrix(x_kappa, x_hat)).cwiseAbs().maxCoeff(), 1e-6) << "config " << i;
  }
}

TEST(State, CovarianceValidity) {
  CovMatrix p = CovMatrix::Identity();
  EXPECT_TRUE(is_valid_covariance(p));
  p(0, 1) = 0.1;
  EXPECT_FALSE(is_valid_covariance(p));
  EXPECT_TRUE(is_valid_covariance(symmetrized(p)));
  p = CovMatrix::Identity();
  p(4, 4) = -1e-3;
  EXPECT_FALSE(is_valid_covariance(p));
}

TEST(State, CsvRoundTrip) {
  std::mt19937_64 rng(14);
  const NavState x = random_state(rng);
  double t = 0.0;
  const NavState y = state_from_csv_row(state_to_csv_row(12.5, x), &t);
  EXPECT_EQ(t, 12.5);
  EXPECT_LT(boxminus(y, x).norm(), 1e-15);
  EXPECT_THROW(state_from_csv_row("1,2,3"), std::invalid_argument);
  EXPECT_THROW(state_from_csv_row(state_to_csv_row(1.0, x) + ",x"), std::invalid_argument);
}

}  // namespace
}  // namespace gatedlio
