#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "smclab/plants.hpp"

namespace smclab {
namespace {

using ::testing::TestWithParam;

TEST(Pendulum, Equilibrium) {
  const auto d = pendulum_dynamics(std::vector{0.0, 0.0}, 0.0, {1.0, 0.0, 1.0});
  EXPECT_EQ(d[0], 0.0);
  EXPECT_EQ(d[1], 0.0);
}

TEST(Pendulum, GravityTorqueAtQuarterTurn) {
  const auto d = pendulum_dynamics(std::vector{std::numbers::pi / 2, 0.0}, 0.0,
                                   {1.0, 0.0, 1.0});
  EXPECT_EQ(d[0], 0.0);
  EXPECT_DOUBLE_EQ(d[1], 1.0);
}

TEST(Pendulum, InputChannel) {
  const auto d = pendulum_dynamics(std::vector{0.0, 0.0}, 2.0, {1.0, 0.0, 1.0});
  EXPECT_EQ(d[0], 0.0);
  EXPECT_EQ(d[1], 2.0);
}

TEST(Pendulum, UprightIsUnstableOpenLoop) {
  // Small positive tilt accelerates further away.
  const auto d = pendulum_dynamics(std::vector{0.01, 0.0}, 0.0, PendulumParams{});
  EXPECT_GT(d[1], 0.0);
}

TEST(Pendulum, RejectsNonFinite) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(pendulum_dynamics(std::vector{nan, 0.0}, 0.0, {}), Error);
  EXPECT_THROW(pendulum_dynamics(std::vector{0.0, 0.0}, INFINITY, {}), Error);
  try {
    pendulum_dynamics(std::vector{nan, 0.0}, 0.0, {});
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
  }
}

TEST(VanDerPol, Examples) {
  auto d = vdp_dynamics(std::vector{0.0, 0.0}, 0.0, {1.0, 1.0});
  EXPECT_EQ(d, (StateVec{0.0, 0.0}));
  d = vdp_dynamics(std::vector{1.0, 1.0}, 0.0, {1.0, 1.0});
  EXPECT_EQ(d, (StateVec{1.0, -1.0}));
  d = vdp_dynamics(std::vector{0.0, 1.0}, 0.0, {2.0, 1.0});
  EXPECT_EQ(d, (StateVec{1.0, 2.0}));
}

TEST(VanDerPol, RejectsNonFinite) {
  EXPECT_THROW(vdp_dynamics(std::vector<double>{0.0, NAN}, 0.0, {}), Error);
}

TEST(Duffing, Examples) {
  const DuffingParams p{0.2, 1.0, -1.0, 1.0};
  EXPECT_EQ(duffing_dynamics(std::vector{1.0, 0.0}, 0.0, p), (StateVec{0.0, 0.0}));
  EXPECT_EQ(duffing_dynamics(std::vector{0.0, 0.0}, 0.0, p), (StateVec{0.0, 0.0}));
  EXPECT_EQ(duffing_dynamics(std::vector{2.0, 0.0}, 0.0, p), (StateVec{0.0, -6.0}));
  EXPECT_EQ(duffing_dynamics(std::vector{-1.0, 0.0}, 0.0, p), (StateVec{0.0, 0.0}));
}

TEST(Duffing, RejectsNonFinite) {
  EXPECT_THROW(duffing_dynamics(std::vector<double>{INFINITY, 0.0}, 0.0, {}), Error);
}

TEST(Network, SynchronizedEquilibrium) {
  const NetworkParams p{};
  const StateVec x(10, 0.0);
  const std::vector<double> u(5, 0.0);
  for (double v : network_dynamics(x, u, p)) EXPECT_EQ(v, 0.0);
}

TEST(Network, TwoNodeChainDiffusion) {
  NetworkParams p;
  p.n = 2;
  p.kappa = 0.5;
  p.topology = Topology::Chain;
  p.node = {0.0, 0.1, 1.0};
  const auto d = network_dynamics(std::vector{0.0, 0.0, 1.0, 0.0},
                                  std::vector{0.0, 0.0}, p);
  EXPECT_DOUBLE_EQ(d[1], 0.5);
  EXPECT_DOUBLE_EQ(d[3], -0.5);
}

TEST(Network, IdenticalStatesFeelNoCoupling) {
  NetworkParams p;
  p.kappa = 3.7;
  StateVec x;
  for (int i = 0; i < 5; ++i) {
    x.push_back(0.42);
    x.push_back(-0.13);
  }
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(network_coupling(x, i, p), 0.0);
}

TEST(Network, DimensionMismatch) {
  const NetworkParams p{};
  EXPECT_THROW(network_dynamics(StateVec(10, 0.0), std::vector<double>(4, 0.0), p),
               Error);
  EXPECT_THROW(network_dynamics(StateVec(8, 0.0), std::vector<double>(5, 0.0), p),
               Error);
}

TEST(Network, NeighborSets) {
  EXPECT_EQ(network_neighbors(0, 5, Topology::Ring),
            (std::vector<std::size_t>{4, 1}));
  EXPECT_EQ(network_neighbors(4, 5, Topology::Ring),
            (std::vector<std::size_t>{3, 0}));
  EXPECT_EQ(network_neighbors(0, 5, Topology::Chain),
            (std::vector<std::size_t>{1}));
  EXPECT_EQ(network_neighbors(4, 5, Topology::Chain),
            (std::vector<std::size_t>{3}));
  EXPECT_EQ(network_neighbors(0, 2, Topology::Ring),
            (std::vector<std::size_t>{1}));
}

class NetworkProperty : public TestWithParam<unsigned> {};

TEST_P(NetworkProperty, UncoupledEqualsIndependentPendulums) {
  std::mt19937_64 gen(GetParam());
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  NetworkParams p;
  p.kappa = 0.0;
  StateVec x(10);
  std::vector<double> u(5);
  for (double& v : x) v = dist(gen);
  for (double& v : u) v = dist(gen);
  const auto net = network_dynamics(x, u, p);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto single =
        pendulum_dynamics(std::vector{x[2 * i], x[2 * i + 1]}, u[i], p.node);
    EXPECT_EQ(net[2 * i], single[0]);
    EXPECT_EQ(net[2 * i + 1], single[1]);
  }
}

TEST_P(NetworkProperty, RingCouplingSumsToZero) {
  std::mt19937_64 gen(GetParam());
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  NetworkParams p;
  p.kappa = 0.5 + dist(gen) * dist(gen);
  if (p.kappa < 0) p.kappa = -p.kappa;
  StateVec x(10);
  for (double& v : x) v = dist(gen);
  double sum = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    const double c = network_coupling(x, i, p);
    sum += c;
    scale += std::abs(c);
  }
  EXPECT_LE(std::abs(sum), 1e-14 * std::max(1.0, scale));
}

TEST_P(NetworkProperty, EvaluationIsPure) {
  std::mt19937_64 gen(GetParam());
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  StateVec x(10);
  std::vector<double> u(5);
  for (double& v : x) v = dist(gen);
  for (double& v : u) v = dist(gen);
  const PlantModel plant(NetworkParams{});
  EXPECT_EQ(plant.derivative(x, u, 0.1), plant.derivative(x, u, 0.1));
}

INSTANTIATE_TEST_SUITE_P(Seeds, NetworkProperty, ::testing::Range(0u, 50u));

TEST(PlantModel, NamesAndSizes) {
  EXPECT_EQ(PlantModel(PendulumParams{}).name(), "pendulum");
  EXPECT_EQ(PlantModel(VdpParams{}).name(), "vdp");
  EXPECT_EQ(PlantModel(DuffingParams{}).name(), "duffing");
  EXPECT_EQ(PlantModel(NetworkParams{}).state_size(), 10u);
  EXPECT_EQ(PlantModel(VdpParams{}).nodes(), 1u);
}

TEST(PlantModel, DisturbanceEntersAccelerationOnly) {
  const PlantModel plant(NetworkParams{});
  const StateVec x(10, 0.0);
  const std::vector<double> u(5, 0.0);
  const auto d = plant.derivative(x, u, 0.2);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(d[2 * i], 0.0);
    EXPECT_EQ(d[2 * i + 1], 0.2);
  }
}

TEST(PlantModel, SingularGainIsRejected) {
  const PlantModel plant(PendulumParams{1.0, 0.1, 1e-12});
  try {
    plant.input_gain(std::vector{0.0, 0.0}, 0);
    FAIL() << "expected singular-gain error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularGain);
  }
}

TEST(PlantModel, ShippedGainsAreAdmissible) {
  for (const PlantParams& p :
       {PlantParams{PendulumParams{}}, PlantParams{VdpParams{}},
        PlantParams{DuffingParams{}}, PlantParams{NetworkParams{}}}) {
    const PlantModel plant(p);
    EXPECT_GE(std::abs(plant.input_gain(StateVec(plant.state_size(), 0.3), 0)),
              kMinInputGain);
  }
}

}  // namespace
}  // namespace smclab
