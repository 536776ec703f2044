#include <gtest/gtest.h>

#include <cmath>

#include "bnn/data/split.hpp"
#include "bnn/data/synthetic.hpp"
#include "bnn/numerics/ols.hpp"
#include "bnn/training/ensemble.hpp"

using namespace bnn;

namespace {

NetworkSpec mlp(std::size_t p, std::vector<std::size_t> hidden) {
  NetworkSpec s;
  s.input_dim = p;
  s.hidden_widths = std::move(hidden);
  s.activation = Activation::tanh();
  return s;
}

double rmse(const Vector& a, const Vector& b) { return std::sqrt((a - b).squaredNorm() / a.size()); }

double member_rmse(const NetworkSpec& spec, const Vector& theta, const Dataset& d) {
  return rmse(forward_batch(spec, theta, d.X).mu, d.y);
}

}  // namespace

TEST(Adam, FirstStepMagnitude) {
  AdamConfig cfg;
  cfg.weight_decay = 0.0;
  Vector theta = Vector::Zero(1);
  AdamState st(1);
  adam_step(theta, Vector::Ones(1), st, cfg);
  EXPECT_NEAR(theta[0], -0.01 / (1.0 + 1e-8), 1e-15);
  EXPECT_EQ(st.step, 1u);
}

TEST(Adam, ZeroGradientNoDecayIsIdentity) {
  AdamConfig cfg;
  cfg.weight_decay = 0.0;
  Vector theta(3);
  theta << 1.0, -2.0, 0.5;
  const Vector start = theta;
  AdamState st;
  for (int i = 0; i < 10; ++i) adam_step(theta, Vector::Zero(3), st, cfg);
  EXPECT_EQ(theta, start);
}

TEST(Adam, OddInGradient) {
  AdamConfig cfg;
  cfg.weight_decay = 0.0;
  RngStream rng(1, 0);
  Vector a = Vector::Zero(4), b = Vector::Zero(4);
  AdamState sa, sb;
  for (int i = 0; i < 50; ++i) {
    Vector g(4);
    for (auto& v : g) v = rng.normal();
    adam_step(a, g, sa, cfg);
    adam_step(b, -g, sb, cfg);
    EXPECT_EQ(a, -b);
  }
}

TEST(Adam, DecayOnlyOnMaskedCoordinates) {
  AdamConfig cfg;
  Vector theta = Vector::Ones(2);
  Vector mask(2);
  mask << 1.0, 0.0;
  AdamState st;
  adam_step(theta, Vector::Zero(2), st, cfg, mask);
  EXPECT_NEAR(theta[0], 1.0 - 1e-4, 1e-15);
  EXPECT_EQ(theta[1], 1.0);
}

TEST(Adam, ConvergesOnQuadratic) {
  AdamConfig cfg;
  cfg.weight_decay = 0.0;
  Vector theta = Vector::Zero(1);
  AdamState st;
  for (int i = 0; i < 5000; ++i) adam_step(theta, 2.0 * (theta.array() - 3.0).matrix(), st, cfg);
  EXPECT_NEAR(theta[0], 3.0, 1e-3);
}

TEST(Adam, RejectsBadConfig) {
  AdamConfig cfg;
  cfg.beta1 = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(TrainMember, FitsLinearData) {
  RngStream data_rng(2, 0);
  Dataset d;
  d.X.resize(100, 1);
  for (Eigen::Index i = 0; i < 100; ++i) d.X(i, 0) = data_rng.uniform(-1.0, 1.0);
  d.y = 2.0 * d.X.col(0);
  const auto spec = mlp(1, {8});
  RngStream rng(3, 0);
  const auto m = train_member(spec, d, {}, rng);
  EXPECT_LE(member_rmse(spec, m.theta, d), 0.05);
  EXPECT_LE(m.nll_trace.back(), m.nll_trace.front());
  EXPECT_EQ(m.nll_trace.size(), 5001u);
}

TEST(TrainMember, ConstantTarget) {
  RngStream data_rng(4, 0);
  Dataset d;
  d.X.resize(50, 2);
  for (auto& v : d.X.reshaped()) v = data_rng.normal();
  d.y = Vector::Zero(50);
  const auto spec = mlp(2, {8});
  RngStream rng(5, 0);
  const auto m = train_member(spec, d, {}, rng);
  EXPECT_LE(member_rmse(spec, m.theta, d), 1e-2);
}

TEST(TrainMember, Deterministic) {
  RngStream data_rng(6, 0);
  auto syn = synth_regression(SynthKind::sine, 60, 0.1, data_rng);
  const auto spec = mlp(1, {8});
  AdamConfig cfg;
  cfg.epochs = 200;
  RngStream r1(7, 3), r2(7, 3);
  EXPECT_EQ(train_member(spec, syn.data, cfg, r1).theta, train_member(spec, syn.data, cfg, r2).theta);
}

TEST(TrainMember, NonFiniteLossReportsEpoch) {
  Dataset d;
  d.X = Matrix::Ones(4, 1);
  d.y = Vector::Zero(4);
  d.y[2] = std::numeric_limits<double>::quiet_NaN();
  RngStream rng(8, 0);
  try {
    train_member(mlp(1, {2}), d, {}, rng);
    FAIL();
  } catch (const DivergedTraining& e) {
    EXPECT_EQ(e.epoch(), 0u);
    EXPECT_EQ(e.kind(), ErrorKind::diverged_training);
  }
}

TEST(TrainEnsemble, SingleMemberEqualsSubstreamZero) {
  RngStream data_rng(9, 0);
  auto syn = synth_regression(SynthKind::sine, 40, 0.1, data_rng);
  const auto spec = mlp(1, {4});
  AdamConfig cfg;
  cfg.epochs = 100;
  const RngStream master(10, 0);
  const auto ens = train_ensemble(spec, syn.data, 1, cfg, master);
  RngStream sub = master.substream(0);
  EXPECT_EQ(ens.members[0].theta, train_member(spec, syn.data, cfg, sub).theta);
}

TEST(TrainEnsemble, MembersDistinctAndEnsembleHelps) {
  RngStream data_rng(11, 0);
  auto syn = synth_regression(SynthKind::sine, 300, 0.1, data_rng);
  SplitSpec split;
  split.seed = 11;
  const auto parts = normalize_split(syn.data.X, syn.data.y, split);
  const auto spec = mlp(1, {16, 16});
  AdamConfig cfg;
  cfg.epochs = 1500;
  const auto ens = train_ensemble(spec, parts.train, 12, cfg, RngStream(12, 0), 2);
  ASSERT_EQ(ens.members.size(), 12u);
  for (std::size_t a = 0; a < 12; ++a)
    for (std::size_t b = a + 1; b < 12; ++b) EXPECT_GT((ens.members[a].theta - ens.members[b].theta).norm(), 0.0);

  const auto mix = de_predict(spec, ens.parameters(), parts.test.X);
  const double de = rmse(mix.mean(), parts.test.y);
  double best = 1e300;
  for (const auto& m : ens.members) best = std::min(best, member_rmse(spec, m.theta, parts.test));
  EXPECT_LE(de, best + 0.02);
}

TEST(TrainEnsemble, IndependentOfJobs) {
  RngStream data_rng(13, 0);
  auto syn = synth_regression(SynthKind::sine, 40, 0.1, data_rng);
  const auto spec = mlp(1, {4});
  AdamConfig cfg;
  cfg.epochs = 50;
  const auto a = train_ensemble(spec, syn.data, 5, cfg, RngStream(14, 0), 1);
  const auto b = train_ensemble(spec, syn.data, 5, cfg, RngStream(14, 0), 3);
  for (std::size_t m = 0; m < 5; ++m) EXPECT_EQ(a.members[m].theta, b.members[m].theta);
}

TEST(DePredict, MixtureMoments) {
  NetworkSpec spec;  // no hidden layer: mu = b0, log_var = b1
  spec.input_dim = 1;
  Vector m1(4), m2(4);
  m1 << 0.0, 0.0, 1.0, 0.0;
  m2 << 0.0, 0.0, -1.0, 0.0;
  const Matrix X = Matrix::Zero(3, 1);
  const auto mix = de_predict(spec, {m1, m2}, X);
  EXPECT_EQ(mix.components(), 2u);
  for (Eigen::Index i = 0; i < 3; ++i) {
    EXPECT_NEAR(mix.mean()[i], 0.0, 1e-15);
    EXPECT_NEAR(mix.variance()[i], 2.0, 1e-15);
  }
  const auto single = de_predict(spec, {m1}, X);
  EXPECT_EQ(single.mean()[0], 1.0);
  EXPECT_EQ(single.variance()[0], 1.0);
  const auto same = de_predict(spec, {m1, m1, m1}, X);
  EXPECT_EQ(same.mean()[0], 1.0);
}
