#include <gtest/gtest.h>

#include <cmath>

#include "bnn/baselines/baselines.hpp"
#include "bnn/diagnostics/coverage.hpp"
#include "bnn/diagnostics/ess.hpp"
#include "bnn/diagnostics/filter.hpp"
#include "bnn/diagnostics/functional.hpp"
#include "bnn/diagnostics/layers.hpp"
#include "bnn/diagnostics/lppd.hpp"
#include "bnn/diagnostics/rhat.hpp"
#include "bnn/network/symmetry.hpp"
#include "support/oracles.hpp"

using namespace bnn;

namespace {

std::vector<double> normals(RngStream& rng, std::size_t n, double mean = 0.0, double sd = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal(mean, sd);
  return v;
}

std::vector<double> ar1(RngStream& rng, std::size_t n, double phi) {
  std::vector<double> v(n);
  double x = rng.normal() / std::sqrt(1.0 - phi * phi);
  for (auto& e : v) {
    x = phi * x + rng.normal();
    e = x;
  }
  return v;
}

PredictiveMixture mixture(std::initializer_list<std::initializer_list<double>> mu, double sd) {
  PredictiveMixture m;
  m.mu.resize(static_cast<Eigen::Index>(mu.size()), static_cast<Eigen::Index>(mu.begin()->size()));
  Eigen::Index i = 0;
  for (auto row : mu) {
    Eigen::Index j = 0;
    for (double v : row) m.mu(i, j++) = v;
    ++i;
  }
  m.sd = Matrix::Constant(m.mu.rows(), m.mu.cols(), sd);
  return m;
}

Chain chain_from(const Matrix& samples, std::size_t id) {
  Chain c;
  c.chain_id = id;
  c.samples = samples;
  return c;
}

}  // namespace

TEST(Rhat, WorkedSubchainExample) {
  const auto comps = rhat_components({{1.0, 3.0}, {2.0, 4.0}});
  EXPECT_DOUBLE_EQ(comps.B, 1.0);
  EXPECT_DOUBLE_EQ(comps.W, 2.0);
  const auto r = rhat({{1.0, 3.0}, {2.0, 4.0}}, 1, false);
  ASSERT_TRUE(r.ok());
  EXPECT_NEAR(r.value, std::sqrt(0.75), 1e-15);
}

TEST(Rhat, IidChainsNearOne) {
  RngStream rng(1, 0);
  Sequences chains;
  for (int k = 0; k < 4; ++k) chains.push_back(normals(rng, 5000));
  const auto r = rhat(chains, 2, true);
  EXPECT_GE(r.value, 0.99);
  EXPECT_LE(r.value, 1.01);
}

TEST(Rhat, MeanShiftDetected) {
  RngStream rng(2, 0);
  const auto r = rhat({normals(rng, 1000, 0.0), normals(rng, 1000, 5.0)}, 2, false);
  EXPECT_GT(r.value, 1.1);
}

TEST(Rhat, AffineAndMonotoneInvariance) {
  RngStream rng(3, 0);
  Sequences chains{normals(rng, 400, 0.0), normals(rng, 400, 0.3), normals(rng, 400, -0.2)};
  Sequences affine = chains, monotone = chains;
  for (auto& c : affine) for (auto& x : c) x = -3.0 * x + 7.0;
  for (auto& c : monotone) for (auto& x : c) x = std::exp(x);
  EXPECT_NEAR(rhat(chains, 2, false).value, rhat(affine, 2, false).value, 1e-12);
  EXPECT_NEAR(rhat(chains, 2, true).value, rhat(monotone, 2, true).value, 1e-12);
}

TEST(Rhat, SplitDiscardsTrailingValues) {
  const auto sub = split_chains({{1, 2, 3, 4, 5, 6, 7}}, 3);
  ASSERT_EQ(sub.size(), 3u);
  EXPECT_EQ(sub[2], (std::vector<double>{5, 6}));
}

TEST(Rhat, RankNormalizationTiesAndOffset) {
  const auto z = rank_normalize({{1.0, 2.0}, {2.0, 3.0}});
  // Ranks 1, 2.5, 2.5, 4 over N = 4.
  EXPECT_NEAR(z[0][0], std_normal_quantile((1 - 0.375) / 4.25), 1e-15);
  EXPECT_EQ(z[0][1], z[1][0]);
  EXPECT_NEAR(z[0][1], std_normal_quantile((2.5 - 0.375) / 4.25), 1e-15);
}

TEST(Rhat, DegenerateAndUnavailable) {
  EXPECT_EQ(rhat({{1, 1, 1, 1}, {1, 1, 1, 1}}, 2, false).status, DiagValue::Status::degenerate);
  EXPECT_EQ(rhat({{1, 1, 1, 1}, {2, 2, 2, 2}}, 1, true).status, DiagValue::Status::degenerate);
  EXPECT_EQ(rhat({{1, 2, 3, 4}}, 1, false).status, DiagValue::Status::unavailable);
}

TEST(CRhat, StationaryTrendConstant) {
  RngStream rng(4, 0);
  auto noise = normals(rng, 4000);
  EXPECT_LE(c_rhat(noise).value, 1.05);
  auto trend = noise;
  for (std::size_t i = 0; i < trend.size(); ++i) trend[i] += 2.0 * static_cast<double>(i) / 4000.0;
  EXPECT_GT(c_rhat(trend).value, 1.1);
  std::vector<double> flat(100, 3.0);
  EXPECT_EQ(c_rhat(flat).status, DiagValue::Status::degenerate);
  EXPECT_THROW(c_rhat(std::vector<double>(15, 0.0)), Error);
}

TEST(Ess, IidChain) {
  RngStream rng(5, 0);
  const auto r = ess(normals(rng, 10000));
  EXPECT_GE(r.ess, 8000.0);
  EXPECT_LE(r.ess, 10500.0);
}

TEST(Ess, Ar1Chain) {
  RngStream rng(6, 0);
  const auto r = ess(ar1(rng, 20000, 0.9));
  EXPECT_NEAR(r.ess, 20000.0 / 19.0, 0.3 * 20000.0 / 19.0);
}

TEST(Ess, DecreasesWithAutocorrelation) {
  RngStream rng(7, 0);
  const double e0 = ess(ar1(rng, 5000, 0.0)).ess;
  const double e5 = ess(ar1(rng, 5000, 0.5)).ess;
  const double e9 = ess(ar1(rng, 5000, 0.9)).ess;
  EXPECT_GT(e0, e5);
  EXPECT_GT(e5, e9);
}

TEST(Ess, AlternatingCappedAndDegenerate) {
  std::vector<double> alt(200);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 ? -1.0 : 1.0;
  EXPECT_EQ(ess(alt).ess, 200.0);
  EXPECT_TRUE(ess(std::vector<double>(20, 1.0)).degenerate);
  EXPECT_THROW(ess(std::vector<double>(7, 1.0)), Error);
}

TEST(Lppd, HandValues) {
  Vector y(2);
  y << 0.3, -1.0;
  EXPECT_NEAR(lppd(mixture({{0.3}, {-1.0}}, 1.0), y), -0.9189385332046727, 1e-15);
  EXPECT_NEAR(lppd(mixture({{0.3, 0.3}, {-1.0, -1.0}}, 1.0), y), -0.9189385332046727, 1e-15);
  EXPECT_NEAR(lppd(mixture({{0.0, 2.0}}, 1.0), Vector::Constant(1, 1.0)), -1.4189385332046727, 1e-12);
}

TEST(Lppd, DuplicationInvariant) {
  RngStream rng(8, 0);
  PredictiveMixture m;
  m.mu = Matrix::NullaryExpr(10, 7, [&] { return rng.normal(); });
  m.sd = Matrix::NullaryExpr(10, 7, [&] { return 0.5 + rng.uniform(); });
  Vector y = Vector::NullaryExpr(10, [&] { return rng.normal(); });
  PredictiveMixture twice;
  twice.mu.resize(10, 14);
  twice.sd.resize(10, 14);
  twice.mu << m.mu, m.mu;
  twice.sd << m.sd, m.sd;
  EXPECT_NEAR(lppd(m, y), lppd(twice, y), 1e-12);
}

TEST(CumulativeLppd, StreamMatchesBatch) {
  RngStream rng(9, 0);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix mu = Matrix::NullaryExpr(50, 12, [&] { return rng.normal(); });
    const Matrix sd = Matrix::NullaryExpr(50, 12, [&] { return 0.1 + rng.uniform(); });
    const Vector y = Vector::NullaryExpr(12, [&] { return rng.normal(); });
    const auto seq = cumulative_lppd(mu, sd, y);
    PredictiveMixture mix;
    mix.mu = mu.transpose();
    mix.sd = sd.transpose();
    EXPECT_NEAR(seq.back(), lppd(mix, y), 1e-10);
  }
}

TEST(CumulativeLppd, ConstantAndImproving) {
  const Vector y = Vector::Zero(3);
  const auto flat = cumulative_lppd(Matrix::Constant(20, 3, 0.5), Matrix::Ones(20, 3), y);
  for (double v : flat) EXPECT_NEAR(v, flat.front(), 1e-12);

  Matrix mu = Matrix::Zero(60, 3);
  mu.topRows(10).setConstant(8.0);  // terrible samples first
  const auto seq = cumulative_lppd(mu, Matrix::Ones(60, 3), y);
  for (std::size_t l = 11; l < seq.size(); ++l) EXPECT_GT(seq[l], seq[l - 1]);
}

TEST(Convergence, Rules) {
  ConvergenceMonitor m;
  m.window = 5;
  for (int i = 0; i < 10; ++i) m.push(-1.0);
  EXPECT_EQ(convergence_check(m, 5), ConvergenceState::insufficient_history);
  EXPECT_EQ(convergence_check(m, 6), ConvergenceState::converged);

  ConvergenceMonitor lin;
  lin.window = 5;
  for (int i = 0; i < 10; ++i) lin.push(0.1 * i);  // slope 0.1 > epsilon
  EXPECT_EQ(convergence_check(lin, 8), ConvergenceState::running);
  lin.epsilon = std::numeric_limits<double>::infinity();
  EXPECT_EQ(convergence_check(lin, 8), ConvergenceState::converged);
}

TEST(Coverage, ExactPredictiveCalibrated) {
  RngStream rng(10, 0);
  const std::size_t n = 5000, J = 200;
  PredictiveMixture m;
  m.mu.resize(n, J);
  m.sd = Matrix::Ones(n, J);
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = rng.normal();
    m.mu.row(static_cast<Eigen::Index>(i)).setConstant(c);
    y[static_cast<Eigen::Index>(i)] = c + rng.normal();
  }
  const auto r = coverage(m, y, default_coverage_levels(), 3);
  EXPECT_FALSE(r.few_components);
  for (std::size_t l = 0; l < r.levels.size(); ++l) {
    EXPECT_NEAR(r.empirical[l], r.levels[l], 0.03) << "level " << r.levels[l];
    if (l) {
      EXPECT_GE(r.empirical[l], r.empirical[l - 1]);
    }
  }
}

TEST(Coverage, FarMixtureAndWarning) {
  PredictiveMixture m;
  m.mu = Matrix::Constant(50, 5, 100.0);
  m.sd = Matrix::Constant(50, 5, 0.1);
  const auto r = coverage(m, Vector::Zero(50), {0.5, 0.95}, 1);
  EXPECT_TRUE(r.few_components);
  for (double e : r.empirical) EXPECT_EQ(e, 0.0);
  EXPECT_THROW(coverage(m, Vector::Zero(50), {1.0}, 1), Error);
}

TEST(LayerVariance, WithinRatiosAndIdenticalChains) {
  NetworkSpec spec;
  spec.input_dim = 1;
  spec.hidden_widths = {2, 2};
  const Layout layout(spec);
  RngStream rng(11, 0);
  const double sds[] = {1.0, 2.0, 4.0};
  ChainSet set;
  for (std::size_t k = 0; k < 3; ++k) {
    Matrix s(4000, static_cast<Eigen::Index>(layout.size()));
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
      const double sd = sds[layout.layer_of(static_cast<std::size_t>(c))];
      for (Eigen::Index t = 0; t < s.rows(); ++t) s(t, c) = rng.normal(0.0, sd);
    }
    set.chains.push_back(chain_from(s, k));
  }
  const auto lv = layer_variance(set, layout);
  std::vector<double> w(3, 0.0);
  for (const auto& g : lv) if (!g.bias) w[g.layer] = g.within.mean;
  EXPECT_NEAR(w[1] / w[0], 4.0, 0.4);
  EXPECT_NEAR(w[2] / w[0], 16.0, 1.6);

  ChainSet same;
  same.chains = {set.chains[0], set.chains[0]};
  same.chains[1].chain_id = 1;
  for (const auto& g : layer_variance(same, layout)) EXPECT_LE(g.between.max, 1e-20);
}

TEST(ChainSlopes, ConstantLineAndOrdering) {
  EXPECT_EQ(index_slope(Vector::Constant(20, 3.0)), 0.0);
  EXPECT_NEAR(index_slope(Vector::LinSpaced(50, 0.0, 1.0)), 1.0, 1e-12);

  NetworkSpec spec;
  spec.input_dim = 1;
  spec.hidden_widths = {3, 3};
  const Layout layout(spec);
  RngStream rng(12, 0);
  const double drift[] = {0.0, 0.5, 1.0};
  ChainSet set;
  for (std::size_t k = 0; k < 2; ++k) {
    Matrix s(200, static_cast<Eigen::Index>(layout.size()));
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
      const double a = drift[layout.layer_of(static_cast<std::size_t>(c))];
      for (Eigen::Index t = 0; t < 200; ++t) s(t, c) = a * t / 199.0 + 0.05 * rng.normal();
    }
    set.chains.push_back(chain_from(s, k));
  }
  const auto sl = chain_slopes(set, layout);
  EXPECT_LT(sl[0].abs_slope.median, sl[1].abs_slope.median);
  EXPECT_LT(sl[1].abs_slope.median, sl[2].abs_slope.median);
}

TEST(PcaPath, LoadingsConcentrate) {
  NetworkSpec spec;
  spec.input_dim = 2;
  spec.hidden_widths = {3};
  const Layout layout(spec);
  RngStream rng(13, 0);
  Matrix s = Matrix::Zero(300, static_cast<Eigen::Index>(layout.size()));
  const Eigen::Index hot = static_cast<Eigen::Index>(layout.layer(1).weight_offset + 1);
  for (Eigen::Index t = 0; t < 300; ++t) s(t, hot) = rng.normal();
  for (Eigen::Index t = 0; t < 300; ++t) s(t, 0) = 1e-3 * rng.normal();
  const auto p = pca_path(s, layout, 1);
  EXPECT_GT(p.layer_loading[1], 10.0 * p.layer_loading[0]);

  Matrix walk(2000, 10);
  walk.row(0).setZero();
  for (Eigen::Index t = 1; t < 2000; ++t)
    for (Eigen::Index c = 0; c < 10; ++c) walk(t, c) = walk(t - 1, c) + rng.normal();
  NetworkSpec lin;  // no hidden layer, 4 inputs: 10 parameters in one layer
  lin.input_dim = 4;
  const auto q = pca_path(walk, Layout(lin), 3);
  EXPECT_EQ(q.explained.size(), 3u);
  EXPECT_GE(q.explained[0], q.explained[1]);
}

TEST(PcaPath, IsotropicWalkEvenAcrossLayers) {
  // Two layers of 5 coordinates each, averaged over independent walks.
  NetworkSpec spec;
  spec.input_dim = 1;
  spec.hidden_widths = {1};
  spec.bias = false;
  spec.head = OutputHead::fixed_noise;  // 2 parameters; reuse it 5 times below
  RngStream rng(14, 0);
  NetworkSpec five;
  five.input_dim = 4;
  five.hidden_widths = {1};
  five.bias = false;
  five.head = OutputHead::fixed_noise;  // layers: 4 + 1 coordinates
  const Layout layout(five);
  double l0 = 0.0, l1 = 0.0;
  for (int rep = 0; rep < 40; ++rep) {
    Matrix walk(500, 5);
    walk.row(0).setZero();
    for (Eigen::Index t = 1; t < 500; ++t)
      for (Eigen::Index c = 0; c < 5; ++c) walk(t, c) = walk(t - 1, c) + rng.normal();
    const auto p = pca_path(walk, layout, 3);
    l0 += p.layer_loading[0];
    l1 += p.layer_loading[1];
  }
  EXPECT_NEAR(l1 / l0, 1.0, 0.3);
}

namespace {

struct SampledFixture {
  NetworkSpec spec;
  Dataset train, test;
  PriorSpec prior;
  Chain base;
  SampledFixture() {
    RngStream rng(30, 0);
    spec.input_dim = 1;
    spec.hidden_widths = {4};
    train = oracle::random_dataset(30, 1, rng);
    test = oracle::random_dataset(10, 1, rng);
    Posterior target(spec, train, prior);
    SamplerConfig cfg;
    cfg.nuts.warmup_steps = 100;
    cfg.nuts.max_tree_depth = 6;
    base = run_chain(target, prior, cfg, {}, 400, 5, 0);
  }
};

}  // namespace

TEST(FunctionalRhat, PermutedChainsSeparateParameterAndFunctionSpace) {
  // Tight draws around a point with distinct hidden units; the second chain
  // is the same draws with the units reordered.
  NetworkSpec spec;
  spec.input_dim = 1;
  spec.hidden_widths = {4};
  RngStream rng(31, 0);
  const Dataset test = oracle::random_dataset(10, 1, rng);
  const Vector center = oracle::random_theta(parameter_count(spec), rng, 1.0);
  Matrix draws(300, center.size());
  for (Eigen::Index s = 0; s < draws.rows(); ++s) {
    for (Eigen::Index c = 0; c < center.size(); ++c) draws(s, c) = center[c] + 0.01 * rng.normal();
  }
  ChainSet set;
  set.chains.push_back(chain_from(draws, 0));
  Matrix perm = draws;
  const std::vector<std::size_t> p{3, 0, 1, 2};
  for (Eigen::Index s = 0; s < perm.rows(); ++s) {
    perm.row(s) = permute_hidden(spec, draws.row(s).transpose(), 0, p).transpose();
  }
  set.chains.push_back(chain_from(perm, 1));
  const auto preds = predict_chains(spec, set, test.X);
  EXPECT_LE((preds[0].mu - preds[1].mu).cwiseAbs().maxCoeff(), 1e-12);

  const auto id = functional_rhat(set, preds, test.y, FunctionalKind::identity, 1, false);
  const Layout layout(spec);
  for (std::size_t j = 0; j < layout.layer(0).weight_count(); ++j) {
    ASSERT_TRUE(id[j].ok());
    EXPECT_GT(id[j].value, 1.1) << "coordinate " << j;
  }
  const auto lpl = functional_rhat(set, preds, test.y, FunctionalKind::lpl, 1, false);
  ASSERT_TRUE(lpl[0].ok());
  EXPECT_LE(lpl[0].value, 1.01);
  const auto rm = functional_rhat(set, preds, test.y, FunctionalKind::rmse, 1, false);
  EXPECT_LE(rm[0].value, 1.01);
  const auto psc = functional_rhat(set, preds, test.y, FunctionalKind::psc, 1, false, 9);
  EXPECT_EQ(psc.size(), 10u);
  for (const auto& v : psc) EXPECT_LE(v.value, 1.01);
}

TEST(FunctionalRhat, IdenticalStreamsAndOffsetQuality) {
  SampledFixture f;
  ASSERT_TRUE(f.base.ok());
  ChainSet same;
  same.chains = {f.base, f.base};
  same.chains[1].chain_id = 1;
  auto preds = predict_chains(f.spec, same, f.test.X);
  const auto lpl = functional_rhat(same, preds, f.test.y, FunctionalKind::lpl, 1, false);
  ASSERT_TRUE(lpl[0].ok());
  EXPECT_LT(lpl[0].value, 1.0);  // B = 0: the sqrt((S-1)/S) boundary
  // Offset predictions for chain 1: genuinely worse predictive quality.
  preds[1].mu.array() += 2.0;
  const auto off = functional_rhat(same, preds, f.test.y, FunctionalKind::lpl, 1, false);
  EXPECT_GT(off[0].value, 1.1);
}

TEST(FilterChains, DropsDyingChain) {
  SampledFixture f;
  ASSERT_TRUE(f.base.ok());
  const auto lm = lm_fit_eval(f.train, f.test);
  ChainSet set;
  set.chains = {f.base, f.base, f.base};
  for (std::size_t k = 0; k < 3; ++k) set.chains[k].chain_id = k;
  // Chain 1 is stuck with its output mean shifted far from the data.
  const Layout layout(f.spec);
  set.chains[1].samples.col(static_cast<Eigen::Index>(layout.layer(1).bias_offset)).array() += 10.0;
  const auto preds0 = chain_ensemble_rmse(predict_chain(f.spec, f.base, f.test.X), f.test.y);
  const double threshold = 0.5 * (preds0 + chain_ensemble_rmse(predict_chain(f.spec, set.chains[1], f.test.X), f.test.y));
  const auto r = filter_chains(f.spec, set, f.test.X, f.test.y, threshold);
  EXPECT_EQ(r.retained, (std::vector<std::size_t>{0, 2}));
  EXPECT_NEAR(r.retained_proportion, 2.0 / 3.0, 1e-15);
  EXPECT_FALSE(r.none_retained);
  const auto none = filter_chains(f.spec, set, f.test.X, f.test.y, -1.0);
  EXPECT_TRUE(none.none_retained);
  const auto all = filter_chains(f.spec, set, f.test.X, f.test.y, 1e9);
  EXPECT_EQ(all.retained.size(), 3u);
  (void)lm;
}

TEST(Baselines, LinearModelOnLinearData) {
  RngStream rng(15, 0);
  Dataset tr, te;
  tr.X = Matrix::NullaryExpr(400, 2, [&] { return rng.normal(); });
  te.X = Matrix::NullaryExpr(400, 2, [&] { return rng.normal(); });
  tr.y = (tr.X * Vector::Ones(2)).array() + 0.3 * Vector::NullaryExpr(400, [&] { return rng.normal(); }).array();
  te.y = (te.X * Vector::Ones(2)).array() + 0.3 * Vector::NullaryExpr(400, [&] { return rng.normal(); }).array();
  const auto lm = lm_fit_eval(tr, te);
  EXPECT_NEAR(lm.test.rmse, 0.3, 0.03);
  // Train-set LPPD beats a predictive with 10x the scale.
  const Vector pred = lm.fit.predict(tr.X);
  double good = 0.0, wide = 0.0;
  for (Eigen::Index i = 0; i < 400; ++i) {
    good += gaussian_log_density(tr.y[i], pred[i], lm.fit.residual_sd);
    wide += gaussian_log_density(tr.y[i], pred[i], 10.0 * lm.fit.residual_sd);
  }
  EXPECT_TRUE(std::isfinite(good));
  EXPECT_GE(good, wide);
}

TEST(Baselines, DnnAndDeMetrics) {
  RngStream rng(16, 0);
  NetworkSpec spec;
  spec.input_dim = 2;
  spec.hidden_widths = {3};
  const Dataset te = oracle::random_dataset(20, 2, rng);
  const Vector a = oracle::random_theta(parameter_count(spec), rng, 0.5);
  const Vector b = oracle::random_theta(parameter_count(spec), rng, 0.5);
  const auto one = dnn_eval(spec, {a}, te);
  EXPECT_EQ(one.dnn.rmse, one.de.rmse);
  EXPECT_NEAR(one.dnn.lppd, one.de.lppd, 1e-14);
  const auto same = dnn_eval(spec, {a, a}, te);
  EXPECT_NEAR(same.dnn.rmse, same.de.rmse, 1e-14);
  EXPECT_NEAR(same.dnn.lppd, same.de.lppd, 1e-14);

  // Mixture density lies between the member densities at each point.
  const auto mix = predictive_mixture(spec, {a, b}, te.X);
  const Vector lp = pointwise_log_predictive(mix, te.y);
  const Vector la = pointwise_log_predictive(mix.select({0}), te.y);
  const Vector lb = pointwise_log_predictive(mix.select({1}), te.y);
  for (Eigen::Index i = 0; i < lp.size(); ++i) {
    EXPECT_GE(lp[i], std::min(la[i], lb[i]) - 1e-12);
    EXPECT_LE(lp[i], std::max(la[i], lb[i]) + 1e-12);
  }
}
