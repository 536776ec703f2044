#ifndef BNN_DIAGNOSTICS_LAYERS_HPP
#define BNN_DIAGNOSTICS_LAYERS_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bnn/network/spec.hpp"
#include "bnn/numerics/pca.hpp"
#include "bnn/sampling/chain.hpp"

namespace bnn {

/// Mean, sd (divisor n-1) and selected quantiles of a sample.
struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double max = 0.0;
};

inline Summary summarize(std::vector<double> v) {
  Summary s;
  s.count = v.size();
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  auto q = [&](double p) {
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(h);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  s.min = v.front();
  s.q25 = q(0.25);
  s.median = q(0.5);
  s.q75 = q(0.75);
  s.max = v.back();
  return s;
}

/// A set of coordinates: one layer's weights or biases.
struct ParamGroup {
  std::size_t layer = 0;  // 0-based layer block index
  bool bias = false;
  std::vector<std::size_t> coords;
};

inline std::vector<ParamGroup> param_groups(const Layout& layout) {
  std::vector<ParamGroup> out;
  for (std::size_t l = 0; l < layout.layer_count(); ++l) {
    const auto& b = layout.layer(l);
    ParamGroup w{l, false, {}};
    for (std::size_t i = 0; i < b.weight_count(); ++i) w.coords.push_back(b.weight_offset + i);
    out.push_back(std::move(w));
    if (b.has_bias) {
      ParamGroup g{l, true, {}};
      for (std::size_t i = 0; i < b.bias_count(); ++i) g.coords.push_back(b.bias_offset + i);
      out.push_back(std::move(g));
    }
  }
  return out;
}

inline std::vector<const Matrix*> ok_sample_matrices(const ChainSet& set) {
  std::vector<const Matrix*> out;
  for (const auto& c : set.chains) if (c.ok() && c.samples.rows() > 0) out.push_back(&c.samples);
  return out;
}

struct LayerVariance {
  std::size_t layer = 0;
  bool bias = false;
  Summary within;
  Summary between;          // empty when fewer than 2 chains
  std::size_t degenerate = 0;  // coordinates with zero within-chain variance
};

/// Per coordinate, W (mean within-chain variance) and B (between-chain
/// variance as in R-hat), summarized per layer, weights and biases apart.
inline std::vector<LayerVariance> layer_variance(const ChainSet& set, const Layout& layout) {
  const auto chains = ok_sample_matrices(set);
  if (chains.empty()) throw Error(ErrorKind::dimension, "layer_variance: no successful chains");
  std::size_t S = static_cast<std::size_t>(chains.front()->rows());
  for (auto* m : chains) S = std::min(S, static_cast<std::size_t>(m->rows()));
  if (S < 2) throw Error(ErrorKind::dimension, "layer_variance: chains need at least 2 samples");
  const double Sd = static_cast<double>(S);
  const std::size_t K = chains.size();

  std::vector<LayerVariance> out;
  for (const auto& g : param_groups(layout)) {
    std::vector<double> within, between;
    LayerVariance lv{g.layer, g.bias, {}, {}, 0};
    for (std::size_t c : g.coords) {
      double w = 0.0, mean_sum = 0.0;
      std::vector<double> means;
      for (auto* m : chains) {
        const auto col = m->col(static_cast<Eigen::Index>(c)).head(static_cast<Eigen::Index>(S));
        const double mu = col.mean();
        w += (col.array() - mu).square().sum() / (Sd - 1.0);
        means.push_back(mu);
        mean_sum += mu;
      }
      w /= static_cast<double>(K);
      if (!(w > 0.0)) ++lv.degenerate;
      within.push_back(w);
      if (K >= 2) {
        const double grand = mean_sum / static_cast<double>(K);
        double b = 0.0;
        for (double mu : means) b += (mu - grand) * (mu - grand);
        between.push_back(Sd / static_cast<double>(K - 1) * b);
      }
    }
    lv.within = summarize(within);
    lv.between = summarize(between);
    out.push_back(std::move(lv));
  }
  return out;
}

/// OLS slope of x against its index rescaled to [0, 1].
inline double index_slope(const Eigen::Ref<const Vector>& x) {
  const Eigen::Index S = x.size();
  if (S < 2) return 0.0;
  const double tbar = 0.5, xbar = x.mean();
  double num = 0.0, den = 0.0;
  for (Eigen::Index s = 0; s < S; ++s) {
    const double t = static_cast<double>(s) / static_cast<double>(S - 1) - tbar;
    num += t * (x[s] - xbar);
    den += t * t;
  }
  return num / den;
}

struct LayerSlopes {
  std::size_t layer = 0;
  Summary abs_slope;
  std::vector<double> values;  // |slope| per (chain, coordinate)
};

inline std::vector<LayerSlopes> chain_slopes(const ChainSet& set, const Layout& layout) {
  const auto chains = ok_sample_matrices(set);
  for (auto* m : chains) {
    if (m->rows() < 10) throw Error(ErrorKind::dimension, "chain_slopes: chains need at least 10 samples");
  }
  std::vector<LayerSlopes> out;
  for (std::size_t l = 0; l < layout.layer_count(); ++l) {
    const auto& b = layout.layer(l);
    LayerSlopes ls;
    ls.layer = l;
    for (auto* m : chains) {
      for (std::size_t c = b.weight_offset; c < b.end(); ++c) {
        ls.values.push_back(std::abs(index_slope(m->col(static_cast<Eigen::Index>(c)))));
      }
    }
    ls.abs_slope = summarize(ls.values);
    out.push_back(std::move(ls));
  }
  return out;
}

struct PcaPath {
  std::vector<double> explained;      // top-k explained variance ratios
  std::vector<double> layer_loading;  // per layer: mean over coords of sum_j |component_j|
};

inline PcaPath pca_path(const Matrix& samples, const Layout& layout, std::size_t k = 3) {
  if (static_cast<std::size_t>(samples.rows()) < k + 1) {
    throw Error(ErrorKind::dimension, "pca_path: need at least k + 1 samples");
  }
  const auto pca = pca_top_k(samples, k);
  PcaPath out;
  for (Eigen::Index j = 0; j < pca.explained_variance_ratio.size(); ++j) {
    out.explained.push_back(pca.explained_variance_ratio[j]);
  }
  const Vector abs_sum = pca.components.cwiseAbs().colwise().sum().transpose();
  for (std::size_t l = 0; l < layout.layer_count(); ++l) {
    const auto& b = layout.layer(l);
    out.layer_loading.push_back(
        abs_sum.segment(static_cast<Eigen::Index>(b.weight_offset), static_cast<Eigen::Index>(b.end() - b.weight_offset))
            .mean());
  }
  return out;
}

}  // namespace bnn

#endif  // BNN_DIAGNOSTICS_LAYERS_HPP
