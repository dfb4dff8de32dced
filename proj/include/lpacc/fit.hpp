#pragma once

#include "lpacc/core.hpp"
#include "lpacc/trace.hpp"

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace lpacc {

struct LineFit {
  double slope = kNaN;
  double intercept = kNaN;
  /// Root-mean-square residual of the fit in log space.
  double residual = kNaN;
  std::size_t points = 0;
};

/// Least-squares line through (log x_i, log y_i). Points with a
/// nonpositive coordinate are skipped.
inline LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), "fit_loglog: x and y differ in length");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  require(lx.size() >= 2, "fit_loglog: need at least two positive points");
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  require(sxx > 0.0, "fit_loglog: x values are all equal");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (f.intercept + f.slope * lx[i]);
    ss += r * r;
  }
  f.residual = std::sqrt(ss / n);
  f.points = lx.size();
  return f;
}

/// log(gap) against log(t+1) over the records that carry a positive gap.
inline LineFit fit_gap_decay(const Trace& tr, std::size_t min_records = 8) {
  std::vector<double> t, g;
  for (const auto& r : tr.records) {
    if (r.gap && *r.gap > 0.0) {
      t.push_back(r.t + 1.0);
      g.push_back(*r.gap);
    }
  }
  require(t.size() >= min_records,
          "fit_gap_decay: trace has " + std::to_string(t.size()) + " usable records, need " + std::to_string(min_records));
  return fit_loglog(t, g);
}

/// log(iterations) against log(n) across runs, read from trace headers
/// ("n") and summaries ("iterations").
inline LineFit fit_scaling(const std::vector<Trace>& traces) {
  std::vector<double> n, it;
  for (const auto& tr : traces) {
    require(tr.header.contains("n") && tr.summary.contains("iterations"),
            "fit_scaling: traces need header.n and summary.iterations");
    n.push_back(tr.header.at("n").get<double>());
    it.push_back(tr.summary.at("iterations").get<double>());
  }
  return fit_loglog(n, it);
}

}  // namespace lpacc
