#pragma once
// Gauss-Legendre rules and composite panel rules, used for scenario node
// generation and the numeric oracle integrals.

#include <cmath>
#include <stdexcept>
#include <vector>

namespace eqi {

// nodes and weights on [-1, 1]; Newton iteration on the Legendre recurrence
inline void gauss_legendre(int m, std::vector<double>& xs, std::vector<double>& ws) {
  if (m < 1) throw std::invalid_argument("rule order must be positive");
  xs.resize(m);
  ws.resize(m);
  for (int i = 0; i < m; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (m + 0.5));
    for (int it = 0; it < 60; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= m; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = m * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= m; ++k) {
      double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = m * (x * p1 - p0) / (x * x - 1.0);
    xs[i] = x;
    ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

// composite rule on [a, b]: `panels` equal panels with an m-point rule each
inline void panel_rule(int m, int panels, double a, double b, std::vector<double>& xs,
                       std::vector<double>& ws) {
  if (panels < 1) throw std::invalid_argument("panel count must be positive");
  std::vector<double> gx, gw;
  gauss_legendre(m, gx, gw);
  xs.clear();
  ws.clear();
  xs.reserve((size_t)m * panels);
  ws.reserve((size_t)m * panels);
  double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    double lo = a + p * h;
    for (int i = 0; i < m; ++i) {
      xs.push_back(lo + 0.5 * h * (gx[i] + 1.0));
      ws.push_back(0.5 * h * gw[i]);
    }
  }
}

}  // namespace eqi
