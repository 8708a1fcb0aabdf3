#include "ruleprompt/numeric.hpp"

#include <algorithm>
#include <cmath>

namespace ruleprompt {

std::vector<double> softmax(std::span<const double> values, double scale) {
  std::vector<double> out(values.size());
  if (values.empty()) return out;
  const double top = *std::max_element(values.begin(), values.end()) * scale;
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = std::exp(values[i] * scale - top);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  const auto n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

void normalize_in_place(std::vector<double>& v) {
  const double n = l2_norm(v);
  if (n == 0.0) return;
  for (auto& x : v) x /= n;
}

}  // namespace ruleprompt
