#pragma once

// Greedy-matching precision/recall/F1 computed with explicit loops and a
// cosine that does not assume unit vectors.

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

struct PRF {
  double p = 0.0, r = 0.0, f1 = 0.0;
};

inline double naive_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

inline PRF naive_prf(const std::vector<std::vector<double>>& cand,
                     const std::vector<std::vector<double>>& ref) {
  PRF out;
  for (const auto& c : cand) {
    double best = -2.0;
    for (const auto& r : ref) best = std::max(best, naive_cosine(c, r));
    out.p += best;
  }
  out.p /= static_cast<double>(cand.size());
  for (const auto& r : ref) {
    double best = -2.0;
    for (const auto& c : cand) best = std::max(best, naive_cosine(c, r));
    out.r += best;
  }
  out.r /= static_cast<double>(ref.size());
  out.f1 = out.p + out.r == 0.0 ? 0.0 : 2.0 * out.p * out.r / (out.p + out.r);
  return out;
}

}  // namespace oracle
