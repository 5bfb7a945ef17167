#pragma once

// Independent reference implementations used as test oracles. None of them
// share code with the library paths they check.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mcmot/assignment.hpp"
#include "mcmot/kalman.hpp"
#include "mcmot/metrics.hpp"
#include "mcmot/sim.hpp"

namespace oracle {

/// Exhaustive assignment: maximum number of feasible pairs, then minimum cost
/// among those. Returns (pairs, cost).
inline std::pair<std::size_t, double> brute_force_assignment(const mcmot::CostMatrix& c) {
  const std::size_t nr = c.rows(), nc = c.cols();
  const bool transpose = nr > nc;
  const std::size_t small = transpose ? nc : nr;
  const std::size_t large = transpose ? nr : nc;
  auto at = [&](std::size_t i, std::size_t j) { return transpose ? c(j, i) : c(i, j); };

  std::vector<std::size_t> perm(large);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::size_t best_pairs = 0;
  double best_cost = 0.0;
  // Every injective map small -> large appears as the prefix of some permutation.
  do {
    std::size_t pairs = 0;
    double cost = 0.0;
    for (std::size_t i = 0; i < small; ++i) {
      const double v = at(i, perm[i]);
      if (mcmot::is_infeasible(v)) continue;
      ++pairs;
      cost += v;
    }
    if (pairs > best_pairs || (pairs == best_pairs && cost < best_cost)) {
      best_pairs = pairs;
      best_cost = cost;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {best_pairs, best_cost};
}

/// Squared Mahalanobis distance with S assembled from scratch and inverted
/// by a dense LU decomposition.
inline double explicit_inverse_mahalanobis(const mcmot::KalmanState& s, const mcmot::Xyah& z, double wp) {
  Eigen::Matrix<double, 4, 8> h = Eigen::Matrix<double, 4, 8>::Zero();
  for (int i = 0; i < 4; ++i) h(i, i) = 1.0;
  const double height = s.mean(3);
  Eigen::Matrix4d r = Eigen::Matrix4d::Zero();
  r(0, 0) = (wp * height) * (wp * height);
  r(1, 1) = (wp * height) * (wp * height);
  r(2, 2) = 0.1 * 0.1;
  r(3, 3) = (wp * height) * (wp * height);
  const Eigen::Matrix4d S = h * s.covariance * h.transpose() + r;
  const Eigen::Matrix4d S_inv = S.fullPivLu().inverse();
  Eigen::Vector4d d;
  for (int i = 0; i < 4; ++i) d(i) = z[static_cast<std::size_t>(i)] - s.mean(i);
  return d.dot(S_inv * d);
}

/// Random symmetric positive definite 8x8 covariance.
inline mcmot::Matrix8d random_spd(mcmot::sim::SplitMix64& rng, double scale) {
  mcmot::Matrix8d a;
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) a(i, j) = scale * rng.normal();
  }
  mcmot::Matrix8d p = a * a.transpose();
  p.diagonal().array() += scale * scale * 0.1;
  return p;
}

/// Random filter state with a plausible box (positive height and aspect).
inline mcmot::KalmanState random_state(mcmot::sim::SplitMix64& rng) {
  mcmot::KalmanState s;
  s.mean << rng.uniform(0, 1920), rng.uniform(0, 1080), rng.uniform(0.3, 0.8), rng.uniform(40, 400),
      rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-1e-3, 1e-3), rng.uniform(-1, 1);
  s.covariance = random_spd(rng, rng.uniform(0.5, 10.0));
  return s;
}

/// Smallest eigenvalue of a symmetric matrix.
inline double min_eigenvalue(const mcmot::Matrix8d& m) {
  return Eigen::SelfAdjointEigenSolver<mcmot::Matrix8d>(m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

/// Per-frame recount of identity switches: for each frame, enumerate every
/// one-to-one truth/hypothesis pairing, keep those with the most IoU >= 0.5
/// pairs and then the highest IoU sum, and track each truth id's last match.
inline std::size_t brute_force_id_switches(const std::vector<mcmot::LabeledBox>& hyp,
                                           const std::vector<mcmot::LabeledBox>& truth) {
  std::vector<long> frames;
  for (const auto& b : truth) frames.push_back(b.frame);
  for (const auto& b : hyp) frames.push_back(b.frame);
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());

  std::vector<std::pair<int, int>> last;  // (truth id, hyp id)
  std::size_t switches = 0;
  for (long f : frames) {
    std::vector<const mcmot::LabeledBox*> ts, hs;
    for (const auto& b : truth) {
      if (b.frame == f) ts.push_back(&b);
    }
    for (const auto& b : hyp) {
      if (b.frame == f) hs.push_back(&b);
    }
    if (ts.empty() || hs.empty()) continue;
    // Pad hypotheses with "no match" slots so every truth row can go unmatched.
    const std::size_t slots = std::max(ts.size(), hs.size()) + ts.size();
    std::vector<std::size_t> perm(slots);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::size_t best_n = 0;
    double best_sum = -1.0;
    std::vector<std::pair<int, int>> best;
    do {
      std::size_t n = 0;
      double sum = 0.0;
      std::vector<std::pair<int, int>> cur;
      for (std::size_t i = 0; i < ts.size(); ++i) {
        if (perm[i] >= hs.size()) continue;
        const double v = mcmot::iou(ts[i]->box, hs[perm[i]]->box);
        if (v < mcmot::kCorrespondenceIou) continue;
        ++n;
        sum += v;
        cur.emplace_back(ts[i]->id, hs[perm[i]]->id);
      }
      if (n > best_n || (n == best_n && sum > best_sum + 1e-12)) {
        best_n = n;
        best_sum = sum;
        best = cur;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (auto [tid, hid] : best) {
      auto it = std::find_if(last.begin(), last.end(), [&](const auto& p) { return p.first == tid; });
      if (it == last.end()) {
        last.emplace_back(tid, hid);
      } else {
        if (it->second != hid) ++switches;
        it->second = hid;
      }
    }
  }
  return switches;
}

}  // namespace oracle
