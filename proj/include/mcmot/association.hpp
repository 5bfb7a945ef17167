#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mcmot/error.hpp"
#include "mcmot/tracker.hpp"

namespace mcmot {

/// (camera_id, track_id)
using TrackletKey = std::pair<int, int>;

/// Tracklets judged to be the same person. `centroid` is the arithmetic mean
/// of `member_embeddings`, one pooled mean embedding per member tracklet.
struct Cluster {
  int global_id = 0;
  std::vector<TrackletKey> members;
  std::vector<Eigen::VectorXd> member_embeddings;
  Eigen::VectorXd centroid;

  void recompute_centroid() {
    centroid = Eigen::VectorXd::Zero(member_embeddings.front().size());
    for (const auto& e : member_embeddings) centroid += e;
    centroid /= static_cast<double>(member_embeddings.size());
  }
};

enum class AssociationMethod {
  euclidean,         // greedy nearest-centroid clustering
  voting,            // majority-vote merging starting from singletons
  euclidean_voting,  // greedy clustering refined by majority-vote merging
};

inline std::string_view to_string(AssociationMethod m) {
  switch (m) {
    case AssociationMethod::euclidean: return "euclidean";
    case AssociationMethod::voting: return "voting";
    case AssociationMethod::euclidean_voting: return "euclidean+voting";
  }
  return "unknown";
}

struct AssociationConfig {
  AssociationMethod method = AssociationMethod::euclidean;
  double threshold = 0.5;
  bool intra_first = true;

  void validate() const {
    if (!(threshold > 0.0)) fail(ErrorCategory::config, "association threshold must be positive");
  }
};

inline Eigen::VectorXd mean_embedding(const Tracklet& t) {
  if (t.embeddings.empty()) {
    fail(ErrorCategory::domain, "tracklet " + std::to_string(t.camera_id) + "/" + std::to_string(t.track_id) +
                                    " carries no embeddings");
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(t.embeddings.front().size()));
  for (const Embedding& e : t.embeddings) {
    if (static_cast<Eigen::Index>(e.size()) != sum.size()) {
      fail(ErrorCategory::domain, "tracklet embeddings have inconsistent dimension");
    }
    sum += Eigen::Map<const Eigen::VectorXf>(e.data(), sum.size()).cast<double>();
  }
  return sum / static_cast<double>(t.embeddings.size());
}

namespace detail {

inline Cluster singleton(const Tracklet& t) {
  Cluster c;
  c.members.emplace_back(t.camera_id, t.track_id);
  c.member_embeddings.push_back(mean_embedding(t));
  c.centroid = c.member_embeddings.front();
  return c;
}

inline void absorb(Cluster& into, Cluster&& from) {
  into.members.insert(into.members.end(), from.members.begin(), from.members.end());
  for (auto& e : from.member_embeddings) into.member_embeddings.push_back(std::move(e));
  into.recompute_centroid();
}

inline std::vector<Cluster> renumber(std::vector<Cluster> clusters) {
  int id = 1;
  for (Cluster& c : clusters) c.global_id = id++;
  return clusters;
}

inline std::vector<Cluster> singletons(std::vector<const Tracklet*> ts) {
  std::sort(ts.begin(), ts.end(), [](const Tracklet* a, const Tracklet* b) {
    return std::pair(a->camera_id, a->track_id) < std::pair(b->camera_id, b->track_id);
  });
  std::vector<Cluster> out;
  out.reserve(ts.size());
  for (const Tracklet* t : ts) out.push_back(singleton(*t));
  return renumber(std::move(out));
}

}  // namespace detail

/// Greedy clustering of groups in input order: each group joins the cluster
/// with the nearest centroid (L2 from the group's centroid) if it is within
/// `threshold`, otherwise opens a new cluster. A group moves as a unit.
inline std::vector<Cluster> euclidean_cluster(std::vector<Cluster> groups, double threshold) {
  std::vector<Cluster> clusters;
  for (Cluster& g : groups) {
    std::size_t best = clusters.size();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      const double d = (clusters[i].centroid - g.centroid).norm();
      if (d < best_dist) {
        best_dist = d;
        best = i;
      }
    }
    if (best < clusters.size() && best_dist <= threshold) {
      detail::absorb(clusters[best], std::move(g));
    } else {
      clusters.push_back(std::move(g));
    }
  }
  return detail::renumber(std::move(clusters));
}

/// Greedy L2 clustering of tracklet mean embeddings, visiting tracklets in
/// (camera_id, track_id) order.
inline std::vector<Cluster> euclidean_associate(const std::vector<Tracklet>& tracklets, double threshold) {
  std::vector<const Tracklet*> ptrs;
  for (const Tracklet& t : tracklets) ptrs.push_back(&t);
  return euclidean_cluster(detail::singletons(std::move(ptrs)), threshold);
}

/// Merges cluster A into B while strictly more than half of A's member
/// embeddings lie within `threshold` of B's centroid. Ordered pairs are
/// scanned by ascending (A.global_id, B.global_id) and the scan restarts after
/// each merge; B keeps its id. Stops at a fixpoint.
inline std::vector<Cluster> voting_merge(std::vector<Cluster> clusters, double threshold) {
  std::sort(clusters.begin(), clusters.end(),
            [](const Cluster& a, const Cluster& b) { return a.global_id < b.global_id; });
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t a = 0; a < clusters.size() && !merged; ++a) {
      for (std::size_t b = 0; b < clusters.size() && !merged; ++b) {
        if (a == b) continue;
        std::size_t inside = 0;
        for (const auto& e : clusters[a].member_embeddings) {
          if ((e - clusters[b].centroid).norm() <= threshold) ++inside;
        }
        if (2 * inside > clusters[a].member_embeddings.size()) {
          detail::absorb(clusters[b], std::move(clusters[a]));
          clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(a));
          merged = true;
        }
      }
    }
  }
  return clusters;
}

/// Runs one association pass with the configured method over `groups`.
inline std::vector<Cluster> associate_groups(std::vector<Cluster> groups, const AssociationConfig& cfg) {
  groups = detail::renumber(std::move(groups));
  switch (cfg.method) {
    case AssociationMethod::euclidean: return euclidean_cluster(std::move(groups), cfg.threshold);
    case AssociationMethod::voting: return detail::renumber(voting_merge(std::move(groups), cfg.threshold));
    case AssociationMethod::euclidean_voting:
      return detail::renumber(voting_merge(euclidean_cluster(std::move(groups), cfg.threshold), cfg.threshold));
  }
  return groups;
}

/// Two-stage association: within each camera first (when `intra_first`), then
/// across cameras with each per-camera cluster moving as one super-tracklet.
/// Global ids are 1..K in discovery order.
inline std::vector<Cluster> associate_multicamera(const std::map<int, std::vector<Tracklet>>& per_camera,
                                                  const AssociationConfig& cfg) {
  cfg.validate();
  if (!cfg.intra_first) {
    std::vector<const Tracklet*> all;
    for (const auto& [cam, ts] : per_camera) {
      for (const Tracklet& t : ts) all.push_back(&t);
    }
    return associate_groups(detail::singletons(std::move(all)), cfg);
  }

  std::vector<Cluster> pooled;
  for (const auto& [cam, ts] : per_camera) {
    std::vector<const Tracklet*> local;
    for (const Tracklet& t : ts) local.push_back(&t);
    for (Cluster& c : associate_groups(detail::singletons(std::move(local)), cfg)) pooled.push_back(std::move(c));
  }
  return associate_groups(std::move(pooled), cfg);
}

inline std::size_t count_unique(const std::vector<Cluster>& clusters) { return clusters.size(); }

}  // namespace mcmot
