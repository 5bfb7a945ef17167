#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "mcmot/association.hpp"
#include "mcmot/error.hpp"
#include "mcmot/pipeline.hpp"
#include "mcmot/sim.hpp"

using namespace mcmot;

namespace {

Tracklet tracklet(int cam, int id, std::vector<Embedding> embeddings) {
  Tracklet t;
  t.camera_id = cam;
  t.track_id = id;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    t.frames.push_back(static_cast<long>(i));
    t.boxes.push_back({0, 0, 80, 160});
    t.confidences.push_back(0.9);
  }
  t.embeddings = std::move(embeddings);
  t.mean_confidence = 0.9;
  return t;
}

Cluster cluster(int id, std::vector<Eigen::VectorXd> members) {
  Cluster c;
  c.global_id = id;
  for (std::size_t i = 0; i < members.size(); ++i) c.members.emplace_back(id, static_cast<int>(i));
  c.member_embeddings = std::move(members);
  c.recompute_centroid();
  return c;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

std::multiset<TrackletKey> all_members(const std::vector<Cluster>& cs) {
  std::multiset<TrackletKey> s;
  for (const Cluster& c : cs) s.insert(c.members.begin(), c.members.end());
  return s;
}

/// Tracklets from running the tracker over a zero-noise simulated scenario.
std::map<int, std::vector<Tracklet>> simulated_tracklets(const sim::ScenarioConfig& sc) {
  const auto scenario = sim::generate(sc);
  std::map<int, std::vector<Tracklet>> out;
  for (const CameraRun& r : track_cameras(scenario_streams(scenario), io::default_preset())) {
    out[r.camera_id] = r.tracklets;
  }
  return out;
}

}  // namespace

TEST(MeanEmbedding, SingleEmbedding) {
  const Eigen::VectorXd m = mean_embedding(tracklet(0, 1, {{0.25f, -1.5f}}));
  EXPECT_EQ(m, vec({0.25, -1.5}));
}

TEST(MeanEmbedding, AveragesComponents) {
  EXPECT_EQ(mean_embedding(tracklet(0, 1, {{1, 0}, {0, 1}})), vec({0.5, 0.5}));
}

TEST(MeanEmbedding, CopiesAverageToThemselves) {
  const Embedding e{0.1f, 0.7f, -0.3f};
  const Eigen::VectorXd m = mean_embedding(tracklet(0, 1, std::vector<Embedding>(9, e)));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(m(i), e[static_cast<std::size_t>(i)], 1e-7);
}

TEST(MeanEmbedding, NoEmbeddingsIsDomainError) {
  EXPECT_THROW(mean_embedding(tracklet(0, 1, {})), Error);
}

TEST(EuclideanAssociate, OneTracklet) {
  const auto cs = euclidean_associate({tracklet(0, 1, {{1, 0}})}, 0.5);
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].global_id, 1);
}

TEST(EuclideanAssociate, IdenticalMeansMerge) {
  EXPECT_EQ(euclidean_associate({tracklet(0, 1, {{1, 0}}), tracklet(1, 1, {{1, 0}})}, 1e-6).size(), 1u);
}

TEST(EuclideanAssociate, HandTracedGreedyPass) {
  // a=(0,0), b=(0.1,0), c=(x,y) with |ac| = 0.1 and |bc| = 0.15.
  const double x = (0.01 - 0.0225 + 0.01) / 0.2;
  const double y = std::sqrt(0.01 - x * x);
  const std::vector<Tracklet> ts{tracklet(0, 1, {{0.0f, 0.0f}}), tracklet(0, 2, {{0.1f, 0.0f}}),
                                 tracklet(0, 3, {{static_cast<float>(x), static_cast<float>(y)}})};
  const auto m = [&](int i) { return mean_embedding(ts[static_cast<std::size_t>(i)]); };
  ASSERT_NEAR((m(0) - m(1)).norm(), 0.1, 1e-6);
  ASSERT_NEAR((m(0) - m(2)).norm(), 0.1, 1e-6);
  ASSERT_NEAR((m(1) - m(2)).norm(), 0.15, 1e-6);
  // tau 0.5: b joins a (0.1), c is at most 0.15 from their centroid and joins.
  // tau 0.05: every distance exceeds tau, so each opens its own cluster.
  EXPECT_EQ(euclidean_associate(ts, 0.5).size(), 1u);
  EXPECT_EQ(euclidean_associate(ts, 0.05).size(), 3u);
}

TEST(VotingMerge, IdenticalSingletonsMerge) {
  const auto out = voting_merge({cluster(1, {vec({1, 0})}), cluster(2, {vec({1, 0})})}, 0.1);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].global_id, 2);  // merged into B, which keeps its id
  EXPECT_EQ(out[0].members.size(), 2u);
}

TEST(VotingMerge, MinorityDoesNotMerge) {
  // A has 3 members, only one within 0.1 of B's centroid (0,0).
  const Cluster a = cluster(1, {vec({0.05, 0}), vec({5, 0}), vec({5, 1})});
  const Cluster b = cluster(2, {vec({0, 0})});
  const auto out = voting_merge({a, b}, 0.1);
  EXPECT_EQ(out.size(), 2u);
}

TEST(VotingMerge, MajorityMerges) {
  const Cluster a = cluster(1, {vec({0.05, 0}), vec({0, 0.05}), vec({5, 1})});
  const Cluster b = cluster(2, {vec({0, 0})});
  const auto out = voting_merge({a, b}, 0.1);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].members.size(), 4u);
}

TEST(VotingMerge, ExactlyHalfIsNotAMajority) {
  const Cluster a = cluster(1, {vec({0.05, 0}), vec({5, 0})});
  const Cluster b = cluster(2, {vec({0, 0}), vec({9, 9}), vec({-9, -9})});
  // A has 1 of 2 members near B's centroid (the origin); none of B's members
  // are near A's centroid (2.525, 0).
  EXPECT_EQ(voting_merge({a, b}, 0.1).size(), 2u);
}

TEST(AssociateMulticamera, SingleTracklet) {
  const auto cs = associate_multicamera({{0, {tracklet(0, 1, {{1, 0}})}}}, {});
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].global_id, 1);
  EXPECT_EQ(count_unique(cs), 1u);
}

TEST(AssociateMulticamera, SameIdentityInThreeCameras) {
  sim::ScenarioConfig sc;
  sc.seed = 3;
  sc.identities = 1;
  sc.frames = 100;
  const auto per_camera = simulated_tracklets(sc);
  for (const auto& [cam, ts] : per_camera) ASSERT_EQ(ts.size(), 1u) << "camera " << cam;
  const auto cs = associate_multicamera(per_camera, {});
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].members.size(), 3u);
}

TEST(AssociateMulticamera, TwoSeparatedIdentities) {
  sim::ScenarioConfig sc;
  sc.seed = 4;
  sc.identities = 2;
  sc.frames = 100;
  for (AssociationMethod m :
       {AssociationMethod::euclidean, AssociationMethod::voting, AssociationMethod::euclidean_voting}) {
    const auto cs = associate_multicamera(simulated_tracklets(sc), {m, 0.5, true});
    EXPECT_EQ(count_unique(cs), 2u) << to_string(m);
  }
}

TEST(CountUnique, CountsClusters) {
  EXPECT_EQ(count_unique({}), 0u);
  std::vector<Cluster> five;
  for (int i = 1; i <= 5; ++i) five.push_back(cluster(i, {vec({double(i)})}));
  EXPECT_EQ(count_unique(five), 5u);
}

TEST(AssociationConfig, NonPositiveThresholdRejected) {
  EXPECT_THROW(associate_multicamera({}, {AssociationMethod::euclidean, 0.0, true}), Error);
}

TEST(AssociationProperty, PartitionAndDeterminism) {
  sim::SplitMix64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    std::map<int, std::vector<Tracklet>> per_camera;
    std::multiset<TrackletKey> expected;
    const int cams = 1 + static_cast<int>(rng.next() % 4);
    for (int c = 0; c < cams; ++c) {
      const int n = static_cast<int>(rng.next() % 6);
      for (int k = 1; k <= n; ++k) {
        std::vector<Embedding> es;
        for (int j = 0; j < 3; ++j) es.push_back({float(rng.normal()), float(rng.normal()), float(rng.normal())});
        per_camera[c].push_back(tracklet(c, k, es));
        expected.emplace(c, k);
      }
    }
    for (AssociationMethod m :
         {AssociationMethod::euclidean, AssociationMethod::voting, AssociationMethod::euclidean_voting}) {
      for (bool intra : {true, false}) {
        const AssociationConfig cfg{m, rng.uniform(0.1, 2.0), intra};
        const auto a = associate_multicamera(per_camera, cfg);
        EXPECT_EQ(all_members(a), expected);
        for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].global_id, static_cast<int>(i) + 1);
        const auto b = associate_multicamera(per_camera, cfg);
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].members, b[i].members);
      }
    }
  }
}

TEST(AssociationProperty, EuclideanOnWellSeparatedDataIsIdempotent) {
  // Re-clustering the cluster centroids of separated data changes nothing.
  sim::ScenarioConfig sc;
  sc.seed = 9;
  sc.identities = 6;
  sc.embedding_dim = 32;
  sc.identity_min_separation = 1.2;
  const auto ids = sim::generate_identities(sc);
  std::vector<Tracklet> ts;
  int k = 1;
  for (const auto& id : ids) {
    for (int rep = 0; rep < 3; ++rep) ts.push_back(tracklet(0, k++, {id.embedding}));
  }
  const auto first = euclidean_associate(ts, 0.5);
  const auto second = euclidean_cluster(first, 0.5);
  ASSERT_EQ(first.size(), second.size());
  for (std::size_t i = 0; i < first.size(); ++i) EXPECT_EQ(first[i].members, second[i].members);
}

TEST(AssociationProperty, CountNonIncreasingInThresholdOnSimulatedData) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    sim::ScenarioConfig sc;
    sc.seed = seed;
    sc.frames = 150;
    sc.embedding_noise_sigma = 0.2;
    sc.miss_prob = 0.1;
    const auto per_camera = simulated_tracklets(sc);
    std::size_t previous = std::numeric_limits<std::size_t>::max();
    for (double tau = 0.05; tau <= 2.0; tau += 0.05) {
      const std::size_t n = count_unique(associate_multicamera(per_camera, {AssociationMethod::euclidean, tau, true}));
      EXPECT_LE(n, previous) << "seed " << seed << " tau " << tau;
      previous = n;
    }
  }
}
