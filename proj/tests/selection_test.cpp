#include <sdsim/selection.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "test_support.hpp"

using namespace sdsim;

namespace {

MateCandidate cand(JobId id, int weight, double p, Seconds end = 10000) {
  MateCandidate c;
  c.job = id;
  static NodeId next = 0;
  for (int i = 0; i < weight; ++i) c.nodes.push_back(next++);
  c.penalty = p;
  c.predicted_end = end;
  c.mate_cores.assign(c.nodes.size(), 24);
  c.newcomer_cores.assign(c.nodes.size(), 24);
  return c;
}

// Plain enumeration of every pair and single, written independently of the
// library's two search routines.
std::optional<std::pair<double, std::vector<JobId>>> enumerate_pairs(int required, Seconds end,
                                                                     const std::vector<MateCandidate>& c, double cap) {
  std::optional<std::pair<double, std::vector<JobId>>> best;
  auto ok = [&](const MateCandidate& m) { return m.penalty < cap && m.predicted_end >= end; };
  auto offer = [&](double pi, std::vector<JobId> ids) {
    std::sort(ids.begin(), ids.end());
    if (!best || pi < best->first || (pi == best->first && ids < best->second)) best = {{pi, ids}};
  };
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!ok(c[i])) continue;
    if (c[i].weight() == required) offer(c[i].penalty, {c[i].job});
    for (std::size_t j = i + 1; j < c.size(); ++j) {
      if (!ok(c[j]) || c[i].weight() + c[j].weight() != required) continue;
      const auto& lo = c[i].job < c[j].job ? c[i] : c[j];
      const auto& hi = c[i].job < c[j].job ? c[j] : c[i];
      offer(lo.penalty + hi.penalty, {c[i].job, c[j].job});
    }
  }
  return best;
}

}  // namespace

TEST(Penalty, Arithmetic) {
  EXPECT_DOUBLE_EQ(slowdown_penalty(0, 0, 500), 1.0);
  EXPECT_DOUBLE_EQ(slowdown_penalty(100, 200, 1000), 1.3);
  EXPECT_DOUBLE_EQ(slowdown_penalty(5000, 500, 500), 12.0);
  EXPECT_FALSE(slowdown_penalty(5000, 500, 500) < 10.0);
}

TEST(Penalty, FromExecutionState) {
  // Submitted at 0, started at 100, 1000 s requested on 2 nodes. Shrinking
  // to half for 400 s costs 200 s.
  auto job = fixtures::make_job(1, 0, 2, 1000, 1000);
  auto exec = start_execution(job, 100, 48, {0, 1}, {48, 48});
  const std::vector<int> half{24, 24};
  const auto p = penalty(job, exec, half, 400, 100);
  EXPECT_EQ(p.increase, 200);
  EXPECT_DOUBLE_EQ(p.penalty, 1.3);
  const auto none = penalty(job, exec, half, 0, 100);
  EXPECT_EQ(none.increase, 0);
  EXPECT_DOUBLE_EQ(none.penalty, 1.1);
}

TEST(Penalty, WindowBeyondRemainingWork) {
  auto job = fixtures::make_job(1, 0, 1, 1000, 1000);
  auto exec = start_execution(job, 0, 48, {0}, {48});
  const std::vector<int> half{24};
  // 600 s elapsed at full speed, 400 s of work left: at half speed it needs
  // 800 s, so a longer window makes no difference.
  EXPECT_EQ(penalty(job, exec, half, 5000, 600).increase, 400);
  EXPECT_EQ(penalty(job, exec, half, 800, 600).increase, 400);
  EXPECT_EQ(penalty(job, exec, half, 100, 600).increase, 50);
}

TEST(Cutoff, Fixed) {
  const auto p = CutoffPolicy::fixed(10);
  std::vector<RunningEstimate> running{{100, 10}};
  EXPECT_DOUBLE_EQ(update_cutoff(p, running), 10.0);
  EXPECT_DOUBLE_EQ(update_cutoff(p, {}), 10.0);
  EXPECT_THROW(CutoffPolicy::fixed(1.0), std::invalid_argument);
}

TEST(Cutoff, DynamicIsMeanEstimatedSlowdown) {
  std::vector<RunningEstimate> running{{0, 100}, {200, 100}};
  EXPECT_DOUBLE_EQ(update_cutoff(CutoffPolicy::dynamic(), running), 2.0);
  EXPECT_TRUE(std::isinf(update_cutoff(CutoffPolicy::dynamic(), {})));
}

TEST(SelectMates, PrefersOneCheapWideMate) {
  std::vector<MateCandidate> c{cand(1, 1, 1.2), cand(2, 2, 1.5), cand(3, 1, 1.3)};
  SelectionParams params;
  auto s = select_mates(2, 1000, c, {}, params);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->mate_ids(), (std::vector<JobId>{2}));
  EXPECT_DOUBLE_EQ(s->performance_impact, 1.5);
  auto b = brute_force_select(2, 1000, c, {}, params);
  ASSERT_TRUE(b);
  EXPECT_EQ(b->mate_ids(), s->mate_ids());
}

TEST(SelectMates, InfeasibleWeight) {
  std::vector<MateCandidate> c{cand(1, 1, 1.2), cand(2, 1, 1.5), cand(3, 1, 1.3)};
  SelectionParams params;
  EXPECT_FALSE(select_mates(3, 1000, c, {}, params));
  EXPECT_FALSE(brute_force_select(3, 1000, c, {}, params));
}

TEST(SelectMates, SingleCandidate) {
  std::vector<MateCandidate> c{cand(5, 1, 1.7)};
  SelectionParams params;
  params.max_penalty = 2.0;
  auto s = select_mates(1, 1000, c, {}, params);
  ASSERT_TRUE(s);
  EXPECT_DOUBLE_EQ(s->performance_impact, 1.7);
  params.max_penalty = 1.7;
  EXPECT_FALSE(select_mates(1, 1000, c, {}, params));
}

TEST(SelectMates, ContainmentFilter) {
  std::vector<MateCandidate> c{cand(1, 1, 1.1, 900), cand(2, 1, 1.9, 1000)};
  SelectionParams params;
  auto s = select_mates(1, 1000, c, {}, params);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->mate_ids(), (std::vector<JobId>{2}));
}

TEST(SelectMates, TiesGoToSmallestIds) {
  std::vector<MateCandidate> c{cand(9, 1, 1.5), cand(4, 1, 1.5), cand(7, 1, 1.5)};
  SelectionParams params;
  auto s = select_mates(2, 0, c, {}, params);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->mate_ids(), (std::vector<JobId>{4, 7}));
}

TEST(SelectMates, FreeNodesTopUpWhenEnabled) {
  std::vector<MateCandidate> c{cand(1, 2, 1.4)};
  const std::vector<NodeId> free{900, 800};
  SelectionParams params;
  EXPECT_FALSE(select_mates(3, 0, c, free, params));
  params.use_free_nodes = true;
  auto s = select_mates(3, 0, c, free, params);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->free_nodes_used, (std::vector<NodeId>{800}));
  EXPECT_DOUBLE_EQ(s->performance_impact, 1.4);
  EXPECT_EQ(s->nodes().size(), 3u);
}

TEST(SelectMates, MaxMatesLimitsCombinationSize) {
  std::vector<MateCandidate> c{cand(1, 1, 1.1), cand(2, 1, 1.1), cand(3, 1, 1.1)};
  SelectionParams params;
  EXPECT_FALSE(select_mates(3, 0, c, {}, params));
  params.max_mates = 3;
  auto s = select_mates(3, 0, c, {}, params);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->mates.size(), 3u);
}

TEST(SelectMates, CandidateCapKeepsLowestPenalties) {
  std::vector<MateCandidate> c{cand(1, 1, 1.1), cand(2, 2, 1.2), cand(3, 2, 1.9)};
  SelectionParams params;
  params.candidate_cap = 1;
  // Only candidate 1 survives truncation, and it is too narrow.
  EXPECT_FALSE(select_mates(2, 0, c, {}, params));
  params.candidate_cap = 2;
  auto s = select_mates(2, 0, c, {}, params);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->mate_ids(), (std::vector<JobId>{2}));
}

TEST(SelectMates, AgreesWithBruteForceAndIndependentEnumeration) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 400; ++i) {
    auto in = fixtures::random_instance(rng);
    auto s = select_mates(in.required, in.new_job_end, in.candidates, in.free_nodes, in.params);
    auto b = brute_force_select(in.required, in.new_job_end, in.candidates, in.free_nodes, in.params);
    ASSERT_EQ(s.has_value(), b.has_value()) << "instance " << i;
    if (s) {
      EXPECT_EQ(s->performance_impact, b->performance_impact);
      EXPECT_EQ(s->mate_ids(), b->mate_ids());
      EXPECT_EQ(s->free_nodes_used, b->free_nodes_used);
    }
    if (!in.params.use_free_nodes) {
      auto e = enumerate_pairs(in.required, in.new_job_end, in.candidates, in.params.max_penalty);
      ASSERT_EQ(s.has_value(), e.has_value()) << "instance " << i;
      if (s) {
        EXPECT_EQ(s->performance_impact, e->first);
        EXPECT_EQ(s->mate_ids(), e->second);
      }
    }
  }
}

TEST(SelectMates, SolutionsAreFeasible) {
  std::mt19937_64 rng(78);
  for (int i = 0; i < 300; ++i) {
    auto in = fixtures::random_instance(rng);
    auto s = select_mates(in.required, in.new_job_end, in.candidates, in.free_nodes, in.params);
    if (!s) continue;
    int weight = static_cast<int>(s->free_nodes_used.size());
    for (const auto& m : s->mates) {
      weight += m.weight();
      EXPECT_LT(m.penalty, in.params.max_penalty);
      EXPECT_GE(m.predicted_end, in.new_job_end);
    }
    EXPECT_EQ(weight, in.required);
    EXPECT_LE(static_cast<int>(s->mates.size()), in.params.max_mates);
  }
}

TEST(SelectMates, RaisingCutoffNeverRaisesImpact) {
  std::mt19937_64 rng(79);
  for (int i = 0; i < 300; ++i) {
    auto in = fixtures::random_instance(rng);
    in.params.max_penalty = 2.0;
    auto low = select_mates(in.required, in.new_job_end, in.candidates, in.free_nodes, in.params);
    in.params.max_penalty = 3.0;
    auto high = select_mates(in.required, in.new_job_end, in.candidates, in.free_nodes, in.params);
    if (low) {
      ASSERT_TRUE(high);
      EXPECT_LE(high->performance_impact, low->performance_impact);
    }
  }
}

TEST(SelectMates, Deterministic) {
  std::mt19937_64 rng(80);
  auto in = fixtures::random_instance(rng, 12, 4);
  auto a = select_mates(in.required, in.new_job_end, in.candidates, in.free_nodes, in.params);
  auto b = select_mates(in.required, in.new_job_end, in.candidates, in.free_nodes, in.params);
  ASSERT_EQ(a.has_value(), b.has_value());
  if (a) EXPECT_EQ(a->mate_ids(), b->mate_ids());
}
