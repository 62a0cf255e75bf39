#include <gtest/gtest.h>

#include <random>

#include <sdsim/scheduler.hpp>

#include "test_support.hpp"

namespace sdsim {
namespace {

using fixtures::make_job;
using fixtures::small_cluster;

struct Machine {
  explicit Machine(int nodes) : state(small_cluster(nodes), SharingFactor(0.5), ModelKind::ideal, log) {}

  void run_static(const Job& job, std::vector<NodeId> nodes) { state.start_static(job, nodes); }

  EventLog log;
  SystemState state;
};

SchedulerConfig config(Policy policy, double max_slowdown = 10.0) {
  SchedulerConfig c;
  c.policy = policy;
  c.cutoff = CutoffPolicy::fixed(max_slowdown);
  return c;
}

TEST(AvailabilityProfileTest, StepFunction) {
  const std::vector<Seconds> releases{100, 100, 300};
  AvailabilityProfile p(0, 4, releases);
  EXPECT_EQ(p.available_at(0), 1);
  EXPECT_EQ(p.available_at(99), 1);
  EXPECT_EQ(p.available_at(100), 3);
  EXPECT_EQ(p.available_at(300), 4);
  EXPECT_EQ(p.earliest_start(1, 1000), 0);
  EXPECT_EQ(p.earliest_start(2, 50), 100);
  EXPECT_EQ(p.earliest_start(4, 10), 300);
  EXPECT_THROW(p.earliest_start(5, 10), std::invalid_argument);

  EXPECT_TRUE(p.fits(3, 100, 1000));
  p.reserve(2, 100, 100);
  EXPECT_EQ(p.available_at(100), 1);
  EXPECT_EQ(p.available_at(200), 3);
  EXPECT_EQ(p.earliest_start(3, 10), 200);
  EXPECT_FALSE(p.fits(3, 150, 100));
}

TEST(AvailabilityProfileTest, ClaimIsAllOrNothing) {
  const std::vector<Seconds> releases{100};
  AvailabilityProfile p(0, 2, releases);
  const AvailabilityProfile::Claim bad[] = {{1, 0, 50}, {1, 10, 20}};
  EXPECT_FALSE(p.try_claim(bad));
  EXPECT_EQ(p.available_at(0), 1);
  EXPECT_EQ(p.available_at(10), 1);
  const AvailabilityProfile::Claim good[] = {{1, 0, 50}, {2, 100, 120}};
  EXPECT_TRUE(p.try_claim(good));
  EXPECT_EQ(p.available_at(0), 0);
  EXPECT_EQ(p.available_at(50), 1);
  EXPECT_EQ(p.available_at(110), 0);
  EXPECT_EQ(p.available_at(120), 2);
}

TEST(AvailabilityProfileTest, BusyNodeMustReleaseInTheFuture) {
  const std::vector<Seconds> releases{0};
  EXPECT_THROW(AvailabilityProfile(0, 2, releases), std::logic_error);
}

// Second-by-second search over a random profile with random reservations.
TEST(AvailabilityProfileTest, EarliestStartMatchesEnumeration) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const int total = std::uniform_int_distribution<int>(1, 6)(rng);
    std::vector<Seconds> releases;
    const int busy = std::uniform_int_distribution<int>(0, total)(rng);
    for (int i = 0; i < busy; ++i) releases.push_back(std::uniform_int_distribution<Seconds>(1, 60)(rng));
    AvailabilityProfile p(0, total, releases);
    std::vector<int> avail(200, total);
    for (std::size_t t = 0; t < avail.size(); ++t)
      for (Seconds r : releases) avail[t] -= static_cast<Seconds>(t) < r ? 1 : 0;
    for (int k = std::uniform_int_distribution<int>(0, 3)(rng); k > 0; --k) {
      const int n = std::uniform_int_distribution<int>(1, total)(rng);
      const Seconds d = std::uniform_int_distribution<Seconds>(1, 30)(rng);
      const Seconds s = p.earliest_start(n, d);
      p.reserve(n, s, d);
      for (Seconds t = s; t < s + d; ++t) avail[static_cast<std::size_t>(t)] -= n;
    }
    const int n = std::uniform_int_distribution<int>(1, total)(rng);
    const Seconds d = std::uniform_int_distribution<Seconds>(1, 30)(rng);
    Seconds expect = -1;
    for (Seconds s = 0; s + d <= 200 && expect < 0; ++s) {
      bool ok = true;
      for (Seconds t = s; t < s + d && ok; ++t) ok = avail[static_cast<std::size_t>(t)] >= n;
      if (ok) expect = s;
    }
    ASSERT_GE(expect, 0);
    EXPECT_EQ(p.earliest_start(n, d), expect) << "trial " << trial;
  }
}

TEST(EstimateWaitTest, FreeCluster) {
  Machine m(2);
  Scheduler s(config(Policy::sd));
  EXPECT_EQ(s.estimate_wait_time(make_job(1, 0, 2, 100, 100), m.state), 0);
}

TEST(EstimateWaitTest, SingleRelease) {
  Machine m(1);
  m.run_static(make_job(1, 0, 1, 500, 500), {0});
  Scheduler s(config(Policy::sd));
  EXPECT_EQ(s.estimate_wait_time(make_job(2, 0, 1, 100, 100), m.state), 500);
}

TEST(EstimateWaitTest, StaggeredReleases) {
  Machine m(2);
  m.run_static(make_job(1, 0, 1, 300, 300), {0});
  m.run_static(make_job(2, 0, 1, 700, 700), {1});
  Scheduler s(config(Policy::sd));
  EXPECT_EQ(s.estimate_wait_time(make_job(3, 0, 2, 100, 100), m.state), 700);
  EXPECT_EQ(s.estimate_wait_time(make_job(3, 0, 1, 100, 100), m.state), 300);
}

TEST(EstimateWaitTest, QueuedJobsAheadHoldReservations) {
  Machine m(1);
  m.run_static(make_job(1, 0, 1, 500, 500), {0});
  Scheduler s(config(Policy::static_backfill));
  s.submit(make_job(2, 0, 1, 200, 200));
  EXPECT_EQ(s.estimate_wait_time(make_job(3, 0, 1, 100, 100), m.state), 700);
  EXPECT_THROW(s.estimate_wait_time(make_job(4, 0, 2, 100, 100), m.state), std::invalid_argument);
}

TEST(ScheduleTest, FreeNodesGiveStaticStart) {
  Machine m(2);
  Scheduler s(config(Policy::sd));
  s.submit(make_job(1, 0, 2, 100, 100));
  const auto d = s.backfill_pass(m.state);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].kind, SchedulingDecision::Kind::static_start);
  EXPECT_EQ(d[0].nodes, (std::vector<NodeId>{0, 1}));
  EXPECT_TRUE(s.idle());
}

TEST(ScheduleTest, EqualEndsReserve) {
  Machine m(2);
  m.run_static(make_job(1, 0, 2, 1000, 1000), {0, 1});
  Scheduler s(config(Policy::sd));
  s.submit(make_job(2, 0, 2, 1000, 1000));
  const auto d = s.backfill_pass(m.state);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].kind, SchedulingDecision::Kind::reserve);
  EXPECT_EQ(d[0].start, 1000);
  EXPECT_EQ(s.stats().gate_rejections, 1u);
}

TEST(ScheduleTest, TwoNodeScenarioStartsMalleably) {
  Machine m(2);
  m.run_static(make_job(1, 0, 2, 10000, 10000), {0, 1});
  Scheduler s(config(Policy::sd));
  s.submit(make_job(2, 0, 2, 1000, 1000));
  const auto d = s.backfill_pass(m.state);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].kind, SchedulingDecision::Kind::malleable_start);
  EXPECT_EQ(d[0].static_end, 11000);
  EXPECT_EQ(d[0].mall_end, 2000);
  ASSERT_TRUE(d[0].mates);
  EXPECT_EQ(d[0].mates->mate_ids(), std::vector<JobId>{1});
  EXPECT_DOUBLE_EQ(d[0].mates->performance_impact, 1.1);
  // The mate now predicts 1000 s more.
  EXPECT_EQ(m.state.find(1)->predicted_end, 11000);
  EXPECT_EQ(m.state.cluster().cores_owned(2, 0), 24);
}

TEST(ScheduleTest, RigidOrStaticPolicyReserves) {
  for (bool malleable : {true, false}) {
    Machine m(2);
    m.run_static(make_job(1, 0, 2, 10000, 10000), {0, 1});
    Scheduler s(config(malleable ? Policy::static_backfill : Policy::sd));
    s.submit(make_job(2, 0, 2, 1000, 1000, malleable));
    const auto d = s.backfill_pass(m.state);
    EXPECT_EQ(d[0].kind, SchedulingDecision::Kind::reserve);
    EXPECT_EQ(d[0].start, 10000);
  }
}

TEST(ScheduleTest, CutoffBlocksMate) {
  Machine m(2);
  m.run_static(make_job(1, 0, 2, 10000, 10000), {0, 1});
  Scheduler s(config(Policy::sd, 1.05));
  s.submit(make_job(2, 0, 2, 1000, 1000));
  const auto d = s.backfill_pass(m.state);
  EXPECT_EQ(d[0].kind, SchedulingDecision::Kind::reserve);
  EXPECT_EQ(s.stats().no_solution, 1u);
}

// Head reserved at 100; a short job fits the hole before it, a long one
// would delay it.
TEST(BackfillTest, ClassicBackfill) {
  for (auto depth : {ReservationDepth::conservative, ReservationDepth::easy}) {
    Machine m(2);
    m.run_static(make_job(1, 0, 1, 100, 100), {0});
    SchedulerConfig c = config(Policy::static_backfill);
    c.depth = depth;
    Scheduler s(c);
    s.submit(make_job(2, 0, 2, 100, 100));
    s.submit(make_job(3, 0, 1, 100, 100));
    s.submit(make_job(4, 0, 1, 500, 500));
    const auto d = s.backfill_pass(m.state);
    ASSERT_EQ(d.size(), 3u);
    EXPECT_EQ(d[0].kind, SchedulingDecision::Kind::reserve);
    EXPECT_EQ(d[0].start, 100);
    EXPECT_EQ(d[1].kind, SchedulingDecision::Kind::static_start);
    EXPECT_EQ(d[2].job, 4);
    if (depth == ReservationDepth::conservative) {
      EXPECT_EQ(d[2].kind, SchedulingDecision::Kind::reserve);
      EXPECT_EQ(d[2].start, 200);
      EXPECT_EQ(s.queue().reservations.size(), 2u);
    } else {
      EXPECT_EQ(d[2].kind, SchedulingDecision::Kind::skip);
      EXPECT_EQ(s.queue().reservations.size(), 1u);
    }
    EXPECT_EQ(s.queue().pending.size(), 2u);
  }
}

TEST(BackfillTest, EmptyQueue) {
  Machine m(2);
  Scheduler s(config(Policy::sd));
  EXPECT_TRUE(s.backfill_pass(m.state).empty());
}

// The head cannot start statically but starts beside the running job in
// the same pass; the job behind it then sees the shrunk machine.
TEST(BackfillTest, MalleableStartInSamePass) {
  Machine m(3);
  m.run_static(make_job(1, 0, 2, 10000, 10000), {0, 1});
  Scheduler s(config(Policy::sd));
  s.submit(make_job(2, 0, 2, 1000, 1000));
  s.submit(make_job(3, 0, 1, 50, 50));
  const auto d = s.backfill_pass(m.state);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].kind, SchedulingDecision::Kind::malleable_start);
  EXPECT_EQ(d[1].kind, SchedulingDecision::Kind::static_start);
  EXPECT_EQ(d[1].nodes, std::vector<NodeId>{2});
  EXPECT_TRUE(s.idle());
  EXPECT_TRUE(m.state.check_invariants().empty());
}

// A mate extension that would delay an earlier reservation is refused.
TEST(BackfillTest, MalleableStartMayNotDelayReservation) {
  Machine m(2);
  m.run_static(make_job(1, 0, 2, 10000, 10000), {0, 1});
  Scheduler s(config(Policy::sd));
  s.submit(make_job(2, 0, 2, 5000, 5000, false));
  s.submit(make_job(3, 0, 2, 1000, 1000));
  const auto d = s.backfill_pass(m.state);
  EXPECT_EQ(d[0].kind, SchedulingDecision::Kind::reserve);
  EXPECT_EQ(d[1].kind, SchedulingDecision::Kind::reserve);
  EXPECT_EQ(s.stats().safety_rejections, 1u);
}

TEST(SchedulerTest, RejectsBadSelectionParams) {
  SchedulerConfig c;
  c.selection.max_mates = 0;
  EXPECT_THROW(Scheduler{c}, std::invalid_argument);
}

}  // namespace
}  // namespace sdsim
