#include "sdsim/cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>

#include "CLI11.hpp"
#include "sdsim/engine.hpp"
#include "sdsim/report_io.hpp"
#include "sdsim/swf_writer.hpp"
#include "sdsim/workload.hpp"

namespace sdsim {

namespace {

class FlatConfig : public CLI::ConfigINI {
 public:
  explicit FlatConfig(std::string subcommand) : subcommand_(std::move(subcommand)) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    auto items = CLI::ConfigINI::from_config(in);
    if (!subcommand_.empty())
      for (auto& item : items)
        if (item.parents.empty()) item.parents = {subcommand_};
    return items;
  }

 private:
  std::string subcommand_;
};

struct ClusterOpts {
  int nodes = 128;
  int sockets = 2;
  int cores_per_socket = 24;
  int max_residents = 2;

  ClusterConfig build() const {
    ClusterConfig c;
    c.node_count = nodes;
    c.sockets_per_node = sockets;
    c.cores_per_socket = cores_per_socket;
    c.max_residents = max_residents;
    c.validate();
    return c;
  }
};

struct WorkloadOpts {
  std::string swf;
  bool synthetic = false;
  SynthParams synth;
  double malleable_fraction = 1.0;
  int ranks_per_node = 1;
  std::uint64_t seed = 0;
};

struct PolicyOpts {
  std::string policy = "sd";
  std::string max_slowdown = "dyn";
};

struct SimOpts {
  std::string runtime_model = "ideal";
  double sharing_factor = 0.5;
  int max_mates = 2;
  int candidate_cap = 64;
  bool use_free_nodes = false;
  Seconds backfill_interval = 30;
  bool easy = false;
  std::optional<Seconds> bounded_slowdown;
  bool check_invariants = false;
};

void add_cluster_options(CLI::App* app, ClusterOpts& o) {
  app->add_option("--nodes", o.nodes, "Compute nodes")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--sockets", o.sockets, "Sockets per node")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--cores-per-socket", o.cores_per_socket, "Cores per socket")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_option("--max-residents", o.max_residents, "Jobs allowed to share one node")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

void add_synth_options(CLI::App* app, WorkloadOpts& o) {
  app->add_option("--jobs", o.synth.job_count, "Synthetic job count")->capture_default_str();
  app->add_option("--min-nodes", o.synth.min_nodes, "Smallest synthetic job")->capture_default_str();
  app->add_option("--max-nodes", o.synth.max_nodes, "Largest synthetic job")->capture_default_str();
  app->add_option("--min-runtime", o.synth.min_runtime, "Shortest synthetic run time (s)")->capture_default_str();
  app->add_option("--max-runtime", o.synth.max_runtime, "Longest synthetic run time (s)")->capture_default_str();
  app->add_option("--min-inflation", o.synth.min_inflation, "Lowest estimate / run time factor")
      ->capture_default_str();
  app->add_option("--max-inflation", o.synth.max_inflation, "Highest estimate / run time factor")
      ->capture_default_str();
  app->add_option("--interarrival", o.synth.interarrival_mean, "Mean seconds between submissions")
      ->capture_default_str();
  app->add_option("--malleable-fraction", o.malleable_fraction, "Share of jobs marked malleable")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--ranks-per-node", o.ranks_per_node, "MPI ranks per node for every job")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_option("--seed", o.seed, "Seed for generation and malleability flags")->capture_default_str();
}

void add_workload_options(CLI::App* app, WorkloadOpts& o) {
  auto* swf = app->add_option("--workload", o.swf, "SWF trace to replay")->check(CLI::ExistingFile);
  auto* syn = app->add_flag("--synthetic", o.synthetic, "Generate the workload instead of reading one");
  swf->excludes(syn);
  add_synth_options(app, o);
}

void add_sim_options(CLI::App* app, SimOpts& o) {
  app->add_option("--runtime-model", o.runtime_model, "How shrunk jobs progress")
      ->capture_default_str()
      ->check(CLI::IsMember({"ideal", "worst"}));
  app->add_option("--sharing-factor", o.sharing_factor, "Largest share of a node taken from one job, in (0, 1)")
      ->capture_default_str();
  app->add_option("--max-mates", o.max_mates, "Most jobs shrunk for one start")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_option("--candidate-cap", o.candidate_cap, "Mate candidates kept, lowest penalty first")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_flag("--use-free-nodes", o.use_free_nodes, "Let free nodes complete a mate selection");
  app->add_option("--backfill-interval", o.backfill_interval, "Seconds between periodic passes, 0 for none")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app->add_flag("--easy", o.easy, "Reserve for the queue head only");
  app->add_option("--bounded-slowdown", o.bounded_slowdown, "Report bounded slowdown with this threshold (s)")
      ->check(CLI::PositiveNumber);
  app->add_flag("--check-invariants", o.check_invariants, "Verify machine state after every event");
}

void add_policy_options(CLI::App* app, PolicyOpts& o, const std::string& suffix, const std::string& what) {
  app->add_option("--policy" + suffix, o.policy, "Scheduling policy" + what)
      ->capture_default_str()
      ->check(CLI::IsMember({"static", "sd"}));
  app->add_option("--max-slowdown" + suffix, o.max_slowdown, "Mate penalty cut-off: a number above 1 or dyn" + what)
      ->capture_default_str();
}

CutoffPolicy parse_cutoff(const std::string& text) {
  if (text == "dyn") return CutoffPolicy::dynamic();
  double v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw std::invalid_argument("max slowdown must be a number or 'dyn', got '" + text + "'");
  return CutoffPolicy::fixed(v);
}

SimConfig build_config(const ClusterOpts& c, const SimOpts& s, const PolicyOpts& p, std::uint64_t seed) {
  SimConfig cfg;
  cfg.cluster = c.build();
  cfg.scheduler.policy = p.policy == "sd" ? Policy::sd : Policy::static_backfill;
  cfg.scheduler.depth = s.easy ? ReservationDepth::easy : ReservationDepth::conservative;
  cfg.scheduler.cutoff = parse_cutoff(p.max_slowdown);
  cfg.scheduler.selection.max_mates = s.max_mates;
  cfg.scheduler.selection.candidate_cap = s.candidate_cap;
  cfg.scheduler.selection.use_free_nodes = s.use_free_nodes;
  cfg.model = s.runtime_model == "worst" ? ModelKind::worst_case : ModelKind::ideal;
  cfg.sharing = SharingFactor(s.sharing_factor);
  cfg.backfill_interval = s.backfill_interval;
  cfg.seed = seed;
  cfg.check_invariants = s.check_invariants;
  cfg.metrics.bounded_slowdown = s.bounded_slowdown;
  cfg.validate();
  return cfg;
}

Workload load_workload(const WorkloadOpts& o, const ClusterConfig& cluster) {
  if (!o.swf.empty()) {
    std::ifstream in(o.swf);
    if (!in) throw std::runtime_error("cannot open workload " + o.swf);
    SwfOptions opt;
    opt.malleable_fraction = o.malleable_fraction;
    opt.seed = o.seed;
    opt.ranks_per_node = o.ranks_per_node;
    try {
      return parse_swf(in, cluster, opt);
    } catch (const WorkloadError& e) {
      throw std::runtime_error(o.swf + ": " + e.what());
    }
  }
  if (!o.synthetic) throw std::invalid_argument("no workload: pass --workload <file> or --synthetic");
  SynthParams p = o.synth;
  p.malleable_fraction = o.malleable_fraction;
  p.ranks_per_node = o.ranks_per_node;
  return gen_synthetic(p, cluster, o.seed);
}

void print_summary(std::ostream& out, const char* label, const SimReport& r) {
  out << label << "jobs=" << r.job_count << " makespan=" << r.makespan << " avg_response=" << r.avg_response
      << " avg_slowdown=" << r.avg_slowdown << " avg_wait=" << r.avg_wait << " malleable_starts=" << r.malleable_starts
      << " mate_jobs=" << r.mate_jobs << '\n';
}

int report_violations(std::ostream& err, const RunResult& r) {
  for (const auto& v : r.violations) err << "invariant: " << v << '\n';
  return r.violations.empty() ? 0 : 3;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Discrete-event simulator for backfill and slowdown-driven malleable co-scheduling", "sdsim"};
  app.require_subcommand(1);
  // Flat keys in the config file belong to whichever subcommand was given.
  std::string active;
  for (const auto& a : args)
    if (a == "simulate" || a == "compare" || a == "gen-workload") {
      active = a;
      break;
    }
  app.set_config("--config", "", "key = value file using the long flag names; command-line flags win");
  app.config_formatter(std::make_shared<FlatConfig>(active));

  ClusterOpts cluster;
  WorkloadOpts workload;
  SimOpts sim;
  PolicyOpts policy;
  PolicyOpts policy_a{"static", ""};
  PolicyOpts policy_b{"sd", ""};
  std::string out_dir = "out";
  std::string out_file;

  auto* simulate = app.add_subcommand("simulate", "Run one configuration and write its reports");
  simulate->fallthrough();
  add_workload_options(simulate, workload);
  add_cluster_options(simulate, cluster);
  add_policy_options(simulate, policy, "", "");
  add_sim_options(simulate, sim);
  simulate->add_option("--out", out_dir, "Output directory")->capture_default_str();

  auto* compare = app.add_subcommand("compare", "Run two configurations on the same workload");
  compare->fallthrough();
  add_workload_options(compare, workload);
  add_cluster_options(compare, cluster);
  add_sim_options(compare, sim);
  compare->add_option("--policy-a", policy_a.policy, "Policy of run a (the baseline)")
      ->capture_default_str()
      ->check(CLI::IsMember({"static", "sd"}));
  compare->add_option("--policy-b", policy_b.policy, "Policy of run b")
      ->capture_default_str()
      ->check(CLI::IsMember({"static", "sd"}));
  compare->add_option("--max-slowdown", policy.max_slowdown, "Cut-off for both runs: a number above 1 or dyn")
      ->capture_default_str();
  compare->add_option("--max-slowdown-a", policy_a.max_slowdown, "Cut-off of run a (defaults to --max-slowdown)");
  compare->add_option("--max-slowdown-b", policy_b.max_slowdown, "Cut-off of run b (defaults to --max-slowdown)");
  compare->add_option("--out", out_dir, "Output directory")->capture_default_str();

  auto* gen = app.add_subcommand("gen-workload", "Write a synthetic workload as SWF");
  gen->fallthrough();
  add_cluster_options(gen, cluster);
  add_synth_options(gen, workload);
  gen->add_option("--out", out_file, "SWF file to write")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (simulate->parsed()) {
      const SimConfig cfg = build_config(cluster, sim, policy, workload.seed);
      const Workload w = load_workload(workload, cfg.cluster);
      const RunResult r = run(w, cfg);
      write_run_outputs(out_dir, r, cfg);
      print_summary(out, "", r.report);
      return report_violations(err, r);
    }
    if (compare->parsed()) {
      if (policy_a.max_slowdown.empty()) policy_a.max_slowdown = policy.max_slowdown;
      if (policy_b.max_slowdown.empty()) policy_b.max_slowdown = policy.max_slowdown;
      const SimConfig a = build_config(cluster, sim, policy_a, workload.seed);
      const SimConfig b = build_config(cluster, sim, policy_b, workload.seed);
      const Workload w = load_workload(workload, a.cluster);
      const CompareResult r = replay_compare(w, a, b);
      write_compare_outputs(out_dir, r, a, b);
      print_summary(out, "a: ", r.a.report);
      print_summary(out, "b: ", r.b.report);
      out << "ratio b/a: makespan=" << r.ratios.makespan << " avg_response=" << r.ratios.avg_response
          << " avg_slowdown=" << r.ratios.avg_slowdown << " avg_wait=" << r.ratios.avg_wait << '\n';
      return std::max(report_violations(err, r.a), report_violations(err, r.b));
    }
    if (gen->parsed()) {
      const ClusterConfig c = cluster.build();
      SynthParams p = workload.synth;
      p.malleable_fraction = workload.malleable_fraction;
      p.ranks_per_node = workload.ranks_per_node;
      const Workload w = gen_synthetic(p, c, workload.seed);
      const auto parent = std::filesystem::path(out_file).parent_path();
      if (!parent.empty()) std::filesystem::create_directories(parent);
      std::ofstream f(out_file);
      if (!f) throw std::runtime_error("cannot write " + out_file);
      write_swf(f, w, c);
      out << "wrote " << w.jobs.size() << " jobs to " << out_file << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace sdsim
