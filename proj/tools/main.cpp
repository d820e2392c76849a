#include "rarehmm/config.hpp"
#include "rarehmm/csv.hpp"
#include "rarehmm/entropy.hpp"
#include "rarehmm/errors.hpp"
#include "rarehmm/experiments.hpp"
#include "rarehmm/model.hpp"
#include "rarehmm/reconstruction.hpp"
#include "rarehmm/rng.hpp"
#include "rarehmm/sampling.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace {

using namespace rarehmm;
using nlohmann::json;

struct CommonOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::string units = "nats";
  std::optional<std::uint64_t> seed;
  std::optional<double> p;
  std::optional<std::int64_t> n;
  std::optional<int> reps;
  std::optional<std::int64_t> block_len;
  std::optional<std::int64_t> margin;
  int workers = static_cast<int>(std::thread::hardware_concurrency());
};

void add_common_flags(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--config", opt.config_path, "JSON run configuration")
      ->required();
  cmd->add_option("--seed", opt.seed, "master seed (overrides config)");
  cmd->add_option("--out", opt.out_dir, "output directory");
  cmd->add_option("--units", opt.units, "reporting units")
      ->check(CLI::IsMember({"nats", "bits"}));
  cmd->add_option("--workers", opt.workers, "worker threads");
  cmd->add_option("--p", opt.p, "transition scale p (overrides config)");
  cmd->add_option("--n", opt.n, "length / depth (overrides config)");
  cmd->add_option("--reps", opt.reps, "replicates (overrides config)");
  cmd->add_option("--block-l", opt.block_len, "block length override");
  cmd->add_option("--block-k", opt.margin, "block margin override");
}

struct Run {
  RunConfig config;
  ReportUnits units;
  std::filesystem::path out_dir;
  std::chrono::steady_clock::time_point started;
};

Run begin_run(const CommonOptions& opt) {
  Run run;
  run.started = std::chrono::steady_clock::now();
  run.config = load_config(opt.config_path);
  if (opt.seed) run.config.seed = *opt.seed;
  if (opt.p) {
    run.config.p = *opt.p;
    run.config.p_list.clear();
  }
  if (opt.n) run.config.n = *opt.n;
  if (opt.reps) run.config.reps = *opt.reps;
  if (opt.block_len) run.config.block_len_override = *opt.block_len;
  if (opt.margin) run.config.margin_override = *opt.margin;
  run.units.bits = opt.units == "bits";
  run.out_dir = opt.out_dir;
  std::filesystem::create_directories(run.out_dir);
  return run;
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_manifest(const Run& run, const std::string& command,
                    const std::vector<std::string>& outputs,
                    json extra = json::object()) {
  const auto elapsed = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - run.started)
                           .count();
  json manifest;
  manifest["artifact_version"] = kArtifactVersion;
  manifest["command"] = command;
  manifest["config_hash"] = hex64(run.config.config_hash);
  manifest["master_seed"] = run.config.seed;
  manifest["duration_seconds"] = elapsed;
  manifest["units"] = run.units.name();
  manifest["outputs"] = outputs;
  manifest["budgets"] = {{"n", run.config.n},
                         {"reps", run.config.reps},
                         {"decode_n", run.config.decode_n},
                         {"blocks", run.config.blocks},
                         {"bracket_terms", run.config.bracket_terms},
                         {"rejection_attempts", run.config.rejection_attempts}};
  for (auto& [key, value] : extra.items()) manifest[key] = value;
  std::ofstream out(run.out_dir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

HmmModel model_from_config(const RunConfig& config) {
  const GeneratorMatrix gen = build_generator(config.generator);
  const Channel channel = build_channel(config.channel);
  return make_model(gen, channel, config.single_p());
}

std::string state_label(const RunConfig& config, Index i) {
  if (i < static_cast<Index>(config.states.size())) {
    return config.states[static_cast<std::size_t>(i)];
  }
  return "s" + std::to_string(i);
}

int cmd_model_info(const CommonOptions& opt) {
  const Run run = begin_run(opt);
  const HmmModel model = model_from_config(run.config);
  const double scale = run.units.scale();
  const DistinguishingReport report = check_distinguishing(model.channel);
  const JointChain joint = joint_chain(model);

  std::cout << "states: " << model.n_states()
            << "  outputs: " << model.n_outputs() << '\n';
  std::cout << "p: " << format_double(model.p)
            << "  p_max: " << format_double(model.generator.p_max()) << '\n';
  std::cout << "stationary:";
  for (Index i = 0; i < model.n_states(); ++i) {
    std::cout << ' ' << state_label(run.config, i) << '='
              << format_double(model.stationary.weights(i));
  }
  std::cout << '\n';
  std::cout << "h_markov: " << format_double(model.entropy_markov * scale)
            << ' ' << run.units.name() << "/symbol\n";
  for (Index i = 0; i < model.n_states(); ++i) {
    std::cout << "h_chan[" << state_label(run.config, i) << "]: "
              << format_double(channel_entropy(model.channel, i) * scale)
              << '\n';
  }
  std::cout << "h_chan_avg: "
            << format_double(model.entropy_channel_avg * scale) << '\n';
  std::cout << "h_joint: "
            << format_double(
                   markov_entropy(joint.transition, joint.stationary) * scale)
            << '\n';
  std::cout << "distinguishing: " << (report.distinguishing ? "true" : "false")
            << "  min_pairwise_kl: "
            << format_double(report.min_off_diagonal() * scale) << '\n';
  std::cout << "fingerprint: " << hex64(model.fingerprint) << '\n';
  write_manifest(run, "model-info", {});
  return 0;
}

int cmd_sample(const CommonOptions& opt) {
  const Run run = begin_run(opt);
  const HmmModel model = model_from_config(run.config);
  const std::uint64_t stream_index = compose_stream(stream_tag::sample, 0, 0);
  const PathSample path = sample_path(model, run.config.n,
                                      RngStream(run.config.seed, stream_index));

  write_file((run.out_dir / "hidden.bin").string(),
             std::string(reinterpret_cast<const char*>(path.x.data()),
                         path.x.size()));
  write_file((run.out_dir / "observed.bin").string(),
             std::string(reinterpret_cast<const char*>(path.y.data()),
                         path.y.size()));
  json sidecar;
  sidecar["model_fingerprint"] = hex64(path.model_fingerprint);
  sidecar["master_seed"] = path.master_seed;
  sidecar["stream_index"] = path.stream_index;
  sidecar["length"] = run.config.n;
  sidecar["hidden_file"] = "hidden.bin";
  sidecar["observed_file"] = "observed.bin";
  std::ofstream side(run.out_dir / "sample_manifest.json");
  side << sidecar.dump(2) << '\n';

  write_manifest(run, "sample",
                 {"hidden.bin", "observed.bin", "sample_manifest.json"});
  std::cout << "wrote " << run.config.n << " symbols per file to "
            << run.out_dir.string() << '\n';
  return 0;
}

int cmd_entropy(const CommonOptions& opt) {
  const Run run = begin_run(opt);
  const HmmModel model = model_from_config(run.config);
  const EntropyTriple triple = estimate_entropy_mc_all(
      model, run.config.n, run.config.reps, run.config.seed, 0, opt.workers);
  const std::vector<EntropyEstimate> estimates{
      triple.marginal, triple.conditional, triple.joint};
  const std::string csv = estimates_csv(estimates, run.units);
  write_file((run.out_dir / "estimates.csv").string(), csv);
  std::cout << csv;
  write_manifest(run, "entropy", {"estimates.csv"});
  return 0;
}

int cmd_bracket(const CommonOptions& opt) {
  const Run run = begin_run(opt);
  const HmmModel model = model_from_config(run.config);
  const int depth = static_cast<int>(run.config.n);
  const std::vector<Bracket> table =
      bracket_table(model, depth, run.config.bracket_terms);
  const std::string csv = bracket_csv(table, run.units);
  write_file((run.out_dir / "bracket.csv").string(), csv);
  std::cout << csv;
  write_manifest(run, "bracket", {"bracket.csv"});
  return 0;
}

int cmd_reconstruct(const CommonOptions& opt) {
  const Run run = begin_run(opt);
  const HmmModel model = model_from_config(run.config);
  const BlockParams params = block_params_from_p(
      model.p, run.config.block_len_override, run.config.margin_override);
  const PathSample path = sample_path(
      model, run.config.n,
      RngStream(run.config.seed, compose_stream(stream_tag::decode, 0, 0)));
  const SmoothResult smooth = smooth_path(model, path.y, params, path.x);
  const SymbolSeq filtered = filter_path(model, path.y);
  std::int64_t filter_errors = 0;
  for (std::int64_t k = 0; k < smooth.reconstructed_len; ++k) {
    if (filtered[static_cast<std::size_t>(k)] !=
        path.x[static_cast<std::size_t>(k)]) {
      ++filter_errors;
    }
  }
  const double filter_rate =
      static_cast<double>(filter_errors) / smooth.reconstructed_len;

  write_file((run.out_dir / "blocks.csv").string(),
             block_diagnostics_csv(smooth.diagnostics, run.units));

  json summary;
  summary["n"] = run.config.n;
  summary["L"] = params.block_len;
  summary["K"] = params.margin;
  summary["blocks"] = smooth.n_blocks;
  summary["reconstructed_len"] = smooth.reconstructed_len;
  summary["smoothing_error_rate"] = smooth.error_rate();
  summary["filtering_error_rate"] = filter_rate;
  summary["event_counts"] = {{"many", smooth.event_counts[0]},
                             {"boundary", smooth.event_counts[1]},
                             {"good_near", smooth.event_counts[2]},
                             {"good_far", smooth.event_counts[3]}};
  summary["good_near_constant_mismatches"] =
      smooth.good_near_constant_mismatches;
  summary["mean_abs_offset"] = smooth.mean_abs_offset;
  summary["offset_entropy"] = smooth.offset_entropy * run.units.scale();
  std::ofstream sum_out(run.out_dir / "reconstruct_summary.json");
  sum_out << summary.dump(2) << '\n';

  std::cout << "blocks: " << smooth.n_blocks << "  L: " << params.block_len
            << "  K: " << params.margin << '\n'
            << "smoothing_error_rate: " << format_double(smooth.error_rate())
            << '\n'
            << "filtering_error_rate: " << format_double(filter_rate) << '\n';
  write_manifest(run, "reconstruct", {"blocks.csv", "reconstruct_summary.json"},
                 {{"L", params.block_len}, {"K", params.margin}});
  return 0;
}

int cmd_sweep(const CommonOptions& opt) {
  const Run run = begin_run(opt);
  const GeneratorMatrix gen = build_generator(run.config.generator);
  const Channel channel = build_channel(run.config.channel);

  SweepBudget budget;
  budget.entropy_n = run.config.n;
  budget.reps = run.config.reps;
  budget.decode_n = run.config.decode_n;
  budget.block_len_override = run.config.block_len_override;
  budget.margin_override = run.config.margin_override;
  budget.workers = opt.workers;

  const std::vector<SweepRow> rows = run_sweep(
      gen, channel, run.config.sweep_p_values(), budget, run.config.seed);
  const std::string csv = sweep_csv(rows, run.units);
  write_file((run.out_dir / "sweep.csv").string(), csv);
  std::cout << csv;

  json fit_json;
  try {
    const FitReport fit = fit_conditional_entropy_rate(rows);
    std::cout << "rate-fit " << (fit.pass ? "PASS" : "FAIL")
              << ": quantity=" << fit.quantity
              << " c_hat=" << format_double(fit.min_ratio)
              << " C_hat=" << format_double(fit.max_ratio)
              << " spread=" << format_double(fit.spread) << '\n';
    fit_json = {{"pass", fit.pass},
                {"c_hat", fit.min_ratio},
                {"C_hat", fit.max_ratio},
                {"spread", fit.spread}};
  } catch (const Error& e) {
    if (e.code() != errc::insufficient_resolution) throw;
    std::cout << "rate-fit SKIPPED: " << e.what() << '\n';
    fit_json = {{"pass", nullptr}, {"reason", e.what()}};
  }
  write_manifest(run, "sweep", {"sweep.csv"}, {{"rate_fit", fit_json}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rare-transition hidden-chain entropy and reconstruction"};
  app.require_subcommand(1);

  CommonOptions opt;
  CLI::App* info = app.add_subcommand(
      "model-info", "exact model quantities and channel checks");
  CLI::App* sample =
      app.add_subcommand("sample", "dump one sampled hidden/observed path");
  CLI::App* entropy =
      app.add_subcommand("entropy", "Monte Carlo entropy-rate estimates");
  CLI::App* bracket = app.add_subcommand(
      "bracket", "exact conditional-entropy sandwich by enumeration");
  CLI::App* reconstruct = app.add_subcommand(
      "reconstruct", "block decoding with a causal-filter baseline");
  CLI::App* sweep =
      app.add_subcommand("sweep", "per-p estimates, decoders, and rate fit");
  for (CLI::App* cmd : {info, sample, entropy, bracket, reconstruct, sweep}) {
    add_common_flags(cmd, opt);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (info->parsed()) return cmd_model_info(opt);
    if (sample->parsed()) return cmd_sample(opt);
    if (entropy->parsed()) return cmd_entropy(opt);
    if (bracket->parsed()) return cmd_bracket(opt);
    if (reconstruct->parsed()) return cmd_reconstruct(opt);
    if (sweep->parsed()) return cmd_sweep(opt);
  } catch (const rarehmm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return rarehmm::is_budget_error(e.code()) ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
