#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evsci/cli/pipeline.hpp"

namespace {

// exit codes: 0 success, 2 invalid config, 3 io, 4 solver divergence
constexpr int kOk = 0;
constexpr int kInvalidConfig = 2;
constexpr int kIo = 3;
constexpr int kDiverged = 4;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  std::string output;
  bool no_events = false;
  std::string frame_format;
  std::string events_format;
};

void add_common(CLI::App* app, CommonArgs& args) {
  app->add_option("--config", args.config_path, "TOML config file");
  app->add_option("--set", args.sets, "Override a config key (section.key=value)")
      ->take_all()
      ->allow_extra_args(false);
  app->add_option("--seed", args.seed, "Global seed; every sub-seed derives from it");
  app->add_option("--output", args.output, "Artifact directory");
  app->add_flag("--no-events", args.no_events, "Disable event fusion (intensity-only)");
  app->add_option("--format", args.frame_format, "Frame artifact format (pgm_dir, raw_f32)");
  app->add_option("--events-format", args.events_format, "Event file format (bin16, csv)");
}

// precedence: defaults < config file < --set < explicit flags
evsci::cli::PipelineConfig make_config(const CLI::App* cmd, const CommonArgs& args) {
  evsci::cli::KeyValues file_kv;
  if (!args.config_path.empty()) file_kv = evsci::cli::load_config_file(args.config_path);
  evsci::cli::KeyValues overrides;
  for (const std::string& kv : args.sets) {
    auto [k, v] = evsci::cli::parse_override(kv);
    overrides[k] = v;
  }
  evsci::cli::PipelineConfig cfg = evsci::cli::build_config(file_kv, overrides);
  if (cmd->count("--seed")) cfg.seed = args.seed;
  if (cmd->count("--output")) cfg.output_dir = args.output;
  if (cmd->count("--no-events")) cfg.no_events = args.no_events;
  if (cmd->count("--format"))
    cfg.frame_format = evsci::scene::parse_frame_format(args.frame_format);
  if (cmd->count("--events-format"))
    cfg.events_format = evsci::events::parse_event_format(args.events_format);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evsci: event-enhanced video snapshot compressive imaging toolkit"};
  app.require_subcommand(1);

  CommonArgs sim_args, rec_args, den_args, reg_args;
  int n_out = 0;

  CLI::App* sim = app.add_subcommand("simulate", "Synthesize scene, masks, snapshot and events");
  add_common(sim, sim_args);

  CLI::App* rec = app.add_subcommand("reconstruct", "Decode the encoded frames from a snapshot");
  add_common(rec, rec_args);

  CLI::App* den = app.add_subcommand("densify", "Interpolate a dense frame sequence");
  add_common(den, den_args);
  den->add_option("--n-out", n_out, "Number of output frames (>= B)");

  CLI::App* reg = app.add_subcommand("register", "Estimate event-to-intensity alignment");
  add_common(reg, reg_args);

  std::string eval_pred, eval_gt, eval_report;
  std::string eval_pred_format = "pgm_dir", eval_gt_format = "pgm_dir";
  CLI::App* eva = app.add_subcommand("evaluate", "PSNR/SSIM of a sequence against a reference");
  eva->add_option("--pred", eval_pred, "Predicted sequence path")->required();
  eva->add_option("--gt", eval_gt, "Ground-truth sequence path")->required();
  eva->add_option("--pred-format", eval_pred_format, "pgm_dir or raw_f32");
  eva->add_option("--gt-format", eval_gt_format, "pgm_dir or raw_f32");
  eva->add_option("--report", eval_report, "Output report JSON")->required();

  std::string ev_in, ev_out, ev_in_format = "bin16", ev_out_format = "csv";
  CLI::App* evc = app.add_subcommand("events", "Convert event files between formats");
  evc->add_option("--in", ev_in, "Input event file")->required();
  evc->add_option("--in-format", ev_in_format, "bin16 or csv");
  evc->add_option("--out", ev_out, "Output event file")->required();
  evc->add_option("--out-format", ev_out_format, "bin16 or csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInvalidConfig;
  }

  try {
    if (sim->parsed()) {
      evsci::cli::cmd_simulate(make_config(sim, sim_args));
    } else if (rec->parsed()) {
      evsci::cli::cmd_reconstruct(make_config(rec, rec_args));
    } else if (den->parsed()) {
      evsci::cli::PipelineConfig cfg = make_config(den, den_args);
      if (den->count("--n-out")) cfg.interp_n_out = n_out;
      evsci::cli::cmd_densify(cfg);
    } else if (reg->parsed()) {
      evsci::cli::cmd_register(make_config(reg, reg_args));
    } else if (eva->parsed()) {
      evsci::cli::cmd_evaluate(eval_pred, evsci::scene::parse_frame_format(eval_pred_format),
                               eval_gt, evsci::scene::parse_frame_format(eval_gt_format),
                               eval_report);
    } else if (evc->parsed()) {
      evsci::cli::cmd_events_convert(ev_in, evsci::events::parse_event_format(ev_in_format),
                                     ev_out, evsci::events::parse_event_format(ev_out_format));
    }
  } catch (const evsci::InvalidConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const evsci::DimensionMismatchError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const evsci::DivergedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDiverged;
  } catch (const evsci::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kOk;
}
