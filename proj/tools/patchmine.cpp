#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "patchmine/eval.hpp"
#include "patchmine/export.hpp"
#include "patchmine/image_io.hpp"
#include "patchmine/pipeline.hpp"
#include "patchmine/synth.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNoOutput = 2;
constexpr int kExitIo = 3;

struct MineArgs {
  std::string config_file;
  std::optional<std::string> input_root;
  std::optional<std::string> output_root;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::optional<int> top_k;
  std::optional<int> bg_pool;
  std::optional<int> n_proposals;
  std::optional<double> corr_threshold;
  std::optional<std::string> external_flow_root;
  std::optional<std::string> external_embeddings;
  bool no_resize = false;
  bool include_seed_term = false;
};

int run_mine_command(const MineArgs& args) {
  patchmine::RunConfig config;
  if (!args.config_file.empty()) config = patchmine::load_run_config(args.config_file);
  if (args.input_root) config.input_root = *args.input_root;
  if (args.output_root) config.output_root = *args.output_root;
  if (args.workers) config.workers = *args.workers;
  if (args.seed) config.seed = *args.seed;
  if (args.top_k) config.top_k = *args.top_k;
  if (args.bg_pool) config.bg_pool = *args.bg_pool;
  if (args.n_proposals) config.proposals.n_target = *args.n_proposals;
  if (args.corr_threshold) config.filter.corr_threshold = *args.corr_threshold;
  if (args.external_flow_root) config.external_flow_root = *args.external_flow_root;
  if (args.external_embeddings) config.external_embeddings = *args.external_embeddings;
  if (args.no_resize) config.resize_patches = false;
  if (args.include_seed_term) config.cluster.include_seed_term = true;
  if (config.input_root.empty() || config.output_root.empty())
    throw CLI::ValidationError("mine", "input and output roots are required (config or flags)");

  const patchmine::MineSummary summary = patchmine::run_mine(config);
  std::cout << "mined " << summary.videos_mined << " videos (" << summary.videos_skipped
            << " skipped): " << summary.dataset.fg_count << " fg + " << summary.dataset.bg_count
            << " bg patches\n";
  std::cout << "manifest: " << summary.manifest_path.string() << "\n";
  std::cout << "report: " << summary.report_path.string() << "\n";
  return kExitOk;
}

int run_synth_command(const std::string& spec_file, const std::string& out_dir) {
  const auto specs = patchmine::load_synth_spec(spec_file);
  if (specs.empty())
    throw patchmine::NoOutputError("synthetic spec lists no videos: " + spec_file);
  for (const auto& spec : specs) {
    const auto gt = patchmine::generate_synthetic_video(spec, std::filesystem::path(out_dir));
    std::cout << "synth video=" << spec.video_id << " frames=" << spec.n_frames
              << " gt_entries=" << gt.size() << "\n";
  }
  std::cout << "wrote " << specs.size() << " videos under " << out_dir << "\n";
  return kExitOk;
}

int run_eval_command(const std::string& manifest_file, const std::string& gt_root,
                     const std::string& out_file) {
  const auto records = patchmine::read_manifest(manifest_file);
  const auto metrics = patchmine::evaluate_mining(records, gt_root);
  std::cout << metrics.summary();
  if (!out_file.empty()) {
    std::ofstream out(out_file, std::ios::binary);
    if (!out) throw patchmine::IoError("cannot write metrics file: " + out_file);
    out << metrics.to_json() << "\n";
  }
  return kExitOk;
}

int run_probe_command(const std::string& dataset_dir, const patchmine::ProbeParams& params,
                      const std::string& report_file) {
  const auto result = patchmine::linear_probe(dataset_dir, params);
  char line[256];
  std::snprintf(line, sizeof line,
                "probe train_acc=%.4f test_acc=%.4f final_loss=%.6f n_train=%zu n_test=%zu\n",
                result.train_accuracy, result.test_accuracy,
                result.train_loss.empty() ? 0.0 : result.train_loss.back(), result.n_train,
                result.n_test);
  std::cout << line;
  if (!report_file.empty()) {
    std::ofstream out(report_file, std::ios::binary);
    if (!out) throw patchmine::IoError("cannot write probe report: " + report_file);
    out << line;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"patchmine: mine high-probability object patches from unlabeled video"};
  app.require_subcommand(1);

  MineArgs mine_args;
  CLI::App* mine = app.add_subcommand("mine", "run the mining pipeline over a video corpus");
  mine->add_option("--config", mine_args.config_file, "key=value config file");
  mine->add_option("--input", mine_args.input_root, "video corpus root (overrides config)");
  mine->add_option("--output", mine_args.output_root, "dataset output root (overrides config)");
  mine->add_option("--workers", mine_args.workers, "worker threads");
  mine->add_option("--seed", mine_args.seed, "run seed echoed into the report");
  mine->add_option("--top-k", mine_args.top_k, "proposals retained per frame");
  mine->add_option("--bg-pool", mine_args.bg_pool, "low-score pool size for background picks");
  mine->add_option("--n-proposals", mine_args.n_proposals, "proposal target per modality");
  mine->add_option("--corr-threshold", mine_args.corr_threshold, "scene-cut correlation threshold");
  mine->add_option("--external-flow", mine_args.external_flow_root, "precomputed flow directory");
  mine->add_option("--external-embeddings", mine_args.external_embeddings,
                   "precomputed embedding file");
  mine->add_flag("--no-resize", mine_args.no_resize, "export patches at native crop size");
  mine->add_flag("--include-seed-term", mine_args.include_seed_term,
                 "count the seed itself in cluster scores");

  std::string synth_spec;
  std::string synth_out;
  CLI::App* synth = app.add_subcommand("synth", "render synthetic videos with ground truth");
  synth->add_option("--spec", synth_spec, "JSON spec of videos to render")->required();
  synth->add_option("--out", synth_out, "corpus output root")->required();

  std::string eval_manifest;
  std::string eval_gt;
  std::string eval_out;
  CLI::App* eval = app.add_subcommand("eval", "score a mined manifest against ground truth");
  eval->add_option("--manifest", eval_manifest, "mined manifest.jsonl")->required();
  eval->add_option("--gt", eval_gt, "ground-truth corpus root")->required();
  eval->add_option("--out", eval_out, "write metrics as JSON");

  std::string probe_dataset;
  std::string probe_report;
  patchmine::ProbeParams probe_params;
  CLI::App* probe = app.add_subcommand("probe", "fit a linear classifier on a mined dataset");
  probe->add_option("--dataset", probe_dataset, "dataset root with labels.txt")->required();
  probe->add_option("--seed", probe_params.seed, "split seed");
  probe->add_option("--epochs", probe_params.epochs, "gradient-descent epochs");
  probe->add_option("--split", probe_params.split_ratio, "train fraction");
  probe->add_option("--lr", probe_params.learning_rate, "learning rate");
  probe->add_option("--l2", probe_params.l2, "L2 penalty");
  probe->add_flag("--shuffle-labels", probe_params.shuffle_labels, "chance-level control");
  probe->add_option("--report", probe_report, "write the result line to a file");

  try {
    app.parse(argc, argv);
    if (mine->parsed()) return run_mine_command(mine_args);
    if (synth->parsed()) return run_synth_command(synth_spec, synth_out);
    if (eval->parsed()) return run_eval_command(eval_manifest, eval_gt, eval_out);
    if (probe->parsed()) return run_probe_command(probe_dataset, probe_params, probe_report);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const patchmine::NoOutputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoOutput;
  } catch (const patchmine::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
