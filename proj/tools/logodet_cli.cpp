// Batch front end: every subcommand reads one JSON config (plus --set
// overrides), works inside a run directory, and writes a manifest next to
// its outputs. Exit codes: 0 success, 1 bad input/config, 2 runtime failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <string>
#include <vector>

#include "logodet/error.hpp"
#include "logodet/parallel.hpp"
#include "logodet/pipeline.hpp"

using namespace logodet;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string run_dir;
  std::vector<std::string> overrides;
  int threads = -1;          // -1 = take from config
  long long seed = -1;       // -1 = take from config
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "JSON config file");
  cmd->add_option("-o,--out", args.run_dir,
                  "run directory (default: $LOGODET_OUT or ./runs/default)");
  cmd->add_option("--set", args.overrides,
                  "config override, section.key=value (repeatable)");
  cmd->add_option("--threads", args.threads, "worker threads (0 = hardware count)");
  cmd->add_option("--seed", args.seed, "run seed");
}

PipelineConfig resolve_config(CommonArgs& args) {
  PipelineConfig cfg;
  if (!args.config_path.empty()) cfg = load_config(args.config_path);
  apply_overrides(cfg, args.overrides);
  if (args.seed >= 0) cfg.seed = static_cast<uint64_t>(args.seed);
  if (args.threads >= 0) cfg.threads = args.threads;
  cfg.validate();
  if (cfg.threads > 0) set_thread_count(cfg.threads);  // 0 keeps the hardware default
  if (args.run_dir.empty()) {
    const char* env = std::getenv("LOGODET_OUT");
    args.run_dir = env && *env ? env : "runs/default";
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"logo detection pipeline"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string split = "test";
  std::string stats_split;
  std::string sweep_axis = "eval_iou";
  std::vector<double> sweep_values;
  bool compressed = false;

  CLI::App* c_synth = app.add_subcommand("synth", "generate the synthetic dataset");
  add_common(c_synth, args);

  CLI::App* c_split = app.add_subcommand("split", "partition the dataset into train/val/test");
  add_common(c_split, args);

  CLI::App* c_stats = app.add_subcommand("stats", "print dataset statistics");
  add_common(c_stats, args);
  c_stats->add_option("--split", stats_split, "train, val, test, or empty for all");

  CLI::App* c_propose = app.add_subcommand("propose", "selective-search region proposals");
  add_common(c_propose, args);
  c_propose->add_option("--split", split, "dataset split (default test)");

  CLI::App* c_train = app.add_subcommand("train", "train the detector on the train split");
  add_common(c_train, args);

  CLI::App* c_detect = app.add_subcommand("detect", "run the detector over a split");
  add_common(c_detect, args);
  c_detect->add_option("--split", split, "dataset split (default test)");
  c_detect->add_flag("--compressed", compressed, "use the SVD-compressed checkpoint");

  CLI::App* c_compress = app.add_subcommand("compress", "factor FC trunk layers via SVD");
  add_common(c_compress, args);

  CLI::App* c_evaluate = app.add_subcommand("evaluate", "score detections against ground truth");
  add_common(c_evaluate, args);
  c_evaluate->add_option("--split", split, "dataset split (default test)");
  c_evaluate->add_flag("--compressed", compressed, "evaluate the compressed model's detections");

  CLI::App* c_compare =
      app.add_subcommand("compare-compressed", "dense vs compressed model comparison");
  add_common(c_compare, args);
  c_compare->add_option("--split", split, "dataset split (default test)");

  CLI::App* c_sweep = app.add_subcommand("sweep", "metric table over one pipeline axis");
  add_common(c_sweep, args);
  c_sweep->add_option("--axis", sweep_axis,
                      "roi_count | train_iterations | train_fraction | eval_iou");
  c_sweep->add_option("--values", sweep_values, "ascending axis values")->required();

  CLI::App* c_bench = app.add_subcommand("benchmark", "per-stage timing report");
  add_common(c_bench, args);

  CLI11_PARSE(app, argc, argv);

  try {
    PipelineConfig cfg = resolve_config(args);
    const std::string& run = args.run_dir;

    if (c_synth->parsed()) {
      Dataset ds = cmd_synth(cfg, run);
      DatasetStats st = dataset_stats(ds);
      std::printf("synth: %d images, %d objects under %s\n", st.num_images, st.num_objects,
                  dataset_dir(run).c_str());
    } else if (c_split->parsed()) {
      cmd_split(cfg, run);
      std::printf("split: wrote annotations_{train,val,test}.jsonl under %s\n",
                  dataset_dir(run).c_str());
    } else if (c_stats->parsed()) {
      DatasetStats st = cmd_stats(cfg, run, stats_split);
      std::printf("images %d\nobjects %d\nmean_width %.2f\nmean_height %.2f\n", st.num_images,
                  st.num_objects, st.mean_width, st.mean_height);
      for (size_t c = 1; c < st.per_class_objects.size(); ++c)
        std::printf("class_%zu_objects %d\n", c, st.per_class_objects[c]);
      for (size_t b = 0; b < st.per_brand_images.size(); ++b)
        std::printf("brand_%zu_images %d\n", b, st.per_brand_images[b]);
    } else if (c_propose->parsed()) {
      ProposeResult r = cmd_propose(cfg, run, split);
      std::printf("propose[%s]: recall %.4f at IoU %.2f, %.1f boxes/image\n", split.c_str(),
                  r.recall, cfg.eval_iou, r.mean_boxes);
    } else if (c_train->parsed()) {
      TrainResult r = cmd_train(cfg, run);
      double last = std::numeric_limits<double>::quiet_NaN();
      for (size_t i = r.loss_trace.size(); i > 0; --i)
        if (!std::isnan(r.loss_trace[i - 1])) {
          last = r.loss_trace[i - 1];
          break;
        }
      std::printf("train: %zu iterations, final loss %.4f, %d skipped minibatches\n",
                  r.loss_trace.size(), last, r.skipped_minibatches);
    } else if (c_detect->parsed()) {
      DetectResult r = cmd_detect(cfg, run, split, compressed);
      size_t dets = 0;
      for (const auto& [image, d] : r.detections) dets += d.size();
      std::printf("detect[%s%s]: %zu detections over %d images, %d backbone passes\n",
                  split.c_str(), compressed ? ", compressed" : "", dets, r.images,
                  r.backbone_passes);
    } else if (c_compress->parsed()) {
      CompressResult r = cmd_compress(cfg, run);
      std::printf("compress: ranks");
      for (int t : r.ranks) std::printf(" %d", t);
      std::printf(", FC flops %llu -> %llu (%.1f%%)\n",
                  static_cast<unsigned long long>(r.flops_dense),
                  static_cast<unsigned long long>(r.flops_compressed),
                  100.0 * static_cast<double>(r.flops_compressed) /
                      static_cast<double>(r.flops_dense));
    } else if (c_evaluate->parsed()) {
      EvalSummary s = cmd_evaluate(cfg, run, split, compressed);
      std::printf(
          "evaluate[%s%s]: mAP %.4f at IoU %.2f, brand accuracy micro %.4f macro %.4f, AUC "
          "%.4f\n",
          split.c_str(), compressed ? ", compressed" : "", s.map, cfg.eval_iou, s.brand_micro,
          s.brand_macro, s.auc);
    } else if (c_compare->parsed()) {
      CompressionComparison r = compare_compressed(cfg, run, split);
      std::printf(
          "compare: argmax agreement %.4f over %zu RoIs, mAP %.4f -> %.4f, FC %.2f -> %.2f "
          "us/RoI\n",
          r.argmax_agreement, r.rois_compared, r.map_dense, r.map_compressed, r.fc_us_dense,
          r.fc_us_compressed);
    } else if (c_sweep->parsed()) {
      SweepTable t = cmd_sweep(cfg, run, sweep_axis_from_name(sweep_axis), sweep_values);
      for (const SweepRow& row : t.rows)
        std::printf("%s=%.4f: mAP %.4f, accuracy micro %.4f, AUC %.4f, recall %.4f\n",
                    sweep_axis.c_str(), row.value, row.map, row.brand_micro, row.auc, row.recall);
    } else if (c_bench->parsed()) {
      BenchmarkReport r = cmd_benchmark(cfg, run);
      std::printf("benchmark on %s\n", r.machine.c_str());
      std::printf("  %d images, %.0f RoIs/image\n", r.images, r.mean_rois);
      std::printf("  proposal          %8.1f ms (median %8.1f)\n", r.proposal.mean_ms,
                  r.proposal.median_ms);
      std::printf("  network shared    %8.1f ms (median %8.1f)\n", r.network_shared.mean_ms,
                  r.network_shared.median_ms);
      std::printf("  network per-region%8.1f ms (median %8.1f)\n", r.network_per_region.mean_ms,
                  r.network_per_region.median_ms);
      std::printf("  post              %8.1f ms (median %8.1f)\n", r.post.mean_ms,
                  r.post.median_ms);
      std::printf("  per-region / shared ratio %.2f\n", r.mode_time_ratio);
    }
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const InvalidFractions& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const Error& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return 2;
  }
  return 0;
}
