// cubekit: dataset standardization, conversation generation, association,
// evaluation and token render/parse from the command line.

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "commands.hpp"

namespace ck = cubekit;
namespace ct = cubekit::tools;

int main(int argc, char** argv) {
  CLI::App app{"cubekit: 3D grounding data and evaluation tools"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with option defaults");

  const unsigned env_workers = ck::default_workers();
  std::string size_text = "672x672";

  ct::StandardizeOptions st;
  st.workers = env_workers;
  std::string st_manifest, st_out, st_stats, st_epoch;
  auto* standardize = app.add_subcommand("standardize", "Ingest sources and move to the virtual camera");
  standardize->add_option("manifest", st_manifest, "Dataset manifest (INI)")->required()->check(CLI::ExistingFile);
  standardize->add_option("--out", st_out, "Scene JSONL output")->required();
  standardize->add_option("--stats", st_stats, "Stats JSON output (default: stderr)");
  standardize->add_option("--f-virtual", st.f_virtual, "Virtual focal length")->capture_default_str();
  standardize->add_option("--size", size_text, "Target image size WxH")->capture_default_str();
  standardize->add_option("--profile", st.profile, "Codec profile")
      ->check(CLI::IsMember({"pretrain", "finetune"}))->capture_default_str();
  standardize->add_option("--seed", st.seed, "Global seed")->capture_default_str();
  standardize->add_option("--stage", st.stage, "Write an epoch sample for stage 1 or 2")
      ->check(CLI::Range(0, 2));
  standardize->add_option("--epoch-out", st_epoch, "Epoch sample JSONL (default: <out>.epoch.jsonl)");
  standardize->add_option("--workers", st.workers, "Worker threads (env CUBEKIT_WORKERS)");

  ct::ConvgenOptions cg;
  cg.workers = env_workers;
  std::string cg_scenes, cg_out, cg_templates;
  auto* convgen = app.add_subcommand("convgen", "Generate instruction conversations");
  convgen->add_option("scenes", cg_scenes, "Standardized scene JSONL")->required()->check(CLI::ExistingFile);
  convgen->add_option("--out", cg_out, "Conversation JSONL output")->required();
  convgen->add_option("--n-max", cg.n_max, "QA pairs per conversation")->capture_default_str();
  convgen->add_flag("--vcot", cg.vcot, "Expand caption->box3d into a reasoning chain");
  convgen->add_option("--specialist", cg.specialist, "none | gt | file=<candidate JSONL>")->capture_default_str();
  convgen->add_option("--specialist-prob", cg.specialist_prob, "Chance of a GT specialist prompt")
      ->check(CLI::Range(0.0, 1.0))->capture_default_str();
  convgen->add_option("--flip-prob", cg.flip_prob, "Horizontal flip probability")
      ->check(CLI::Range(0.0, 1.0))->capture_default_str();
  convgen->add_option("--stage", cg.stage, "Training stage")->check(CLI::Range(1, 2))->capture_default_str();
  convgen->add_option("--profile", cg.profile, "Codec profile")
      ->check(CLI::IsMember({"pretrain", "finetune"}))->capture_default_str();
  convgen->add_option("--templates", cg_templates, "Template TSV (default: built-in)");
  convgen->add_option("--top-k", cg.top_k, "Specialist prompt size")->capture_default_str();
  convgen->add_option("--seed", cg.seed, "Global seed")->capture_default_str();
  convgen->add_option("--workers", cg.workers, "Worker threads (env CUBEKIT_WORKERS)");

  ct::AssociateOptions as;
  std::string as_labels, as_boxes, as_out;
  auto* associate = app.add_subcommand("associate", "Match 2D labels to projected 3D boxes");
  associate->add_option("labels2d", as_labels, "2D label JSONL")->required()->check(CLI::ExistingFile);
  associate->add_option("boxes3d", as_boxes, "3D box JSONL")->required()->check(CLI::ExistingFile);
  associate->add_option("--out", as_out, "Association JSONL output")->required();
  associate->add_option("--iou-threshold", as.threshold, "Minimum IoU (exclusive)")->capture_default_str();

  ct::EvalOptions ev;
  std::string ev_preds, ev_gts, ev_a, ev_b, ev_out;
  auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
  eval->add_option("preds", ev_preds, "Prediction JSONL")->required()->check(CLI::ExistingFile);
  eval->add_option("gts", ev_gts, "Ground truth JSONL")->required()->check(CLI::ExistingFile);
  eval->add_option("--metrics", ev.metrics, "ap2d, bev, 3d, indoor")->delimiter(',');
  eval->add_option("--profile-a", ev_a, "Threshold profile A (JSON)")->check(CLI::ExistingFile);
  eval->add_option("--profile-b", ev_b, "Threshold profile B (JSON)")->check(CLI::ExistingFile);
  eval->add_flag("--indoor", ev.indoor, "Also report indoor mAP");
  eval->add_option("--codec-profile", ev.codec_profile, "Codec profile of prediction text")
      ->check(CLI::IsMember({"pretrain", "finetune"}))->capture_default_str();
  eval->add_option("--size", size_text, "Image size WxH")->capture_default_str();
  eval->add_option("--f-virtual", ev.f_virtual, "Virtual focal length")->capture_default_str();
  eval->add_option("--out", ev_out, "Report path (default: stdout)");

  std::string codec_profile = "finetune", parse_kind;
  auto* render = app.add_subcommand("render", "Label JSON lines on stdin to tokens");
  render->add_option("--profile", codec_profile, "Codec profile")
      ->check(CLI::IsMember({"pretrain", "finetune"}))->capture_default_str();
  render->add_option("--size", size_text, "Image size WxH")->capture_default_str();
  auto* parse = app.add_subcommand("parse", "Token lines on stdin to label JSON");
  parse->add_option("--kind", parse_kind, "Label kind")->required()
      ->check(CLI::IsMember({"point2d", "box2d", "point3d", "box3d", "depth", "caption"}));
  parse->add_option("--profile", codec_profile, "Codec profile")
      ->check(CLI::IsMember({"pretrain", "finetune"}))->capture_default_str();
  parse->add_option("--size", size_text, "Image size WxH")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ct::kExitUsage;
  }

  try {
    const ck::ImageSize size = ct::parse_size(size_text);
    if (*standardize) {
      st.manifest = st_manifest;
      st.out = st_out;
      st.size = size;
      if (!st_stats.empty()) st.stats_out = st_stats;
      if (!st_epoch.empty()) st.epoch_out = st_epoch;
      return ct::cmd_standardize(st, std::cerr);
    }
    if (*convgen) {
      cg.scenes = cg_scenes;
      cg.out = cg_out;
      if (!cg_templates.empty()) cg.templates = cg_templates;
      return ct::cmd_convgen(cg, std::cerr);
    }
    if (*associate) {
      as.labels2d = as_labels;
      as.boxes3d = as_boxes;
      as.out = as_out;
      return ct::cmd_associate(as, std::cerr);
    }
    if (*eval) {
      ev.preds = ev_preds;
      ev.gts = ev_gts;
      ev.size = size;
      if (!ev_a.empty()) ev.profile_a = ev_a;
      if (!ev_b.empty()) ev.profile_b = ev_b;
      if (!ev_out.empty()) ev.out = ev_out;
      return ct::cmd_eval(ev, std::cout, std::cerr);
    }
    const auto profile = ck::CodecProfile::named(codec_profile, size);
    if (*render) return ct::cmd_render(std::cin, std::cout, std::cerr, profile);
    if (*parse) return ct::cmd_parse(std::cin, std::cout, *ck::kind_from_name(parse_kind), profile);
  } catch (const ck::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return ct::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ct::kExitData;
  }
  return ct::kExitUsage;
}
