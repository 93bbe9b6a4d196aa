#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "support.hpp"

namespace ck = cubekit;
namespace fs = std::filesystem;
using ck::test::fixture;
using ck::test::slurp;

namespace {

class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           ("cubekit_cli_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  static std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

  // Runs the CLI with `args`; returns its exit status.
  int run(const std::string& args, const std::string& prefix = "") const {
    const std::string cmd = prefix + "'" + std::string(CUBEKIT_CLI) + "' " + args + " 2>" +
                            q(dir_ / "stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::size_t lines(const fs::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string l; std::getline(in, l);) n += !l.empty();
    return n;
  }

  static void write(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
  }

  fs::path dir_;
};

} // namespace

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("eval " + q(fixture("eval/preds.jsonl"))), 2);
  EXPECT_EQ(run("eval " + q(fixture("eval/preds.jsonl")) + " " + q(fixture("eval/gts.jsonl")) +
                " --profile-a " + q(path("missing.json"))),
            2);
  EXPECT_EQ(run("eval " + q(fixture("eval/preds.jsonl")) + " " + q(fixture("eval/gts.jsonl")) +
                " --metrics ap2d,bogus"),
            2);
  EXPECT_EQ(run("standardize " + q(fixture("scenes/manifest.ini")) + " --out " + q(path("s.jsonl")) +
                " --size 12"),
            2);
  EXPECT_EQ(run("--help >/dev/null"), 0);
}

TEST_F(Cli, StandardizeFixtureManifest) {
  const std::string base = "standardize " + q(fixture("scenes/manifest.ini")) + " --seed 3 --stage 2";
  ASSERT_EQ(run(base + " --out " + q(path("a.jsonl")) + " --stats " + q(path("a.stats.json"))), 0);
  ASSERT_EQ(run(base + " --workers 4 --out " + q(path("b.jsonl")) + " --stats " + q(path("b.stats.json"))), 0);
  EXPECT_EQ(slurp(path("a.jsonl")), slurp(path("b.jsonl")));
  EXPECT_EQ(slurp(path("a.jsonl.epoch.jsonl")), slurp(path("b.jsonl.epoch.jsonl")));
  const auto st = ck::test::load_json(path("a.stats.json"));
  EXPECT_EQ(st["input_scenes"], 6);
  EXPECT_EQ(lines(path("a.jsonl")), st["input_scenes"].get<std::size_t>() - st["dropped_scenes"].get<std::size_t>());
  EXPECT_EQ(st["removed_objects"], 1);
  EXPECT_EQ(st["removed_by_field"]["box3d.w"], 1);
  EXPECT_EQ(lines(path("a.jsonl.epoch.jsonl")), 11u);
  EXPECT_EQ(st["serialized_fields"].size(), 9u);

  std::ifstream in(path("a.jsonl"));
  const auto scenes = ck::ingest(in, ck::Adapter::native);
  ASSERT_TRUE(scenes.ok());
  for (const auto& s : scenes.scenes) {
    EXPECT_TRUE(s.virtual_camera);
    EXPECT_EQ(s.intrinsics.fx, 512.0);
  }

  ASSERT_EQ(run("standardize " + q(fixture("scenes/manifest.ini")) + " --profile finetune --out " +
                q(path("f.jsonl")) + " --stats " + q(path("f.stats.json"))),
            0);
  EXPECT_EQ(ck::test::load_json(path("f.stats.json"))["serialized_fields"].size(), 7u);
}

TEST_F(Cli, StandardizeReportsIngestErrors) {
  write(path("m.ini"), "[source bad]\npath = " + fixture("scenes/native_bad.jsonl").string() + "\nstage1 = 1\n");
  EXPECT_EQ(run("standardize " + q(path("m.ini")) + " --out " + q(path("o.jsonl")) + " --stats " +
                q(path("st.json"))),
            1);
  EXPECT_EQ(lines(path("o.jsonl")), 2u);
  EXPECT_NE(slurp(path("stderr.txt")).find("line 2"), std::string::npos);
  EXPECT_EQ(ck::test::load_json(path("st.json"))["errors"], 1);
}

TEST_F(Cli, ConvgenCapsAndDeterminism) {
  ASSERT_EQ(run("standardize " + q(fixture("scenes/manifest.ini")) + " --out " + q(path("s.jsonl"))), 0);
  const std::string base = "convgen " + q(path("s.jsonl")) + " --seed 5 --vcot --specialist gt";
  ASSERT_EQ(run(base + " --workers 1 --out " + q(path("a.jsonl"))), 0);
  ASSERT_EQ(run(base + " --workers 5 --out " + q(path("b.jsonl"))), 0);
  ASSERT_EQ(run(base + " --out " + q(path("c.jsonl")), "CUBEKIT_WORKERS=3 "), 0);
  EXPECT_EQ(slurp(path("a.jsonl")), slurp(path("b.jsonl")));
  EXPECT_EQ(slurp(path("a.jsonl")), slurp(path("c.jsonl")));
  ASSERT_EQ(run("convgen " + q(path("s.jsonl")) + " --seed 6 --out " + q(path("d.jsonl"))), 0);
  EXPECT_NE(slurp(path("a.jsonl")), slurp(path("d.jsonl")));

  ASSERT_EQ(run("convgen " + q(path("s.jsonl")) + " --n-max 3 --out " + q(path("n.jsonl"))), 0);
  std::ifstream in(path("n.jsonl"));
  std::size_t count = 0;
  for (std::string l; std::getline(in, l); ++count) {
    const auto c = ck::conversation_from_json(nlohmann::json::parse(l));
    EXPECT_LE(c.qa_pairs(), 3u);
    EXPECT_TRUE(ck::well_formed(c));
  }
  EXPECT_EQ(count, 6u);
}

TEST_F(Cli, ConvgenSpecialistFile) {
  std::mt19937_64 rng(1);
  const auto scene = ck::test::random_scene(rng, 3);
  write(path("s.jsonl"), ck::scene_jsonl_line(scene) + "\n");
  nlohmann::json boxes = nlohmann::json::array();
  for (int i = 0; i < 45; ++i)
    boxes.push_back({{"box3d", ck::to_json(ck::test::random_box(rng, false))}, {"confidence", i / 45.0}});
  write(path("cand.jsonl"), nlohmann::json{{"scene_ref", scene.image_ref}, {"boxes", boxes}}.dump() + "\n");
  ASSERT_EQ(run("convgen " + q(path("s.jsonl")) + " --specialist file=" + q(path("cand.jsonl")) +
                " --out " + q(path("c.jsonl"))),
            0);
  const auto c = ck::conversation_from_json(nlohmann::json::parse(slurp(path("c.jsonl"))));
  ASSERT_FALSE(c.turns.empty());
  EXPECT_EQ(c.turns[0].role, ck::Role::system);
  EXPECT_EQ(std::count(c.turns[0].text.begin(), c.turns[0].text.end(), '\n'), 30);
  EXPECT_EQ(c.turns[0].text.rfind(ck::kSpecialistHeader, 0), 0u);
}

TEST_F(Cli, Associate) {
  const auto cam = ck::test::virtual_cam();
  const ck::Box3D box{300, 350, 15, 1.9, 1.6, 4.4, 0.4, 0, 0};
  const auto label = ck::project_box3d_to_box2d(box, cam, false);
  write(path("l.jsonl"), nlohmann::json{{"scene_ref", "a"}, {"boxes", {ck::to_json(label), {0, 0, 5, 5}}}}.dump() +
                             "\n");
  write(path("b.jsonl"), nlohmann::json{{"scene_ref", "a"}, {"intrinsics", ck::to_json(cam)},
                                        {"boxes", {ck::to_json(box)}}}.dump() + "\n");
  ASSERT_EQ(run("associate " + q(path("l.jsonl")) + " " + q(path("b.jsonl")) + " --out " + q(path("o.jsonl"))), 0);
  const auto j = nlohmann::json::parse(slurp(path("o.jsonl")));
  ASSERT_EQ(j["pairs"].size(), 1u);
  EXPECT_EQ(j["pairs"][0]["label"], 0);
  EXPECT_EQ(j["pairs"][0]["iou"], 1.0);

  write(path("l2.jsonl"), nlohmann::json{{"scene_ref", "zzz"}, {"boxes", nlohmann::json::array()}}.dump() + "\n");
  EXPECT_EQ(run("associate " + q(path("l2.jsonl")) + " " + q(path("b.jsonl")) + " --out " + q(path("o2.jsonl"))), 1);
}

TEST_F(Cli, EvalGoldenReport) {
  const std::string args =
      "eval tests/fixtures/eval/preds.jsonl tests/fixtures/eval/gts.jsonl"
      " --profile-a tests/fixtures/eval/profile_a.json --profile-b tests/fixtures/eval/profile_b.json"
      " --indoor --out " + q(path("report.json"));
  ASSERT_EQ(run(args, "cd " + q(ck::test::source_dir()) + " && "), 0);
  EXPECT_EQ(slurp(path("report.json")), slurp(fixture("eval/golden_report.json")));
}

TEST_F(Cli, EvalGroundTruthSmoke) {
  const auto profile = ck::CodecProfile::finetune({672, 672});
  std::ifstream in(fixture("eval/gts.jsonl"));
  std::ofstream gts(path("g.jsonl")), preds(path("p.jsonl"));
  for (const auto& g : ck::read_gts(in)) {
    if (!g.target.box3d) continue;
    gts << ck::to_json(g).dump() << "\n";
    preds << nlohmann::json{{"sample_id", g.sample_id},
                            {"text", ck::render_label(*g.target.box3d, profile)}}.dump() << "\n";
  }
  gts.close();
  preds.close();
  ASSERT_EQ(run("eval " + q(path("p.jsonl")) + " " + q(path("g.jsonl")) + " --indoor --out " + q(path("r.json"))), 0);
  const auto r = ck::test::load_json(path("r.json"));
  for (const auto& [k, v] : r["metrics"].items()) EXPECT_EQ(v.get<double>(), 100.0) << k;
  EXPECT_EQ(r["parse_failures"], 0);

  write(path("empty.jsonl"), "");
  EXPECT_EQ(run("eval " + q(path("empty.jsonl")) + " " + q(path("g.jsonl"))), 1);
  EXPECT_NE(slurp(path("stderr.txt")).find("align"), std::string::npos);
}

TEST_F(Cli, RenderParseRoundTrip) {
  write(path("labels.jsonl"),
        R"({"kind": "box3d", "value": {"xh": 300, "yh": 350, "z": 15, "w": 1.9, "h": 1.6, "l": 4.4, "r1": 0.4, "r2": 0.1, "r3": 0.2}})"
        "\n"
        R"({"kind": "depth", "value": 1.0})"
        "\n");
  ASSERT_EQ(run("render --profile pretrain < " + q(path("labels.jsonl")) + " > " + q(path("tokens.txt"))), 0);
  const auto tokens = slurp(path("tokens.txt"));
  EXPECT_EQ(tokens.substr(tokens.find('\n') + 1), "[444]\n");
  write(path("depth.txt"), "[444]\n[44]\n");
  EXPECT_EQ(run("parse --kind depth --profile pretrain < " + q(path("depth.txt")) + " > " + q(path("out.jsonl"))), 1);
  std::ifstream in(path("out.jsonl"));
  std::string l1, l2;
  std::getline(in, l1);
  std::getline(in, l2);
  EXPECT_NEAR(nlohmann::json::parse(l1)["value"].get<double>(), 1.0, 1e-12);
  EXPECT_EQ(nlohmann::json::parse(l2)["error"], "parse");
  EXPECT_EQ(nlohmann::json::parse(l2)["offset"], 3);

  write(path("far.jsonl"), R"({"kind": "depth", "value": 500.0})" "\n");
  EXPECT_EQ(run("render --profile finetune < " + q(path("far.jsonl")) + " > /dev/null"), 1);
}
