#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "commands.hpp"
#include "support.hpp"

namespace ck = cubekit;
using K = ck::PropertyKind;

namespace {

const ck::ImageSize kImage{672, 672};
const ck::CodecProfile kPretrain = ck::CodecProfile::pretrain(kImage);

ck::ObjectRecord full_object() {
  ck::ObjectRecord o;
  o.id = "1";
  o.category = "chair";
  o.attributes = {"wooden"};
  o.box3d = ck::Box3D{300, 400, 3.2, 0.5, 0.9, 0.5, 2.0, 0.1, 0.05};
  o.box2d = ck::Box2D{250, 330, 350, 470};
  return o;
}

bool has_pair(const std::vector<ck::TaskPair>& v, K q, K a) {
  return std::find(v.begin(), v.end(), ck::TaskPair{q, a}) != v.end();
}

std::optional<ck::LabelKind> answer_kind(const std::string& text, const ck::CodecProfile& p) {
  const auto labels = ck::extract_labels(text, p);
  if (labels.size() != 1 || labels[0].begin != 0 || labels[0].end != text.size()) return std::nullopt;
  return labels[0].kind;
}

} // namespace

TEST(Templates, DataFileMatchesBuiltin) {
  EXPECT_EQ(ck::test::slurp(ck::test::source_dir() / "data" / "templates.tsv"),
            std::string(ck::kDefaultTemplates));
}

TEST(Templates, TwoPerEnumerablePair) {
  const auto& bank = ck::TemplateBank::builtin();
  ck::ObjectProperties all;
  all.caption = "x";
  all.point2d = ck::Point2D{1, 1};
  all.box2d = ck::Box2D{0, 0, 2, 2};
  all.depth = 3;
  all.point3d = ck::Point3D{1, 1, 3};
  all.box3d = ck::Box3D{1, 1, 3, 1, 1, 1, 0, 0, 0};
  const auto tasks = ck::enumerate_tasks(all);
  EXPECT_EQ(tasks.size(), 20u);
  for (const auto& t : tasks) EXPECT_GE(bank.for_pair(t).size(), 2u) << ck::pair_name(t);
}

TEST(Templates, ParseErrors) {
  EXPECT_THROW(ck::TemplateBank::parse("a\tcaption->box2d\tno placeholder"), ck::ConfigError);
  EXPECT_THROW(ck::TemplateBank::parse("a\tcaption->box2d\t<caption> <caption>"), ck::ConfigError);
  EXPECT_THROW(ck::TemplateBank::parse("a\tbox2d->caption\tbox <caption>"), ck::ConfigError);
  EXPECT_THROW(ck::TemplateBank::parse("a\tdepth->box2d\t<label>"), ck::ConfigError);
  EXPECT_THROW(ck::TemplateBank::parse("a\tcaption-box2d\t<caption>"), ck::ConfigError);
  EXPECT_THROW(ck::TemplateBank::parse("just one field"), ck::ConfigError);
  const auto bank = ck::TemplateBank::parse("# c\n\na\tbox2d->caption\tName <label>\n");
  EXPECT_EQ(bank.size(), 1u);
  EXPECT_THROW(bank.for_pair({K::caption, K::box3d}), ck::ConfigError);
}

TEST(Tasks, TwoDOnlyObject) {
  ck::ObjectRecord o;
  o.category = "dog";
  o.box2d = ck::Box2D{10, 10, 50, 50};
  const auto tasks = ck::enumerate_tasks(o, ck::test::virtual_cam(), true);
  for (const auto& t : tasks) {
    EXPECT_NE(t.answer, K::box3d);
    EXPECT_NE(t.answer, K::point3d);
    EXPECT_NE(t.answer, K::depth);
  }
  EXPECT_TRUE(has_pair(tasks, K::caption, K::box2d));
  EXPECT_TRUE(has_pair(tasks, K::box2d, K::point2d));
  EXPECT_EQ(tasks.size(), 6u);
}

TEST(Tasks, ThreeDObjectDecomposes) {
  const auto o = full_object();
  const auto tasks = ck::enumerate_tasks(o, ck::test::virtual_cam(), true);
  EXPECT_TRUE(has_pair(tasks, K::caption, K::depth));
  EXPECT_TRUE(has_pair(tasks, K::caption, K::box3d));
  EXPECT_TRUE(has_pair(tasks, K::box2d, K::box3d));
  EXPECT_FALSE(has_pair(tasks, K::box3d, K::depth));
  EXPECT_FALSE(has_pair(tasks, K::box3d, K::point3d));
  for (const auto& t : tasks) EXPECT_NE(t.question, t.answer);
}

TEST(Tasks, WithoutCaptionOrCategory) {
  auto o = full_object();
  o.category.clear();
  o.attributes.clear();
  for (const auto& t : ck::enumerate_tasks(o, ck::test::virtual_cam(), true)) {
    EXPECT_NE(t.question, K::caption);
    EXPECT_NE(t.answer, K::caption);
  }
  o.category = "chair";
  EXPECT_TRUE(has_pair(ck::enumerate_tasks(o, ck::test::virtual_cam(), true), K::caption, K::box2d));
}

TEST(Tasks, Stage1TwoDOnlySourcesHaveNo3d) {
  ck::SceneRecord s;
  s.stage1_2d_only = true;
  EXPECT_FALSE(ck::allows_3d(s, 1));
  EXPECT_TRUE(ck::allows_3d(s, 2));
  const auto tasks = ck::enumerate_tasks(full_object(), ck::test::virtual_cam(), false);
  for (const auto& t : tasks) {
    EXPECT_NE(t.answer, K::box3d);
    EXPECT_NE(t.answer, K::depth);
  }
}

TEST(Properties, DerivationOrder) {
  auto o = full_object();
  auto p = ck::resolve_properties(o, ck::test::virtual_cam(), true);
  EXPECT_EQ(*p.point2d, (ck::Point2D{300, 400}));
  EXPECT_EQ(*p.depth, 3.2);
  o.box3d.reset();
  p = ck::resolve_properties(o, ck::test::virtual_cam(), true);
  EXPECT_EQ(*p.point2d, (ck::Point2D{300, 400}));
  o = full_object();
  o.box2d.reset();
  p = ck::resolve_properties(o, ck::test::virtual_cam(), true);
  ASSERT_TRUE(p.box2d);
  EXPECT_EQ(*p.box2d, ck::project_box3d_to_box2d(*o.box3d, ck::test::virtual_cam(), true));
}

TEST(BuildQa, EmbedsValuesAndIsDeterministic) {
  const auto p = ck::resolve_properties(full_object(), ck::test::virtual_cam(), true);
  const auto& bank = ck::TemplateBank::builtin();
  ck::Rng r1(1), r2(1);
  const auto qa = ck::build_qa(p, {K::caption, K::box3d}, bank, kPretrain, r1);
  EXPECT_EQ(qa, ck::build_qa(p, {K::caption, K::box3d}, bank, kPretrain, r2));
  EXPECT_NE(qa.question.find("a wooden chair"), std::string::npos);
  EXPECT_EQ(qa.answer, ck::render_label(*p.box3d, kPretrain));
  EXPECT_EQ(ck::parse_bins(qa.answer).size(), 9u);

  const auto inv = ck::build_qa(p, {K::box2d, K::caption}, bank, kPretrain, r1);
  EXPECT_NE(inv.question.find(ck::render_label(*p.box2d, kPretrain)), std::string::npos);
  EXPECT_EQ(inv.answer, "a wooden chair");
  EXPECT_THROW(ck::build_qa(ck::ObjectProperties{}, {K::box2d, K::caption}, bank, kPretrain, r1),
               ck::NotApplicableError);
}

TEST(BuildQa, TemplatesSampledUniformly) {
  const auto p = ck::resolve_properties(full_object(), ck::test::virtual_cam(), true);
  ck::Rng rng(9);
  std::set<std::string> questions;
  for (int i = 0; i < 200; ++i)
    questions.insert(ck::build_qa(p, {K::caption, K::box3d}, ck::TemplateBank::builtin(), kPretrain, rng).question);
  EXPECT_EQ(questions.size(), ck::TemplateBank::builtin().for_pair({K::caption, K::box3d}).size());
}

TEST(Vcot, TwoDBeforeThreeD) {
  ck::Rng rng(2);
  const auto o = full_object();
  const auto turns = ck::build_vcot(o, ck::test::virtual_cam(), ck::TemplateBank::builtin(), kPretrain, rng);
  ASSERT_EQ(turns.size(), 4u);
  EXPECT_EQ(turns[0].role, ck::Role::user);
  EXPECT_EQ(turns[1].role, ck::Role::assistant);
  EXPECT_EQ(turns[2].role, ck::Role::user);
  EXPECT_EQ(turns[3].role, ck::Role::assistant);
  EXPECT_EQ(ck::parse_bins(turns[1].text).size(), 4u);
  EXPECT_EQ(ck::parse_bins(turns[3].text).size(), 9u);
  EXPECT_EQ(turns[1].text, ck::render_label(*o.box2d, kPretrain));
  auto missing = o;
  missing.box3d.reset();
  EXPECT_THROW(ck::build_vcot(missing, ck::test::virtual_cam(), ck::TemplateBank::builtin(), kPretrain, rng),
               ck::NotApplicableError);
}

TEST(Specialist, HeaderCapAndOrder) {
  std::mt19937_64 gen(3);
  std::vector<ck::Candidate> c;
  for (int i = 0; i < 45; ++i) c.push_back({ck::test::random_box(gen, false), i * 0.01});
  const auto t = ck::build_specialist_prompt(c, kPretrain);
  EXPECT_EQ(t.role, ck::Role::system);
  std::vector<std::string> lines;
  std::istringstream in(t.text);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 31u);
  EXPECT_EQ(lines[0], ck::kSpecialistHeader);
  EXPECT_EQ(lines[1], ck::render_label(c[44].box, kPretrain));
  EXPECT_EQ(lines[30], ck::render_label(c[15].box, kPretrain));

  EXPECT_EQ(ck::build_specialist_prompt({}, kPretrain).text, ck::kSpecialistHeader);

  std::vector<ck::Candidate> unscored{{c[0].box, std::nullopt}, {c[1].box, 0.9}};
  const auto u = ck::build_specialist_prompt(unscored, kPretrain);
  EXPECT_EQ(u.text, std::string(ck::kSpecialistHeader) + "\n" + ck::render_label(c[0].box, kPretrain) +
                        "\n" + ck::render_label(c[1].box, kPretrain));

  auto far = c[0];
  far.box.z = 1000;
  EXPECT_EQ(ck::build_specialist_prompt({far}, kPretrain).text, ck::kSpecialistHeader);
}

TEST(Indoor, LocationPrompts) {
  const auto cam = ck::test::virtual_cam();
  ck::ObjectRecord o;
  o.category = "chair";
  o.box3d = ck::Box3D{336, 336, 0.5, 0.4, 0.4, 0.4, 0, 0, 0};
  EXPECT_EQ(ck::indoor_location_prompt(o, cam), "chair close to camera");
  o.box3d->z = 1.5;
  EXPECT_EQ(ck::indoor_location_prompt(o, cam), "chair at the center");
  o.box3d->xh = 50;
  EXPECT_EQ(ck::indoor_location_prompt(o, cam), "chair on the left");
  o.box3d->xh = 650;
  EXPECT_EQ(ck::indoor_location_prompt(o, cam), "chair on the right");
  o.box3d->xh = 200;
  EXPECT_EQ(ck::indoor_location_prompt(o, cam), "chair");
  o.box3d->xh = 336;
  o.box3d->w = 1.5;
  EXPECT_EQ(ck::indoor_location_prompt(o, cam), "chair");
  o.box3d->z = 4.0;
  EXPECT_EQ(ck::indoor_location_prompt(o, cam), "chair at the center");
  o.box3d->l = 2.5;
  EXPECT_EQ(ck::size_class(*o.box3d), ck::SizeClass::large);
  EXPECT_EQ(ck::indoor_location_prompt(o, cam), "chair");
  o.box3d.reset();
  EXPECT_THROW(ck::indoor_location_prompt(o, cam), ck::NotApplicableError);
}

TEST(Flip, Eligibility) {
  std::mt19937_64 gen(4);
  auto s = ck::test::random_scene(gen, 5);
  for (auto& o : s.objects) o.orientation_sensitive = false;
  ck::Rng rng(1);
  EXPECT_EQ(ck::maybe_flip(s, rng, 0.0), s);
  EXPECT_EQ(ck::maybe_flip(s, rng, 1.0), ck::horizontal_flip(s));
  s.objects[2].caption = "car on the left";
  s.objects[2].orientation_sensitive = true;
  EXPECT_EQ(ck::maybe_flip(s, rng, 1.0), s);
  s.objects[2].orientation_sensitive = false;
  s.flip_allowed = false;
  EXPECT_EQ(ck::maybe_flip(s, rng, 1.0), s);
}

TEST(Conversation, WellFormedness) {
  ck::Conversation c;
  EXPECT_TRUE(ck::well_formed(c));
  c.turns = {{ck::Role::system, "s"}};
  EXPECT_TRUE(ck::well_formed(c));
  c.turns.push_back({ck::Role::user, "q"});
  EXPECT_FALSE(ck::well_formed(c));
  c.turns.push_back({ck::Role::assistant, "a"});
  EXPECT_TRUE(ck::well_formed(c));
  c.turns.push_back({ck::Role::assistant, "a"});
  c.turns.push_back({ck::Role::user, "q"});
  EXPECT_FALSE(ck::well_formed(c));
  const auto j = ck::to_json(c);
  EXPECT_EQ(ck::conversation_from_json(j), c);
}

TEST(Conversation, BudgetAndCounts) {
  const auto& bank = ck::TemplateBank::builtin();
  ck::SceneRecord one;
  one.intrinsics = ck::test::virtual_cam();
  ck::ObjectRecord o;
  o.id = "p";
  o.point2d = ck::Point2D{10, 10};
  o.category = "dot";
  one.objects.push_back(o);
  ck::Rng rng(1);
  // caption<->point2d are the only pairs
  EXPECT_EQ(ck::build_conversation(one, {}, kPretrain, bank, rng).qa_pairs(), 2u);
  one.objects[0].category.clear();
  EXPECT_EQ(ck::build_conversation(one, {}, kPretrain, bank, rng).qa_pairs(), 0u);

  std::mt19937_64 gen(5);
  const auto big = ck::test::random_scene(gen, 12);
  const auto conv = ck::build_conversation(big, {}, kPretrain, bank, rng);
  EXPECT_EQ(conv.qa_pairs(), 30u);
  EXPECT_TRUE(ck::well_formed(conv));
}

TEST(Conversation, RandomInvariants) {
  const auto& bank = ck::TemplateBank::builtin();
  std::mt19937_64 gen(6);
  for (int i = 0; i < 200; ++i) {
    const auto s = ck::test::random_scene(gen, 1 + gen() % 10, i);
    ck::ConversationOptions opt;
    opt.vcot = i % 2 == 0;
    opt.n_max = 1 + gen() % 30;
    ck::Rng rng(static_cast<std::uint64_t>(i));
    const auto c = ck::build_conversation(s, opt, kPretrain, bank, rng);
    ASSERT_TRUE(ck::well_formed(c));
    ASSERT_LE(c.qa_pairs(), opt.n_max);
    for (std::size_t t = 1; t < c.turns.size(); t += 2) {
      const auto kind = answer_kind(c.turns[t].text, kPretrain);
      if (c.turns[t].text.find('[') == std::string::npos) continue;
      ASSERT_TRUE(kind) << c.turns[t].text;
      const bool caption_question = c.turns[t - 1].text.find('[') == std::string::npos;
      if (opt.vcot && *kind == ck::LabelKind::box3d && caption_question) {
        ASSERT_GE(t, 3u);
        EXPECT_EQ(answer_kind(c.turns[t - 2].text, kPretrain), ck::LabelKind::box2d);
      }
    }
  }
}

TEST(Conversation, SeedDeterminism) {
  std::mt19937_64 gen(7);
  std::vector<ck::SceneRecord> scenes;
  for (int i = 0; i < 40; ++i) scenes.push_back(ck::test::random_scene(gen, 1 + gen() % 8, i));
  cubekit::tools::ConvgenOptions opt;
  opt.seed = 11;
  opt.vcot = true;
  opt.specialist = "gt";
  const auto& bank = ck::TemplateBank::builtin();
  std::vector<std::size_t> idx(scenes.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto run = [&](unsigned workers) {
    return ck::parallel_map(idx, [&](std::size_t i) {
      return ck::to_json(cubekit::tools::generate_conversation(scenes[i], i, opt, bank, nullptr)).dump();
    }, workers);
  };
  const auto a = run(1);
  EXPECT_EQ(a, run(1));
  EXPECT_EQ(a, run(6));
  opt.seed = 12;
  EXPECT_NE(a, run(1));
}
