#include <cmath>
#include <fstream>
#include <set>

#include "attiqa/attribute.hpp"
#include "attiqa/config.hpp"
#include "attiqa/error.hpp"
#include "attiqa/hashing.hpp"
#include "attiqa/image.hpp"
#include "attiqa/manifest.hpp"
#include "attiqa/synthetic.hpp"
#include "doctest.h"
#include "support/tempdir.hpp"

using namespace attiqa;

TEST_CASE("attributes keep canonical order and names") {
  CHECK(kNumAttributes == 5);
  CHECK(to_string(kAttributes[0]) == "sharpness");
  CHECK(to_string(kAttributes[4]) == "noisiness");
  for (Attribute a : kAttributes) CHECK(parse_attribute(to_string(a)) == a);
  CHECK_FALSE(try_parse_attribute("glossiness").has_value());
  CHECK_THROWS_AS(parse_attribute("glossiness"), ValidationError);
}

TEST_CASE("raster invariants") {
  CHECK_THROWS_AS(ImageRaster("x", 4, 16), ValidationError);
  std::vector<double> px(8 * 8 * 3, 0.5);
  px[5] = 1.5;
  CHECK_THROWS_AS(ImageRaster("x", 8, 8, px), ValidationError);
  px[5] = std::nan("");
  CHECK_THROWS_AS(ImageRaster("x", 8, 8, px), ValidationError);
  px[5] = 0.25;
  ImageRaster ok("x", 8, 8, px);
  CHECK(ok.at(0, 1, 2) == doctest::Approx(0.25));
}

TEST_CASE("luma uses Rec.601 weights") {
  ImageRaster img("x", 8, 8);
  img.at(0, 0, 0) = 1.0;
  img.at(0, 1, 1) = 1.0;
  img.at(0, 2, 2) = 1.0;
  const auto y = luma(img);
  CHECK(y[0] == doctest::Approx(0.299));
  CHECK(y[1] == doctest::Approx(0.587));
  CHECK(y[2] == doctest::Approx(0.114));
}

TEST_CASE("resize and crop geometry") {
  const ImageRaster img = synthetic::base_content(3, 40);
  const ImageRaster wide = resize_bilinear(img, 40, 60);
  const ImageRaster r = resize_short_edge(wide, 20);
  CHECK(r.height() == 20);
  CHECK(r.width() == 30);
  CHECK(resize_short_edge(img, 40).same_pixels(img));
  const ImageRaster c = crop(img, 5, 7, 10, 12);
  CHECK(c.height() == 10);
  CHECK(c.width() == 12);
  CHECK(c.at(0, 0, 1) == img.at(5, 7, 1));
  CHECK(c.at(9, 11, 2) == img.at(14, 18, 2));
  CHECK_THROWS_AS(crop(img, 35, 0, 10, 10), ValidationError);
  const ImageRaster cc = center_crop(img, 20);
  CHECK(cc.at(0, 0, 0) == img.at(10, 10, 0));

  // Constant images stay constant under resampling.
  ImageRaster flat("f", 16, 16);
  for (double& v : flat.pixels()) v = 0.3;
  for (double v : resize_bilinear(flat, 23, 9).pixels()) CHECK(v == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("16-bit PNG round trip is exact on quantized values") {
  TempDir dir;
  ImageRaster img = synthetic::base_content(11, 24);
  for (double& v : img.pixels()) v = std::round(v * 65535.0) / 65535.0;
  save_png(img, dir / "a.png");
  const ImageRaster back = load_png(dir / "a.png", "a");
  CHECK(back.id() == "a");
  CHECK(back.same_pixels(img));

  save_png(img, dir / "b.png", true);
  const ImageRaster eight = load_png(dir / "b.png");
  for (std::size_t i = 0; i < img.pixels().size(); ++i) {
    CHECK(std::abs(eight.pixels()[i] - img.pixels()[i]) <= 0.5 / 255.0 + 1e-12);
  }
  CHECK_THROWS_AS(load_png(dir / "missing.png"), IoError);
  std::ofstream(dir / "junk.png") << "not a png";
  CHECK_THROWS_AS(load_png(dir / "junk.png"), IoError);
}

TEST_CASE("manifest parsing") {
  const std::string text =
      R"({"image_id": "a", "path": "a.png", "mos": 3.5})"
      "\n\n"
      R"({"image_id": "b", "path": "/abs/b.png", "attributes": {"sharpness": 0.1, "contrast": 0.2, "brightness": 0.3, "colorfulness": 0.4, "noisiness": 0.5}, "split": "test"})"
      "\n";
  const DatasetManifest m = parse_manifest(text, "demo", "/data");
  REQUIRE(m.size() == 2);
  CHECK(m.records[0].mos == 3.5);
  CHECK_FALSE(m.records[0].attribute_scores.has_value());
  CHECK((*m.records[1].attribute_scores)[Attribute::colorfulness] == 0.4);
  CHECK(m.resolve(m.records[0]) == std::filesystem::path("/data/a.png"));
  CHECK(m.resolve(m.records[1]) == std::filesystem::path("/abs/b.png"));
  CHECK(m.has_split_tags());
  CHECK_FALSE(m.all_have_mos());

  const DatasetManifest again = parse_manifest(serialize_manifest(m), "demo", "/data");
  CHECK(again.records == m.records);

  CHECK_THROWS_WITH_AS(parse_manifest(R"({"image_id": "a", "path": "p", "attributes": {"sharpness": 0.1}})", "x", ""),
                       doctest::Contains("partial attribute scores"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_manifest("{\"image_id\": \"a\", \"path\": \"p\"}\n{\"image_id\": \"a\", \"path\": \"q\"}", "x", ""),
                       doctest::Contains("duplicate image_id"), ValidationError);
  CHECK_THROWS_AS(parse_manifest(R"({"image_id": "a", "path": "p", "colour": 1})", "x", ""), ValidationError);
  CHECK_THROWS_AS(parse_manifest(R"({"image_id": "a", "path": "p", "split": "val"})", "x", ""), ValidationError);
  CHECK_THROWS_AS(parse_manifest("{not json", "x", ""), ValidationError);
  CHECK_THROWS_AS(load_manifest("/nonexistent/m.jsonl"), IoError);
}

namespace {

DatasetManifest numbered(std::size_t n) {
  DatasetManifest m;
  m.name = "n";
  for (std::size_t i = 0; i < n; ++i) m.records.push_back({"r" + std::to_string(i), "p", 1.0, {}, {}});
  return m;
}

}  // namespace

TEST_CASE("split sizes, disjointness and determinism") {
  for (std::size_t n : {1u, 2u, 5u, 10u, 11u, 99u, 100u, 1000u}) {
    const DatasetManifest m = numbered(n);
    const auto s = split_dataset(m, 0.8, 42);
    CHECK(s.train.size() == static_cast<std::size_t>(std::floor(0.8 * n + 1e-9)));
    CHECK(s.train.size() + s.test.size() == n);
    std::set<std::string> ids;
    for (const auto& r : s.train.records) ids.insert(r.image_id);
    for (const auto& r : s.test.records) CHECK(ids.insert(r.image_id).second);
    CHECK(ids.size() == n);
    const auto again = split_dataset(m, 0.8, 42);
    CHECK(again.train.records == s.train.records);
  }
  CHECK(split_dataset(numbered(100), 0.29, 1).train.size() == 29);
  CHECK(split_dataset(numbered(100), 0.8, 1).train.records != split_dataset(numbered(100), 0.8, 2).train.records);
  CHECK_THROWS_AS(split_dataset(DatasetManifest{}, 0.8, 0), ValidationError);
  CHECK_THROWS_AS(split_dataset(numbered(10), 1.0, 0), ValidationError);
}

TEST_CASE("split tags are refused unless requested") {
  DatasetManifest m = numbered(6);
  for (std::size_t i = 0; i < 6; ++i) m.records[i].split_tag = i < 4 ? "train" : "test";
  CHECK_THROWS_AS(split_dataset(m, 0.8, 0), ValidationError);
  const auto official = split_dataset(m, 0.8, 0, SplitTagPolicy::use_official);
  CHECK(official.train.size() == 4);
  CHECK(official.test.size() == 2);
  CHECK(split_dataset(m, 0.5, 0, SplitTagPolicy::ignore).train.size() == 3);
}

TEST_CASE("ten split seeds are distinct and reproducible") {
  const auto a = ten_split_seeds(7);
  CHECK(a.size() == 10);
  CHECK(std::set<std::uint64_t>(a.begin(), a.end()).size() == 10);
  CHECK(a == ten_split_seeds(7));
  CHECK(a != ten_split_seeds(8));
}

TEST_CASE("hashing") {
  CHECK(sha256_hex(std::string_view("abc")) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  const unsigned char bytes[] = {'1', '2', '3', '4', '5', '6', '7', '8', '9'};
  CHECK(crc32_of(bytes) == 0xCBF43926u);
  CHECK(mix_seed(1, 2) == mix_seed(1, 2));
  CHECK(mix_seed(1, 2) != mix_seed(1, 3));
}

TEST_CASE("config presets, overrides and validation") {
  const RunConfig full = RunConfig::full();
  CHECK(full.pretrain.margin == 0.1);
  CHECK(full.model.head_hidden == 512);
  CHECK(full.pretrain.batch == 256);
  CHECK(full.pretrain.epochs == 100);
  CHECK(full.pretrain.lr_milestones == std::vector<int>{60, 80});
  CHECK(full.finetune.resize_short == 340);
  CHECK(full.finetune.crop == 320);
  CHECK(full.finetune_lr_for("CLIVE") == 1e-4);
  CHECK(full.finetune_lr_for("koniq") == 5e-5);
  CHECK(full.finetune_lr_for("spaq") == 1e-5);
  full.validate();
  RunConfig::desk().validate();

  const RunConfig round = RunConfig::from_json(full.to_json(), RunConfig::desk());
  CHECK(round.hash() == full.hash());

  const auto j = nlohmann::json::parse(R"({"seed": 9, "pretrain": {"epochs": 3, "lr_milestones": [1]}})");
  const RunConfig c = RunConfig::from_json(j, RunConfig::desk());
  CHECK(c.seed == 9);
  CHECK(c.pretrain.epochs == 3);
  CHECK(c.pretrain.batch == RunConfig::desk().pretrain.batch);
  CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"pretrain": {"epoch": 3}})")), ValidationError);
  CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"pretrain": {"loss": "huber"}})")), ValidationError);

  RunConfig bad = RunConfig::desk();
  bad.pretrain.crop = 100;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = RunConfig::desk();
  bad.pretrain.lr_milestones = {20, 10};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = RunConfig::desk();
  bad.pretrain.margin = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  TempDir dir;
  std::ofstream(dir / "c.json") << R"({"preset": "desk", "seed": 4})";
  const RunConfig loaded = load_run_config(dir / "c.json");
  CHECK(loaded.seed == 4);
  CHECK(loaded.pretrain.crop == RunConfig::desk().pretrain.crop);
  std::ofstream(dir / "d.json") << R"({"preset": "huge"})";
  CHECK_THROWS_AS(load_run_config(dir / "d.json"), ValidationError);

  const RunConfig shipped = load_run_config(std::filesystem::path(ATTIQA_SOURCE_DIR) / "data/configs/full.json");
  CHECK(shipped.hash() == RunConfig::full().hash());
}

TEST_CASE("synthetic dataset writer") {
  TempDir dir;
  synthetic::DatasetOptions o;
  o.name = "tiny";
  o.count = 6;
  o.side = 32;
  o.seed = 3;
  const DatasetManifest m = synthetic::write_dataset(dir.path(), o);
  const DatasetManifest loaded = load_manifest(dir / "tiny.jsonl");
  CHECK(loaded.name == "tiny");
  CHECK(loaded.records == m.records);
  CHECK(loaded.all_have_mos());
  CHECK(loaded.all_have_attribute_scores());
  for (const auto& r : loaded.records) {
    CHECK(*r.mos >= 1.0);
    CHECK(*r.mos <= 5.0);
    const ImageRaster img = load_record_image(loaded, r);
    CHECK(img.height() == 32);
  }
  const DatasetManifest again = synthetic::write_dataset(dir / "again", o);
  CHECK(again.records.front().mos == m.records.front().mos);
}
