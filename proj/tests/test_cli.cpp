#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "labelscale/cli.hpp"
#include "support/reference_tables.hpp"

namespace ls = labelscale;
namespace fs = std::filesystem;
using ls::GrayImage;
using ls::cli::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

GrayImage step(std::size_t w, std::size_t h) {
  GrayImage img(w, h, 0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = w / 2; x < w; ++x) img(x, y) = 255;
  }
  return img;
}

GrayImage rings(std::size_t n) {
  GrayImage img(n, n, 0);
  const double c = double(n) / 2.0;
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double r = std::hypot(double(x) + 0.5 - c, double(y) + 0.5 - c);
      if (r < 0.4 * double(n)) img(x, y) = 128;
      if (r < 0.2 * double(n)) img(x, y) = 255;
    }
  }
  return img;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("labelscale_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return ls::cli::run(args, out_, err_);
  }

  fs::path p(const std::string& rel) const { return root_ / rel; }

  void make_corpus(std::size_t n) {
    ASSERT_EQ(run({"synth", "--out", p("corpus").string(), "--count", std::to_string(n), "--size", "32x32",
                   "--seed", "4"}),
              0)
        << err_.str();
  }

  fs::path root_;
  std::ostringstream out_;
  std::ostringstream err_;
};

}  // namespace

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"frobnicate"}), 2);
  ls::io::write_image(p("a.pgm"), GrayImage(4, 4, 0));
  EXPECT_EQ(run({"resize", p("a.pgm").string(), p("b.pgm").string(), "--size", "4by4"}), 2);
  EXPECT_EQ(run({"resize", p("a.pgm").string(), p("b.pgm").string(), "--size", "8x8", "--kernel", "cubic"}), 2);
  EXPECT_EQ(run({"--help"}), 0);
}

TEST_F(Cli, ResizeNearestDoublesSize) {
  ls::io::write_image(p("in.pgm"), rings(128));
  ASSERT_EQ(run({"resize", p("in.pgm").string(), p("out.pgm").string(), "--size", "256x256"}), 0) << err_.str();
  const auto out = ls::io::read_image(p("out.pgm"));
  EXPECT_EQ(out.width(), 256u);
  EXPECT_EQ(out.height(), 256u);
  EXPECT_TRUE(fs::exists(p("out.pgm.manifest.json")));
}

TEST_F(Cli, IdentityResizeIsPixelIdentical) {
  const auto img = rings(128);
  ls::io::write_image(p("in.png"), img);
  for (const std::string k : {"nearest", "bicubic", "lanczos3"}) {
    ASSERT_EQ(run({"resize", p("in.png").string(), p(k + ".png").string(), "--size", "128x128", "--kernel", k}), 0);
    EXPECT_EQ(ls::io::read_image(p(k + ".png")), img) << k;
  }
}

TEST_F(Cli, BicubicStepCreatesIntermediateValues) {
  ls::io::write_image(p("step.pgm"), step(16, 8));
  ASSERT_EQ(run({"resize", p("step.pgm").string(), p("up.pgm").string(), "--size", "32x16", "--kernel", "bicubic"}), 0);
  const auto h = ls::class_histogram(ls::io::read_image(p("up.pgm")));
  EXPECT_GT(h.bin_count(), 2u);
}

TEST_F(Cli, UnreadableInputNamesTheFile) {
  ls::io::write_text_atomic(p("broken.png"), "garbage");
  EXPECT_EQ(run({"resize", p("broken.png").string(), p("o.png").string(), "--size", "8x8"}), 1);
  EXPECT_NE(err_.str().find("broken.png"), std::string::npos) << err_.str();
}

TEST_F(Cli, MaskResizeStrategies) {
  ls::io::write_image(p("m.png"), rings(40));
  ASSERT_EQ(run({"mask-resize", p("m.png").string(), p("nn.png").string(), "--size", "80x80"}), 0);
  EXPECT_TRUE(ls::audit(ls::io::read_image(p("nn.png")), std::array<ls::Intensity, 3>{0, 128, 255}).is_canonical);

  ASSERT_EQ(run({"mask-resize", p("m.png").string(), p("raw.png").string(), "--size", "80x80", "--kernel", "bicubic"}),
            0);
  EXPECT_FALSE(ls::audit(ls::io::read_image(p("raw.png")), std::array<ls::Intensity, 3>{0, 128, 255}).is_canonical);

  ASSERT_EQ(run({"mask-resize", p("m.png").string(), p("f.png").string(), "--size", "80x80", "--kernel", "bicubic",
                 "--filter", "five-step"}),
            0);
  EXPECT_TRUE(ls::audit(ls::io::read_image(p("f.png")), std::array<ls::Intensity, 3>{0, 128, 255}).is_canonical);
}

TEST_F(Cli, FiveStepOnTwoLabelMasksIsUnsupported) {
  ls::io::write_image(p("m.png"), step(8, 8));
  EXPECT_EQ(run({"mask-resize", p("m.png").string(), p("o.png").string(), "--size", "16x16", "--kernel", "bicubic",
                 "--filter", "five-step", "--labels", "0,255"}),
            2);
  EXPECT_NE(err_.str().find("unsupported"), std::string::npos);
}

TEST_F(Cli, AuditExitCodesAndJson) {
  ls::io::write_image(p("ok.png"), rings(16));
  EXPECT_EQ(run({"audit", p("ok.png").string()}), 0);

  GrayImage bad = rings(16);
  bad(3, 3) = 77;
  bad(4, 3) = 77;
  ls::io::write_image(p("bad.png"), bad);
  EXPECT_EQ(run({"audit", p("ok.png").string(), p("bad.png").string(), "--json", p("a.json").string()}), 1);
  const auto j = json::parse(slurp(p("a.json")));
  EXPECT_FALSE(j["canonical"].get<bool>());
  const auto& extra = j["files"][1]["extra"][0];
  EXPECT_EQ(extra["label"].get<int>(), 77);
  EXPECT_EQ(extra["count"].get<int>(), 2);

  fs::create_directories(p("empty"));
  EXPECT_EQ(run({"audit", p("empty").string()}), 2);
  EXPECT_EQ(run({"audit"}), 2);
}

TEST_F(Cli, EvalIdenticalDirectories) {
  make_corpus(4);
  ASSERT_EQ(run({"eval", p("corpus/masks").string(), p("corpus/masks").string(), "--json", p("e.json").string(),
                 "--csv", p("e.csv").string()}),
            0)
      << err_.str();
  const auto j = json::parse(slurp(p("e.json")));
  EXPECT_EQ(j["global_accuracy"].get<double>(), 1.0);
  for (const auto& r : j["regions"]) {
    EXPECT_EQ(r["accuracy"].get<double>(), 1.0);
    EXPECT_EQ(r["iou"].get<double>(), 1.0);
    EXPECT_EQ(r["mean_bf"].get<double>(), 1.0);
  }
  EXPECT_EQ(j["per_image_dice"].size(), 4u);
  const auto csv = slurp(p("e.csv"));
  EXPECT_EQ(csv.rfind("region,label,accuracy,iou,mean_bf\nRegion1,255,", 0), 0u) << csv;
}

TEST_F(Cli, EvalSwappedClassesScoreZero) {
  fs::create_directories(p("gt"));
  fs::create_directories(p("pred"));
  GrayImage gt(8, 8, 0);
  GrayImage pred(8, 8, 0);
  for (std::size_t y = 0; y < 8; ++y) {
    for (std::size_t x = 0; x < 8; ++x) {
      gt(x, y) = x < 4 ? 128 : 255;
      pred(x, y) = x < 4 ? 255 : 128;
    }
  }
  ls::io::write_image(p("gt/a.png"), gt);
  ls::io::write_image(p("pred/a.png"), pred);
  ASSERT_EQ(run({"eval", p("gt").string(), p("pred").string(), "--json", p("e.json").string()}), 0);
  const auto j = json::parse(slurp(p("e.json")));
  EXPECT_EQ(j["regions"][0]["accuracy"].get<double>(), 0.0);
  EXPECT_EQ(j["regions"][1]["accuracy"].get<double>(), 0.0);
  EXPECT_TRUE(j["regions"][2]["accuracy"].is_null());
  EXPECT_EQ(j["global_accuracy"].get<double>(), 0.0);
}

TEST_F(Cli, EvalUnpairedFileIsNamed) {
  make_corpus(2);
  fs::copy(p("corpus/masks"), p("pred"));
  fs::remove(p("pred/phantom_0001.png"));
  EXPECT_EQ(run({"eval", p("corpus/masks").string(), p("pred").string()}), 1);
  EXPECT_NE(err_.str().find("phantom_0001.png"), std::string::npos) << err_.str();
}

TEST_F(Cli, QuantCompareTablesReproduceTally) {
  ls::io::write_text_atomic(p("tables.csv"), ls::testing::kPublishedTablesCsv);
  ASSERT_EQ(run({"quant-compare", "--tables", p("tables.csv").string(), "--json", p("q.json").string()}), 0)
      << err_.str();
  const auto j = json::parse(slurp(p("q.json")));
  const auto& nets = j["tally"]["networks"];
  EXPECT_EQ(nets[3]["network"], "L256");
  EXPECT_EQ(nets[3]["wins"].get<int>(), 5);
  EXPECT_EQ(nets[3]["percent"].get<double>(), 55.5);
  for (int n = 0; n < 3; ++n) EXPECT_EQ(nets[n]["percent"].get<double>(), 22.2);
  EXPECT_NE(out_.str().find("55.5%"), std::string::npos);
}

TEST_F(Cli, QuantCompareRecords) {
  ls::io::write_text_atomic(p("r.csv"), ls::testing::records_csv(ls::testing::option1_fixture_records()));
  ASSERT_EQ(run({"quant-compare", p("r.csv").string(), "--json", p("q.json").string(), "--csv", p("q.csv").string()}),
            0)
      << err_.str();
  const auto j = json::parse(slurp(p("q.json")));
  EXPECT_EQ(j["tables"][0]["rows"]["scar_ml"]["C128"].get<double>(), 87.5);
  EXPECT_EQ(j["tables"][0]["rows"]["mo_pct"]["N256"].get<double>(), 62.5);
  EXPECT_EQ(j["tally"]["slots"].get<int>(), 9);
  EXPECT_TRUE(fs::exists(p("q.csv")));
}

TEST_F(Cli, QuantCompareIdentityAndMissingManual) {
  ls::io::write_text_atomic(p("same.csv"),
                            "stack_id,method,scar_ml,scar_pct,mo_pct\n"
                            "s1,manual,10,20,1\ns2,manual,5,10,0.5\n"
                            "s1,auto,10,20,1\ns2,auto,5,10,0.5\n");
  ASSERT_EQ(run({"quant-compare", p("same.csv").string(), "--json", p("q.json").string()}), 0) << err_.str();
  const auto j = json::parse(slurp(p("q.json")));
  for (const int t : {1, 2}) {
    for (const char* m : {"scar_ml", "scar_pct", "mo_pct"}) {
      EXPECT_EQ(j["tables"][t]["rows"][m]["auto"].get<double>(), 100.0);
    }
  }
  EXPECT_TRUE(j["tally"].is_null());

  ls::io::write_text_atomic(p("nomanual.csv"), "stack_id,method,scar_ml,scar_pct,mo_pct\ns1,auto,1,1,1\n");
  EXPECT_EQ(run({"quant-compare", p("nomanual.csv").string()}), 2);
  EXPECT_EQ(run({"quant-compare", p("same.csv").string(), "--thresholds", "1,2"}), 2);
  EXPECT_EQ(run({"quant-compare", p("same.csv").string(), "--mode", "closest"}), 2);
  EXPECT_EQ(run({"quant-compare"}), 2);
}

TEST_F(Cli, SplitWritesListsDeterministically) {
  make_corpus(10);
  const std::vector<std::string> args{"split", p("corpus/images").string(), p("corpus/masks").string(), "--out",
                                      p("s1").string(), "--seed", "3"};
  ASSERT_EQ(run(args), 0) << err_.str();
  const auto count = [](const std::string& text) { return std::count(text.begin(), text.end(), '\n'); };
  EXPECT_EQ(count(slurp(p("s1/train.txt"))), 6);
  EXPECT_EQ(count(slurp(p("s1/val.txt"))), 2);
  EXPECT_EQ(count(slurp(p("s1/test.txt"))), 2);

  auto again = args;
  again[4] = p("s2").string();
  ASSERT_EQ(run(again), 0);
  for (const char* f : {"train.txt", "val.txt", "test.txt"}) {
    EXPECT_EQ(slurp(p("s1") / f), slurp(p("s2") / f));
  }
  const auto manifest = json::parse(slurp(p("s1/manifest.json")));
  EXPECT_EQ(manifest["seeds"]["split"].get<int>(), 3);
}

TEST_F(Cli, SplitRejectsUnpairedUnlessAllowed) {
  make_corpus(3);
  fs::remove(p("corpus/masks/phantom_0002.png"));
  EXPECT_EQ(run({"split", p("corpus/images").string(), p("corpus/masks").string(), "--out", p("s").string()}), 1);
  EXPECT_NE(err_.str().find("phantom_0002"), std::string::npos);
  EXPECT_EQ(run({"split", p("corpus/images").string(), p("corpus/masks").string(), "--out", p("s").string(),
                 "--allow-unpaired"}),
            0);
}

TEST_F(Cli, AugmentKeepsMasksCanonical) {
  make_corpus(3);
  ASSERT_EQ(run({"augment", p("corpus/images").string(), p("corpus/masks").string(), "--out", p("aug").string(),
                 "--copies", "2", "--seed", "5"}),
            0)
      << err_.str();
  const auto masks = ls::io::list_images(p("aug/masks"));
  ASSERT_EQ(masks.size(), 6u);
  for (const auto& m : masks) {
    EXPECT_TRUE(ls::audit(ls::io::read_image(m), std::array<ls::Intensity, 3>{0, 128, 255}).is_canonical);
  }
  EXPECT_EQ(run({"augment", p("corpus/images").string(), p("corpus/masks").string(), "--out", p("aug").string(),
                 "--translate", "5,1"}),
            2);
}

TEST_F(Cli, ExportWritesSummaryAndReplays) {
  make_corpus(4);
  ASSERT_EQ(run({"export", p("corpus/images").string(), p("corpus/masks").string(), "--out", p("ex").string(),
                 "--size", "64x64", "--kernel", "lanczos3", "--filter", "five-step"}),
            0)
      << err_.str();
  const auto summary = json::parse(slurp(p("ex/summary.json")));
  EXPECT_EQ(summary["written"].get<int>(), 4);
  EXPECT_EQ(summary["canonical_percent"].get<double>(), 100.0);

  const std::string first_mask = slurp(p("ex/masks/phantom_0002.png"));
  const std::string first_manifest = slurp(p("ex/manifest.json"));
  fs::remove_all(p("ex/masks"));
  ASSERT_EQ(run({"replay", p("ex/manifest.json").string()}), 0) << err_.str();
  EXPECT_EQ(slurp(p("ex/masks/phantom_0002.png")), first_mask);
  EXPECT_EQ(slurp(p("ex/manifest.json")), first_manifest);
}

TEST_F(Cli, ManifestJsonRoundTripsIdempotently) {
  make_corpus(2);
  const auto text = slurp(p("corpus/manifest.json"));
  const auto once = json::parse(text).dump(2) + "\n";
  EXPECT_EQ(once, text);
  EXPECT_EQ(json::parse(once).dump(2) + "\n", once);
  const auto m = json::parse(text);
  EXPECT_EQ(m["command"], "synth");
  EXPECT_EQ(m["seeds"]["synth"].get<int>(), 4);
  EXPECT_EQ(m["version"], ls::cli::kToolVersion);
}

TEST_F(Cli, ReplayRejectsGarbage) {
  ls::io::write_text_atomic(p("m.json"), "{not json");
  EXPECT_EQ(run({"replay", p("m.json").string()}), 1);
  ls::io::write_text_atomic(p("m2.json"), "{\"argv\": [\"replay\", \"x\"]}");
  EXPECT_EQ(run({"replay", p("m2.json").string()}), 2);
}
