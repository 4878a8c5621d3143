#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "affgan/core/error.hpp"
#include "affgan/data/fixture.hpp"
#include "affgan/data/imageset.hpp"
#include "affgan/exp/grid.hpp"

using namespace affgan;
using namespace affgan::exp;
using gan::DiscVariant;
using gan::Family;
using gan::ModelSpec;

namespace {

std::filesystem::path temp_dir(const std::string& tag) {
  auto p = std::filesystem::temp_directory_path() /
           ("affgan_grid_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

std::map<std::string, std::string> dir_bytes(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) {
      out[std::filesystem::relative(e.path(), root).string()] = slurp(e.path());
    }
  }
  return out;
}

ModelSpec base_spec() {
  ModelSpec s;
  s.latent_dim = 16;
  s.image_size = 32;
  s.base_width = 8;
  return s;
}

std::string fixture_csv(const std::filesystem::path& dir,
                        const std::string& name, int n, uint64_t seed) {
  data::FixtureOptions opts;
  opts.image_size = 32;
  const std::string manifest =
      data::synth_fixture(n, seed, (dir / "src").string(), opts);
  auto ds = data::build_dataset({manifest}, data::default_scales(),
                                data::CategoryMap::defaults());
  const std::string path = (dir / (name + ".csv")).string();
  data::save_dataset_csv(path, ds);
  return path;
}

train::TrainConfig cell_cfg() {
  train::TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 8;
  cfg.eval_every_epochs = 1;
  cfg.metric_batch = 8;
  cfg.critic_steps = 2;
  return cfg;
}

}  // namespace

TEST_CASE("default roster: twelve cells, ACGAN stays out") {
  auto roster = default_model_roster();
  REQUIRE(roster.size() == 12);
  const std::vector<Family> fams = {Family::DCGAN, Family::CGAN, Family::PAGAN,
                                    Family::WGAN_GP};
  const std::vector<DiscVariant> vars = {
      DiscVariant::BatchNorm, DiscVariant::Dropout, DiscVariant::SpectralNorm};
  for (size_t i = 0; i < roster.size(); ++i) {
    CHECK(roster[i].first == fams[i / 3]);
    CHECK(roster[i].second == vars[i % 3]);
    CHECK(roster[i].first != Family::ACGAN);
  }
}

TEST_CASE("make_cells crosses roster and datasets") {
  auto cells = make_cells(default_model_roster(),
                          {"/data/iaps.csv", "/data/gaped.csv", "/data/mix.csv"},
                          base_spec(), 13);
  REQUIRE(cells.size() == 36);
  CHECK(cells[0].dataset_id == "iaps");
  CHECK(cells[12].dataset_id == "gaped");
  CHECK(cells[24].dataset_id == "mix");
  for (const GridCell& c : cells) {
    if (c.spec.conditional()) {
      CHECK(c.spec.num_classes == 13);
    } else {
      CHECK(c.spec.num_classes == 0);
    }
    CHECK(c.spec.image_size == 32);
  }
}

TEST_CASE("cell seeds: deterministic, distinct, order-aware") {
  const uint64_t a = cell_seed(416, "dcgan_bn", "iaps");
  CHECK(a == cell_seed(416, "dcgan_bn", "iaps"));
  CHECK(a != cell_seed(417, "dcgan_bn", "iaps"));
  CHECK(a != cell_seed(416, "dcgan_dropout", "iaps"));
  CHECK(a != cell_seed(416, "dcgan_bn", "gaped"));
  CHECK(cell_seed(416, "ab", "c") != cell_seed(416, "a", "bc"));
}

TEST_CASE("score table: canonical order, nan for failures, byte-stable") {
  auto dir = temp_dir("scores");
  std::vector<CellResult> rs(3);
  rs[0].model_id = "wgan_gp_sn";
  rs[0].dataset_id = "iaps";
  rs[0].status = "ok";
  rs[0].best_fid = 12.345678;
  rs[0].best_kid = 0.0625;
  rs[1].model_id = "dcgan_bn";
  rs[1].dataset_id = "iaps";
  rs[1].status = "failed: training diverged at epoch 3";
  rs[1].best_fid = std::nan("");
  rs[1].best_kid = std::nan("");
  rs[2].model_id = "dcgan_bn";
  rs[2].dataset_id = "gaped";
  rs[2].status = "ok";
  rs[2].best_fid = 30.0;
  rs[2].best_kid = 0.5;

  const std::string path = (dir / "scores.csv").string();
  write_score_table(path, rs);
  const std::string bytes = slurp(path);
  CHECK(bytes ==
        "model,dataset,best_fid,best_kid\n"
        "dcgan_bn,gaped,30.000000,0.500000\n"
        "dcgan_bn,iaps,nan,nan\n"
        "wgan_gp_sn,iaps,12.345678,0.062500\n");

  write_score_table(path, rs);
  CHECK(slurp(path) == bytes);

  auto back = read_score_table(path);
  REQUIRE(back.size() == 3);
  CHECK(back[0].ok());
  CHECK_FALSE(back[1].ok());
  CHECK(std::isnan(back[1].best_fid));
  CHECK(back[2].model_id == "wgan_gp_sn");
  CHECK(back[2].best_fid == 12.345678);

  std::filesystem::remove_all(dir);
}

TEST_CASE("run_grid: survives a poisoned cell and reports the rest") {
  auto dir = temp_dir("run");
  const std::string csv = fixture_csv(dir, "fixture", 16, 40);
  metrics::StubExtractor stub;

  std::vector<GridCell> cells =
      make_cells({{Family::DCGAN, DiscVariant::Dropout},
                  {Family::WGAN_GP, DiscVariant::SpectralNorm}},
                 {csv}, base_spec(), 13);
  GridCell broken = cells[0];
  broken.dataset_path = (dir / "missing.csv").string();
  broken.dataset_id = "missing";
  cells.push_back(broken);

  const std::string out = (dir / "grid").string();
  auto results = run_grid(cells, cell_cfg(), data::CategoryMap::defaults(),
                          stub, out);
  REQUIRE(results.size() == 3);
  CHECK(results[0].ok());
  CHECK(results[1].ok());
  CHECK_FALSE(results[2].ok());
  CHECK(results[2].status.rfind("failed: ", 0) == 0);
  CHECK(std::isnan(results[2].best_fid));
  CHECK(std::isfinite(results[0].best_fid));
  CHECK(std::filesystem::exists(out + "/scores.csv"));
  CHECK(std::filesystem::exists(out + "/grid_status.csv"));
  CHECK(std::filesystem::exists(results[0].run_dir + "/trajectory.csv"));

  auto table = read_score_table(out + "/scores.csv");
  REQUIRE(table.size() == 3);  // sorted: dcgan_dropout{fixture,missing}, wgan
  CHECK(table[0].model_id == "dcgan_dropout");
  CHECK(table[0].dataset_id == "fixture");
  CHECK(table[0].ok());
  CHECK(table[1].dataset_id == "missing");
  CHECK_FALSE(table[1].ok());
  CHECK(table[2].model_id == "wgan_gp_sn");

  // the report renders every asset and regenerates byte-identically
  const std::string r1 = (dir / "report1").string();
  const std::string r2 = (dir / "report2").string();
  generate_report(out, r1);
  generate_report(out, r2);
  for (const char* f : {"/best_fid_bar.png", "/fid_vs_epoch_fixture.png",
                        "/samples_dcgan_dropout__fixture.png",
                        "/samples_wgan_gp_sn__fixture.png",
                        "/data/scores.csv",
                        "/data/dcgan_dropout__fixture_trajectory.csv",
                        "/data/wgan_gp_sn__fixture_trajectory.csv"}) {
    CHECK(std::filesystem::exists(r1 + f));
  }
  CHECK(dir_bytes(r1) == dir_bytes(r2));

  std::filesystem::remove_all(dir);
}

TEST_CASE("a single grid cell reproduces a direct training run") {
  auto dir = temp_dir("direct");
  const std::string csv = fixture_csv(dir, "fixture", 16, 41);
  metrics::StubExtractor stub;
  train::TrainConfig cfg = cell_cfg();

  auto cells = make_cells({{Family::DCGAN, DiscVariant::Dropout}}, {csv},
                          base_spec(), 13);
  auto results = run_grid(cells, cfg, data::CategoryMap::defaults(), stub,
                          (dir / "grid").string());
  REQUIRE(results.size() == 1);
  REQUIRE(results[0].ok());

  auto ds = data::load_dataset_csv(csv, data::CategoryMap::defaults());
  auto set = data::load_image_set(ds, 32, "fixture");
  train::TrainConfig direct = cfg;
  direct.seed = cell_seed(cfg.seed, "dcgan_dropout", "fixture");
  ModelSpec spec = cells[0].spec;
  train::RunResult rr =
      train::train(spec, set, direct, stub, (dir / "solo").string());
  CHECK(results[0].best_fid == rr.best_fid);
  CHECK(results[0].best_kid == rr.best_kid);
  CHECK(slurp((dir / "grid" / "dcgan_dropout__fixture" / "losses.csv")) ==
        slurp((dir / "solo" / "losses.csv")));

  std::filesystem::remove_all(dir);
}

TEST_CASE("grid guards") {
  auto dir = temp_dir("guards");
  metrics::StubExtractor stub;
  CHECK_THROWS_AS(run_grid({}, cell_cfg(), data::CategoryMap::defaults(), stub,
                           (dir / "x").string()),
                  ValidationError);
  CHECK_THROWS_AS(generate_report((dir / "nothing").string(),
                                  (dir / "rep").string()),
                  IoError);
  std::filesystem::remove_all(dir);
}
