#include "affgan/exp/grid.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <thread>

#include "affgan/core/csv.hpp"
#include "affgan/core/error.hpp"

namespace fs = std::filesystem;

namespace affgan::exp {

using gan::DiscVariant;
using gan::Family;

std::vector<std::pair<Family, DiscVariant>> default_model_roster() {
  std::vector<std::pair<Family, DiscVariant>> roster;
  for (Family f : {Family::DCGAN, Family::CGAN, Family::PAGAN,
                   Family::WGAN_GP}) {
    for (DiscVariant v : {DiscVariant::BatchNorm, DiscVariant::Dropout,
                          DiscVariant::SpectralNorm}) {
      roster.emplace_back(f, v);
    }
  }
  return roster;
}

std::vector<GridCell> make_cells(
    const std::vector<std::pair<Family, DiscVariant>>& roster,
    const std::vector<std::string>& dataset_paths,
    const gan::ModelSpec& base_spec, int num_categories) {
  std::vector<GridCell> cells;
  for (const std::string& path : dataset_paths) {
    const std::string id = fs::path(path).stem().string();
    for (const auto& [family, variant] : roster) {
      GridCell cell;
      cell.spec = base_spec;
      cell.spec.family = family;
      cell.spec.disc_variant = variant;
      cell.spec.num_classes = cell.spec.conditional() ? num_categories : 0;
      cell.dataset_path = path;
      cell.dataset_id = id;
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

uint64_t cell_seed(uint64_t base_seed, const std::string& model_id,
                   const std::string& dataset_id) {
  uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= '/';
    h *= 1099511628211ULL;
  };
  mix(model_id);
  mix(dataset_id);
  return base_seed ^ h;
}

namespace {

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

CellResult run_cell(const GridCell& cell, const train::TrainConfig& base_cfg,
                    const data::CategoryMap& category_map,
                    const metrics::FeatureExtractor& extractor,
                    const std::string& out_dir, bool resume) {
  CellResult res;
  res.model_id = cell.spec.model_id();
  res.dataset_id = cell.dataset_id;
  res.run_dir = out_dir + "/" + res.model_id + "__" + cell.dataset_id;
  res.best_fid = std::nan("");
  res.best_kid = std::nan("");
  try {
    data::AffectiveDataset ds =
        data::load_dataset_csv(cell.dataset_path, category_map);
    data::ImageSet set =
        data::load_image_set(ds, cell.spec.image_size, cell.dataset_id);
    train::TrainConfig cfg = base_cfg;
    cfg.seed = cell_seed(base_cfg.seed, res.model_id, cell.dataset_id);
    train::RunResult rr =
        train::train(cell.spec, set, cfg, extractor, res.run_dir, resume);
    res.best_fid = rr.best_fid;
    res.best_kid = rr.best_kid;
    res.status = "ok";
  } catch (const std::exception& e) {
    res.status = std::string("failed: ") + e.what();
  }
  return res;
}

}  // namespace

std::vector<CellResult> run_grid(const std::vector<GridCell>& cells,
                                 const train::TrainConfig& base_cfg,
                                 const data::CategoryMap& category_map,
                                 const metrics::FeatureExtractor& extractor,
                                 const std::string& out_dir, int workers,
                                 bool resume) {
  if (cells.empty()) throw ValidationError("empty experiment grid");
  fs::create_directories(out_dir);
  std::vector<CellResult> results(cells.size());
  std::atomic<size_t> next{0};
  auto work = [&]() {
    for (size_t i = next.fetch_add(1); i < cells.size();
         i = next.fetch_add(1)) {
      results[i] = run_cell(cells[i], base_cfg, category_map, extractor,
                            out_dir, resume);
    }
  };
  const int pool = std::max(1, std::min(workers, int(cells.size())));
  if (pool == 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(size_t(pool));
    for (int i = 0; i < pool; ++i) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }
  write_score_table(out_dir + "/scores.csv", results);

  csv::Table status;
  status.header = {"model", "dataset", "status"};
  std::vector<CellResult> sorted = results;
  std::sort(sorted.begin(), sorted.end(),
            [](const CellResult& a, const CellResult& b) {
              return std::tie(a.model_id, a.dataset_id) <
                     std::tie(b.model_id, b.dataset_id);
            });
  for (const CellResult& r : sorted) {
    status.rows.push_back({r.model_id, r.dataset_id, r.status});
  }
  csv::write_file(out_dir + "/grid_status.csv", status);
  return results;
}

void write_score_table(const std::string& path,
                       const std::vector<CellResult>& results) {
  std::vector<CellResult> sorted = results;
  std::sort(sorted.begin(), sorted.end(),
            [](const CellResult& a, const CellResult& b) {
              return std::tie(a.model_id, a.dataset_id) <
                     std::tie(b.model_id, b.dataset_id);
            });
  csv::Table t;
  t.header = {"model", "dataset", "best_fid", "best_kid"};
  for (const CellResult& r : sorted) {
    t.rows.push_back({r.model_id, r.dataset_id,
                      r.ok() ? fmt6(r.best_fid) : "nan",
                      r.ok() ? fmt6(r.best_kid) : "nan"});
  }
  csv::write_file(path, t);
}

std::vector<CellResult> read_score_table(const std::string& path) {
  csv::Table t = csv::read_file(path);
  const csv::Row expected = {"model", "dataset", "best_fid", "best_kid"};
  if (t.header != expected) {
    throw ValidationError(msg(path, ": not a score table"));
  }
  std::vector<CellResult> out;
  for (const csv::Row& row : t.rows) {
    CellResult r;
    r.model_id = row[0];
    r.dataset_id = row[1];
    r.best_fid = std::stod(row[2]);
    r.best_kid = std::stod(row[3]);
    r.status = std::isnan(r.best_fid) ? "failed" : "ok";
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace affgan::exp
