#pragma once

#include <string>
#include <utility>
#include <vector>

#include "affgan/data/affective.hpp"
#include "affgan/metrics/metrics.hpp"
#include "affgan/train/train.hpp"

namespace affgan::exp {

struct GridCell {
  gan::ModelSpec spec;
  std::string dataset_path;  // serialized dataset CSV
  std::string dataset_id;
};

struct CellResult {
  std::string model_id;
  std::string dataset_id;
  std::string status;  // "ok" or "failed: <reason>"
  double best_fid = 0.0;
  double best_kid = 0.0;
  std::string run_dir;

  bool ok() const { return status == "ok"; }
};

/// The default ablation roster: {DCGAN, CGAN, PAGAN, WGAN_GP} crossed with
/// the three discriminator variants.
std::vector<std::pair<gan::Family, gan::DiscVariant>> default_model_roster();

/// Crosses the roster with the given dataset CSVs into grid cells.
std::vector<GridCell> make_cells(
    const std::vector<std::pair<gan::Family, gan::DiscVariant>>& roster,
    const std::vector<std::string>& dataset_paths,
    const gan::ModelSpec& base_spec, int num_categories);

/// Runs every cell (sequentially or on a small worker pool), each with its
/// own derived seed and output directory. A failing cell is recorded and
/// the rest of the grid continues.
std::vector<CellResult> run_grid(const std::vector<GridCell>& cells,
                                 const train::TrainConfig& base_cfg,
                                 const data::CategoryMap& category_map,
                                 const metrics::FeatureExtractor& extractor,
                                 const std::string& out_dir, int workers = 1,
                                 bool resume = false);

/// scores.csv, canonically sorted by (model, dataset). Failed cells carry
/// "nan" metric fields.
void write_score_table(const std::string& path,
                       const std::vector<CellResult>& results);
std::vector<CellResult> read_score_table(const std::string& path);

/// Per-cell seed, derived deterministically from the base seed and ids.
uint64_t cell_seed(uint64_t base_seed, const std::string& model_id,
                   const std::string& dataset_id);

/// Renders the report assets (FID trajectory plots per dataset, the
/// ascending best-FID bar chart, final sample grids, underlying CSVs)
/// from a grid output directory. Regeneration is byte-identical.
void generate_report(const std::string& grid_dir, const std::string& out_dir);

}  // namespace affgan::exp
