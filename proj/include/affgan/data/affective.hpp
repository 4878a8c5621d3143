#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "affgan/core/iniconfig.hpp"

namespace affgan::data {

/// Bounds of one raw rating scale (per source dataset).
struct RatingScale {
  double min_raw = 0.0;
  double max_raw = 1.0;
};

enum class Quadrant { QI, QII, QIII, QIV };

const char* to_string(Quadrant q);

/// 12 labelled 30-degree sectors plus a Neutral disk around the origin.
struct CategoryMap {
  double neutral_radius = 0.25;
  double sector_offset_deg = 0.0;
  std::array<std::string, 12> sector_labels;

  /// Russell-circumplex default: counterclockwise from the positive
  /// valence axis, Neutral disk of radius 0.25.
  static CategoryMap defaults();

  /// All 13 category names in report order (Neutral last).
  std::vector<std::string> all_categories() const;

  void validate() const;
};

struct AffectiveRecord {
  std::string image_path;
  std::string source;
  double valence_raw = 0.0;
  double arousal_raw = 0.0;
  double valence = 0.0;   // normalized, [-1, 1]
  double arousal = 0.0;   // normalized, [-1, 1]
  Quadrant quadrant = Quadrant::QI;
  std::string category;
};

struct AffectiveDataset {
  std::vector<AffectiveRecord> records;
  CategoryMap category_map;
  std::map<std::string, size_t> provenance;  // source -> record count

  size_t size() const { return records.size(); }
  std::map<Quadrant, size_t> quadrant_counts() const;
  /// All 13 categories, zero-filled where absent.
  std::map<std::string, size_t> category_counts() const;
};

/// Per-source (valence scale, arousal scale).
using ScaleMap = std::map<std::string, std::pair<RatingScale, RatingScale>>;

/// The six source scales from the literature plus the synthetic fixture
/// scale; overridable through the scales config.
ScaleMap default_scales();

/// Reads overrides from a config's [scales] section
/// (`source = vmin vmax amin amax`) and a [categories] section
/// (neutral_radius, sector_offset_deg, sector_labels) on top of defaults.
ScaleMap scales_from_config(const IniConfig& cfg);
CategoryMap category_map_from_config(const IniConfig& cfg);

/// Affine map of raw onto [-1, 1]. Throws if raw lies outside the scale.
double normalize_rating(double raw, const RatingScale& scale);

/// Sign-quadrant with zero counting as non-negative.
Quadrant assign_quadrant(double valence, double arousal);

/// Neutral inside the disk, otherwise the 30-degree sector holding
/// atan2(arousal, valence); sector lower bound inclusive.
std::string assign_category(double valence, double arousal, const CategoryMap& map);

struct BuildOptions {
  bool check_files_exist = true;
};

/// Ingests manifest CSVs (image_path,source,valence_raw,arousal_raw),
/// normalizes, labels, and populates provenance.
AffectiveDataset build_dataset(const std::vector<std::string>& manifest_paths,
                               const ScaleMap& scales, const CategoryMap& map,
                               const BuildOptions& opts = {});

struct SplitResult {
  AffectiveDataset train;
  AffectiveDataset val;
  std::vector<std::string> warnings;  // categories too small to stratify
};

/// Stratified split: train size = round(fraction * N), per-category
/// proportions within one record, deterministic for a given seed.
SplitResult split(const AffectiveDataset& ds, double train_fraction, uint64_t seed);

/// Serialized dataset CSV (manifest columns + derived columns).
void save_dataset_csv(const std::string& path, const AffectiveDataset& ds);
std::string dataset_csv_string(const AffectiveDataset& ds);
AffectiveDataset load_dataset_csv(const std::string& path, const CategoryMap& map);

/// Per-source quadrant and category count tables, one row per source
/// plus an ALL total row.
std::string quadrant_report(const AffectiveDataset& ds);
std::string category_report(const AffectiveDataset& ds);

}  // namespace affgan::data
