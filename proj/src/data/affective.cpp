#include "affgan/data/affective.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <set>
#include <sstream>

#include "affgan/core/csv.hpp"
#include "affgan/core/error.hpp"
#include "affgan/core/rng.hpp"

namespace fs = std::filesystem;

namespace affgan::data {

namespace {

// Fixed-width decimal so serialized datasets are byte-stable across rebuilds.
std::string fmt_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

double parse_real(const std::string& s, const char* what) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw ValidationError(msg("dataset: '", s, "' is not a valid ", what));
  }
  return v;
}

}  // namespace

const char* to_string(Quadrant q) {
  switch (q) {
    case Quadrant::QI: return "QI";
    case Quadrant::QII: return "QII";
    case Quadrant::QIII: return "QIII";
    case Quadrant::QIV: return "QIV";
  }
  return "?";
}

CategoryMap CategoryMap::defaults() {
  CategoryMap m;
  m.neutral_radius = 0.25;
  m.sector_offset_deg = 0.0;
  m.sector_labels = {"Happy",      "Delighted", "Excited", "Tense",
                     "Angry",      "Frustrated", "Depressed", "Bored",
                     "Tired",      "Calm",      "Relaxed", "Content"};
  return m;
}

void CategoryMap::validate() const {
  if (!(neutral_radius > 0.0 && neutral_radius < 1.0)) {
    throw ValidationError(msg("category map: neutral_radius ", neutral_radius, " not in (0,1)"));
  }
  std::set<std::string> seen;
  for (const auto& label : sector_labels) {
    if (label.empty()) throw ValidationError("category map: empty sector label");
    if (label == "Neutral") throw ValidationError("category map: 'Neutral' may not name a sector");
    if (!seen.insert(label).second) {
      throw ValidationError(msg("category map: duplicate sector label '", label, "'"));
    }
  }
}

std::vector<std::string> CategoryMap::all_categories() const {
  std::vector<std::string> v(sector_labels.begin(), sector_labels.end());
  v.push_back("Neutral");
  return v;
}

std::map<Quadrant, size_t> AffectiveDataset::quadrant_counts() const {
  std::map<Quadrant, size_t> counts{{Quadrant::QI, 0}, {Quadrant::QII, 0},
                                    {Quadrant::QIII, 0}, {Quadrant::QIV, 0}};
  for (const auto& r : records) counts[r.quadrant]++;
  return counts;
}

std::map<std::string, size_t> AffectiveDataset::category_counts() const {
  std::map<std::string, size_t> counts;
  for (const auto& name : category_map.all_categories()) counts[name] = 0;
  for (const auto& r : records) counts[r.category]++;
  return counts;
}

ScaleMap default_scales() {
  // IAPS/NAPS/SFIP use 9-point SAM scales, GAPED 0-100, OASIS 1-7,
  // EmoMadrid -2..2. The synthetic fixture is already in [-1,1].
  ScaleMap m;
  const RatingScale nine{1, 9}, hundred{0, 100}, seven{1, 7}, madrid{-2, 2}, unit{-1, 1};
  m["IAPS"] = {nine, nine};
  m["NAPS"] = {nine, nine};
  m["SFIP"] = {nine, nine};
  m["GAPED"] = {hundred, hundred};
  m["OASIS"] = {seven, seven};
  m["EmoMadrid"] = {madrid, madrid};
  m["synthetic"] = {unit, unit};
  return m;
}

ScaleMap scales_from_config(const IniConfig& cfg) {
  ScaleMap m = default_scales();
  for (const auto& [source, value] : cfg.entries("scales")) {
    std::istringstream in(value);
    double vmin, vmax, amin, amax;
    if (!(in >> vmin >> vmax >> amin >> amax)) {
      throw ValidationError(msg("config: [scales] ", source,
                                " expects 'vmin vmax amin amax', got '", value, "'"));
    }
    m[source] = {RatingScale{vmin, vmax}, RatingScale{amin, amax}};
  }
  return m;
}

CategoryMap category_map_from_config(const IniConfig& cfg) {
  CategoryMap m = CategoryMap::defaults();
  m.neutral_radius = cfg.get_real("categories", "neutral_radius", m.neutral_radius);
  m.sector_offset_deg = cfg.get_real("categories", "sector_offset_deg", m.sector_offset_deg);
  if (cfg.has("categories", "sector_labels")) {
    auto labels = cfg.get_list("categories", "sector_labels");
    if (labels.size() != 12) {
      throw ValidationError(msg("config: sector_labels needs 12 entries, got ", labels.size()));
    }
    std::copy(labels.begin(), labels.end(), m.sector_labels.begin());
  }
  m.validate();
  return m;
}

double normalize_rating(double raw, const RatingScale& scale) {
  if (!(std::isfinite(scale.min_raw) && std::isfinite(scale.max_raw)) ||
      !(scale.max_raw > scale.min_raw)) {
    throw ValidationError(msg("rating scale [", scale.min_raw, ", ", scale.max_raw, "] is invalid"));
  }
  if (!(raw >= scale.min_raw && raw <= scale.max_raw)) {
    throw ValidationError(msg("rating ", raw, " outside scale [", scale.min_raw, ", ",
                              scale.max_raw, "]"));
  }
  return 2.0 * (raw - scale.min_raw) / (scale.max_raw - scale.min_raw) - 1.0;
}

Quadrant assign_quadrant(double valence, double arousal) {
  if (valence >= 0.0) return arousal >= 0.0 ? Quadrant::QI : Quadrant::QIV;
  return arousal >= 0.0 ? Quadrant::QII : Quadrant::QIII;
}

std::string assign_category(double valence, double arousal, const CategoryMap& map) {
  if (std::sqrt(valence * valence + arousal * arousal) < map.neutral_radius) return "Neutral";
  double deg = std::atan2(arousal, valence) * 180.0 / 3.14159265358979323846;
  deg -= map.sector_offset_deg;
  deg = std::fmod(deg, 360.0);
  if (deg < 0.0) deg += 360.0;
  int sector = int(deg / 30.0);
  if (sector > 11) sector = 11;  // deg == 360 - eps rounding guard
  return map.sector_labels[size_t(sector)];
}

AffectiveDataset build_dataset(const std::vector<std::string>& manifest_paths,
                               const ScaleMap& scales, const CategoryMap& map,
                               const BuildOptions& opts) {
  map.validate();
  AffectiveDataset ds;
  ds.category_map = map;
  std::set<std::string> seen_paths;
  std::vector<std::string> missing;

  for (const auto& manifest : manifest_paths) {
    csv::Table t = csv::read_file(manifest);
    const csv::Row expected = {"image_path", "source", "valence_raw", "arousal_raw"};
    if (t.header != expected) {
      throw ValidationError(msg(manifest, ": manifest header must be "
                                "image_path,source,valence_raw,arousal_raw"));
    }
    for (const auto& row : t.rows) {
      AffectiveRecord rec;
      rec.image_path = row[0];
      rec.source = row[1];
      rec.valence_raw = parse_real(row[2], "valence_raw");
      rec.arousal_raw = parse_real(row[3], "arousal_raw");

      if (!seen_paths.insert(rec.image_path).second) {
        throw ValidationError(msg(manifest, ": duplicate image path '", rec.image_path, "'"));
      }
      auto it = scales.find(rec.source);
      if (it == scales.end()) {
        throw ValidationError(msg(manifest, ": unknown source '", rec.source,
                                  "' for ", rec.image_path, " (no scales configured)"));
      }
      try {
        rec.valence = normalize_rating(rec.valence_raw, it->second.first);
        rec.arousal = normalize_rating(rec.arousal_raw, it->second.second);
      } catch (const ValidationError& e) {
        throw ValidationError(msg(manifest, ": record '", rec.image_path, "': ", e.what()));
      }
      rec.quadrant = assign_quadrant(rec.valence, rec.arousal);
      rec.category = assign_category(rec.valence, rec.arousal, map);

      if (opts.check_files_exist && !fs::exists(rec.image_path)) {
        missing.push_back(rec.image_path);
        continue;
      }
      ds.provenance[rec.source]++;
      ds.records.push_back(std::move(rec));
    }
  }
  if (!missing.empty()) {
    std::ostringstream os;
    os << "dataset: " << missing.size() << " image file(s) missing:";
    for (const auto& p : missing) os << "\n  " << p;
    throw IoError(os.str());
  }
  return ds;
}

SplitResult split(const AffectiveDataset& ds, double train_fraction, uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError(msg("split: train_fraction ", train_fraction, " not in (0,1)"));
  }
  SplitResult out;
  out.train.category_map = ds.category_map;
  out.val.category_map = ds.category_map;
  const size_t n = ds.size();
  if (n == 0) return out;

  const size_t target_train = size_t(std::llround(train_fraction * double(n)));

  // Bucket record indices per category, in dataset order.
  std::map<std::string, std::vector<size_t>> buckets;
  for (size_t i = 0; i < n; ++i) buckets[ds.records[i].category].push_back(i);

  // Categories with < 2 records go whole to train (cannot be stratified).
  struct Cat {
    std::string name;
    std::vector<size_t> idx;
    size_t take = 0;
    double frac = 0.0;
  };
  std::vector<Cat> cats;
  size_t forced = 0;
  for (auto& [name, idx] : buckets) {
    if (idx.size() < 2) {
      out.warnings.push_back(msg("category '", name, "' has ", idx.size(),
                                 " record(s); too small to stratify, assigned to train"));
      forced += idx.size();
      for (size_t i : idx) out.train.records.push_back(ds.records[i]);
      continue;
    }
    cats.push_back({name, idx, 0, 0.0});
  }

  // Largest-remainder apportionment of the remaining train quota.
  const size_t quota = target_train > forced ? target_train - forced : 0;
  size_t base_sum = 0;
  for (auto& c : cats) {
    const double exact = train_fraction * double(c.idx.size());
    c.take = size_t(exact);
    c.frac = exact - double(c.take);
    // keep at least one record on each side so stratification is real
    c.take = std::clamp(c.take, size_t(1), c.idx.size() - 1);
    base_sum += c.take;
  }
  std::vector<size_t> order(cats.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (cats[a].frac != cats[b].frac) return cats[a].frac > cats[b].frac;
    return cats[a].name < cats[b].name;
  });
  size_t k = 0;
  while (base_sum < quota && k < 4 * cats.size() + 4) {
    auto& c = cats[order[k % order.size()]];
    if (c.take < c.idx.size() - 1) {
      c.take++;
      base_sum++;
    }
    ++k;
  }
  while (base_sum > quota && k < 8 * cats.size() + 8) {
    auto& c = cats[order[order.size() - 1 - (k % order.size())]];
    if (c.take > 1) {
      c.take--;
      base_sum--;
    }
    ++k;
  }

  Rng rng = Rng::stream(seed, "stratified-split");
  for (auto& c : cats) {
    rng.shuffle(c.idx);
    for (size_t j = 0; j < c.idx.size(); ++j) {
      const auto& rec = ds.records[c.idx[j]];
      (j < c.take ? out.train : out.val).records.push_back(rec);
    }
  }
  for (const auto& r : out.train.records) out.train.provenance[r.source]++;
  for (const auto& r : out.val.records) out.val.provenance[r.source]++;
  return out;
}

static csv::Table dataset_table(const AffectiveDataset& ds) {
  csv::Table t;
  t.header = {"image_path", "source", "valence_raw", "arousal_raw",
              "valence",    "arousal", "quadrant",    "category"};
  for (const auto& r : ds.records) {
    t.rows.push_back({r.image_path, r.source, fmt_real(r.valence_raw), fmt_real(r.arousal_raw),
                      fmt_real(r.valence), fmt_real(r.arousal), to_string(r.quadrant),
                      r.category});
  }
  return t;
}

std::string dataset_csv_string(const AffectiveDataset& ds) {
  return csv::to_string(dataset_table(ds));
}

void save_dataset_csv(const std::string& path, const AffectiveDataset& ds) {
  csv::write_file(path, dataset_table(ds));
}

AffectiveDataset load_dataset_csv(const std::string& path, const CategoryMap& map) {
  csv::Table t = csv::read_file(path);
  const csv::Row expected = {"image_path", "source", "valence_raw", "arousal_raw",
                             "valence",    "arousal", "quadrant",    "category"};
  if (t.header != expected) {
    throw ValidationError(msg(path, ": not a serialized dataset (unexpected header)"));
  }
  AffectiveDataset ds;
  ds.category_map = map;
  std::set<std::string> seen;
  for (const auto& row : t.rows) {
    AffectiveRecord r;
    r.image_path = row[0];
    r.source = row[1];
    r.valence_raw = parse_real(row[2], "valence_raw");
    r.arousal_raw = parse_real(row[3], "arousal_raw");
    r.valence = parse_real(row[4], "valence");
    r.arousal = parse_real(row[5], "arousal");
    bool found = false;
    for (Quadrant q : {Quadrant::QI, Quadrant::QII, Quadrant::QIII, Quadrant::QIV}) {
      if (row[6] == to_string(q)) {
        r.quadrant = q;
        found = true;
      }
    }
    if (!found) throw ValidationError(msg(path, ": bad quadrant '", row[6], "'"));
    r.category = row[7];
    if (!seen.insert(r.image_path).second) {
      throw ValidationError(msg(path, ": duplicate image path '", r.image_path, "'"));
    }
    ds.provenance[r.source]++;
    ds.records.push_back(std::move(r));
  }
  return ds;
}

std::string quadrant_report(const AffectiveDataset& ds) {
  // One row per source plus an ALL row, quadrant columns.
  std::map<std::string, std::array<size_t, 4>> per_source;
  std::array<size_t, 4> all{0, 0, 0, 0};
  for (const auto& r : ds.records) {
    const size_t q = size_t(r.quadrant);
    per_source[r.source][q]++;
    all[q]++;
  }
  std::ostringstream os;
  os << "Dataset,Quarter I,Quarter II,Quarter III,Quarter IV\n";
  for (const auto& [source, counts] : per_source) {
    os << source;
    for (size_t q = 0; q < 4; ++q) os << ',' << counts[q];
    os << '\n';
  }
  os << "ALL";
  for (size_t q = 0; q < 4; ++q) os << ',' << all[q];
  os << '\n';
  return os.str();
}

std::string category_report(const AffectiveDataset& ds) {
  auto counts = ds.category_counts();
  std::ostringstream os;
  os << "Category,Amount\n";
  for (const auto& [name, count] : counts) os << name << ',' << count << '\n';
  return os.str();
}

}  // namespace affgan::data
