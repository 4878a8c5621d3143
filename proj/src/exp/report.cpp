#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "affgan/core/csv.hpp"
#include "affgan/core/error.hpp"
#include "affgan/exp/grid.hpp"

namespace fs = std::filesystem;

namespace affgan::exp {

namespace {

const cv::Scalar kPalette[] = {
    {180, 119, 31}, {14, 127, 255},  {44, 160, 44},  {40, 39, 214},
    {189, 103, 148}, {75, 86, 140},  {194, 119, 227}, {127, 127, 127},
    {34, 189, 188}, {207, 190, 23},  {60, 20, 220},  {128, 0, 128},
};
constexpr int kPaletteSize = int(sizeof(kPalette) / sizeof(kPalette[0]));

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (x, y)
};

void render_line_chart(const std::string& path, const std::string& title,
                       const std::vector<Series>& series) {
  const int width = 960, height = 600;
  const int ml = 80, mr = 220, mt = 60, mb = 60;
  const int pw = width - ml - mr, ph = height - mt - mb;
  cv::Mat img(height, width, CV_8UC3, cv::Scalar(255, 255, 255));

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const Series& s : series) {
    for (const auto& [x, y] : s.points) {
      if (first) {
        xmin = xmax = x;
        ymin = ymax = y;
        first = false;
      }
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (xmax - xmin < 1e-12) {
    xmin -= 1.0;
    xmax += 1.0;
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 1.0;
    ymax += 1.0;
  }
  auto px = [&](double x) {
    return ml + int(std::lround((x - xmin) / (xmax - xmin) * pw));
  };
  auto py = [&](double y) {
    return mt + int(std::lround((1.0 - (y - ymin) / (ymax - ymin)) * ph));
  };

  const cv::Scalar black(0, 0, 0);
  cv::line(img, {ml, mt}, {ml, mt + ph}, black, 1);
  cv::line(img, {ml, mt + ph}, {ml + pw, mt + ph}, black, 1);
  for (int t = 0; t <= 5; ++t) {
    const double xv = xmin + (xmax - xmin) * t / 5.0;
    const double yv = ymin + (ymax - ymin) * t / 5.0;
    const int xp = px(xv), yp = py(yv);
    cv::line(img, {xp, mt + ph}, {xp, mt + ph + 4}, black, 1);
    cv::putText(img, fmt_tick(xv), {xp - 14, mt + ph + 20},
                cv::FONT_HERSHEY_SIMPLEX, 0.4, black, 1, cv::LINE_AA);
    cv::line(img, {ml - 4, yp}, {ml, yp}, black, 1);
    cv::putText(img, fmt_tick(yv), {8, yp + 4}, cv::FONT_HERSHEY_SIMPLEX, 0.4,
                black, 1, cv::LINE_AA);
  }
  cv::putText(img, title, {ml, 32}, cv::FONT_HERSHEY_SIMPLEX, 0.65, black, 1,
              cv::LINE_AA);
  cv::putText(img, "epoch", {ml + pw / 2 - 20, height - 16},
              cv::FONT_HERSHEY_SIMPLEX, 0.45, black, 1, cv::LINE_AA);
  cv::putText(img, "FID", {10, mt - 10}, cv::FONT_HERSHEY_SIMPLEX, 0.45, black,
              1, cv::LINE_AA);

  for (size_t si = 0; si < series.size(); ++si) {
    const cv::Scalar color = kPalette[si % kPaletteSize];
    const auto& pts = series[si].points;
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
      cv::line(img, {px(pts[i].first), py(pts[i].second)},
               {px(pts[i + 1].first), py(pts[i + 1].second)}, color, 2,
               cv::LINE_AA);
    }
    for (const auto& [x, y] : pts) {
      cv::circle(img, {px(x), py(y)}, 3, color, cv::FILLED, cv::LINE_AA);
    }
    const int ly = mt + 18 * int(si);
    cv::rectangle(img, {width - mr + 10, ly - 8}, {width - mr + 26, ly + 4},
                  color, cv::FILLED);
    cv::putText(img, series[si].label, {width - mr + 32, ly + 2},
                cv::FONT_HERSHEY_SIMPLEX, 0.4, black, 1, cv::LINE_AA);
  }
  if (!cv::imwrite(path, img)) throw IoError(msg("cannot write ", path));
}

void render_bar_chart(const std::string& path, const std::string& title,
                      const std::vector<std::pair<std::string, double>>& bars) {
  const int row_h = 26, ml = 280, mr = 110, mt = 60, mb = 30;
  const int width = 960;
  const int height = mt + mb + row_h * std::max(1, int(bars.size()));
  const int pw = width - ml - mr;
  cv::Mat img(height, width, CV_8UC3, cv::Scalar(255, 255, 255));
  const cv::Scalar black(0, 0, 0);
  cv::putText(img, title, {20, 32}, cv::FONT_HERSHEY_SIMPLEX, 0.65, black, 1,
              cv::LINE_AA);
  double vmax = 1e-12;
  for (const auto& [label, v] : bars) vmax = std::max(vmax, v);
  for (size_t i = 0; i < bars.size(); ++i) {
    const int y0 = mt + row_h * int(i);
    const int len = int(std::lround(bars[i].second / vmax * pw));
    const cv::Scalar color = kPalette[i % kPaletteSize];
    cv::rectangle(img, {ml, y0 + 4}, {ml + std::max(1, len), y0 + row_h - 6},
                  color, cv::FILLED);
    cv::putText(img, bars[i].first, {10, y0 + row_h - 9},
                cv::FONT_HERSHEY_SIMPLEX, 0.4, black, 1, cv::LINE_AA);
    cv::putText(img, fmt_tick(bars[i].second),
                {ml + std::max(1, len) + 8, y0 + row_h - 9},
                cv::FONT_HERSHEY_SIMPLEX, 0.4, black, 1, cv::LINE_AA);
  }
  if (!cv::imwrite(path, img)) throw IoError(msg("cannot write ", path));
}

std::vector<std::pair<double, double>> read_trajectory_csv(
    const std::string& path) {
  csv::Table t = csv::read_file(path);
  std::vector<std::pair<double, double>> out;
  for (const csv::Row& row : t.rows) {
    out.emplace_back(std::stod(row[0]), std::stod(row[1]));
  }
  return out;
}

std::string find_last_sample_grid(const std::string& samples_dir) {
  std::string best;
  int best_epoch = -1;
  if (!fs::is_directory(samples_dir)) return best;
  for (const auto& e : fs::directory_iterator(samples_dir)) {
    int epoch = 0;
    if (std::sscanf(e.path().filename().string().c_str(), "epoch_%d.png",
                    &epoch) == 1 &&
        epoch > best_epoch) {
      best_epoch = epoch;
      best = e.path().string();
    }
  }
  return best;
}

}  // namespace

void generate_report(const std::string& grid_dir, const std::string& out_dir) {
  const std::string scores_path = grid_dir + "/scores.csv";
  if (!fs::exists(scores_path)) {
    throw IoError(msg("no score table at ", scores_path,
                      "; run the grid first"));
  }
  std::vector<CellResult> cells = read_score_table(scores_path);
  fs::create_directories(out_dir + "/data");

  fs::copy_file(scores_path, out_dir + "/data/scores.csv",
                fs::copy_options::overwrite_existing);

  std::map<std::string, std::vector<CellResult>> by_dataset;
  for (const CellResult& c : cells) by_dataset[c.dataset_id].push_back(c);

  for (const auto& [dataset, group] : by_dataset) {
    std::vector<Series> series;
    for (const CellResult& c : group) {
      const std::string run_dir =
          grid_dir + "/" + c.model_id + "__" + c.dataset_id;
      const std::string traj = run_dir + "/trajectory.csv";
      if (!fs::exists(traj)) continue;
      Series s;
      s.label = c.model_id;
      s.points = read_trajectory_csv(traj);
      if (!s.points.empty()) series.push_back(std::move(s));
      fs::copy_file(traj,
                    out_dir + "/data/" + c.model_id + "__" + c.dataset_id +
                        "_trajectory.csv",
                    fs::copy_options::overwrite_existing);
      const std::string grid_png = find_last_sample_grid(run_dir + "/samples");
      if (!grid_png.empty()) {
        fs::copy_file(grid_png,
                      out_dir + "/samples_" + c.model_id + "__" +
                          c.dataset_id + ".png",
                      fs::copy_options::overwrite_existing);
      }
    }
    if (!series.empty()) {
      render_line_chart(out_dir + "/fid_vs_epoch_" + dataset + ".png",
                        "FID by epoch on " + dataset, series);
    }
  }

  std::vector<std::pair<std::string, double>> bars;
  for (const CellResult& c : cells) {
    if (c.ok() && std::isfinite(c.best_fid)) {
      bars.emplace_back(c.model_id + " @ " + c.dataset_id, c.best_fid);
    }
  }
  std::sort(bars.begin(), bars.end(), [](const auto& a, const auto& b) {
    return a.second < b.second || (a.second == b.second && a.first < b.first);
  });
  if (!bars.empty()) {
    render_bar_chart(out_dir + "/best_fid_bar.png", "Best FID (lower is better)",
                     bars);
  }
}

}  // namespace affgan::exp
