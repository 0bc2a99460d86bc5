// Copyright 2026 The xplab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "xplab/io.h"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <set>

#include <fmt/format.h>

#include "xplab/envs.h"
#include "xplab/util.h"

namespace xplab {

namespace {

void RejectUnknown(const nlohmann::json& obj, const std::set<std::string>& allowed,
                   const std::string& where) {
  if (!obj.is_object()) throw ConfigError(fmt::format("'{}' must be an object", where));
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw ConfigError(fmt::format("unknown key '{}{}{}'", where,
                                    where.empty() ? "" : ".", key));
    }
  }
}

double Number(const nlohmann::json& obj, const std::string& key,
              const std::string& where, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) {
    throw ConfigError(fmt::format("'{}.{}' must be a number", where, key));
  }
  return obj[key].get<double>();
}

int Integer(const nlohmann::json& obj, const std::string& key,
            const std::string& where, int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) {
    throw ConfigError(fmt::format("'{}.{}' must be an integer", where, key));
  }
  return obj[key].get<int>();
}

std::vector<double> Numbers(const nlohmann::json& obj, const std::string& key,
                            const std::string& where, std::vector<double> fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj[key];
  if (!v.is_array()) throw ConfigError(fmt::format("'{}.{}' must be an array", where, key));
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) {
      throw ConfigError(fmt::format("'{}.{}' entries must be numbers", where, key));
    }
    out.push_back(x.get<double>());
  }
  if (out.empty()) throw ConfigError(fmt::format("'{}.{}' must not be empty", where, key));
  return out;
}

void ParseAxis(const nlohmann::json& doc, const std::string& key, double& lo,
               double& hi, int& points) {
  if (!doc.contains(key)) return;
  const std::string where = "landscape." + key;
  RejectUnknown(doc[key], {"min", "max", "points"}, where);
  lo = Number(doc[key], "min", where, lo);
  hi = Number(doc[key], "max", where, hi);
  points = Integer(doc[key], "points", where, points);
  if (!(lo <= hi) || points < 1) {
    throw ConfigError(fmt::format("'{}' needs min <= max and points >= 1", where));
  }
}

std::ofstream OpenOut(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw XplabError(fmt::format("cannot write '{}'", path));
  return out;
}

std::string Full(double x) { return fmt::format("{:.17g}", x); }

}  // namespace

ExperimentConfig ExperimentConfig::FromJson(const nlohmann::json& doc) {
  RejectUnknown(doc, {"env", "train", "sweep", "eval", "landscape"}, "");
  if (!doc.contains("env")) throw ConfigError("missing required key 'env'");
  ExperimentConfig c;
  c.env_json = doc["env"];
  c.env = MakeEnvFromJson(c.env_json);
  if (doc.contains("train")) c.train = TrainConfig::FromJson(doc["train"]);
  if (doc.contains("sweep")) {
    const auto& s = doc["sweep"];
    RejectUnknown(s, {"alphas", "seeds_per_alpha"}, "sweep");
    c.sweep_alphas = Numbers(s, "alphas", "sweep", c.sweep_alphas);
    c.seeds_per_alpha = Integer(s, "seeds_per_alpha", "sweep", c.seeds_per_alpha);
    if (c.seeds_per_alpha < 1) throw ConfigError("'sweep.seeds_per_alpha' must be >= 1");
    for (double a : c.sweep_alphas) {
      if (!(a >= 0.0) || !std::isfinite(a)) {
        throw ConfigError("'sweep.alphas' entries must be finite and >= 0");
      }
    }
  }
  if (doc.contains("eval")) {
    const auto& e = doc["eval"];
    RejectUnknown(e, {"mode", "games", "seed", "tie_epsilon"}, "eval");
    if (e.contains("mode")) {
      if (!e["mode"].is_string()) throw ConfigError("'eval.mode' must be a string");
      const auto mode = e["mode"].get<std::string>();
      if (mode == "exact") {
        c.eval.mode = EvalMode::kExact;
      } else if (mode == "monte_carlo") {
        c.eval.mode = EvalMode::kMonteCarlo;
      } else {
        throw ConfigError(fmt::format("'eval.mode' has unknown value '{}'", mode));
      }
    }
    c.eval.games = Integer(e, "games", "eval", c.eval.games);
    if (c.eval.games < 1) throw ConfigError("'eval.games' must be >= 1");
    if (e.contains("seed")) {
      if (!e["seed"].is_number_unsigned()) {
        throw ConfigError("'eval.seed' must be a non-negative integer");
      }
      c.eval.seed = e["seed"].get<std::uint64_t>();
    }
    c.tie_epsilon = Number(e, "tie_epsilon", "eval", c.tie_epsilon);
    if (!(c.tie_epsilon >= 0.0)) throw ConfigError("'eval.tie_epsilon' must be >= 0");
  }
  if (doc.contains("landscape")) {
    const auto& l = doc["landscape"];
    RejectUnknown(l, {"alphas", "theta1", "theta2"}, "landscape");
    c.landscape_alphas = Numbers(l, "alphas", "landscape", c.landscape_alphas);
    ParseAxis(l, "theta1", c.theta1_min, c.theta1_max, c.theta1_points);
    ParseAxis(l, "theta2", c.theta2_min, c.theta2_max, c.theta2_points);
  }
  return c;
}

ExperimentConfig ExperimentConfig::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config '{}'", path));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("config '{}' is not valid JSON: {}", path, e.what()));
  }
  return FromJson(doc);
}

nlohmann::json ExperimentConfig::ToJson() const {
  nlohmann::json j;
  j["env"] = env_json;
  j["train"] = train.ToJson();
  j["sweep"] = {{"alphas", sweep_alphas}, {"seeds_per_alpha", seeds_per_alpha}};
  j["eval"] = {{"mode", eval.mode == EvalMode::kExact ? "exact" : "monte_carlo"},
               {"games", eval.games},
               {"seed", eval.seed},
               {"tie_epsilon", tie_epsilon}};
  j["landscape"] = {
      {"alphas", landscape_alphas},
      {"theta1", {{"min", theta1_min}, {"max", theta1_max}, {"points", theta1_points}}},
      {"theta2", {{"min", theta2_min}, {"max", theta2_max}, {"points", theta2_points}}}};
  return j;
}

std::string ExperimentConfig::Digest() const {
  auto j = ToJson();
  j["train"].erase("seed");
  return HexDigest(j.dump());
}

std::string CsvHeaderLine(const std::string& digest) {
  return fmt::format("# xplab {} config_digest={}", kToolVersion, digest);
}

void WriteTrainingLogCsv(const std::string& path, const TrainingLog& log,
                         const std::string& digest) {
  auto out = OpenOut(path);
  out << CsvHeaderLine(digest) << "\n";
  out << "iteration,sp_estimate,mean_entropy,grad_norm\n";
  for (const auto& r : log.rows) {
    out << fmt::format("{},{},{},{}\n", r.iteration, Full(r.sp_estimate),
                       Full(r.mean_entropy), Full(r.grad_norm));
  }
}

void WriteSweepCsv(const std::string& path, const SweepResult& sweep,
                   const std::string& digest) {
  auto out = OpenOut(path);
  out << CsvHeaderLine(digest) << "\n";
  out << "alpha,seed_index,seed,greedy_sp,sampled_sp,argmax\n";
  for (const auto& e : sweep.entries) {
    std::string argmax;
    for (const auto& l : e.argmax_labels) argmax += (argmax.empty() ? "" : ";") + l;
    out << fmt::format("{},{},{},{},{},\"{}\"\n", Full(e.alpha), e.seed_index, e.seed,
                       Full(e.greedy_sp), Full(e.sampled_sp), argmax);
  }
}

void WriteXpMatrixCsv(const std::string& path, const XpMatrix& m,
                      const std::string& digest) {
  auto out = OpenOut(path);
  out << CsvHeaderLine(digest) << "\n";
  out << fmt::format("# rows=seat 1 policy, cols=seat 2 policy, mode={}, games={}\n",
                     m.mode == EvalMode::kExact ? "exact" : "monte_carlo", m.games);
  out << "policy";
  for (const auto& l : m.labels) out << "," << l;
  out << "\n";
  for (int j = 0; j < m.size; ++j) {
    out << m.labels[j];
    for (int k = 0; k < m.size; ++k) out << "," << Full(m.at(j, k));
    out << "\n";
  }
  if (m.mode == EvalMode::kMonteCarlo) {
    out << "# standard errors\n";
    for (int j = 0; j < m.size; ++j) {
      out << m.labels[j];
      for (int k = 0; k < m.size; ++k) {
        out << "," << Full(m.standard_errors[j * m.size + k]);
      }
      out << "\n";
    }
  }
}

void WriteBlockCsv(const std::string& path, const BlockMatrix& b,
                   const std::vector<std::string>& labels, const std::string& digest) {
  auto out = OpenOut(path);
  out << CsvHeaderLine(digest) << "\n";
  out << fmt::format("# group_size={}; diagonal: intra-group XP, sp column: mean SP\n",
                     b.group_size);
  out << "group";
  for (const auto& l : labels) out << "," << l;
  out << ",sp\n";
  for (int g = 0; g < b.groups; ++g) {
    out << labels.at(g);
    for (int h = 0; h < b.groups; ++h) out << "," << Full(b.at(g, h));
    out << "," << Full(b.sp[g]) << "\n";
  }
}

void WriteSurfaceCsv(const std::string& path, const Surface& s,
                     const std::string& digest) {
  auto out = OpenOut(path);
  out << CsvHeaderLine(digest) << "\n";
  out << fmt::format("# alpha={}\n", Full(s.alpha));
  out << "theta1,theta2,value\n";
  for (std::size_t i = 0; i < s.theta1.size(); ++i) {
    for (std::size_t j = 0; j < s.theta2.size(); ++j) {
      out << fmt::format("{},{},{}\n", Full(s.theta1[i]), Full(s.theta2[j]),
                         Full(s.at(i, j)));
    }
  }
}

void WriteGroupsCsv(const std::string& path, const std::vector<GroupReport>& groups,
                    const std::string& digest) {
  auto out = OpenOut(path);
  out << CsvHeaderLine(digest) << "\n";
  out << "group,alpha,config_digest,seeds,sp_mean,sp_sd,xp_teams,xp_mean,xp_sd\n";
  for (const auto& g : groups) {
    out << fmt::format("{},{},{},{},{},{},", g.label, Full(g.alpha), g.config_digest,
                       g.size, Full(g.sp_mean), Full(g.sp_spread));
    if (g.has_xp) {
      out << fmt::format("{},{},{}\n", g.xp.team_count, Full(g.xp.mean),
                         Full(g.xp.spread));
    } else {
      out << "0,,\n";
    }
  }
}

namespace {

using Rgb = std::array<std::uint8_t, 3>;

Rgb Ramp(double t) {
  // Anchor points sampled from the viridis colormap.
  static constexpr double kStops[5][3] = {{68, 1, 84},
                                          {59, 82, 139},
                                          {33, 145, 140},
                                          {94, 201, 98},
                                          {253, 231, 37}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const int k = std::min(3, static_cast<int>(t));
  const double f = t - k;
  Rgb c;
  for (int ch = 0; ch < 3; ++ch) {
    c[ch] = static_cast<std::uint8_t>(
        std::lround(kStops[k][ch] + f * (kStops[k + 1][ch] - kStops[k][ch])));
  }
  return c;
}

// 5x7 glyphs, one row per byte (low 5 bits, MSB left).
const std::array<std::uint8_t, 7>* Glyph(char ch) {
  static const std::array<std::uint8_t, 7> kDigits[10] = {
      {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}, {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},
      {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}, {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},
      {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}, {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},
      {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}, {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},
      {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}, {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}};
  static const std::array<std::uint8_t, 7> kMinus = {0, 0, 0, 0x1F, 0, 0, 0};
  static const std::array<std::uint8_t, 7> kDot = {0, 0, 0, 0, 0, 0x0C, 0x0C};
  static const std::array<std::uint8_t, 7> kN = {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11};
  static const std::array<std::uint8_t, 7> kA = {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11};
  if (ch >= '0' && ch <= '9') return &kDigits[ch - '0'];
  if (ch == '-') return &kMinus;
  if (ch == '.') return &kDot;
  if (ch == 'N') return &kN;
  if (ch == 'A') return &kA;
  return nullptr;
}

struct Canvas {
  int width, height;
  std::vector<std::uint8_t> pixels;

  void Set(int x, int y, const Rgb& c) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    std::copy(c.begin(), c.end(), pixels.begin() + 3 * (y * width + x));
  }
};

void DrawText(Canvas& canvas, const std::string& text, int cx, int cy, int scale,
              const Rgb& color) {
  const int w = static_cast<int>(text.size()) * 6 * scale - scale;
  int x0 = cx - w / 2;
  const int y0 = cy - 7 * scale / 2;
  for (char ch : text) {
    if (const auto* g = Glyph(ch)) {
      for (int r = 0; r < 7; ++r) {
        for (int col = 0; col < 5; ++col) {
          if (!((*g)[r] & (0x10 >> col))) continue;
          for (int dy = 0; dy < scale; ++dy) {
            for (int dx = 0; dx < scale; ++dx) {
              canvas.Set(x0 + col * scale + dx, y0 + r * scale + dy, color);
            }
          }
        }
      }
    }
    x0 += 6 * scale;
  }
}

}  // namespace

void WriteHeatmapPng(const std::string& path, int rows, int cols,
                     const std::vector<double>& values, const std::string& digest,
                     const HeatmapOptions& options) {
  if (rows < 1 || cols < 1 || static_cast<int>(values.size()) != rows * cols) {
    throw XplabError("heatmap dimensions do not match the value count");
  }
  double lo = INFINITY, hi = -INFINITY;
  for (double v : values) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const int cell = std::max(1, options.cell_pixels);
  Canvas canvas{cols * cell, rows * cell, {}};
  canvas.pixels.assign(static_cast<std::size_t>(canvas.width) * canvas.height * 3, 0);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double v = values[r * cols + c];
      Rgb color{128, 128, 128};
      double t = 0.5;
      if (std::isfinite(v)) {
        t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
        color = Ramp(t);
      }
      for (int y = r * cell; y < (r + 1) * cell; ++y) {
        for (int x = c * cell; x < (c + 1) * cell; ++x) canvas.Set(x, y, color);
      }
      if (options.annotate && cell >= 24) {
        const std::string text = std::isfinite(v) ? fmt::format("{:.2f}", v) : "NAN";
        int scale = 3;
        while (scale > 1 && static_cast<int>(text.size()) * 6 * scale - scale > cell - 4) {
          --scale;
        }
        const Rgb ink = t > 0.6 ? Rgb{0, 0, 0} : Rgb{255, 255, 255};
        DrawText(canvas, text, c * cell + cell / 2, r * cell + cell / 2, scale, ink);
      }
    }
  }
  for (const auto& [r, c] : options.markers) {
    const Rgb red{230, 20, 20};
    const int w = std::max(1, cell / 8);
    for (int y = r * cell - w; y < (r + 1) * cell + w; ++y) {
      for (int x = c * cell - w; x < (c + 1) * cell + w; ++x) {
        const bool edge = y < r * cell || y >= (r + 1) * cell || x < c * cell ||
                          x >= (c + 1) * cell || cell <= 2;
        if (edge) canvas.Set(x, y, red);
      }
    }
  }

  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw XplabError(fmt::format("cannot write '{}'", path));
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw XplabError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw XplabError(fmt::format("libpng failed writing '{}'", path));
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, canvas.width, canvas.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  std::string key = "Comment";
  std::string text = fmt::format("xplab {} config_digest={}", kToolVersion, digest);
  png_text chunk{};
  chunk.compression = PNG_TEXT_COMPRESSION_NONE;
  chunk.key = key.data();
  chunk.text = text.data();
  png_set_text(png, info, &chunk, 1);
  png_write_info(png, info);
  for (int y = 0; y < canvas.height; ++y) {
    png_write_row(png, canvas.pixels.data() + static_cast<std::size_t>(y) * canvas.width * 3);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace xplab
