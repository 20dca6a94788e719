#include "whacsim/report.hpp"

#include <array>
#include <filesystem>
#include <fstream>
#include <map>

#include "whacsim/stats.hpp"
#include "whacsim/textio.hpp"

namespace whacsim {

namespace {

const char* kDifficulties[3] = {"easy", "medium", "hard"};
const char* kPlacements[3] = {"low", "mid", "high"};

void write_file(const std::string& path, const std::string& content,
                std::vector<std::string>& written) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write report file: " + path);
  out << content;
  written.push_back(path);
}

std::vector<const EvalRoundRecord*> select(const std::vector<EvalRoundRecord>& records,
                                           const std::string& difficulty,
                                           const std::string& placement) {
  std::vector<const EvalRoundRecord*> out;
  for (const auto& r : records) {
    if (r.difficulty == difficulty && r.placement == placement) out.push_back(&r);
  }
  return out;
}

}  // namespace

ReportResult write_report(const std::vector<EvalRoundRecord>& records,
                          const std::string& out_dir) {
  ReportResult result;
  std::filesystem::create_directories(out_dir);
  auto path = [&](const std::string& name) { return out_dir + "/" + name; };

  // The evaluation grid: three difficulties at mid, three placements at
  // medium. Missing configurations yield a partial report with warnings.
  for (const char* d : kDifficulties) {
    if (select(records, d, "mid").empty()) {
      result.warnings.push_back(std::string("missing configuration: ") + d + "/mid");
    }
  }
  for (const char* p : kPlacements) {
    if (select(records, "medium", p).empty()) {
      result.warnings.push_back(std::string("missing configuration: medium/") + p);
    }
  }

  // Hits and misses per difficulty (mid placement sweep).
  {
    std::string csv = "difficulty,rounds,mean_hits,mean_misses,mean_slow_contacts\n";
    for (const char* d : kDifficulties) {
      auto rows = select(records, d, "mid");
      double hits = 0.0, misses = 0.0, slow = 0.0;
      for (const auto* r : rows) {
        hits += r->hits;
        misses += r->misses;
        slow += r->slow_contacts;
      }
      size_t n = rows.size();
      csv += std::string(d) + "," + std::to_string(n);
      csv += "," + f64_repr(n ? hits / n : 0.0);
      csv += "," + f64_repr(n ? misses / n : 0.0);
      csv += "," + f64_repr(n ? slow / n : 0.0);
      csv += "\n";
    }
    write_file(path("hits_misses_by_difficulty.csv"), csv, result.files_written);
  }

  // Per-round hit rates across the whole grid.
  {
    std::string csv = "difficulty,placement,round,hits,misses,hit_rate\n";
    for (const auto& r : records) {
      csv += r.difficulty + "," + r.placement + "," + std::to_string(r.round);
      csv += "," + std::to_string(r.hits) + "," + std::to_string(r.misses);
      csv += "," + f64_repr(r.hit_rate) + "\n";
    }
    write_file(path("hit_rates.csv"), csv, result.files_written);
  }

  // 3x3 hit-rate heatmaps, one file per configuration present.
  for (const char* d : kDifficulties) {
    for (const char* p : kPlacements) {
      auto rows = select(records, d, p);
      if (rows.empty()) continue;
      std::array<int, 9> spawns{}, hits{};
      for (const auto* r : rows) {
        for (int c = 0; c < 9; ++c) {
          spawns[c] += r->cell_spawns[c];
          hits[c] += r->cell_hits[c];
        }
      }
      std::string csv;
      for (int row = 0; row < 3; ++row) {
        for (int col = 0; col < 3; ++col) {
          int c = row * 3 + col;
          if (col) csv += ",";
          csv += f64_repr(spawns[c] > 0 ? static_cast<double>(hits[c]) / spawns[c] : 0.0);
        }
        csv += "\n";
      }
      write_file(path(std::string("heatmap_") + d + "_" + p + ".csv"), csv,
                 result.files_written);
    }
  }

  // Hitting-speed and hammer-depth distributions, long format.
  {
    std::string csv = "difficulty,placement,round,speed\n";
    for (const auto& r : records) {
      for (double s : r.hitting_speeds) {
        csv += r.difficulty + "," + r.placement + "," + std::to_string(r.round) + "," +
               f64_repr(s) + "\n";
      }
    }
    write_file(path("hitting_speeds.csv"), csv, result.files_written);
  }
  {
    std::string csv = "difficulty,placement,round,depth\n";
    for (const auto& r : records) {
      for (double d : r.hammer_depths) {
        csv += r.difficulty + "," + r.placement + "," + std::to_string(r.round) + "," +
               f64_repr(d) + "\n";
      }
    }
    write_file(path("hammer_depths.csv"), csv, result.files_written);
  }

  // Fatigue by placement with one-sided Wilcoxon comparisons, pairing
  // rounds by index within the medium-difficulty placement sweep.
  {
    std::string csv = "placement,round,max_fatigued\n";
    std::map<std::string, std::vector<double>> fatigued;
    for (const char* p : kPlacements) {
      for (const auto* r : select(records, "medium", p)) {
        fatigued[p].push_back(r->max_fatigued);
        csv += std::string(p) + "," + std::to_string(r->round) + "," +
               f64_repr(r->max_fatigued) + "\n";
      }
    }
    write_file(path("fatigue_by_placement.csv"), csv, result.files_written);

    std::string wcsv = "alternative,n,w_plus,z,p,exact,degenerate\n";
    const std::pair<const char*, const char*> comparisons[3] = {
        {"low", "mid"}, {"mid", "high"}, {"low", "high"}};
    for (const auto& [a, b] : comparisons) {
      const auto& xa = fatigued[a];
      const auto& xb = fatigued[b];
      size_t n = std::min(xa.size(), xb.size());
      wcsv += std::string(a) + "<" + b + ",";
      if (n == 0) {
        wcsv += "0,,,,,\n";
        result.warnings.push_back(std::string("no paired rounds for ") + a + "<" + b);
        continue;
      }
      WilcoxonResult w = wilcoxon_signed_rank(std::span(xa.data(), n), std::span(xb.data(), n),
                                              Alternative::kLess);
      wcsv += std::to_string(w.n) + "," + f64_repr(w.w_plus) + "," + f64_repr(w.z) + "," +
              f64_repr(w.p) + "," + (w.exact ? "true" : "false") + "," +
              (w.degenerate ? "true" : "false") + "\n";
    }
    write_file(path("fatigue_wilcoxon.csv"), wcsv, result.files_written);
  }

  // Machine-readable summary.
  {
    std::string j = "{\"configurations\":[";
    bool first = true;
    for (const char* d : kDifficulties) {
      for (const char* p : kPlacements) {
        auto rows = select(records, d, p);
        if (rows.empty()) continue;
        if (!first) j += ",";
        first = false;
        double hits = 0.0, misses = 0.0, fat = 0.0;
        for (const auto* r : rows) {
          hits += r->hits;
          misses += r->misses;
          fat += r->max_fatigued;
        }
        double n = static_cast<double>(rows.size());
        j += "{\"difficulty\":\"" + std::string(d) + "\",\"placement\":\"" + p + "\"";
        j += ",\"rounds\":" + std::to_string(rows.size());
        j += ",\"mean_hits\":" + f64_repr(hits / n);
        j += ",\"mean_misses\":" + f64_repr(misses / n);
        j += ",\"mean_max_fatigued\":" + f64_repr(fat / n) + "}";
      }
    }
    j += "],\"warnings\":[";
    for (size_t i = 0; i < result.warnings.size(); ++i) {
      if (i) j += ",";
      j += "\"" + json_escape(result.warnings[i]) + "\"";
    }
    j += "]}\n";
    write_file(path("report.json"), j, result.files_written);
  }

  return result;
}

}  // namespace whacsim
