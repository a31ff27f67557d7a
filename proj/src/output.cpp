#include "dkff/output.hpp"

#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "dkff/error.hpp"

namespace dkff {

using nlohmann::ordered_json;

namespace {

std::string num(double v, int digits = 10) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

ordered_json stats_json(const CellStats& s) {
  return {{"avg_lateral_error_m", s.lateral},
          {"avg_longitudinal_error_m", s.longitudinal},
          {"seeds", s.seeds},
          {"diverged", s.diverged},
          {"failed", s.failed}};
}

}  // namespace

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp =
      path.string() + ".tmp." + std::to_string(static_cast<long>(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorKind::kIo, "write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::kIo, "cannot move output into place at '" + path.string() + "'");
  }
}

std::string run_csv(const RunResult& result) {
  std::ostringstream out;
  out << "t,truth_x,truth_y,truth_z,truth_yaw,est_x,est_y,est_z,est_yaw,lat_err,long_err\n";
  for (const auto& r : result.records) {
    out << num(r.t) << ',' << num(r.truth_position.x()) << ',' << num(r.truth_position.y()) << ','
        << num(r.truth_position.z()) << ',' << num(r.truth_yaw) << ',' << num(r.est_position.x()) << ','
        << num(r.est_position.y()) << ',' << num(r.est_position.z()) << ',' << num(r.est_yaw) << ','
        << num(r.lateral) << ',' << num(r.longitudinal) << '\n';
  }
  return out.str();
}

std::string run_summary_json(const RunResult& result, const Scenario& scenario) {
  const RunSummary& s = result.summary;
  const Estimates& e = result.estimates;
  ordered_json doc = {
      {"variant", to_string(scenario.variant)},
      {"association", to_string(scenario.association)},
      {"seed", scenario.seed},
      {"ticks", s.ticks},
      {"avg_lateral_error_m", s.mean_abs_lateral},
      {"avg_longitudinal_error_m", s.mean_abs_longitudinal},
      {"max_lateral_error_m", s.max_abs_lateral},
      {"max_longitudinal_error_m", s.max_abs_longitudinal},
      {"final_position_error_m", s.final_position_error},
      {"diverged", s.diverged},
      {"measurements", {{"accepted", e.accepted}, {"gated", e.gated}, {"unusable", e.unusable},
                        {"unassociated", e.unassociated}}},
  };
  if (e.failed) doc["failure"] = e.failure;
  return doc.dump(2) + "\n";
}

std::string run_summary_markdown(const RunResult& result) {
  const RunSummary& s = result.summary;
  std::ostringstream out;
  out << "| metric | value |\n|---|---|\n"
      << "| avg lateral error (m) | " << fixed(s.mean_abs_lateral, 4) << " |\n"
      << "| avg longitudinal error (m) | " << fixed(s.mean_abs_longitudinal, 4) << " |\n"
      << "| max lateral error (m) | " << fixed(s.max_abs_lateral, 4) << " |\n"
      << "| max longitudinal error (m) | " << fixed(s.max_abs_longitudinal, 4) << " |\n"
      << "| final position error (m) | " << num(s.final_position_error, 4) << " |\n"
      << "| diverged | " << (s.diverged ? "yes" : "no") << " |\n";
  return out.str();
}

std::string sweep_csv(const std::vector<SweepCell>& cells) {
  std::ostringstream out;
  out << "count,noise_px2,avg_lat_err,avg_long_err,seeds,diverged,failed\n";
  for (const auto& c : cells) {
    out << c.count << ',' << num(c.noise) << ',' << num(c.stats.lateral) << ',' << num(c.stats.longitudinal)
        << ',' << c.stats.seeds << ',' << c.stats.diverged << ',' << c.stats.failed << '\n';
  }
  return out.str();
}

std::string sweep_json(const std::vector<SweepCell>& cells) {
  ordered_json doc = ordered_json::array();
  for (const auto& c : cells) {
    ordered_json row = {{"count", c.count}, {"noise_px2", c.noise}};
    row.update(stats_json(c.stats));
    doc.push_back(row);
  }
  return doc.dump(2) + "\n";
}

std::string sweep_markdown(const std::vector<SweepCell>& cells) {
  std::vector<double> levels;
  std::vector<int> counts;
  std::map<std::pair<int, double>, const SweepCell*> at;
  for (const auto& c : cells) {
    if (std::find(levels.begin(), levels.end(), c.noise) == levels.end()) levels.push_back(c.noise);
    if (std::find(counts.begin(), counts.end(), c.count) == counts.end()) counts.push_back(c.count);
    at[{c.count, c.noise}] = &c;
  }
  std::ostringstream out;
  out << "| points |";
  for (double l : levels) out << " lat (" << num(l, 4) << " px²) | long (" << num(l, 4) << " px²) |";
  out << "\n|---|";
  for (std::size_t i = 0; i < levels.size(); ++i) out << "---|---|";
  out << '\n';
  for (int c : counts) {
    out << "| " << c << " |";
    for (double l : levels) {
      const SweepCell* cell = at[{c, l}];
      out << ' ' << fixed(cell->stats.lateral, 3) << " | " << fixed(cell->stats.longitudinal, 3) << " |";
    }
    out << '\n';
  }
  return out.str();
}

std::string combo_csv(const std::vector<ComboRow>& rows) {
  std::ostringstream out;
  out << "features,avg_lat_err,avg_long_err,seeds,diverged,failed\n";
  for (const auto& r : rows) {
    out << r.label << ',' << num(r.stats.lateral) << ',' << num(r.stats.longitudinal) << ','
        << r.stats.seeds << ',' << r.stats.diverged << ',' << r.stats.failed << '\n';
  }
  return out.str();
}

std::string combo_json(const std::vector<ComboRow>& rows) {
  ordered_json doc = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json row = {{"features", r.label}};
    row.update(stats_json(r.stats));
    doc.push_back(row);
  }
  return doc.dump(2) + "\n";
}

std::string combo_markdown(const std::vector<ComboRow>& rows) {
  std::ostringstream out;
  out << "| Features | Average lat. Error(m) | Average long. Error(m) |\n|---|---|---|\n";
  for (const auto& r : rows) {
    out << "| " << r.label << " | " << fixed(r.stats.lateral, 3) << " | " << fixed(r.stats.longitudinal, 3)
        << " |\n";
  }
  return out.str();
}

}  // namespace dkff
