#include "chartevo/series_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace chartevo {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

PriceSeries read_series_csv(std::istream& in, std::string instrument_id,
                            const std::string& origin) {
  PriceSeries series;
  series.instrument_id = std::move(instrument_id);
  std::string line;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto comma = view.find(',');
    if (comma == std::string_view::npos) {
      throw FormatError(origin + ":" + std::to_string(line_no) + ": expected 'date,close'");
    }
    const std::string_view date_text = trim(view.substr(0, comma));
    const std::string_view close_text = trim(view.substr(comma + 1));
    Date date;
    try {
      date = Date::parse(date_text);
    } catch (const FormatError&) {
      if (first_content) {
        first_content = false;
        continue;  // header
      }
      throw FormatError(origin + ":" + std::to_string(line_no) + ": bad date '" +
                        std::string(date_text) + "'");
    }
    first_content = false;
    double close = 0.0;
    auto [ptr, ec] = std::from_chars(close_text.data(), close_text.data() + close_text.size(), close);
    if (ec != std::errc{} || ptr != close_text.data() + close_text.size()) {
      throw FormatError(origin + ":" + std::to_string(line_no) + ": bad close '" +
                        std::string(close_text) + "'");
    }
    series.dates.push_back(date);
    series.closes.push_back(close);
  }
  try {
    series.validate();
  } catch (const FormatError& e) {
    throw FormatError(origin + ": " + e.what());
  }
  return series;
}

PriceSeries read_series_csv(const std::filesystem::path& file, std::string instrument_id) {
  std::ifstream in(file);
  if (!in) throw FormatError("cannot open series file '" + file.string() + "'");
  return read_series_csv(in, std::move(instrument_id), file.string());
}

void write_series_csv(std::ostream& out, const PriceSeries& series) {
  out << "date,close\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << series.dates[i].to_string() << ',' << series.closes[i] << '\n';
  }
}

std::vector<PriceSeries> load_series_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw FormatError("input directory '" + dir.string() + "' does not exist");
  }
  std::vector<PriceSeries> out;
  const fs::path manifest = dir / "manifest.json";
  if (fs::exists(manifest)) {
    std::ifstream in(manifest);
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(manifest.string() + ": " + e.what());
    }
    if (!doc.contains("instruments") || !doc["instruments"].is_array()) {
      throw FormatError(manifest.string() + ": missing 'instruments' array");
    }
    for (const auto& entry : doc["instruments"]) {
      if (!entry.contains("id") || !entry.contains("file")) {
        throw FormatError(manifest.string() + ": instrument entries need 'id' and 'file'");
      }
      out.push_back(read_series_csv(dir / entry["file"].get<std::string>(),
                                    entry["id"].get<std::string>()));
    }
    return out;
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) out.push_back(read_series_csv(f, f.stem().string()));
  return out;
}

std::vector<std::filesystem::path> write_series_dir(const std::filesystem::path& dir,
                                                    const std::vector<PriceSeries>& series) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  nlohmann::json manifest;
  manifest["format"] = "chartevo-series";
  manifest["version"] = 1;
  manifest["instruments"] = nlohmann::json::array();
  for (const auto& s : series) {
    const std::string file = s.instrument_id + ".csv";
    std::ofstream out(dir / file);
    if (!out) throw FormatError("cannot write '" + (dir / file).string() + "'");
    write_series_csv(out, s);
    manifest["instruments"].push_back({{"id", s.instrument_id}, {"file", file}});
    written.push_back(dir / file);
  }
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  written.push_back(dir / "manifest.json");
  return written;
}

}  // namespace chartevo
