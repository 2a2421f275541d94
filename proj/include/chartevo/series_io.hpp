#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "chartevo/types.hpp"

namespace chartevo {

/// Reads `date,close` rows. A leading header line is skipped if its first field is not
/// a date. Blank lines and lines starting with '#' are ignored.
PriceSeries read_series_csv(std::istream& in, std::string instrument_id,
                            const std::string& origin = "<stream>");
PriceSeries read_series_csv(const std::filesystem::path& file, std::string instrument_id);

void write_series_csv(std::ostream& out, const PriceSeries& series);

/// Loads every instrument listed in `<dir>/manifest.json`, or every `*.csv` in the
/// directory (instrument id = file stem) when there is no manifest.
std::vector<PriceSeries> load_series_dir(const std::filesystem::path& dir);

/// Writes one CSV per series plus `manifest.json`; returns the written file paths.
std::vector<std::filesystem::path> write_series_dir(const std::filesystem::path& dir,
                                                    const std::vector<PriceSeries>& series);

}  // namespace chartevo
