#include "chartevo/types.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>

namespace chartevo {

namespace {

int parse_int(std::string_view text, std::string_view whole) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw FormatError("invalid date '" + std::string(whole) + "' (expected YYYY-MM-DD)");
  }
  return value;
}

}  // namespace

Date Date::from_ymd(int year, unsigned month, unsigned day) {
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                           std::chrono::day{day}};
  if (!ymd.ok()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year, month, day);
    throw FormatError(std::string("invalid calendar date ") + buf);
  }
  return Date(static_cast<std::int32_t>(sys_days{ymd}.time_since_epoch().count()));
}

Date Date::parse(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw FormatError("invalid date '" + std::string(text) + "' (expected YYYY-MM-DD)");
  }
  return from_ymd(parse_int(text.substr(0, 4), text),
                  static_cast<unsigned>(parse_int(text.substr(5, 2), text)),
                  static_cast<unsigned>(parse_int(text.substr(8, 2), text)));
}

std::string Date::to_string() const {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{days_}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int Date::weekday() const {
  using namespace std::chrono;
  const std::chrono::weekday wd{sys_days{days{days_}}};
  return static_cast<int>(wd.iso_encoding()) - 1;
}

void PriceSeries::validate() const {
  if (dates.size() != closes.size()) {
    throw FormatError("series '" + instrument_id + "': dates and closes differ in length");
  }
  for (std::size_t i = 0; i < closes.size(); ++i) {
    if (!(closes[i] > 0.0) || !std::isfinite(closes[i])) {
      throw FormatError("series '" + instrument_id + "': non-positive close on " +
                        dates[i].to_string());
    }
    if (i > 0 && !(dates[i - 1] < dates[i])) {
      throw FormatError("series '" + instrument_id + "': dates not strictly increasing at " +
                        dates[i].to_string());
    }
  }
}

std::optional<std::size_t> PriceSeries::index_of(Date d) const {
  auto it = std::lower_bound(dates.begin(), dates.end(), d);
  if (it == dates.end() || *it != d) return std::nullopt;
  return static_cast<std::size_t>(it - dates.begin());
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::training: return "training";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "unknown";
}

Split parse_split(std::string_view text) {
  if (text == "training" || text == "train") return Split::training;
  if (text == "validation" || text == "valid") return Split::validation;
  if (text == "test") return Split::test;
  throw ConfigError("unknown split '" + std::string(text) + "'");
}

std::optional<double> Chart::forward_return(int k) const {
  auto it = returns.find(k);
  if (it == returns.end()) return std::nullopt;
  return it->second;
}

std::string Chart::id() const { return source_id + "@" + entry_date.to_string(); }

const Dataset& Corpus::at(Split split) const {
  switch (split) {
    case Split::training: return training;
    case Split::validation: return validation;
    case Split::test: return test;
  }
  throw ConfigError("unknown split");
}

Dataset& Corpus::at(Split split) {
  return const_cast<Dataset&>(static_cast<const Corpus&>(*this).at(split));
}

}  // namespace chartevo
