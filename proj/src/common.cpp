#include "tedrate/common.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace tedrate {

double Rng::normal() {
  if (have_cached_) {
    have_cached_ = false;
    return cached_;
  }
  double u1 = 0.0;
  while (u1 <= 0.0) u1 = uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * M_PI * u2;
  cached_ = r * std::sin(a);
  have_cached_ = true;
  return r * std::cos(a);
}

std::string lower_copy(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim_copy(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_on(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::string format_double(double x) {
  // shortest decimal that parses back to the same bits
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw Error("format_double: buffer too small");
  return std::string(buf, end);
}

double parse_double(std::string_view s, std::string_view context) {
  std::string t = trim_copy(s);
  if (t.empty()) throw DataError(std::string(context) + ": empty number");
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size())
    throw DataError(std::string(context) + ": bad number '" + t + "'");
  return v;
}

long long parse_int(std::string_view s, std::string_view context) {
  std::string t = trim_copy(s);
  long long v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size())
    throw DataError(std::string(context) + ": bad integer '" + t + "'");
  return v;
}

Date Date::parse(std::string_view iso) {
  std::string t = trim_copy(iso);
  if (t.size() < 10 || t[4] != '-' || t[7] != '-')
    throw DataError("bad date '" + t + "', expected YYYY-MM-DD");
  Date d;
  d.year = static_cast<int>(parse_int(t.substr(0, 4), "date year"));
  d.month = static_cast<unsigned>(parse_int(t.substr(5, 2), "date month"));
  d.day = static_cast<unsigned>(parse_int(t.substr(8, 2), "date day"));
  if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31)
    throw DataError("bad date '" + t + "'");
  return d;
}

std::string Date::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", year, month, day);
  return buf;
}

long Date::day_number() const {
  using namespace std::chrono;
  year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  return sys_days{ymd}.time_since_epoch().count();
}

Date Date::plus_months(int n) const {
  using namespace std::chrono;
  year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  ymd += months{n};
  if (!ymd.ok()) ymd = ymd.year() / ymd.month() / std::chrono::last;
  return Date{int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day())};
}

}  // namespace tedrate
