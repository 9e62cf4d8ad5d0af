#ifndef TEDRATE_COMMON_HPP
#define TEDRATE_COMMON_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tedrate {

// Error taxonomy. The CLI maps these onto exit codes:
//   UsageError -> 1, DataError -> 2, NumericError -> 3.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& msg) : Error(msg) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(msg) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : s) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Deterministic RNG used everywhere. All draws go through explicit
// algorithms (no std distributions) so the same seed yields the same
// stream on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed == 0 ? 0x853c49e6748fea9bull : seed) {
    // warm up so nearby seeds diverge
    for (int i = 0; i < 4; ++i) next_u64();
  }

  std::uint64_t next_u64() {
    // xorshift64* stream seeded through splitmix
    state_ = mix64(state_);
    return state_;
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller (cached pair)
  double normal();

  // uniform integer in [0, n)
  std::uint64_t bounded(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // independent child stream identified by a tag
  Rng split(std::string_view tag) const { return Rng(mix64(state_ ^ fnv1a64(tag))); }

 private:
  std::uint64_t state_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

// --- small string/number helpers shared across modules ---

std::string lower_copy(std::string_view s);
std::string trim_copy(std::string_view s);
std::vector<std::string> split_on(std::string_view s, char sep);

// Round-trippable decimal rendering of a double (used by every CSV/text
// writer so identical runs produce identical bytes).
std::string format_double(double x);

// Parses strictly; throws DataError on garbage.
double parse_double(std::string_view s, std::string_view context);
long long parse_int(std::string_view s, std::string_view context);

// ISO-8601 calendar date.
struct Date {
  int year = 0;
  unsigned month = 1;
  unsigned day = 1;

  static Date parse(std::string_view iso);  // "YYYY-MM-DD"
  std::string to_string() const;
  long day_number() const;  // days since 1970-01-01
  Date plus_months(int n) const;
  bool operator==(const Date&) const = default;
};

inline long days_between(const Date& from, const Date& to) {
  return to.day_number() - from.day_number();
}

}  // namespace tedrate

#endif  // TEDRATE_COMMON_HPP
