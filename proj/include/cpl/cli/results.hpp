#ifndef CPL_CLI_RESULTS_HPP
#define CPL_CLI_RESULTS_HPP

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "cpl/error.hpp"

namespace cpl::cli {

/// One protocol run, flattened for CSV. `constants` lists every constant the
/// run used, overrides verbatim.
struct ResultRow {
  std::string run_id;
  std::string algorithm;
  std::uint64_t k = 0;
  std::uint64_t d = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  double eta_max = 0.0;
  std::uint64_t samples_consumed = 0;
  std::uint64_t samples_communicated = 0;
  std::uint64_t bits_communicated = 0;
  std::uint64_t rounds = 0;
  bool success = false;
  double max_player_clean_error = 0.0;
  std::uint64_t seed = 0;
  double wall_time_ms = 0.0;
  std::string constants;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

inline const std::vector<std::string>& csv_header() {
  static const std::vector<std::string> h{"run_id",
                                          "algorithm",
                                          "k",
                                          "d",
                                          "epsilon",
                                          "delta",
                                          "eta_max",
                                          "samples_consumed",
                                          "samples_communicated",
                                          "bits_communicated",
                                          "rounds",
                                          "success",
                                          "max_player_clean_error",
                                          "seed",
                                          "wall_time_ms",
                                          "constants"};
  return h;
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> fields_of(const ResultRow& r) {
  return {r.run_id,
          r.algorithm,
          std::to_string(r.k),
          std::to_string(r.d),
          format_double(r.epsilon),
          format_double(r.delta),
          format_double(r.eta_max),
          std::to_string(r.samples_consumed),
          std::to_string(r.samples_communicated),
          std::to_string(r.bits_communicated),
          std::to_string(r.rounds),
          r.success ? "true" : "false",
          format_double(r.max_player_clean_error),
          std::to_string(r.seed),
          format_double(r.wall_time_ms),
          r.constants};
}

inline std::uint64_t to_u64(const std::string& s) {
  std::size_t pos = 0;
  const auto v = std::stoull(s, &pos);
  cpl::detail::require(pos == s.size(), "malformed integer field: " + s);
  return v;
}

inline double to_double(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  cpl::detail::require(pos == s.size(), "malformed numeric field: " + s);
  return v;
}

}  // namespace detail

inline std::string to_csv(const std::vector<ResultRow>& rows) {
  std::string out;
  auto line = [&](const std::vector<std::string>& fs) {
    for (std::size_t i = 0; i < fs.size(); ++i) {
      if (i) out += ',';
      out += detail::quote(fs[i]);
    }
    out += "\r\n";
  };
  line(csv_header());
  for (const auto& r : rows) line(detail::fields_of(r));
  return out;
}

/// RFC 4180 records: quoted fields may hold commas, doubled quotes and line breaks.
inline std::vector<std::vector<std::string>> parse_csv_records(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c != '"') {
        field += c;
      } else if (i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else {
        quoted = false;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      rec.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        rec.push_back(std::move(field));
        records.push_back(std::move(rec));
      }
      rec.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  cpl::detail::require(!quoted, "unterminated quoted CSV field");
  if (any || !field.empty()) {
    rec.push_back(std::move(field));
    records.push_back(std::move(rec));
  }
  return records;
}

inline std::vector<ResultRow> parse_csv(const std::string& text) {
  const auto records = parse_csv_records(text);
  cpl::detail::require(!records.empty() && records.front() == csv_header(), "CSV header does not match ResultRow");
  std::vector<ResultRow> rows;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& f = records[i];
    cpl::detail::require(f.size() == csv_header().size(), "CSV row has the wrong number of fields");
    ResultRow r;
    r.run_id = f[0];
    r.algorithm = f[1];
    r.k = detail::to_u64(f[2]);
    r.d = detail::to_u64(f[3]);
    r.epsilon = detail::to_double(f[4]);
    r.delta = detail::to_double(f[5]);
    r.eta_max = detail::to_double(f[6]);
    r.samples_consumed = detail::to_u64(f[7]);
    r.samples_communicated = detail::to_u64(f[8]);
    r.bits_communicated = detail::to_u64(f[9]);
    r.rounds = detail::to_u64(f[10]);
    cpl::detail::require(f[11] == "true" || f[11] == "false", "success must be true or false");
    r.success = f[11] == "true";
    r.max_player_clean_error = detail::to_double(f[12]);
    r.seed = detail::to_u64(f[13]);
    r.wall_time_ms = detail::to_double(f[14]);
    r.constants = f[15];
    rows.push_back(std::move(r));
  }
  return rows;
}

inline void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << to_csv(rows);
  if (!out) throw std::runtime_error("failed writing " + path);
}

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

template <typename F>
Moments moments(const std::vector<const ResultRow*>& rows, F&& get) {
  Moments m;
  if (rows.empty()) return m;
  for (const auto* r : rows) m.mean += get(*r);
  m.mean /= static_cast<double>(rows.size());
  if (rows.size() > 1) {
    double ss = 0.0;
    for (const auto* r : rows) ss += (get(*r) - m.mean) * (get(*r) - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(rows.size() - 1));
  }
  return m;
}

/// Rows grouped by (algorithm, k, epsilon, eta_max) in first-seen order.
struct Group {
  std::string algorithm;
  std::uint64_t k;
  double epsilon;
  double eta_max;
  std::vector<const ResultRow*> rows;
};

inline std::vector<Group> group_rows(const std::vector<ResultRow>& rows) {
  std::vector<Group> groups;
  for (const auto& r : rows) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      return g.algorithm == r.algorithm && g.k == r.k && g.epsilon == r.epsilon && g.eta_max == r.eta_max;
    });
    if (it == groups.end()) {
      groups.push_back({r.algorithm, r.k, r.epsilon, r.eta_max, {}});
      it = std::prev(groups.end());
    }
    it->rows.push_back(&r);
  }
  return groups;
}

/// Per-group mean and standard deviation of every counter.
inline std::string emit_summary(const std::vector<ResultRow>& rows) {
  cpl::detail::require(!rows.empty(), "summary needs at least one row");
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-18s %4s %7s %6s %5s %24s %24s %22s %12s %8s %18s\n", "algorithm", "k", "epsilon",
                "eta", "runs", "samples consumed", "samples communicated", "bits communicated", "rounds", "success",
                "max clean error");
  os << buf;
  for (const auto& g : group_rows(rows)) {
    auto pm = [&](auto get) {
      const Moments m = moments(g.rows, get);
      char b[64];
      std::snprintf(b, sizeof b, "%.1f ± %.1f", m.mean, m.sd);
      return std::string(b);
    };
    const Moments err = moments(g.rows, [](const ResultRow& r) { return r.max_player_clean_error; });
    const Moments ok = moments(g.rows, [](const ResultRow& r) { return r.success ? 1.0 : 0.0; });
    char e[64];
    std::snprintf(e, sizeof e, "%.4f ± %.4f", err.mean, err.sd);
    std::snprintf(buf, sizeof buf, "%-18s %4" PRIu64 " %7.4g %6.3g %5zu %24s %24s %22s %12s %8.3f %18s\n",
                  g.algorithm.c_str(), g.k, g.epsilon, g.eta_max, g.rows.size(),
                  pm([](const ResultRow& r) { return static_cast<double>(r.samples_consumed); }).c_str(),
                  pm([](const ResultRow& r) { return static_cast<double>(r.samples_communicated); }).c_str(),
                  pm([](const ResultRow& r) { return static_cast<double>(r.bits_communicated); }).c_str(),
                  pm([](const ResultRow& r) { return static_cast<double>(r.rounds); }).c_str(), ok.mean, e);
    os << buf;
  }
  return os.str();
}

/// Ratio of consecutive group means along a sweep, per algorithm.
struct RatioEntry {
  std::string algorithm;
  double from_value;
  double to_value;
  double consumed_ratio;
  double communicated_ratio;
};

inline std::vector<RatioEntry> sweep_ratios(const std::vector<ResultRow>& rows, const std::string& axis) {
  auto value_of = [&](const Group& g) {
    if (axis == "k") return static_cast<double>(g.k);
    if (axis == "epsilon") return g.epsilon;
    return g.eta_max;
  };
  std::vector<RatioEntry> out;
  const auto groups = group_rows(rows);
  std::map<std::string, const Group*> last;
  for (const auto& g : groups) {
    auto it = last.find(g.algorithm);
    if (it != last.end()) {
      const Group& p = *it->second;
      auto mean = [](const Group& x, auto get) { return moments(x.rows, get).mean; };
      auto consumed = [](const ResultRow& r) { return static_cast<double>(r.samples_consumed); };
      auto sent = [](const ResultRow& r) { return static_cast<double>(r.samples_communicated); };
      const double c0 = mean(p, consumed), s0 = mean(p, sent);
      out.push_back({g.algorithm, value_of(p), value_of(g), c0 > 0 ? mean(g, consumed) / c0 : NAN,
                     s0 > 0 ? mean(g, sent) / s0 : NAN});
    }
    last[g.algorithm] = &g;
  }
  return out;
}

inline std::string emit_ratio_table(const std::vector<RatioEntry>& ratios, const std::string& axis) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-18s %10s %10s %16s %20s\n", "algorithm", ("from " + axis).c_str(),
                ("to " + axis).c_str(), "consumed ratio", "communicated ratio");
  os << buf;
  for (const auto& r : ratios) {
    std::snprintf(buf, sizeof buf, "%-18s %10.4g %10.4g %16.4f %20.4f\n", r.algorithm.c_str(), r.from_value,
                  r.to_value, r.consumed_ratio, r.communicated_ratio);
    os << buf;
  }
  return os.str();
}

}  // namespace cpl::cli

#endif
