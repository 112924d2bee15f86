// Dataset rows, JSONL/CSV serialization, batch orchestration and the
// conjecture statistics derived from a dataset.
//
// A row's first four fields (label, field_disc, point, height) are the
// published schema; everything implementation-specific lives under "ext"
// and consumers of the published schema can drop it wholesale.  field_disc
// is 1 for rational points and 0 on rows that carry no point.  height is a
// decimal string so the published schema stays text-exact.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "minpoint/bounds.hpp"
#include "minpoint/config.hpp"
#include "minpoint/curve.hpp"
#include "minpoint/search.hpp"

namespace minpoint {

struct DatasetRow {
  std::string label;
  long field_disc = 0;
  std::string point;
  std::string height;
  // ext
  std::string curve;   // "[a1,a2,a3,a4,a6]", coefficients of the input model
  std::string status;  // PROVED | HEURISTIC | NO_POINT_FOUND | ERROR
  std::string b_e_tier;
  std::optional<double> b_e;
  std::optional<double> d_prime;
  long runtime_ms = 0;
  std::string error;

  bool operator==(const DatasetRow&) const = default;
};

enum class RowFormat { Jsonl, Csv };

inline RowFormat parse_row_format(const std::string& s) {
  if (s == "jsonl") return RowFormat::Jsonl;
  if (s == "csv") return RowFormat::Csv;
  throw ConfigError("unknown format '" + s + "' (expected jsonl or csv)");
}

// -------- JSON --------

inline nlohmann::ordered_json row_json(const DatasetRow& r) {
  nlohmann::ordered_json ext;
  ext["curve"] = r.curve;
  ext["status"] = r.status;
  ext["b_e_tier"] = r.b_e_tier;
  if (r.b_e)
    ext["b_e"] = *r.b_e;
  else
    ext["b_e"] = nullptr;
  if (r.d_prime)
    ext["d_prime"] = *r.d_prime;
  else
    ext["d_prime"] = nullptr;
  ext["runtime_ms"] = r.runtime_ms;
  ext["error"] = r.error;

  nlohmann::ordered_json j;
  j["label"] = r.label;
  j["field_disc"] = r.field_disc;
  j["point"] = r.point;
  j["height"] = r.height;
  j["ext"] = std::move(ext);
  return j;
}

// The published four fields and nothing else.
inline nlohmann::ordered_json paper_schema_projection(const DatasetRow& r) {
  nlohmann::ordered_json j;
  j["label"] = r.label;
  j["field_disc"] = r.field_disc;
  j["point"] = r.point;
  j["height"] = r.height;
  return j;
}

inline DatasetRow row_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::runtime_error("row is not a JSON object");
  DatasetRow r;
  auto need = [&](const char* key) -> const nlohmann::json& {
    auto it = j.find(key);
    if (it == j.end())
      throw std::runtime_error(std::string("missing field '") + key + "'");
    return *it;
  };
  const auto& lab = need("label");
  if (!lab.is_string()) throw std::runtime_error("'label' must be a string");
  r.label = lab.get<std::string>();
  const auto& fd = need("field_disc");
  if (!fd.is_number_integer() && !fd.is_number_unsigned())
    throw std::runtime_error("'field_disc' must be an integer");
  r.field_disc = fd.get<long>();
  const auto& pt = need("point");
  if (!pt.is_string()) throw std::runtime_error("'point' must be a string");
  r.point = pt.get<std::string>();
  // Canonically a decimal string; numeric heights in external files are
  // accepted and reformatted.
  const auto& h = need("height");
  if (h.is_string())
    r.height = h.get<std::string>();
  else if (h.is_number())
    r.height = detail::json_double(h.get<double>());
  else
    throw std::runtime_error("'height' must be a string or number");

  auto eit = j.find("ext");
  if (eit != j.end() && !eit->is_null()) {
    if (!eit->is_object()) throw std::runtime_error("'ext' must be an object");
    const auto& e = *eit;
    auto str_of = [&](const char* key, std::string& into) {
      auto it = e.find(key);
      if (it == e.end() || it->is_null()) return;
      if (!it->is_string())
        throw std::runtime_error(std::string("'ext.") + key +
                                 "' must be a string");
      into = it->get<std::string>();
    };
    auto num_of = [&](const char* key, std::optional<double>& into) {
      auto it = e.find(key);
      if (it == e.end() || it->is_null()) return;
      if (!it->is_number())
        throw std::runtime_error(std::string("'ext.") + key +
                                 "' must be a number");
      into = it->get<double>();
    };
    str_of("curve", r.curve);
    str_of("status", r.status);
    str_of("b_e_tier", r.b_e_tier);
    num_of("b_e", r.b_e);
    num_of("d_prime", r.d_prime);
    auto rit = e.find("runtime_ms");
    if (rit != e.end() && !rit->is_null()) {
      if (!rit->is_number_integer() && !rit->is_number_unsigned())
        throw std::runtime_error("'ext.runtime_ms' must be an integer");
      r.runtime_ms = rit->get<long>();
    }
    str_of("error", r.error);
    // Unknown ext keys are ignored by design.
  }
  return r;
}

// -------- CSV (RFC 4180) --------

namespace detail {

inline const char* kCsvHeader =
    "label,field_disc,point,height,curve,status,b_e_tier,b_e,d_prime,"
    "runtime_ms,error";

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// One record per call; fields may contain quoted newlines.  Returns false
// on clean EOF before any character of a record.
inline bool csv_record(std::istream& in, std::vector<std::string>& fields,
                       long& line, long& start_line) {
  fields.clear();
  int c = in.peek();
  if (c == std::char_traits<char>::eof()) return false;
  start_line = line;
  std::string cur;
  bool quoted = false;
  while (true) {
    c = in.get();
    if (c == std::char_traits<char>::eof()) {
      fields.push_back(cur);
      return true;
    }
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get();
          cur += '"';
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        cur += static_cast<char>(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        break;
      case ',':
        fields.push_back(cur);
        cur.clear();
        break;
      case '\r':
        break;
      case '\n':
        ++line;
        fields.push_back(cur);
        return true;
      default:
        cur += static_cast<char>(c);
    }
  }
}

inline long parse_long_field(const std::string& s, const char* what) {
  if (s.empty()) return 0;
  errno = 0;
  char* end = nullptr;
  long v = std::strtol(s.c_str(), &end, 10);
  if (errno != 0 || end == s.c_str() || *end != '\0')
    throw std::runtime_error(std::string("bad integer in '") + what + "'");
  return v;
}

inline std::optional<double> parse_double_field(const std::string& s,
                                                const char* what) {
  if (s.empty()) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (errno != 0 || end == s.c_str() || *end != '\0')
    throw std::runtime_error(std::string("bad number in '") + what + "'");
  return v;
}

}  // namespace detail

inline std::string row_csv(const DatasetRow& r) {
  using detail::csv_escape;
  std::string s;
  s += csv_escape(r.label);
  s += ',';
  s += std::to_string(r.field_disc);
  s += ',';
  s += csv_escape(r.point);
  s += ',';
  s += csv_escape(r.height);
  s += ',';
  s += csv_escape(r.curve);
  s += ',';
  s += csv_escape(r.status);
  s += ',';
  s += csv_escape(r.b_e_tier);
  s += ',';
  if (r.b_e) s += detail::json_double(*r.b_e);
  s += ',';
  if (r.d_prime) s += detail::json_double(*r.d_prime);
  s += ',';
  s += std::to_string(r.runtime_ms);
  s += ',';
  s += csv_escape(r.error);
  return s;
}

inline DatasetRow row_from_csv_fields(const std::vector<std::string>& f) {
  if (f.size() != 11)
    throw std::runtime_error("expected 11 fields, got " +
                             std::to_string(f.size()));
  DatasetRow r;
  r.label = f[0];
  r.field_disc = detail::parse_long_field(f[1], "field_disc");
  r.point = f[2];
  r.height = f[3];
  r.curve = f[4];
  r.status = f[5];
  r.b_e_tier = f[6];
  r.b_e = detail::parse_double_field(f[7], "b_e");
  r.d_prime = detail::parse_double_field(f[8], "d_prime");
  r.runtime_ms = detail::parse_long_field(f[9], "runtime_ms");
  r.error = f[10];
  return r;
}

// -------- dataset files --------

struct RowParseError {
  long line = 0;
  std::string message;
};

struct Dataset {
  std::vector<DatasetRow> rows;
  std::vector<RowParseError> errors;  // rejected rows, with line numbers
};

inline void write_dataset(std::ostream& out,
                          const std::vector<DatasetRow>& rows, RowFormat fmt) {
  if (fmt == RowFormat::Csv) out << detail::kCsvHeader << '\n';
  for (const auto& r : rows) {
    if (fmt == RowFormat::Jsonl)
      out << row_json(r).dump() << '\n';
    else
      out << row_csv(r) << '\n';
  }
}

// Malformed rows are rejected individually; parsing continues.
inline Dataset read_dataset(std::istream& in, RowFormat fmt) {
  Dataset ds;
  if (fmt == RowFormat::Jsonl) {
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      size_t a = line.find_first_not_of(" \t\r");
      if (a == std::string::npos) continue;
      try {
        ds.rows.push_back(row_from_json(nlohmann::json::parse(line)));
      } catch (const std::exception& ex) {
        ds.errors.push_back({lineno, ex.what()});
      }
    }
    return ds;
  }
  long line = 1, start = 1;
  std::vector<std::string> fields;
  if (!detail::csv_record(in, fields, line, start)) return ds;
  if (fields.size() != 11 ||
      [&] {
        std::string h;
        for (size_t i = 0; i < fields.size(); ++i) {
          if (i) h += ',';
          h += fields[i];
        }
        return h != detail::kCsvHeader;
      }()) {
    ds.errors.push_back({start, "bad CSV header"});
    return ds;
  }
  while (detail::csv_record(in, fields, line, start)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    try {
      ds.rows.push_back(row_from_csv_fields(fields));
    } catch (const std::exception& ex) {
      ds.errors.push_back({start, ex.what()});
    }
  }
  return ds;
}

// -------- rows from search results --------

inline std::string equation_str(const CurveModel& E) {
  std::string s = "[";
  s += E.a1().get_str() + "," + E.a2().get_str() + "," + E.a3().get_str() +
       "," + E.a4().get_str() + "," + E.a6().get_str();
  s += "]";
  return s;
}

inline DatasetRow row_from_certificate(const CurveModel& E,
                                       const SearchCertificate& cert,
                                       long runtime_ms) {
  DatasetRow r;
  r.label = E.label();
  r.curve = equation_str(E);
  r.status = status_name(cert.status);
  r.b_e_tier = tier_name(cert.tier);
  r.b_e = cert.b_e;
  r.d_prime = cert.d_prime;
  r.runtime_ms = runtime_ms;
  if (cert.winner) {
    r.field_disc = static_cast<long>(cert.winner->field().disc().get_si());
    r.point = cert.winner->str();
    r.height = detail::json_double(cert.winner_height.value());
  }
  return r;
}

inline DatasetRow error_row(std::string label, std::string curve,
                            std::string message, long runtime_ms) {
  DatasetRow r;
  r.label = std::move(label);
  r.curve = std::move(curve);
  r.status = "ERROR";
  r.error = std::move(message);
  r.runtime_ms = runtime_ms;
  return r;
}

// Timing is the one row field allowed to vary between reruns; comparisons
// of batch outputs go through this.
inline DatasetRow strip_timing(DatasetRow r) {
  r.runtime_ms = 0;
  return r;
}

// -------- batch --------

struct BatchSummary {
  long curves = 0;
  long proved = 0;
  long heuristic = 0;
  long no_point = 0;
  long failed = 0;

  std::string str() const {
    std::string s = std::to_string(curves) + " curves: " +
                    std::to_string(proved) + " PROVED, " +
                    std::to_string(heuristic) + " HEURISTIC, " +
                    std::to_string(no_point) + " NO_POINT_FOUND, " +
                    std::to_string(failed) + " ERROR";
    return s;
  }
};

// One row per input curve, in input order.  '#' comments and blank lines
// are skipped.  Per-curve failures become ERROR rows, never exceptions.
inline BatchSummary run_batch(std::istream& in, const SearchConfig& cfg,
                              std::ostream& out, RowFormat fmt) {
  BatchSummary sum;
  if (fmt == RowFormat::Csv) out << detail::kCsvHeader << '\n';
  std::string line;
  while (std::getline(in, line)) {
    size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos || line[a] == '#') continue;
    size_t b = line.find_last_not_of(" \t\r");
    std::string spec = line.substr(a, b - a + 1);
    ++sum.curves;
    auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&t0] {
      return static_cast<long>(
          std::chrono::duration_cast<std::chrono::milliseconds>(
              std::chrono::steady_clock::now() - t0)
              .count());
    };
    DatasetRow row;
    try {
      CurveModel E = parse_curve(spec);
      try {
        SearchCertificate cert = certify_minimum(E, cfg);
        row = row_from_certificate(E, cert, elapsed());
      } catch (const std::exception& ex) {
        row = error_row(E.label(), equation_str(E), ex.what(), elapsed());
      }
    } catch (const std::exception& ex) {
      row = error_row(spec, "", ex.what(), elapsed());
    }
    if (row.status == "PROVED")
      ++sum.proved;
    else if (row.status == "HEURISTIC")
      ++sum.heuristic;
    else if (row.status == "NO_POINT_FOUND")
      ++sum.no_point;
    else
      ++sum.failed;
    if (fmt == RowFormat::Jsonl)
      out << row_json(row).dump() << '\n';
    else
      out << row_csv(row) << '\n';
  }
  return sum;
}

// -------- statistics --------

struct ScatterPoint {
  std::string label;
  long field_disc = 0;
  double height = 0;
  long degree = 0;
  double height_times_degree = 0;
  double log_abs_disc_min = 0;
  double lang_invariant = 0;
  double lang_ratio = 0;
};

struct StatsSummary {
  long rows_total = 0;
  long rows_with_point = 0;
  long rows_with_curve = 0;
  long rows_rejected = 0;
  // (field_disc, count), count descending then |disc| ascending.
  std::vector<std::pair<long, long>> field_frequency;
  std::optional<double> min_height_times_degree, max_height_times_degree;
  std::string argmin_height_times_degree;
  std::optional<double> min_lang_ratio, max_lang_ratio;
  std::string argmin_lang_ratio;

  std::string json() const {
    nlohmann::ordered_json j;
    j["rows"] = rows_total;
    j["rows_with_point"] = rows_with_point;
    j["rows_with_curve"] = rows_with_curve;
    j["rows_rejected"] = rows_rejected;
    auto freq = nlohmann::ordered_json::array();
    for (const auto& [disc, count] : field_frequency) {
      nlohmann::ordered_json e;
      e["field_disc"] = disc;
      e["count"] = count;
      freq.push_back(std::move(e));
    }
    j["field_frequency"] = std::move(freq);
    auto opt = [](const std::optional<double>& v) {
      return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    };
    j["min_height_times_degree"] = opt(min_height_times_degree);
    j["max_height_times_degree"] = opt(max_height_times_degree);
    j["argmin_height_times_degree"] = argmin_height_times_degree;
    j["min_lang_ratio"] = opt(min_lang_ratio);
    j["max_lang_ratio"] = opt(max_lang_ratio);
    j["argmin_lang_ratio"] = argmin_lang_ratio;
    return j.dump();
  }
};

struct StatsResult {
  StatsSummary summary;
  std::vector<ScatterPoint> scatter;  // rows whose ext carries the curve
};

inline StatsResult conjecture_stats(const Dataset& ds) {
  StatsResult out;
  StatsSummary& s = out.summary;
  s.rows_total = static_cast<long>(ds.rows.size());
  s.rows_rejected = static_cast<long>(ds.errors.size());
  std::map<long, long> freq;
  for (const DatasetRow& r : ds.rows) {
    if (r.field_disc == 0 || r.height.empty()) continue;
    char* end = nullptr;
    double h = std::strtod(r.height.c_str(), &end);
    if (end == r.height.c_str() || !(h == h)) continue;
    ++s.rows_with_point;
    ++freq[r.field_disc];
    long degree = r.field_disc == 1 ? 1 : 2;
    double hd = h * static_cast<double>(degree);
    if (!s.min_height_times_degree || hd < *s.min_height_times_degree) {
      s.min_height_times_degree = hd;
      s.argmin_height_times_degree = r.label;
    }
    if (!s.max_height_times_degree || hd > *s.max_height_times_degree)
      s.max_height_times_degree = hd;
    if (r.curve.empty()) continue;
    try {
      CurveModel E = parse_curve(r.curve);
      CurveModel emin = E.minimal_model().first;
      RealInterval me = lang_invariant(E);
      ScatterPoint p;
      p.label = r.label;
      p.field_disc = r.field_disc;
      p.height = h;
      p.degree = degree;
      p.height_times_degree = hd;
      mpz_class nd = abs(mpz_class(emin.disc().get_num()));
      p.log_abs_disc_min = RealInterval::from_mpz(nd, 64).log().mid();
      p.lang_invariant = me.mid();
      p.lang_ratio = h / p.lang_invariant;
      out.scatter.push_back(p);
      ++s.rows_with_curve;
      if (!s.min_lang_ratio || p.lang_ratio < *s.min_lang_ratio) {
        s.min_lang_ratio = p.lang_ratio;
        s.argmin_lang_ratio = r.label;
      }
      if (!s.max_lang_ratio || p.lang_ratio > *s.max_lang_ratio)
        s.max_lang_ratio = p.lang_ratio;
    } catch (const std::exception&) {
      // Curve extension unusable; the published fields still counted.
    }
  }
  s.field_frequency.assign(freq.begin(), freq.end());
  std::sort(s.field_frequency.begin(), s.field_frequency.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              long aa = std::labs(a.first), ab = std::labs(b.first);
              if (aa != ab) return aa < ab;
              return a.first > b.first;
            });
  return out;
}

inline void write_scatter_csv(std::ostream& out,
                              const std::vector<ScatterPoint>& pts) {
  out << "label,field_disc,height,degree,height_times_degree,"
         "log_abs_disc_min,lang_invariant,lang_ratio\n";
  for (const auto& p : pts) {
    out << detail::csv_escape(p.label) << ',' << p.field_disc << ','
        << detail::json_double(p.height) << ',' << p.degree << ','
        << detail::json_double(p.height_times_degree) << ','
        << detail::json_double(p.log_abs_disc_min) << ','
        << detail::json_double(p.lang_invariant) << ','
        << detail::json_double(p.lang_ratio) << '\n';
  }
}

}  // namespace minpoint
