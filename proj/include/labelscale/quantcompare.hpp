#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <ostream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "labelscale/errors.hpp"

namespace labelscale {

enum class QuantMetric { ScarMl = 0, ScarPct = 1, MoPct = 2 };

inline constexpr std::array<QuantMetric, 3> kQuantMetrics{QuantMetric::ScarMl,
                                                          QuantMetric::ScarPct,
                                                          QuantMetric::MoPct};

inline std::string_view to_string(QuantMetric m) noexcept {
  switch (m) {
    case QuantMetric::ScarMl: return "scar_ml";
    case QuantMetric::ScarPct: return "scar_pct";
    case QuantMetric::MoPct: return "mo_pct";
  }
  return "unknown";
}

/// One stack's quantification triple for one method.
struct QuantRecord {
  std::string stack_id;
  std::string method;
  double scar_ml = 0.0;
  double scar_pct = 0.0;
  double mo_pct = 0.0;

  double value(QuantMetric m) const noexcept {
    switch (m) {
      case QuantMetric::ScarMl: return scar_ml;
      case QuantMetric::ScarPct: return scar_pct;
      case QuantMetric::MoPct: return mo_pct;
    }
    return 0.0;
  }

  void validate() const {
    const auto bad = [&](const char* what) {
      throw ValidationError("record " + stack_id + "/" + method + ": " + what);
    };
    if (!std::isfinite(scar_ml) || scar_ml < 0.0) bad("scar_ml must be >= 0");
    if (!std::isfinite(scar_pct) || scar_pct < 0.0 || scar_pct > 100.0) bad("scar_pct outside [0,100]");
    if (!std::isfinite(mo_pct) || mo_pct < 0.0 || mo_pct > 100.0) bad("mo_pct outside [0,100]");
  }
};

enum class PredicateMode { ValueBelow, AbsDiffBelow };

inline std::string_view to_string(PredicateMode m) noexcept {
  return m == PredicateMode::ValueBelow ? "value-below" : "abs-diff-below";
}

inline std::optional<PredicateMode> parse_predicate_mode(std::string_view s) noexcept {
  if (s == "value-below") return PredicateMode::ValueBelow;
  if (s == "abs-diff-below") return PredicateMode::AbsDiffBelow;
  return std::nullopt;
}

struct OptionThresholds {
  double scar_ml_tau = 25.0;
  double scar_pct_tau = 15.0;
  double mo_pct_tau = 0.35;
  PredicateMode mode = PredicateMode::ValueBelow;

  double tau(QuantMetric m) const noexcept {
    switch (m) {
      case QuantMetric::ScarMl: return scar_ml_tau;
      case QuantMetric::ScarPct: return scar_pct_tau;
      case QuantMetric::MoPct: return mo_pct_tau;
    }
    return 0.0;
  }

  void validate() const {
    if (!(scar_ml_tau > 0.0 && scar_pct_tau > 0.0 && mo_pct_tau > 0.0)) {
      throw ValidationError("option-1 thresholds must be > 0");
    }
  }
};

/// Percentages for one method, indexed by QuantMetric. Empty when undefined
/// (zero manual sum).
using OptionRow = std::array<std::optional<double>, 3>;

namespace detail {

struct AlignedStack {
  const QuantRecord* manual;
  const QuantRecord* automated;
};

inline std::vector<AlignedStack> align(std::span<const QuantRecord> manual,
                                       std::span<const QuantRecord> automated) {
  if (manual.empty()) throw ValidationError("quantification comparison needs >= 1 stack");
  std::map<std::string, const QuantRecord*> by_id;
  for (const auto& r : manual) {
    if (!by_id.emplace(r.stack_id, &r).second) {
      throw ValidationError("duplicate manual stack id " + r.stack_id);
    }
  }
  std::vector<AlignedStack> out;
  std::set<std::string> seen;
  for (const auto& r : automated) {
    const auto it = by_id.find(r.stack_id);
    if (it == by_id.end()) {
      throw ValidationError("stack id mismatch: " + r.method + " has " + r.stack_id +
                            " which manual lacks");
    }
    if (!seen.insert(r.stack_id).second) {
      throw ValidationError("duplicate stack id " + r.stack_id + " for " + r.method);
    }
    out.push_back({it->second, &r});
  }
  if (out.size() != manual.size()) {
    for (const auto& [id, rec] : by_id) {
      if (!seen.contains(id)) {
        throw ValidationError("stack id mismatch: manual has " + id + " which " +
                              (automated.empty() ? std::string("the method") : automated.front().method) +
                              " lacks");
      }
    }
  }
  return out;
}

}  // namespace detail

/// Share of stacks (in percent) meeting the per-metric threshold predicate.
inline OptionRow option1(std::span<const QuantRecord> manual, std::span<const QuantRecord> automated,
                         const OptionThresholds& thresholds) {
  thresholds.validate();
  const auto stacks = detail::align(manual, automated);
  OptionRow row;
  for (const QuantMetric m : kQuantMetrics) {
    std::size_t hits = 0;
    for (const auto& s : stacks) {
      const double a = s.automated->value(m);
      const double probe = thresholds.mode == PredicateMode::ValueBelow
                               ? a
                               : std::abs(a - s.manual->value(m));
      hits += probe < thresholds.tau(m);
    }
    row[static_cast<std::size_t>(m)] =
        100.0 * static_cast<double>(hits) / static_cast<double>(stacks.size());
  }
  return row;
}

/// 100 * sum(auto) / sum(manual) per metric.
inline OptionRow option2(std::span<const QuantRecord> manual, std::span<const QuantRecord> automated) {
  const auto stacks = detail::align(manual, automated);
  OptionRow row;
  for (const QuantMetric m : kQuantMetrics) {
    double sum_manual = 0.0;
    double sum_auto = 0.0;
    for (const auto& s : stacks) {
      sum_manual += s.manual->value(m);
      sum_auto += s.automated->value(m);
    }
    if (sum_manual > 0.0) row[static_cast<std::size_t>(m)] = 100.0 * sum_auto / sum_manual;
  }
  return row;
}

/// 100 * (1 - sum|auto - manual| / sum(manual)) per metric, clamped to [0, 100].
inline OptionRow option3(std::span<const QuantRecord> manual, std::span<const QuantRecord> automated) {
  const auto stacks = detail::align(manual, automated);
  OptionRow row;
  for (const QuantMetric m : kQuantMetrics) {
    double sum_manual = 0.0;
    double sum_diff = 0.0;
    for (const auto& s : stacks) {
      sum_manual += s.manual->value(m);
      sum_diff += std::abs(s.automated->value(m) - s.manual->value(m));
    }
    if (sum_manual > 0.0) {
      row[static_cast<std::size_t>(m)] = std::clamp(100.0 * (1.0 - sum_diff / sum_manual), 0.0, 100.0);
    }
  }
  return row;
}

/// One table shaped like "metric x network": rows[n] holds network n.
struct OptionTable {
  std::string title;
  std::vector<std::string> networks;
  std::vector<OptionRow> rows;

  std::optional<double> value(QuantMetric m, std::size_t network) const {
    return rows.at(network)[static_cast<std::size_t>(m)];
  }
};

struct TallyReport {
  std::vector<std::string> networks;
  std::vector<int> wins;
  int slots = 0;

  double fraction(std::size_t network) const {
    return static_cast<double>(wins.at(network)) / static_cast<double>(slots);
  }
};

/// Credits, for every (table, metric) slot, each network that attains the
/// slot maximum. Ties credit every tied network. Values closer than 1e-9
/// count as tied.
inline TallyReport tally(std::span<const OptionTable> tables) {
  if (tables.empty()) throw ValidationError("tally: no tables");
  const auto& networks = tables.front().networks;
  if (networks.size() < 2) throw ValidationError("tally: need at least two networks");

  TallyReport report;
  report.networks = networks;
  report.wins.assign(networks.size(), 0);
  for (const auto& t : tables) {
    if (t.networks != networks || t.rows.size() != networks.size()) {
      throw ValidationError("tally: malformed table '" + t.title + "'");
    }
    for (const QuantMetric m : kQuantMetrics) {
      std::optional<double> best;
      for (std::size_t n = 0; n < networks.size(); ++n) {
        const auto v = t.value(m, n);
        if (v && (!best || *v > *best)) best = v;
      }
      if (!best) {
        throw ValidationError("tally: table '" + t.title + "' has no value for " +
                              std::string(to_string(m)));
      }
      for (std::size_t n = 0; n < networks.size(); ++n) {
        const auto v = t.value(m, n);
        if (v && std::abs(*v - *best) <= 1e-9) ++report.wins[n];
      }
      ++report.slots;
    }
  }
  return report;
}

struct QuantComparison {
  OptionThresholds thresholds;
  std::array<OptionTable, 3> tables;
  std::optional<TallyReport> tally;  // needs two or more automated methods
};

/// Splits records into the manual reference and the automated methods
/// (in first-appearance order) and runs all three options plus the tally.
inline QuantComparison compare_quantification(std::span<const QuantRecord> records,
                                              const OptionThresholds& thresholds,
                                              std::string_view manual_method = "manual") {
  std::vector<QuantRecord> manual;
  std::vector<std::string> networks;
  std::map<std::string, std::vector<QuantRecord>> by_method;
  for (const auto& r : records) {
    r.validate();
    if (r.method == manual_method) {
      manual.push_back(r);
      continue;
    }
    if (!by_method.contains(r.method)) networks.push_back(r.method);
    by_method[r.method].push_back(r);
  }
  if (manual.empty()) {
    throw ValidationError("no records for method '" + std::string(manual_method) + "'");
  }
  if (networks.empty()) throw ValidationError("no automated methods to compare");

  QuantComparison out;
  out.thresholds = thresholds;
  out.tables[0].title = "option1";
  out.tables[1].title = "option2";
  out.tables[2].title = "option3";
  for (auto& t : out.tables) t.networks = networks;
  for (const auto& name : networks) {
    const auto& automated = by_method[name];
    out.tables[0].rows.push_back(option1(manual, automated, thresholds));
    out.tables[1].rows.push_back(option2(manual, automated));
    out.tables[2].rows.push_back(option3(manual, automated));
  }
  if (networks.size() >= 2) out.tally = tally(out.tables);
  return out;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline double parse_number(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("line " + std::to_string(line_no) + ": not a number: '" + s + "'");
  }
}

}  // namespace detail

/// Reads `stack_id,method,scar_ml,scar_pct,mo_pct` CSV (header required).
inline std::vector<QuantRecord> read_quant_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) header = detail::split_csv_line(line);
  }
  const std::vector<std::string> expected{"stack_id", "method", "scar_ml", "scar_pct", "mo_pct"};
  if (header != expected) {
    throw ValidationError("quantification CSV header must be stack_id,method,scar_ml,scar_pct,mo_pct");
  }

  std::vector<QuantRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != expected.size()) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected 5 fields, got " +
                            std::to_string(cells.size()));
    }
    QuantRecord r{cells[0], cells[1], detail::parse_number(cells[2], line_no),
                  detail::parse_number(cells[3], line_no), detail::parse_number(cells[4], line_no)};
    r.validate();
    records.push_back(std::move(r));
  }
  return records;
}

inline std::optional<QuantMetric> parse_quant_metric(std::string_view s) noexcept {
  for (const QuantMetric m : kQuantMetrics) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

/// Table-percentage CSV: `table,metric,<network>,...`, one row per
/// (table, metric), empty cells for undefined values. Tables keep their
/// first-appearance order.
inline std::vector<OptionTable> read_option_tables(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) header = detail::split_csv_line(line);
  }
  if (header.size() < 4 || header[0] != "table" || header[1] != "metric") {
    throw ValidationError("table CSV header must be table,metric,<network>,<network>,...");
  }
  const std::vector<std::string> networks(header.begin() + 2, header.end());

  std::vector<OptionTable> tables;
  std::vector<std::array<bool, 3>> filled;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields");
    }
    const auto metric = parse_quant_metric(cells[1]);
    if (!metric) throw ValidationError("line " + std::to_string(line_no) + ": unknown metric " + cells[1]);
    auto it = std::find_if(tables.begin(), tables.end(),
                           [&](const OptionTable& t) { return t.title == cells[0]; });
    if (it == tables.end()) {
      tables.push_back({cells[0], networks, std::vector<OptionRow>(networks.size())});
      filled.push_back({false, false, false});
      it = tables.end() - 1;
    }
    const auto t = static_cast<std::size_t>(it - tables.begin());
    const auto mi = static_cast<std::size_t>(*metric);
    if (filled[t][mi]) {
      throw ValidationError("line " + std::to_string(line_no) + ": duplicate row " + cells[0] + "/" + cells[1]);
    }
    filled[t][mi] = true;
    for (std::size_t n = 0; n < networks.size(); ++n) {
      const std::string& cell = cells[n + 2];
      if (cell.empty()) continue;
      std::string number = cell;
      if (number.back() == '%') number.pop_back();
      it->rows[n][mi] = detail::parse_number(detail::trim(number), line_no);
    }
  }
  for (std::size_t t = 0; t < tables.size(); ++t) {
    for (const QuantMetric m : kQuantMetrics) {
      if (!filled[t][static_cast<std::size_t>(m)]) {
        throw ValidationError("table " + tables[t].title + " lacks metric " + std::string(to_string(m)));
      }
    }
  }
  if (tables.empty()) throw ValidationError("table CSV has no rows");
  return tables;
}

inline void write_option_tables(std::ostream& out, std::span<const OptionTable> tables) {
  if (tables.empty()) return;
  out << "table,metric";
  for (const auto& n : tables.front().networks) out << ',' << n;
  out << '\n';
  for (const auto& t : tables) {
    for (const QuantMetric m : kQuantMetrics) {
      out << t.title << ',' << to_string(m);
      for (std::size_t n = 0; n < t.networks.size(); ++n) {
        out << ',';
        if (const auto v = t.value(m, n)) {
          std::ostringstream cell;
          cell.precision(17);
          cell << *v;
          out << cell.str();
        }
      }
      out << '\n';
    }
  }
}

/// Percentage truncated (not rounded) to one decimal, the convention used
/// when reporting k/9 win shares (5/9 -> 55.5).
inline double truncate_percent(double fraction) {
  return std::floor(fraction * 1000.0 + 1e-9) / 10.0;
}

}  // namespace labelscale
