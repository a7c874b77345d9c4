#pragma once

// Command-line front end. Every command writes a manifest.json describing
// the resolved invocation next to its outputs; `replay <manifest>` re-runs it.
//
// Exit codes: 0 success, 1 validation or audit failure, 2 usage error.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "labelscale/dataset.hpp"
#include "labelscale/errors.hpp"
#include "labelscale/image_io.hpp"
#include "labelscale/maskfilter.hpp"
#include "labelscale/metrics.hpp"
#include "labelscale/phantom.hpp"
#include "labelscale/quantcompare.hpp"
#include "labelscale/resample.hpp"

namespace labelscale::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline constexpr const char* kToolName = "labelscale";
inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kValidationFailure = 1, kUsageError = 2 };

/// Bad flags or arguments detected after parsing.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct Size2 {
  std::size_t width = 0;
  std::size_t height = 0;
};

inline Size2 parse_size(const std::string& s) {
  const auto x = s.find_first_of("xX");
  try {
    if (x == std::string::npos) throw std::invalid_argument(s);
    std::size_t used_w = 0;
    std::size_t used_h = 0;
    const std::string ws = s.substr(0, x);
    const std::string hs = s.substr(x + 1);
    const long w = std::stol(ws, &used_w);
    const long h = std::stol(hs, &used_h);
    if (used_w != ws.size() || used_h != hs.size() || w < 1 || h < 1) throw std::invalid_argument(s);
    return {static_cast<std::size_t>(w), static_cast<std::size_t>(h)};
  } catch (const std::exception&) {
    throw UsageError("--size must look like WIDTHxHEIGHT with positive integers, got '" + s + "'");
  }
}

inline std::vector<double> parse_number_list(const std::string& s, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw UsageError(std::string(flag) + ": not a number: '" + cell + "'");
    }
  }
  return out;
}

inline LabelSet parse_labels(const std::string& s, const char* flag = "--labels") {
  std::vector<Intensity> labels;
  for (const double v : parse_number_list(s, flag)) {
    if (v < 0 || v > 255 || v != std::floor(v)) {
      throw UsageError(std::string(flag) + ": labels must be integers in [0,255]");
    }
    labels.push_back(static_cast<Intensity>(v));
  }
  std::sort(labels.begin(), labels.end());
  try {
    return LabelSet(std::move(labels));
  } catch (const ValidationError& e) {
    throw UsageError(std::string(flag) + ": " + e.what());
  }
}

inline std::vector<Intensity> parse_expected(const std::string& s) {
  std::vector<Intensity> labels;
  for (const double v : parse_number_list(s, "--expect")) {
    if (v < 0 || v > 255 || v != std::floor(v)) throw UsageError("--expect: labels must be integers in [0,255]");
    labels.push_back(static_cast<Intensity>(v));
  }
  if (labels.empty()) throw UsageError("--expect needs at least one label");
  return labels;
}

inline KernelKind require_kernel(const std::string& s) {
  const auto k = parse_kernel(s);
  if (!k) throw UsageError("unknown kernel '" + s + "' (nearest, bicubic, lanczos3)");
  return *k;
}

inline FilterStrategy require_filter(const std::string& s) {
  const auto f = parse_filter(s);
  if (!f) throw UsageError("unknown filter '" + s + "' (none, eq1, five-step)");
  return *f;
}

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json histogram_json(const ClassHistogram& h) {
  json out = json::object();
  for (const auto& [label, count] : h.bins()) out[std::to_string(label)] = count;
  return out;
}

inline json audit_json(const AuditReport& r) {
  json extra = json::array();
  for (const auto& e : r.extra) {
    extra.push_back({{"label", e.label}, {"count", e.count}, {"x", e.example_x}, {"y", e.example_y}});
  }
  return {{"canonical", r.is_canonical}, {"histogram", histogram_json(r.found)}, {"extra", extra}};
}

inline void write_json(const fs::path& path, const json& j) {
  io::write_text_atomic(path, j.dump(2) + "\n");
}

/// Collects inputs/outputs and per-file outcomes for the run's manifest.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> argv)
      : body_{{"tool", kToolName},
              {"version", kToolVersion},
              {"command", std::move(command)},
              {"argv", std::move(argv)},
              {"flags", json::object()},
              {"seeds", json::object()},
              {"inputs", json::array()},
              {"outputs", json::array()},
              {"files", json::array()}} {}

  json& flags() { return body_["flags"]; }
  json& seeds() { return body_["seeds"]; }
  void input(const fs::path& p) { body_["inputs"].push_back(p.string()); }
  void output(const fs::path& p) { body_["outputs"].push_back(p.string()); }
  void file(json outcome) { body_["files"].push_back(std::move(outcome)); }
  json& body() { return body_; }

  /// `dir/manifest.json` for directory outputs, `<file>.manifest.json` otherwise.
  void write_next_to(const fs::path& out, bool out_is_dir) const {
    write_json(out_is_dir ? out / "manifest.json" : fs::path(out.string() + ".manifest.json"), body_);
  }

 private:
  json body_;
};

/// (input, output) pairs for a command accepting either a file or a directory.
inline std::vector<std::pair<fs::path, fs::path>> plan_io(const fs::path& in, const fs::path& out,
                                                          bool& out_is_dir) {
  if (fs::is_directory(in)) {
    out_is_dir = true;
    std::vector<std::pair<fs::path, fs::path>> plan;
    for (const auto& p : io::list_images(in)) plan.emplace_back(p, out / p.filename());
    if (plan.empty()) throw UsageError("no .png/.pgm files in " + in.string());
    fs::create_directories(out);
    return plan;
  }
  if (!fs::exists(in)) throw IoError(in.string(), "no such file or directory");
  out_is_dir = false;
  io::format_for(out);
  return {{in, out}};
}

struct Context {
  std::vector<std::string> argv;  // without program name
  std::ostream& out;
  std::ostream& err;
};

// ---- resize / mask-resize ----

struct ResizeArgs {
  std::string in;
  std::string out;
  std::string size;
  std::string kernel = "nearest";
  std::string filter = "none";
  std::string labels = "0,128,255";
};

inline int run_resize(const Context& ctx, const ResizeArgs& a, bool masks) {
  const Size2 size = parse_size(a.size);
  const KernelKind kernel = require_kernel(a.kernel);
  const FilterStrategy filter = masks ? require_filter(a.filter) : FilterStrategy::None;
  const LabelSet labels = masks ? parse_labels(a.labels) : LabelSet::tri_class();
  if (masks && is_extra_pixel(kernel) && filter != FilterStrategy::None) {
    require_tri_class(labels, std::string("--filter ") + std::string(to_string(filter)));
  }

  bool out_is_dir = false;
  const auto plan = plan_io(a.in, a.out, out_is_dir);

  Manifest manifest(masks ? "mask-resize" : "resize", ctx.argv);
  manifest.flags() = {{"size", std::to_string(size.width) + "x" + std::to_string(size.height)},
                      {"kernel", to_string(kernel)}};
  if (masks) {
    manifest.flags()["filter"] = to_string(filter);
    manifest.flags()["labels"] = std::vector<int>(labels.values().begin(), labels.values().end());
  }
  manifest.input(a.in);
  manifest.output(a.out);

  int failures = 0;
  std::size_t non_canonical = 0;
  for (const auto& [src, dst] : plan) {
    json outcome{{"input", src.string()}, {"output", dst.string()}};
    try {
      const GrayImage img = io::read_image(src);
      const ResizeSpec spec = ResizeSpec::from(img, size.width, size.height, kernel);
      if (masks) {
        const LabelMask resized = mask_resize(LabelMask{img, labels}, spec, filter);
        io::write_image(dst, resized.image);
        const AuditReport report = audit(resized);
        outcome["canonical"] = report.is_canonical;
        outcome["labels_found"] = report.found.bin_count();
        non_canonical += !report.is_canonical;
      } else {
        io::write_image(dst, resize_image(img, spec));
      }
      outcome["status"] = "ok";
    } catch (const UnsupportedConfiguration&) {
      throw;
    } catch (const std::exception& e) {
      ++failures;
      outcome["status"] = "error";
      outcome["error"] = e.what();
      ctx.err << "error: " << src.string() << ": " << e.what() << "\n";
    }
    manifest.file(std::move(outcome));
  }
  manifest.body()["summary"] = {{"files", plan.size()}, {"failed", failures}};
  if (masks) manifest.body()["summary"]["non_canonical"] = non_canonical;
  manifest.write_next_to(a.out, out_is_dir);

  ctx.out << (masks ? "mask-resize" : "resize") << ": " << plan.size() - static_cast<std::size_t>(failures)
          << "/" << plan.size() << " written";
  if (masks) ctx.out << ", " << non_canonical << " non-canonical";
  ctx.out << "\n";
  return failures == 0 ? kOk : kValidationFailure;
}

// ---- audit ----

struct AuditArgs {
  std::vector<std::string> inputs;
  std::string expect = "0,128,255";
  std::string json_out;
};

inline int run_audit(const Context& ctx, const AuditArgs& a) {
  const auto expected = parse_expected(a.expect);
  std::vector<fs::path> files;
  for (const auto& in : a.inputs) {
    if (fs::is_directory(in)) {
      for (const auto& p : io::list_images(in)) files.push_back(p);
    } else {
      files.emplace_back(in);
    }
  }
  if (files.empty()) throw UsageError("audit: no input masks");

  json report{{"expected", std::vector<int>(expected.begin(), expected.end())},
              {"canonical", true},
              {"files", json::array()}};
  std::size_t bad = 0;
  for (const auto& f : files) {
    json entry{{"path", f.string()}};
    try {
      const AuditReport r = audit(io::read_image(f), expected);
      entry.update(audit_json(r));
      if (!r.is_canonical) {
        ++bad;
        for (const auto& e : r.extra) {
          ctx.out << f.string() << ": extra label " << int(e.label) << " x" << e.count << " (e.g. at "
                  << e.example_x << "," << e.example_y << ")\n";
        }
      }
    } catch (const Error& e) {
      ++bad;
      entry["canonical"] = false;
      entry["error"] = e.what();
      ctx.err << "error: " << e.what() << "\n";
    }
    report["files"].push_back(std::move(entry));
  }
  report["canonical"] = bad == 0;
  report["non_canonical_files"] = bad;
  if (!a.json_out.empty()) write_json(a.json_out, report);
  ctx.out << "audit: " << files.size() - bad << "/" << files.size() << " canonical\n";
  return bad == 0 ? kOk : kValidationFailure;
}

// ---- eval ----

struct EvalArgs {
  std::string gt_dir;
  std::string pred_dir;
  double theta = 0.0;
  std::string labels = "0,128,255";
  std::string json_out;
  std::string csv_out;
};

inline json eval_json(const SegEvalReport& r, const std::vector<std::string>& ids) {
  json regions = json::array();
  for (const auto& reg : r.regions) {
    regions.push_back({{"region", reg.name},
                       {"label", reg.label},
                       {"accuracy", optional_json(reg.accuracy)},
                       {"iou", optional_json(reg.iou)},
                       {"mean_bf", optional_json(reg.mean_bf)}});
  }
  json dice = json::array();
  for (std::size_t i = 0; i < r.per_image_dice.size(); ++i) {
    dice.push_back({{"id", ids.at(i)}, {"dice", r.per_image_dice[i]}});
  }
  json cm = json::array();
  for (std::size_t i = 0; i < r.confusion.classes(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < r.confusion.classes(); ++j) row.push_back(r.confusion.at(i, j));
    cm.push_back(row);
  }
  return {{"labels", std::vector<int>(r.labels.values().begin(), r.labels.values().end())},
          {"theta", r.theta > 0.0 ? json(r.theta) : json("default")},
          {"global_accuracy", r.global_accuracy},
          {"regions", regions},
          {"per_image_dice", dice},
          {"confusion", cm}};
}

inline std::string eval_csv(const SegEvalReport& r) {
  std::ostringstream os;
  os.precision(10);
  const auto cell = [&](const std::optional<double>& v) {
    if (v) os << *v;
  };
  os << "region,label,accuracy,iou,mean_bf\n";
  for (const auto& reg : r.regions) {
    os << reg.name << ',' << int(reg.label) << ',';
    cell(reg.accuracy);
    os << ',';
    cell(reg.iou);
    os << ',';
    cell(reg.mean_bf);
    os << '\n';
  }
  os << "Global,," << r.global_accuracy << ",,\n";
  return os.str();
}

inline int run_eval(const Context& ctx, const EvalArgs& a) {
  const LabelSet labels = parse_labels(a.labels);
  if (a.theta < 0.0) throw UsageError("--theta must be > 0");
  const auto gt = images_by_stem(a.gt_dir);
  const auto pred = images_by_stem(a.pred_dir);

  std::vector<std::string> unpaired;
  for (const auto& [stem, p] : gt) {
    if (!pred.contains(stem)) unpaired.push_back(p.string());
  }
  for (const auto& [stem, p] : pred) {
    if (!gt.contains(stem)) unpaired.push_back(p.string());
  }
  if (!unpaired.empty()) {
    for (const auto& u : unpaired) ctx.err << "error: unpaired file " << u << "\n";
    return kValidationFailure;
  }
  if (gt.empty()) throw UsageError("eval: no masks in " + a.gt_dir);

  std::vector<MaskPair> pairs;
  std::vector<std::string> ids;
  for (const auto& [stem, gt_path] : gt) {
    LabelMask g{io::read_image(gt_path), labels};
    LabelMask p{io::read_image(pred.at(stem)), labels};
    if (!g.is_canonical()) throw ValidationError(gt_path.string() + ": mask is not canonical");
    if (!p.is_canonical()) throw ValidationError(pred.at(stem).string() + ": mask is not canonical");
    require_same_shape(g.image, p.image, stem.c_str());
    pairs.emplace_back(std::move(g), std::move(p));
    ids.push_back(stem);
  }
  const SegEvalReport report = evaluate_corpus(pairs, a.theta);
  const json j = eval_json(report, ids);
  if (!a.json_out.empty()) write_json(a.json_out, j);
  if (!a.csv_out.empty()) io::write_text_atomic(a.csv_out, eval_csv(report));

  ctx.out << eval_csv(report);
  double mean_dice = 0.0;
  for (const double d : report.per_image_dice) mean_dice += d;
  ctx.out << "pairs: " << pairs.size() << ", mean per-image dice: "
          << mean_dice / static_cast<double>(pairs.size()) << "\n";
  return kOk;
}

// ---- quant-compare ----

struct QuantArgs {
  std::string records;
  std::string tables;
  std::string thresholds = "25,15,0.35";
  std::string mode = "value-below";
  std::string manual = "manual";
  std::string json_out;
  std::string csv_out;
};

inline json tables_json(std::span<const OptionTable> tables) {
  json out = json::array();
  for (const auto& t : tables) {
    json rows = json::object();
    for (const QuantMetric m : kQuantMetrics) {
      json row = json::object();
      for (std::size_t n = 0; n < t.networks.size(); ++n) row[t.networks[n]] = optional_json(t.value(m, n));
      rows[std::string(to_string(m))] = row;
    }
    out.push_back({{"title", t.title}, {"networks", t.networks}, {"rows", rows}});
  }
  return out;
}

inline json tally_json(const TallyReport& t) {
  json nets = json::array();
  for (std::size_t n = 0; n < t.networks.size(); ++n) {
    nets.push_back({{"network", t.networks[n]},
                    {"wins", t.wins[n]},
                    {"fraction", t.fraction(n)},
                    {"percent", truncate_percent(t.fraction(n))}});
  }
  return {{"slots", t.slots}, {"networks", nets}};
}

inline void print_tables(std::ostream& os, std::span<const OptionTable> tables,
                         const std::optional<TallyReport>& tally) {
  for (const auto& t : tables) {
    os << t.title << "\n" << std::left << std::setw(10) << "metric";
    for (const auto& n : t.networks) os << std::right << std::setw(10) << n;
    os << "\n";
    for (const QuantMetric m : kQuantMetrics) {
      os << std::left << std::setw(10) << to_string(m);
      for (std::size_t n = 0; n < t.networks.size(); ++n) {
        std::ostringstream cell;
        if (const auto v = t.value(m, n)) {
          cell << std::fixed << std::setprecision(2) << *v << "%";
        } else {
          cell << "n/a";
        }
        os << std::right << std::setw(10) << cell.str();
      }
      os << "\n";
    }
    os << "\n";
  }
  if (!tally) {
    os << "tally: skipped (needs two or more automated methods)\n";
    return;
  }
  os << "tally (" << tally->slots << " slots)\n";
  for (std::size_t n = 0; n < tally->networks.size(); ++n) {
    os << "  " << std::left << std::setw(8) << tally->networks[n] << std::right << tally->wins[n] << "/"
       << tally->slots << "  " << std::fixed << std::setprecision(1) << truncate_percent(tally->fraction(n))
       << "%\n";
  }
  os.unsetf(std::ios::fixed);
}

inline int run_quant_compare(const Context& ctx, const QuantArgs& a) {
  if (a.records.empty() == a.tables.empty()) {
    throw UsageError("quant-compare needs exactly one of <records.csv> or --tables <tables.csv>");
  }
  json report;
  std::vector<OptionTable> tables;
  std::optional<TallyReport> tally_report;

  if (!a.tables.empty()) {
    std::ifstream in(a.tables);
    if (!in) throw IoError(a.tables, "cannot open for reading");
    tables = read_option_tables(in);
    tally_report = tally(tables);
    report["source"] = "tables";
  } else {
    const auto taus = parse_number_list(a.thresholds, "--thresholds");
    if (taus.size() != 3) throw UsageError("--thresholds needs three values (scar_ml,scar_pct,mo_pct)");
    const auto mode = parse_predicate_mode(a.mode);
    if (!mode) throw UsageError("--mode must be value-below or abs-diff-below");
    OptionThresholds th{taus[0], taus[1], taus[2], *mode};
    try {
      th.validate();
    } catch (const ValidationError& e) {
      throw UsageError(e.what());
    }

    std::ifstream in(a.records);
    if (!in) throw IoError(a.records, "cannot open for reading");
    const auto records = read_quant_csv(in);
    if (std::none_of(records.begin(), records.end(), [&](const auto& r) { return r.method == a.manual; })) {
      throw UsageError(a.records + ": no records with method '" + a.manual + "'");
    }
    const QuantComparison cmp = compare_quantification(records, th, a.manual);
    tables.assign(cmp.tables.begin(), cmp.tables.end());
    tally_report = cmp.tally;
    report["source"] = "records";
    report["mode"] = to_string(th.mode);
    report["thresholds"] = {{"scar_ml", th.scar_ml_tau}, {"scar_pct", th.scar_pct_tau}, {"mo_pct", th.mo_pct_tau}};
  }
  report["tables"] = tables_json(tables);
  report["tally"] = tally_report ? tally_json(*tally_report) : json(nullptr);

  if (!a.json_out.empty()) write_json(a.json_out, report);
  if (!a.csv_out.empty()) {
    std::ostringstream os;
    write_option_tables(os, tables);
    io::write_text_atomic(a.csv_out, os.str());
  }
  print_tables(ctx.out, tables, tally_report);
  return kOk;
}

// ---- split / augment / export / synth ----

struct PairArgs {
  std::string image_dir;
  std::string mask_dir;
  std::string out;
  std::string labels = "0,128,255";
  bool allow_unpaired = false;
};

inline ScanResult scan(const Context& ctx, const PairArgs& a) {
  ScanResult result = scan_pairs(a.image_dir, a.mask_dir, parse_labels(a.labels), a.allow_unpaired);
  for (const auto& w : result.warnings) ctx.err << "warning: " << w << "\n";
  for (const auto& u : result.unpaired) ctx.err << "warning: unpaired " << u << "\n";
  return result;
}

inline json scan_json(const ScanResult& s) {
  return {{"pairs", s.pairs.size()}, {"unpaired", s.unpaired}, {"warnings", s.warnings}};
}

struct SplitArgs {
  PairArgs pairs;
  std::string fractions = "0.6,0.2,0.2";
  std::uint64_t seed = 0;
};

inline int run_split(const Context& ctx, const SplitArgs& a) {
  const auto f = parse_number_list(a.fractions, "--fractions");
  if (f.size() != 3) throw UsageError("--fractions needs three values");
  SplitSpec spec{f[0], f[1], f[2], a.seed};
  try {
    spec.validate();
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
  const ScanResult scanned = scan(ctx, a.pairs);
  if (scanned.pairs.empty()) throw UsageError("split: no image/mask pairs found");

  std::vector<std::string> ids;
  for (const auto& p : scanned.pairs) ids.push_back(p.id);
  const auto parts = split(ids, spec);

  const fs::path out = a.pairs.out;
  fs::create_directories(out);
  const auto write_list = [&](const char* name, const std::vector<std::string>& list) {
    std::string text;
    for (const auto& id : list) text += id + "\n";
    io::write_text_atomic(out / name, text);
  };
  write_list("train.txt", parts.train);
  write_list("val.txt", parts.val);
  write_list("test.txt", parts.test);

  Manifest manifest("split", ctx.argv);
  manifest.flags() = {{"fractions", f}, {"labels", a.pairs.labels}, {"allow_unpaired", a.pairs.allow_unpaired}};
  manifest.seeds()["split"] = a.seed;
  manifest.input(a.pairs.image_dir);
  manifest.input(a.pairs.mask_dir);
  manifest.output(out);
  manifest.body()["scan"] = scan_json(scanned);
  manifest.body()["summary"] = {{"train", parts.train.size()}, {"val", parts.val.size()}, {"test", parts.test.size()}};
  manifest.write_next_to(out, true);
  ctx.out << "split: " << parts.train.size() << " / " << parts.val.size() << " / " << parts.test.size() << "\n";
  return kOk;
}

struct AugmentArgs {
  PairArgs pairs;
  std::uint64_t seed = 0;
  int copies = 1;
  double reflect_prob = 0.5;
  std::string translate = "-10,10";
  int fill = 0;
  std::string format = "png";
};

inline std::string extension_for(const std::string& format) {
  if (format == "png") return ".png";
  if (format == "pgm") return ".pgm";
  throw UsageError("--format must be png or pgm");
}

inline int run_augment(const Context& ctx, const AugmentArgs& a) {
  const auto range = parse_number_list(a.translate, "--translate");
  if (range.size() != 2 || range[0] != std::floor(range[0]) || range[1] != std::floor(range[1])) {
    throw UsageError("--translate needs two integers LOW,HIGH");
  }
  if (a.copies < 1) throw UsageError("--copies must be >= 1");
  if (a.fill < 0 || a.fill > 255) throw UsageError("--fill must lie in [0,255]");
  AugmentSpec spec{a.reflect_prob, static_cast<std::int64_t>(range[0]), static_cast<std::int64_t>(range[1]),
                   static_cast<Intensity>(a.fill)};
  try {
    spec.validate();
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
  const std::string ext = extension_for(a.format);
  const ScanResult scanned = scan(ctx, a.pairs);

  const fs::path out = a.pairs.out;
  Manifest manifest("augment", ctx.argv);
  manifest.flags() = {{"copies", a.copies},       {"reflect_prob", a.reflect_prob},
                      {"translate", std::vector<long long>{static_cast<long long>(range[0]), static_cast<long long>(range[1])}},{"fill", a.fill},
                      {"format", a.format},       {"labels", a.pairs.labels},
                      {"allow_unpaired", a.pairs.allow_unpaired}};
  manifest.seeds()["augment"] = a.seed;
  manifest.input(a.pairs.image_dir);
  manifest.input(a.pairs.mask_dir);
  manifest.output(out);

  Rng rng(a.seed);
  std::size_t written = 0;
  for (const auto& pair : scanned.pairs) {
    for (int c = 0; c < a.copies; ++c) {
      AugmentDraw draw;
      const SamplePair aug = augment(pair, spec, rng, &draw);
      const std::string name = pair.id + "_aug" + std::to_string(c) + ext;
      io::write_image(out / "images" / name, aug.image);
      io::write_image(out / "masks" / name, aug.mask.image);
      manifest.file({{"id", pair.id}, {"output", name}, {"reflected", draw.reflected}, {"dx", draw.dx}, {"dy", draw.dy}});
      ++written;
    }
  }
  fs::create_directories(out);
  manifest.body()["scan"] = scan_json(scanned);
  manifest.write_next_to(out, true);
  ctx.out << "augment: " << written << " pairs written\n";
  return kOk;
}

struct ExportArgs {
  PairArgs pairs;
  std::string size;
  std::string kernel = "nearest";
  std::string filter = "none";
  std::string format = "png";
};

inline int run_export(const Context& ctx, const ExportArgs& a) {
  const Size2 size = parse_size(a.size);
  const KernelKind kernel = require_kernel(a.kernel);
  const FilterStrategy filter = require_filter(a.filter);
  const LabelSet labels = parse_labels(a.pairs.labels);
  if (is_extra_pixel(kernel) && filter != FilterStrategy::None) {
    require_tri_class(labels, std::string("--filter ") + std::string(to_string(filter)));
  }
  const std::string ext = extension_for(a.format);
  const ScanResult scanned = scan(ctx, a.pairs);

  const fs::path out = a.pairs.out;
  const ExportSummary summary = export_resized(scanned.pairs, size.width, size.height, kernel, filter,
                                               {out / "images", out / "masks", ext});

  Manifest manifest("export", ctx.argv);
  manifest.flags() = {{"size", std::to_string(size.width) + "x" + std::to_string(size.height)},
                      {"kernel", to_string(kernel)},
                      {"filter", to_string(filter)},
                      {"format", a.format},
                      {"labels", a.pairs.labels},
                      {"allow_unpaired", a.pairs.allow_unpaired}};
  manifest.input(a.pairs.image_dir);
  manifest.input(a.pairs.mask_dir);
  manifest.output(out);
  for (const auto& f : summary.files) {
    json entry{{"id", f.id}, {"status", f.ok ? "ok" : "error"}};
    if (f.ok) {
      entry["canonical"] = f.canonical;
      json extra = json::array();
      for (const auto& e : f.extra) extra.push_back({{"label", e.label}, {"count", e.count}});
      entry["extra"] = extra;
    } else {
      entry["error"] = f.error;
      ctx.err << "error: " << f.id << ": " << f.error << "\n";
    }
    manifest.file(std::move(entry));
  }
  const double canonical_pct =
      summary.written() == 0 ? 0.0
                             : 100.0 * static_cast<double>(summary.canonical()) / static_cast<double>(summary.written());
  const json totals{{"pairs", summary.files.size()},
                    {"written", summary.written()},
                    {"failed", summary.failed()},
                    {"canonical", summary.canonical()},
                    {"non_canonical", summary.non_canonical()},
                    {"canonical_percent", canonical_pct}};
  manifest.body()["scan"] = scan_json(scanned);
  manifest.body()["summary"] = totals;
  fs::create_directories(out);
  manifest.write_next_to(out, true);
  write_json(out / "summary.json", totals);
  ctx.out << "export: " << summary.written() << "/" << summary.files.size() << " written, "
          << summary.canonical() << " canonical masks (" << canonical_pct << "%)\n";
  return summary.failed() == 0 ? kOk : kValidationFailure;
}

struct SynthArgs {
  std::string out;
  std::size_t count = 50;
  std::string size = "128x128";
  std::uint64_t seed = 0;
  double noise = 12.0;
  std::string format = "png";
};

inline int run_synth(const Context& ctx, const SynthArgs& a) {
  const Size2 size = parse_size(a.size);
  if (a.count == 0) throw UsageError("--count must be >= 1");
  if (a.noise < 0) throw UsageError("--noise must be >= 0");
  const std::string ext = extension_for(a.format);
  const fs::path out = a.out;
  const auto corpus = make_phantom_corpus(a.count, {size.width, size.height, a.noise}, a.seed);
  for (const auto& p : corpus) {
    io::write_image(out / "images" / (p.id + ext), p.image);
    io::write_image(out / "masks" / (p.id + ext), p.mask.image);
  }
  Manifest manifest("synth", ctx.argv);
  manifest.flags() = {{"count", a.count}, {"size", a.size}, {"noise", a.noise}, {"format", a.format}};
  manifest.seeds()["synth"] = a.seed;
  manifest.output(out);
  manifest.write_next_to(out, true);
  ctx.out << "synth: " << corpus.size() << " phantom pairs written to " << out.string() << "\n";
  return kOk;
}

// ---- entry point ----

int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr);

inline int run_replay(const Context& ctx, const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError(manifest_path, "cannot open for reading");
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(manifest_path + ": not a manifest: " + e.what());
  }
  if (!m.contains("argv") || !m["argv"].is_array()) throw ValidationError(manifest_path + ": manifest lacks argv");
  const auto argv = m["argv"].get<std::vector<std::string>>();
  if (!argv.empty() && argv.front() == "replay") throw UsageError("refusing to replay a replay");
  return run(argv, ctx.out, ctx.err);
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Label-preserving image/mask resampling, mask auditing and segmentation evaluation", kToolName};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  ResizeArgs resize_args;
  auto* resize = app.add_subcommand("resize", "Resize intensity images (file or directory)");
  resize->add_option("in", resize_args.in, "Input image or directory")->required();
  resize->add_option("out", resize_args.out, "Output image or directory")->required();
  resize->add_option("--size", resize_args.size, "Destination size WxH")->required();
  resize->add_option("--kernel", resize_args.kernel, "nearest | bicubic | lanczos3")->capture_default_str();

  ResizeArgs mask_args;
  auto* mask_resize_cmd = app.add_subcommand("mask-resize", "Resize label masks with optional extra-label removal");
  mask_resize_cmd->add_option("in", mask_args.in, "Input mask or directory")->required();
  mask_resize_cmd->add_option("out", mask_args.out, "Output mask or directory")->required();
  mask_resize_cmd->add_option("--size", mask_args.size, "Destination size WxH")->required();
  mask_resize_cmd->add_option("--kernel", mask_args.kernel, "nearest | bicubic | lanczos3")->capture_default_str();
  mask_resize_cmd->add_option("--filter", mask_args.filter, "none | eq1 | five-step")->capture_default_str();
  mask_resize_cmd->add_option("--labels", mask_args.labels, "Canonical label set")->capture_default_str();

  AuditArgs audit_args;
  auto* audit_cmd = app.add_subcommand("audit", "Report labels outside the expected set; exit 1 if any");
  audit_cmd->add_option("in", audit_args.inputs, "Mask files or directories");
  audit_cmd->add_option("--expect", audit_args.expect, "Expected labels")->capture_default_str();
  audit_cmd->add_option("--json", audit_args.json_out, "Write the JSON report here");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Accuracy / IoU / mean BF / Dice over paired mask directories");
  eval_cmd->add_option("gt_dir", eval_args.gt_dir, "Ground-truth masks")->required();
  eval_cmd->add_option("pred_dir", eval_args.pred_dir, "Predicted masks")->required();
  eval_cmd->add_option("--theta", eval_args.theta, "BF distance tolerance in px (default 0.75% of diagonal)");
  eval_cmd->add_option("--labels", eval_args.labels, "Canonical label set")->capture_default_str();
  eval_cmd->add_option("--json", eval_args.json_out, "Write the JSON report here");
  eval_cmd->add_option("--csv", eval_args.csv_out, "Write the per-region CSV table here");

  QuantArgs quant_args;
  auto* quant = app.add_subcommand("quant-compare", "Compare automated vs manual quantification (options 1-3 + tally)");
  quant->add_option("records", quant_args.records, "CSV: stack_id,method,scar_ml,scar_pct,mo_pct");
  quant->add_option("--tables", quant_args.tables, "Tally precomputed table percentages instead");
  quant->add_option("--thresholds", quant_args.thresholds, "Option-1 thresholds")->capture_default_str();
  quant->add_option("--mode", quant_args.mode, "value-below | abs-diff-below")->capture_default_str();
  quant->add_option("--manual", quant_args.manual, "Name of the reference method")->capture_default_str();
  quant->add_option("--json", quant_args.json_out, "Write the JSON report here");
  quant->add_option("--csv", quant_args.csv_out, "Write the option tables as CSV here");

  const auto add_pair_options = [](CLI::App* cmd, PairArgs& p) {
    cmd->add_option("image_dir", p.image_dir, "Intensity images")->required();
    cmd->add_option("mask_dir", p.mask_dir, "Label masks (paired by file stem)")->required();
    cmd->add_option("--out", p.out, "Output directory")->required();
    cmd->add_option("--labels", p.labels, "Canonical label set")->capture_default_str();
    cmd->add_flag("--allow-unpaired", p.allow_unpaired, "Skip files without a partner instead of failing");
  };

  SplitArgs split_args;
  auto* split_cmd = app.add_subcommand("split", "Seeded train/validation/test split written as id lists");
  add_pair_options(split_cmd, split_args.pairs);
  split_cmd->add_option("--fractions", split_args.fractions, "train,val,test")->capture_default_str();
  split_cmd->add_option("--seed", split_args.seed, "Shuffle seed")->capture_default_str();

  AugmentArgs aug_args;
  auto* aug_cmd = app.add_subcommand("augment", "Left-right reflection and integer translation of pairs");
  add_pair_options(aug_cmd, aug_args.pairs);
  aug_cmd->add_option("--seed", aug_args.seed, "Draw seed")->capture_default_str();
  aug_cmd->add_option("--copies", aug_args.copies, "Augmented copies per pair")->capture_default_str();
  aug_cmd->add_option("--reflect-prob", aug_args.reflect_prob, "Reflection probability")->capture_default_str();
  aug_cmd->add_option("--translate", aug_args.translate, "Translation range LOW,HIGH in px")->capture_default_str();
  aug_cmd->add_option("--fill", aug_args.fill, "Image fill value for vacated pixels")->capture_default_str();
  aug_cmd->add_option("--format", aug_args.format, "png | pgm")->capture_default_str();

  ExportArgs export_args;
  auto* export_cmd = app.add_subcommand("export", "Resize a paired corpus and audit every mask");
  add_pair_options(export_cmd, export_args.pairs);
  export_cmd->add_option("--size", export_args.size, "Destination size WxH")->required();
  export_cmd->add_option("--kernel", export_args.kernel, "nearest | bicubic | lanczos3")->capture_default_str();
  export_cmd->add_option("--filter", export_args.filter, "none | eq1 | five-step")->capture_default_str();
  export_cmd->add_option("--format", export_args.format, "png | pgm")->capture_default_str();

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Write a synthetic phantom corpus (images/ + masks/)");
  synth->add_option("--out", synth_args.out, "Output directory")->required();
  synth->add_option("--count", synth_args.count, "Number of pairs")->capture_default_str();
  synth->add_option("--size", synth_args.size, "Image size WxH")->capture_default_str();
  synth->add_option("--seed", synth_args.seed, "Generator seed")->capture_default_str();
  synth->add_option("--noise", synth_args.noise, "Gaussian noise sigma")->capture_default_str();
  synth->add_option("--format", synth_args.format, "png | pgm")->capture_default_str();

  std::string replay_path;
  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("manifest", replay_path, "manifest.json")->required();

  std::vector<std::string> argv_storage{kToolName};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  const Context ctx{args, out, err};
  try {
    if (*resize) return run_resize(ctx, resize_args, false);
    if (*mask_resize_cmd) return run_resize(ctx, mask_args, true);
    if (*audit_cmd) return run_audit(ctx, audit_args);
    if (*eval_cmd) return run_eval(ctx, eval_args);
    if (*quant) return run_quant_compare(ctx, quant_args);
    if (*split_cmd) return run_split(ctx, split_args);
    if (*aug_cmd) return run_augment(ctx, aug_args);
    if (*export_cmd) return run_export(ctx, export_args);
    if (*synth) return run_synth(ctx, synth_args);
    if (*replay) return run_replay(ctx, replay_path);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const UnsupportedConfiguration& e) {
    err << "unsupported configuration: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kValidationFailure;
  }
  return kUsageError;
}

}  // namespace labelscale::cli
