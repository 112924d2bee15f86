// Command-line front end: canonical heights, height-difference bounds,
// single-curve certificates, batch runs and dataset statistics.
//
// Exit codes: 0 success, 1 computation failed, 2 bad configuration or
// arguments, 3 I/O failure.

#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "minpoint/dataset.hpp"

namespace {

using namespace minpoint;

SearchConfig make_config(const std::string& path, long precision,
                         long workers) {
  SearchConfig cfg = path.empty() ? SearchConfig{} : load_config(path);
  if (precision > 0) cfg.set("precision_bits", std::to_string(precision));
  if (workers > 0) cfg.set("workers", std::to_string(workers));
  return cfg;
}

int cmd_height(const SearchConfig& cfg, const std::string& curve_text,
               const std::string& point_text) {
  auto E = std::make_shared<CurveModel>(parse_curve(curve_text));
  CurvePoint P = parse_point(E, point_text);
  HeightEngine engine(*E);
  HeightValue hv = engine.canonical_height(P, cfg.precision_bits);
  nlohmann::ordered_json j;
  j["curve"] = E->str();
  j["point"] = P.str();
  j["height"] = hv.value();
  j["certified_error"] = hv.certified_error();
  j["exact_zero"] = hv.exact_zero;
  j["normalization"] = hv.normalization;
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_bound(const std::string& curve_text) {
  CurveModel E = parse_curve(curve_text);
  HeightDifferenceBound b = best_height_difference_bound(E);
  std::cout << b.json() << '\n';
  return 0;
}

int cmd_search(const SearchConfig& cfg, const std::string& curve_text) {
  CurveModel E = parse_curve(curve_text);
  SearchCertificate cert = certify_minimum(E, cfg);
  std::cout << cert.json() << '\n';
  return 0;
}

int cmd_batch(const SearchConfig& cfg, const std::string& in_path,
              const std::string& out_path, RowFormat fmt) {
  std::ifstream fin;
  if (in_path != "-") {
    fin.open(in_path);
    if (!fin) {
      std::cerr << "cannot read " << in_path << '\n';
      return 3;
    }
  }
  std::istream& in = in_path == "-" ? std::cin : fin;
  std::ofstream fout;
  if (out_path != "-") {
    fout.open(out_path);
    if (!fout) {
      std::cerr << "cannot write " << out_path << '\n';
      return 3;
    }
  }
  std::ostream& out = out_path == "-" ? std::cout : fout;
  BatchSummary sum = run_batch(in, cfg, out, fmt);
  out.flush();
  if (!out) {
    std::cerr << "write failed: " << out_path << '\n';
    return 3;
  }
  (out_path == "-" ? std::cerr : std::cout) << sum.str() << '\n';
  return 0;
}

int cmd_stats(const std::string& dataset_path, RowFormat fmt,
              const std::string& scatter_path) {
  std::ifstream fin;
  if (dataset_path != "-") {
    fin.open(dataset_path);
    if (!fin) {
      std::cerr << "cannot read " << dataset_path << '\n';
      return 3;
    }
  }
  std::istream& in = dataset_path == "-" ? std::cin : fin;
  Dataset ds = read_dataset(in, fmt);
  for (const RowParseError& e : ds.errors)
    std::cerr << "line " << e.line << ": " << e.message << '\n';
  StatsResult st = conjecture_stats(ds);
  std::cout << st.summary.json() << '\n';
  if (!scatter_path.empty()) {
    std::ofstream fout(scatter_path);
    if (!fout) {
      std::cerr << "cannot write " << scatter_path << '\n';
      return 3;
    }
    write_scatter_csv(fout, st.scatter);
    fout.flush();
    if (!fout) {
      std::cerr << "write failed: " << scatter_path << '\n';
      return 3;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "non-torsion points of minimal canonical height over fields of degree "
      "<= 2"};
  app.require_subcommand(1);

  std::string config_path, format = "jsonl";
  long precision = 0, workers = 0;
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--precision", precision, "working precision in bits");
  app.add_option("--workers", workers, "threads for enumeration sweeps");
  app.add_option("--format", format, "dataset row format")
      ->check(CLI::IsMember({"jsonl", "csv"}));

  std::string curve_text, point_text, in_path, out_path, dataset_path,
      scatter_path;

  CLI::App* height = app.add_subcommand(
      "height", "canonical height of a point, with certified error");
  height->add_option("curve", curve_text, "\"label:[a1,a2,a3,a4,a6]\"")
      ->required();
  height->add_option("point", point_text, "\"(x, y)\" or O")->required();
  height->fallthrough();

  CLI::App* bound = app.add_subcommand(
      "bound", "best certified naive-vs-canonical height difference bound");
  bound->add_option("curve", curve_text)->required();
  bound->fallthrough();

  CLI::App* search = app.add_subcommand(
      "search", "certificate for the minimal point of one curve");
  search->add_option("curve", curve_text)->required();
  search->fallthrough();

  CLI::App* batch = app.add_subcommand(
      "batch", "one dataset row per curve listed in the input file");
  batch->add_option("input", in_path, "curve list, one per line, - for stdin")
      ->required();
  batch->add_option("output", out_path, "row destination, - for stdout")
      ->required();
  batch->fallthrough();

  CLI::App* stats = app.add_subcommand(
      "stats", "field frequencies and conjecture statistics of a dataset");
  stats->add_option("dataset", dataset_path, "rows, - for stdin")->required();
  stats->add_option("scatter", scatter_path,
                    "optional per-curve scatter CSV destination");
  stats->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    SearchConfig cfg = make_config(config_path, precision, workers);
    RowFormat fmt = parse_row_format(format);
    if (height->parsed()) return cmd_height(cfg, curve_text, point_text);
    if (bound->parsed()) return cmd_bound(curve_text);
    if (search->parsed()) return cmd_search(cfg, curve_text);
    if (batch->parsed()) return cmd_batch(cfg, in_path, out_path, fmt);
    if (stats->parsed()) return cmd_stats(dataset_path, fmt, scatter_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
