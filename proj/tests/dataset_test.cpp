#include "minpoint/dataset.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace minpoint;

namespace {

DatasetRow sample_row() {
  DatasetRow r;
  r.label = "37a1";
  r.field_disc = 1;
  r.point = "(0, 0)";
  r.height = "0.051111408239968834";
  r.curve = "[0,0,1,-1,0]";
  r.status = "PROVED";
  r.b_e_tier = "CPS_QUADRATIC";
  r.b_e = 1.4118;
  r.d_prime = 0.05111;
  r.runtime_ms = 1234;
  return r;
}

}  // namespace

TEST(Dataset, JsonRoundTrip) {
  DatasetRow r = sample_row();
  nlohmann::ordered_json j = row_json(r);
  EXPECT_EQ(j.begin().key(), "label");  // published column order first
  DatasetRow back = row_from_json(j);
  EXPECT_EQ(back, r);

  auto proj = paper_schema_projection(r);
  EXPECT_EQ(proj.size(), 4u);
  EXPECT_TRUE(proj.contains("label"));
  EXPECT_TRUE(proj.contains("field_disc"));
  EXPECT_TRUE(proj.contains("point"));
  EXPECT_TRUE(proj.contains("height"));
}

TEST(Dataset, JsonValidation) {
  EXPECT_THROW(row_from_json(nlohmann::json::parse("[1,2]")), std::runtime_error);
  EXPECT_THROW(row_from_json(nlohmann::json::parse("{\"label\":\"x\"}")),
               std::runtime_error);
  EXPECT_THROW(
      row_from_json(nlohmann::json::parse(
          "{\"label\":1,\"field_disc\":1,\"point\":\"\",\"height\":\"\"}")),
      std::runtime_error);
  EXPECT_THROW(
      row_from_json(nlohmann::json::parse(
          "{\"label\":\"x\",\"field_disc\":\"q\",\"point\":\"\",\"height\":\"\"}")),
      std::runtime_error);

  // Numeric heights from external files are accepted and canonicalized.
  DatasetRow r = row_from_json(nlohmann::json::parse(
      "{\"label\":\"x\",\"field_disc\":-3,\"point\":\"(1, 2)\",\"height\":0.25}"));
  EXPECT_EQ(r.height, "0.25");

  // Unknown keys are ignored at both levels.
  DatasetRow s = row_from_json(nlohmann::json::parse(
      "{\"label\":\"x\",\"field_disc\":1,\"point\":\"\",\"height\":\"\","
      "\"mystery\":[1],\"ext\":{\"status\":\"PROVED\",\"novel\":true}}"));
  EXPECT_EQ(s.status, "PROVED");
}

TEST(Dataset, CsvRoundTripWithQuoting) {
  DatasetRow r = sample_row();
  r.point = "(27, -119)";
  r.error = "line with \"quotes\",\ncomma and newline";
  std::ostringstream out;
  write_dataset(out, {r}, RowFormat::Csv);
  std::istringstream in(out.str());
  Dataset d = read_dataset(in, RowFormat::Csv);
  ASSERT_TRUE(d.errors.empty());
  ASSERT_EQ(d.rows.size(), 1u);
  EXPECT_EQ(d.rows[0], r);
}

TEST(Dataset, JsonlReadSkipsBlanksAndReportsLines) {
  std::istringstream in(
      "{\"label\":\"a\",\"field_disc\":1,\"point\":\"(0, 0)\",\"height\":\"0.1\"}\n"
      "\n"
      "this is not json\n"
      "{\"label\":\"b\",\"field_disc\":-3,\"point\":\"(1, 1)\",\"height\":\"0.2\"}\n"
      "{\"label\":2}\n");
  Dataset d = read_dataset(in, RowFormat::Jsonl);
  ASSERT_EQ(d.rows.size(), 2u);
  EXPECT_EQ(d.rows[0].label, "a");
  EXPECT_EQ(d.rows[1].label, "b");
  ASSERT_EQ(d.errors.size(), 2u);
  EXPECT_EQ(d.errors[0].line, 3);
  EXPECT_EQ(d.errors[1].line, 5);
}

TEST(Dataset, CsvHeaderAndFieldValidation) {
  std::istringstream bad_header("label,disc\n37a1,1\n");
  Dataset d = read_dataset(bad_header, RowFormat::Csv);
  EXPECT_TRUE(d.rows.empty());
  ASSERT_EQ(d.errors.size(), 1u);
  EXPECT_EQ(d.errors[0].line, 1);

  std::string hdr =
      "label,field_disc,point,height,curve,status,b_e_tier,b_e,d_prime,"
      "runtime_ms,error\n";
  std::istringstream bad_field(hdr + "x,notanumber,p,h,c,s,t,,,0,\n" +
                               "y,1,\"(0, 0)\",0.5,,PROVED,,1.5,0.5,10,\n");
  d = read_dataset(bad_field, RowFormat::Csv);
  ASSERT_EQ(d.rows.size(), 1u);
  EXPECT_EQ(d.rows[0].label, "y");
  EXPECT_EQ(d.rows[0].b_e.value(), 1.5);
  ASSERT_EQ(d.errors.size(), 1u);
  EXPECT_EQ(d.errors[0].line, 2);

  std::istringstream short_row(hdr + "x,1,p\n");
  d = read_dataset(short_row, RowFormat::Csv);
  EXPECT_TRUE(d.rows.empty());
  EXPECT_EQ(d.errors.size(), 1u);
}

TEST(Dataset, CertificateAndErrorRows) {
  CurveModel E = parse_curve("37a1:[0,0,1,-1,0]");
  SearchConfig cfg;
  SearchCertificate cert = certify_minimum(E, cfg);
  DatasetRow r = row_from_certificate(E, cert, 777);
  EXPECT_EQ(r.label, "37a1");
  EXPECT_EQ(r.field_disc, 1);
  EXPECT_EQ(r.point, "(0, 0)");
  EXPECT_EQ(r.status, "PROVED");
  EXPECT_EQ(r.curve, "[0,0,1,-1,0]");
  EXPECT_EQ(r.runtime_ms, 777);
  EXPECT_EQ(r.height.substr(0, 10), "0.05111140");
  EXPECT_TRUE(r.error.empty());

  DatasetRow s = strip_timing(r);
  EXPECT_EQ(s.runtime_ms, 0);
  s.runtime_ms = r.runtime_ms;
  EXPECT_EQ(s, r);

  DatasetRow e = error_row("bad1", "[1,1]", "parse_curve: bad list", 5);
  EXPECT_EQ(e.status, "ERROR");
  EXPECT_EQ(e.field_disc, 0);
  EXPECT_EQ(e.error, "parse_curve: bad list");
}

TEST(Dataset, RunBatchProducesOneRowPerCurve) {
  std::istringstream curves(
      "# demo batch\n"
      "\n"
      "37a1:[0,0,1,-1,0]\n"
      "[0,0,0,0,0]\n"
      "not a curve at all\n");
  std::ostringstream rows;
  SearchConfig cfg;
  BatchSummary sum = run_batch(curves, cfg, rows, RowFormat::Jsonl);
  EXPECT_EQ(sum.curves, 3);
  EXPECT_EQ(sum.proved, 1);
  EXPECT_EQ(sum.heuristic, 0);
  EXPECT_EQ(sum.no_point, 0);
  EXPECT_EQ(sum.failed, 2);
  EXPECT_EQ(sum.str(), "3 curves: 1 PROVED, 0 HEURISTIC, 0 NO_POINT_FOUND, 2 ERROR");

  std::istringstream back(rows.str());
  Dataset d = read_dataset(back, RowFormat::Jsonl);
  ASSERT_TRUE(d.errors.empty());
  ASSERT_EQ(d.rows.size(), 3u);
  EXPECT_EQ(d.rows[0].label, "37a1");
  EXPECT_EQ(d.rows[0].status, "PROVED");
  EXPECT_GT(d.rows[0].runtime_ms, 0);
  EXPECT_EQ(d.rows[1].status, "ERROR");
  EXPECT_EQ(d.rows[2].status, "ERROR");
}

TEST(Dataset, StatsSummary) {
  Dataset d;
  auto add = [&](std::string label, long disc, std::string height,
                 std::string curve) {
    DatasetRow r;
    r.label = std::move(label);
    r.field_disc = disc;
    r.point = disc == 0 ? "" : "(0, 0)";
    r.height = std::move(height);
    r.curve = std::move(curve);
    d.rows.push_back(std::move(r));
  };
  add("a", 1, "0.5", "[0,0,1,-1,0]");
  add("b", -3, "0.2", "");
  add("c", -3, "0.3", "");
  add("d", 5, "0.25", "");
  add("e", 0, "", "");  // no point found: not a field row
  d.errors.push_back({7, "bad row"});

  StatsResult res = conjecture_stats(d);
  const StatsSummary& s = res.summary;
  EXPECT_EQ(s.rows_total, 5);
  EXPECT_EQ(s.rows_with_point, 4);
  EXPECT_EQ(s.rows_with_curve, 1);
  EXPECT_EQ(s.rows_rejected, 1);
  ASSERT_EQ(s.field_frequency.size(), 3u);
  EXPECT_EQ(s.field_frequency[0], (std::pair<long, long>(-3, 2)));
  EXPECT_EQ(s.field_frequency[1], (std::pair<long, long>(1, 1)));
  EXPECT_EQ(s.field_frequency[2], (std::pair<long, long>(5, 1)));

  // degree 2 for quadratic rows: min is 0.2*2 = 0.4 on row b.
  EXPECT_DOUBLE_EQ(s.min_height_times_degree.value(), 0.4);
  EXPECT_DOUBLE_EQ(s.max_height_times_degree.value(), 0.6);
  EXPECT_EQ(s.argmin_height_times_degree, "b");

  // Lang ratio needs the curve column; only row a has one.
  ASSERT_TRUE(s.min_lang_ratio.has_value());
  EXPECT_EQ(s.argmin_lang_ratio, "a");
  EXPECT_DOUBLE_EQ(s.min_lang_ratio.value(), s.max_lang_ratio.value());

  auto js = nlohmann::json::parse(s.json());
  EXPECT_EQ(js["rows"], 5);
  EXPECT_EQ(js["field_frequency"][0]["field_disc"], -3);

  // Scatter covers only rows with a curve attached.
  ASSERT_EQ(res.scatter.size(), 1u);
  EXPECT_EQ(res.scatter[0].label, "a");
  EXPECT_EQ(res.scatter[0].degree, 1);
  EXPECT_DOUBLE_EQ(res.scatter[0].height_times_degree, 0.5);
  EXPECT_NEAR(res.scatter[0].log_abs_disc_min, std::log(37.0), 1e-9);
  std::ostringstream sc;
  write_scatter_csv(sc, res.scatter);
  std::string text = sc.str();
  EXPECT_NE(text.find("label,field_disc,height,degree"), std::string::npos);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);  // header + row a

  StatsSummary empty = conjecture_stats(Dataset{}).summary;
  EXPECT_EQ(empty.rows_total, 0);
  EXPECT_FALSE(empty.min_height_times_degree.has_value());
  EXPECT_TRUE(empty.field_frequency.empty());
}

TEST(Dataset, FieldFrequencyTieBreak) {
  Dataset d;
  for (long disc : {8, -8, -8, 8, 1}) {
    DatasetRow r;
    r.label = "t";
    r.field_disc = disc;
    r.point = "(1, 1)";
    r.height = "0.5";
    d.rows.push_back(r);
  }
  StatsSummary s = conjecture_stats(d).summary;
  ASSERT_EQ(s.field_frequency.size(), 3u);
  // Counts descend; ties order by |disc| then positive first.
  EXPECT_EQ(s.field_frequency[0], (std::pair<long, long>(8, 2)));
  EXPECT_EQ(s.field_frequency[1], (std::pair<long, long>(-8, 2)));
  EXPECT_EQ(s.field_frequency[2], (std::pair<long, long>(1, 1)));
}

TEST(Dataset, FormatNames) {
  EXPECT_EQ(parse_row_format("jsonl"), RowFormat::Jsonl);
  EXPECT_EQ(parse_row_format("csv"), RowFormat::Csv);
  EXPECT_THROW(parse_row_format("xml"), ConfigError);
}
