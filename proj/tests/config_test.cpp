#include "minpoint/config.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace minpoint;

TEST(Config, Defaults) {
  SearchConfig c;
  EXPECT_DOUBLE_EQ(c.delta_max, 1e5);
  EXPECT_DOUBLE_EQ(c.weil_max, 50.0);
  EXPECT_EQ(c.heuristic_disc_cap, 1000);
  EXPECT_DOUBLE_EQ(c.initial_effort_height, std::log(100.0));
  EXPECT_EQ(c.initial_effort_fields, 16);
  EXPECT_EQ(c.precision_bits, 128);
  EXPECT_EQ(c.workers, 1);
}

TEST(Config, ParseWithCommentsAndBlanks) {
  std::istringstream in(
      "# search tuning\n"
      "\n"
      "delta_max = 2500   # inline comment\n"
      "  weil_max=12.5\n"
      "workers = 3\n"
      "precision_bits = 256\n"
      "heuristic_disc_cap = 50\n"
      "initial_effort_fields = 4\n"
      "initial_effort_height = 0\n");
  SearchConfig c = parse_config(in);
  EXPECT_DOUBLE_EQ(c.delta_max, 2500.0);
  EXPECT_DOUBLE_EQ(c.weil_max, 12.5);
  EXPECT_EQ(c.workers, 3);
  EXPECT_EQ(c.precision_bits, 256);
  EXPECT_EQ(c.heuristic_disc_cap, 50);
  EXPECT_EQ(c.initial_effort_fields, 4);
  EXPECT_DOUBLE_EQ(c.initial_effort_height, 0.0);
}

TEST(Config, ErrorsCarryLineNumbers) {
  std::istringstream in("delta_max = 10\nnot a key value pair\n");
  try {
    parse_config(in);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  SearchConfig c;
  EXPECT_THROW(c.set("no_such_key", "1"), ConfigError);
  EXPECT_THROW(c.set("delta_max", "abc"), ConfigError);
  EXPECT_THROW(c.set("delta_max", "1e3junk"), ConfigError);
  EXPECT_THROW(c.set("delta_max", "-5"), ConfigError);
  EXPECT_THROW(c.set("delta_max", "inf"), ConfigError);
  EXPECT_THROW(c.set("workers", "0"), ConfigError);
  EXPECT_THROW(c.set("precision_bits", "8"), ConfigError);
  EXPECT_THROW(c.set("heuristic_disc_cap", "2.5"), ConfigError);
  // The failed assignments must not clobber previous values.
  EXPECT_DOUBLE_EQ(c.delta_max, 1e5);
  EXPECT_EQ(c.workers, 1);

  c.set("workers", "2");
  EXPECT_EQ(c.workers, 2);
  c.set("delta_max", "3.5e4");
  EXPECT_DOUBLE_EQ(c.delta_max, 3.5e4);
}

TEST(Config, LoadMissingFile) {
  EXPECT_THROW(load_config("/nonexistent/path/minpoint.conf"), ConfigError);
}
