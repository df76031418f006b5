#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "l2c/csv.hpp"

using namespace l2c;

TEST(Csv, ReadsQuotedFieldsAcrossLines) {
  std::istringstream in("a,b\n\"x,1\",\"he said \"\"hi\"\"\"\n\n\"multi\nline\",z\nlast,row\n");
  csv::Reader r(in);
  csv::Record rec;
  ASSERT_TRUE(r.next(rec));
  EXPECT_EQ(rec.fields, (std::vector<std::string>{"a", "b"}));
  ASSERT_TRUE(r.next(rec));
  EXPECT_EQ(rec.fields, (std::vector<std::string>{"x,1", "he said \"hi\""}));
  EXPECT_EQ(rec.line, 2u);
  ASSERT_TRUE(r.next(rec));
  EXPECT_EQ(rec.fields, (std::vector<std::string>{"multi\nline", "z"}));
  EXPECT_EQ(rec.line, 4u);
  ASSERT_TRUE(r.next(rec));
  EXPECT_EQ(rec.line, 6u);
  EXPECT_FALSE(r.next(rec));
}

TEST(Csv, WriteThenReadRoundTrips) {
  const std::vector<std::string> fields = {"plain", "with,comma", "with \"quote\"", "", "line\nbreak"};
  std::ostringstream out;
  csv::write_record(out, fields);
  std::istringstream in(out.str());
  csv::Reader r(in);
  csv::Record rec;
  ASSERT_TRUE(r.next(rec));
  EXPECT_EQ(rec.fields, fields);
}

TEST(Csv, NumbersRoundTripExactly) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.0, 0.041, 28.900000000000002}) {
    EXPECT_EQ(*csv::parse_number(csv::format_number(v)), v);
  }
  EXPECT_EQ(csv::format_number(-0.0), "0");
  EXPECT_EQ(csv::format_number(6.0), "6");
}

TEST(Csv, ParseNumberIsStrict) {
  EXPECT_FALSE(csv::parse_number(""));
  EXPECT_FALSE(csv::parse_number("12abc"));
  EXPECT_FALSE(csv::parse_number("nan"));
  EXPECT_FALSE(csv::parse_number("inf"));
  EXPECT_EQ(*csv::parse_number(" 4.5 "), 4.5);
  EXPECT_EQ(*csv::parse_number("-4"), -4.0);
}

TEST(Csv, OptionalFormatting) {
  EXPECT_EQ(csv::format_optional(std::nullopt), "");
  EXPECT_EQ(csv::format_optional(2.5), "2.5");
}
