#include "spinwalk/config.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

using namespace spinwalk;

namespace {

int error_line(const std::string& text) {
  try {
    Config::parse(text, default_schema());
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST(Config, ParsesAllValueTypes) {
  const std::string text =
      "# experiment\n"
      "[model]\n"
      "family = \"rotation4d\"   # trailing comment\n"
      "d = 4\n"
      "U = 1.5e0\n"
      "a = [0.3, 0.5 ,0.6]\n"
      "\n"
      "[walk]\n"
      "\tnoise=\"rade\\\"macher\"\r\n"
      "x0 = 2\n"
      "[run]\n"
      "seed = -7\n"
      "horizon = 3\n"
      "[exit]\n"
      "lambda = []\n";
  const Config c = Config::parse(text, default_schema());
  EXPECT_EQ(c.get_string("model.family"), "rotation4d");
  EXPECT_EQ(c.get_int("model.d"), 4);
  EXPECT_DOUBLE_EQ(*c.get_double("model.U"), 1.5);
  EXPECT_EQ(c.get_array("model.a"), (std::vector<double>{0.3, 0.5, 0.6}));
  EXPECT_EQ(c.get_string("walk.noise"), "rade\"macher");
  EXPECT_EQ(c.get_array("walk.x0"), std::vector<double>{2.0});
  EXPECT_EQ(c.get_int("run.seed"), -7);
  EXPECT_DOUBLE_EQ(*c.get_double("run.horizon"), 3.0);
  EXPECT_TRUE(c.get_array("exit.lambda")->empty());
  EXPECT_EQ(c.line_of("model.a"), 6);
  EXPECT_FALSE(c.has("run.n"));
  EXPECT_FALSE(c.get_int("run.n").has_value());
}

TEST(Config, BoolsAndEmptyInput) {
  ConfigSchema s{{"x.flag", ValueType::Bool}};
  EXPECT_EQ(Config::parse("[x]\nflag = true\n", s).get_bool("x.flag"), true);
  EXPECT_EQ(Config::parse("[x]\nflag = false", s).get_bool("x.flag"), false);
  EXPECT_THROW(Config::parse("[x]\nflag = yes\n", s), ConfigError);
  EXPECT_FALSE(Config::parse("", s).has("x.flag"));
  EXPECT_FALSE(Config::parse("\n\n# only comments\n", s).has("x.flag"));
}

TEST(Config, ErrorsCarryLineNumbers) {
  EXPECT_EQ(error_line("[model]\nd = 2\n[nope]\n"), 3);
  EXPECT_EQ(error_line("[model]\nwidth = 2\n"), 2);
  EXPECT_EQ(error_line("d = 2\n"), 1);
  EXPECT_EQ(error_line("[model]\nd = 2\n\nd = 3\n"), 4);
  EXPECT_EQ(error_line("[model]\nd = 2.5\n"), 2);
  EXPECT_EQ(error_line("[model]\nU = \"big\"\n"), 2);
  EXPECT_EQ(error_line("[model]\nU = 1.0 2.0\n"), 2);
  EXPECT_EQ(error_line("[model]\nU = inf\n"), 2);
  EXPECT_EQ(error_line("[model]\nU = 1e\n"), 2);
  EXPECT_EQ(error_line("[model]\na = [1, 2\n"), 2);
  EXPECT_EQ(error_line("[model]\na = [1, x]\n"), 2);
  EXPECT_EQ(error_line("[model]\nfamily = \"open\n"), 2);
  EXPECT_EQ(error_line("[model]\nfamily = \"bad\\n\"\n"), 2);
  EXPECT_EQ(error_line("[model\n"), 1);
  EXPECT_EQ(error_line("[model]\nd =\n"), 2);
  EXPECT_EQ(error_line("[model]\nd = 99999999999999999999\n"), 2);
}

TEST(Config, ErrorMessageNamesSourceAndLine) {
  try {
    Config::parse("[model]\nbogus = 1\n", default_schema(), "exp.toml");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("exp.toml:2:", 0), 0u) << e.what();
  }
}

TEST(Config, LoadFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "spinwalk_config_test.toml";
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    ASSERT_NE(f, nullptr);
    std::fputs("[run]\nseed = 11\nreplicas = 20\n", f);
    std::fclose(f);
  }
  const Config c = Config::load(path.string(), default_schema());
  EXPECT_EQ(c.get_int("run.seed"), 11);
  EXPECT_EQ(c.get_int("run.replicas"), 20);
  std::filesystem::remove(path);
  EXPECT_THROW(Config::load(path.string(), default_schema()), Error);
}
