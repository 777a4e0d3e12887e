#include "doctest.h"
#include "tslab/config.hpp"
#include "tslab/errors.hpp"

using namespace tslab;

TEST_CASE("sections, comments and typed lookups") {
  Config c = Config::parse(
      "seed = 4\n"
      "# comment\n"
      "[attack]\n"
      "epsilon = 3/255   ; trailing comment\n"
      "steps=5\n"
      "random_init = false\n"
      "\n"
      "[probe]\n"
      "lambdas = 0.25, 0.5,0.75\n"
      "method = crop-global\n");
  CHECK(c.get_u64("seed", 0) == 4);
  CHECK(c.get_double("attack.epsilon", 0.0) == doctest::Approx(3.0 / 255.0).epsilon(1e-15));
  CHECK(c.get_int("attack.steps", 0) == 5);
  CHECK_FALSE(c.get_bool("attack.random_init", true));
  CHECK(c.get_doubles("probe.lambdas", {}) == std::vector<double>{0.25, 0.5, 0.75});
  CHECK(c.get_string("probe.method", "") == "crop-global");
  CHECK(c.get_double("attack.alpha", 0.5) == 0.5);
  CHECK(c.unused_keys().empty());
  CHECK(c.resolved().at("attack.alpha") == "0.5");
}

TEST_CASE("manifest lists every resolved key by section") {
  Config c = Config::parse("[b]\nx = 1\n[a]\ny = 2\n");
  c.get_int("b.x", 0);
  c.get_int("a.y", 0);
  c.get_int("a.z", 7);
  c.get_string("top", "v");
  CHECK(c.manifest() == "top = v\n\n[a]\ny = 2\nz = 7\n\n[b]\nx = 1\n");
}

TEST_CASE("unused keys are reported") {
  Config c = Config::parse("[train]\nepochs = 2\nepochz = 3\n");
  c.get_int("train.epochs", 1);
  CHECK(c.unused_keys() == std::vector<std::string>{"train.epochz"});
}

TEST_CASE("malformed files report the offending line offset") {
  const auto offset_of = [](const std::string& text) -> std::uint64_t {
    try {
      Config::parse(text);
    } catch (const FormatError& e) {
      return e.offset();
    }
    FAIL("expected a format error");
    return 0;
  };
  CHECK(offset_of("a = 1\nnot a pair\n") == 6);
  CHECK(offset_of("[sec\n") == 0);
  CHECK(offset_of("x = 1\nx = 2\n") == 6);
  CHECK(offset_of("[ok]\nbad key = 1\n") == 5);
}

TEST_CASE("bad values and missing files") {
  Config c = Config::parse("n = abc\nb = maybe\nr = 1/0\n");
  CHECK_THROWS_AS(c.get_double("n", 0), ArgumentError);
  CHECK_THROWS_AS(c.get_int("n", 0), ArgumentError);
  CHECK_THROWS_AS(c.get_bool("b", false), ArgumentError);
  CHECK_THROWS_AS(c.get_double("r", 0), ArgumentError);
  CHECK_THROWS_AS(c.require_string("missing"), ArgumentError);
  CHECK_THROWS_AS(Config::load("/nonexistent/tslab.cfg"), FileError);
}
