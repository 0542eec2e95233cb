#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bundlediff/report.hpp"
#include "bundlediff/verify.hpp"

using namespace bundlediff;

TEST_CASE("check states and verdict json") {
  Check ok = make_check("x", 1e-12, 1e-10);
  CHECK(ok.state == CheckState::pass);
  Check bad = make_check("y", 1e-8, 1e-10);
  CHECK(bad.state == CheckState::fail);
  // sigma-based: inconclusive when the error bar swamps the scale
  Check inc = make_sigma_check("z", 0.05, 3.0, 0.5, 0.1);
  CHECK(inc.state == CheckState::inconclusive);
  Check sok = make_sigma_check("w", 0.05, 3.0, 0.02, 0.1);
  CHECK(sok.state == CheckState::pass);
  Check sbad = make_sigma_check("v", 0.5, 3.0, 0.02, 0.1);
  CHECK(sbad.state == CheckState::fail);

  Verdict v;
  v.suite = "demo";
  v.checks = {ok, bad, inc};
  CHECK_FALSE(v.all_pass());
  CHECK(v.has_inconclusive());
  nlohmann::json j = verdict_to_json(v, false);
  CHECK(j["suite"] == "demo");
  CHECK(j["checks"].size() == 3);
  CHECK(j["checks"][1]["state"] == "FAIL");
  // bytes stable without timestamp
  CHECK(verdict_to_json(v, false).dump() == verdict_to_json(v, false).dump());
}

TEST_CASE("error scaling suite reports the right slope") {
  VerifySettings s;
  s.seed = 5;
  Verdict v = verify_error_scaling(s);
  REQUIRE(v.checks.size() == 1);
  CHECK(v.checks[0].state == CheckState::pass);
}

TEST_CASE("convergence suite: weak dt order and grid order") {
  VerifySettings s;
  s.seed = 5;
  Verdict v = verify_convergence(s);
  for (const auto& c : v.checks) {
    INFO(c.name, " measured ", c.measured);
    CHECK(c.state == CheckState::pass);
  }
}
