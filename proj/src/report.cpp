#include "bundlediff/report.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

namespace bundlediff {

std::string state_name(CheckState s) {
  switch (s) {
    case CheckState::pass: return "PASS";
    case CheckState::fail: return "FAIL";
    case CheckState::inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

namespace {
std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
}  // namespace

nlohmann::json verdict_to_json(const Verdict& v, bool with_timestamp) {
  nlohmann::json j;
  j["schema"] = "bundlediff-verdict-1";
  j["suite"] = v.suite;
  j["environment"] = v.environment;
  if (with_timestamp) {
    char ts[64];
    std::time_t t = std::time(nullptr);
    std::strftime(ts, sizeof ts, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    j["timestamp"] = ts;
  }
  auto arr = nlohmann::json::array();
  for (const auto& c : v.checks) {
    nlohmann::json e;
    e["name"] = c.name;
    e["measured"] = fmt17(c.measured);
    e["tolerance"] = fmt17(c.tolerance);
    e["sigma"] = fmt17(c.sigma);
    e["state"] = state_name(c.state);
    if (!c.note.empty()) e["note"] = c.note;
    arr.push_back(e);
  }
  j["checks"] = arr;
  j["pass"] = v.all_pass();
  j["inconclusive"] = v.has_inconclusive();
  return j;
}

void write_verdict(const Verdict& v, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write verdict to " + path);
  out << verdict_to_json(v).dump(2) << "\n";
}

void print_verdict(const Verdict& v) {
  std::printf("suite %s\n", v.suite.c_str());
  for (const auto& c : v.checks) {
    std::printf("  [%-12s] %-46s measured %-13.6g tol %-10.4g", state_name(c.state).c_str(),
                c.name.c_str(), c.measured, c.tolerance);
    if (c.sigma > 0) std::printf(" sigma %.3g", c.sigma);
    if (!c.note.empty()) std::printf("  (%s)", c.note.c_str());
    std::printf("\n");
  }
}

Check make_check(const std::string& name, double measured, double tol, double sigma,
                 const std::string& note) {
  Check c;
  c.name = name;
  c.measured = measured;
  c.tolerance = tol;
  c.sigma = sigma;
  c.note = note;
  c.state = (measured <= tol) ? CheckState::pass : CheckState::fail;
  return c;
}

Check make_sigma_check(const std::string& name, double measured, double nsigma_tol, double sigma,
                       double inconclusive_scale, const std::string& note) {
  Check c;
  c.name = name;
  c.measured = measured;
  c.tolerance = nsigma_tol;
  c.sigma = sigma;
  c.note = note;
  if (sigma <= 0) {
    c.state = measured == 0 ? CheckState::pass : CheckState::fail;
  } else if (sigma > inconclusive_scale) {
    // statistical power too weak to decide at the requested scale
    c.state = CheckState::inconclusive;
  } else {
    c.state = (measured <= nsigma_tol * sigma) ? CheckState::pass : CheckState::fail;
  }
  return c;
}

}  // namespace bundlediff
