#ifndef BUNDLEDIFF_REPORT_HPP
#define BUNDLEDIFF_REPORT_HPP

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace bundlediff {

enum class CheckState { pass, fail, inconclusive };

struct Check {
  std::string name;
  double measured = 0;
  double tolerance = 0;
  double sigma = 0;       // statistical scale when applicable (0 otherwise)
  CheckState state = CheckState::fail;
  std::string note;
};

struct Verdict {
  std::string suite;
  std::vector<Check> checks;
  nlohmann::json environment;  // seed, model, config echo

  bool all_pass() const {
    for (const auto& c : checks)
      if (c.state == CheckState::fail) return false;
    return true;
  }
  bool has_inconclusive() const {
    for (const auto& c : checks)
      if (c.state == CheckState::inconclusive) return true;
    return false;
  }
};

std::string state_name(CheckState s);

// 17-significant-digit float serialization for byte-stable verdicts
nlohmann::json verdict_to_json(const Verdict& v, bool with_timestamp = true);
void write_verdict(const Verdict& v, const std::string& path);
void print_verdict(const Verdict& v);

Check make_check(const std::string& name, double measured, double tol, double sigma = 0,
                 const std::string& note = "");
Check make_sigma_check(const std::string& name, double measured, double nsigma_tol, double sigma,
                       double inconclusive_scale, const std::string& note = "");

}  // namespace bundlediff

#endif
