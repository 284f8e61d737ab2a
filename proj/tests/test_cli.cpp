#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "stratwave/commands.hpp"

using namespace stratwave;
using fixtures::error_code_of;
namespace fs = std::filesystem;

namespace {

Json lam1_config(const std::string& command) {
  Json prof1 = {{"rho", {{"kind", "constant"}, {"value", 2.0}}},
                {"beta", {{"kind", "linear"}, {"value_at_zero", 0.0}, {"slope", -1.0}}}};
  Json prof2 = prof1;
  prof2["rho"]["value"] = 1.0;
  return {{"command", command},
          {"physics", {{"g", 1.0}, {"d", 1.0}}},
          {"profiles", {{"layer1", prof1}, {"layer2", prof2}}},
          {"laminar", {{"h_tilde", 0.0}, {"h", 0.5}, {"p1", -std::sinh(1.0)}, {"p2", std::sinh(0.5)}}},
          {"grid", {{"nx", 32}, {"ns1", 17}, {"ns2", 17}}}};
}

std::string scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("stratwave_test_" + name);
  fs::remove_all(p);
  return p.string();
}

Json read_json(const std::string& path) {
  std::ifstream f(path);
  return Json::parse(f);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("CSV and number formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(std::nan("")) == "nan");
  CsvWriter w({"a", "b"});
  w.row({"1", "2"});
  CHECK(w.str() == "a,b\n1,2\n");
  CHECK(error_code_of([&] { w.row({"1"}); }) == ErrorCode::internal);
}

TEST_CASE("atomic write leaves only the target") {
  std::string dir = scratch("atomic");
  fs::create_directories(dir);
  atomic_write(dir + "/x.txt", "hello");
  atomic_write(dir + "/x.txt", "world");
  std::ifstream f(dir + "/x.txt");
  std::string s;
  f >> s;
  CHECK(s == "world");
  CHECK(std::distance(fs::directory_iterator(dir), fs::directory_iterator()) == 1);
}

TEST_CASE("profile JSON decoding") {
  auto p = profile_from_json(Json::parse(R"({"kind":"polynomial","coefficients":[1,2]})"), "p");
  CHECK(p.value(2.0) == 5.0);
  auto t = profile_from_json(Json::parse(R"({"kind":"tabulated","knots":[0,1,2],"values":[0,1,4]})"), "p");
  CHECK(t.value(1.0) == 1.0);
  CHECK(error_code_of([] { profile_from_json(Json::parse(R"({"kind":"spline"})"), "p"); }) == ErrorCode::config);
  CHECK(error_code_of([] { profile_from_json(Json::parse(R"({"kind":"constant"})"), "p"); }) == ErrorCode::config);
  auto lp = layer_profiles_from_json(Json::parse(R"({"rho":{"kind":"constant","value":1},
      "beta":{"kind":"linear","value_at_zero":0,"slope":-1},"s_range":[-2,2]})"), 2, "l");
  CHECK(lp.s_range.hi == 2.0);
  CHECK(profile_to_json(lp.beta) == Json::parse(R"({"kind":"linear","value_at_zero":0.0,"slope":-1.0})"));
}

TEST_CASE("laminar command writes Q1 = 1 and a profile CSV") {
  std::string out = scratch("laminar");
  auto r = run_command("laminar", lam1_config("laminar"), out, {});
  REQUIRE(r.exit_code == 0);
  Json j = read_json(out + "/laminar.json");
  CHECK(j["flow"]["Q1"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  std::ifstream csv(out + "/profile.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "y,psi1,psi2,u_minus_c,P");
}

TEST_CASE("configuration errors exit with 2") {
  std::string out = scratch("errors");
  Json c = lam1_config("laminar");
  c["physics"].erase("d");
  CHECK(run_command("laminar", c, out, {}).exit_code == 2);
  CHECK(run_command("laminar", lam1_config("stability"), out, {}).exit_code == 2);
  CHECK(run_command("bogus", lam1_config("bogus"), out, {}).exit_code == 2);
  Json e = lam1_config("audit-grad");
  e["audit"] = {{"eps", Json::array()}};
  CHECK(run_command("audit-grad", e, out, {}).exit_code == 2);
  Json b = lam1_config("stability");
  b["stability"] = {{"basis_size", 0}};
  CHECK(run_command("stability", b, out, {}).exit_code == 2);
  Json g = lam1_config("residual");
  g["grid"]["nx"] = 2048;
  CHECK(run_command("residual", g, out, {}).exit_code == 2);
  CHECK(run_command_file("laminar", "/nonexistent/config.json", out, {}).exit_code == 2);
}

TEST_CASE("stagnant laminar flow succeeds with a warning") {
  std::string out = scratch("stagnant");
  Json c = lam1_config("laminar");
  c["laminar"]["p1"] = 0.0;
  c["laminar"]["p2"] = 0.0;
  REQUIRE(run_command("laminar", c, out, {}).exit_code == 0);
  Json j = read_json(out + "/laminar.json");
  CHECK(j["flow"]["stagnation"].get<bool>());
  CHECK_FALSE(j["warnings"].empty());
}

TEST_CASE("non-monotone manufactured stream function exits with 3") {
  Json c = {{"command", "manufacture"},
            {"physics", {{"g", 1.0}, {"d", 1.0}}},
            {"manufacture",
             {{"psi1", {{"kind", "polynomial"}, {"coefficients", {0, 1, 2}}}},
              {"psi2", {{"kind", "polynomial"}, {"coefficients", {0, -1}}}},
              {"rho1", {{"kind", "constant"}, {"value", 2.0}}},
              {"rho2", {{"kind", "constant"}, {"value", 1.0}}},
              {"h", 0.5}}}};
  CHECK(run_command("manufacture", c, scratch("nonmono"), {}).exit_code == 3);
}

TEST_CASE("a corrupted state file is audited, not rejected") {
  std::string lam = scratch("corrupt_src");
  REQUIRE(run_command("laminar", lam1_config("laminar"), lam, {}).exit_code == 0);
  Json c = lam1_config("audit-grad");
  c["state"] = {{"source", "file"}, {"path", lam + "/laminar.json"},
                {"corruption", {{"layer", 2}, {"amplitude", 0.1}}}};
  c["audit"] = {{"n_trials", 3}, {"fd_directions", 1}};
  std::string out = scratch("corrupt");
  REQUIRE(run_command("audit-grad", c, out, {}).exit_code == 0);
  CHECK(read_json(out + "/audit.json")["audit"]["verdict"] == "NEITHER");

  Json s = lam1_config("stability");
  s["state"] = c["state"];
  REQUIRE(run_command("stability", s, out, {}).exit_code == 0);
  CHECK(read_json(out + "/verdict.json")["stability"]["verdict"] == "INCONCLUSIVE");
}

TEST_CASE("session loading from each source") {
  auto s = load_session(lam1_config("residual"));
  CHECK(s.flow.has_value());
  CHECK(s.state.nx() == 32);
  Json c = lam1_config("residual");
  c["state"] = {{"source", "nowhere"}};
  CHECK(error_code_of([&] { load_session(c); }) == ErrorCode::config);
  c["gravity_refs"] = "consistent";
  c["state"] = {{"source", "laminar"}};
  auto t = load_session(c);
  CHECK(t.refs.rho1 == doctest::Approx(2.0 - 1.0 + 1.0));
}

}  // TEST_SUITE
