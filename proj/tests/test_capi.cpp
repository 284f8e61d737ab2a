// Exercises the shared library through its C header only.

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "stratwave/stratwave.h"

namespace {

const char* kLam1 = R"({
  "command": "residual",
  "physics": {"g": 1.0, "d": 1.0},
  "profiles": {
    "layer1": {"rho": {"kind": "constant", "value": 2.0}, "beta": {"kind": "linear", "value_at_zero": 0.0, "slope": -1.0}},
    "layer2": {"rho": {"kind": "constant", "value": 1.0}, "beta": {"kind": "linear", "value_at_zero": 0.0, "slope": -1.0}}
  },
  "laminar": {"h_tilde": 0.0, "h": 0.5, "p1": -1.1752011936438014, "p2": 0.52109530549374738},
  "grid": {"nx": 32, "ns1": 17, "ns2": 17}
})";

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("session lifecycle on LAM-1") {
  sw_session* s = nullptr;
  REQUIRE(sw_session_create(kLam1, &s) == SW_OK);
  int nx = 0, ns1 = 0, ns2 = 0;
  CHECK(sw_session_dims(s, &nx, &ns1, &ns2) == SW_OK);
  CHECK(nx == 32);
  CHECK(ns2 == 17);
  double h = 0.0, res = 1.0, audit = 1.0, lmin = 0.0;
  CHECK(sw_session_energy(s, &h) == SW_OK);
  CHECK(std::isfinite(h));
  CHECK(sw_session_residual(s, &res) == SW_OK);
  CHECK(res < 1e-2);
  CHECK(sw_session_audit(s, 1, 4, 1, &audit) == SW_OK);
  CHECK(audit < 1e-2);
  int verdict = -1;
  CHECK(sw_session_stability(s, 2, &lmin, &verdict) == SW_OK);
  CHECK(verdict == 0);
  CHECK(lmin > 0);
  std::vector<double> buf(32 * 17);
  size_t written = 0;
  CHECK(sw_session_field(s, 2, buf.data(), buf.size(), &written) == SW_OK);
  CHECK(written == buf.size());
  CHECK(buf[16] == doctest::Approx(-std::sinh(0.5)));  // column 0, surface row
  CHECK(sw_session_field(s, 2, buf.data(), 10, &written) == SW_ERR_SIZE);
  CHECK(std::strlen(sw_last_error()) > 0);
  sw_session_free(s);
}

TEST_CASE("error reporting") {
  sw_session* s = nullptr;
  CHECK(sw_session_create("{not json", &s) == SW_ERR_CONFIG);
  CHECK(s == nullptr);
  CHECK(std::string(sw_last_error()).size() > 0);
  CHECK(sw_session_create(R"({"physics": {"g": 1}})", &s) == SW_ERR_CONFIG);
  CHECK(sw_session_create(nullptr, &s) == SW_ERR_NULL_ARGUMENT);
  CHECK(sw_session_energy(nullptr, nullptr) == SW_ERR_NULL_ARGUMENT);
  CHECK(sw_run_command("laminar", "/nonexistent.json", "/tmp", -1, 1) == 2);
  CHECK(std::string(sw_version()).size() > 0);
}

}  // TEST_SUITE
