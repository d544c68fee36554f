#include <filesystem>
#include <string>

#include "doctest.h"
#include "ocsynth/diffusion/mock_service.hpp"
#include "ocsynth/dataset/manifest.hpp"
#include "ocsynth/imaging/io.hpp"
#include "support/cli_e2e.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kCli = OCSYNTH_CLI;
const fs::path kFixtures = fs::path(OCSYNTH_FIXTURE_DIR) / "cli";
const fs::path kWork = OCSYNTH_E2E_WORK;

int cli(const std::string& args) { return e2e::run_cli(kCli, kFixtures, args, kWork / "errors.log"); }

}  // namespace

TEST_CASE("every subcommand runs on the bundled fixtures and reruns byte-identically") {
  ocs::MockDiffusionService service;
  service.start();
  const auto checks = e2e::run_fixture_suite(kCli, kFixtures, kWork / "suite", service.endpoint());
  service.stop();
  REQUIRE(checks.size() == 7);
  for (const auto& c : checks) {
    INFO(c.subcommand);
    for (const auto& p : c.problems) INFO(p);
    CHECK(c.exit_code == 0);
    std::string all;
    for (const auto& p : c.problems) all += p + "\n";
    CHECK_MESSAGE(c.problems.empty(), all);
  }
}

TEST_CASE("split on the PACE-shaped fixture reaches 22/11/20 instances") {
  const fs::path out = kWork / "split";
  fs::remove_all(out);
  REQUIRE(cli("split --config config.json --ratio 2:1:2 --out '" + out.string() + "'") == 0);
  const auto totals = e2e::read_json(out / "split.json").at("totals");
  CHECK(totals.at("train").at("instances") == 22);
  CHECK(totals.at("val").at("instances") == 11);
  CHECK(totals.at("test").at("instances") == 20);
}

TEST_CASE("gen-cutpaste --count 10 --seed 7 twice gives identical hash and labels") {
  const fs::path a = kWork / "det_a", b = kWork / "det_b";
  fs::remove_all(a);
  fs::remove_all(b);
  REQUIRE(cli("gen-cutpaste --config config.json --count 10 --seed 7 --out '" + a.string() + "'") == 0);
  REQUIRE(cli("gen-cutpaste --config config.json --count 10 --seed 7 --out '" + b.string() + "'") == 0);
  CHECK(e2e::read_json(a / "run_record.json").at("config_sha256") ==
        e2e::read_json(b / "run_record.json").at("config_sha256"));
  CHECK(e2e::tree_differences(a / "labels", b / "labels").empty());
  CHECK(e2e::tree_differences(a, b).empty());
}

TEST_CASE("a different seed changes the hash and the labels") {
  const fs::path a = kWork / "det_a", c = kWork / "det_c";
  fs::remove_all(c);
  REQUIRE(cli("gen-cutpaste --config config.json --count 10 --seed 8 --out '" + c.string() + "'") == 0);
  CHECK(e2e::read_json(a / "run_record.json").at("config_sha256") !=
        e2e::read_json(c / "run_record.json").at("config_sha256"));
  CHECK(!e2e::tree_differences(a / "labels", c / "labels").empty());
}

TEST_CASE("errors map to categorized exit codes") {
  const std::string out = " --out '" + (kWork / "err").string() + "'";
  SUBCASE("config errors exit 2") {
    CHECK(cli("split --config config.json --set split.bogus=1" + out) == 2);
    CHECK(cli("split --set split.videos=videos.json" + out) == 2);
    CHECK(cli("split --config config.json --ratio 2:x:2" + out) == 2);
    CHECK(cli("split --config config.json --seed -3" + out) == 2);
    CHECK(cli("gen-cutpaste --config config.json --set gen-cutpaste.targets=missing" + out) == 2);
    CHECK(cli("gen-diffusion --config config.json --count 1" + out) == 2);
    CHECK(cli("frobnicate") == 2);
    CHECK(cli("mix --config config.json --set mix.real_fraction=0.0" + out) == 2);
  }
  SUBCASE("unreadable assets exit 3") {
    const fs::path bad = kWork / "bad_backgrounds";
    fs::create_directories(bad);
    ocs::write_text_file(bad / "broken.png", "not a png");
    CHECK(cli("gen-cutpaste --config config.json --count 1 --set gen-cutpaste.backgrounds='\"" + bad.string() + "\"'" +
              out) == 3);
  }
  SUBCASE("service failures exit 4") {
    CHECK(cli("gen-diffusion --config config.json --count 1 --endpoint http://127.0.0.1:1 --set gen-diffusion.retries=0" +
              out) == 4);
    ocs::MockDiffusionService::Behavior reject;
    reject.status_override = 400;
    ocs::MockDiffusionService service(reject);
    service.start();
    CHECK(cli("gen-diffusion --config config.json --count 1 --endpoint " + service.endpoint() + out) == 4);
    service.stop();
  }
}

TEST_CASE("bundled fixtures match a fresh regeneration") {
  const fs::path fresh = kWork / "fixtures";
  fs::remove_all(fresh);
  const std::string cmd = "'" + std::string(OCSYNTH_MAKE_FIXTURES) + "' '" + fresh.string() + "' > /dev/null 2>&1";
  REQUIRE(std::system(cmd.c_str()) == 0);
  const auto diff = e2e::tree_differences(kFixtures, fresh);
  std::string all;
  for (const auto& f : diff) all += f + "\n";
  CHECK_MESSAGE(diff.empty(), all);
}
