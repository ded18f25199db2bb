#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "choreo/branch_io.hpp"
#include "choreo/errors.hpp"

using namespace choreo;
namespace fs = std::filesystem;

namespace {

const FamilyBranch& sample_branch() {
  static const FamilyBranch b = [] {
    SystemConfig c(4);
    ContinuationSettings s;
    s.max_steps = 4;
    s.intervals = 12;
    s.adapt_every = 2;
    s.period_targets = {5.3, 5.35};
    FamilyBranch out = start_family(vertical_modes(c)[1], c, s);
    BranchEvent ev;
    ev.kind = EventKind::Fold;
    ev.step = 1;
    ev.offset = 0.1 / 3.0;
    ev.orbit = out.orbits[1];
    ev.tangent = out.tangents[1];
    out.events.push_back(ev);
    ev.kind = EventKind::Collision;
    ev.tangent = Vec();
    out.events.push_back(ev);
    return out;
  }();
  return b;
}

std::string to_text(const FamilyBranch& b) {
  std::ostringstream out;
  write_branch(out, b);
  return out.str();
}

FamilyBranch from_text(const std::string& s) {
  std::istringstream in(s);
  return read_branch(in);
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("choreo_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("branch_io") {

TEST_CASE("write, read, write reproduces the file and every number") {
  const FamilyBranch& b = sample_branch();
  const std::string text = to_text(b);
  CHECK(text.rfind("choreo-branch 1\n", 0) == 0);
  const FamilyBranch r = from_text(text);
  CHECK(to_text(r) == text);

  CHECK(r.id == b.id);
  CHECK(r.config.n == 4);
  CHECK(r.family == b.family);
  CHECK(r.wave_number == b.wave_number);
  CHECK(r.termination == b.termination);
  CHECK(r.provenance.frequency == b.provenance.frequency);
  CHECK(r.settings.period_targets == b.settings.period_targets);
  CHECK(r.settings.adapt_every == 2);
  CHECK(r.steps == b.steps);
  CHECK(r.det_signs == b.det_signs);
  CHECK(r.det_flips == b.det_flips);
  CHECK(r.newton_iterations == b.newton_iterations);
  CHECK(r.current_step == b.current_step);
  REQUIRE(r.orbits.size() == b.orbits.size());
  for (size_t i = 0; i < b.orbits.size(); ++i) {
    CHECK(r.orbits[i].period == b.orbits[i].period);
    CHECK(r.orbits[i].mesh.breakpoints == b.orbits[i].mesh.breakpoints);
    CHECK((r.orbits[i].nodes.array() == b.orbits[i].nodes.array()).all());
    CHECK((r.orbits[i].lambdas.array() == b.orbits[i].lambdas.array()).all());
    CHECK((r.tangents[i].array() == b.tangents[i].array()).all());
  }
  REQUIRE(r.events.size() == b.events.size());
  CHECK(r.events[0].kind == EventKind::Fold);
  CHECK(r.events[0].offset == b.events[0].offset);
  CHECK((r.events[0].tangent.array() == b.events[0].tangent.array()).all());
  CHECK(r.events[1].kind == EventKind::Collision);
  CHECK(r.events[1].tangent.size() == 0);
}

TEST_CASE("files on disk") {
  const fs::path dir = scratch_dir("files");
  const std::string file = (dir / "a.branch").string();
  write_branch(file, sample_branch());
  CHECK_FALSE(fs::exists(file + ".tmp"));
  const FamilyBranch r = read_branch(file);
  CHECK(to_text(r) == to_text(sample_branch()));
  CHECK_THROWS_AS(read_branch((dir / "missing.branch").string()), Error);
  fs::remove_all(dir);
}

TEST_CASE("malformed files are rejected") {
  const std::string text = to_text(sample_branch());
  CHECK_THROWS_AS(from_text("choreo-branch 2\n" + text.substr(text.find('\n') + 1)), FormatError);
  CHECK_THROWS_AS(from_text(""), FormatError);
  CHECK_THROWS_AS(from_text(text.substr(0, text.size() / 2)), FormatError);
  CHECK_THROWS_AS(from_text(text.substr(0, text.rfind("end"))), FormatError);

  std::string bad = text;
  const size_t at = bad.find("\nnode ") + 6;
  bad.replace(at, 1, "x");
  CHECK_THROWS_AS(from_text(bad), FormatError);

  bad = text;
  const size_t orbits = bad.find("\norbits ");
  bad.replace(orbits, 9, "\norbits 9");
  CHECK_THROWS_AS(from_text(bad), FormatError);

  try {
    from_text(bad);
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
}

TEST_CASE("run index") {
  const fs::path dir = scratch_dir("index");
  const FamilyBranch& b = sample_branch();
  IndexEntry e = index_entry((dir / "a.branch").string(), b);
  CHECK(e.orbits == static_cast<int>(b.orbits.size()));
  CHECK(e.period_min == b.period_range().first);
  update_index(dir.string(), e);
  update_index(dir.string(), e);
  auto list = read_index((dir / "index.txt").string());
  REQUIRE(list.size() == 1);
  CHECK(list[0].id == b.id);
  CHECK(list[0].termination == b.termination);
  CHECK(list[0].period_max == e.period_max);

  IndexEntry other = e;
  other.file = (dir / "b.branch").string();
  other.termination = "step failure";
  update_index(dir.string(), other);
  e.orbits = 99;
  update_index(dir.string(), e);
  list = read_index((dir / "index.txt").string());
  REQUIRE(list.size() == 2);
  CHECK(list[0].orbits == 99);
  CHECK(list[1].termination == "step failure");

  std::ofstream((dir / "index.txt").string()) << "something else\n";
  CHECK_THROWS_AS(read_index((dir / "index.txt").string()), FormatError);
  CHECK(read_index((dir / "none.txt").string()).empty());
  fs::remove_all(dir);
}

}  // TEST_SUITE
