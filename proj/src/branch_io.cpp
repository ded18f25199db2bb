#include "choreo/branch_io.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "choreo/errors.hpp"

namespace choreo {

namespace {

constexpr const char* kBranchSchema = "choreo-branch 1";
constexpr const char* kIndexSchema = "choreo-index 1";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  Writer& key(const char* k) {
    out_ << k;
    return *this;
  }
  Writer& operator<<(double v) {
    out_ << ' ' << fmt(v);
    return *this;
  }
  Writer& operator<<(int v) {
    out_ << ' ' << v;
    return *this;
  }
  Writer& operator<<(const std::string& s) {
    out_ << ' ' << s;
    return *this;
  }
  void end() { out_ << '\n'; }

  void vector(const char* k, const Vec& v) {
    key(k) << static_cast<int>(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) *this << v[i];
    end();
  }

  void orbit(const OrbitSolution& o) {
    key("orbit") << to_string(o.family) << o.wave_number << o.period << o.lambdas[0] << o.lambdas[1]
                 << o.lambdas[2] << o.mesh.degree << o.mesh.intervals() << static_cast<int>(o.nodes.rows());
    end();
    key("mesh");
    for (double b : o.mesh.breakpoints) *this << b;
    end();
    for (Eigen::Index g = 0; g < o.nodes.cols(); ++g) {
      key("node");
      for (Eigen::Index r = 0; r < o.nodes.rows(); ++r) *this << o.nodes(r, g);
      end();
    }
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  /// Next line, split into fields; the first must equal `keyword`.
  std::vector<std::string> expect(const std::string& keyword) {
    std::string line;
    if (!std::getline(in_, line)) fail("unexpected end of file, expected '" + keyword + "'");
    ++line_no_;
    last_line_ = line;
    std::vector<std::string> fields;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) fields.push_back(tok);
    if (fields.empty() || fields[0] != keyword) fail("expected '" + keyword + "'");
    fields.erase(fields.begin());
    return fields;
  }
  /// Rest of the line after the keyword, verbatim.
  std::string rest(const std::string& keyword) {
    expect(keyword);
    const size_t pos = last_line_.find(keyword) + keyword.size();
    return pos < last_line_.size() ? last_line_.substr(pos + 1) : std::string();
  }

  double real(const std::string& s) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE) fail("bad number '" + s + "'");
    return v;
  }
  int integer(const std::string& s) {
    int v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) fail("bad integer '" + s + "'");
    return v;
  }
  void count(const std::vector<std::string>& f, size_t n) {
    if (f.size() != n) fail("expected " + std::to_string(n) + " fields, found " + std::to_string(f.size()));
  }

  Vec vector(const std::string& keyword) {
    const auto f = expect(keyword);
    if (f.empty()) fail("missing length");
    const int len = integer(f[0]);
    if (len < 0) fail("negative length");
    count(f, static_cast<size_t>(len) + 1);
    Vec v(len);
    for (int i = 0; i < len; ++i) v[i] = real(f[i + 1]);
    return v;
  }
  std::vector<int> ints(const std::string& keyword) {
    const Vec v = vector(keyword);
    std::vector<int> out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (v[i] != std::floor(v[i])) fail("expected integers");
      out[i] = static_cast<int>(v[i]);
    }
    return out;
  }

  OrbitSolution orbit(const SystemConfig& config) {
    const auto f = expect("orbit");
    count(f, 9);
    OrbitSolution o;
    o.config = config;
    try {
      o.family = family_type_from_string(f[0]);
    } catch (const InvalidInput&) {
      fail("unknown family '" + f[0] + "'");
    }
    o.wave_number = integer(f[1]);
    o.period = real(f[2]);
    o.lambdas << real(f[3]), real(f[4]), real(f[5]);
    o.mesh.degree = integer(f[6]);
    const int intervals = integer(f[7]);
    const int dim = integer(f[8]);
    if (dim != config.dim() || intervals < 1) fail("orbit dimensions do not match the system");
    const auto b = expect("mesh");
    count(b, static_cast<size_t>(intervals) + 1);
    o.mesh.breakpoints.resize(intervals + 1);
    for (int i = 0; i <= intervals; ++i) o.mesh.breakpoints[i] = real(b[i]);
    try {
      o.mesh.validate();
    } catch (const InvalidInput& e) {
      fail(e.what());
    }
    o.nodes.resize(dim, o.mesh.node_count());
    for (int g = 0; g < o.mesh.node_count(); ++g) {
      const auto v = expect("node");
      count(v, dim);
      for (int r = 0; r < dim; ++r) o.nodes(r, g) = real(v[r]);
    }
    return o;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("branch file line " + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::istream& in_;
  int line_no_ = 0;
  std::string last_line_;
};

}  // namespace

void write_branch(std::ostream& out, const FamilyBranch& b) {
  Writer w(out);
  out << kBranchSchema << '\n';
  w.key("id") << b.id;
  w.end();
  w.key("system") << b.config.n << b.config.mu;
  w.end();
  w.key("family") << to_string(b.family) << b.wave_number;
  w.end();
  const Provenance& p = b.provenance;
  w.key("provenance") << p.source << p.frequency << (p.parent_id.empty() ? std::string("-") : p.parent_id)
                      << p.parent_event << p.direction;
  w.end();
  const ContinuationSettings& s = b.settings;
  w.key("settings") << s.amplitude << s.initial_step << s.min_step << s.max_step << s.max_steps << s.max_period
                    << s.collision_radius << s.intervals << s.degree << s.adapt_every << s.newton.tolerance
                    << s.newton.max_iterations << s.newton.stagnation_tolerance;
  w.end();
  w.vector("targets", Eigen::Map<const Vec>(s.period_targets.data(), s.period_targets.size()));
  w.key("state") << b.current_step << b.fast_steps;
  w.end();
  w.key("termination") << b.termination;
  w.end();

  w.vector("steps", Eigen::Map<const Vec>(b.steps.data(), b.steps.size()));
  auto ints = [&w](const char* k, const std::vector<int>& v) {
    w.key(k) << static_cast<int>(v.size());
    for (int x : v) w << x;
    w.end();
  };
  ints("det_signs", b.det_signs);
  ints("det_flips", b.det_flips);
  ints("newton_iterations", b.newton_iterations);

  w.key("orbits") << static_cast<int>(b.orbits.size());
  w.end();
  for (const auto& o : b.orbits) w.orbit(o);
  w.key("tangents") << static_cast<int>(b.tangents.size());
  w.end();
  for (const auto& t : b.tangents) w.vector("tangent", t);
  w.key("events") << static_cast<int>(b.events.size());
  w.end();
  for (const auto& e : b.events) {
    w.key("event") << to_string(e.kind) << e.step << e.offset << e.target;
    w.end();
    w.orbit(e.orbit);
    w.vector("tangent", e.tangent);
  }
  out << "end\n";
}

void write_branch(const std::string& file, const FamilyBranch& branch) {
  // write to a sibling temporary and rename, so readers never see half a file
  const std::string tmp = file + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write " + file);
    write_branch(out, branch);
    out.flush();
    if (!out) throw Error("cannot write " + file);
  }
  std::filesystem::rename(tmp, file);
}

FamilyBranch read_branch(std::istream& in) {
  std::string schema;
  if (!std::getline(in, schema) || schema != kBranchSchema)
    throw FormatError("not a branch file (expected schema line '" + std::string(kBranchSchema) + "')");
  Reader r(in);
  FamilyBranch b;
  auto f = r.expect("id");
  r.count(f, 1);
  b.id = f[0];
  f = r.expect("system");
  r.count(f, 2);
  try {
    b.config = SystemConfig(r.integer(f[0]), r.real(f[1]));
  } catch (const InvalidInput& e) {
    r.fail(e.what());
  }
  f = r.expect("family");
  r.count(f, 2);
  try {
    b.family = family_type_from_string(f[0]);
  } catch (const InvalidInput&) {
    r.fail("unknown family '" + f[0] + "'");
  }
  b.wave_number = r.integer(f[1]);
  f = r.expect("provenance");
  r.count(f, 5);
  b.provenance.source = f[0];
  b.provenance.frequency = r.real(f[1]);
  b.provenance.parent_id = f[2] == "-" ? "" : f[2];
  b.provenance.parent_event = r.integer(f[3]);
  b.provenance.direction = r.integer(f[4]);
  f = r.expect("settings");
  r.count(f, 13);
  ContinuationSettings& s = b.settings;
  s.amplitude = r.real(f[0]);
  s.initial_step = r.real(f[1]);
  s.min_step = r.real(f[2]);
  s.max_step = r.real(f[3]);
  s.max_steps = r.integer(f[4]);
  s.max_period = r.real(f[5]);
  s.collision_radius = r.real(f[6]);
  s.intervals = r.integer(f[7]);
  s.degree = r.integer(f[8]);
  s.adapt_every = r.integer(f[9]);
  s.newton.tolerance = r.real(f[10]);
  s.newton.max_iterations = r.integer(f[11]);
  s.newton.stagnation_tolerance = r.real(f[12]);
  const Vec targets = r.vector("targets");
  s.period_targets.assign(targets.data(), targets.data() + targets.size());
  f = r.expect("state");
  r.count(f, 2);
  b.current_step = r.real(f[0]);
  b.fast_steps = r.integer(f[1]);
  b.termination = r.rest("termination");

  const Vec steps = r.vector("steps");
  b.steps.assign(steps.data(), steps.data() + steps.size());
  b.det_signs = r.ints("det_signs");
  b.det_flips = r.ints("det_flips");
  b.newton_iterations = r.ints("newton_iterations");

  f = r.expect("orbits");
  r.count(f, 1);
  const int norbits = r.integer(f[0]);
  if (norbits < 0) r.fail("negative orbit count");
  for (int i = 0; i < norbits; ++i) b.orbits.push_back(r.orbit(b.config));
  f = r.expect("tangents");
  r.count(f, 1);
  const int ntangents = r.integer(f[0]);
  if (ntangents < 0) r.fail("negative tangent count");
  for (int i = 0; i < ntangents; ++i) b.tangents.push_back(r.vector("tangent"));
  f = r.expect("events");
  r.count(f, 1);
  const int nevents = r.integer(f[0]);
  if (nevents < 0) r.fail("negative event count");
  for (int i = 0; i < nevents; ++i) {
    f = r.expect("event");
    r.count(f, 4);
    BranchEvent e;
    try {
      e.kind = event_kind_from_string(f[0]);
    } catch (const InvalidInput&) {
      r.fail("unknown event kind '" + f[0] + "'");
    }
    e.step = r.integer(f[1]);
    e.offset = r.real(f[2]);
    e.target = r.real(f[3]);
    e.orbit = r.orbit(b.config);
    e.tangent = r.vector("tangent");
    b.events.push_back(std::move(e));
  }
  r.expect("end");
  if (b.orbits.empty()) r.fail("branch has no orbits");
  if (static_cast<int>(b.steps.size()) != norbits - 1 || static_cast<int>(b.det_signs.size()) != norbits ||
      static_cast<int>(b.det_flips.size()) != norbits - 1 || ntangents != norbits)
    r.fail("per-member arrays do not match the orbit count");
  return b;
}

FamilyBranch read_branch(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw FormatError("cannot open branch file " + file);
  return read_branch(in);
}

IndexEntry index_entry(const std::string& file, const FamilyBranch& b) {
  IndexEntry e;
  e.file = std::filesystem::path(file).filename().string();
  e.id = b.id;
  e.n = b.config.n;
  e.mu = b.config.mu;
  e.family = b.family;
  e.wave_number = b.wave_number;
  e.orbits = static_cast<int>(b.orbits.size());
  if (!b.orbits.empty()) std::tie(e.period_min, e.period_max) = b.period_range();
  e.termination = b.termination;
  return e;
}

std::vector<IndexEntry> read_index(const std::string& file) {
  std::ifstream in(file);
  if (!in) return {};
  std::string line;
  if (!std::getline(in, line) || line != kIndexSchema) throw FormatError("not an index file: " + file);
  std::vector<IndexEntry> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    IndexEntry e;
    std::string tag, family;
    if (!(ss >> tag >> e.file >> e.id >> e.n >> e.mu >> family >> e.wave_number >> e.orbits >> e.period_min >>
          e.period_max) ||
        tag != "branch")
      throw FormatError("malformed index line: " + line);
    e.family = family_type_from_string(family);
    std::getline(ss >> std::ws, e.termination);
    out.push_back(e);
  }
  return out;
}

void update_index(const std::string& directory, const IndexEntry& entry) {
  const std::string file = (std::filesystem::path(directory) / "index.txt").string();
  auto entries = read_index(file);
  auto it = std::find_if(entries.begin(), entries.end(), [&](const IndexEntry& e) { return e.file == entry.file; });
  if (it != entries.end())
    *it = entry;
  else
    entries.push_back(entry);
  std::ofstream out(file);
  if (!out) throw Error("cannot write " + file);
  out << kIndexSchema << '\n';
  for (const auto& e : entries)
    out << "branch " << e.file << ' ' << e.id << ' ' << e.n << ' ' << fmt(e.mu) << ' ' << to_string(e.family) << ' '
        << e.wave_number << ' ' << e.orbits << ' ' << fmt(e.period_min) << ' ' << fmt(e.period_max) << ' '
        << e.termination << '\n';
}

}  // namespace choreo
