#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "choreo/continuation.hpp"

namespace choreo {

// Branch files are line-oriented text. The first line is the schema tag
// "choreo-branch 1"; each following line is a keyword and its fields,
// separated by single spaces, floats with 17 significant digits so that a
// write/read cycle is exact. See README for the layout.

void write_branch(std::ostream& out, const FamilyBranch& branch);
void write_branch(const std::string& file, const FamilyBranch& branch);
/// Throws FormatError on a wrong schema line or malformed content.
FamilyBranch read_branch(std::istream& in);
FamilyBranch read_branch(const std::string& file);

/// One line of a run directory's index file ("choreo-index 1").
struct IndexEntry {
  std::string file;
  std::string id;
  int n = 0;
  double mu = 0.0;
  FamilyType family = FamilyType::Planar;
  int wave_number = 0;
  int orbits = 0;
  double period_min = 0.0;
  double period_max = 0.0;
  std::string termination;
};

IndexEntry index_entry(const std::string& file, const FamilyBranch& branch);
std::vector<IndexEntry> read_index(const std::string& file);
/// Adds or replaces (by file name) the entry in the directory's index.
void update_index(const std::string& directory, const IndexEntry& entry);

}  // namespace choreo
