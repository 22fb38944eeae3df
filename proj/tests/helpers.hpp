// Shared fixtures for the test suites.
#ifndef WYCK_TESTS_HELPERS_HPP
#define WYCK_TESTS_HELPERS_HPP

#include <string>

#include "wyck/symcore.hpp"

inline std::string source_path(const std::string& rel) {
  return std::string(WYCK_SOURCE_DIR) + "/" + rel;
}

inline const wyck::SpaceGroupTable& test_table() {
  static wyck::SpaceGroupTable t =
      wyck::SpaceGroupTable::load(source_path("data/spacegroups.txt"));
  return t;
}

inline std::string fixture(const std::string& name) {
  return source_path("tests/fixtures/" + name);
}

#endif
