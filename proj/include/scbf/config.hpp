#pragma once

// Flat `section.key = value` configuration files. Lines starting with '#' are comments.
// Every read marks the key as used so that misspelled keys can be reported.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "scbf/dynamics.hpp"

namespace scbf {

class Config {
 public:
  static Config parse(std::istream& in, const std::string& origin = "<config>");
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  /// `key=value` as given on a command line.
  void apply_override(const std::string& assignment);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Keys present in the file that nothing has read.
  std::vector<std::string> unused() const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  const std::string* find(const std::string& key) const;

  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> used_;
};

/// Builds the simulation setup from the operator.*, galerkin.*, noise.*, forcing.*,
/// initial.* and dynamics.* keys. Forcing and initial modes are given by their H norm.
/// noise.type = power with noise.relaxed = true admits spectra outside the window.
SimConfig sim_config_from(const Config& c, std::uint64_t seed = 0);

/// A single-mode field (and its conjugate) with H norm `norm` and zero phase.
SpectralField single_mode(int truncation, WaveVector k, double norm);

}  // namespace scbf
