#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace nclbf {

using StateVector = Eigen::VectorXd;
using InputVector = Eigen::VectorXd;
using Gradient = Eigen::RowVectorXd;

// Error hierarchy. Everything thrown by the library derives from Error so
// the CLI can map failures onto exit codes in one place.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class SafetyViolationError : public Error {
 public:
  using Error::Error;
};

class InternalStateError : public Error {
 public:
  using Error::Error;
};

class NumericBlowupError : public Error {
 public:
  using Error::Error;
};

/// Which part of the state space a point occupies. `obstacle` is a 0-based
/// index and is meaningful for every kind except R2. Text codes are 1-based.
struct RegionLabel {
  enum class Kind { R1, R2, R3, Unsafe };

  Kind kind = Kind::R2;
  std::size_t obstacle = 0;

  static RegionLabel r1(std::size_t i) { return {Kind::R1, i}; }
  static RegionLabel r2() { return {Kind::R2, 0}; }
  static RegionLabel r3(std::size_t i) { return {Kind::R3, i}; }
  static RegionLabel unsafe(std::size_t i) { return {Kind::Unsafe, i}; }

  bool is(Kind k) const { return kind == k; }

  friend bool operator==(const RegionLabel& a, const RegionLabel& b) {
    if (a.kind != b.kind) return false;
    return a.kind == Kind::R2 || a.obstacle == b.obstacle;
  }
};

inline std::string to_code(const RegionLabel& r) {
  const std::string idx = std::to_string(r.obstacle + 1);
  switch (r.kind) {
    case RegionLabel::Kind::R1: return "R1:" + idx;
    case RegionLabel::Kind::R2: return "R2";
    case RegionLabel::Kind::R3: return "R3:" + idx;
    case RegionLabel::Kind::Unsafe: return "U:" + idx;
  }
  return "?";
}

inline RegionLabel region_from_code(const std::string& code) {
  if (code == "R2") return RegionLabel::r2();
  const auto colon = code.find(':');
  if (colon == std::string::npos) throw ParseError("bad region code '" + code + "'");
  const std::string head = code.substr(0, colon);
  std::size_t idx = 0;
  try {
    idx = std::stoul(code.substr(colon + 1));
  } catch (const std::exception&) {
    throw ParseError("bad region index in '" + code + "'");
  }
  if (idx == 0) throw ParseError("region index is 1-based in '" + code + "'");
  if (head == "R1") return RegionLabel::r1(idx - 1);
  if (head == "R3") return RegionLabel::r3(idx - 1);
  if (head == "U") return RegionLabel::unsafe(idx - 1);
  throw ParseError("bad region code '" + code + "'");
}

}  // namespace nclbf
