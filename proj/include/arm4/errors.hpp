#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace arm4 {

// Base of every error raised by the library. Callers that only need a
// diagnostic can catch this; the CLI maps the concrete types to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Inverse kinematics: the law-of-cosines argument left [-1, 1].
class Unreachable : public Error {
 public:
  using Error::Error;
};

// Inverse kinematics: target on the yaw axis with a radial wrist offset.
class SingularYaw : public Error {
 public:
  using Error::Error;
};

// Some joint inertia fell below the divide threshold.
class DegenerateInertia : public Error {
 public:
  DegenerateInertia(int joint, double inertia)
      : Error("degenerate inertia at joint " + std::to_string(joint + 1) +
              " (I = " + std::to_string(inertia) + ")"),
        joint_(joint),
        inertia_(inertia) {}

  int joint() const { return joint_; }
  double inertia() const { return inertia_; }

 private:
  int joint_;
  double inertia_;
};

class NotStabilizable : public Error {
 public:
  using Error::Error;
};

class IllConditioned : public Error {
 public:
  using Error::Error;
};

// A grid node (or refinement sample) whose LQR synthesis failed.
class NodeFailure : public Error {
 public:
  NodeFailure(std::size_t node, const std::string& cause)
      : Error("node " + std::to_string(node) + ": " + cause), node_(node) {}

  std::size_t node() const { return node_; }

 private:
  std::size_t node_;
};

class OutOfBounds : public Error {
 public:
  using Error::Error;
};

class BadMagic : public Error {
 public:
  using Error::Error;
};

class VersionMismatch : public Error {
 public:
  using Error::Error;
};

class DigestMismatch : public Error {
 public:
  using Error::Error;
};

class TruncatedData : public Error {
 public:
  using Error::Error;
};

class EmptyBenchmark : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace arm4
