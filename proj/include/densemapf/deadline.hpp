#pragma once

#include <chrono>
#include <limits>
#include <stdexcept>

namespace densemapf {

class Timeout : public std::runtime_error {
 public:
  Timeout() : std::runtime_error("time budget exhausted") {}
};

/// Wall-clock budget checked cooperatively by the solvers.
class Deadline {
 public:
  using Clock = std::chrono::steady_clock;

  Deadline() : end_(Clock::time_point::max()) {}
  explicit Deadline(double seconds)
      : end_(seconds >= 1e9 ? Clock::time_point::max()
                            : Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                                 std::chrono::duration<double>(seconds))) {}

  static Deadline unlimited() { return Deadline(); }

  bool expired() const { return end_ != Clock::time_point::max() && Clock::now() >= end_; }
  void check() const {
    if (expired()) throw Timeout();
  }

  double remaining_seconds() const {
    if (end_ == Clock::time_point::max()) return std::numeric_limits<double>::infinity();
    return std::chrono::duration<double>(end_ - Clock::now()).count();
  }

 private:
  Clock::time_point end_;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace densemapf
