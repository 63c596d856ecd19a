#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mrloc {

// Every failure raised by the library derives from Error; `kind()` is the
// stable machine-readable tag the CLI puts into its error record.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class GeometryError : public Error {
 public:
  explicit GeometryError(const std::string& msg) : Error("geometry", msg) {}
};

class SignalError : public Error {
 public:
  explicit SignalError(const std::string& msg) : Error("signal", msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error("io", msg) {}
};

class BandMismatchError : public Error {
 public:
  explicit BandMismatchError(const std::string& msg) : Error("band_mismatch", msg) {}
};

class DegenerateBinError : public Error {
 public:
  DegenerateBinError(const std::string& msg, std::vector<int> bins)
      : Error("degenerate_bin", msg), bins_(std::move(bins)) {}

  const std::vector<int>& bins() const noexcept { return bins_; }

 private:
  std::vector<int> bins_;
};

class GraphError : public Error {
 public:
  explicit GraphError(const std::string& msg) : Error("graph", msg) {}
};

class FitError : public Error {
 public:
  FitError(const std::string& msg, double condition_estimate)
      : Error("fit", msg), condition_(condition_estimate) {}

  double condition_estimate() const noexcept { return condition_; }

 private:
  double condition_;
};

class ExtensionError : public Error {
 public:
  ExtensionError(const std::string& msg, int component)
      : Error("extension", msg), component_(component) {}

  // Index of the offending diffusion component, or -1 for a vanishing
  // affinity vector.
  int component() const noexcept { return component_; }

 private:
  int component_;
};

class NoPeakError : public Error {
 public:
  NoPeakError(const std::string& msg, double peak_to_median)
      : Error("no_peak", msg), ratio_(peak_to_median) {}

  double peak_to_median() const noexcept { return ratio_; }

 private:
  double ratio_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error("config", msg) {}
};

}  // namespace mrloc
