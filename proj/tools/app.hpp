#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

namespace coneflow::app {

enum ExitCode { kOk = 0, kValidation = 2, kNumerical = 3 };

/// Sectioned key = value file. Values may be quoted; `#` and `;` start
/// comment lines. Unknown sections or keys are rejected by validate().
class Config {
 public:
  static Config load(const std::filesystem::path& path);
  static Config parse(std::istream& in, const std::string& name);

  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key, double fallback) const;
  int integer(const std::string& key, int fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const;
  bool has(const std::string& key) const;

  std::string pipeline() const { return text("pipeline", ""); }
  std::uint64_t seed() const;
  std::filesystem::path output_dir() const;
  const std::string& name() const { return name_; }

 private:
  void validate() const;
  std::string raw(const std::string& key) const;

  boost::property_tree::ptree tree_;
  std::string name_;
};

std::filesystem::path resolve_output(const std::filesystem::path& configured);

/// Runs `body` and maps library errors to exit codes, printing them to err.
int guarded(std::ostream& err, const std::function<int()>& body);

int run_experiment(const Config& cfg, const std::filesystem::path& out, std::ostream& log);

struct SlagOptions {
  int n = 2;
  std::vector<double> c{0.0};
  double c_prime = 1.0;
  std::size_t count = 1000;
  std::uint64_t seed = 42;
  std::string kind = "parity";
};
int run_slag(const SlagOptions& opt, const std::filesystem::path& out, std::ostream& log);

struct SpectrumOptions {
  std::string sigma = "circle:L=6.283185307179586:nodes=512";
  int n = 2;
  double tolerance = 0.0;  // 0 picks the mesh default
  int window = 24;
  bool lumped = false;
};
int run_spectrum(const SpectrumOptions& opt, const std::filesystem::path& out, std::ostream& log);

const std::vector<std::string>& verify_case_names();
int run_verify(const std::string& name, double lambda, const std::filesystem::path& out,
               std::ostream& log);

}  // namespace coneflow::app
