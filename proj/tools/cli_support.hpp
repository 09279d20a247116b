#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

namespace liftperc::cli {

using nlohmann::ordered_json;

// "a:b:step" (inclusive), "x,y,z" or a single value.
std::vector<double> parse_grid(const std::string& text, const char* name);
std::vector<int> parse_int_list(const std::string& text, const char* name);
// "3/8", "0.375" or "1" as an exact rational.
boost::multiprecision::cpp_rational parse_rational(const std::string& text, const char* name);

// Shortest text that reads back as the same double.
std::string num(double x);

// Independent seed per grid point, keyed by the values themselves (not the
// grid position), so a point gives the same result in any grid.
std::uint64_t point_seed(std::uint64_t seed, std::string_view tag, std::initializer_list<double> coords);

// git blob id: sha1("blob <size>\0" + bytes), lowercase hex.
std::string git_blob_sha1(std::string_view bytes);

// Splices a JSON config file into argv. Keys become "--key value" tokens
// placed before the user's own flags, so flags given on the command line win
// (options take their last value). "command" names the subcommand if argv
// does not. The --config flag itself is removed.
std::vector<std::string> expand_config(int argc, char** argv);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);
  CsvWriter& cell(const std::string& s);
  CsvWriter& cell(double x) { return cell(num(x)); }
  CsvWriter& cell(std::uint64_t x) { return cell(std::to_string(x)); }
  CsvWriter& cell(int x) { return cell(std::to_string(x)); }
  void end_row();

 private:
  std::ofstream out_;
  std::size_t columns_;
  std::vector<std::string> row_;
};

void write_json(const std::filesystem::path& path, const ordered_json& j);

}  // namespace liftperc::cli
