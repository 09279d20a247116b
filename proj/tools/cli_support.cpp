#include "cli_support.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <sstream>

#include <openssl/evp.h>

#include "liftperc/errors.hpp"
#include "liftperc/rng.hpp"

namespace liftperc::cli {

namespace {

double parse_double(const std::string& s, const char* name) {
  double v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ConfigError(std::string("--") + name + ": not a number: '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  return parts;
}

}  // namespace

std::vector<double> parse_grid(const std::string& text, const char* name) {
  if (text.empty()) throw ConfigError(std::string("--") + name + " is required");
  if (text.find(':') != std::string::npos) {
    auto parts = split(text, ':');
    if (parts.size() != 3) throw ConfigError(std::string("--") + name + ": range must be a:b:step");
    const double a = parse_double(parts[0], name), b = parse_double(parts[1], name),
                 step = parse_double(parts[2], name);
    if (!(step > 0) || b < a) throw ConfigError(std::string("--") + name + ": need step > 0 and a <= b");
    const auto n = static_cast<long>(std::floor((b - a) / step + 1e-9)) + 1;
    if (n > 100000) throw ConfigError(std::string("--") + name + ": grid too large");
    std::vector<double> out;
    for (long i = 0; i < n; ++i) {
      // snap 0.30000000000000004 back to 0.3
      const double v = a + i * step;
      out.push_back(std::round(v * 1e12) / 1e12);
    }
    return out;
  }
  std::vector<double> out;
  for (const auto& part : split(text, ',')) out.push_back(parse_double(part, name));
  return out;
}

std::vector<int> parse_int_list(const std::string& text, const char* name) {
  std::vector<int> out;
  for (const auto& part : split(text, ',')) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || ptr != part.data() + part.size())
      throw ConfigError(std::string("--") + name + ": not an integer: '" + part + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(std::string("--") + name + " is empty");
  return out;
}

boost::multiprecision::cpp_rational parse_rational(const std::string& text, const char* name) {
  using boost::multiprecision::cpp_int;
  using boost::multiprecision::cpp_rational;
  auto digits = [&](const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
      throw ConfigError(std::string("--") + name + ": not a rational: '" + text + "'");
    return cpp_int(s);
  };
  if (auto slash = text.find('/'); slash != std::string::npos) {
    cpp_int den = digits(text.substr(slash + 1));
    if (den == 0) throw ConfigError(std::string("--") + name + ": zero denominator");
    return cpp_rational(digits(text.substr(0, slash)), den);
  }
  if (auto dot = text.find('.'); dot != std::string::npos) {
    const std::string frac = text.substr(dot + 1);
    cpp_int scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    const std::string whole = dot == 0 ? "0" : text.substr(0, dot);
    return cpp_rational(digits(whole) * scale + (frac.empty() ? cpp_int(0) : digits(frac)), scale);
  }
  return cpp_rational(digits(text));
}

std::string num(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::uint64_t point_seed(std::uint64_t seed, std::string_view tag, std::initializer_list<double> coords) {
  Stream s = make_stream(seed, tag);
  for (double c : coords) s = s.split(std::bit_cast<std::uint64_t>(c + 0.0));
  return s.next();
}

std::string git_blob_sha1(std::string_view bytes) {
  std::string data = "blob " + std::to_string(bytes.size());
  data.push_back('\0');
  data.append(bytes);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha1(), nullptr) != 1)
    throw std::runtime_error("sha1 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ConfigError("--config needs a path");
      config_path = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + i);
      break;
    }
  }
  std::vector<std::string> out{argv[0]};
  if (config_path.empty()) {
    out.insert(out.end(), args.begin(), args.end());
    return out;
  }
  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot read config file " + config_path);
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + config_path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");

  std::string command;
  if (!args.empty() && args[0].rfind("-", 0) != 0) {
    command = args[0];
    args.erase(args.begin());
  } else if (j.contains("command")) {
    command = j["command"].get<std::string>();
  }
  if (!command.empty()) out.push_back(command);
  for (const auto& [key, value] : j.items()) {
    if (key == "command") continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) out.push_back("--" + key);
      continue;
    }
    out.push_back("--" + key);
    if (value.is_string()) {
      out.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      out.push_back(value.dump());
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) {
        if (!joined.empty()) joined += ',';
        joined += v.is_string() ? v.get<std::string>() : v.dump();
      }
      out.push_back(joined);
    } else {
      throw ConfigError("config key '" + key + "' has an unsupported type");
    }
  }
  out.insert(out.end(), args.begin(), args.end());
  return out;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
    : out_(path, std::ios::binary), columns_(header.size()) {
  if (!out_) throw std::runtime_error("cannot write " + path.string());
  row_ = std::move(header);
  end_row();
}

CsvWriter& CsvWriter::cell(const std::string& s) {
  row_.push_back(s);
  return *this;
}

void CsvWriter::end_row() {
  if (row_.size() != columns_) throw std::logic_error("csv row has the wrong number of cells");
  for (std::size_t i = 0; i < row_.size(); ++i) out_ << (i ? "," : "") << row_[i];
  out_ << '\n';
  row_.clear();
}

void write_json(const std::filesystem::path& path, const ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace liftperc::cli
