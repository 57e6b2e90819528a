#include "bbci/core/checkpoint.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "bbci/core/digest.hpp"

namespace bbci {

namespace {

bool is_token(const std::string& s) {
  if (s.empty() || s == "digest") return false;
  for (char c : s)
    if (std::isspace(static_cast<unsigned char>(c))) return false;
  return true;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out;
  char buf[32];
  for (const auto& a : ckpt.arrays) {
    if (!is_token(a.name) || !is_token(a.kind))
      throw std::invalid_argument("checkpoint: array name/kind must be a single token: '" +
                                  a.name + "' / '" + a.kind + "'");
    if (!a.value.all_finite())
      throw std::invalid_argument("checkpoint: array '" + a.name + "' has non-finite values");
    out += a.name;
    out += ' ';
    out += a.kind;
    out += ' ';
    out += std::to_string(a.value.rows());
    out += ' ';
    out += std::to_string(a.value.cols());
    out += '\n';
    for (std::size_t i = 0; i < a.value.rows(); ++i) {
      for (std::size_t j = 0; j < a.value.cols(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", a.value(i, j));
        if (j) out += ' ';
        out += buf;
      }
      out += '\n';
    }
  }
  out += "digest fnv1a64 ";
  out += fnv1a64_hex(out.substr(0, out.size() - 15));
  out += '\n';
  return out;
}

std::string checkpoint_digest(const Checkpoint& ckpt) {
  std::string text = serialize_checkpoint(ckpt);
  // digest line is `digest fnv1a64 <16 hex>\n`
  return text.substr(text.size() - 17, 16);
}

Checkpoint parse_checkpoint(const std::string& text) {
  const std::string marker = "digest fnv1a64 ";
  std::size_t pos = text.rfind(marker);
  if (pos == std::string::npos)
    throw std::runtime_error("checkpoint: missing digest line");
  const std::string body = text.substr(0, pos);
  std::string stated = text.substr(pos + marker.size());
  while (!stated.empty() && (stated.back() == '\n' || stated.back() == '\r')) stated.pop_back();
  const std::string actual = fnv1a64_hex(body);
  if (stated != actual)
    throw std::runtime_error("checkpoint: digest mismatch (file says " + stated +
                             ", content is " + actual + ")");

  Checkpoint ckpt;
  std::istringstream in(body);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream hdr(line);
    NamedArray a;
    std::size_t rows = 0, cols = 0;
    if (!(hdr >> a.name >> a.kind >> rows >> cols))
      throw std::runtime_error("checkpoint: malformed header line '" + line + "'");
    std::string extra;
    if (hdr >> extra)
      throw std::runtime_error("checkpoint: malformed header line '" + line + "'");
    a.value = Matrix(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
      if (!std::getline(in, line))
        throw std::runtime_error("checkpoint: truncated array '" + a.name + "'");
      const char* p = line.c_str();
      char* end = nullptr;
      for (std::size_t j = 0; j < cols; ++j) {
        double v = std::strtod(p, &end);
        if (end == p)
          throw std::runtime_error("checkpoint: bad value in array '" + a.name + "' row " +
                                   std::to_string(i));
        a.value(i, j) = v;
        p = end;
      }
    }
    ckpt.arrays.push_back(std::move(a));
  }
  return ckpt;
}

void save_checkpoint_file(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out << serialize_checkpoint(ckpt);
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace bbci
