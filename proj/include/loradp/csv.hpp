#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "loradp/error.hpp"

namespace loradp {

// Shortest decimal form that round-trips back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  require(res.ec == std::errc(), "format_double: conversion failed");
  return std::string(buf, res.ptr);
}

inline std::string join_csv(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (c) line += ',';
    line += cells[c];
  }
  return line;
}

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write " + path);
  out << content;
  require(out.good(), "write failed: " + path);
}

// `key=value` lines, key-sorted, one per entry; used to echo the effective
// configuration of every CLI run.
inline std::string config_echo(const std::map<std::string, std::string>& kv) {
  std::string out;
  for (const auto& [k, v] : kv) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

}  // namespace loradp
