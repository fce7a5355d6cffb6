#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "loradp/error.hpp"
#include "loradp/matrix.hpp"

namespace loradp {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                        s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline bool parse_index(std::string_view s, Index& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size() && out >= 0;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

[[noreturn]] inline void parse_fail(const std::string& path, std::size_t line,
                                    const std::string& what) {
  fail(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace detail

// CSV triplet format: `row,col[,value]` per line, 0-based indices, values in
// {0,1}; `#` starts a comment. A `# dims: m n` comment doubles as a dimension
// hint so save/load round-trips keep the shape.
inline PreferenceMatrix load_csv_triplets(
    const std::string& path, std::optional<Index> m_hint = std::nullopt,
    std::optional<Index> n_hint = std::nullopt) {
  std::ifstream in(path);
  require(in.good(), "cannot open " + path);
  std::vector<Entry> entries;
  Index max_r = -1, max_c = -1;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = detail::trim(line);
    if (sv.empty()) continue;
    if (sv.front() == '#') {
      std::string_view rest = detail::trim(sv.substr(1));
      if (rest.rfind("dims:", 0) == 0) {
        std::istringstream ds{std::string(rest.substr(5))};
        Index dm = 0, dn = 0;
        if (ds >> dm >> dn) {
          if (!m_hint) m_hint = dm;
          if (!n_hint) n_hint = dn;
        }
      }
      continue;
    }
    const auto fields = detail::split(sv, ',');
    if (fields.size() < 2 || fields.size() > 3)
      detail::parse_fail(path, lineno, "expected `row,col[,value]`");
    Index r = 0, c = 0;
    if (!detail::parse_index(fields[0], r) ||
        !detail::parse_index(fields[1], c))
      detail::parse_fail(path, lineno, "indices must be non-negative integers");
    Index value = 1;
    if (fields.size() == 3) {
      if (!detail::parse_index(fields[2], value) || value > 1)
        detail::parse_fail(path, lineno, "value must be 0 or 1");
    }
    if (m_hint && r >= *m_hint)
      detail::parse_fail(path, lineno, "row index exceeds m hint");
    if (n_hint && c >= *n_hint)
      detail::parse_fail(path, lineno, "col index exceeds n hint");
    if (value == 0) continue;
    entries.emplace_back(r, c);
    max_r = std::max(max_r, r);
    max_c = std::max(max_c, c);
  }
  const Index m = m_hint ? *m_hint : max_r + 1;
  const Index n = n_hint ? *n_hint : max_c + 1;
  require(m >= 1 && n >= 1,
          path + ": empty triplet file needs explicit dimension hints");
  return PreferenceMatrix(m, n, std::move(entries));
}

inline void save_csv_triplets(const PreferenceMatrix& t,
                              const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot write " + path);
  out << "# dims: " << t.m() << ' ' << t.n() << '\n';
  for (const auto& [r, c] : t.entries()) out << r << ',' << c << '\n';
  require(out.good(), "write failed: " + path);
}

struct MovielensData {
  PreferenceMatrix matrix;
  std::vector<Index> user_ids;   // row -> original userId
  std::vector<Index> movie_ids;  // col -> original movieId
};

// ratings.csv with header `userId,movieId,rating,timestamp`. Users and movies
// are remapped to dense 0-based indices in first-appearance order; an entry is
// set iff rating >= min_rating.
inline MovielensData load_movielens(const std::string& path,
                                    double min_rating = 0.5) {
  std::ifstream in(path);
  require(in.good(), "cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  require(static_cast<bool>(std::getline(in, line)), path + ": empty file");
  ++lineno;
  if (std::string(detail::trim(line)) != "userId,movieId,rating,timestamp")
    detail::parse_fail(path, lineno, "unknown header");
  std::unordered_map<Index, Index> user_map, movie_map;
  std::vector<Index> user_ids, movie_ids;
  std::vector<Entry> entries;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = detail::trim(line);
    if (sv.empty()) continue;
    const auto fields = detail::split(sv, ',');
    Index user = 0, movie = 0;
    double rating = 0.0;
    if (fields.size() < 3 || !detail::parse_index(fields[0], user) ||
        !detail::parse_index(fields[1], movie) ||
        !detail::parse_double(fields[2], rating))
      detail::parse_fail(path, lineno, "malformed rating row");
    auto [uit, unew] =
        user_map.try_emplace(user, static_cast<Index>(user_ids.size()));
    if (unew) user_ids.push_back(user);
    auto [mit, mnew] =
        movie_map.try_emplace(movie, static_cast<Index>(movie_ids.size()));
    if (mnew) movie_ids.push_back(movie);
    if (rating >= min_rating) entries.emplace_back(uit->second, mit->second);
  }
  require(!user_ids.empty() && !movie_ids.empty(), path + ": no ratings");
  PreferenceMatrix matrix(static_cast<Index>(user_ids.size()),
                          static_cast<Index>(movie_ids.size()),
                          std::move(entries));
  return MovielensData{std::move(matrix), std::move(user_ids),
                       std::move(movie_ids)};
}

// Netpbm PGM (P2 ascii / P5 binary). Pixel >= threshold*maxval maps to 1.
inline PreferenceMatrix load_pgm_image(const std::string& path,
                                       double threshold = 0.5) {
  require(threshold > 0.0 && threshold < 1.0,
          "load_pgm_image: threshold must lie in (0,1)");
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open " + path);

  auto next_token = [&]() -> std::string {
    std::string tok;
    char ch;
    while (in.get(ch)) {
      if (ch == '#') {
        while (in.get(ch) && ch != '\n') {
        }
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(ch))) {
        if (!tok.empty()) return tok;
        continue;
      }
      tok.push_back(ch);
    }
    return tok;
  };

  const std::string magic = next_token();
  require(magic == "P2" || magic == "P5", path + ": not a PGM file");
  const std::string ws = next_token(), hs = next_token(), ms = next_token();
  Index width = 0, height = 0, maxval = 0;
  require(detail::parse_index(ws, width) && detail::parse_index(hs, height) &&
              detail::parse_index(ms, maxval) && width > 0 && height > 0 &&
              maxval > 0 && maxval < 65536,
          path + ": corrupt PGM header");
  const double cut = threshold * static_cast<double>(maxval);
  std::vector<Entry> entries;
  if (magic == "P2") {
    for (Index r = 0; r < height; ++r)
      for (Index c = 0; c < width; ++c) {
        const std::string tok = next_token();
        Index v = 0;
        require(!tok.empty() && detail::parse_index(tok, v) && v <= maxval,
                path + ": short or corrupt P2 payload");
        if (static_cast<double>(v) >= cut) entries.emplace_back(r, c);
      }
  } else {
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<char> buf(static_cast<std::size_t>(width * height * bytes));
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    require(in.gcount() == static_cast<std::streamsize>(buf.size()),
            path + ": short P5 payload");
    for (Index r = 0; r < height; ++r)
      for (Index c = 0; c < width; ++c) {
        const std::size_t off =
            static_cast<std::size_t>((r * width + c) * bytes);
        const unsigned hi = static_cast<unsigned char>(buf[off]);
        const unsigned v =
            bytes == 2
                ? (hi << 8) + static_cast<unsigned char>(buf[off + 1])
                : hi;
        if (static_cast<double>(v) >= cut) entries.emplace_back(r, c);
      }
  }
  return PreferenceMatrix(height, width, std::move(entries));
}

}  // namespace loradp
