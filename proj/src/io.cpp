#include "layersep/io.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace layersep::io {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (!in.good() && !in.eof()) throw IoError("failed reading '" + path + "'");
  return std::move(buf).str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

[[noreturn]] void pgm_error(const std::string& path, std::size_t offset,
                            const std::string& what) {
  throw FormatError(path + ": " + what + " at byte " + std::to_string(offset));
}

// Whitespace/comment-skipping integer token reader for the PGM header.
struct PgmHeaderCursor {
  const std::string& bytes;
  const std::string& path;
  std::size_t pos = 0;

  void skip_space_and_comments() {
    while (pos < bytes.size()) {
      const unsigned char c = static_cast<unsigned char>(bytes[pos]);
      if (std::isspace(c)) {
        ++pos;
      } else if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  }

  long next_int(const char* name) {
    skip_space_and_comments();
    const std::size_t start = pos;
    while (pos < bytes.size() &&
           std::isdigit(static_cast<unsigned char>(bytes[pos])))
      ++pos;
    if (pos == start)
      pgm_error(path, start, std::string("expected ") + name + " in header");
    long value = 0;
    std::from_chars(bytes.data() + start, bytes.data() + pos, value);
    return value;
  }
};

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Shortest decimal that still parses back to the same double; for files a
// person edits.
std::string format_double_short(double v) {
  char buf[40];
  for (int digits = 1; digits <= 17; ++digits) {
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

double parse_double_strict(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(value))
    throw FormatError(context + ": cannot parse '" + t + "' as a number");
  return value;
}

int parse_int_strict(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size())
    throw FormatError(context + ": cannot parse '" + t + "' as an integer");
  return value;
}

bool parse_bool_strict(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  if (t == "true") return true;
  if (t == "false") return false;
  throw FormatError(context + ": expected true or false, got '" + t + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::size_t end = comma == std::string::npos ? text.size() : comma;
    items.push_back(trim(std::string_view(text).substr(start, end - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return items;
}

}  // namespace

Image read_pgm(const std::string& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
    pgm_error(path, 0, "missing P5 magic");
  PgmHeaderCursor cur{bytes, path, 2};
  const long w = cur.next_int("width");
  const long h = cur.next_int("height");
  const long maxval = cur.next_int("maxval");
  if (w < 1 || h < 1) pgm_error(path, cur.pos, "non-positive dimensions");
  if (maxval != 255 && maxval != 65535)
    pgm_error(path, cur.pos, "unsupported maxval " + std::to_string(maxval));
  if (cur.pos >= bytes.size() ||
      !std::isspace(static_cast<unsigned char>(bytes[cur.pos])))
    pgm_error(path, cur.pos, "expected single whitespace before payload");
  ++cur.pos;

  const std::size_t sample_bytes = maxval == 255 ? 1 : 2;
  const std::size_t expected =
      static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * sample_bytes;
  if (bytes.size() - cur.pos < expected)
    pgm_error(path, bytes.size(), "truncated payload, need " +
                                      std::to_string(expected) + " bytes");
  if (bytes.size() - cur.pos > expected)
    pgm_error(path, cur.pos + expected, "trailing bytes after payload");

  Image img(h, w);
  std::size_t at = cur.pos;
  for (long i = 0; i < h; ++i)
    for (long j = 0; j < w; ++j) {
      unsigned value;
      if (sample_bytes == 1) {
        value = static_cast<unsigned char>(bytes[at]);
        at += 1;
      } else {
        value = (static_cast<unsigned>(static_cast<unsigned char>(bytes[at])) << 8) |
                static_cast<unsigned>(static_cast<unsigned char>(bytes[at + 1]));
        at += 2;
      }
      img(i, j) = static_cast<double>(value) / static_cast<double>(maxval);
    }
  return img;
}

void write_pgm(const std::string& path, const Image& img, int maxval) {
  if (maxval != 255 && maxval != 65535)
    throw ArgumentError("write_pgm: maxval must be 255 or 65535");
  if (img.rows() < 1 || img.cols() < 1)
    throw ArgumentError("write_pgm: empty image");
  if ((img < 0.0).any() || (img > 1.0).any() || !img.isFinite().all())
    throw ArgumentError("write_pgm: intensities must lie in [0,1]");

  std::string bytes;
  bytes += "P5\n" + std::to_string(img.cols()) + " " + std::to_string(img.rows()) +
           "\n" + std::to_string(maxval) + "\n";
  for (Eigen::Index i = 0; i < img.rows(); ++i)
    for (Eigen::Index j = 0; j < img.cols(); ++j) {
      const long v = std::lround(img(i, j) * maxval);
      if (maxval == 255) {
        bytes += static_cast<char>(static_cast<unsigned char>(v));
      } else {
        bytes += static_cast<char>(static_cast<unsigned char>(v >> 8));
        bytes += static_cast<char>(static_cast<unsigned char>(v & 0xff));
      }
    }
  write_file(path, bytes);
}

DualPair read_gradient_file(const std::string& path) {
  const std::string bytes = read_file(path);
  const std::string magic = "ESRAG32\n";
  if (bytes.substr(0, magic.size()) != magic)
    throw FormatError(path + ": bad magic at byte 0, expected ESRAG32");
  const std::size_t dim_end = bytes.find('\n', magic.size());
  if (dim_end == std::string::npos)
    throw FormatError(path + ": missing dimension line at byte " +
                      std::to_string(magic.size()));
  const std::string dims = bytes.substr(magic.size(), dim_end - magic.size());
  std::istringstream ds(dims);
  long h = 0, w = 0;
  std::string extra;
  if (!(ds >> h >> w) || (ds >> extra) || h < 1 || w < 1)
    throw FormatError(path + ": bad dimension line '" + dims + "' at byte " +
                      std::to_string(magic.size()));

  const std::size_t p_count = static_cast<std::size_t>(h - 1) * w;
  const std::size_t q_count = static_cast<std::size_t>(h) * (w - 1);
  const std::size_t payload = (p_count + q_count) * 4;
  std::size_t at = dim_end + 1;
  if (bytes.size() - at != payload)
    throw FormatError(path + ": payload is " + std::to_string(bytes.size() - at) +
                      " bytes at byte " + std::to_string(at) + ", expected " +
                      std::to_string(payload));

  auto next_float = [&]() {
    std::uint32_t u = static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at])) |
                      static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + 1])) << 8 |
                      static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + 2])) << 16 |
                      static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + 3])) << 24;
    at += 4;
    return static_cast<double>(std::bit_cast<float>(u));
  };

  DualPair pq = DualPair::zero(h, w);
  for (Eigen::Index i = 0; i < pq.p.rows(); ++i)
    for (Eigen::Index j = 0; j < pq.p.cols(); ++j) pq.p(i, j) = next_float();
  for (Eigen::Index i = 0; i < pq.q.rows(); ++i)
    for (Eigen::Index j = 0; j < pq.q.cols(); ++j) pq.q(i, j) = next_float();
  return pq;
}

void write_gradient_file(const std::string& path, const DualPair& pq) {
  check_pair(pq, "write_gradient_file");
  std::string bytes = "ESRAG32\n" + std::to_string(pq.height()) + " " +
                      std::to_string(pq.width()) + "\n";
  auto put_float = [&](double v) {
    const std::uint32_t u = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    bytes += static_cast<char>(u & 0xff);
    bytes += static_cast<char>((u >> 8) & 0xff);
    bytes += static_cast<char>((u >> 16) & 0xff);
    bytes += static_cast<char>((u >> 24) & 0xff);
  };
  for (Eigen::Index i = 0; i < pq.p.rows(); ++i)
    for (Eigen::Index j = 0; j < pq.p.cols(); ++j) put_float(pq.p(i, j));
  for (Eigen::Index i = 0; i < pq.q.rows(); ++i)
    for (Eigen::Index j = 0; j < pq.q.cols(); ++j) put_float(pq.q(i, j));
  write_file(path, bytes);
}

void write_trace_csv(std::ostream& out, const SolveTrace& trace) {
  out << "iter,objective,smooth,tv,elapsed_ms,fgp_iters\n";
  for (const TraceRow& row : trace.rows) {
    out << row.iter << ',' << format_double(row.total) << ','
        << format_double(row.smooth) << ',' << format_double(row.tv) << ','
        << format_double(row.elapsed_ms) << ',';
    for (std::size_t i = 0; i < row.fgp_iters.size(); ++i) {
      if (i) out << ';';
      out << row.fgp_iters[i];
    }
    out << '\n';
  }
}

void write_trace_csv(const std::string& path, const SolveTrace& trace) {
  std::ostringstream buf;
  write_trace_csv(buf, trace);
  write_file(path, std::move(buf).str());
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> values;
  for (const std::string& item : split_list(text))
    values.push_back(parse_double_strict(item, "list item '" + item + "'"));
  return values;
}

RunConfig parse_run_config(std::string_view text) {
  RunConfig cfg;
  std::map<std::string, bool> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    const std::size_t end = eol == std::string_view::npos ? text.size() : eol;
    std::string line(text.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    const std::string ctx = "line " + std::to_string(line_no);

    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) {
      if (eol == std::string_view::npos) break;
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(ctx + ": expected 'key = value', got '" + trim(line) + "'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (seen[key]) throw FormatError(ctx + ": duplicate key '" + key + "'");
    seen[key] = true;

    {
      if (key == "lambda") {
        cfg.lambda = parse_double_strict(value, ctx);
        if (cfg.lambda < 0.0) throw FormatError(ctx + ": lambda must be nonnegative");
      } else if (key == "coeffs") {
        cfg.coeffs = parse_double_list(value);
        if (cfg.coeffs.empty()) throw FormatError(ctx + ": coeffs is empty");
      } else if (key == "total_iters") {
        cfg.total_iters = parse_int_strict(value, ctx);
        if (cfg.total_iters < 1) throw FormatError(ctx + ": total_iters must be >= 1");
      } else if (key == "fgp_iters") {
        cfg.fgp_iters = parse_int_strict(value, ctx);
        if (cfg.fgp_iters < 1) throw FormatError(ctx + ": fgp_iters must be >= 1");
      } else if (key == "fgp_tol") {
        cfg.fgp_tol = parse_double_strict(value, ctx);
        if (cfg.fgp_tol < 0.0) throw FormatError(ctx + ": fgp_tol must be >= 0");
      } else if (key == "step_multiplier") {
        cfg.step_multiplier = parse_double_strict(value, ctx);
        if (!(cfg.step_multiplier >= 1.0))
          throw FormatError(ctx + ": step_multiplier must be >= 1");
      } else if (key == "warm_start") {
        cfg.warm_start = parse_bool_strict(value, ctx);
      } else if (key == "workers") {
        cfg.workers = parse_int_strict(value, ctx);
        if (cfg.workers < 0) throw FormatError(ctx + ": workers must be >= 0");
      } else if (key == "mixtures") {
        cfg.mixtures = split_list(value);
      } else if (key == "targets") {
        cfg.targets = split_list(value);
      } else if (key == "out_dir") {
        cfg.out_dir = value;
      } else if (key == "trace") {
        cfg.trace_path = value;
      } else {
        throw FormatError(ctx + ": unknown key '" + key + "'");
      }
    }
    if (eol == std::string_view::npos) break;
  }

  auto require = [&](const char* key) {
    if (!seen[key])
      throw FormatError("missing required key '" + std::string(key) + "'");
  };
  require("lambda");
  require("coeffs");
  require("mixtures");
  require("targets");
  require("out_dir");
  if (cfg.targets.size() != cfg.mixtures.size() + 1)
    throw FormatError("expected " + std::to_string(cfg.mixtures.size() + 1) +
                      " targets for " + std::to_string(cfg.mixtures.size()) +
                      " mixtures, got " + std::to_string(cfg.targets.size()));
  if (cfg.coeffs.size() != cfg.mixtures.size())
    throw FormatError("expected " + std::to_string(cfg.mixtures.size()) +
                      " coeffs for " + std::to_string(cfg.mixtures.size()) +
                      " mixtures, got " + std::to_string(cfg.coeffs.size()));
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  try {
    return parse_run_config(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_run_config(const std::string& path, const RunConfig& cfg) {
  std::ostringstream out;
  out << "# layersep run configuration\n";
  out << "lambda = " << format_double_short(cfg.lambda)
      << "  # arbitrary starting point, tune per dataset\n";
  out << "coeffs = ";
  for (std::size_t i = 0; i < cfg.coeffs.size(); ++i)
    out << (i ? "," : "") << format_double_short(cfg.coeffs[i]);
  out << "\n";
  out << "total_iters = " << cfg.total_iters << "\n";
  out << "fgp_iters = " << cfg.fgp_iters << "\n";
  out << "fgp_tol = " << format_double_short(cfg.fgp_tol) << "\n";
  out << "step_multiplier = " << format_double_short(cfg.step_multiplier) << "\n";
  out << "warm_start = " << (cfg.warm_start ? "true" : "false") << "\n";
  out << "workers = " << cfg.workers << "\n";
  out << "mixtures = ";
  for (std::size_t i = 0; i < cfg.mixtures.size(); ++i)
    out << (i ? "," : "") << cfg.mixtures[i];
  out << "\n";
  out << "targets = ";
  for (std::size_t i = 0; i < cfg.targets.size(); ++i)
    out << (i ? "," : "") << cfg.targets[i];
  out << "\n";
  out << "out_dir = " << cfg.out_dir << "\n";
  if (!cfg.trace_path.empty()) out << "trace = " << cfg.trace_path << "\n";
  write_file(path, std::move(out).str());
}

}  // namespace layersep::io
