#include "gcasim/io_util.hpp"

#include <atomic>
#include <fstream>
#include <sstream>

namespace gcasim {

namespace {
std::atomic<unsigned> g_max_threads{0};
}

void set_max_threads(unsigned n) { g_max_threads.store(n); }

unsigned max_threads() {
  unsigned n = g_max_threads.load();
  if (n == 0) {
    n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
  }
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& chunk_fn) {
  if (n == 0) return;
  const std::size_t workers = std::min<std::size_t>(max_threads(), n);
  if (workers <= 1) {
    chunk_fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t base = n / workers;
  const std::size_t extra = n % workers;
  std::size_t begin = 0;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t len = base + (w < extra ? 1 : 0);
    const std::size_t end = begin + len;
    pool.emplace_back([&chunk_fn, begin, end] { chunk_fn(begin, end); });
    begin = end;
  }
  for (auto& t : pool) t.join();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write file: " + path.string());
  out << content;
  if (!out) throw ValidationError("short write: " + path.string());
}

double parse_double_field(const std::string& field, const char* what, std::size_t line_no) {
  double v = 0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ParseError(std::string("bad ") + what + " value '" + field + "' at line " +
                     std::to_string(line_no));
  }
  return v;
}

std::int64_t parse_int_field(const std::string& field, const char* what, std::size_t line_no) {
  std::int64_t v = 0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ParseError(std::string("bad ") + what + " value '" + field + "' at line " +
                     std::to_string(line_no));
  }
  return v;
}

}  // namespace gcasim
