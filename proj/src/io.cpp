#include "kronsketch/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

namespace kronsketch {

namespace {

struct Token {
  std::string_view text;
  std::size_t offset = 0;
};

class Tokenizer {
 public:
  explicit Tokenizer(std::string_view s) : s_(s) {}

  std::optional<Token> next() {
    while (pos_ < s_.size() && is_space(s_[pos_])) ++pos_;
    if (pos_ >= s_.size()) return std::nullopt;
    const std::size_t start = pos_;
    while (pos_ < s_.size() && !is_space(s_[pos_])) ++pos_;
    return Token{s_.substr(start, pos_ - start), start};
  }
  std::size_t offset() const { return pos_; }

 private:
  static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
  std::string_view s_;
  std::size_t pos_ = 0;
};

std::optional<Index> to_count(std::string_view t) {
  Index v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || v < 0) return std::nullopt;
  return v;
}

double to_real(const Token& t) {
  double v = 0;
  auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
  if (ec != std::errc() || p != t.text.data() + t.text.size())
    throw ParseError(t.offset, "malformed value '" + std::string(t.text) + "'");
  if (!std::isfinite(v)) throw ParseError(t.offset, "non-finite value '" + std::string(t.text) + "'");
  return v;
}

std::pair<Index, Index> read_header(Tokenizer& tok, const char* first, const char* second) {
  auto a = tok.next();
  if (!a) throw ParseError(0, "missing header");
  auto b = tok.next();
  if (!b) throw ParseError(tok.offset(), "missing header");
  auto x = to_count(a->text);
  if (!x) throw ParseError(a->offset, std::string("malformed header: bad ") + first);
  auto y = to_count(b->text);
  if (!y) throw ParseError(b->offset, std::string("malformed header: bad ") + second);
  return {*x, *y};
}

void expect_end(Tokenizer& tok) {
  if (auto extra = tok.next()) throw ParseError(extra->offset, "trailing data after payload");
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

std::string format_double17(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, p);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

DenseMatrix parse_matrix(std::string_view text) {
  Tokenizer tok(text);
  const auto [rows, cols] = read_header(tok, "rows", "cols");
  const Index count = checked_mul(rows, cols);
  DenseMatrix A(rows, cols);
  for (Index i = 0; i < count; ++i) {
    auto t = tok.next();
    if (!t)
      throw ParseError(tok.offset(), "truncated payload: expected " + std::to_string(count) + " values, got " +
                                         std::to_string(i));
    A.data()[i] = to_real(*t);
  }
  expect_end(tok);
  return A;
}

DenseMatrix load_matrix(const std::filesystem::path& path) { return parse_matrix(read_file(path)); }

std::string format_matrix(const DenseMatrix& A) {
  std::string out = std::to_string(A.rows()) + " " + std::to_string(A.cols()) + "\n";
  for (Index i = 0; i < A.rows(); ++i) {
    for (Index j = 0; j < A.cols(); ++j) {
      if (j) out += ' ';
      out += format_double(A(i, j));
    }
    out += '\n';
  }
  return out;
}

void save_matrix(const DenseMatrix& A, const std::filesystem::path& path) { write_file(path, format_matrix(A)); }

SparseVector parse_sparse_vector(std::string_view text) {
  Tokenizer tok(text);
  const auto [len, nnz] = read_header(tok, "len", "nnz");
  SparseVector v(len);
  for (Index k = 0; k < nnz; ++k) {
    auto ti = tok.next();
    auto tv = ti ? tok.next() : std::nullopt;
    if (!ti || !tv)
      throw ParseError(tok.offset(), "truncated payload: expected " + std::to_string(nnz) + " entries, got " +
                                         std::to_string(k));
    auto idx = to_count(ti->text);
    if (!idx) throw ParseError(ti->offset, "malformed index '" + std::string(ti->text) + "'");
    if (*idx >= len) throw ParseError(ti->offset, "index " + std::to_string(*idx) + " out of range");
    v.add(*idx, to_real(*tv));
  }
  expect_end(tok);
  return v;
}

SparseVector load_sparse_vector(const std::filesystem::path& path) { return parse_sparse_vector(read_file(path)); }

std::string format_sparse_vector(const SparseVector& v) {
  std::string out = std::to_string(v.size()) + " " + std::to_string(v.nnz()) + "\n";
  for (const auto& [i, x] : v.entries()) out += std::to_string(i) + " " + format_double(x) + "\n";
  return out;
}

void save_sparse_vector(const SparseVector& v, const std::filesystem::path& path) {
  write_file(path, format_sparse_vector(v));
}

std::vector<StreamEvent> parse_stream(std::string_view text, const std::filesystem::path& base_dir) {
  std::vector<StreamEvent> events;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    const std::size_t line_offset = pos;
    pos = end + 1;

    Tokenizer tok(line);
    auto head = tok.next();
    if (!head || head->text.front() == '#') continue;
    auto resolve = [&](std::string_view p) {
      std::filesystem::path path(p);
      return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };

    StreamEvent ev;
    if (head->text == "Q") {
      ev.kind = StreamEventKind::Query;
    } else if (head->text == "U") {
      auto idx = tok.next();
      auto path = idx ? tok.next() : std::nullopt;
      if (!idx || !path) throw ParseError(line_offset, "update line needs '<factor> <path>'");
      auto k = to_count(idx->text);
      if (!k || *k < 1) throw ParseError(line_offset + idx->offset, "factor index must be a 1-based integer");
      ev.kind = StreamEventKind::Update;
      ev.factor = *k - 1;
      ev.path = resolve(path->text);
    } else if (head->text == "B") {
      auto path = tok.next();
      if (!path) throw ParseError(line_offset, "label line needs '<path>'");
      ev.kind = StreamEventKind::Label;
      ev.path = resolve(path->text);
    } else {
      throw ParseError(line_offset + head->offset, "unknown stream event '" + std::string(head->text) + "'");
    }
    if (auto extra = tok.next()) throw ParseError(line_offset + extra->offset, "trailing tokens on stream line");
    events.push_back(std::move(ev));
  }
  return events;
}

std::vector<StreamEvent> load_stream(const std::filesystem::path& path) {
  return parse_stream(read_file(path), path.parent_path());
}

}  // namespace kronsketch
