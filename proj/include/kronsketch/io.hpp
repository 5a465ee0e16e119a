#pragma once

#include "kronsketch/types.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace kronsketch {

// KMAT text matrix: "rows cols" then rows*cols decimal floats, row-major.
DenseMatrix parse_matrix(std::string_view text);
DenseMatrix load_matrix(const std::filesystem::path& path);
std::string format_matrix(const DenseMatrix& A);
void save_matrix(const DenseMatrix& A, const std::filesystem::path& path);

// Sparse vector text: "len nnz" then nnz lines "index value" (zero-based).
SparseVector parse_sparse_vector(std::string_view text);
SparseVector load_sparse_vector(const std::filesystem::path& path);
std::string format_sparse_vector(const SparseVector& v);
void save_sparse_vector(const SparseVector& v, const std::filesystem::path& path);

enum class StreamEventKind { Update, Query, Label };

struct StreamEvent {
  StreamEventKind kind = StreamEventKind::Query;
  Index factor = 0;  // zero-based; the file uses 1-based indices
  std::filesystem::path path;
};

/// Update stream lines: "U <factor 1-based> <B.kmat>", "Q", "B <delta.vec>".
/// Blank lines and lines starting with '#' are ignored; relative paths are
/// resolved against `base_dir`.
std::vector<StreamEvent> parse_stream(std::string_view text, const std::filesystem::path& base_dir = {});
std::vector<StreamEvent> load_stream(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double x);
/// Fixed 17 significant digits.
std::string format_double17(double x);

}  // namespace kronsketch
