#ifndef SPECFUSE_IO_HPP
#define SPECFUSE_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

namespace specfuse::io {

/// Writes via a temp file in the same directory plus rename, so interrupted
/// runs never leave truncated files behind.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

/// Fixed-format double rendering ("%.10g") so identical values always produce
/// identical bytes.
std::string fmt_double(double v);

/// Minimal CSV assembly with the deterministic double format.
class CsvBuilder {
 public:
  explicit CsvBuilder(const std::vector<std::string>& header);
  void row(const std::vector<double>& values);
  const std::string& str() const { return out_; }

 private:
  std::string out_;
  std::size_t columns_;
};

}  // namespace specfuse::io

#endif  // SPECFUSE_IO_HPP
