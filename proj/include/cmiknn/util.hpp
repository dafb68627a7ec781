#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace cmiknn {

/// Runs fn(0..count-1) on up to n_threads worker threads. Items must be
/// independent; the first exception thrown by any item is rethrown to the
/// caller after all workers join.
void parallel_for(std::size_t count, unsigned n_threads,
                  const std::function<void(std::size_t)>& fn);

unsigned default_thread_count();

/// Shortest decimal that round-trips the double (17 significant digits).
std::string format_double(double value);

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& data);
std::string sha256_file_hex(const std::string& path);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace cmiknn
