#pragma once

#include <string>

namespace dsoft {

// Read a whole file into a string; throws std::runtime_error on failure.
std::string read_text_file(const std::string& path);

// Write via a temporary file in the same directory followed by an atomic
// rename, so readers never observe partial output.
void write_text_atomic(const std::string& path, const std::string& content);

}  // namespace dsoft
