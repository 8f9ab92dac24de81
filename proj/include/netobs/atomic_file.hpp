#pragma once

#include <functional>
#include <iosfwd>
#include <string>

namespace netobs {

/// Writes through a sibling temp file and renames it into place, so readers
/// never observe a half-written artifact.
void write_file_atomic(const std::string& path, const std::function<void(std::ostream&)>& body);

}  // namespace netobs
