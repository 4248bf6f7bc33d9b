#pragma once

#include <cstdint>
#include <string>

namespace rlmesh {

/// SHA-256 of a byte buffer, as a lowercase hex string. Used for corpus and
/// run-manifest content hashes.
std::string sha256_hex(const void* data, std::size_t len);

/// SHA-256 of a file's contents. Throws std::runtime_error if unreadable.
std::string sha256_file(const std::string& path);

}  // namespace rlmesh
