#pragma once

// Binary checkpoint of backward tables.
//
// Layout (little-endian): 8-byte magic "NRDFTBL1", u32 format version, u64
// payload length, payload, u64 FNV-1a checksum of the payload. The payload
// holds the config echo, every grid and every stage/value table; doubles are
// stored as raw IEEE-754 bits so a round trip is bit exact.

#include <cstdint>
#include <filesystem>
#include <string>

#include "nrdf/backward.hpp"

namespace nrdf {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_tables(const BackwardTables& tables);
BackwardTables deserialize_tables(const std::string& bytes);

void save_tables(const BackwardTables& tables, const std::filesystem::path& path);
BackwardTables load_tables(const std::filesystem::path& path);

// Checksum of the serialized payload; equal tables give equal checksums.
std::uint64_t tables_checksum(const BackwardTables& tables);

}  // namespace nrdf
