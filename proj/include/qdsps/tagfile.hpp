#pragma once

#include <filesystem>
#include <iosfwd>

#include "qdsps/photon_stream.hpp"

// On-disk time-tag formats.
//
// Binary layout (little endian): a 16-byte header holding the magic
// "PSLTAG01" and the record count as u64, followed by 12-byte records of
// channel (u8), three reserved zero bytes and the timestamp (u64, ps).
namespace qdsps {

void write_tags_binary(std::ostream& os, const TimeTagStream& tags);
TimeTagStream read_tags_binary(std::istream& is);

/// CSV with header "channel,t_ps".
void write_tags_csv(std::ostream& os, const TimeTagStream& tags);
TimeTagStream read_tags_csv(std::istream& is);

void save_tags(const std::filesystem::path& path, const TimeTagStream& tags);
/// Reads either format; the binary magic decides.
TimeTagStream load_tags(const std::filesystem::path& path);

} // namespace qdsps
