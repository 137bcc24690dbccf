#include "qdsps/tagfile.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "qdsps/error.hpp"

namespace qdsps {

namespace {

constexpr std::array<char, 8> kMagic{'P', 'S', 'L', 'T', 'A', 'G', '0', '1'};
constexpr std::size_t kRecordBytes = 12;

void put_u64(unsigned char* dst, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i) dst[i] = static_cast<unsigned char>(v >> (8 * i));
}

std::uint64_t get_u64(const unsigned char* src)
{
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | src[i];
    return v;
}

} // namespace

void write_tags_binary(std::ostream& os, const TimeTagStream& tags)
{
    unsigned char header[16];
    std::memcpy(header, kMagic.data(), kMagic.size());
    put_u64(header + 8, tags.size());
    os.write(reinterpret_cast<const char*>(header), sizeof header);
    unsigned char rec[kRecordBytes] = {};
    for (const TimeTag& tag : tags) {
        require(tag.t_ps >= 0, "write_tags_binary: negative timestamp");
        rec[0] = tag.channel;
        put_u64(rec + 4, static_cast<std::uint64_t>(tag.t_ps));
        os.write(reinterpret_cast<const char*>(rec), kRecordBytes);
    }
    if (!os) throw Error("write_tags_binary: write failed");
}

TimeTagStream read_tags_binary(std::istream& is)
{
    unsigned char header[16];
    if (!is.read(reinterpret_cast<char*>(header), sizeof header)) {
        throw ValidationError("read_tags_binary: truncated header");
    }
    if (std::memcmp(header, kMagic.data(), kMagic.size()) != 0) {
        throw ValidationError("read_tags_binary: bad magic");
    }
    const std::uint64_t count = get_u64(header + 8);
    TimeTagStream tags;
    tags.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 26)));
    unsigned char rec[kRecordBytes];
    for (std::uint64_t i = 0; i < count; ++i) {
        if (!is.read(reinterpret_cast<char*>(rec), kRecordBytes)) {
            throw ValidationError("read_tags_binary: truncated at record " + std::to_string(i));
        }
        if (rec[1] || rec[2] || rec[3]) {
            throw ValidationError("read_tags_binary: nonzero reserved bytes at record " +
                                  std::to_string(i));
        }
        const std::uint64_t t = get_u64(rec + 4);
        if (t > static_cast<std::uint64_t>(INT64_MAX)) {
            throw ValidationError("read_tags_binary: timestamp overflow at record " + std::to_string(i));
        }
        tags.push_back({rec[0], static_cast<std::int64_t>(t)});
    }
    return tags;
}

void write_tags_csv(std::ostream& os, const TimeTagStream& tags)
{
    os << "channel,t_ps\n";
    for (const TimeTag& tag : tags) os << static_cast<int>(tag.channel) << ',' << tag.t_ps << '\n';
    if (!os) throw Error("write_tags_csv: write failed");
}

TimeTagStream read_tags_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line.rfind("channel,t_ps", 0) != 0) {
        throw ValidationError("read_tags_csv: expected header 'channel,t_ps'");
    }
    TimeTagStream tags;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::istringstream ss(line);
        long long channel = -1, t = -1;
        char comma = 0;
        if (!(ss >> channel >> comma >> t) || comma != ',' || channel < 0 || channel > 255 || t < 0) {
            throw ValidationError("read_tags_csv: malformed line " + std::to_string(lineno));
        }
        tags.push_back({static_cast<std::uint8_t>(channel), t});
    }
    return tags;
}

void save_tags(const std::filesystem::path& path, const TimeTagStream& tags)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("save_tags: cannot open " + path.string());
    if (path.extension() == ".csv") {
        write_tags_csv(os, tags);
    } else {
        write_tags_binary(os, tags);
    }
}

TimeTagStream load_tags(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("load_tags: cannot open " + path.string());
    char magic[8] = {};
    is.read(magic, sizeof magic);
    const bool binary = is.gcount() == 8 && std::memcmp(magic, kMagic.data(), 8) == 0;
    is.clear();
    is.seekg(0);
    return binary ? read_tags_binary(is) : read_tags_csv(is);
}

} // namespace qdsps
