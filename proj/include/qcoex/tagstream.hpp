#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "qcoex/errors.hpp"

namespace qcoex {

// One detection event: absolute timestamp in picoseconds plus the
// detector channel it fired on.
struct TagRecord {
    std::uint64_t timestamp_ps = 0;
    std::uint8_t channel = 0;

    friend bool operator==(const TagRecord&, const TagRecord&) = default;
};

// A recorded acquisition: time tags plus the metadata needed to process
// them. Invariants: timestamps strictly increasing, channels < channel_count.
struct TagStream {
    std::vector<TagRecord> tags;
    std::uint64_t symbol_period_ps = 10'000;
    std::uint16_t channel_count = 1;
};

// File format (all integers little-endian):
//   header, 16 bytes: "QTAG" | u16 version | u16 channel_count | u64 symbol_period_ps
//   records, 9 bytes each: u64 timestamp_ps | u8 channel
inline constexpr char k_tag_magic[4] = {'Q', 'T', 'A', 'G'};
inline constexpr std::uint16_t k_tag_version = 1;
inline constexpr std::size_t k_tag_header_bytes = 16;
inline constexpr std::size_t k_tag_record_bytes = 9;

class TagParseError : public Error {
public:
    enum class Kind {
        unreadable_file,
        truncated_header,
        bad_magic,
        unsupported_version,
        bad_channel_count,
        bad_symbol_period,
        truncated_record,
        timestamp_regression,
        invalid_channel,
    };

    TagParseError(Kind kind, const std::string& what, std::size_t byte_offset,
                  std::size_t record_index = 0)
        : Error(what), kind_(kind), byte_offset_(byte_offset), record_index_(record_index) {}

    Kind kind() const noexcept { return kind_; }
    std::size_t byte_offset() const noexcept { return byte_offset_; }
    std::size_t record_index() const noexcept { return record_index_; }

private:
    Kind kind_;
    std::size_t byte_offset_;
    std::size_t record_index_;
};

namespace detail {

inline void put_u16le(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u64le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint16_t get_u16le(const unsigned char* p) noexcept {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint64_t get_u64le(const unsigned char* p) noexcept {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i)
        v = (v << 8) | p[i];
    return v;
}

} // namespace detail

// Serializes a stream to its binary form. Validates the stream invariants
// so no unreadable file can be produced.
inline std::string encode_tag_stream(const TagStream& stream) {
    if (stream.channel_count == 0)
        throw DomainError("encode_tag_stream: channel count must be >= 1");
    if (stream.symbol_period_ps == 0)
        throw DomainError("encode_tag_stream: symbol period must be > 0");

    std::string out;
    out.reserve(k_tag_header_bytes + stream.tags.size() * k_tag_record_bytes);
    out.append(k_tag_magic, 4);
    detail::put_u16le(out, k_tag_version);
    detail::put_u16le(out, stream.channel_count);
    detail::put_u64le(out, stream.symbol_period_ps);

    std::uint64_t prev = 0;
    bool first = true;
    for (std::size_t i = 0; i < stream.tags.size(); ++i) {
        const TagRecord& t = stream.tags[i];
        if (!first && t.timestamp_ps <= prev)
            throw DomainError("encode_tag_stream: timestamps must be strictly increasing at record " +
                              std::to_string(i));
        if (t.channel >= stream.channel_count)
            throw DomainError("encode_tag_stream: channel out of range at record " +
                              std::to_string(i));
        detail::put_u64le(out, t.timestamp_ps);
        out.push_back(static_cast<char>(t.channel));
        prev = t.timestamp_ps;
        first = false;
    }
    return out;
}

inline void write_tag_stream(const TagStream& stream, const std::filesystem::path& path) {
    const std::string bytes = encode_tag_stream(stream);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw Error("write_tag_stream: cannot open " + path.string() + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f)
        throw Error("write_tag_stream: short write to " + path.string());
}

// Parses the binary form. Every malformed input maps to a TagParseError
// carrying the offending byte offset (and record index where it applies).
inline TagStream decode_tag_stream(const std::string& bytes) {
    if (bytes.size() < k_tag_header_bytes)
        throw TagParseError(TagParseError::Kind::truncated_header,
                            "tag stream: truncated header (" + std::to_string(bytes.size()) +
                                " of 16 bytes)",
                            bytes.size());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (!std::equal(k_tag_magic, k_tag_magic + 4, bytes.data()))
        throw TagParseError(TagParseError::Kind::bad_magic, "tag stream: bad magic", 0);
    const std::uint16_t version = detail::get_u16le(p + 4);
    if (version != k_tag_version)
        throw TagParseError(TagParseError::Kind::unsupported_version,
                            "tag stream: unsupported version " + std::to_string(version), 4);
    TagStream s;
    s.channel_count = detail::get_u16le(p + 6);
    if (s.channel_count == 0)
        throw TagParseError(TagParseError::Kind::bad_channel_count,
                            "tag stream: channel count is zero", 6);
    s.symbol_period_ps = detail::get_u64le(p + 8);
    if (s.symbol_period_ps == 0)
        throw TagParseError(TagParseError::Kind::bad_symbol_period,
                            "tag stream: symbol period is zero", 8);

    const std::size_t payload = bytes.size() - k_tag_header_bytes;
    if (payload % k_tag_record_bytes != 0)
        throw TagParseError(TagParseError::Kind::truncated_record,
                            "tag stream: truncated record at byte offset " +
                                std::to_string(k_tag_header_bytes +
                                               (payload / k_tag_record_bytes) * k_tag_record_bytes),
                            k_tag_header_bytes + (payload / k_tag_record_bytes) * k_tag_record_bytes,
                            payload / k_tag_record_bytes);

    const std::size_t n = payload / k_tag_record_bytes;
    s.tags.reserve(n);
    std::uint64_t prev = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t off = k_tag_header_bytes + i * k_tag_record_bytes;
        TagRecord t;
        t.timestamp_ps = detail::get_u64le(p + off);
        t.channel = p[off + 8];
        if (i > 0 && t.timestamp_ps <= prev)
            throw TagParseError(TagParseError::Kind::timestamp_regression,
                                "tag stream: timestamp regression at record " + std::to_string(i),
                                off, i);
        if (t.channel >= s.channel_count)
            throw TagParseError(TagParseError::Kind::invalid_channel,
                                "tag stream: invalid channel " + std::to_string(t.channel) +
                                    " at record " + std::to_string(i),
                                off + 8, i);
        prev = t.timestamp_ps;
        s.tags.push_back(t);
    }
    return s;
}

inline TagStream read_tag_stream(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw TagParseError(TagParseError::Kind::unreadable_file,
                            "tag stream: cannot open " + path.string(), 0);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_tag_stream(bytes);
}

} // namespace qcoex
