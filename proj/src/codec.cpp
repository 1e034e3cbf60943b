#include "arank/codec.hpp"

#include "arank/error.hpp"

#include <array>
#include <cstring>
#include <limits>

namespace arank {

namespace {

std::array<std::uint32_t, 256> make_crc_table() {
    std::array<std::uint32_t, 256> table{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int bit = 0; bit < 8; ++bit)
            c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        table[i] = c;
    }
    return table;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t value) {
    out.push_back(static_cast<std::uint8_t>(value));
    out.push_back(static_cast<std::uint8_t>(value >> 8));
    out.push_back(static_cast<std::uint8_t>(value >> 16));
    out.push_back(static_cast<std::uint8_t>(value >> 24));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t value) {
    for (int shift = 0; shift < 64; shift += 8)
        out.push_back(static_cast<std::uint8_t>(value >> shift));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) |
           static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 |
           static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t value = 0;
    for (int i = 7; i >= 0; --i)
        value = value << 8 | p[i];
    return value;
}

std::vector<std::uint8_t> encode(std::uint8_t kind, std::uint32_t sender,
                                 std::uint64_t local_iter, std::uint32_t range_start,
                                 std::span<const double> payload) {
    std::vector<std::uint8_t> out;
    out.reserve(kFrameOverhead + 8 * payload.size());
    out.insert(out.end(), kWireMagic, kWireMagic + 4);
    out.push_back(kWireVersion);
    out.push_back(kind);
    put_u32(out, sender);
    put_u64(out, local_iter);
    put_u32(out, range_start);
    put_u32(out, static_cast<std::uint32_t>(payload.size()));
    for (double v : payload) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        put_u64(out, bits);
    }
    put_u32(out, crc32(out));
    return out;
}

} // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    static const std::array<std::uint32_t, 256> table = make_crc_table();
    std::uint32_t c = 0xFFFFFFFFu;
    for (std::uint8_t b : bytes)
        c = table[(c ^ b) & 0xFFu] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

std::vector<std::uint8_t> encode_frame(const Fragment& fragment) {
    if (fragment.values.size() > std::numeric_limits<std::uint32_t>::max())
        throw InvalidArgument("encode_frame: fragment too long for the wire format");
    return encode(0, static_cast<std::uint32_t>(fragment.sender), fragment.local_iter,
                  fragment.begin, fragment.values);
}

std::vector<std::uint8_t> encode_frame(const ControlMessage& msg) {
    return encode(static_cast<std::uint8_t>(msg.kind),
                  static_cast<std::uint32_t>(msg.sender), 0, 0, {});
}

std::vector<std::uint8_t> encode_frame(const Message& msg) {
    if (const auto* fragment = std::get_if<Fragment>(&msg))
        return encode_frame(*fragment);
    return encode_frame(std::get<ControlMessage>(msg));
}

std::optional<std::size_t> frame_size_from_header(std::span<const std::uint8_t> header) {
    if (header.size() < kFrameHeaderSize)
        return std::nullopt;
    if (std::memcmp(header.data(), kWireMagic, 4) != 0)
        return std::nullopt;
    if (header[4] != kWireVersion)
        return std::nullopt;
    const std::uint8_t kind = header[5];
    if (kind > 3)
        return std::nullopt;
    const std::uint32_t range_len = get_u32(header.data() + 22);
    if (kind != 0 && range_len != 0)
        return std::nullopt;
    return kFrameOverhead + 8 * static_cast<std::size_t>(range_len);
}

DecodeResult decode_frame(std::span<const std::uint8_t> bytes) {
    DecodeResult result;
    if (bytes.size() < kFrameOverhead) {
        result.status = DecodeStatus::truncated;
        return result;
    }
    if (std::memcmp(bytes.data(), kWireMagic, 4) != 0) {
        result.status = DecodeStatus::bad_magic;
        return result;
    }
    if (bytes[4] != kWireVersion) {
        result.status = DecodeStatus::bad_version;
        return result;
    }
    const std::uint8_t kind = bytes[5];
    if (kind > 3) {
        result.status = DecodeStatus::bad_kind;
        return result;
    }
    const std::uint32_t range_len = get_u32(bytes.data() + 22);
    if (kind != 0 && range_len != 0) {
        result.status = DecodeStatus::bad_length;
        return result;
    }
    const std::size_t frame_size = kFrameOverhead + 8 * static_cast<std::size_t>(range_len);
    if (bytes.size() < frame_size) {
        result.status = DecodeStatus::truncated;
        return result;
    }
    const std::uint32_t stored = get_u32(bytes.data() + frame_size - 4);
    if (crc32(bytes.first(frame_size - 4)) != stored) {
        result.status = DecodeStatus::checksum_mismatch;
        return result;
    }

    const auto sender = static_cast<int>(get_u32(bytes.data() + 6));
    if (kind == 0) {
        Fragment fragment;
        fragment.sender = sender;
        fragment.local_iter = get_u64(bytes.data() + 10);
        fragment.begin = get_u32(bytes.data() + 18);
        fragment.values.resize(range_len);
        for (std::uint32_t i = 0; i < range_len; ++i) {
            const std::uint64_t bits = get_u64(bytes.data() + kFrameHeaderSize + 8 * i);
            double v;
            std::memcpy(&v, &bits, sizeof v);
            fragment.values[i] = v;
        }
        result.message = Message{std::move(fragment)};
    } else {
        result.message = Message{ControlMessage{static_cast<ControlKind>(kind), sender}};
    }
    result.status = DecodeStatus::ok;
    result.frame_size = frame_size;
    return result;
}

const char* to_string(DecodeStatus status) {
    switch (status) {
    case DecodeStatus::ok: return "ok";
    case DecodeStatus::truncated: return "truncated";
    case DecodeStatus::bad_magic: return "bad magic";
    case DecodeStatus::bad_version: return "bad version";
    case DecodeStatus::bad_kind: return "bad kind";
    case DecodeStatus::bad_length: return "bad length";
    case DecodeStatus::checksum_mismatch: return "checksum mismatch";
    }
    return "?";
}

} // namespace arank
