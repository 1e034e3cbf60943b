#pragma once

#include "arank/messages.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace arank {

// Wire layout, all integers little-endian:
//   "ARNK" | u8 version | u8 kind | u32 sender | u64 local_iter |
//   u32 range_start | u32 range_len | f64[range_len] payload | u32 crc32
// kind: 0 = fragment, 1 = CONVERGE, 2 = DIVERGE, 3 = STOP. Control frames
// carry range_len = 0 and no payload. The checksum covers every byte that
// precedes it. Total frame size: 26 + 8*range_len + 4 bytes.

inline constexpr std::size_t kFrameHeaderSize = 26;
inline constexpr std::size_t kFrameOverhead = kFrameHeaderSize + 4;
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr char kWireMagic[4] = {'A', 'R', 'N', 'K'};

enum class DecodeStatus {
    ok,
    truncated,
    bad_magic,
    bad_version,
    bad_kind,
    bad_length,
    checksum_mismatch,
};

struct DecodeResult {
    DecodeStatus status = DecodeStatus::truncated;
    std::optional<Message> message;
    std::size_t frame_size = 0; // bytes consumed when status == ok
};

std::vector<std::uint8_t> encode_frame(const Fragment& fragment);
std::vector<std::uint8_t> encode_frame(const ControlMessage& msg);
std::vector<std::uint8_t> encode_frame(const Message& msg);

DecodeResult decode_frame(std::span<const std::uint8_t> bytes);

/// Frame size implied by a raw header, after validating magic, version
/// and kind. nullopt means the header cannot start a valid frame.
std::optional<std::size_t> frame_size_from_header(std::span<const std::uint8_t> header);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

const char* to_string(DecodeStatus status);

} // namespace arank
