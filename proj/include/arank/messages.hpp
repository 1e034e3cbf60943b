#pragma once

#include <cstdint>
#include <variant>
#include <vector>

namespace arank {

/// The contiguous sub-vector a UE computes and broadcasts, stamped with
/// the sender's local iteration count at production time.
struct Fragment {
    int sender = 0;
    std::uint64_t local_iter = 0;
    std::uint32_t begin = 0; // global index of the first value
    std::vector<double> values;

    std::uint32_t end() const { return begin + static_cast<std::uint32_t>(values.size()); }
    bool operator==(const Fragment&) const = default;
};

enum class ControlKind : std::uint8_t {
    converge = 1,
    diverge = 2,
    stop = 3,
};

/// Termination-protocol message. STOP originates only from the monitor.
struct ControlMessage {
    ControlKind kind = ControlKind::converge;
    int sender = 0;

    bool operator==(const ControlMessage&) const = default;
};

using Message = std::variant<Fragment, ControlMessage>;

const char* to_string(ControlKind kind);

} // namespace arank
