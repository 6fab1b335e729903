#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace demandforge {

inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// 128-bit FNV-1a, rendered as 32 lowercase hex digits.
inline std::string fnv1a128_hex(std::string_view data) {
    using u128 = unsigned __int128;
    const u128 prime = (static_cast<u128>(0x0000000001000000ULL) << 64) | 0x000000000000013BULL;
    u128 h = (static_cast<u128>(0x6c62272e07bb0142ULL) << 64) | 0x62b821756295c58dULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= prime;
    }
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(32, '0');
    for (int i = 31; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[static_cast<unsigned>(h & 0xF)];
        h >>= 4;
    }
    return out;
}

}  // namespace demandforge
