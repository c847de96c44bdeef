#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "optisig/bits.hpp"
#include "optisig/lsh.hpp"
#include "optisig/timing.hpp"
#include "optisig/track.hpp"

namespace optisig {

inline constexpr int kHashBits = 150;
inline constexpr int kHashHalfBits = kHashBits / 2;
inline constexpr int kMetaFieldBits = 16;
inline constexpr int kDescriptorBits = kHashBits + kHashHalfBits + 3 * kMetaFieldBits;  // 273
inline constexpr int kMacBits = 80;
inline constexpr int kSignatureBits = kDescriptorBits + kMacBits;  // 353


struct WindowMeta {
  std::uint16_t window_no = 0;
  std::uint16_t unit_id = 0;
  std::uint16_t date = 0;  // days since 2020-01-01

  bool operator==(const WindowMeta&) const = default;
};

// Even windows carry bits [0, 75) of the identity hash, odd windows [75, 150).
struct Descriptor {
  Bits dyn_hash;       // 150 bits
  Bits id_hash_half;   // 75 bits
  WindowMeta meta;
  bool degenerate = false;  // sentinel hash substituted for a flat window

  bool operator==(const Descriptor& o) const {
    return dyn_hash == o.dyn_hash && id_hash_half == o.id_hash_half && meta == o.meta;
  }
};

struct Signature {
  Descriptor descriptor;
  Bytes mac;  // 10 bytes

  bool operator==(const Signature& o) const {
    return descriptor == o.descriptor && mac == o.mac;
  }
};

// Shared secret material: the MAC key plus the seed both parties use to derive
// identical LSH hyperplanes.
struct KeyMaterial {
  Bytes key;               // 16 bytes
  std::uint64_t lsh_seed = 0;
};

// Key file: first line 32 hex chars (128-bit key), second line 16 hex chars
// (64-bit LSH seed).
KeyMaterial load_key_file(const std::string& path);
void save_key_file(const KeyMaterial& km, const std::string& path);

struct HasherPair {
  Hasher dynamic;
  Hasher identity;
};

// The dynamic hasher's input dim is 16 * round(window_s * fps).
int window_frames(double fps, double window_s = kWindowS);
HasherPair make_hashers(const KeyMaterial& km, double core_fps = 24.0);

struct DynamicVector {
  std::vector<double> values;  // 16 * n, channel-major
  bool degenerate = false;     // at least one constant channel standardized to zeros
};

// Per channel: moving-average smoothing (width 5, edges clamped), then
// standardization to zero mean and unit variance, concatenated channel-major.
DynamicVector build_dynamic_vector(const FeatureTrack& track, int window_start_frame,
                                   int n_frames);

Bits identity_hash(const FeatureTrack& track, const Hasher& id_hasher);

Descriptor make_descriptor(const FeatureTrack& track, int window_start_frame,
                           const WindowMeta& meta, const HasherPair& hashers);

// Packs the 273 descriptor bits (dyn || id_half || window_no || unit_id ||
// date, big-endian fields) into 35 bytes, 7 trailing zero bits.
Bytes canonical_descriptor_bytes(const Descriptor& d);

// mac = first 80 bits of HMAC-SHA256(key, canonical descriptor bytes).
Signature seal(const Descriptor& descriptor, const Bytes& key_128);
bool mac_valid(const Signature& sig, const Bytes& key_128);

// 353-bit layout: descriptor bits followed by the MAC.
Bits serialize(const Signature& sig);
Signature deserialize(const Bits& payload);

}  // namespace optisig
