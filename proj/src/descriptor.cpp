#include "optisig/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "optisig/errors.hpp"
#include "optisig/mac.hpp"
#include "optisig/rng.hpp"

namespace optisig {

KeyMaterial load_key_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("load_key_file: cannot open " + path);
  std::string key_hex, seed_hex;
  in >> key_hex >> seed_hex;
  if (key_hex.size() != 32)
    throw SchemaError("load_key_file: " + path + ": key must be 32 hex chars, got " +
                      std::to_string(key_hex.size()));
  if (seed_hex.size() != 16)
    throw SchemaError("load_key_file: " + path + ": seed must be 16 hex chars, got " +
                      std::to_string(seed_hex.size()));
  KeyMaterial km;
  km.key = from_hex(key_hex);
  Bytes seed_bytes = from_hex(seed_hex);
  km.lsh_seed = 0;
  for (auto b : seed_bytes) km.lsh_seed = (km.lsh_seed << 8) | b;
  return km;
}

void save_key_file(const KeyMaterial& km, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_key_file: cannot write " + path);
  Bytes seed_bytes(8);
  for (int i = 0; i < 8; ++i) seed_bytes[i] = (km.lsh_seed >> (8 * (7 - i))) & 0xff;
  out << to_hex(km.key) << "\n" << to_hex(seed_bytes) << "\n";
}

int window_frames(double fps, double window_s) {
  return static_cast<int>(std::llround(window_s * fps));
}

HasherPair make_hashers(const KeyMaterial& km, double core_fps) {
  const int n = window_frames(core_fps);
  return HasherPair{
      Hasher(kTrackChannels * n, kHashBits, derive_seed(km.lsh_seed, 1)),
      Hasher(kIdentityDim, kHashBits, derive_seed(km.lsh_seed, 2)),
  };
}

DynamicVector build_dynamic_vector(const FeatureTrack& track, int window_start_frame,
                                   int n_frames) {
  if (n_frames < 2) throw std::invalid_argument("build_dynamic_vector: need at least 2 frames");
  if (window_start_frame < 0 || window_start_frame + n_frames > track.frame_count())
    throw std::invalid_argument("build_dynamic_vector: window [" +
                                std::to_string(window_start_frame) + ", " +
                                std::to_string(window_start_frame + n_frames) +
                                ") outside track of " + std::to_string(track.frame_count()) +
                                " frames");

  constexpr int kSmoothWidth = 5;  // samples, edge-clamped
  constexpr int kHalf = kSmoothWidth / 2;

  DynamicVector out;
  out.values.resize(static_cast<std::size_t>(kTrackChannels) * n_frames);
  std::vector<double> smoothed(n_frames);
  for (int c = 0; c < kTrackChannels; ++c) {
    for (int i = 0; i < n_frames; ++i) {
      double acc = 0.0;
      for (int j = -kHalf; j <= kHalf; ++j) {
        int idx = std::clamp(i + j, 0, n_frames - 1);
        acc += track.frames[window_start_frame + idx][c];
      }
      smoothed[i] = acc / kSmoothWidth;
    }
    double mean = 0.0;
    for (double v : smoothed) mean += v;
    mean /= n_frames;
    double var = 0.0;
    for (double v : smoothed) var += (v - mean) * (v - mean);
    var /= n_frames;
    double* dst = out.values.data() + static_cast<std::size_t>(c) * n_frames;
    if (var <= 0.0) {
      out.degenerate = true;
      std::fill(dst, dst + n_frames, 0.0);
    } else {
      double inv_sd = 1.0 / std::sqrt(var);
      for (int i = 0; i < n_frames; ++i) dst[i] = (smoothed[i] - mean) * inv_sd;
    }
  }
  return out;
}

Bits identity_hash(const FeatureTrack& track, const Hasher& id_hasher) {
  return id_hasher.hash(track.identity);
}

Descriptor make_descriptor(const FeatureTrack& track, int window_start_frame,
                           const WindowMeta& meta, const HasherPair& hashers) {
  const int n = hashers.dynamic.input_dim() / kTrackChannels;
  DynamicVector dyn = build_dynamic_vector(track, window_start_frame, n);

  Descriptor d;
  d.meta = meta;
  d.dyn_hash = hashers.dynamic.hash(zero_mean(dyn.values));
  d.degenerate = dyn.degenerate;

  Bits full_id = hashers.identity.hash(track.identity);
  d.id_hash_half = (meta.window_no % 2 == 0) ? slice(full_id, 0, kHashHalfBits)
                                             : slice(full_id, kHashHalfBits, kHashHalfBits);
  return d;
}

namespace {

Bits descriptor_bits(const Descriptor& d) {
  if (static_cast<int>(d.dyn_hash.size()) != kHashBits ||
      static_cast<int>(d.id_hash_half.size()) != kHashHalfBits)
    throw std::invalid_argument("descriptor_bits: wrong hash lengths");
  Bits bits;
  bits.reserve(kDescriptorBits);
  bits.insert(bits.end(), d.dyn_hash.begin(), d.dyn_hash.end());
  bits.insert(bits.end(), d.id_hash_half.begin(), d.id_hash_half.end());
  append_uint(bits, d.meta.window_no, kMetaFieldBits);
  append_uint(bits, d.meta.unit_id, kMetaFieldBits);
  append_uint(bits, d.meta.date, kMetaFieldBits);
  return bits;
}

}  // namespace

Bytes canonical_descriptor_bytes(const Descriptor& d) { return pack_bits(descriptor_bits(d)); }

Signature seal(const Descriptor& descriptor, const Bytes& key_128) {
  if (key_128.size() != 16) throw std::invalid_argument("seal: key must be 128 bits");
  Signature sig;
  sig.descriptor = descriptor;
  sig.mac = hmac_sha256_truncated(key_128, canonical_descriptor_bytes(descriptor), kMacBits / 8);
  return sig;
}

bool mac_valid(const Signature& sig, const Bytes& key_128) {
  if (sig.mac.size() != kMacBits / 8) return false;
  return hmac_sha256_truncated(key_128, canonical_descriptor_bytes(sig.descriptor),
                               kMacBits / 8) == sig.mac;
}

Bits serialize(const Signature& sig) {
  Bits bits = descriptor_bits(sig.descriptor);
  if (static_cast<int>(sig.mac.size()) != kMacBits / 8)
    throw std::invalid_argument("serialize: mac must be 80 bits");
  Bits mac_bits = unpack_bits(sig.mac, kMacBits);
  bits.insert(bits.end(), mac_bits.begin(), mac_bits.end());
  return bits;
}

Signature deserialize(const Bits& payload) {
  if (static_cast<int>(payload.size()) != kSignatureBits)
    throw std::invalid_argument("deserialize: expected " + std::to_string(kSignatureBits) +
                                " bits, got " + std::to_string(payload.size()));
  Signature sig;
  sig.descriptor.dyn_hash = slice(payload, 0, kHashBits);
  sig.descriptor.id_hash_half = slice(payload, kHashBits, kHashHalfBits);
  std::size_t pos = kHashBits + kHashHalfBits;
  sig.descriptor.meta.window_no = static_cast<std::uint16_t>(read_uint(payload, pos, 16));
  sig.descriptor.meta.unit_id = static_cast<std::uint16_t>(read_uint(payload, pos + 16, 16));
  sig.descriptor.meta.date = static_cast<std::uint16_t>(read_uint(payload, pos + 32, 16));
  sig.mac = pack_bits(slice(payload, kDescriptorBits, kMacBits));
  return sig;
}

}  // namespace optisig
