#pragma once

#include <cstdint>

namespace lmplambda {

// Counter-based splittable stream. A stream is (key, counter); draws advance
// the counter only, so a stream is replayable from (seed, stream id) alone
// and split children never share draws with the parent.
class RngStream {
public:
  RngStream() : key_(mix(0x9e3779b97f4a7c15ull)), ctr_(0) {}
  RngStream(uint64_t seed, uint64_t stream)
      : key_(mix(mix(seed + 0x9e3779b97f4a7c15ull) ^ mix(stream + 0xbf58476d1ce4e5b9ull))),
        ctr_(0) {}

  uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ull * ++ctr_); }

  // uniform in [0, 1)
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  // child stream independent of this one and of other indices
  RngStream split(uint64_t idx) const {
    RngStream s;
    s.key_ = mix(key_ ^ mix(idx + 0x94d049bb133111ebull));
    s.ctr_ = 0;
    return s;
  }

  uint64_t key() const { return key_; }

private:
  static uint64_t mix(uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  uint64_t key_;
  uint64_t ctr_;
};

} // namespace lmplambda
