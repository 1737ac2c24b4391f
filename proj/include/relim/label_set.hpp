#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace relim {

inline constexpr int kMaxLabels = 512;
inline constexpr int kLabelWords = kMaxLabels / 64;

// Fixed-width bitset over label indices [0, kMaxLabels).
class LabelSet {
 public:
  LabelSet() = default;

  static LabelSet single(int i) {
    LabelSet s;
    s.set(i);
    return s;
  }
  static LabelSet range(int n) {
    LabelSet s;
    for (int i = 0; i < n; ++i) s.set(i);
    return s;
  }

  void set(int i) { w_[i >> 6] |= (uint64_t{1} << (i & 63)); }
  void reset(int i) { w_[i >> 6] &= ~(uint64_t{1} << (i & 63)); }
  bool test(int i) const { return (w_[i >> 6] >> (i & 63)) & 1U; }

  bool empty() const {
    for (uint64_t w : w_)
      if (w) return false;
    return true;
  }
  int count() const {
    int n = 0;
    for (uint64_t w : w_) n += std::popcount(w);
    return n;
  }
  // Lowest member, or -1.
  int first() const {
    for (int k = 0; k < kLabelWords; ++k)
      if (w_[k]) return k * 64 + std::countr_zero(w_[k]);
    return -1;
  }
  int next(int i) const {
    ++i;
    if (i >= kMaxLabels) return -1;
    int k = i >> 6;
    uint64_t cur = w_[k] & (~uint64_t{0} << (i & 63));
    while (true) {
      if (cur) return k * 64 + std::countr_zero(cur);
      if (++k == kLabelWords) return -1;
      cur = w_[k];
    }
  }
  template <class F>
  void for_each(F&& f) const {
    for (int k = 0; k < kLabelWords; ++k) {
      uint64_t x = w_[k];
      while (x) {
        f(k * 64 + std::countr_zero(x));
        x &= x - 1;
      }
    }
  }
  std::vector<int> members() const {
    std::vector<int> out;
    for_each([&](int i) { out.push_back(i); });
    return out;
  }

  bool subset_of(const LabelSet& o) const {
    for (int k = 0; k < kLabelWords; ++k)
      if (w_[k] & ~o.w_[k]) return false;
    return true;
  }
  bool intersects(const LabelSet& o) const {
    for (int k = 0; k < kLabelWords; ++k)
      if (w_[k] & o.w_[k]) return true;
    return false;
  }

  LabelSet operator|(const LabelSet& o) const {
    LabelSet r;
    for (int k = 0; k < kLabelWords; ++k) r.w_[k] = w_[k] | o.w_[k];
    return r;
  }
  LabelSet operator&(const LabelSet& o) const {
    LabelSet r;
    for (int k = 0; k < kLabelWords; ++k) r.w_[k] = w_[k] & o.w_[k];
    return r;
  }
  LabelSet operator-(const LabelSet& o) const {
    LabelSet r;
    for (int k = 0; k < kLabelWords; ++k) r.w_[k] = w_[k] & ~o.w_[k];
    return r;
  }
  LabelSet& operator|=(const LabelSet& o) {
    for (int k = 0; k < kLabelWords; ++k) w_[k] |= o.w_[k];
    return *this;
  }
  LabelSet& operator&=(const LabelSet& o) {
    for (int k = 0; k < kLabelWords; ++k) w_[k] &= o.w_[k];
    return *this;
  }

  bool operator==(const LabelSet& o) const = default;

  // Lexicographic order on the ascending member lists.
  bool lex_less(const LabelSet& o) const {
    for (int k = 0; k < kLabelWords; ++k) {
      uint64_t d = w_[k] ^ o.w_[k];
      if (!d) continue;
      int p = std::countr_zero(d);
      uint64_t above = (p == 63) ? 0 : (~uint64_t{0} << (p + 1));
      bool mine = (w_[k] >> p) & 1U;
      const LabelSet& other = mine ? o : *this;
      bool other_has_more = (other.w_[k] & above) != 0;
      for (int m = k + 1; m < kLabelWords && !other_has_more; ++m) other_has_more = other.w_[m] != 0;
      // The set holding p is smaller iff the other one continues past p.
      return mine ? other_has_more : !other_has_more;
    }
    return false;
  }

  std::size_t hash() const {
    uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (int k = 0; k < kLabelWords; ++k) h = (h ^ w_[k]) * 0x100000001b3ULL + (h >> 29);
    return static_cast<std::size_t>(h);
  }

  const std::array<uint64_t, kLabelWords>& words() const { return w_; }

 private:
  std::array<uint64_t, kLabelWords> w_{};
};

struct LabelSetHash {
  std::size_t operator()(const LabelSet& s) const { return s.hash(); }
};

}  // namespace relim
