#pragma once

// Word-packed set of indices in {0..d-1}. All set arithmetic the tiling and
// counting code needs, sized for ground sets up to ~1e7.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace sofent {

class IndexSet {
  public:
    IndexSet() = default;
    explicit IndexSet(std::size_t ground) : d_(ground), w_((ground + 63) / 64, 0) {}

    static IndexSet full(std::size_t ground) {
        IndexSet s(ground);
        for (auto& w : s.w_) w = ~0ull;
        s.trim();
        return s;
    }

    std::size_t ground_size() const { return d_; }

    void set(std::size_t i) { w_[i >> 6] |= 1ull << (i & 63); }
    void reset(std::size_t i) { w_[i >> 6] &= ~(1ull << (i & 63)); }
    bool test(std::size_t i) const { return (w_[i >> 6] >> (i & 63)) & 1; }

    std::size_t count() const {
        std::size_t c = 0;
        for (auto w : w_) c += static_cast<std::size_t>(__builtin_popcountll(w));
        return c;
    }
    bool empty() const {
        for (auto w : w_)
            if (w) return false;
        return true;
    }

    IndexSet& operator|=(const IndexSet& o) {
        check(o);
        for (std::size_t i = 0; i < w_.size(); ++i) w_[i] |= o.w_[i];
        return *this;
    }
    IndexSet& operator&=(const IndexSet& o) {
        check(o);
        for (std::size_t i = 0; i < w_.size(); ++i) w_[i] &= o.w_[i];
        return *this;
    }
    // this \ o
    IndexSet& subtract(const IndexSet& o) {
        check(o);
        for (std::size_t i = 0; i < w_.size(); ++i) w_[i] &= ~o.w_[i];
        return *this;
    }

    friend IndexSet operator|(IndexSet a, const IndexSet& b) { return a |= b; }
    friend IndexSet operator&(IndexSet a, const IndexSet& b) { return a &= b; }

    bool intersects(const IndexSet& o) const {
        check(o);
        for (std::size_t i = 0; i < w_.size(); ++i)
            if (w_[i] & o.w_[i]) return true;
        return false;
    }
    std::size_t intersection_count(const IndexSet& o) const {
        check(o);
        std::size_t c = 0;
        for (std::size_t i = 0; i < w_.size(); ++i)
            c += static_cast<std::size_t>(__builtin_popcountll(w_[i] & o.w_[i]));
        return c;
    }

    bool operator==(const IndexSet& o) const { return d_ == o.d_ && w_ == o.w_; }

    template <typename Fn>
    void for_each(Fn fn) const {
        for (std::size_t wi = 0; wi < w_.size(); ++wi) {
            std::uint64_t w = w_[wi];
            while (w) {
                std::size_t i = wi * 64 + static_cast<std::size_t>(__builtin_ctzll(w));
                fn(i);
                w &= w - 1;
            }
        }
    }

    std::vector<std::uint32_t> to_indices() const {
        std::vector<std::uint32_t> out;
        out.reserve(count());
        for_each([&](std::size_t i) { out.push_back(static_cast<std::uint32_t>(i)); });
        return out;
    }

    static IndexSet from_indices(std::size_t ground, const std::vector<std::uint32_t>& idx) {
        IndexSet s(ground);
        for (auto i : idx) {
            if (i >= ground) throw std::out_of_range("IndexSet: index out of range");
            s.set(i);
        }
        return s;
    }

  private:
    void check(const IndexSet& o) const {
        if (d_ != o.d_) throw std::invalid_argument("IndexSet: ground size mismatch");
    }
    void trim() {
        if (d_ % 64) w_.back() &= (1ull << (d_ % 64)) - 1;
    }

    std::size_t d_ = 0;
    std::vector<std::uint64_t> w_;
};

}  // namespace sofent
