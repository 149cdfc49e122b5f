#include "support/wait_oracle.hpp"

#include <bit>

namespace macsim::testing {

namespace {

constexpr std::uint32_t kIds = 8;

std::uint32_t mask_of(const std::vector<NodeId>& ids) {
    std::uint32_t m = 0;
    for (NodeId id : ids) m |= 1u << id;
    return m;
}

BitSet values_of(const WaitState& s, std::uint32_t y) {
    BitSet out;
    for (const auto& [id, bits] : s.aux) {
        if (y >> id & 1u) out.mask |= bits.mask;
    }
    return out;
}

// The state as id masks, so the exhaustive search stays cheap.
struct Masks {
    std::uint32_t u = 0;
    std::uint32_t complete = 0;
    std::uint32_t aux_has[2] = {0, 0};
    std::uint8_t bits[kIds] = {};
};

Masks masks_of(const WaitState& s) {
    Masks m;
    for (const auto& [id, b] : s.aux) {
        m.u |= 1u << id;
        m.bits[id] = b.mask;
        for (std::uint8_t v : {0, 1}) {
            if (b.contains(v)) m.aux_has[v] |= 1u << id;
        }
    }
    for (NodeId id : s.complete) {
        if (id < kIds) m.complete |= 1u << id;
    }
    return m;
}

bool clauses(const WaitState& s, const Masks& m, std::uint32_t x, std::uint32_t y, std::uint8_t v) {
    if (static_cast<std::uint32_t>(std::popcount(x)) < 2 * s.f + 1) return false;  // 1
    if ((x & ~m.complete) != 0) return false;  // 2
    if ((x & ~m.aux_has[v]) != 0) return false;  // 3
    if (std::popcount(y) + static_cast<int>(s.f) != std::popcount(m.u)) return false;  // 4
    if ((y & ~m.u) != 0) return false;  // 5
    if ((x & ~y) != 0) return false;  // 6
    BitSet values;  // 7
    for (NodeId id = 0; id < kIds; ++id) {
        if (y >> id & 1u) values.mask |= m.bits[id];
    }
    return values.subset_of(s.est_values);  // 8
}

}  // namespace

bool wait_clauses_hold(const WaitState& s, std::uint32_t x, std::uint32_t y, std::uint8_t v) {
    return clauses(s, masks_of(s), x, y, v);
}

std::optional<BitSet> brute_force_wait(const WaitState& s) {
    const Masks m = masks_of(s);
    std::optional<BitSet> found;
    for (std::uint32_t y = 0; y < (1u << kIds); ++y) {
        for (std::uint32_t x = y;; x = (x - 1) & y) {
            for (std::uint8_t v : {std::uint8_t{0}, std::uint8_t{1}}) {
                if (clauses(s, m, x, y, v)) {
                    if (!found) found = BitSet{};
                    found->mask |= values_of(s, y).mask;
                }
            }
            if (x == 0) break;
        }
    }
    return found;
}

WaitState random_wait_state(std::mt19937_64& rng, std::uint32_t f) {
    WaitState s;
    s.f = f;
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<int> bits(1, 3);
    std::uniform_int_distribution<int> est(0, 3);
    // Skew towards states near the threshold, where the verdict is least obvious.
    std::bernoulli_distribution in_u(std::uniform_real_distribution<double>(0.4, 1.0)(rng));
    std::bernoulli_distribution single_bit(0.7);
    s.est_values.mask = static_cast<std::uint8_t>(est(rng));
    const std::uint8_t favourite = static_cast<std::uint8_t>(coin(rng));
    for (NodeId id = 0; id < kIds; ++id) {
        if (in_u(rng)) {
            BitSet b;
            if (single_bit(rng)) {
                b = BitSet::of(coin(rng) || coin(rng) ? favourite : static_cast<std::uint8_t>(1 - favourite));
            } else {
                b.mask = static_cast<std::uint8_t>(bits(rng));
            }
            s.aux[id] = b;
        }
        if (coin(rng) || coin(rng)) s.complete.insert(id);
    }
    return s;
}

WaitAgreement compare_wait(std::size_t states, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    WaitAgreement out;
    for (std::size_t k = 0; k < states; ++k) {
        const WaitState s = random_wait_state(rng, static_cast<std::uint32_t>(k % 3));
        const auto fast = check_wait(s);
        const auto slow = brute_force_wait(s);
        ++out.states;
        bool ok = fast.has_value() == slow.has_value();
        if (ok && fast) {
            ++out.satisfied;
            ok = wait_clauses_hold(s, mask_of(fast->x), mask_of(fast->y), fast->bit) &&
                 fast->values.subset_of(*slow) && fast->values == values_of(s, mask_of(fast->y));
        }
        if (!ok) ++out.mismatches;
    }
    return out;
}

}  // namespace macsim::testing
