#pragma once

// Property-suite support shared by the unit tests and the acceptance binary:
// a hand-rolled deterministic generator plus one checker per memory-stream
// law. Each checker runs `cases` generated cases and throws on violation.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "streetagents/memory.hpp"

namespace memprops {

struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ull;
        std::uint64_t x = state;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

    std::uint64_t below(std::uint64_t n) { return n ? next() % n : 0; }

    int range(int lo, int hi) { // inclusive
        return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }
};

inline std::string random_text(Rng& rng, int min_len, int max_len) {
    static const char kAlphabet[] = "abcdefghijklmnopqrstuvwxyz ._";
    const int len = rng.range(min_len, max_len);
    std::string out;
    out.reserve(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) {
        out += kAlphabet[rng.below(sizeof(kAlphabet) - 1)];
    }
    if (out.find_first_not_of(' ') == std::string::npos) out[0] = 'x';
    return out;
}

inline streetagents::MemoryStream random_stream(Rng& rng, int max_entries) {
    streetagents::MemoryStream stream("prop-agent");
    const int n = rng.range(0, max_entries);
    std::int64_t ts = 1'000'000 + static_cast<std::int64_t>(rng.below(1'000'000));
    for (int i = 0; i < n; ++i) {
        ts += static_cast<std::int64_t>(rng.below(120));
        stream.record(random_text(rng, 1, 60), rng.range(1, 10), ts);
    }
    return stream;
}

[[noreturn]] inline void fail(const std::string& what) {
    throw std::runtime_error("memory property violated: " + what);
}

// retrieve(k): importance descending, ties newer first, size = min(k, n),
// every element a member of the stream.
inline int check_retrieve_ordering(std::uint64_t seed, int cases) {
    Rng rng(seed);
    for (int c = 0; c < cases; ++c) {
        const auto stream = random_stream(rng, 40);
        const auto k = static_cast<std::size_t>(rng.range(1, 50));
        const auto got = stream.retrieve(k);

        if (got.size() != std::min(k, stream.size())) fail("result size");

        // Independent expectation: decorate-sort-undecorate on (importance, index).
        std::vector<std::pair<int, std::size_t>> order;
        for (std::size_t i = 0; i < stream.entries().size(); ++i) {
            order.emplace_back(stream.entries()[i].importance, i);
        }
        std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second > b.second; // later index = newer
        });
        for (std::size_t i = 0; i < got.size(); ++i) {
            if (!(got[i] == stream.entries()[order[i].second])) fail("ordering");
        }
    }
    return cases;
}

// record() accepts monotone timestamps and rejects every regression.
inline int check_monotone_timestamps(std::uint64_t seed, int cases) {
    Rng rng(seed);
    for (int c = 0; c < cases; ++c) {
        streetagents::MemoryStream stream("prop-agent");
        std::int64_t last = -1;
        const int attempts = rng.range(1, 30);
        for (int i = 0; i < attempts; ++i) {
            const std::int64_t ts = static_cast<std::int64_t>(rng.below(1000));
            const std::size_t before = stream.size();
            const bool regresses = !stream.empty() && ts < last;
            try {
                stream.record(random_text(rng, 1, 20), rng.range(1, 10), ts);
                if (regresses) fail("regression accepted");
                if (stream.size() != before + 1) fail("append count");
                last = ts;
            } catch (const streetagents::ValidationError&) {
                if (!regresses) fail("monotone record rejected");
                if (stream.size() != before) fail("failed record mutated stream");
            }
        }
        for (std::size_t i = 1; i < stream.entries().size(); ++i) {
            if (stream.entries()[i].timestamp < stream.entries()[i - 1].timestamp) {
                fail("stored timestamps not monotone");
            }
        }
    }
    return cases;
}

// render_context output never exceeds the token budget.
inline int check_render_budget(std::uint64_t seed, int cases) {
    Rng rng(seed);
    for (int c = 0; c < cases; ++c) {
        const auto stream = random_stream(rng, 25);
        const int budget = rng.range(1, 400);
        const auto entries = stream.retrieve(static_cast<std::size_t>(rng.range(1, 30)));
        const std::string block = streetagents::render_context(entries, budget);
        if (streetagents::estimate_tokens(block) > budget) fail("budget exceeded");
    }
    return cases;
}

// Appending an entry less important than the current k-th result leaves
// retrieve(k) unchanged.
inline int check_retrieve_stability(std::uint64_t seed, int cases) {
    Rng rng(seed);
    int checked = 0;
    while (checked < cases) {
        auto stream = random_stream(rng, 40);
        const auto k = static_cast<std::size_t>(rng.range(1, 10));
        const auto before = stream.retrieve(k);
        if (before.size() < k) continue; // need a full top-k with headroom below it
        const int kth = before.back().importance;
        if (kth <= 1) continue;
        const std::int64_t ts =
            stream.entries().back().timestamp + static_cast<std::int64_t>(rng.below(60));
        stream.record(random_text(rng, 1, 20), rng.range(1, kth - 1), ts);
        const auto after = stream.retrieve(k);
        if (after.size() != before.size()) fail("stability size");
        for (std::size_t i = 0; i < before.size(); ++i) {
            if (!(before[i] == after[i])) fail("stability ordering");
        }
        ++checked;
    }
    return checked;
}

// A fresh stream is empty regardless of owner.
inline int check_fresh_streams(std::uint64_t seed, int cases) {
    Rng rng(seed);
    for (int c = 0; c < cases; ++c) {
        streetagents::MemoryStream stream(random_text(rng, 1, 12));
        if (!stream.empty() || stream.size() != 0) fail("fresh stream not empty");
        if (!stream.retrieve(5).empty()) fail("fresh stream retrieves entries");
    }
    return cases;
}

} // namespace memprops
