#include "sentifuse/rng.hpp"

#include <algorithm>
#include <unordered_set>

namespace sentifuse::rng {

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k,
                                        Engine& engine) {
    if (k >= n) {
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        return all;
    }
    // Floyd's algorithm: k iterations, no O(n) scratch.
    std::unordered_set<std::size_t> chosen;
    chosen.reserve(k * 2);
    for (std::size_t j = n - k; j < n; ++j) {
        const std::size_t t = engine.bounded(j + 1);
        if (!chosen.insert(t).second) chosen.insert(j);
    }
    std::vector<std::size_t> out(chosen.begin(), chosen.end());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace sentifuse::rng
