#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sdwarp/synthetic.hpp"

namespace sdwarp {

inline constexpr int kDatasetFormatVersion = 1;

struct Dataset {
    std::vector<Sample> samples;
    int64_t height = 0, width = 0;
    std::string dir;

    int64_t size() const { return static_cast<int64_t>(samples.size()); }
    bool has_scenario(ScenarioKind k) const {
        for (const auto& s : samples)
            if (s.scenario == k) return true;
        return false;
    }
};

// One directory per sample plus a manifest carrying scenario, seed,
// resolution and format version. Round trip is bitwise lossless: label maps
// as 16-bit gray PNG, binary masks as 8-bit gray PNG (0/255), real-valued
// tensors in the raw ".ten" container.
void write_dataset(const std::vector<Sample>& samples, const std::string& dir);
Dataset read_dataset(const std::string& dir);

enum class SplitMode { Paired, Unpaired };

// Paired: (i,i). Unpaired: a seeded derangement (no fixed points).
std::vector<std::pair<int, int>> make_splits(const Dataset& ds, SplitMode mode, uint64_t seed);

}  // namespace sdwarp
