#pragma once

#include <map>
#include <string>
#include <vector>

#include "sdwarp/tensor.hpp"

namespace sdwarp {

// Binary parameter container: a text manifest (topology, version, step)
// followed by an ordered table of named little-endian float32 tensors.
struct Checkpoint {
    std::map<std::string, std::string> manifest;
    std::vector<std::pair<std::string, Tensor<float>>> entries;

    const Tensor<float>* find(const std::string& name) const {
        for (const auto& [n, t] : entries)
            if (n == name) return &t;
        return nullptr;
    }
};

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace sdwarp
