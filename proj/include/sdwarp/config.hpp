#pragma once

#include <array>
#include <string>

#include "sdwarp/common.hpp"
#include "sdwarp/losses.hpp"
#include "sdwarp/synthetic.hpp"

namespace sdwarp {

enum class Connection { ResidualBaseline, Sequential };

struct TopologyConfig {
    Connection connection = Connection::Sequential;
    bool nonroi_removal = true;
    std::array<int, 5> channels = {32, 64, 96, 128, 128};  // encoder levels 0..4
    int label_count = kNumLabels;

    void validate() const {
        if (nonroi_removal && connection != Connection::Sequential)
            throw ConfigError("topology: nonroi_removal=on requires connection=sequential");
        for (int c : channels)
            if (c < 2) throw ConfigError("topology: channel widths must be >= 2");
    }

    // Table-3 style ablation presets: b = residual baseline, c = +sequential
    // connection, d = +non-ROI removal.
    static TopologyConfig preset(char config) {
        TopologyConfig t;
        switch (config) {
            case 'a':
            case 'b':
                t.connection = Connection::ResidualBaseline;
                t.nonroi_removal = false;
                break;
            case 'c':
                t.connection = Connection::Sequential;
                t.nonroi_removal = false;
                break;
            case 'd':
                t.connection = Connection::Sequential;
                t.nonroi_removal = true;
                break;
            default: throw ConfigError(std::string("unknown ablation config: ") + config);
        }
        return t;
    }
};

std::string connection_name(Connection c);
Connection connection_from_name(const std::string& s);

struct RunConfig {
    TopologyConfig topology;
    std::string dataset;
    std::string out_dir = "runs/default";
    int64_t height = 128, width = 96;
    int batch_size = 8;          // paper default
    double learning_rate = 2e-4;  // paper default
    int64_t iterations = 2000;    // desk-scale default; paper-scale preset 100000
    uint64_t seed = 0;
    LossWeights weights;
    bool zdist = true;  // must match topology.nonroi_removal
    int64_t log_every = 25;
    int64_t checkpoint_every = 500;
    std::array<int, 3> disc_channels = {16, 32, 48};

    void validate() const {
        topology.validate();
        weights.validate();
        if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
        if (iterations < 1) throw ConfigError("config: iterations must be >= 1");
        if (learning_rate <= 0) throw ConfigError("config: learning_rate must be positive");
        if (height % 16 != 0 || width % 16 != 0)
            throw ConfigError("config: resolution must be divisible by 16");
        if (zdist && !topology.nonroi_removal)
            throw ConfigError("config: z-dist requires topology nonroi_removal=on");
        if (!zdist && topology.nonroi_removal)
            throw ConfigError("config: nonroi_removal=on requires the z-dist term");
    }
};

// Flat UTF-8 key=value text. parse(serialize(c)) == c.
std::string serialize_config(const RunConfig& c);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);
void save_config(const RunConfig& c, const std::string& path);

}  // namespace sdwarp
