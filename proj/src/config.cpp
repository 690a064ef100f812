#include "sdwarp/config.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace sdwarp {

std::string connection_name(Connection c) {
    return c == Connection::ResidualBaseline ? "residual_baseline" : "sequential";
}

Connection connection_from_name(const std::string& s) {
    if (s == "residual_baseline") return Connection::ResidualBaseline;
    if (s == "sequential") return Connection::Sequential;
    throw ConfigError("unknown connection: " + s);
}

std::string serialize_config(const RunConfig& c) {
    std::ostringstream os;
    os.precision(17);
    os << "connection=" << connection_name(c.topology.connection) << "\n";
    os << "nonroi_removal=" << (c.topology.nonroi_removal ? "on" : "off") << "\n";
    os << "channels=" << c.topology.channels[0] << "," << c.topology.channels[1] << ","
       << c.topology.channels[2] << "," << c.topology.channels[3] << ","
       << c.topology.channels[4] << "\n";
    os << "label_count=" << c.topology.label_count << "\n";
    os << "dataset=" << c.dataset << "\n";
    os << "out_dir=" << c.out_dir << "\n";
    os << "height=" << c.height << "\n";
    os << "width=" << c.width << "\n";
    os << "batch_size=" << c.batch_size << "\n";
    os << "learning_rate=" << c.learning_rate << "\n";
    os << "iterations=" << c.iterations << "\n";
    os << "seed=" << c.seed << "\n";
    os << "lambda_ce=" << c.weights.lambda_ce << "\n";
    os << "lambda_l1=" << c.weights.lambda_l1 << "\n";
    os << "lambda_tv=" << c.weights.lambda_tv << "\n";
    os << "z0=" << c.weights.z0 << "\n";
    os << "z1=" << c.weights.z1 << "\n";
    os << "zdist=" << (c.zdist ? "on" : "off") << "\n";
    os << "log_every=" << c.log_every << "\n";
    os << "checkpoint_every=" << c.checkpoint_every << "\n";
    os << "disc_channels=" << c.disc_channels[0] << "," << c.disc_channels[1] << ","
       << c.disc_channels[2] << "\n";
    return os.str();
}

RunConfig parse_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config: malformed line: " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    RunConfig c;
    auto get = [&](const char* key) -> const std::string* {
        auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    auto parse_on_off = [](const std::string& v, const char* key) {
        if (v == "on") return true;
        if (v == "off") return false;
        throw ConfigError(std::string("config: ") + key + " must be on/off, got " + v);
    };
    if (auto* v = get("connection")) c.topology.connection = connection_from_name(*v);
    if (auto* v = get("nonroi_removal"))
        c.topology.nonroi_removal = parse_on_off(*v, "nonroi_removal");
    if (auto* v = get("channels")) {
        std::istringstream cs(*v);
        std::string tok;
        for (int i = 0; i < 5; ++i) {
            if (!std::getline(cs, tok, ',')) throw ConfigError("config: channels needs 5 entries");
            c.topology.channels[static_cast<size_t>(i)] = std::stoi(tok);
        }
    }
    if (auto* v = get("label_count")) c.topology.label_count = std::stoi(*v);
    if (auto* v = get("dataset")) c.dataset = *v;
    if (auto* v = get("out_dir")) c.out_dir = *v;
    if (auto* v = get("height")) c.height = std::stoll(*v);
    if (auto* v = get("width")) c.width = std::stoll(*v);
    if (auto* v = get("batch_size")) c.batch_size = std::stoi(*v);
    if (auto* v = get("learning_rate")) c.learning_rate = std::stod(*v);
    if (auto* v = get("iterations")) c.iterations = std::stoll(*v);
    if (auto* v = get("seed")) c.seed = std::stoull(*v);
    if (auto* v = get("lambda_ce")) c.weights.lambda_ce = std::stod(*v);
    if (auto* v = get("lambda_l1")) c.weights.lambda_l1 = std::stod(*v);
    if (auto* v = get("lambda_tv")) c.weights.lambda_tv = std::stod(*v);
    if (auto* v = get("z0")) c.weights.z0 = std::stod(*v);
    if (auto* v = get("z1")) c.weights.z1 = std::stod(*v);
    if (auto* v = get("zdist"))
        c.zdist = parse_on_off(*v, "zdist");
    else
        c.zdist = c.topology.nonroi_removal;
    if (auto* v = get("log_every")) c.log_every = std::stoll(*v);
    if (auto* v = get("checkpoint_every")) c.checkpoint_every = std::stoll(*v);
    if (auto* v = get("disc_channels")) {
        std::istringstream cs(*v);
        std::string tok;
        for (int i = 0; i < 3; ++i) {
            if (!std::getline(cs, tok, ','))
                throw ConfigError("config: disc_channels needs 3 entries");
            c.disc_channels[static_cast<size_t>(i)] = std::stoi(tok);
        }
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_config_text(buf.str());
}

void save_config(const RunConfig& c, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("config: cannot write " + path);
    os << serialize_config(c);
}

}  // namespace sdwarp
