#include "sdwarp/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "sdwarp/io_png.hpp"
#include "sdwarp/rng.hpp"

namespace fs = std::filesystem;

namespace sdwarp {

namespace {

std::string sample_dir_name(int64_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "sample_%04lld", static_cast<long long>(i));
    return buf;
}

void write_mask_png(const std::string& path, const Tensor<float>& m) {
    GrayImage img;
    img.height = m.dim(1);
    img.width = m.dim(2);
    img.bit_depth = 8;
    img.pixels.resize(static_cast<size_t>(img.height * img.width));
    for (int64_t i = 0; i < m.numel(); ++i) img.pixels[static_cast<size_t>(i)] = m[i] >= 0.5f ? 255 : 0;
    write_gray_png(path, img);
}

Tensor<float> read_mask_png(const std::string& path, const std::string& sample_id) {
    if (!fs::exists(path))
        throw FormatError("dataset: missing mask file " + path + " (sample " + sample_id + ")");
    GrayImage img = read_gray_png(path);
    Tensor<float> m({1, img.height, img.width});
    for (int64_t i = 0; i < m.numel(); ++i)
        m[i] = img.pixels[static_cast<size_t>(i)] >= 128 ? 1.0f : 0.0f;
    return m;
}

void write_label_png(const std::string& path, const Tensor<int32_t>& s) {
    GrayImage img;
    img.height = s.dim(0);
    img.width = s.dim(1);
    img.bit_depth = 16;
    img.pixels.resize(static_cast<size_t>(img.height * img.width));
    for (int64_t i = 0; i < s.numel(); ++i) img.pixels[static_cast<size_t>(i)] = static_cast<uint16_t>(s[i]);
    write_gray_png(path, img);
}

Tensor<int32_t> read_label_png(const std::string& path, const std::string& sample_id) {
    if (!fs::exists(path))
        throw FormatError("dataset: missing label file " + path + " (sample " + sample_id + ")");
    GrayImage img = read_gray_png(path);
    Tensor<int32_t> s({img.height, img.width});
    for (int64_t i = 0; i < s.numel(); ++i) s[i] = static_cast<int32_t>(img.pixels[static_cast<size_t>(i)]);
    return s;
}

Tensor<float> read_ten(const std::string& path, const std::string& sample_id) {
    if (!fs::exists(path))
        throw FormatError("dataset: missing tensor file " + path + " (sample " + sample_id + ")");
    return read_tensor_f32(path);
}

std::map<std::string, std::string> read_kv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("dataset: cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("dataset: malformed line in " + path);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

}  // namespace

void write_dataset(const std::vector<Sample>& samples, const std::string& dir) {
    if (samples.empty()) throw ArgumentError("write_dataset: no samples");
    fs::create_directories(dir);
    const int64_t H = samples[0].height(), W = samples[0].width();

    std::ofstream manifest(fs::path(dir) / "manifest.txt");
    if (!manifest) throw FormatError("write_dataset: cannot write manifest in " + dir);
    manifest << "format_version=" << kDatasetFormatVersion << "\n";
    manifest << "height=" << H << "\n";
    manifest << "width=" << W << "\n";
    manifest << "count=" << samples.size() << "\n";
    for (size_t i = 0; i < samples.size(); ++i)
        manifest << sample_dir_name(static_cast<int64_t>(i)) << "="
                 << scenario_name(samples[i].scenario) << " " << samples[i].seed << "\n";
    manifest.close();

    for (size_t i = 0; i < samples.size(); ++i) {
        const Sample& s = samples[i];
        if (s.height() != H || s.width() != W)
            throw ArgumentError("write_dataset: inconsistent resolutions");
        const fs::path sd = fs::path(dir) / sample_dir_name(static_cast<int64_t>(i));
        fs::create_directories(sd);
        write_tensor_f32((sd / "person.ten").string(), s.person);
        write_tensor_f32((sd / "clothes.ten").string(), s.clothes);
        write_tensor_f32((sd / "pose.ten").string(), s.pose);
        write_tensor_f32((sd / "agnostic_image.ten").string(), s.agnostic);
        write_tensor_f32((sd / "gt_warped_clothes.ten").string(), s.gt_warped);
        write_label_png((sd / "seg.png").string(), s.seg);
        write_label_png((sd / "agnostic_seg.png").string(), s.agnostic_seg);
        write_mask_png((sd / "clothes_mask.png").string(), s.clothes_mask);
        write_mask_png((sd / "gt_clothes_region.png").string(), s.gt_clothes_region);
        write_mask_png((sd / "torso_mask.png").string(), s.torso_mask);
        write_mask_png((sd / "nonroi_mask.png").string(), s.nonroi_mask);

        std::ofstream meta(sd / "meta.txt");
        meta << "scenario=" << scenario_name(s.scenario) << "\n";
        meta << "texture=" << texture_name(s.texture) << "\n";
        meta << "seed=" << s.seed << "\n";
        meta << "height=" << H << "\n";
        meta << "width=" << W << "\n";
        meta << "shoulder_y=" << s.geom.shoulder_y << "\n";
        meta << "waist_y=" << s.geom.waist_y << "\n";
        meta << "hip_y=" << s.geom.hip_y << "\n";
        meta << "crop_y=" << s.geom.crop_y << "\n";
        meta << "flat_period=" << s.geom.flat_period << "\n";
        meta << "arm_angle_deg=" << s.geom.arm_angle_deg << "\n";
    }
}

Dataset read_dataset(const std::string& dir) {
    const fs::path manifest_path = fs::path(dir) / "manifest.txt";
    if (!fs::exists(manifest_path))
        throw FormatError("read_dataset: missing manifest in " + dir);
    auto kv = read_kv(manifest_path.string());
    if (!kv.count("format_version"))
        throw FormatError("read_dataset: manifest missing format_version in " + dir);
    const int version = std::stoi(kv.at("format_version"));
    if (version != kDatasetFormatVersion)
        throw FormatError("read_dataset: manifest format_version " + std::to_string(version) +
                          " != supported " + std::to_string(kDatasetFormatVersion));
    Dataset ds;
    ds.dir = dir;
    ds.height = std::stoll(kv.at("height"));
    ds.width = std::stoll(kv.at("width"));
    const int64_t count = std::stoll(kv.at("count"));

    for (int64_t i = 0; i < count; ++i) {
        const std::string id = sample_dir_name(i);
        if (!kv.count(id)) throw FormatError("read_dataset: manifest missing entry " + id);
        const fs::path sd = fs::path(dir) / id;
        if (!fs::exists(sd)) throw FormatError("read_dataset: missing sample directory " + id);

        Sample s;
        std::istringstream entry(kv.at(id));
        std::string scen;
        uint64_t seed = 0;
        entry >> scen >> seed;
        s.scenario = scenario_from_name(scen);
        s.seed = seed;

        s.person = read_ten((sd / "person.ten").string(), id);
        s.clothes = read_ten((sd / "clothes.ten").string(), id);
        s.pose = read_ten((sd / "pose.ten").string(), id);
        s.agnostic = read_ten((sd / "agnostic_image.ten").string(), id);
        s.gt_warped = read_ten((sd / "gt_warped_clothes.ten").string(), id);
        s.seg = read_label_png((sd / "seg.png").string(), id);
        s.agnostic_seg = read_label_png((sd / "agnostic_seg.png").string(), id);
        s.clothes_mask = read_mask_png((sd / "clothes_mask.png").string(), id);
        s.gt_clothes_region = read_mask_png((sd / "gt_clothes_region.png").string(), id);
        s.torso_mask = read_mask_png((sd / "torso_mask.png").string(), id);
        s.nonroi_mask = read_mask_png((sd / "nonroi_mask.png").string(), id);

        auto meta = read_kv((sd / "meta.txt").string());
        s.texture = texture_from_name(meta.at("texture"));
        s.geom.shoulder_y = std::stoi(meta.at("shoulder_y"));
        s.geom.waist_y = std::stoi(meta.at("waist_y"));
        s.geom.hip_y = std::stoi(meta.at("hip_y"));
        s.geom.crop_y = std::stoi(meta.at("crop_y"));
        s.geom.flat_period = std::stoi(meta.at("flat_period"));
        s.geom.arm_angle_deg = std::stod(meta.at("arm_angle_deg"));
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

std::vector<std::pair<int, int>> make_splits(const Dataset& ds, SplitMode mode, uint64_t seed) {
    const int n = static_cast<int>(ds.size());
    if (n == 0) throw ArgumentError("make_splits: empty dataset");
    std::vector<std::pair<int, int>> out;
    if (mode == SplitMode::Paired) {
        for (int i = 0; i < n; ++i) out.emplace_back(i, i);
        return out;
    }
    if (n < 2) throw ArgumentError("make_splits: unpaired requires at least 2 samples");
    Rng rng(Rng::derive(seed, 0xD37A));
    auto perm = rng.derangement(n);
    for (int i = 0; i < n; ++i) out.emplace_back(i, perm[static_cast<size_t>(i)]);
    return out;
}

}  // namespace sdwarp
