#include "groklab/composite.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "groklab/rng.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace groklab {

namespace {

std::array<uint8_t, 3> hsv_to_rgb(double h, double s, double v) {
    h = h - std::floor(h);  // wrap hue into [0,1)
    const double c = v * s;
    const double hp = h * 6.0;
    const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(hp)) {
        case 0: r = c, g = x; break;
        case 1: r = x, g = c; break;
        case 2: g = c, b = x; break;
        case 3: g = x, b = c; break;
        case 4: r = x, b = c; break;
        default: r = c, b = x; break;
    }
    const double m = v - c;
    auto to_byte = [](double f) {
        return static_cast<uint8_t>(std::lround(std::clamp(f, 0.0, 1.0) * 255.0));
    };
    return {to_byte(r + m), to_byte(g + m), to_byte(b + m)};
}

}  // namespace

std::vector<DictionaryEntry> generate_dictionary(int n, int height, int width, uint64_t seed) {
    if (n < 2) throw std::invalid_argument("generate_dictionary: n must be >= 2");
    if (height < 2 || width < 2) throw std::invalid_argument("generate_dictionary: size too small");

    std::vector<DictionaryEntry> dict;
    dict.reserve(static_cast<size_t>(n));
    for (int label = 1; label <= n; ++label) {
        Rng rng = Rng::stream(seed, StreamTag::glyphs, static_cast<uint64_t>(label));
        const double hue = static_cast<double>(label - 1) / static_cast<double>(n);
        const auto fg = hsv_to_rgb(hue, 0.85, 0.95);
        const auto bg = hsv_to_rgb(hue + 0.5, 0.80, 0.35);
        const double angle = std::numbers::pi * static_cast<double>(label - 1) / n;
        const double freq = 2.0 + static_cast<double>((label - 1) % 4);
        const double phase = 2.0 * std::numbers::pi * rng.uniform();
        const double ca = std::cos(angle), sa = std::sin(angle);

        DictionaryEntry entry;
        entry.label = label;
        entry.image = make_image(height, width);
        for (int r = 0; r < height; ++r)
            for (int c = 0; c < width; ++c) {
                const double u = (c + 0.5) * ca + (r + 0.5) * sa;
                const double s =
                    std::sin(2.0 * std::numbers::pi * freq * u / static_cast<double>(width) + phase);
                const auto& color = s >= 0.0 ? fg : bg;
                for (int ch = 0; ch < 3; ++ch) entry.image.at(r, c, ch) = color[ch];
            }
        dict.push_back(std::move(entry));
    }
    return dict;
}

std::vector<DictionaryEntry> load_dictionary(const std::string& dir, int n) {
    if (n < 2) throw std::invalid_argument("load_dictionary: n must be >= 2");
    std::vector<DictionaryEntry> dict;
    dict.reserve(static_cast<size_t>(n));
    for (int label = 1; label <= n; ++label) {
        const fs::path path = fs::path(dir) / (std::to_string(label) + ".rgb");
        if (!fs::exists(path))
            throw std::runtime_error("load_dictionary: expected " + std::to_string(n) +
                                     " entries, missing " + path.string());
        DictionaryEntry entry;
        entry.label = label;
        entry.image = load_rgb(path.string());
        if (!dict.empty() && (entry.image.height != dict[0].image.height ||
                              entry.image.width != dict[0].image.width))
            throw std::runtime_error("load_dictionary: size mismatch at " + path.string());
        dict.push_back(std::move(entry));
    }
    if (fs::exists(fs::path(dir) / (std::to_string(n + 1) + ".rgb")))
        throw std::runtime_error("load_dictionary: directory holds more than " +
                                 std::to_string(n) + " entries");
    return dict;
}

ImageRgb compose(const std::vector<DictionaryEntry>& dict,
                 const std::array<int, 4>& quadrant_labels) {
    if (dict.empty()) throw std::invalid_argument("compose: empty dictionary");
    const int h = dict[0].image.height, w = dict[0].image.width;
    ImageRgb out = make_image(2 * h, 2 * w);
    for (int q = 0; q < 4; ++q) {
        const int label = quadrant_labels[static_cast<size_t>(q)];
        if (label < 1 || label > static_cast<int>(dict.size()))
            throw std::invalid_argument("compose: quadrant label out of range");
        const ImageRgb& src = dict[static_cast<size_t>(label - 1)].image;
        const int r0 = (q / 2) * h, c0 = (q % 2) * w;
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c)
                for (int ch = 0; ch < 3; ++ch) out.at(r0 + r, c0 + c, ch) = src.at(r, c, ch);
    }
    return out;
}

CompositeSummary generate_dataset(const std::vector<DictionaryEntry>& dict,
                                  const std::string& out_dir, const CompositeConfig& config) {
    if (dict.size() < 2) throw std::invalid_argument("generate_dataset: dictionary too small");
    if (!(config.train_fraction > 0.0) || config.train_fraction > 1.0)
        throw std::invalid_argument("generate_dataset: train_fraction must lie in (0,1]");
    const int n = static_cast<int>(dict.size());
    for (int i = 0; i < n; ++i)
        if (dict[static_cast<size_t>(i)].label != i + 1)
            throw std::invalid_argument("generate_dataset: labels must be exactly 1..n");

    const fs::path root(out_dir);
    if (fs::exists(root) && !fs::is_empty(root))
        throw std::runtime_error("generate_dataset: output directory not empty: " + out_dir);

    const long long count = static_cast<long long>(n) * n * n * n;
    std::vector<long long> order(static_cast<size_t>(count));
    for (long long i = 0; i < count; ++i) order[static_cast<size_t>(i)] = i;
    Rng rng = Rng::stream(config.seed, StreamTag::composite_split);
    rng.shuffle(order);
    const auto train_count =
        static_cast<long long>(std::floor(config.train_fraction * static_cast<double>(count)));
    std::vector<uint8_t> is_train(static_cast<size_t>(count), 0);
    for (long long k = 0; k < train_count; ++k) is_train[static_cast<size_t>(order[k])] = 1;

    CompositeSummary summary;
    try {
        fs::create_directories(root / "images");
        fs::create_directories(root / "dict");
        for (const auto& entry : dict)
            save_png((root / "dict" / (std::to_string(entry.label) + ".png")).string(),
                     entry.image);

        std::ofstream manifest(root / "manifest.csv", std::ios::binary);
        if (!manifest)
            throw std::runtime_error("generate_dataset: cannot write manifest.csv");
        manifest << "filename,q1,q2,q3,q4,label,split\n";

        char name[32];
        for (long long idx = 0; idx < count; ++idx) {
            std::array<int, 4> q{};
            long long rest = idx;
            for (int k = 3; k >= 0; --k) {
                q[static_cast<size_t>(k)] = static_cast<int>(rest % n) + 1;
                rest /= n;
            }
            const int label = q[0] + q[1] + q[2] + q[3];
            summary.label_histogram[label] += 1;

            std::snprintf(name, sizeof name, "sample_%06lld", idx);
            const ImageRgb img = compose(dict, q);
            save_png((root / "images" / (std::string(name) + ".png")).string(), img);
            if (config.rgb_sidecar)
                save_rgb((root / "images" / (std::string(name) + ".rgb")).string(), img);

            manifest << "images/" << name << ".png," << q[0] << "," << q[1] << "," << q[2] << ","
                     << q[3] << "," << label << ","
                     << (is_train[static_cast<size_t>(idx)] ? "train" : "test") << "\n";
        }
        manifest.flush();
        if (!manifest) throw std::runtime_error("generate_dataset: manifest write failed");
        manifest.close();

        nlohmann::ordered_json meta;
        meta["n"] = n;
        meta["seed"] = config.seed;
        meta["quadrant_height"] = dict[0].image.height;
        meta["quadrant_width"] = dict[0].image.width;
        meta["image_height"] = 2 * dict[0].image.height;
        meta["image_width"] = 2 * dict[0].image.width;
        meta["samples"] = count;
        meta["train_fraction"] = config.train_fraction;
        meta["train_count"] = train_count;
        std::ofstream meta_out(root / "meta.json", std::ios::binary);
        if (!meta_out) throw std::runtime_error("generate_dataset: cannot write meta.json");
        meta_out << meta.dump(2) << "\n";
        if (!meta_out) throw std::runtime_error("generate_dataset: meta write failed");
    } catch (...) {
        std::error_code ec;
        fs::remove_all(root, ec);  // partial output is useless; surface the original error
        throw;
    }

    summary.samples = count;
    summary.train_count = train_count;
    return summary;
}

}  // namespace groklab
