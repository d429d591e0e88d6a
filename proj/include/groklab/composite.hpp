#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "groklab/png.hpp"

namespace groklab {

// Dictionary of n base glyphs labeled 1..n. Composites tile four of them in
// a 2x2 grid; the composite's label is the sum of its quadrant labels.
struct DictionaryEntry {
    int label = 0;
    ImageRgb image;
};

// Synthetic parametric glyphs (hue + stripe angle/frequency vary per entry,
// phases seeded) that pairwise differ in at least 10% of pixels.
std::vector<DictionaryEntry> generate_dictionary(int n, int height, int width, uint64_t seed);

// Loads entries from <dir>/1.rgb .. <dir>/n.rgb; any missing file, an extra
// <dir>/(n+1).rgb, or inconsistent sizes is a count/shape mismatch error.
std::vector<DictionaryEntry> load_dictionary(const std::string& dir, int n);

// 2x2 tiling: quadrant_labels = (top-left, top-right, bottom-left, bottom-right).
ImageRgb compose(const std::vector<DictionaryEntry>& dict,
                 const std::array<int, 4>& quadrant_labels);

struct CompositeConfig {
    int quadrant_height = 56;
    int quadrant_width = 56;
    double train_fraction = 0.25;
    uint64_t seed = 0;
    bool rgb_sidecar = false;  // also write images/*.rgb raw files
};

struct CompositeSummary {
    long long samples = 0;
    long long train_count = 0;
    std::map<int, long long> label_histogram;
};

// Writes all n^4 ordered 4-tuples in lexicographic order:
//   out_dir/images/sample_XXXXXX.png        (XXXXXX = zero-padded index)
//   out_dir/dict/<label>.png                (the base glyphs, for inspection)
//   out_dir/manifest.csv                    filename,q1,q2,q3,q4,label,split
//   out_dir/meta.json
// out_dir must not already contain files; on any write failure the partial
// output is removed before the error propagates.
CompositeSummary generate_dataset(const std::vector<DictionaryEntry>& dict,
                                  const std::string& out_dir, const CompositeConfig& config);

}  // namespace groklab
