#pragma once

#include <string>
#include <variant>
#include <vector>

#include "groklab/task.hpp"

namespace groklab {

// Train/test partitions of the p x p operand grid.
//
// Random:        hold out a uniform sample of the whole grid.
// SquareReserve: force every pair with i <= k and j <= k into the test set,
//                then sample train from the remainder.
// StripReserve:  force every pair with i <= t into the test set.
struct RandomSplit {
    double train_fraction = 0.3;
    uint64_t seed = 0;
};

struct SquareReserveSplit {
    int k = 0;
    double train_fraction = 0.3;
    uint64_t seed = 0;
};

struct StripReserveSplit {
    int t = 0;
    double train_fraction = 0.3;
    uint64_t seed = 0;
};

using SplitSpec = std::variant<RandomSplit, SquareReserveSplit, StripReserveSplit>;

struct Split {
    std::vector<Pair> train;
    std::vector<Pair> test;
};

// Deterministic for a given (task, spec). Train size is
// floor(train_fraction * |candidates|) where candidates excludes any
// reserved region; everything not drawn into train lands in test.
// Throws std::invalid_argument on out-of-range fractions / reserve bounds
// or when the resulting train set would be empty.
Split build_split(const TaskSpec& task, const SplitSpec& spec);

std::string split_spec_name(const SplitSpec& spec);

// JSON round-trip: {"p":..,"terms":"i+j","offset":..,"spec":{...},"train":[[i,j],..],"test":[[i,j],..]}
std::string split_to_json(const TaskSpec& task, const SplitSpec& spec, const Split& split);
void save_split(const std::string& path, const TaskSpec& task, const SplitSpec& spec, const Split& split);

struct LoadedSplit {
    TaskSpec task;
    SplitSpec spec;
    Split split;
};
LoadedSplit load_split(const std::string& path);

}  // namespace groklab
