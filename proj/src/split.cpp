#include "groklab/split.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "groklab/rng.hpp"
#include "json.hpp"

namespace groklab {

namespace {

void check_fraction(double frac) {
    if (!(frac > 0.0) || frac > 1.0)
        throw std::invalid_argument("build_split: train fraction must lie in (0,1]");
}

// Remaining grid cells after the reserved region, row-major order.
std::vector<Pair> candidates_for(const TaskSpec& task, const SplitSpec& spec,
                                 std::vector<Pair>& reserved) {
    const int p = task.p;
    std::vector<Pair> out;
    if (std::holds_alternative<RandomSplit>(spec)) {
        out.reserve(static_cast<size_t>(p) * p);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) out.push_back({i, j});
        return out;
    }
    if (const auto* sq = std::get_if<SquareReserveSplit>(&spec)) {
        if (sq->k < 0 || sq->k >= p)
            throw std::invalid_argument("build_split: square bound k must satisfy 0 <= k < p");
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) {
                if (i <= sq->k && j <= sq->k) reserved.push_back({i, j});
                else out.push_back({i, j});
            }
        return out;
    }
    const auto& st = std::get<StripReserveSplit>(spec);
    if (st.t < 0 || st.t >= p)
        throw std::invalid_argument("build_split: strip bound t must satisfy 0 <= t < p");
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
            if (i <= st.t) reserved.push_back({i, j});
            else out.push_back({i, j});
        }
    return out;
}

double fraction_of(const SplitSpec& spec) {
    return std::visit([](const auto& s) { return s.train_fraction; }, spec);
}

uint64_t seed_of(const SplitSpec& spec) {
    return std::visit([](const auto& s) { return s.seed; }, spec);
}

}  // namespace

Split build_split(const TaskSpec& task, const SplitSpec& spec) {
    const double frac = fraction_of(spec);
    check_fraction(frac);

    std::vector<Pair> reserved;
    std::vector<Pair> candidates = candidates_for(task, spec, reserved);

    const auto m = static_cast<size_t>(std::floor(frac * static_cast<double>(candidates.size())));
    if (m == 0)
        throw std::invalid_argument("build_split: train fraction rounds to an empty train set");

    Rng rng = Rng::stream(seed_of(spec), StreamTag::split);
    rng.shuffle(candidates);

    Split split;
    split.train.assign(candidates.begin(), candidates.begin() + static_cast<ptrdiff_t>(m));
    split.test.assign(candidates.begin() + static_cast<ptrdiff_t>(m), candidates.end());
    split.test.insert(split.test.end(), reserved.begin(), reserved.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

std::string split_spec_name(const SplitSpec& spec) {
    if (std::holds_alternative<RandomSplit>(spec)) return "random";
    if (std::holds_alternative<SquareReserveSplit>(spec)) return "square_reserve";
    return "strip_reserve";
}

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json spec_to_json(const SplitSpec& spec) {
    ordered_json out;
    out["kind"] = split_spec_name(spec);
    if (const auto* sq = std::get_if<SquareReserveSplit>(&spec)) out["k"] = sq->k;
    if (const auto* st = std::get_if<StripReserveSplit>(&spec)) out["t"] = st->t;
    out["frac"] = fraction_of(spec);
    out["seed"] = seed_of(spec);
    return out;
}

SplitSpec spec_from_json(const ordered_json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    const double frac = j.at("frac").get<double>();
    const auto seed = j.at("seed").get<uint64_t>();
    if (kind == "random") return RandomSplit{frac, seed};
    if (kind == "square_reserve") return SquareReserveSplit{j.at("k").get<int>(), frac, seed};
    if (kind == "strip_reserve") return StripReserveSplit{j.at("t").get<int>(), frac, seed};
    throw std::invalid_argument("load_split: unknown split kind '" + kind + "'");
}

ordered_json pairs_to_json(const std::vector<Pair>& pairs) {
    ordered_json arr = ordered_json::array();
    for (const auto& pr : pairs) arr.push_back(ordered_json::array({pr.i, pr.j}));
    return arr;
}

std::vector<Pair> pairs_from_json(const ordered_json& arr) {
    std::vector<Pair> out;
    out.reserve(arr.size());
    for (const auto& e : arr) out.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
    return out;
}

}  // namespace

std::string split_to_json(const TaskSpec& task, const SplitSpec& spec, const Split& split) {
    ordered_json out;
    out["p"] = task.p;
    out["terms"] = polynomial_to_string(task.terms);
    out["offset"] = task.operand_offset;
    out["spec"] = spec_to_json(spec);
    out["train"] = pairs_to_json(split.train);
    out["test"] = pairs_to_json(split.test);
    return out.dump();
}

void save_split(const std::string& path, const TaskSpec& task, const SplitSpec& spec,
                const Split& split) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_split: cannot open " + path);
    out << split_to_json(task, spec, split) << "\n";
    if (!out) throw std::runtime_error("save_split: write failed for " + path);
}

LoadedSplit load_split(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_split: cannot open " + path);
    ordered_json j;
    in >> j;
    TaskSpec task(j.at("p").get<int>(), parse_polynomial(j.at("terms").get<std::string>()),
                  j.at("offset").get<int>());
    LoadedSplit loaded{task, spec_from_json(j.at("spec")), {}};
    loaded.split.train = pairs_from_json(j.at("train"));
    loaded.split.test = pairs_from_json(j.at("test"));
    return loaded;
}

}  // namespace groklab
