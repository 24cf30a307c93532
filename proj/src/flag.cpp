#include "srheat/flag.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <random>

namespace srheat {

using nlohmann::json;

int rational_rank(std::vector<std::vector<Rational>> rows)
{
    if (rows.empty()) return 0;
    const std::size_t ncol = rows.front().size();
    std::size_t rank = 0;
    for (std::size_t col = 0; col < ncol && rank < rows.size(); ++col) {
        std::size_t pivot = rank;
        while (pivot < rows.size() && rows[pivot][col] == 0) ++pivot;
        if (pivot == rows.size()) continue;
        std::swap(rows[rank], rows[pivot]);
        for (std::size_t i = rank + 1; i < rows.size(); ++i) {
            if (rows[i][col] == 0) continue;
            Rational f = rows[i][col] / rows[rank][col];
            for (std::size_t j = col; j < ncol; ++j) rows[i][j] -= f * rows[rank][j];
        }
        ++rank;
    }
    return static_cast<int>(rank);
}

namespace {

struct BracketCandidate {
    PolyVectorField field;
    int depth;
    std::string word;
};

// Left-normed bracket words [X_i, previous], enumerated in lexicographic
// order within each depth. D^{k+1} = D^k + [D, D^k].
std::vector<BracketCandidate> bracket_level(const std::vector<PolyVectorField>& gens,
                                            const std::vector<BracketCandidate>& prev)
{
    std::vector<BracketCandidate> out;
    for (std::size_t i = 0; i < gens.size(); ++i) {
        for (const auto& b : prev) {
            PolyVectorField br = lie_bracket(gens[i], b.field);
            if (br.is_zero()) continue;
            out.push_back({std::move(br), b.depth + 1,
                           "[X" + std::to_string(i + 1) + "," + b.word + "]"});
        }
    }
    return out;
}

} // namespace

FlagData compute_flag(const std::vector<PolyVectorField>& fields,
                      const std::vector<Rational>& point, int max_depth)
{
    if (fields.empty()) throw std::invalid_argument("compute_flag: no fields");
    const int n = fields.front().dim();
    for (const auto& f : fields)
        if (f.dim() != n) throw DimensionMismatch("compute_flag: field dim mismatch");
    if (static_cast<int>(point.size()) != n) throw DimensionMismatch("compute_flag: point dim mismatch");
    if (max_depth < 1) throw std::invalid_argument("compute_flag: max_depth must be >= 1");

    FlagData flag;
    std::vector<std::vector<Rational>> frame_rows;  // values at point of chosen frame
    std::vector<BracketCandidate> level;
    for (std::size_t i = 0; i < fields.size(); ++i)
        level.push_back({fields[i], 1, "X" + std::to_string(i + 1)});

    int rank = 0;
    for (int depth = 1; depth <= max_depth && rank < n; ++depth) {
        if (depth > 1) {
            // brackets of the generators with the previous level
            level = bracket_level(fields, level);
            if (level.empty()) break;  // Lie algebra saturated below full rank
        }
        // greedy adapted-frame selection in lexicographic word order
        for (const auto& cand : level) {
            std::vector<Rational> v = cand.field.evaluate(point);
            auto trial = frame_rows;
            trial.push_back(v);
            if (rational_rank(trial) > rank) {
                frame_rows = std::move(trial);
                ++rank;
                flag.bracket_frame.push_back({cand.field, cand.depth, cand.word});
                if (rank == n) break;
            }
        }
        flag.growth_vector.push_back(rank);
    }

    if (rank < n) throw HormanderViolation(max_depth);

    flag.r = static_cast<int>(flag.growth_vector.size());
    std::vector<int> w;
    int prev = 0;
    for (int j = 0; j < flag.r; ++j) {
        for (int k = prev; k < flag.growth_vector[j]; ++k) w.push_back(j + 1);
        prev = flag.growth_vector[j];
    }
    flag.weights = Weights(w);
    flag.Q = flag.weights.Q();

    // cross-check the two Hausdorff-dimension formulas
    long q2 = 0;
    prev = 0;
    for (int j = 0; j < flag.r; ++j) {
        q2 += static_cast<long>(j + 1) * (flag.growth_vector[j] - prev);
        prev = flag.growth_vector[j];
    }
    if (q2 != flag.Q) throw std::logic_error("compute_flag: Q formulas disagree");
    return flag;
}

RegularityReport is_regular(const std::vector<PolyVectorField>& fields,
                            const std::vector<Rational>& point, double probe_radius,
                            int probe_count, std::uint64_t rng_seed, int max_depth)
{
    if (probe_count < 1) throw std::invalid_argument("is_regular: probe_count must be >= 1");
    const int n = static_cast<int>(point.size());
    FlagData base = compute_flag(fields, point, max_depth);

    RegularityReport rep;
    rep.regular = true;
    rep.base_growth = base.growth_vector;

    // rational probes: offsets k/denom scaled to probe_radius
    std::mt19937_64 rng(rng_seed);
    const long denom = 64;
    std::uniform_int_distribution<long> pick(-denom, denom);
    // probe_radius as a nearby rational
    Rational radius(static_cast<long>(std::llround(probe_radius * 1024.0)), 1024);

    for (int s = 0; s < probe_count; ++s) {
        std::vector<Rational> q = point;
        for (int i = 0; i < n; ++i) q[i] += radius * Rational(pick(rng), denom);
        std::vector<int> growth;
        try {
            growth = compute_flag(fields, q, max_depth).growth_vector;
        } catch (const HormanderViolation&) {
            throw;  // propagate per contract
        }
        if (growth != rep.base_growth) {
            rep.regular = false;
            rep.witness = q;
            rep.witness_growth = growth;
            return rep;
        }
    }
    return rep;
}

double sr_pseudo_norm(const std::vector<double>& x, const Weights& w)
{
    if (static_cast<int>(x.size()) != w.dim())
        throw DimensionMismatch("sr_pseudo_norm: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        s += std::pow(std::abs(x[i]), 1.0 / w.w[i]);
    return s;
}

std::string flag_to_json(const FlagData& f)
{
    json j;
    j["growth_vector"] = f.growth_vector;
    j["weights"] = f.weights.w;
    j["r"] = f.r;
    j["Q"] = f.Q;
    json frame = json::array();
    for (const auto& e : f.bracket_frame) {
        json fe;
        fe["word"] = e.word;
        fe["depth"] = e.depth;
        frame.push_back(fe);
    }
    j["bracket_frame"] = frame;
    return j.dump();
}

} // namespace srheat
