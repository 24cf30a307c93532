#pragma once

#include "srheat/vector_field.hpp"

#include <optional>
#include <string>
#include <vector>

namespace srheat {

struct HormanderViolation : std::runtime_error {
    int max_depth;
    explicit HormanderViolation(int depth)
        : std::runtime_error("bracket span did not reach full rank at depth " + std::to_string(depth) +
                             " (genuine violation or insufficient max_depth)"),
          max_depth(depth)
    {
    }
};

// One member of the adapted bracket frame, with the bracket depth it came from.
struct BracketFrameEntry {
    PolyVectorField field;
    int depth;       // bracket length (1 = a generator)
    std::string word;  // e.g. "[X1,[X1,X2]]", for reports
};

// sR flag data at a point.
struct FlagData {
    std::vector<int> growth_vector;  // n_1 <= ... <= n_r = dim
    Weights weights;
    int r = 0;   // degree of nonholonomy
    long Q = 0;  // Hausdorff dimension, sum of weights
    std::vector<BracketFrameEntry> bracket_frame;  // adapted frame, ordered by weight
};

// Computes the flag at a rational point by exact bracket evaluation and
// rational rank. Throws HormanderViolation if the span does not reach R^n by
// max_depth.
FlagData compute_flag(const std::vector<PolyVectorField>& fields,
                      const std::vector<Rational>& point, int max_depth = 10);

struct RegularityReport {
    bool regular;  // "no counterexample found" when true
    std::optional<std::vector<Rational>> witness;
    std::vector<int> base_growth;
    std::vector<int> witness_growth;  // growth vector at witness (maybe shorter/longer)
};

// Sampling-based regularity test: probes rational points within probe_radius
// and compares growth vectors against the base point's.
RegularityReport is_regular(const std::vector<PolyVectorField>& fields,
                            const std::vector<Rational>& point, double probe_radius,
                            int probe_count, std::uint64_t rng_seed, int max_depth = 10);

// ||x||_sR = sum_i |x_i|^{1/w_i}; satisfies ||delta_eps x|| = |eps| ||x||.
double sr_pseudo_norm(const std::vector<double>& x, const Weights& w);

// Exact rank of a set of rational vectors (Gaussian elimination).
int rational_rank(std::vector<std::vector<Rational>> rows);

std::string flag_to_json(const FlagData& f);

} // namespace srheat
