#pragma once

#include "srheat/heat.hpp"

namespace srheat {

// Model document: the operator data of a run (fields, drift, potential,
// measure density, base point, working box). Round-trips through JSON.
struct ModelSpec {
    std::string name;
    int dim = 0;
    std::vector<PolyVectorField> fields;
    std::optional<PolyVectorField> drift;
    std::string drift_class = "none";  // none | D | D2
    MultiPoly potential{1};
    MultiPoly density{1};
    std::vector<Rational> base_point;
    Box box;
    std::vector<std::string> tags;

    HeatModel heat_model() const;
    std::vector<double> base_point_d() const;
};

std::string model_to_json(const ModelSpec& m);
ModelSpec model_from_json(const std::string& text);

// Built-in corpus.
std::vector<std::string> corpus_names();
ModelSpec corpus_get(const std::string& name);
bool corpus_has(const std::string& name);

// FNV-1a 64-bit hash of the canonical model JSON (manifest provenance).
std::uint64_t model_hash(const ModelSpec& m);

} // namespace srheat
