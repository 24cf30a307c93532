#include "srheat/corpus.hpp"

#include <nlohmann/json.hpp>

namespace srheat {

using nlohmann::json;

HeatModel ModelSpec::heat_model() const
{
    HeatModel m;
    m.dim = dim;
    m.fields = fields;
    m.drift = drift;
    m.potential = potential;
    m.density = density;
    m.box = box;
    m.validate();
    return m;
}

std::vector<double> ModelSpec::base_point_d() const
{
    std::vector<double> q(base_point.size());
    for (std::size_t i = 0; i < base_point.size(); ++i) q[i] = to_double(base_point[i]);
    return q;
}

std::string model_to_json(const ModelSpec& m)
{
    json j;
    j["name"] = m.name;
    j["dim"] = m.dim;
    json fields = json::array();
    for (const auto& f : m.fields) fields.push_back(json::parse(to_json(f)));
    j["fields"] = fields;
    j["drift"] = m.drift ? json::parse(to_json(*m.drift)) : json(nullptr);
    j["drift_class"] = m.drift_class;
    j["potential"] = json::parse(poly_to_json(m.potential));
    j["density"] = json::parse(poly_to_json(m.density));
    json bp = json::array();
    for (const auto& c : m.base_point) bp.push_back(to_string(c));
    j["base_point"] = bp;
    j["box"] = {{"lo", m.box.lo}, {"hi", m.box.hi}};
    j["tags"] = m.tags;
    return j.dump(2);
}

ModelSpec model_from_json(const std::string& text)
{
    json j = json::parse(text);
    ModelSpec m;
    m.name = j.at("name").get<std::string>();
    m.dim = j.at("dim").get<int>();
    for (const auto& f : j.at("fields")) m.fields.push_back(field_from_json(f.dump()));
    if (j.contains("drift") && !j.at("drift").is_null())
        m.drift = field_from_json(j.at("drift").dump());
    m.drift_class = j.value("drift_class", std::string("none"));
    m.potential = j.contains("potential") ? poly_from_json(j.at("potential").dump())
                                          : MultiPoly::zero(m.dim);
    m.density = j.contains("density") ? poly_from_json(j.at("density").dump())
                                      : MultiPoly::constant(m.dim, Rational(1));
    for (const auto& c : j.at("base_point")) {
        if (c.is_string()) {
            std::string s = c.get<std::string>();
            auto slash = s.find('/');
            if (slash == std::string::npos)
                m.base_point.push_back(Rational(BigInt(s)));
            else
                m.base_point.push_back(Rational(BigInt(s.substr(0, slash)), BigInt(s.substr(slash + 1))));
        } else {
            m.base_point.push_back(Rational(c.get<long long>()));
        }
    }
    m.box.lo = j.at("box").at("lo").get<std::vector<double>>();
    m.box.hi = j.at("box").at("hi").get<std::vector<double>>();
    if (j.contains("tags")) m.tags = j.at("tags").get<std::vector<std::string>>();

    if (static_cast<int>(m.base_point.size()) != m.dim)
        throw DimensionMismatch("model JSON: base_point length != dim");
    for (const auto& f : m.fields)
        if (f.dim() != m.dim) throw DimensionMismatch("model JSON: field dim mismatch");
    if (m.potential.dim() != m.dim || m.density.dim() != m.dim)
        throw DimensionMismatch("model JSON: potential/density dim mismatch");
    return m;
}

namespace {

MultiPoly P(int dim, std::initializer_list<std::pair<Exponent, Rational>> terms)
{
    MultiPoly p(dim);
    for (const auto& [e, c] : terms) p += MultiPoly::monomial(dim, e, c);
    return p;
}

ModelSpec make_euclidean(int n, double half)
{
    ModelSpec m;
    m.name = "euclidean" + std::to_string(n);
    m.dim = n;
    for (int i = 0; i < n; ++i) m.fields.push_back(PolyVectorField::coordinate(n, i));
    m.potential = MultiPoly::zero(n);
    m.density = MultiPoly::constant(n, Rational(1));
    m.base_point.assign(n, Rational(0));
    m.box.lo.assign(n, -half);
    m.box.hi.assign(n, half);
    m.tags = {"euclidean", "regular"};
    return m;
}

ModelSpec make_heisenberg()
{
    ModelSpec m;
    m.name = "heisenberg";
    m.dim = 3;
    // X1 = d_x - (y/2) d_z, X2 = d_y + (x/2) d_z
    PolyVectorField X1(3), X2(3);
    X1.component(0) = MultiPoly::constant(3, Rational(1));
    X1.component(2) = P(3, {{{0, 1, 0}, Rational(-1, 2)}});
    X2.component(1) = MultiPoly::constant(3, Rational(1));
    X2.component(2) = P(3, {{{1, 0, 0}, Rational(1, 2)}});
    m.fields = {X1, X2};
    m.potential = MultiPoly::zero(3);
    m.density = MultiPoly::constant(3, Rational(1));
    m.base_point = {Rational(0), Rational(0), Rational(0)};
    m.box.lo = {-2.0, -2.0, -1.0};
    m.box.hi = {2.0, 2.0, 1.0};
    m.tags = {"carnot", "regular", "step2"};
    return m;
}

ModelSpec make_grushin(const std::string& name, const MultiPoly& f, std::vector<std::string> tags)
{
    ModelSpec m;
    m.name = name;
    m.dim = 2;
    PolyVectorField X1(2), X2(2);
    X1.component(0) = MultiPoly::constant(2, Rational(1));
    X2.component(1) = f;
    m.fields = {X1, X2};
    m.potential = MultiPoly::zero(2);
    m.density = MultiPoly::constant(2, Rational(1));
    m.base_point = {Rational(0), Rational(0)};
    m.box.lo = {-3.0, -3.0};
    m.box.hi = {3.0, 3.0};
    m.tags = std::move(tags);
    return m;
}

ModelSpec make_martinet()
{
    ModelSpec m;
    m.name = "martinet";
    m.dim = 3;
    // X1 = d_x, X2 = d_y + x^2 d_z
    PolyVectorField X1(3), X2(3);
    X1.component(0) = MultiPoly::constant(3, Rational(1));
    X2.component(1) = MultiPoly::constant(3, Rational(1));
    X2.component(2) = P(3, {{{2, 0, 0}, Rational(1)}});
    m.fields = {X1, X2};
    m.potential = MultiPoly::zero(3);
    m.density = MultiPoly::constant(3, Rational(1));
    m.base_point = {Rational(0), Rational(0), Rational(0)};
    m.box.lo = {-2.0, -2.0, -1.0};
    m.box.hi = {2.0, 2.0, 1.0};
    m.tags = {"singular", "step3"};
    return m;
}

} // namespace

std::vector<std::string> corpus_names()
{
    return {"euclidean1", "euclidean2",  "heisenberg",        "grushin_k1", "grushin_k2",
            "grushin_pert", "grushin_pert_sq", "grushin_quadratic", "martinet"};
}

bool corpus_has(const std::string& name)
{
    for (const auto& n : corpus_names())
        if (n == name) return true;
    return false;
}

ModelSpec corpus_get(const std::string& name)
{
    if (name == "euclidean1") return make_euclidean(1, 5.0);
    if (name == "euclidean2") return make_euclidean(2, 5.0);
    if (name == "heisenberg") return make_heisenberg();
    if (name == "grushin_k1")
        return make_grushin("grushin_k1", P(2, {{{1, 0}, Rational(1)}}), {"singular", "grushin"});
    if (name == "grushin_k2")
        return make_grushin("grushin_k2", P(2, {{{2, 0}, Rational(1)}}), {"singular", "grushin"});
    if (name == "grushin_pert")
        // f = x1 + x1^2: the perturbed Grushin with a nontrivial degree-0 part
        return make_grushin("grushin_pert", P(2, {{{1, 0}, Rational(1)}, {{2, 0}, Rational(1)}}),
                            {"singular", "grushin", "perturbed"});
    if (name == "grushin_pert_sq")
        // f = x1 + x2^2: perturbation of weighted degree 2
        return make_grushin("grushin_pert_sq", P(2, {{{1, 0}, Rational(1)}, {{0, 2}, Rational(1)}}),
                            {"singular", "grushin", "perturbed"});
    if (name == "grushin_quadratic")
        // f = x1^2 - x2: the singular Grushin case
        return make_grushin("grushin_quadratic",
                            P(2, {{{2, 0}, Rational(1)}, {{0, 1}, Rational(-1)}}),
                            {"singular", "grushin"});
    if (name == "martinet") return make_martinet();
    throw std::invalid_argument("unknown corpus model: " + name);
}

std::uint64_t model_hash(const ModelSpec& m)
{
    std::string s = model_to_json(m);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace srheat
