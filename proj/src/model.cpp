#include "utweak/model.hpp"

#include <fmt/format.h>

namespace utweak {

const char* to_string(Convention c) { return c == Convention::Ito ? "ito" : "stratonovich"; }

SdeModel::SdeModel(std::string label, Convention convention, VectorField drift,
                   std::vector<VectorField> diffusions)
    : label_(std::move(label)),
      convention_(convention),
      drift_(std::move(drift)),
      diffusions_(std::move(diffusions)) {
    for (const auto& v : diffusions_) {
        if (v.dim() != drift_.dim())
            throw DimensionError(fmt::format("diffusion field of dimension {} in a model of dimension {}",
                                             v.dim(), drift_.dim()));
        additive_ = additive_ && v.is_constant();
    }
}

SdeModel SdeModel::parse(std::string label, int dim, Convention convention,
                         const std::vector<std::string>& drift,
                         const std::vector<std::vector<std::string>>& diffusion) {
    std::vector<VectorField> diff;
    for (const auto& d : diffusion) diff.push_back(VectorField::parse(d, dim));
    return SdeModel(std::move(label), convention, VectorField::parse(drift, dim), std::move(diff));
}

std::vector<double> SdeModel::ito_drift(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim()) throw DimensionError("point has wrong dimension");
    std::vector<double> out(x.size());
    ito_drift(x.data(), out.data());
    return out;
}

std::vector<double> SdeModel::stratonovich_drift(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim()) throw DimensionError("point has wrong dimension");
    std::vector<double> out(x.size());
    stratonovich_drift(x.data(), out.data());
    return out;
}

nlohmann::json SdeModel::to_json() const {
    nlohmann::json diff = nlohmann::json::array();
    for (const auto& v : diffusions_) diff.push_back(v.sources());
    return {{"dim", dim()},
            {"noise", noise_count()},
            {"convention", utweak::to_string(convention_)},
            {"drift", drift_.sources()},
            {"diffusion", diff}};
}

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
    throw Error(fmt::format("model JSON {}: {}", path.empty() ? "/" : path, what));
}

std::vector<std::string> string_list(const nlohmann::json& j, const std::string& path,
                                     std::size_t expected) {
    if (!j.is_array()) bad(path, "expected an array of strings");
    if (j.size() != expected) bad(path, fmt::format("expected {} entries, found {}", expected, j.size()));
    std::vector<std::string> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_string()) bad(fmt::format("{}/{}", path, i), "expected a string");
        out.push_back(j[i].get<std::string>());
    }
    return out;
}

VectorField parse_field(const nlohmann::json& j, const std::string& path, int dim) {
    const auto src = string_list(j, path, static_cast<std::size_t>(dim));
    std::vector<ScalarFunction> comps;
    for (std::size_t i = 0; i < src.size(); ++i) {
        try {
            comps.push_back(ScalarFunction::parse(src[i], dim));
        } catch (const ParseError& e) {
            bad(fmt::format("{}/{}", path, i), e.what());
        }
    }
    return VectorField(std::move(comps));
}

}  // namespace

SdeModel SdeModel::from_json(const nlohmann::json& j, std::string label) {
    if (!j.is_object()) bad("", "expected an object");
    for (const char* key : {"dim", "drift", "diffusion"})
        if (!j.contains(key)) bad(std::string("/") + key, "missing");
    if (!j["dim"].is_number_integer() || j["dim"].get<int>() < 1) bad("/dim", "expected a positive integer");
    const int dim = j["dim"].get<int>();

    Convention conv = Convention::Ito;
    if (j.contains("convention")) {
        const auto& c = j["convention"];
        if (c == "ito")
            conv = Convention::Ito;
        else if (c == "stratonovich")
            conv = Convention::Stratonovich;
        else
            bad("/convention", "expected \"ito\" or \"stratonovich\"");
    }
    const auto& diff = j["diffusion"];
    if (!diff.is_array()) bad("/diffusion", "expected an array of fields");
    if (j.contains("noise")) {
        if (!j["noise"].is_number_integer() || j["noise"].get<long>() != static_cast<long>(diff.size()))
            bad("/noise", fmt::format("does not match the {} diffusion fields", diff.size()));
    }
    if (j.contains("label") && j["label"].is_string()) label = j["label"].get<std::string>();

    VectorField drift = parse_field(j["drift"], "/drift", dim);
    std::vector<VectorField> fields;
    for (std::size_t k = 0; k < diff.size(); ++k)
        fields.push_back(parse_field(diff[k], fmt::format("/diffusion/{}", k), dim));
    return SdeModel(std::move(label), conv, std::move(drift), std::move(fields));
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string SdeModel::hash() const { return fmt::format("{:016x}", fnv1a64(to_json().dump())); }

}  // namespace utweak
