#include "midlab/serde.hpp"

#include <algorithm>

namespace midl {

double get_number(const Json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key))
        throw ConfigError(where + ": missing required key '" + key + "'");
    if (!j.at(key).is_number())
        throw ConfigError(where + ": key '" + key + "' must be a number");
    return j.at(key).get<double>();
}

std::string get_string(const Json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key))
        throw ConfigError(where + ": missing required key '" + key + "'");
    if (!j.at(key).is_string())
        throw ConfigError(where + ": key '" + key + "' must be a string");
    return j.at(key).get<std::string>();
}

void require_keys(const Json& obj, const std::vector<std::string>& allowed,
                  const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
}

Json to_json(const ConditionalFamily& f) {
    Json j;
    j["kind"] = cond_kind_name(f.kind);
    switch (f.kind) {
        case CondKind::VMF: j["kappa"] = f.kappa; break;
        case CondKind::LAPLACE:
        case CondKind::NORMAL: j["scale"] = f.scale; break;
        case CondKind::GENNORM:
            j["beta"] = f.beta;
            j["scale"] = f.scale;
            break;
    }
    return j;
}

ConditionalFamily conditional_from_json(const Json& j, const std::string& where) {
    require_keys(j, {"kind", "kappa", "scale", "beta"}, where);
    const std::string kind = get_string(j, "kind", where);
    if (kind == "vmf") return ConditionalFamily::vmf(get_number(j, "kappa", where));
    if (kind == "laplace") return ConditionalFamily::laplace(get_number(j, "scale", where));
    if (kind == "normal") return ConditionalFamily::normal(get_number(j, "scale", where));
    if (kind == "gennorm")
        return ConditionalFamily::gennorm(get_number(j, "beta", where),
                                          get_number(j, "scale", where));
    throw ConfigError(where + ": unknown conditional kind '" + kind + "'");
}

Json to_json(const Box& b) {
    Json j;
    j["lo"] = b.lo.raw();
    j["hi"] = b.hi.raw();
    return j;
}

Box box_from_json(const Json& j, const std::string& where) {
    require_keys(j, {"lo", "hi"}, where);
    if (!j.contains("lo") || !j.contains("hi"))
        throw ConfigError(where + ": box needs 'lo' and 'hi' arrays");
    Box b{Vector(j.at("lo").get<std::vector<double>>()),
          Vector(j.at("hi").get<std::vector<double>>())};
    b.validate();
    return b;
}

Json to_json(const LatentSpaceSpec& s) {
    Json j;
    j["geometry"] = geometry_name(s.geometry);
    j["dim"] = s.dim;
    j["prior"] = prior_kind_name(s.prior);
    if (s.geometry == Geometry::BOX) j["box"] = to_json(s.box);
    if (s.geometry == Geometry::UNBOUNDED) j["prior_scale"] = s.prior_scale;
    j["conditional"] = to_json(s.conditional);
    return j;
}

LatentSpaceSpec latent_space_from_json(const Json& j, const std::string& where) {
    require_keys(j, {"geometry", "dim", "prior", "prior_scale", "box", "conditional"}, where);
    LatentSpaceSpec s;
    const std::string geom = get_string(j, "geometry", where);
    if (geom == "sphere")
        s.geometry = Geometry::SPHERE;
    else if (geom == "box")
        s.geometry = Geometry::BOX;
    else if (geom == "unbounded")
        s.geometry = Geometry::UNBOUNDED;
    else
        throw ConfigError(where + ": unknown geometry '" + geom + "'");

    const double dim = get_number(j, "dim", where);
    if (dim < 1 || dim != static_cast<double>(static_cast<std::size_t>(dim)))
        throw ConfigError(where + ": 'dim' must be a positive integer");
    s.dim = static_cast<std::size_t>(dim);

    const std::string prior = get_string(j, "prior", where);
    if (prior == "uniform")
        s.prior = PriorKind::UNIFORM;
    else if (prior == "laplace")
        s.prior = PriorKind::LAPLACE;
    else if (prior == "normal")
        s.prior = PriorKind::NORMAL;
    else
        throw ConfigError(where + ": unknown prior '" + prior + "'");

    if (j.contains("prior_scale")) s.prior_scale = get_number(j, "prior_scale", where);

    if (s.geometry == Geometry::BOX) {
        if (j.contains("box"))
            s.box = box_from_json(j.at("box"), where + ".box");
        else
            s.box = Box::symmetric_unit(s.dim);
    } else if (j.contains("box")) {
        throw ConfigError(where + ": 'box' is only valid for box geometry");
    }

    if (!j.contains("conditional"))
        throw ConfigError(where + ": missing required key 'conditional'");
    s.conditional = conditional_from_json(j.at("conditional"), where + ".conditional");
    s.validate();
    return s;
}

Json to_json(const OutputSpace& s) {
    Json j;
    j["kind"] = space_kind_name(s.kind);
    j["dim"] = s.dim;
    if (s.kind == SpaceKind::BOX) j["box"] = to_json(s.box);
    return j;
}

OutputSpace output_space_from_json(const Json& j, const std::string& where) {
    require_keys(j, {"kind", "dim", "box"}, where);
    const std::string kind = get_string(j, "kind", where);
    const double dim_raw = get_number(j, "dim", where);
    if (dim_raw < 1 || dim_raw != static_cast<double>(static_cast<std::size_t>(dim_raw)))
        throw ConfigError(where + ": 'dim' must be a positive integer");
    OutputSpace s;
    s.dim = static_cast<std::size_t>(dim_raw);
    if (kind == "sphere") {
        s.kind = SpaceKind::SPHERE;
    } else if (kind == "box") {
        s.kind = SpaceKind::BOX;
        s.box = j.contains("box") ? box_from_json(j.at("box"), where + ".box")
                                  : Box::symmetric_unit(s.dim);
    } else if (kind == "unbounded") {
        s.kind = SpaceKind::UNBOUNDED;
    } else {
        throw ConfigError(where + ": unknown output space kind '" + kind + "'");
    }
    if (kind != "box" && j.contains("box"))
        throw ConfigError(where + ": 'box' is only valid for box output spaces");
    s.validate();
    return s;
}

Json to_json(const SimilarityKernel& k) {
    Json j;
    j["kind"] = kernel_kind_name(k.kind);
    if (k.kind == KernelKind::NEG_LBETA) j["beta"] = k.beta;
    return j;
}

SimilarityKernel kernel_from_json(const Json& j, const std::string& where) {
    require_keys(j, {"kind", "beta"}, where);
    const std::string kind = get_string(j, "kind", where);
    if (kind == "dot") return SimilarityKernel::dot();
    if (kind == "neg_l1") return SimilarityKernel::neg_l1();
    if (kind == "neg_l2sq") return SimilarityKernel::neg_l2sq();
    if (kind == "neg_lbeta") return SimilarityKernel::neg_lbeta(get_number(j, "beta", where));
    throw ConfigError(where + ": unknown kernel kind '" + kind + "'");
}

} // namespace midl
