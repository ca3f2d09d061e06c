#include "utweak/vector_field.hpp"

namespace utweak {

ScalarFunction::ScalarFunction(const Expr& e, int dim) : expr_(e), prog_(e), dim_(dim) {
    if (e.max_variable() >= dim)
        throw DimensionError("expression uses x" + std::to_string(e.max_variable() + 1) +
                             " but dimension is " + std::to_string(dim));
}

ScalarFunction ScalarFunction::parse(std::string_view src, int dim) {
    return ScalarFunction(Expr::parse(src, dim), dim);
}

VectorField::VectorField(std::vector<ScalarFunction> components) : comps_(std::move(components)) {
    for (const auto& c : comps_)
        if (c.dim() != dim())
            throw DimensionError("component count " + std::to_string(dim()) +
                                 " differs from variable dimension " + std::to_string(c.dim()));
}

VectorField VectorField::parse(const std::vector<std::string>& sources, int dim) {
    if (static_cast<int>(sources.size()) != dim)
        throw DimensionError("expected " + std::to_string(dim) + " components, got " +
                             std::to_string(sources.size()));
    std::vector<ScalarFunction> comps;
    comps.reserve(sources.size());
    for (const auto& s : sources) comps.push_back(ScalarFunction::parse(s, dim));
    return VectorField(std::move(comps));
}

VectorField VectorField::zero(int dim) {
    return VectorField::parse(std::vector<std::string>(static_cast<std::size_t>(dim), "0"), dim);
}

std::vector<std::string> VectorField::sources() const {
    std::vector<std::string> out;
    for (const auto& c : comps_) out.push_back(c.source());
    return out;
}

bool VectorField::is_constant() const {
    for (const auto& c : comps_)
        if (!c.is_constant()) return false;
    return true;
}

std::vector<double> VectorField::operator()(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim()) throw DimensionError("point has wrong dimension");
    std::vector<double> out(static_cast<std::size_t>(dim()));
    (*this)(x.data(), out.data());
    return out;
}

Matrix VectorField::jacobian(std::span<const double> x) const {
    const int n = dim();
    if (static_cast<int>(x.size()) != n) throw DimensionError("point has wrong dimension");
    Matrix m(n, n);
    std::vector<double> e(static_cast<std::size_t>(n), 0.0), col(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        e[static_cast<std::size_t>(j)] = 1.0;
        directional_derivative(*this, n, x.data(), e.data(), col.data());
        e[static_cast<std::size_t>(j)] = 0.0;
        for (int i = 0; i < n; ++i) m(i, j) = col[static_cast<std::size_t>(i)];
    }
    return m;
}

std::vector<double> commutator(const VectorField& v, const VectorField& w,
                               std::span<const double> x) {
    if (v.dim() != w.dim() || static_cast<int>(x.size()) != v.dim())
        throw DimensionError("commutator of fields with different dimensions");
    std::vector<double> out(x.size());
    lie_bracket(v, w, v.dim(), x.data(), out.data());
    return out;
}

namespace {
void check_shapes(const VectorField& f, const std::vector<VectorField>& diffusions,
                  std::span<const double> x) {
    for (const auto& v : diffusions)
        if (v.dim() != f.dim()) throw DimensionError("diffusion field has wrong dimension");
    if (static_cast<int>(x.size()) != f.dim()) throw DimensionError("point has wrong dimension");
}
}  // namespace

std::vector<double> ito_drift(const VectorField& v0, const std::vector<VectorField>& diffusions,
                              std::span<const double> x) {
    check_shapes(v0, diffusions, x);
    std::vector<double> out = v0(x), c(x.size());
    convention_correction(diffusions, v0.dim(), x.data(), c.data());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[i];
    return out;
}

std::vector<double> stratonovich_drift(const VectorField& u0,
                                       const std::vector<VectorField>& diffusions,
                                       std::span<const double> x) {
    check_shapes(u0, diffusions, x);
    std::vector<double> out = u0(x), c(x.size());
    convention_correction(diffusions, u0.dim(), x.data(), c.data());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= c[i];
    return out;
}

}  // namespace utweak
