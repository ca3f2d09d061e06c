#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "utweak/vector_field.hpp"

namespace utweak {

enum class Convention { Ito, Stratonovich };

const char* to_string(Convention c);

/// dX = V0 dt + sqrt(2) sum_k V_k o dB_k (Stratonovich) or the equivalent Ito form
/// dX = U0 dt + sqrt(2) sum_k V_k dB_k, with U0 = V0 + sum_k (DV_k) V_k.
class SdeModel {
public:
    SdeModel(std::string label, Convention convention, VectorField drift,
             std::vector<VectorField> diffusions);

    /// Builds a model from expression strings; diffusion[k] lists the N components of V_k.
    static SdeModel parse(std::string label, int dim, Convention convention,
                          const std::vector<std::string>& drift,
                          const std::vector<std::vector<std::string>>& diffusion);

    const std::string& label() const { return label_; }
    int dim() const { return drift_.dim(); }
    int noise_count() const { return static_cast<int>(diffusions_.size()); }
    Convention convention() const { return convention_; }
    /// The drift exactly as declared, in the model's own convention.
    const VectorField& declared_drift() const { return drift_; }
    const std::vector<VectorField>& diffusions() const { return diffusions_; }
    /// True iff every diffusion field is constant.
    bool additive() const { return additive_; }

    /// U0, the drift used by the Euler scheme.
    template <class T>
    void ito_drift(const T* x, T* out) const {
        drift_(x, out);
        if (convention_ == Convention::Ito || additive_) return;
        SmallVec<T> c(static_cast<std::size_t>(dim()));
        convention_correction(diffusions_, dim(), x, c.data());
        for (int i = 0; i < dim(); ++i) out[i] = out[i] + c[i];
    }

    /// V0, the Stratonovich drift.
    template <class T>
    void stratonovich_drift(const T* x, T* out) const {
        drift_(x, out);
        if (convention_ == Convention::Stratonovich || additive_) return;
        SmallVec<T> c(static_cast<std::size_t>(dim()));
        convention_correction(diffusions_, dim(), x, c.data());
        for (int i = 0; i < dim(); ++i) out[i] = out[i] - c[i];
    }

    std::vector<double> ito_drift(std::span<const double> x) const;
    std::vector<double> stratonovich_drift(std::span<const double> x) const;

    /// Field-definition document {"dim", "noise", "convention", "drift", "diffusion"}.
    nlohmann::json to_json() const;
    /// Throws Error naming the offending JSON path.
    static SdeModel from_json(const nlohmann::json& j, std::string label = "model");

    /// FNV-1a 64-bit hash of the canonical JSON, as 16 hex digits.
    std::string hash() const;

private:
    std::string label_;
    Convention convention_;
    VectorField drift_;
    std::vector<VectorField> diffusions_;
    bool additive_ = true;
};

/// FNV-1a 64-bit hash of a byte string.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace utweak
