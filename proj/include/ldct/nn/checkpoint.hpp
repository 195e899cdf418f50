#pragma once

#include <string>

#include "ldct/io/container.hpp"
#include "ldct/nn/adam.hpp"
#include "ldct/nn/params.hpp"

namespace ldct::nn {

/// Writes every parameter as `<prefix><name>` in the element type T.
template <typename T>
void store_params(io::Container& out, const ModelParams<T>& params, const std::string& prefix);

/// Overwrites parameter values from entries written by store_params. Every
/// parameter must be present with a matching shape.
template <typename T>
void load_params(const io::Container& in, ModelParams<T>& params, const std::string& prefix);

template <typename T>
void store_adam(io::Container& out, const AdamState<T>& state, const ModelParams<T>& params,
                const std::string& prefix);
template <typename T>
void load_adam(const io::Container& in, AdamState<T>& state, const ModelParams<T>& params,
               const std::string& prefix);

}  // namespace ldct::nn
