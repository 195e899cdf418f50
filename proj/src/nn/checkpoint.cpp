#include "ldct/nn/checkpoint.hpp"

#include <type_traits>

#include "ldct/error.hpp"

namespace ldct::nn {

namespace {

template <typename T>
void put(io::Container& out, const std::string& name, const Tensor<T>& t) {
  std::vector<std::uint64_t> extents(t.shape().begin(), t.shape().end());
  if constexpr (std::is_same_v<T, float>)
    out.add_f32(name, std::move(extents), t.values());
  else
    out.add_f64(name, std::move(extents), t.values());
}

template <typename T>
void get(const io::Container& in, const std::string& name, Tensor<T>& t) {
  const auto& e = in.at(name);
  const Shape shape(e.extents.begin(), e.extents.end());
  require(shape == t.shape(), ErrorCategory::shape_mismatch,
          "checkpoint entry '" + name + "' has shape " + to_string(shape) + ", expected " +
              to_string(t.shape()));
  auto v = e.as_real();
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = static_cast<T>(v[i]);
}

}  // namespace

template <typename T>
void store_params(io::Container& out, const ModelParams<T>& params, const std::string& prefix) {
  for (const auto& p : params) put(out, prefix + p.name, p.value);
}

template <typename T>
void load_params(const io::Container& in, ModelParams<T>& params, const std::string& prefix) {
  for (auto& p : params) get(in, prefix + p.name, p.value);
}

template <typename T>
void store_adam(io::Container& out, const AdamState<T>& state, const ModelParams<T>& params,
                const std::string& prefix) {
  const double hyper[5] = {static_cast<double>(state.t), state.lr, state.beta1, state.beta2, state.eps};
  out.add_f64(prefix + "hyper", {5}, hyper);
  for (std::size_t i = 0; i < params.size(); ++i) {
    put(out, prefix + "m." + params[i].name, state.m[i]);
    put(out, prefix + "v." + params[i].name, state.v[i]);
  }
}

template <typename T>
void load_adam(const io::Container& in, AdamState<T>& state, const ModelParams<T>& params,
               const std::string& prefix) {
  state = AdamState<T>::for_params(params);
  const auto hyper = in.at(prefix + "hyper").as_f64();
  require(hyper.size() == 5, ErrorCategory::format, "bad Adam header in checkpoint");
  state.t = static_cast<std::uint64_t>(hyper[0]);
  state.lr = hyper[1];
  state.beta1 = hyper[2];
  state.beta2 = hyper[3];
  state.eps = hyper[4];
  for (std::size_t i = 0; i < params.size(); ++i) {
    get(in, prefix + "m." + params[i].name, state.m[i]);
    get(in, prefix + "v." + params[i].name, state.v[i]);
  }
}

template void store_params<float>(io::Container&, const ModelParams<float>&, const std::string&);
template void store_params<double>(io::Container&, const ModelParams<double>&, const std::string&);
template void load_params<float>(const io::Container&, ModelParams<float>&, const std::string&);
template void load_params<double>(const io::Container&, ModelParams<double>&, const std::string&);
template void store_adam<float>(io::Container&, const AdamState<float>&, const ModelParams<float>&,
                                const std::string&);
template void store_adam<double>(io::Container&, const AdamState<double>&,
                                 const ModelParams<double>&, const std::string&);
template void load_adam<float>(const io::Container&, AdamState<float>&, const ModelParams<float>&,
                               const std::string&);
template void load_adam<double>(const io::Container&, AdamState<double>&,
                                const ModelParams<double>&, const std::string&);

}  // namespace ldct::nn
