#include "ldct/pipeline/dataset.hpp"

#include "ldct/error.hpp"

namespace ldct::pipeline {

Manifest make_multidose_set(std::span<const PhantomEntry> phantoms, const MultidoseSpec& spec,
                            std::span<const std::vector<std::uint64_t>> seeds,
                            const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  Manifest m;
  m.geometry = spec.geometry;
  m.window = spec.window;
  m.dose_parameter = spec.dose_parameter;
  m.levels = spec.levels;
  m.round_factors = spec.round_factors;
  m.scheme = spec.scheme;
  require(!spec.doses.empty() && spec.doses.size() == spec.levels.size(), ErrorCategory::invalid_argument,
          "multidose set: need one dose per level");
  for (std::size_t j = 0; j < spec.doses.size(); ++j) {
    spec.doses[j].validate();
    require(j == 0 || spec.doses[j].tube_current_ma < spec.doses[j - 1].tube_current_ma,
            ErrorCategory::invalid_argument, "multidose set: doses must be sorted by descending tube current");
    m.tube_currents.push_back(spec.doses[j].tube_current_ma);
  }
  m.photons_per_ma = spec.doses.front().photons_per_ma;
  m.electronic_sigma = spec.doses.front().electronic_sigma;
  m.noise_factors = negan::set_noise_factors(spec.levels, spec.dose_parameter, spec.round_factors);
  require(seeds.size() == phantoms.size(), ErrorCategory::invalid_argument,
          "multidose set: need one seed list per phantom");
  for (std::size_t i = 0; i < phantoms.size(); ++i) {
    require(seeds[i].size() == spec.doses.size(), ErrorCategory::invalid_argument,
            "multidose set: phantom " + phantoms[i].id + " needs one seed per dose");
    require(phantoms[i].phantom.image.rows() == spec.geometry.grid, ErrorCategory::shape_mismatch,
            "multidose set: phantom " + phantoms[i].id + " does not match the scan grid");
  }
  m.validate();
  require(!fs::exists(out_dir) || fs::is_directory(out_dir), ErrorCategory::io,
          "output path exists and is not a directory: " + out_dir.string());

  for (std::size_t i = 0; i < phantoms.size(); ++i) {
    const auto& p = phantoms[i];
    SampleRecord rec;
    rec.id = p.id;
    rec.split = p.split;
    rec.kind = p.kind;
    rec.phantom_seed = p.seed;
    rec.ellipses = p.phantom.ellipses;
    const std::string dir = "samples/" + p.id + "/";
    const Image2D clean = noise::reconstruct_clean(p.phantom.image, spec.geometry);
    rec.clean = dir + "clean.ldct";
    save_image(out_dir / rec.clean, clean);
    Image2D hdct;
    for (std::size_t j = 0; j < spec.doses.size(); ++j) {
      auto dose = spec.doses[j];
      dose.seed = seeds[i][j];
      const Image2D img = noise::simulate_ldct(p.phantom.image, spec.geometry, dose);
      rec.doses.push_back(dir + "dose" + std::to_string(j) + ".ldct");
      rec.dose_seeds.push_back(dose.seed);
      save_image(out_dir / rec.doses.back(), img);
      if (j == 0) hdct = img;
    }
    if (spec.scheme == decompose::Scheme::simulation) {
      const auto pair = decompose::difference_pair(hdct, clean, decompose::Scheme::simulation,
                                                   "seed " + std::to_string(rec.dose_seeds[0]));
      rec.n0 = dir + "n0.ldct";
      save_image(out_dir / rec.n0, pair.n0, io::DType::f64);
    }
    m.samples.push_back(std::move(rec));
  }
  m.write(out_dir / "manifest.txt");
  return m;
}

std::vector<LoadedSample> load_split(const Manifest& manifest, const std::filesystem::path& base_dir,
                                     const std::string& split) {
  std::vector<LoadedSample> out;
  for (const auto& rec : manifest.samples) {
    if (rec.split != split) continue;
    LoadedSample s;
    s.record = rec;
    s.clean = load_image(base_dir / rec.clean);
    for (const auto& path : rec.doses) {
      s.doses.push_back(load_image(base_dir / path));
      require(s.doses.back().same_grid(s.clean), ErrorCategory::format,
              "sample " + rec.id + ": " + path + " is not co-registered with the clean image");
    }
    require(s.clean.rows() == manifest.geometry.grid && s.clean.spacing() == manifest.geometry.pixel_spacing,
            ErrorCategory::format, "sample " + rec.id + ": image grid disagrees with the manifest geometry");
    out.push_back(std::move(s));
  }
  return out;
}

decompose::DecompositionPair simulation_pair(const LoadedSample& sample) {
  return decompose::difference_pair(sample.doses.front(), sample.clean, decompose::Scheme::simulation,
                                    "seed " + std::to_string(sample.record.dose_seeds.front()));
}

}  // namespace ldct::pipeline
