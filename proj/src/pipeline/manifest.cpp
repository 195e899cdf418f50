#include "ldct/pipeline/manifest.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ldct/error.hpp"
#include "ldct/io/keyvalue.hpp"

namespace ldct::pipeline {

namespace {

std::string join_paths(const std::vector<std::string>& items) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) s += (i ? ", " : "") + items[i];
  return s;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && p == s.data() + s.size(), ErrorCategory::format, what + ": bad integer '" + s + "'");
  return v;
}

}  // namespace

std::string format_ellipses(const std::vector<phantom::EllipseSpec>& ellipses) {
  std::string s;
  for (std::size_t i = 0; i < ellipses.size(); ++i) {
    const auto& e = ellipses[i];
    s += (i ? "; " : "") + io::format_number(e.cx) + ' ' + io::format_number(e.cy) + ' ' + io::format_number(e.a) +
         ' ' + io::format_number(e.b) + ' ' + io::format_number(e.angle) + ' ' + io::format_number(e.value);
  }
  return s;
}

std::vector<phantom::EllipseSpec> parse_ellipses(const std::string& text) {
  std::vector<phantom::EllipseSpec> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ';')) {
    if (item.find_first_not_of(' ') == std::string::npos) continue;
    std::istringstream fields(item);
    std::vector<double> v;
    std::string tok;
    while (fields >> tok) {
      double d = 0.0;
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), d);
      require(ec == std::errc() && p == tok.data() + tok.size(), ErrorCategory::format,
              "ellipse list: bad number '" + tok + "'");
      v.push_back(d);
    }
    require(v.size() == 6, ErrorCategory::format, "ellipse list: expected 'cx cy a b angle value' per entry");
    require(v[2] > 0.0 && v[3] > 0.0, ErrorCategory::format, "ellipse list: semi-axes must be positive");
    out.push_back({v[0], v[1], v[2], v[3], v[4], v[5]});
  }
  return out;
}

std::string Manifest::serialize() const {
  io::KeyValues kv;
  kv.set("version", std::to_string(version));
  kv.set("grid", std::to_string(geometry.grid));
  kv.set("pixel_cm", geometry.pixel_spacing);
  kv.set("views", std::to_string(geometry.n_views));
  kv.set("bins", std::to_string(geometry.n_bins));
  kv.set("bin_cm", geometry.bin_spacing);
  kv.set("filter", ct::to_string(geometry.filter));
  kv.set("window_low", window.low);
  kv.set("window_high", window.high);
  kv.set("dose_parameter",
         std::string(dose_parameter == negan::DoseParameter::tube_current ? "tube_current" : "noise_index"));
  kv.set("levels", levels);
  kv.set("tube_currents_ma", tube_currents);
  kv.set("photons_per_ma", photons_per_ma);
  kv.set("electronic_sigma", electronic_sigma);
  kv.set("round_factors", std::string(round_factors ? "true" : "false"));
  kv.set("lower_levels", std::to_string(lower_levels()));
  kv.set("noise_factors", noise_factors);
  kv.set("scheme", decompose::to_string(scheme));
  kv.set("samples", std::to_string(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const std::string p = "sample." + std::to_string(i) + ".";
    kv.set(p + "id", s.id);
    kv.set(p + "split", s.split);
    kv.set(p + "kind", s.kind);
    kv.set(p + "phantom_seed", std::to_string(s.phantom_seed));
    kv.set(p + "ellipses", format_ellipses(s.ellipses));
    kv.set(p + "clean", s.clean);
    kv.set(p + "doses", join_paths(s.doses));
    std::string seeds;
    for (std::size_t j = 0; j < s.dose_seeds.size(); ++j) seeds += (j ? ", " : "") + std::to_string(s.dose_seeds[j]);
    kv.set(p + "dose_seeds", seeds);
    kv.set(p + "n0", s.n0);
  }
  return "# ldct dataset manifest\n" + kv.serialize();
}

Manifest Manifest::parse(const std::string& text, const std::string& source) {
  const auto kv = io::KeyValues::parse(text, source);
  Manifest m;
  m.version = static_cast<int>(kv.integer("version"));
  require(m.version == kVersion, ErrorCategory::format,
          source + ": unsupported manifest version " + std::to_string(m.version));
  m.geometry.grid = kv.unsigned_integer("grid");
  m.geometry.pixel_spacing = kv.number("pixel_cm");
  m.geometry.n_views = kv.unsigned_integer("views");
  m.geometry.n_bins = kv.unsigned_integer("bins");
  m.geometry.bin_spacing = kv.number("bin_cm");
  m.geometry.filter = ct::filter_from_string(kv.text("filter"));
  m.window = {kv.number("window_low"), kv.number("window_high")};
  const auto param = kv.text("dose_parameter");
  require(param == "tube_current" || param == "noise_index", ErrorCategory::format,
          source + ": bad dose_parameter '" + param + "'");
  m.dose_parameter = param == "tube_current" ? negan::DoseParameter::tube_current : negan::DoseParameter::noise_index;
  m.levels = kv.numbers("levels");
  m.tube_currents = kv.numbers("tube_currents_ma");
  m.photons_per_ma = kv.number("photons_per_ma");
  m.electronic_sigma = kv.number("electronic_sigma");
  m.round_factors = kv.boolean("round_factors", true);
  const auto lower = kv.unsigned_integer("lower_levels");
  m.noise_factors = kv.numbers("noise_factors");
  m.scheme = decompose::scheme_from_string(kv.text("scheme"));
  const auto count = kv.unsigned_integer("samples");
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string p = "sample." + std::to_string(i) + ".";
    SampleRecord s;
    s.id = kv.text(p + "id");
    s.split = kv.text(p + "split");
    s.kind = kv.text(p + "kind");
    s.phantom_seed = kv.unsigned_integer(p + "phantom_seed");
    s.ellipses = parse_ellipses(kv.text(p + "ellipses"));
    s.clean = kv.text(p + "clean");
    s.doses = split_list(kv.text(p + "doses"));
    for (const auto& item : split_list(kv.text(p + "dose_seeds"))) s.dose_seeds.push_back(parse_u64(item, p + "dose_seeds"));
    s.n0 = kv.text(p + "n0", "");
    m.samples.push_back(std::move(s));
  }
  kv.reject_unconsumed();
  require(lower == m.lower_levels(), ErrorCategory::format, source + ": lower_levels disagrees with the level list");
  m.validate();
  return m;
}

Manifest Manifest::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCategory::io, "cannot read manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void Manifest::write(const std::filesystem::path& path) const {
  const std::string text = serialize();
  std::vector<std::byte> bytes(text.size());
  std::memcpy(bytes.data(), text.data(), text.size());
  io::write_file_bytes(path, bytes);
}

void Manifest::validate(const std::filesystem::path* base_dir) const {
  geometry.validate();
  window.validate();
  require(!levels.empty(), ErrorCategory::format, "manifest: no dose levels");
  require(tube_currents.size() == levels.size(), ErrorCategory::format,
          "manifest: tube_currents_ma and levels differ in length");
  for (double ma : tube_currents) require(ma > 0.0, ErrorCategory::format, "manifest: tube currents must be positive");
  const auto expected = negan::set_noise_factors(levels, dose_parameter, round_factors);
  require(expected == noise_factors, ErrorCategory::format,
          "manifest: noise_factors disagree with the factor rule over the declared levels");
  for (const auto& s : samples) {
    const std::string where = "manifest: sample '" + s.id + "'";
    require(s.split == "train" || s.split == "test", ErrorCategory::format, where + " has split '" + s.split + "'");
    require(s.kind == "random" || s.kind == "uniform", ErrorCategory::format, where + " has kind '" + s.kind + "'");
    require(s.doses.size() == levels.size() && s.dose_seeds.size() == levels.size(), ErrorCategory::format,
            where + " does not list one image and seed per dose");
    if (base_dir) {
      std::vector<std::string> files = s.doses;
      files.push_back(s.clean);
      if (!s.n0.empty()) files.push_back(s.n0);
      for (const auto& f : files)
        require(std::filesystem::exists(*base_dir / f), ErrorCategory::io,
                where + " references missing file " + (*base_dir / f).string());
    }
  }
}

}  // namespace ldct::pipeline
