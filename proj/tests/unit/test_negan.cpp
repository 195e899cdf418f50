#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "ldct/error.hpp"
#include "ldct/negan/factors.hpp"
#include "ldct/negan/losses.hpp"
#include "ldct/negan/model.hpp"
#include "ldct/negan/train.hpp"
#include "support.hpp"

using namespace ldct;
using namespace ldct::negan;
using ldct::testing::gradcheck_params;
using ldct::testing::random_tensor;

namespace {

const GeneratorConfig kTinyGen{2, 2, 1, true, OutputSkip::entangled};
const DiscriminatorConfig kTinyDisc{2, 2, CriticInput::residual, 2.0};

template <typename T>
void fill(nn::ModelParams<T>& params, const std::string& name, double v) {
  auto* p = params.find(name);
  REQUIRE(p != nullptr);
  for (auto& x : p->value.values()) x = static_cast<T>(v);
}

/// Output layer silenced: every patch probability is sigmoid(0).
template <typename T>
void make_coin_flip(Discriminator<T>& d) {
  fill(d.params(), "out.weight", 0.0);
  fill(d.params(), "out.bias", 0.0);
}

/// Zero head: the generator passes its skip signal through unchanged.
template <typename T>
void make_pass_through(Generator<T>& g) {
  fill(g.params(), "head.weight", 0.0);
  fill(g.params(), "head.bias", 0.0);
}

NeganConfig tiny_model_config(std::vector<double> k = {1.3, 1.8, 3.0}) {
  NeganConfig cfg;
  cfg.generator = kTinyGen;
  cfg.discriminator = kTinyDisc;
  cfg.noise_factors = std::move(k);
  return cfg;
}

Image2D textured(std::size_t n, std::uint64_t seed, double lo, double hi) {
  const auto t = random_tensor({n, n}, seed, lo, hi);
  Image2D img(n, n, 0.2);
  for (std::size_t i = 0; i < img.size(); ++i) img.values()[i] = t[i];
  return img;
}

std::vector<TrainingSample> tiny_samples(const NeganConfig& cfg, std::size_t n, std::size_t per_level) {
  std::vector<TrainingSample> out;
  for (std::size_t j = 1; j <= cfg.levels(); ++j)
    for (std::size_t i = 0; i < per_level; ++i) {
      TrainingSample s;
      s.x0 = textured(n, 100 + i, 0.15, 0.25);
      s.n0 = textured(n, 200 + i, -0.01, 0.01);
      s.level = j;
      s.k = cfg.noise_factors[j - 1];
      s.target = s.x0;
      for (std::size_t p = 0; p < s.target.size(); ++p) s.target.values()[p] += std::sqrt(s.k) * s.n0.values()[p];
      out.push_back(std::move(s));
    }
  return out;
}

TrainConfig tiny_train_config(int epochs) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch = 2;
  cfg.patch = 16;
  cfg.schedule = {2e-4, 1, 1};
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_SUITE("negan") {

TEST_CASE("noise factors from tube currents and noise indices") {
  const std::vector<double> ma{90, 70, 50, 30};
  const auto rounded = set_noise_factors(ma, DoseParameter::tube_current, true);
  REQUIRE(rounded.size() == 3);
  CHECK(rounded[0] == 1.3);
  CHECK(rounded[1] == 1.8);
  CHECK(rounded[2] == 3.0);
  const auto exact = set_noise_factors(ma, DoseParameter::tube_current);
  CHECK(exact[0] == doctest::Approx(90.0 / 70.0));

  const std::vector<double> ni{10, 20, 30, 40};
  CHECK(set_noise_factors(ni, DoseParameter::noise_index) == std::vector<double>{2.0, 3.0, 4.0});
  const std::vector<double> one{90};
  CHECK(set_noise_factors(one, DoseParameter::tube_current).empty());
  const std::vector<double> bad{90, 0}, none;
  CHECK_THROWS_AS(set_noise_factors(bad, DoseParameter::tube_current), Error);
  CHECK_THROWS_AS(set_noise_factors(none, DoseParameter::tube_current), Error);
}

TEST_CASE("network output shapes and argument checks") {
  Generator<double> g(kTinyGen, 1);
  Discriminator<double> d(kTinyDisc, 2);
  nn::Tape<double> tape;
  auto x = tape.constant(random_tensor({2, 2, 16, 16}, 3, -0.5, 0.5));
  auto y = g.forward(tape, x);
  CHECK(y.shape() == nn::Shape{2, 1, 16, 16});
  auto p = d.forward(tape, y);
  CHECK(p.shape() == nn::Shape{2, 1, 3, 3});
  for (double v : p.value().values()) CHECK((v > 0.0 && v < 1.0));
  CHECK_THROWS_AS(g.forward(tape, tape.constant(nn::Tensor<double>({1, 1, 16, 16}))), Error);
  CHECK_THROWS_AS(g.forward(tape, tape.constant(nn::Tensor<double>({1, 2, 18, 16}))), Error);
  CHECK_THROWS_AS(d.forward(tape, tape.constant(nn::Tensor<double>({1, 1, 4, 4}))), Error);
  CHECK(d.params().find("conv0.norm.scale") == nullptr);
  CHECK(d.params().find("conv1.norm.scale") == nullptr);
  auto normed_cfg = kTinyDisc;
  normed_cfg.instance_norm = true;
  Discriminator<double> normed(normed_cfg, 2);
  CHECK(normed.params().find("conv0.norm.scale") == nullptr);
  CHECK(normed.params().find("conv1.norm.scale") != nullptr);
}

TEST_CASE("instance norm hides the input amplitude from the critic") {
  // Biases start at zero, so every layer up to the first norm is positively
  // homogeneous: scaling the input scales the logits unless a norm follows.
  auto normed_cfg = kTinyDisc;
  normed_cfg.instance_norm = true;
  Discriminator<double> plain(kTinyDisc, 4), normed(normed_cfg, 4);
  // Large inputs keep the norm's epsilon negligible against the variance.
  const auto r = random_tensor({1, 1, 16, 16}, 5, -100.0, 100.0);
  auto logit = [](double p) { return std::log(p / (1.0 - p)); };
  nn::Tape<double> tape;
  auto x = tape.constant(r);
  auto x3 = nn::scale(x, 3.0);
  const auto p1 = plain.forward(tape, x).value(), p3 = plain.forward(tape, x3).value();
  const auto q1 = normed.forward(tape, x).value(), q3 = normed.forward(tape, x3).value();
  for (std::size_t i = 0; i < p1.size(); ++i) {
    CHECK(logit(p3[i]) == doctest::Approx(3.0 * logit(p1[i])).epsilon(1e-9));
    CHECK(q3[i] == doctest::Approx(q1[i]).epsilon(1e-5));
  }
}

TEST_CASE("output skip variants") {
  CHECK(output_skip_from_string("clean") == OutputSkip::clean);
  CHECK(to_string(OutputSkip::entangled) == "entangled");
  CHECK_THROWS_AS(output_skip_from_string("both"), Error);

  const auto x0 = random_tensor({1, 1, 16, 16}, 7, -0.5, 0.5);
  const auto n0 = random_tensor({1, 1, 16, 16}, 8, -0.1, 0.1);
  const double k = 1.8;
  for (auto skip : {OutputSkip::none, OutputSkip::clean, OutputSkip::entangled}) {
    GeneratorConfig cfg = kTinyGen;
    cfg.output_skip = skip;
    Generator<double> g(cfg, 4);
    make_pass_through(g);
    nn::Tape<double> tape;
    const auto y = g.forward(tape, entangle(tape, tape.constant(x0), tape.constant(n0), k)).value();
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double expected = skip == OutputSkip::none ? 0.0 : skip == OutputSkip::clean ? x0[i] : x0[i] + k * n0[i];
      CHECK(y[i] == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("residual critics judge the scaled difference from the clean image") {
  CHECK(critic_input_from_string("image") == CriticInput::image);
  CHECK(to_string(CriticInput::residual) == "residual");
  CHECK_THROWS_AS(critic_input_from_string("noise"), Error);
  CHECK_THROWS_AS(Discriminator<double>(DiscriminatorConfig{2, 2, CriticInput::residual, 0.0}, 1), Error);
  nn::Tape<double> tape;
  auto x = tape.constant(random_tensor({1, 1, 8, 8}, 1)), x0 = tape.constant(random_tensor({1, 1, 8, 8}, 2));
  const Discriminator<double> r(DiscriminatorConfig{2, 2, CriticInput::residual, 4.0}, 3);
  const Discriminator<double> i(DiscriminatorConfig{2, 2, CriticInput::image, 4.0}, 3);
  const auto rv = critic_view(r, x, x0).value(), iv = critic_view(i, x, x0).value();
  for (std::size_t p = 0; p < 64; ++p) {
    CHECK(rv[p] == doctest::Approx(4.0 * (x.value()[p] - x0.value()[p])));
    CHECK(iv[p] == x.value()[p]);
  }
}

TEST_CASE("entangle scales the noise channel and rejects negative factors") {
  nn::Tape<double> tape;
  auto x0 = tape.constant(random_tensor({1, 1, 8, 8}, 9));
  auto n0 = tape.constant(random_tensor({1, 1, 8, 8}, 10));
  const auto e = entangle(tape, x0, n0, 2.5).value();
  REQUIRE(e.shape() == nn::Shape{1, 2, 8, 8});
  for (std::size_t i = 0; i < 64; ++i) {
    CHECK(e[i] == x0.value()[i]);
    CHECK(e[64 + i] == doctest::Approx(2.5 * n0.value()[i]));
  }
  CHECK_THROWS_AS(entangle(tape, x0, n0, -0.1), Error);
}

TEST_CASE("discriminator loss examples") {
  Discriminator<double> d(kTinyDisc, 11);
  nn::Tape<double> tape;
  auto real = tape.constant(random_tensor({2, 1, 16, 16}, 12));
  auto fake = tape.constant(random_tensor({2, 1, 16, 16}, 13));
  make_coin_flip(d);
  auto x0 = tape.constant(random_tensor({2, 1, 16, 16}, 18));
  CHECK(discriminator_loss(tape, d, real, fake, x0).value()[0] == doctest::Approx(-2.0 * std::log(0.5)).epsilon(1e-12));

  // Single-layer critic that separates two constant images by sign.
  Discriminator<double> sharp(DiscriminatorConfig{1, 1, CriticInput::image}, 14);
  fill(sharp.params(), "conv0.weight", 1.0);
  fill(sharp.params(), "conv0.bias", 0.0);
  fill(sharp.params(), "out.weight", 1e3);
  fill(sharp.params(), "out.bias", 0.0);
  auto plus = tape.constant(nn::Tensor<double>({1, 1, 8, 8}, 1.0));
  auto minus = tape.constant(nn::Tensor<double>({1, 1, 8, 8}, -1.0));
  const double floor = 2.0 * std::log(1.0 / (1.0 - 1e-7));
  const double l = discriminator_loss(tape, sharp, plus, minus, plus).value()[0];
  CHECK(std::isfinite(l));
  CHECK(l == doctest::Approx(floor).epsilon(1e-6));
  // Swapping labels hits the clamp instead of overflowing.
  const double worst = discriminator_loss(tape, sharp, minus, plus, plus).value()[0];
  CHECK(worst == doctest::Approx(-2.0 * std::log(1e-7)).epsilon(1e-6));

  CHECK_THROWS_AS(discriminator_loss(tape, d, real, tape.constant(nn::Tensor<double>({1, 1, 16, 16})), x0), Error);
}

TEST_CASE("discriminator loss gradients match finite differences") {
  const auto real = random_tensor({2, 1, 16, 16}, 16);
  const auto fake = random_tensor({2, 1, 16, 16}, 17);
  const auto x0 = random_tensor({2, 1, 16, 16}, 18, -0.9, 0.9);
  for (bool norm : {false, true}) {
    for (auto input : {CriticInput::residual, CriticInput::image}) {
      Discriminator<double> d(DiscriminatorConfig{2, 2, input, 3.0, norm}, 15);
      ldct::testing::randomize_params(d.params(), 40);
      const double err = gradcheck_params(d.params(), [&](nn::Tape<double>& tape) {
        return discriminator_loss(tape, d, tape.constant(real), tape.variable(fake), tape.constant(x0));
      });
      CHECK(err < 1e-4);
    }
  }
}

TEST_CASE("generator loss examples") {
  Generator<double> g(kTinyGen, 18);
  Discriminator<double> d(kTinyDisc, 19);
  make_pass_through(g);
  make_coin_flip(d);
  nn::Tape<double> tape;
  auto x0 = tape.constant(random_tensor({2, 1, 16, 16}, 20, -0.5, 0.5));
  auto n0 = tape.constant(nn::Tensor<double>({2, 1, 16, 16}));
  const auto res = generator_loss(tape, g, d, x0, n0, 1.3, LossWeights{});
  CHECK(res.total.value()[0] == doctest::Approx(-std::log(0.5)).epsilon(1e-12));
  CHECK(res.fidelity == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(res.reconstruction == doctest::Approx(0.0).epsilon(1e-12));

  // Minimax form is +mean log(1 - D) = ln 0.5 at a coin-flip critic.
  LossWeights minimax;
  minimax.form = AdversarialForm::minimax;
  CHECK(generator_loss(tape, g, d, x0, n0, 1.3, minimax).total.value()[0] ==
        doctest::Approx(std::log(0.5)).epsilon(1e-12));

  SUBCASE("zero weights leave the adversarial term alone") {
    Generator<double> g2(kTinyGen, 21);
    auto noisy = tape.constant(random_tensor({2, 1, 16, 16}, 22, -0.05, 0.05));
    const auto full = generator_loss(tape, g2, d, x0, noisy, 3.0, LossWeights{});
    const auto bare = generator_loss(tape, g2, d, x0, noisy, 3.0, LossWeights{0.0, 0.0});
    CHECK(full.fidelity > 0.0);
    CHECK(bare.total.value()[0] == doctest::Approx(bare.adversarial).epsilon(1e-12));
    CHECK(full.total.value()[0] ==
          doctest::Approx(full.adversarial + 10.0 * full.fidelity + 10.0 * full.reconstruction).epsilon(1e-12));
  }
}

TEST_CASE("generator loss gradients match finite differences") {
  // |x0 - G| stays clear of its kink: G starts near zero, x0 does not.
  Generator<double> g(GeneratorConfig{2, 2, 1, true, OutputSkip::none}, 23);
  Discriminator<double> d(kTinyDisc, 24);
  const auto x0 = ldct::testing::random_away_from_zero({1, 1, 16, 16}, 25, 0.1);
  const auto n0 = random_tensor({1, 1, 16, 16}, 26, -0.2, 0.2);
  const double err = gradcheck_params(g.params(), [&](nn::Tape<double>& tape) {
    return generator_loss(tape, g, d, tape.constant(x0), tape.constant(n0), 1.8, LossWeights{}).total;
  });
  CHECK(err < 1e-4);
  for (auto& p : d.params()) CHECK_FALSE(p.has_grad());

  // The skip signal only shifts the pre-tanh activation; check it on the
  // adversarial term with a step short enough to miss the critic's kinks.
  Generator<double> skip(kTinyGen, 27);
  const double skip_err = gradcheck_params(skip.params(), [&](nn::Tape<double>& tape) {
    return generator_loss(tape, skip, d, tape.constant(x0), tape.constant(n0), 1.8, LossWeights{0.0, 0.0}).total;
  }, 3e-6);
  CHECK(skip_err < 1e-4);
}

TEST_CASE("normalisation window") {
  const NormWindow w;
  CHECK(w.to_unit(-0.2) == doctest::Approx(-1.0));
  CHECK(w.to_unit(0.6) == doctest::Approx(1.0));
  CHECK(w.from_unit(w.to_unit(0.19)) == doctest::Approx(0.19));
  CHECK_THROWS_AS((NormWindow{0.5, 0.5}.validate()), Error);
  const std::vector<Image2D> images{textured(8, 1, 0.0, 0.4)};
  const auto t = to_tensor<float>(images, w, false);
  const auto back = from_tensor(t, 0, w, 0.2);
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(back.values()[i] == doctest::Approx(images[0].values()[i]).epsilon(1e-6));
  const auto noise = to_tensor<double>(images, w, true);
  CHECK(noise[5] == doctest::Approx(images[0].values()[5] * w.scale()));
}

TEST_CASE("model construction, generation and level contract") {
  NeganModel model(tiny_model_config(), 30);
  CHECK(model.levels() == 3);
  CHECK_NOTHROW(model.discriminator(3));
  CHECK_THROWS_AS(model.discriminator(4), Error);
  CHECK_THROWS_AS(model.discriminator(0), Error);
  CHECK_THROWS_AS(NeganModel(tiny_model_config({}), 1), Error);

  const auto x0 = textured(16, 31, 0.1, 0.3), n0 = textured(16, 32, -0.01, 0.01);
  const auto a = model.generate(x0, n0, 1.8), b = model.generate(x0, n0, 1.8);
  CHECK(std::ranges::equal(a.values(), b.values()));
  CHECK(a.same_grid(x0));
  for (double v : a.values()) {
    CHECK(std::isfinite(v));
    CHECK(v >= -0.2 - 1e-6);
    CHECK(v <= 0.6 + 1e-6);
  }
  CHECK_THROWS_AS(model.generate(x0, textured(20, 33, 0, 1), 1.0), Error);
  CHECK_THROWS_AS(model.generate(x0, n0, -1.0), Error);

  const auto samples = tiny_samples(model.config(), 16, 1);
  CHECK_NOTHROW(validate_samples(model, samples, 16));
  auto wrong = samples;
  wrong[0].level = 4;
  CHECK_THROWS_AS(validate_samples(model, wrong, 16), Error);
  wrong = samples;
  wrong[1].k = 2.0;
  CHECK_THROWS_AS(validate_samples(model, wrong, 16), Error);
  CHECK_THROWS_AS(validate_samples(model, samples, 32), Error);
  wrong = samples;
  wrong[2].target = textured(20, 34, 0, 1);
  CHECK_THROWS_AS(validate_samples(model, wrong, 16), Error);
}

TEST_CASE("model checkpoints round-trip with their header") {
  NeganModel model(tiny_model_config({2.0, 3.0, 4.0}), 40);
  io::Container c;
  model.store(c);
  const auto text = c.at("negan.header").as_text();
  CHECK(parse_header(text) == model.config());
  CHECK(text.find("levels") != std::string::npos);
  const auto back = NeganModel::load(io::Container::parse(c.serialize()));
  CHECK(back == model);

  io::Container no_header;
  CHECK_THROWS_AS(NeganModel::load(no_header), Error);
}

TEST_CASE("training configuration") {
  const auto paper = TrainConfig::paper_scale(3);
  CHECK(paper.schedule.base_lr == 2e-4);
  CHECK(paper.beta1 == 0.5);
  CHECK(paper.beta2 == 0.999);
  CHECK(paper.batch == 8);
  CHECK(paper.patch == 128);
  CHECK(paper.schedule.flat_epochs == 200);
  CHECK(paper.schedule.decay_epochs == 200);
  auto bad = tiny_train_config(1);
  bad.patch = 18;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = tiny_train_config(1);
  bad.batch = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("training is deterministic and resumable") {
  const auto mcfg = tiny_model_config({1.8, 3.0});
  const auto samples = tiny_samples(mcfg, 20, 2);

  NeganTrainer a(NeganModel(mcfg, 50), tiny_train_config(2));
  NeganTrainer b(NeganModel(mcfg, 50), tiny_train_config(2));
  const auto la = a.train(samples), lb = b.train(samples);
  REQUIRE(la.size() == 2);
  CHECK(la == lb);
  CHECK(la[0].steps == 2);  // two levels of one full batch each
  CHECK(a.model() == b.model());
  for (const auto& log : la) {
    CHECK(std::isfinite(log.discriminator));
    CHECK(std::isfinite(log.adversarial));
  }

  // One epoch, checkpoint, one more epoch equals two uninterrupted epochs.
  NeganTrainer first(NeganModel(mcfg, 50), tiny_train_config(1));
  first.train(samples);
  io::Container ckpt;
  first.store(ckpt);
  auto resumed = NeganTrainer::load(io::Container::parse(ckpt.serialize()), tiny_train_config(2));
  CHECK(resumed.epoch() == 1);
  resumed.train(samples);
  CHECK(resumed.history() == a.history());
  CHECK(resumed.model() == a.model());

  NeganTrainer other(NeganModel(mcfg, 50), [] {
    auto c = tiny_train_config(1);
    c.seed = 6;
    return c;
  }());
  other.train(samples);
  CHECK_FALSE(other.model() == first.model());
}

TEST_CASE("training logs round-trip as text") {
  const std::vector<EpochLog> logs{{0, 2e-4, 1.38, 0.69, 0.01, 0.002, 48}, {1, 1e-4, 1.2, 0.8, 0.02, 0.001, 48}};
  const auto text = format_log(logs);
  CHECK(text.rfind("epoch,lr,d_loss,g_adversarial,g_fidelity,g_reconstruction,steps\n", 0) == 0);
  const auto back = parse_log(text);
  REQUIRE(back.size() == 2);
  CHECK(back[1].epoch == 1);
  CHECK(back[1].discriminator == doctest::Approx(1.2));
  CHECK(back[0].steps == 48);
  CHECK_THROWS_AS(parse_log("nope\n"), Error);
}

TEST_CASE("random crops stay inside the image") {
  auto rng = epoch_rng(1, 0);
  for (int i = 0; i < 200; ++i) {
    const auto c = random_crop(40, 30, 16, rng);
    CHECK(c.row + 16 <= 40);
    CHECK(c.col + 16 <= 30);
  }
  CHECK_THROWS_AS(random_crop(10, 30, 16, rng), Error);
  auto r1 = epoch_rng(1, 3), r2 = epoch_rng(1, 3), r3 = epoch_rng(1, 4);
  const auto v1 = r1(), v2 = r2(), v3 = r3();
  CHECK(v1 == v2);
  CHECK(v1 != v3);
}

}  // TEST_SUITE
