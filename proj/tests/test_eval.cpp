#include "hebbnet/eval.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace hebbnet;

namespace {

Network tiny_tanh_net(std::uint64_t seed = 21) {
  Json cfg{{"seed", seed},
           {"gamma", 0.0},
           {"input", {{"size", 4}}},
           {"layers",
            Json::array({Json{{"size", 3},
                              {"activation", {{"kind", "tanh"}}},
                              {"feedforward", {{"type", "all_to_all"}}},
                              {"lateral", {{"type", "all_to_all"}}}}})},
           {"dynamics", {{"step", 0.1}, {"tol", 1e-9}, {"max_iters", 20000}}},
           {"plasticity", {{"eta", 0.05}}}};
  return Network::initialize(config_from_json(cfg));
}

TEST(Eval, ZeroWeightsGiveZeroFeatures) {
  Network net = tiny_tanh_net();
  for (auto& v : net.weights()[0].W.values()) v = 0.0;
  Dataset d;
  d.samples = Mat::Random(5, 4);
  const FeatureMatrix fm = extract_features(net, d, 1);
  EXPECT_EQ(fm.values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Eval, ExtractFeaturesDeterministic) {
  Network net = tiny_tanh_net();
  Dataset d;
  d.samples = Mat::Random(7, 4);
  const FeatureMatrix a = extract_features(net, d, 1);
  const FeatureMatrix b = extract_features(net, d, 1);
  EXPECT_EQ((a.values - b.values).cwiseAbs().maxCoeff(), 0.0);
  // identical input rows map to identical feature rows (cold start)
  Dataset twice;
  twice.samples.resize(2, 4);
  twice.samples.row(0) = d.samples.row(3);
  twice.samples.row(1) = d.samples.row(3);
  const FeatureMatrix f2 = extract_features(net, twice, 1);
  EXPECT_EQ((f2.values.row(0) - f2.values.row(1)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Eval, ClassifierSeparableFixture) {
  // Two linearly separable clouds in 2-D.
  Mat X(40, 2);
  std::vector<int> y(40);
  Rng rng = make_rng(31, "sep");
  for (int t = 0; t < 40; ++t) {
    const int c = t % 2;
    X(t, 0) = (c == 0 ? 2.0 : -2.0) + 0.3 * gaussian(rng);
    X(t, 1) = gaussian(rng);
    y[t] = c;
  }
  const auto clf = LinearClassifier::train(X, y, {1e-4, 60, 5});
  EXPECT_EQ(clf.error_rate(X, y), 0.0);
}

TEST(Eval, ClassifierDeterministicBySeed) {
  Mat X = Mat::Random(30, 5);
  std::vector<int> y(30);
  for (int t = 0; t < 30; ++t) y[t] = t % 3;
  const auto a = LinearClassifier::train(X, y, {1e-3, 5, 11});
  const auto b = LinearClassifier::train(X, y, {1e-3, 5, 11});
  EXPECT_EQ((a.weight() - b.weight()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Eval, ClassifierSingleClassDegenerate) {
  Mat X = Mat::Random(10, 3);
  std::vector<int> y(10, 0);
  EXPECT_THROW(LinearClassifier::train(X, y, {}), InvalidInputError);
}

// Label-permutation control: error lands at chance level.
TEST(Eval, ClassifierPermutedLabelsAtChance) {
  const int T = 3000, C = 5;
  Rng rng = make_rng(33, "chance");
  Mat X(T, 8);
  std::vector<int> y(T);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < 8; ++i) X(t, i) = gaussian(rng);
    y[t] = static_cast<int>(uniform_below(rng, C));  // labels independent of X
  }
  Mat Xtest(T, 8);
  std::vector<int> ytest(T);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < 8; ++i) Xtest(t, i) = gaussian(rng);
    ytest[t] = static_cast<int>(uniform_below(rng, C));
  }
  const auto clf = LinearClassifier::train(X, y, {1e-3, 3, 13});
  const double err = clf.error_rate(Xtest, ytest);
  EXPECT_NEAR(err, 1.0 - 1.0 / C, 0.02);
}

TEST(Eval, RepresentationalSimilarityDelegates) {
  FeatureMatrix fm;
  fm.values.resize(3, 2);
  fm.values << 1.0, 0.0, 1.0, 0.0, 0.0, 2.0;
  const Mat s = representational_similarity(fm, {0, 1, 2});
  EXPECT_DOUBLE_EQ(s(0, 1), 0.25);  // 1 / max (=4)
  EXPECT_DOUBLE_EQ(s(2, 2), 1.0);
  EXPECT_THROW(representational_similarity(fm, {5}), ConfigError);
}

Network grid_net() {
  Json cfg{{"seed", 77},
           {"gamma", 0.0},
           {"input", {{"grid", {{"height", 8}, {"width", 8}}}}},
           {"layers",
            Json::array({Json{{"grid", {{"stride", 2}, {"nps", 1}}},
                              {"activation", {{"kind", "capped_relu"}, {"lambda", 0.0}, {"cap", 1.0}}},
                              {"feedforward", {{"type", "local"}, {"radius", 1.5}}},
                              {"lateral",
                               {{"type", "local"}, {"radius", 0.0}, {"include_diagonal", true}}}}})},
           {"plasticity", {{"eta", 0.05}}}};
  return Network::initialize(config_from_json(cfg));
}

TEST(Eval, FootprintsMatchMaskComposition) {
  Network net = grid_net();
  const auto fps = layer_footprints(net.config().w_masks, 1);
  ASSERT_EQ(fps.size(), 16u);
  // layer-1 footprint is exactly the feedforward fan-in set
  const auto& mask = net.config().w_masks[0];
  for (int i = 0; i < 16; ++i) {
    std::vector<int> direct;
    for (const auto& e : mask.entries())
      if (e.row == i) direct.push_back(e.col);
    std::sort(direct.begin(), direct.end());
    EXPECT_EQ(fps[i], direct);
  }
}

TEST(Eval, ReverseCorrelationSingleResponder) {
  Network net = grid_net();
  // craft weights: neuron 5 responds to exactly one input pattern
  for (auto& v : net.weights()[0].W.values()) v = 0.0;
  auto& W = net.weights()[0].W;
  // give neuron 5 positive weight on its first fan-in pixel
  for (std::size_t k = 0; k < W.nnz(); ++k)
    if (W.row_index()[k] == 5) {
      W.values()[k] = 1.0;
      break;
    }
  Dataset d;
  d.samples = Mat::Zero(3, 64);
  d.image_height = d.image_width = 8;
  // sample 1 hits neuron 5's pixel
  int pixel = -1;
  for (std::size_t k = 0; k < W.nnz(); ++k)
    if (W.row_index()[k] == 5 && W.values()[k] == 1.0) pixel = W.col_index()[k];
  ASSERT_GE(pixel, 0);
  d.samples(1, pixel) = 1.0;
  d.samples(1, 0) = 0.7;  // outside neuron 5's footprint unless pixel 0 is in it

  const auto features = reverse_correlation_features(net, d, 1);
  EXPECT_TRUE(features[5].active);
  // the feature equals sample 1 restricted to the footprint
  const auto fps = layer_footprints(net.config().w_masks, 1);
  Vec expected = Vec::Zero(64);
  for (int px : fps[5]) expected[px] = d.samples(1, px);
  EXPECT_LT((features[5].image - expected).cwiseAbs().maxCoeff(), 1e-12);
  // a neuron with zero weights never responds -> flagged inactive
  EXPECT_FALSE(features[0].active);
}

TEST(Eval, ReverseCorrelationConfinedToFootprint) {
  Network net = grid_net();
  Rng rng = make_rng(55, "rc");
  Dataset d;
  d.samples.resize(20, 64);
  for (int t = 0; t < 20; ++t)
    for (int i = 0; i < 64; ++i) d.samples(t, i) = uniform_real(rng);
  d.image_height = d.image_width = 8;
  const auto features = reverse_correlation_features(net, d, 1);
  const auto fps = layer_footprints(net.config().w_masks, 1);
  for (std::size_t j = 0; j < features.size(); ++j) {
    if (!features[j].active) continue;
    std::vector<char> in_fp(64, 0);
    for (int px : fps[j]) in_fp[px] = 1;
    for (int i = 0; i < 64; ++i)
      if (!in_fp[i]) EXPECT_EQ(features[j].image[i], 0.0);
  }
  EXPECT_THROW(reverse_correlation_features(net, Dataset{Mat::Zero(2, 64)}, 1), InvalidInputError);
}

TEST(Eval, TensorFileRoundTrip) {
  test::TempDir dir("tns");
  Mat a = Mat::Random(3, 5), b = Mat::Random(1, 2);
  write_tensor_file(dir.file("x.tns"), {{"a", a}, {"b", b}});
  const auto back = read_tensor_file(dir.file("x.tns"));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ((back.at("a") - a).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((back.at("b") - b).cwiseAbs().maxCoeff(), 0.0);
  std::ofstream(dir.file("junk.tns")) << "nope";
  EXPECT_THROW(read_tensor_file(dir.file("junk.tns")), CorruptFileError);
}

TEST(Eval, FeatureMontageShape) {
  std::vector<NeuronFeature> fs(5);
  for (auto& f : fs) {
    f.image = Vec::Zero(16);
    f.active = true;
    f.image[3] = 1.0;
  }
  fs[2].active = false;
  const Mat m = feature_montage(fs, 4, 4);
  EXPECT_EQ(m.rows(), 3 * 4 + 2 * 2);
  EXPECT_EQ(m.cols(), 3 * 4 + 2 * 2);
}

}  // namespace
