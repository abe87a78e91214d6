#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "predgame/errors.hpp"
#include "predgame/nn/checkpoint.hpp"

using namespace predgame;
using namespace predgame::nn;

namespace fs = std::filesystem;

namespace {

std::string temp_file(const std::string& name) {
  return (fs::temp_directory_path() / name).string();
}

std::vector<char> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("tensor container round-trips bit-exactly, including awkward values") {
  Tensor a = Tensor::zeros({2, 3});
  a.data = {1.0, -0.0, 1e-308, 3.141592653589793, -2.5e300, 0.1};
  Tensor b = Tensor::zeros({4});
  b.data = {std::numeric_limits<double>::min(), std::numeric_limits<double>::denorm_min(),
            std::numeric_limits<double>::max(), -1.0 / 3.0};

  const std::string path = temp_file("predgame_ckpt_roundtrip.ckpt");
  save_tensors(path, {{"layer.w", &a}, {"layer.b", &b}});
  const auto loaded = load_tensors(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].first == "layer.w");
  CHECK(loaded[0].second.shape == std::vector<std::size_t>{2, 3});
  CHECK(loaded[0].second.data == a.data);
  CHECK(loaded[1].first == "layer.b");
  CHECK(loaded[1].second.data == b.data);

  // Saving the loaded tensors again produces identical bytes.
  save_tensors(temp_file("predgame_ckpt_roundtrip2.ckpt"),
               {{"layer.w", &loaded[0].second}, {"layer.b", &loaded[1].second}});
  CHECK(read_bytes(path) == read_bytes(temp_file("predgame_ckpt_roundtrip2.ckpt")));
  fs::remove(path);
  fs::remove(temp_file("predgame_ckpt_roundtrip2.ckpt"));
}

TEST_CASE("checkpoint starts with the magic and version") {
  Tensor a = Tensor::zeros({1});
  const std::string path = temp_file("predgame_ckpt_magic.ckpt");
  save_tensors(path, {{"x", &a}});
  const auto bytes = read_bytes(path);
  REQUIRE(bytes.size() >= 6);
  CHECK(bytes[0] == 'C');
  CHECK(bytes[1] == 'P');
  CHECK(bytes[2] == 'R');
  CHECK(bytes[3] == 'B');
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);  // version u16 LE
  CHECK(static_cast<unsigned char>(bytes[5]) == 0);
  fs::remove(path);
}

TEST_CASE("corrupted magic is rejected") {
  const std::string path = temp_file("predgame_ckpt_bad.ckpt");
  std::ofstream(path, std::ios::binary) << "NOPE garbage";
  CHECK_THROWS_AS(load_tensors(path), ValidationError);
  fs::remove(path);
}

TEST_CASE("missing file raises artifact-not-found") {
  CHECK_THROWS_AS(load_tensors("/nonexistent/predgame.ckpt"), ArtifactNotFoundError);
}

TEST_CASE("policy checkpoints reconstruct both architectures exactly") {
  Rng rng(7007);
  SUBCASE("feed-forward") {
    auto p = FFPolicy::create(8, 4, 4, 32, Activation::Relu);
    p.init_params(rng);
    const std::string path = temp_file("predgame_policy_ff.ckpt");
    save_policy(path, Policy(p));
    const auto loaded = load_policy(path);
    REQUIRE_FALSE(is_recurrent(loaded));
    const auto& q = std::get<FFPolicy>(loaded);
    CHECK(q.activation == Activation::Relu);
    const auto pt = p.tensors();
    const auto qt = std::get<FFPolicy>(loaded).tensors();
    for (std::size_t i = 0; i < pt.size(); ++i) {
      CHECK(pt[i].name == qt[i].name);
      CHECK(pt[i].tensor->data == qt[i].tensor->data);
    }
    fs::remove(path);
  }
  SUBCASE("recurrent") {
    auto p = RNNPolicy::create(8, 4, 4, 16, Activation::Tanh);
    p.init_params(rng);
    const std::string path = temp_file("predgame_policy_rnn.ckpt");
    save_policy(path, Policy(p));
    const auto loaded = load_policy(path);
    REQUIRE(is_recurrent(loaded));
    CHECK(std::get<RNNPolicy>(loaded).activation == Activation::Tanh);
    CHECK(std::get<RNNPolicy>(loaded).gru.uh.data == p.gru.uh.data);
    fs::remove(path);
  }
}
