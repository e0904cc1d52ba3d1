#include <fstream>
#include <sstream>

#include "doctest.h"
#include "test_util.hpp"
#include "xltrack/checkpoint.hpp"
#include "xltrack/errors.hpp"
#include "xltrack/layers.hpp"

using namespace xltrack::nn;
using xltrack::IoError;
using xltrack::Rng;
using xltrack::ShapeError;

namespace {

std::string file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("checkpoint: entries round-trip exactly") {
  testutil::TempDir dir("ckpt");
  const std::string path = dir.str() + "/model.ckpt";

  std::vector<CheckpointEntry> entries{
      {"w", Tensor({2, 2}, {1.0, -2.5, 1.0 / 3.0, 1e-300})},
      {"b", Tensor({3}, {0.0, 42.0, -0.125})},
  };
  save_checkpoint(path, entries);

  const auto back = load_checkpoint(path);
  REQUIRE(back.size() == 2);
  CHECK(back.at("w").shape == std::vector<int>{2, 2});
  for (int i = 0; i < 4; ++i) CHECK(back.at("w")[i] == entries[0].tensor[i]);
  for (int i = 0; i < 3; ++i) CHECK(back.at("b")[i] == entries[1].tensor[i]);
}

TEST_CASE("checkpoint: rewriting identical entries produces identical bytes") {
  testutil::TempDir dir("ckpt");
  const std::string p1 = dir.str() + "/a.ckpt";
  const std::string p2 = dir.str() + "/b.ckpt";
  std::vector<CheckpointEntry> entries{{"x", Tensor({4}, {1, 2, 3, 4})}};
  save_checkpoint(p1, entries);
  save_checkpoint(p2, entries);
  CHECK(file_bytes(p1) == file_bytes(p2));
}

TEST_CASE("checkpoint: parameter bridges restore by name with strict shapes") {
  testutil::TempDir dir("ckpt");
  const std::string path = dir.str() + "/layer.ckpt";

  Rng rng(5);
  DenseLayer d("fc", 3, 2, rng);
  std::vector<Parameter*> params{&d.weight, &d.bias};
  std::vector<CheckpointEntry> entries;
  append_params(entries, params);
  REQUIRE(entries.size() == 2);
  save_checkpoint(path, entries);

  Rng rng2(99);
  DenseLayer d2("fc", 3, 2, rng2);
  restore_params(load_checkpoint(path), {&d2.weight, &d2.bias});
  for (std::int64_t i = 0; i < d.weight.value().size(); ++i) {
    CHECK(d2.weight.value()[i] == d.weight.value()[i]);
  }

  // A renamed layer cannot be restored from this file.
  Rng rng3(1);
  DenseLayer other("other", 3, 2, rng3);
  CHECK_THROWS_AS(restore_params(load_checkpoint(path), {&other.weight, &other.bias}),
                  IoError);

  // Shape mismatches are rejected.
  Rng rng4(1);
  DenseLayer wrong("fc", 4, 2, rng4);
  CHECK_THROWS(restore_params(load_checkpoint(path), {&wrong.weight, &wrong.bias}));
}

TEST_CASE("checkpoint: missing file fails cleanly") {
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/x.ckpt"), IoError);
}
