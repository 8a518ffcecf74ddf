#include <doctest.h>

#include <filesystem>

#include "lmkd/checkpoint.hpp"

using namespace lmkd;
namespace fs = std::filesystem;

TEST_CASE("checkpoint round trip is byte identical") {
  for (Role r : {Role::Student, Role::Teacher}) {
    const auto spec = build_toy(r, 1.0, 16);
    const auto ckpt = make_checkpoint(Network<float>::init(spec, 4), R"({"epoch":3})");
    CHECK(ckpt.param_elements() == count_params(spec));
    const std::string bytes = serialize(ckpt);
    const Checkpoint back = deserialize(bytes);
    CHECK(back == ckpt);
    CHECK(serialize(back) == bytes);

    const auto path = (fs::temp_directory_path() / "lmkd_ckpt_test.bin").string();
    save_checkpoint(back, path);
    CHECK(read_file_bytes(path) == bytes);
    CHECK(load_checkpoint(path) == ckpt);
  }
}

TEST_CASE("double precision checkpoints and network rebuild") {
  const auto spec = build_toy(Role::Student, 0.5, 12);
  auto net = Network<double>::init(spec, 9);
  const auto ckpt = make_checkpoint(net);
  CHECK(ckpt.precision == Precision::F64);
  auto rebuilt = network_from<double>(deserialize(serialize(ckpt)));
  const auto a = net.parameters(), b = rebuilt.parameters();
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::equal(a[i].data().begin(), a[i].data().end(), b[i].data().begin()));
  }
  auto as_float = network_from<float>(ckpt);
  CHECK(as_float.parameters().size() == a.size());
}

TEST_CASE("corrupt checkpoints are rejected") {
  const auto ckpt = make_checkpoint(Network<float>::init(build_toy(Role::Student, 1.0, 16), 1));
  const std::string bytes = serialize(ckpt);
  CHECK_THROWS(deserialize("NOPE"));
  CHECK_THROWS(deserialize(bytes.substr(0, bytes.size() - 3)));
  CHECK_THROWS(deserialize(bytes + "x"));
  std::string wrong_version = bytes;
  wrong_version[4] = 9;
  CHECK_THROWS(deserialize(wrong_version));

  Checkpoint short_params = ckpt;
  short_params.params.pop_back();
  CHECK_THROWS(deserialize(serialize(short_params)));
}
