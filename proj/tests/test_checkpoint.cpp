#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "nrdf/checkpoint.hpp"
#include "test_support.hpp"

using namespace nrdf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const char* name) {
  const fs::path dir = fs::temp_directory_path() / "nrdf_checkpoint_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_all(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

ErrorKind load_error(const fs::path& p) {
  try {
    load_tables(p);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("load unexpectedly succeeded");
  return ErrorKind::Validation;
}

}  // namespace

TEST_CASE("round trip of a one-point table") {
  const auto p = testing::binary_problem({0.4}, -2.0);
  const auto t = backward_pass(p.source, p.distortion, p.grids(1), p.schedule, {});
  const fs::path f = scratch("small.bin");
  save_tables(t, f);
  CHECK(load_tables(f) == t);
  CHECK(deserialize_tables(serialize_tables(t)) == t);
}

TEST_CASE("round trip of a twenty-stage table") {
  const auto p = testing::binary_problem(std::vector<double>(20, 0.4), -2.0);
  BackwardOptions o;
  o.workers = 2;
  const auto t = backward_pass(p.source, p.distortion, p.grids(10), p.schedule, o);
  const fs::path f = scratch("large.bin");
  save_tables(t, f);
  const auto back = load_tables(f);
  CHECK(back == t);
  CHECK(tables_checksum(back) == tables_checksum(t));
}

TEST_CASE("damaged files are rejected") {
  const auto p = testing::binary_problem({0.4, 0.3}, -2.0);
  const auto t = backward_pass(p.source, p.distortion, p.grids(3), p.schedule, {});
  const fs::path good = scratch("good.bin");
  save_tables(t, good);
  const std::string bytes = read_all(good);

  SUBCASE("truncated") {
    const fs::path f = scratch("truncated.bin");
    write_all(f, bytes.substr(0, bytes.size() / 2));
    CHECK(load_error(f) == ErrorKind::CorruptFile);
    write_all(f, bytes.substr(0, 5));
    CHECK(load_error(f) == ErrorKind::CorruptFile);
  }
  SUBCASE("flipped payload byte") {
    std::string b = bytes;
    b[40] = static_cast<char>(b[40] ^ 0x10);
    const fs::path f = scratch("flipped.bin");
    write_all(f, b);
    CHECK(load_error(f) == ErrorKind::CorruptFile);
  }
  SUBCASE("bad magic") {
    std::string b = bytes;
    b[0] = 'X';
    const fs::path f = scratch("magic.bin");
    write_all(f, b);
    CHECK(load_error(f) == ErrorKind::CorruptFile);
  }
  SUBCASE("future version") {
    std::string b = bytes;
    b[8] = static_cast<char>(kCheckpointVersion + 1);
    const fs::path f = scratch("version.bin");
    write_all(f, b);
    CHECK(load_error(f) == ErrorKind::Version);
  }
  SUBCASE("missing file") {
    CHECK(load_error(scratch("does_not_exist.bin")) == ErrorKind::Io);
  }
}

TEST_CASE("checksum separates different tables") {
  const auto a = testing::binary_problem({0.4}, -2.0);
  const auto b = testing::binary_problem({0.4}, -1.0);
  const auto ta = backward_pass(a.source, a.distortion, a.grids(3), a.schedule, {});
  const auto tb = backward_pass(b.source, b.distortion, b.grids(3), b.schedule, {});
  CHECK(tables_checksum(ta) != tables_checksum(tb));
}
