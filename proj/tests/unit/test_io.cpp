#include "spar/error.hpp"
#include "spar/io.hpp"
#include "spar/simulate.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace spar;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("spar_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("csv round trip is exact") {
    const fs::path dir = scratch("csv");
    Matrix m(2, 3);
    m << 0.1, -1.0 / 3.0, 1e-300, 12345.678901234567, -0.0, 2.0;
    write_csv_matrix(dir / "m.csv", m);
    CHECK(read_csv_matrix(dir / "m.csv") == m);
  }

  TEST_CASE("format_double uses 17 significant digits and a dot") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(2.0) == "2");
  }

  TEST_CASE("bundle round trip keeps data and truth") {
    const fs::path dir = scratch("bundle");
    LowDimConfig c;
    c.n = 40;
    c.r = 2;
    c.seed = 4;
    const Simulated sim = gen_lowdim(c);
    write_bundle(dir / "b", sim.data, {{"seed", 4}, {"generator", "lowdim"}}, &sim.truth);
    const Bundle b = read_bundle(dir / "b");
    CHECK(b.data.X == sim.data.X);
    CHECK(b.data.Y == sim.data.Y);
    REQUIRE(b.data.W.has_value());
    CHECK(*b.data.W == *sim.data.W);
    CHECK(b.meta["n"] == 40);
    CHECK(b.meta["r"] == 2);
    REQUIRE(b.truth.has_value());
    CHECK(b.truth->beta == sim.truth.beta);
    CHECK(b.truth->alpha == sim.truth.alpha);
    CHECK(b.truth->q == 3);
    CHECK(b.truth->eta.has_value());
  }

  TEST_CASE("missing or ragged files raise IoError") {
    const fs::path dir = scratch("bad");
    CHECK_THROWS_AS(read_csv_matrix(dir / "nope.csv"), Error);
    {
      std::ofstream out(dir / "r.csv");
      out << "1,2\n3\n";
    }
    try {
      read_csv_matrix(dir / "r.csv");
      FAIL("expected IoError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::IoError);
    }
  }
}
