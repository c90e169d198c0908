#include "doctest.h"

#include "ratemix/io.hpp"

#include <cmath>
#include <filesystem>
#include <random>

using namespace ratemix;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ratemix_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

io::SiteTable three_sites() {
  io::SiteTable t;
  t.ids = {"A", "B", "C"};
  t.coords = {{0.1, 0.2}, {1.0 / 3.0, 5e-17}, {-4.0, 1e10}};
  t.covariates.resize(3, 2);
  t.covariates << 1.0, 0.1, 2.0, 0.2, 3.0, 1.0 / 7.0;
  t.covariate_names = {"alt", "lat"};
  return t;
}

}  // namespace

TEST_CASE("number formatting round-trips exactly") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int k = 0; k < 2000; ++k) {
    const double v = std::exp(u(gen)) * (k % 2 ? 1 : -1);
    CHECK(io::parse_double(io::format_double(v), "test") == v);
  }
  CHECK(io::format_double(kInf) == "inf");
  CHECK(std::isinf(io::parse_double("inf", "t")));
  CHECK(std::isnan(io::parse_double("nan", "t")));
  CHECK_THROWS_AS(io::parse_double("1.5x", "ctx"), ValidationError);
  CHECK_THROWS_AS(io::parse_double("", "ctx"), ValidationError);
}

TEST_CASE("sites and long data round-trip losslessly") {
  const auto sites = three_sites();
  io::write_sites(scratch("sites.csv"), sites);
  const auto back = io::read_sites(scratch("sites.csv"));
  CHECK(back.ids == sites.ids);
  CHECK(back.covariates == sites.covariates);
  CHECK(back.coords[1].y == sites.coords[1].y);

  io::LongData d;
  d.site_ids = sites.ids;
  d.time_ids = {"2020-01-01", "2020-01-02"};
  d.y.resize(2, 3);
  d.y << 0.1, std::nan(""), 2.0 / 3.0, 0.0, 7.25, 1e-300;
  d.censor = Matrix(2, 3);
  *d.censor << 0.5, kInf, 0.0, 0.5, kInf, 0.0;
  io::write_long_data(scratch("data.csv"), d);
  const auto r = io::read_long_data(scratch("data.csv"), back);
  CHECK(r.time_ids == d.time_ids);
  CHECK(std::isnan(r.y(0, 1)));
  CHECK(r.y(0, 2) == d.y(0, 2));
  CHECK(r.y(1, 2) == d.y(1, 2));
  CHECK(*r.censor == *d.censor);
  CHECK(io::file_hash(scratch("data.csv")) == io::content_hash(io::read_file(scratch("data.csv"))));

  const Matrix u = io::thresholds_from_censor(r);
  const auto ex = io::to_exceedance(r, u);
  CHECK(ex.kind(0, 0) == CellKind::censored);
  CHECK(ex.kind(0, 1) == CellKind::missing);
  CHECK(ex.kind(0, 2) == CellKind::exceed);
}

TEST_CASE("ingestion rejects malformed data") {
  const auto sites = three_sites();
  io::write_file(scratch("dup.csv"), "site_id,time_id,value\nA,t1,1\nA,t1,2\n");
  CHECK_THROWS_WITH_AS(io::read_long_data(scratch("dup.csv"), sites), doctest::Contains("duplicate"), ValidationError);
  io::write_file(scratch("unk.csv"), "site_id,time_id,value\nZ,t1,1\n");
  CHECK_THROWS_WITH_AS(io::read_long_data(scratch("unk.csv"), sites), doctest::Contains("unknown site_id"), ValidationError);
  io::write_file(scratch("neg.csv"), "site_id,time_id,value\nA,t1,-1\n");
  CHECK_THROWS_AS(io::read_long_data(scratch("neg.csv"), sites), ValidationError);
  io::write_file(scratch("hdr.csv"), "site,time,value\n");
  CHECK_THROWS_AS(io::read_long_data(scratch("hdr.csv"), sites), ValidationError);
  // an observed value below a zero threshold is fine; a missing value needs u = inf
  io::write_file(scratch("miss.csv"), "site_id,time_id,value,censor\nA,t1,,0.5\nB,t1,1,0\nC,t1,1,0\n");
  const auto d = io::read_long_data(scratch("miss.csv"), sites);
  CHECK(std::isinf(io::thresholds_from_censor(d)(0, 0)));
  CHECK_THROWS_AS(io::to_exceedance(d, *d.censor), ValidationError);
}

TEST_CASE("config access and errors") {
  const auto c = io::Config::from_string("[simulate]\nd = 20\nseed = 4\n[sampler]\nomega = 0.5\n");
  CHECK(c.get_size("simulate.d") == 20);
  CHECK(c.get_double_or("sampler.omega", 0.4) == 0.5);
  CHECK(c.get_double_or("sampler.missing", 0.4) == 0.4);
  CHECK_THROWS_WITH_AS(c.get("simulate.n"), "missing config key 'simulate.n'", ValidationError);
  CHECK_THROWS_WITH_AS(io::scenario_from_config(c), "missing config key 'simulate.n'", ValidationError);
  CHECK_THROWS_WITH_AS(io::Config::from_string("[a]\nx = 1\nbroken line\n"), doctest::Contains("line 3"), ValidationError);
  const auto bad = io::Config::from_string("[simulate]\nd = twenty\n");
  CHECK_THROWS_WITH_AS(bad.get_size("simulate.d"), doctest::Contains("simulate.d"), ValidationError);
  CHECK(io::Config::from_string(c.canonical()).canonical() == c.canonical());
}

TEST_CASE("config defaults equal the documented sampler settings") {
  const auto c = io::Config::from_string("[sampler]\nn_iter = 1000\nburnin1 = 100\nburnin2 = 200\n");
  const auto s = io::sampler_from_config(c);
  CHECK(s.omega == 0.4);
  CHECK(s.p_tar_mala == 0.57);
  CHECK(s.p_tar_rw == 0.23);
  CHECK(s.adapt_interval == 500);
  CHECK(s.mala_band.lo == 0.50);
  CHECK(s.mala_band.hi == 0.65);
  CHECK(s.rw_band.lo == 0.15);
  CHECK(s.rw_band.hi == 0.30);
  CHECK(s.checkpoint_interval == 50000);
}

TEST_CASE("content hash follows the git blob convention") {
  CHECK(io::content_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(io::content_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("manifest echoes the config and reloads it") {
  const auto c = io::Config::from_string("[fit]\nvariant = D2\n[sampler]\nseed = 9\n");
  io::write_file(scratch("in.txt"), "abc");
  const std::string m = io::manifest_json("fit", c, {{"data", scratch("in.txt")}});
  CHECK(m.find("\"variant\": \"D2\"") != std::string::npos);
  CHECK(m.find("\"seed\": \"9\"") != std::string::npos);
  CHECK(m.find(io::content_hash("abc")) != std::string::npos);
  CHECK(m == io::manifest_json("fit", c, {{"data", scratch("in.txt")}}));
  io::write_file(scratch("manifest.json"), m);
  CHECK(io::config_from_manifest(scratch("manifest.json")).canonical() == c.canonical());
}

TEST_CASE("checkpoint round trip and hash guard") {
  ChainSnapshot s;
  s.next_iter = 42;
  s.theta = {0.1, -0.2};
  s.latents = Matrix::Random(3, 4);
  s.tuning.tau_lambda = 0.003;
  s.tuning.phase = Phase::adapt2;
  s.rng_state = "1 2 3";
  ChainOutput o;
  o.names = {"a", "b"};
  o.n_iter = 100;
  o.burnin = 50;
  o.thin = 2;
  o.hyper_trace = {1, 2, 3, 4};
  o.traced_cells = {{0, 1}};
  o.stored_columns = {3};
  o.stored_latents = {Matrix::Random(3, 1)};
  o.history = {{500, Phase::adapt1, 0.2, 0.5, 1e-3, 1e-2}};
  const std::string bytes = io::encode_checkpoint(s, o, "h1");
  const auto [s2, o2] = io::decode_checkpoint(bytes, "h1");
  CHECK(s2.latents == s.latents);
  CHECK(s2.theta == s.theta);
  CHECK(s2.tuning.phase == Phase::adapt2);
  CHECK(o2.hyper_trace == o.hyper_trace);
  CHECK(o2.stored_latents[0] == o.stored_latents[0]);
  CHECK(o2.traced_cells == o.traced_cells);
  CHECK(o2.history[0].mala_rate == 0.5);
  CHECK_THROWS_WITH_AS(io::decode_checkpoint(bytes, "h2"), doctest::Contains("resume refused"), ValidationError);
  CHECK_THROWS_AS(io::decode_checkpoint("garbage", "h1"), ValidationError);
}

TEST_CASE("predictive table round trip") {
  io::PredictiveTable t;
  t.site_ids = {"s9", "s10"};
  t.time_ids = {"t1", "t2", "t3"};
  t.draws = {Matrix::Random(4, 3).cwiseAbs(), Matrix::Random(4, 3).cwiseAbs()};
  io::write_file(scratch("pred.csv"), io::predictive_csv(t));
  const auto r = io::read_predictive(scratch("pred.csv"));
  CHECK(r.site_ids == t.site_ids);
  CHECK(r.time_ids == t.time_ids);
  CHECK(r.draws[1] == t.draws[1]);
}

TEST_CASE("event extraction") {
  SUBCASE("constant series has no strict exceedances") {
    const Matrix y = Matrix::Constant(50, 3, 2.0);
    CHECK(io::extract_events(y, 0.85).events.empty());
  }
  SUBCASE("single site equals its own series") {
    Matrix y(5, 1);
    y << 1, 5, 2, 4, 3;
    const auto ex = io::extract_events(y, 0.5);
    CHECK(ex.threshold == 3.0);
    REQUIRE(ex.events.size() == 2);
    CHECK(ex.events[0].mean == 5.0);
  }
  SUBCASE("missing cells are excluded and counted") {
    Matrix y(3, 2);
    y << 1, std::nan(""), 2, 4, 10, 20;
    const auto ex = io::extract_events(y, 0.5);
    CHECK(ex.missing_cells == 1);
    CHECK(ex.events.size() == 1);
    CHECK(ex.events[0].mean == 15.0);
    y(0, 0) = std::nan("");
    CHECK_THROWS_AS(io::extract_events(y, 0.5), ValidationError);
  }
  SUBCASE("a 10% signal series extracts about 15% of days at the 85% level") {
    std::mt19937_64 gen(7);
    std::normal_distribution<double> nd;
    Matrix y(2000, 10);
    for (Eigen::Index t = 0; t < y.rows(); ++t) {
      const double signal = t % 10 == 0 ? 5.0 : 0.0;
      for (Eigen::Index j = 0; j < y.cols(); ++j) y(t, j) = std::abs(signal + nd(gen));
    }
    const auto ex = io::extract_events(y, 0.85);
    CHECK(static_cast<double>(ex.events.size()) / 2000.0 == doctest::Approx(0.15).epsilon(0.01));
  }
  CHECK_THROWS_AS(io::extract_events(Matrix::Ones(3, 1), 1.0), ValidationError);
}
