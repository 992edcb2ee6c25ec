#include <doctest.h>

#include "bimatch/model_io.hpp"
#include "bimatch/synthetic.hpp"
#include "support.hpp"

using namespace bimatch;
using test_support::TempDir;

TEST_CASE("model save and load round-trip bit-exactly") {
  TempDir dir;
  SavedModel m;
  m.params.omega = random_orthogonal(17, 4);
  m.params.mu = random_unit_columns(17, 1, 5).col(0) * 0.123456789;
  m.normalization = NormalizationScheme::unit_center_unit;
  m.vocab_size = 5000;
  save_model(dir.path() / "m.json", m);
  const auto back = load_model(dir.path() / "m.json");
  CHECK(back.params.omega == m.params.omega);
  CHECK(back.params.mu == m.params.mu);
  CHECK(back.normalization == m.normalization);
  CHECK(back.vocab_size == m.vocab_size);

  m.vocab_size.reset();
  save_model(dir.path() / "m2.json", m);
  CHECK_FALSE(load_model(dir.path() / "m2.json").vocab_size);
}

TEST_CASE("model load rejects malformed and non-orthogonal files") {
  TempDir dir;
  CHECK_THROWS_AS(load_model(dir.path() / "missing.json"), Error);
  CHECK_THROWS_AS(load_model(dir.write("garbage.json", "{not json")), ParseError);
  CHECK_THROWS_AS(load_model(dir.write("other.json", R"({"format":"x","version":1})")), Error);
  CHECK_THROWS_AS(
      load_model(dir.write("v2.json", R"({"format":"bimatch-model","version":2,"dim":1,"normalization":"unit",
      "omega":[1],"mu":[0]})")),
      Error);
  CHECK_THROWS_AS(
      load_model(dir.write("size.json", R"({"format":"bimatch-model","version":1,"dim":2,"normalization":"unit",
      "omega":[1,0,0],"mu":[0,0]})")),
      Error);
  CHECK_THROWS_AS(
      load_model(dir.write("skew.json", R"({"format":"bimatch-model","version":1,"dim":2,"normalization":"unit",
      "omega":[1,0.1,0,1],"mu":[0,0]})")),
      Error);
  CHECK_THROWS_AS(
      load_model(dir.write("norm.json", R"({"format":"bimatch-model","version":1,"dim":1,"normalization":"l1",
      "omega":[1],"mu":[0]})")),
      Error);
  CHECK_NOTHROW(load_model(dir.write("ok.json", R"({"format":"bimatch-model","version":1,"dim":2,
      "normalization":"none","omega":[0,-1,1,0],"mu":[0.5,0.5]})")));
}
