#include <cmath>
#include <limits>

#include "cpf/csv.hpp"
#include "cpf/dataset.hpp"
#include "cpf/errors.hpp"
#include "cpf/synth.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cpf;

TEST_CASE("load_csv reads a small file") {
  testing::TempDir dir;
  testing::write_file(dir / "a.csv", "x0,x1,d,y\n1.5,2,0,3.25\n-1,0.5,1,4\n0,0,1,-2e-3\n");
  const Dataset ds = load_csv(dir / "a.csv");
  CHECK(ds.num_rows() == 3);
  CHECK(ds.num_features() == 2);
  CHECK(ds.covariate(0, 0) == 1.5);
  CHECK(ds.covariate(1, 1) == 0.5);
  CHECK_FALSE(ds.treated(0));
  CHECK(ds.treated(2));
  CHECK(ds.outcome(2) == -2e-3);
}

TEST_CASE("covariate order follows the header, roles are by name") {
  testing::TempDir dir;
  testing::write_file(dir / "a.csv", "outcome,b,treat,a\r\n1,10,1,20\r\n2,11,0,21\r\n");
  CsvSchema schema;
  schema.outcome = "outcome";
  schema.treatment = "treat";
  const Dataset ds = load_csv(dir / "a.csv", schema);
  REQUIRE(ds.num_features() == 2);
  CHECK(ds.covariate(0, 0) == 10);
  CHECK(ds.covariate(0, 1) == 20);
  CHECK(ds.outcome(1) == 2);
}

TEST_CASE("missing column is a schema error naming the column") {
  testing::TempDir dir;
  testing::write_file(dir / "a.csv", "x0,d,outcome\n1,0,1\n");
  try {
    load_csv(dir / "a.csv");
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.column() == "y");
  }
}

TEST_CASE("treatment outside {0,1} is a parse error citing the row") {
  testing::TempDir dir;
  testing::write_file(dir / "a.csv",
                      "x0,d,y\n0,0,1\n0,1,1\n0,0,1\n0,1,1\n0,2,1\n0,0,1\n");
  try {
    load_csv(dir / "a.csv");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.row() == 5);
  }
}

TEST_CASE("NaN and non-numeric cells are parse errors") {
  testing::TempDir dir;
  testing::write_file(dir / "nan.csv", "x0,d,y\n0,0,1\n0,1,nan\n");
  CHECK_THROWS_AS(load_csv(dir / "nan.csv"), ParseError);
  testing::write_file(dir / "txt.csv", "x0,d,y\nabc,0,1\n");
  CHECK_THROWS_AS(load_csv(dir / "txt.csv"), ParseError);
  testing::write_file(dir / "empty.csv", "x0,d,y\n,0,1\n");
  CHECK_THROWS_AS(load_csv(dir / "empty.csv"), ParseError);
  testing::write_file(dir / "frac.csv", "x0,d,y\n0,0.5,1\n");
  CHECK_THROWS_AS(load_csv(dir / "frac.csv"), ParseError);
}

TEST_CASE("ragged rows are rejected") {
  CHECK_THROWS_AS(CsvTable::parse("x0,d,y\n1,0\n"), ParseError);
}

TEST_CASE("validate reports one failure kind per invariant") {
  auto kind_of = [](const Dataset& ds) {
    try {
      validate(ds);
    } catch (const ValidationError& e) {
      return e.kind();
    }
    FAIL("expected ValidationError");
    return ValidationFailure::kEmpty;
  };

  CHECK_NOTHROW(validate(Dataset({1, 2, 3}, 1, {0, 1, 0}, {1, 2, 3})));
  CHECK(kind_of(Dataset({}, 1, {}, {})) == ValidationFailure::kEmpty);
  CHECK(kind_of(Dataset({}, 0, {0}, {1})) == ValidationFailure::kNoCovariates);

  std::vector<double> x10(10, 0.0);
  std::vector<std::uint8_t> d10(10, 0);
  CHECK(kind_of(Dataset(x10, 1, d10, std::vector<double>(9, 0.0))) ==
        ValidationFailure::kLengthMismatch);
  CHECK(kind_of(Dataset({1, 2}, 1, {0, 3}, {1, 2})) == ValidationFailure::kBadTreatment);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(kind_of(Dataset({1, inf}, 1, {0, 1}, {1, 2})) == ValidationFailure::kNonFinite);
  CHECK(kind_of(Dataset({1, 2}, 1, {0, 1}, {1, std::nan("")})) == ValidationFailure::kNonFinite);
}

TEST_CASE("a single-arm dataset passes structural validation") {
  CHECK_NOTHROW(validate(Dataset({1, 2, 3}, 1, {1, 1, 1}, {0, 0, 0})));
}

TEST_CASE("IndexSet rejects duplicates and out-of-range indices") {
  CHECK_NOTHROW(IndexSet({3, 0, 2}, 4));
  CHECK_THROWS_AS(IndexSet({1, 1}, 4), InputError);
  CHECK_THROWS_AS(IndexSet({4}, 4), InputError);
  CHECK(IndexSet::all(5).size() == 5);
}

TEST_CASE("write then load is the identity on values") {
  // Synthetic values are arbitrary doubles, so this exercises the shortest
  // round-trip formatting on non-decimal inputs.
  const auto sd = synth::generate({.n = 300, .p = 4, .seed = 99});
  testing::TempDir dir;
  write_dataset_csv(dir / "rt.csv", sd.base);
  const Dataset back = load_csv(dir / "rt.csv");
  CHECK(back.covariates() == sd.base.covariates());
  CHECK(back.treatments() == sd.base.treatments());
  CHECK(back.outcomes() == sd.base.outcomes());

  write_dataset_csv(dir / "rt2.csv", back);
  CHECK(testing::read_file(dir / "rt.csv") == testing::read_file(dir / "rt2.csv"));
}

TEST_CASE("format_double is shortest round-trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-2.5) == "-2.5");
  CHECK(format_double(3.0) == "3");
  const double third = 1.0 / 3.0;
  CHECK(std::stod(format_double(third)) == third);
}
