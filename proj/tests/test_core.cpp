#include <atomic>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "sbrsf/config.hpp"
#include "sbrsf/csv.hpp"
#include "sbrsf/parallel.hpp"
#include "sbrsf/random.hpp"
#include "sbrsf/step_function.hpp"
#include "test_helpers.hpp"

using namespace sbrsf;

TEST_CASE("rng streams are deterministic and distinct") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  bool any_diff = false;
  Rng a2(42);
  for (int i = 0; i < 100; ++i) any_diff |= (a2.next_u64() != c.next_u64());
  CHECK(any_diff);
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(7, 5) == derive_seed(7, 5));
}

TEST_CASE("uniform draws stay in range") {
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const std::size_t k = rng.uniform_index(7);
    CHECK(k < 7);
  }
}

TEST_CASE("discrete sampler follows its weights") {
  const std::vector<double> w = {0.1, 0.2, 0.3, 0.4};
  DiscreteSampler sampler(w);
  Rng rng(123);
  std::vector<int> counts(4, 0);
  const int draws = 40000;
  for (int i = 0; i < draws; ++i) ++counts[sampler.sample(rng)];
  for (int k = 0; k < 4; ++k)
    CHECK(std::fabs(counts[k] / double(draws) - w[k]) < 0.01);
  CHECK_THROWS(DiscreteSampler(std::vector<double>{}));
  CHECK_THROWS(DiscreteSampler(std::vector<double>{0.0, 0.0}));
  CHECK_THROWS(DiscreteSampler(std::vector<double>{-1.0, 2.0}));
}

TEST_CASE("parallel_for matches serial for any worker count") {
  const std::size_t n = 257;
  std::vector<double> serial(n), threaded(n);
  parallel_for(n, 1, [&](std::size_t i) { serial[i] = std::sqrt(double(i)); });
  for (unsigned workers : {2u, 5u, 16u}) {
    parallel_for(n, workers, [&](std::size_t i) { threaded[i] = std::sqrt(double(i)); });
    CHECK(serial == threaded);
  }
}

TEST_CASE("parallel_for propagates exceptions") {
  CHECK_THROWS_AS(parallel_for(10, 4,
                               [](std::size_t i) {
                                 if (i == 3) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}

TEST_CASE("double formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678901234567, -0.0, 2.5}) {
    CHECK(parse_double(format_double(v), "t") == v);
  }
}

TEST_CASE("csv reader validates shape") {
  testutil::TempDir dir("csv");
  testutil::spit(dir.file("ok.csv"), "a,b\n1,2\n3,4\n");
  const CsvTable t = read_csv(dir.file("ok.csv"));
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  CHECK(t.rows.size() == 2);
  CHECK(t.column("b") == 1);
  CHECK_THROWS(t.column("c"));

  testutil::spit(dir.file("ragged.csv"), "a,b\n1\n");
  CHECK_THROWS(read_csv(dir.file("ragged.csv")));
  CHECK_THROWS(read_csv(dir.file("missing.csv")));
}

TEST_CASE("kv config parses, defaults and serializes") {
  const KvConfig kv = KvConfig::parse_string("a.x = 1\n# comment\nb.y = hello world \n");
  CHECK(kv.get_int("a.x") == 1);
  CHECK(kv.get("b.y") == "hello world");
  CHECK(kv.get_or("missing", "d") == "d");
  CHECK(kv.get_double_or("missing", 2.5) == 2.5);
  CHECK_THROWS(kv.get("missing"));
  CHECK_THROWS(KvConfig::parse_string("no equals sign"));

  const KvConfig again = KvConfig::parse_string(kv.serialize());
  CHECK(again.get("a.x") == "1");
  CHECK(again.get("b.y") == "hello world");
}

TEST_CASE("step function evaluates right-continuously") {
  StepFunction f;
  f.baseline = 1.0;
  f.times = {1.0, 3.0};
  f.values = {0.5, 0.25};
  CHECK(f(0.0) == 1.0);
  CHECK(f(0.999) == 1.0);
  CHECK(f(1.0) == 0.5);     // right-continuous at the jump
  CHECK(f(2.0) == 0.5);
  CHECK(f(3.0) == 0.25);
  CHECK(f(100.0) == 0.25);  // constant beyond the last jump

  CHECK(f.left_limit(1.0) == 1.0);
  CHECK(f.left_limit(1.5) == 0.5);
  CHECK(f.left_limit(3.0) == 0.5);
  CHECK(f.left_limit(4.0) == 0.25);

  StepFunction bad;
  bad.times = {2.0, 2.0};
  bad.values = {1.0, 1.0};
  CHECK_THROWS(bad.check());
}

TEST_CASE("step function serializes to two-column csv") {
  StepFunction f;
  f.baseline = 1.0;
  f.times = {0.5, 1.0 / 3.0 + 1.0};
  f.values = {0.75, 0.25};
  testutil::TempDir dir("stepcsv");
  f.write_csv(dir.file("f.csv"));
  const CsvTable t = read_csv(dir.file("f.csv"));
  CHECK(t.header == std::vector<std::string>{"time", "value"});
  REQUIRE(t.rows.size() == 2);
  CHECK(parse_double(t.rows[1][0], "t") == f.times[1]);  // 17-digit round trip
  CHECK(parse_double(t.rows[1][1], "v") == f.values[1]);
}
